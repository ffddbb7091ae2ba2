// Copyright 2026 The joinsize Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Repeated-trial experiments against a known exact size, with CDF and
//! summary outputs.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{estimate_median, theoretical_epsilon, ConfigError, EstimateKind, EstimatorConfig};
use crate::relation::{group_and_prune, Relation};
use crate::sampling::{draw_sample, estimate_from_samples, selector_for, SamplingError};
use crate::scalar::{from_u64, Real};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("the exact size must be positive to form ratios")]
    ZeroExact,
    #[error("at least one trial is required")]
    NoTrials,
}

/// Parameters of an experiment. `estimator.seed` is the base seed; trial `i`
/// runs with seed `base + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSetup<R> {
    pub instance: String,
    pub trials: usize,
    pub estimator: EstimatorConfig<R>,
    /// Sample both relations with this probability before estimating.
    pub sample_probability: Option<R>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult<R> {
    pub trial: usize,
    pub seed: u64,
    pub estimate: R,
    /// `estimate / exact`.
    pub ratio: R,
    pub kind: EstimateKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport<R> {
    pub instance: String,
    pub k: usize,
    pub runs: usize,
    pub exact: u64,
    /// `sqrt(9 / k)`.
    pub theoretical_epsilon: R,
    /// `|ratio - 1|` at the 2/3 quantile.
    pub observed_epsilon: R,
    pub sample_probability: Option<R>,
    /// In trial order.
    pub trials: Vec<TrialResult<R>>,
}

/// The deviation `|r - 1|` that at least two thirds of `ratios` stay within.
pub fn quantile_epsilon<R: Real>(ratios: &[R]) -> R {
    if ratios.is_empty() {
        return R::nan();
    }
    let mut dev: Vec<R> = ratios.iter().map(|&r| (r - R::one()).abs()).collect();
    dev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let idx = (2 * dev.len()).div_ceil(3) - 1;
    dev[idx]
}

/// Runs `setup.trials` independent estimates of `|left ⋈ right|` projected
/// onto the outer attributes and compares each one with `exact`.
pub fn run_experiment<R: Real>(
    left: &Relation,
    right: &Relation,
    exact: u64,
    setup: &ExperimentSetup<R>,
) -> Result<ExperimentReport<R>, ExperimentError> {
    if exact == 0 {
        return Err(ExperimentError::ZeroExact);
    }
    if setup.trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    setup.estimator.validate()?;
    let base = setup.estimator.seed;
    let grouped = group_and_prune(left, right);
    let k = setup.estimator.resolve_k(grouped.n())?;
    let exact_r = from_u64::<R>(exact);

    let trials: Vec<TrialResult<R>> = (0..setup.trials)
        .into_par_iter()
        .map(|i| {
            let seed = base.wrapping_add(i as u64);
            let cfg = setup.estimator.seed(seed);
            let (estimate, kind) = match setup.sample_probability {
                None => {
                    let e = estimate_median(&grouped, &cfg)?;
                    (e.value, e.kind)
                }
                Some(p) => {
                    let s1 = draw_sample(left, p, selector_for(seed, left.side()))?;
                    let s2 = draw_sample(right, p, selector_for(seed, right.side()))?;
                    let e = estimate_from_samples(&s1, &s2, &cfg)?;
                    (e.value, e.inner.kind)
                }
            };
            Ok(TrialResult {
                trial: i,
                seed,
                estimate,
                ratio: estimate / exact_r,
                kind,
            })
        })
        .collect::<Result<_, ExperimentError>>()?;

    let ratios: Vec<R> = trials.iter().map(|t| t.ratio).collect();
    Ok(ExperimentReport {
        instance: setup.instance.clone(),
        k,
        runs: setup.estimator.runs,
        exact,
        theoretical_epsilon: theoretical_epsilon::<R>(k),
        observed_epsilon: quantile_epsilon(&ratios),
        sample_probability: setup.sample_probability,
        trials,
    })
}

pub const CDF_HEADER: &str = "ratio,cumulative_probability";
pub const SUMMARY_HEADER: &str = "instance,k,runs,trials,exact,theoretical_epsilon,observed_epsilon";

impl<R: Real> ExperimentReport<R> {
    /// `(ratio, i / N)` with ratios ascending; the last probability is 1.
    pub fn cdf(&self) -> Vec<(R, R)> {
        let mut ratios: Vec<R> = self.trials.iter().map(|t| t.ratio).collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let n = from_u64::<R>(ratios.len() as u64);
        ratios
            .into_iter()
            .enumerate()
            .map(|(i, r)| (r, from_u64::<R>(i as u64 + 1) / n))
            .collect()
    }

    pub fn write_cdf<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CDF_HEADER}")?;
        for (r, p) in self.cdf() {
            writeln!(out, "{r:?},{p:?}")?;
        }
        out.flush()
    }

    /// Header plus one row.
    pub fn write_summary<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{SUMMARY_HEADER}")?;
        writeln!(out, "{}", self.summary_row())?;
        out.flush()
    }

    pub fn summary_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:?},{:?}",
            csv_field(&self.instance),
            self.k,
            self.runs,
            self.trials.len(),
            self.exact,
            self.theoretical_epsilon,
            self.observed_epsilon
        )
    }

    /// Fixed-width table for terminals.
    pub fn render_table(&self) -> String {
        let mut s = format!(
            "{:<16} {:>6} {:>5} {:>7} {:>12} {:>8} {:>8}\n",
            "instance", "k", "runs", "trials", "exact", "eps", "observed"
        );
        s.push_str(&format!(
            "{:<16} {:>6} {:>5} {:>7} {:>12} {:>8.3} {:>8.3}\n",
            self.instance,
            self.k,
            self.runs,
            self.trials.len(),
            self.exact,
            self.theoretical_epsilon,
            self.observed_epsilon
        ));
        s
    }

    /// Writes `<instance>_cdf.csv` and `<instance>_summary.csv` into `dir`.
    pub fn write_files(&self, dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let cdf = dir.join(format!("{}_cdf.csv", self.instance));
        let summary = dir.join(format!("{}_summary.csv", self.instance));
        self.write_cdf(BufWriter::new(File::create(&cdf)?))?;
        self.write_summary(BufWriter::new(File::create(&summary)?))?;
        Ok((cdf, summary))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::ThresholdMode;
    use crate::relation::Side;

    fn instance() -> (Relation, Relation, u64) {
        // 40 x 40 complete bipartite through one join value
        let l = Relation::new(Side::Left, (0..40).map(|a| (a, 0)));
        let r = Relation::new(Side::Right, (0..40).map(|c| (0, c)));
        (l, r, 1600)
    }

    fn setup(trials: usize) -> ExperimentSetup<f64> {
        ExperimentSetup {
            instance: "block".into(),
            trials,
            estimator: EstimatorConfig::with_k(64).threshold_mode(ThresholdMode::StartAtOne).seed(10),
            sample_probability: None,
        }
    }

    #[test]
    fn quantile_index() {
        assert_eq!(quantile_epsilon(&[1.5f64]), 0.5);
        // deviations 0, .1, .2 -> index ceil(2) - 1 = 1
        assert!((quantile_epsilon(&[1.0f64, 0.9, 1.2]) - 0.1).abs() < 1e-12);
        let r: Vec<f64> = (0..60).map(|i| 1.0 + i as f64 / 100.0).collect();
        assert!((quantile_epsilon(&r) - 0.39).abs() < 1e-12);
        assert!(quantile_epsilon::<f64>(&[]).is_nan());
    }

    #[test]
    fn single_trial_cdf() {
        let (l, r, z) = instance();
        let rep = run_experiment(&l, &r, z, &setup(1)).unwrap();
        let mut buf = Vec::new();
        rep.write_cdf(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CDF_HEADER);
        assert!(lines[1].ends_with(",1.0"));
    }

    #[test]
    fn trials_are_reproducible_and_ordered() {
        let (l, r, z) = instance();
        let a = run_experiment(&l, &r, z, &setup(12)).unwrap();
        let b = run_experiment(&l, &r, z, &setup(12)).unwrap();
        assert_eq!(a, b);
        for (i, t) in a.trials.iter().enumerate() {
            assert_eq!(t.trial, i);
            assert_eq!(t.seed, 10 + i as u64);
            assert_eq!(t.ratio, t.estimate / 1600.0);
        }
        // a single trial re-run with its own seed reproduces the entry
        let mut one = setup(1);
        one.estimator = one.estimator.seed(15);
        let solo = run_experiment(&l, &r, z, &one).unwrap();
        assert_eq!(solo.trials[0].estimate, a.trials[5].estimate);
    }

    #[test]
    fn cdf_is_sorted_and_ends_at_one() {
        let (l, r, z) = instance();
        let rep = run_experiment(&l, &r, z, &setup(25)).unwrap();
        let cdf = rep.cdf();
        assert!(cdf.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        assert_eq!(cdf.last().unwrap().1, 1.0);
        assert_eq!(rep.theoretical_epsilon, 0.375);
    }

    #[test]
    fn summary_and_table() {
        let (l, r, z) = instance();
        let rep = run_experiment(&l, &r, z, &setup(3)).unwrap();
        let mut buf = Vec::new();
        rep.write_summary(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SUMMARY_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&row[..5], &["block", "64", "1", "3", "1600"]);
        assert_eq!(row[5], "0.375");
        assert!(rep.render_table().contains("0.375"));
        assert_eq!(csv_field("a,b"), "\"a,b\"");
    }

    #[test]
    fn sampled_trials() {
        let (l, r, z) = instance();
        let mut s = setup(8);
        s.sample_probability = Some(1.0);
        let rep = run_experiment(&l, &r, z, &s).unwrap();
        // k = 64 < 1600 so each run is a point estimate of the full block
        assert!(rep.trials.iter().all(|t| t.kind == EstimateKind::Point));
        assert_eq!(rep.sample_probability, Some(1.0));
    }

    #[test]
    fn rejects_degenerate_setups() {
        let (l, r, _) = instance();
        assert!(matches!(run_experiment(&l, &r, 0, &setup(3)), Err(ExperimentError::ZeroExact)));
        assert!(matches!(run_experiment(&l, &r, 5, &setup(0)), Err(ExperimentError::NoTrials)));
    }
}
