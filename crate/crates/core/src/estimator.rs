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

//! Full estimator runs and median amplification.

use std::ops::AddAssign;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enumerator::{scan_group, sort_group};
use crate::hashing::{HashValue, PairHash, Threshold};
use crate::kmin::{KMinState, SketchOutcome};
use crate::relation::GroupedInput;
use crate::rng::{derive_rng, Purpose};
use crate::scalar::{from_u128, from_u64, lit, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("epsilon must lie in (0, 1/4), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("k must be positive")]
    ZeroK,
    #[error("the number of runs must be odd and positive, got {0}")]
    BadRuns(usize),
    #[error("{0}")]
    Invalid(String),
}

/// How the sketch size k is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchSize<R> {
    /// `k = ceil(9 / epsilon^2)`, `0 < epsilon < 1/4`.
    Epsilon(R),
    K(usize),
    /// `k = ceil(sqrt(n))` for constant-error, vanishing-failure runs.
    SqrtN,
}

/// Initial threshold policy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `p = min(1/k, k / max_b |A_b||C_b|)`: expected linear work, may leave
    /// the sketch unfilled when the result is small.
    #[default]
    LinearWork,
    /// `p = 1`: always produces an estimate (or the exact count).
    StartAtOne,
}

impl FromStr for ThresholdMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear-work" => Ok(ThresholdMode::LinearWork),
            "start-at-one" => Ok(ThresholdMode::StartAtOne),
            other => Err(format!("unknown threshold mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig<R> {
    pub size: SketchSize<R>,
    pub threshold_mode: ThresholdMode,
    pub runs: usize,
    pub seed: u64,
}

impl<R: Real> EstimatorConfig<R> {
    pub fn new(size: SketchSize<R>) -> Self {
        EstimatorConfig {
            size,
            threshold_mode: ThresholdMode::default(),
            runs: 1,
            seed: 0,
        }
    }

    pub fn with_k(k: usize) -> Self {
        Self::new(SketchSize::K(k))
    }

    pub fn with_epsilon(epsilon: R) -> Self {
        Self::new(SketchSize::Epsilon(epsilon))
    }

    pub fn threshold_mode(mut self, mode: ThresholdMode) -> Self {
        self.threshold_mode = mode;
        self
    }

    pub fn runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.runs == 0 || self.runs.is_multiple_of(2) {
            return Err(ConfigError::BadRuns(self.runs));
        }
        match self.size {
            SketchSize::Epsilon(eps) => k_for_epsilon(eps).map(|_| ()),
            SketchSize::K(0) => Err(ConfigError::ZeroK),
            _ => Ok(()),
        }
    }

    /// The sketch size for an input with `n` surviving tuples.
    pub fn resolve_k(&self, n: usize) -> Result<usize, ConfigError> {
        match self.size {
            SketchSize::Epsilon(eps) => k_for_epsilon(eps),
            SketchSize::K(0) => Err(ConfigError::ZeroK),
            SketchSize::K(k) => Ok(k),
            SketchSize::SqrtN => Ok(((n as f64).sqrt().ceil() as usize).max(1)),
        }
    }
}

/// `k = ceil(9 / epsilon^2)` for `0 < epsilon < 1/4`.
///
/// Values within relative `1e-9` of an integer are snapped to it so that
/// e.g. `epsilon = 0.1` gives 900 rather than 901.
pub fn k_for_epsilon<R: Real>(epsilon: R) -> Result<usize, ConfigError> {
    let eps = epsilon.to_f64().unwrap_or(f64::NAN);
    if !(eps > 0.0 && eps < 0.25) {
        return Err(ConfigError::EpsilonOutOfRange(eps));
    }
    let raw = 9.0 / (eps * eps);
    let nearest = raw.round();
    let k = if (raw - nearest).abs() <= 1e-9 * raw {
        nearest
    } else {
        raw.ceil()
    };
    Ok(k as usize)
}

/// The error bound `sqrt(9 / k)` that a sketch of size k guarantees with
/// probability 2/3.
pub fn theoretical_epsilon<R: Real>(k: usize) -> R {
    (lit::<R>(9.0) / from_u64::<R>(k as u64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    /// `k / v` from a filled sketch.
    Point,
    /// The sketch did not fill below a threshold < 1; the result has at most
    /// about `k^2` pairs and `value = k^2`.
    UpperBound,
    /// Every distinct pair was seen; `value` is the exact count.
    ExactSmall,
}

/// Work counters aggregated over groups (and runs, for medians).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounters {
    pub sorted_elements: u64,
    pub sbar_increments: u64,
    pub inner_iterations: u64,
    pub emitted: u64,
    pub accepted: u64,
    pub combines: u64,
}

impl WorkCounters {
    /// Sorting, minimum search and inner-walk steps.
    pub fn total(&self) -> u64 {
        self.sorted_elements + self.sbar_increments + self.inner_iterations
    }
}

impl AddAssign for WorkCounters {
    fn add_assign(&mut self, o: Self) {
        self.sorted_elements += o.sorted_elements;
        self.sbar_increments += o.sbar_increments;
        self.inner_iterations += o.inner_iterations;
        self.emitted += o.emitted;
        self.accepted += o.accepted;
        self.combines += o.combines;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<R> {
    pub kind: EstimateKind,
    pub value: R,
    pub k: usize,
    /// Initial threshold.
    pub p0: Threshold,
    /// Final k-th smallest hash, for point estimates.
    pub kth_hash: Option<HashValue>,
    pub work: WorkCounters,
    pub runs: usize,
}

/// Initial threshold for a run.
///
/// An empty input gets 0; [`ThresholdMode::StartAtOne`] gets 1.
pub fn choose_threshold(input: &GroupedInput, k: usize, mode: ThresholdMode) -> Threshold {
    if input.is_empty() {
        return Threshold::ZERO;
    }
    match mode {
        ThresholdMode::StartAtOne => Threshold::ONE,
        ThresholdMode::LinearWork => {
            let by_k = Threshold::ratio(1, k as u128);
            let by_product = Threshold::ratio(k as u128, input.max_product());
            by_k.min(by_product)
        }
    }
}

fn run_setup(seed: u64, run_index: u64) -> (PairHash, ChaCha8Rng) {
    let mut rng = derive_rng(seed, Purpose::Estimator, run_index);
    let hash = PairHash::random(&mut rng);
    let select = ChaCha8Rng::seed_from_u64(rng.gen());
    (hash, select)
}

/// The pair hash used by run `run_index` under `seed`.
pub fn run_hash(seed: u64, run_index: u64) -> PairHash {
    run_setup(seed, run_index).0
}

/// `k * 2^64 / v` in 128-bit arithmetic; `v = 0` is treated as one grid step.
fn point_value<R: Real>(k: usize, kth: HashValue) -> R {
    let v = kth.raw().max(1) as u128;
    from_u128::<R>(((k as u128) << 64) / v)
}

/// One estimator pass with hash functions drawn for `run_index`.
pub fn run_once<R: Real>(
    input: &GroupedInput,
    cfg: &EstimatorConfig<R>,
    run_index: u64,
) -> Result<Estimate<R>, ConfigError> {
    cfg.validate()?;
    let k = cfg.resolve_k(input.n())?;
    let p0 = choose_threshold(input, k, cfg.threshold_mode);
    let (hash, select_rng) = run_setup(cfg.seed, run_index);
    let mut state = KMinState::new(k, p0, select_rng);
    let mut work = WorkCounters::default();

    for group in input.groups() {
        let sorted = sort_group(&group.left, &group.right, &hash);
        work.sorted_elements += sorted.len() as u64;
        let scan = scan_group(&sorted, &mut state);
        work.sbar_increments += scan.sbar_increments;
        work.inner_iterations += scan.inner_iterations;
        work.emitted += scan.emitted;
    }
    let outcome = state.finalize();
    let stats = state.stats();
    work.accepted = stats.accepted;
    work.combines = stats.combines;

    let (kind, value, kth_hash) = match outcome {
        SketchOutcome::Filled { kth } => (EstimateKind::Point, point_value::<R>(k, kth), Some(kth)),
        SketchOutcome::Unfilled { count } if p0.is_one() || input.is_empty() => {
            (EstimateKind::ExactSmall, from_u64::<R>(count as u64), None)
        }
        SketchOutcome::Unfilled { .. } => {
            let k = from_u64::<R>(k as u64);
            (EstimateKind::UpperBound, k * k, None)
        }
    };
    Ok(Estimate {
        kind,
        value,
        k,
        p0,
        kth_hash,
        work,
        runs: 1,
    })
}

/// Median of `cfg.runs` independent runs, by value.
///
/// Runs execute on the rayon pool; the result does not depend on completion
/// order. Work counters are summed over all runs.
pub fn estimate_median<R: Real>(
    input: &GroupedInput,
    cfg: &EstimatorConfig<R>,
) -> Result<Estimate<R>, ConfigError> {
    cfg.validate()?;
    let mut all: Vec<Estimate<R>> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|i| run_once(input, cfg, i))
        .collect::<Result<_, _>>()?;
    let mut total = WorkCounters::default();
    for e in &all {
        total += e.work;
    }
    // stable: equal values keep run order
    all.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal));
    let mut median = all[all.len() / 2];
    median.work = total;
    median.runs = cfg.runs;
    Ok(median)
}
