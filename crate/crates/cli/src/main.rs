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

//! `joinsize` command-line tool.

use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use joinsize::oracle::{exact_size, OracleError, DEFAULT_CAP};
use joinsize::sampling::{beta_for_samples, selector_for, SampleFileError};
use joinsize::{
    draw_sample, estimate_from_samples, estimate_median, group_and_prune, parse_relation, run_experiment,
    self_join, DistinctSample, EstimatorConfig, ExperimentSetup, InputFormat, Relation, SampleEstimate, Side,
    SketchSize, ThresholdMode,
};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "joinsize", version, about = "Estimate the size of a join-project without computing it")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate |π_{a,c}(R1 ⋈ R2)|.
    Estimate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        estimator: EstimatorArgs,
        #[arg(long)]
        json: bool,
    },
    /// Compute the exact result size by materialising the distinct pairs.
    Exact {
        #[command(flatten)]
        input: InputArgs,
        /// Give up beyond this many distinct pairs.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Repeat the estimate with consecutive seeds and write CDF and summary CSVs.
    Experiment {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        estimator: EstimatorArgs,
        #[arg(long, default_value_t = 60)]
        trials: usize,
        /// Known exact size; computed with the oracle when absent.
        #[arg(long)]
        exact_value: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Output file prefix; defaults to the input file stem.
        #[arg(long)]
        name: Option<String>,
        /// Sample both relations with this probability in every trial.
        #[arg(long)]
        sample_prob: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Draw a distinct sample of one relation and write it to a file.
    Sample {
        /// Relation to sample.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "edges")]
        format: InputFormat,
        /// Probability that an outer-attribute value is kept.
        #[arg(long)]
        prob: f64,
        /// Which side of the join the relation plays.
        #[arg(long)]
        side: Side,
        /// Treat the input as both sides of a self-join; the left side is
        /// the mirrored relation.
        #[arg(long = "self")]
        self_join: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Estimate the result size from two sample files.
    SampleEstimate {
        #[arg(long)]
        left_sample: PathBuf,
        #[arg(long)]
        right_sample: PathBuf,
        #[command(flatten)]
        estimator: EstimatorArgs,
        /// Accuracy target used to report the result-size threshold above
        /// which the estimate is reliable.
        #[arg(long, default_value_t = 0.1)]
        beta_epsilon: f64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long, requires = "right", conflicts_with = "self_join")]
    left: Option<PathBuf>,
    #[arg(long, requires = "left", conflicts_with = "self_join")]
    right: Option<PathBuf>,
    /// Join a relation with itself on its second column.
    #[arg(long = "self", required_unless_present = "left")]
    self_join: Option<PathBuf>,
    #[arg(long, default_value = "edges")]
    format: InputFormat,
}

#[derive(Args)]
struct EstimatorArgs {
    /// Target relative error in (0, 1/4); k = ceil(9 / epsilon^2).
    #[arg(long, conflicts_with = "k")]
    epsilon: Option<f64>,
    /// Sketch size [default: 1024].
    #[arg(short)]
    k: Option<usize>,
    #[arg(long, default_value = "start-at-one")]
    threshold_mode: ThresholdMode,
    /// Independent runs; the median is reported. Must be odd.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl EstimatorArgs {
    fn config(&self) -> Result<EstimatorConfig, Failure> {
        let size = match (self.epsilon, self.k) {
            (Some(e), _) => SketchSize::Epsilon(e),
            (None, Some(k)) => SketchSize::K(k),
            (None, None) => SketchSize::K(1024),
        };
        let cfg = EstimatorConfig::new(size)
            .threshold_mode(self.threshold_mode)
            .runs(self.runs)
            .seed(self.seed);
        cfg.validate().map_err(Failure::usage)?;
        Ok(cfg)
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl fmt::Display) -> Self {
        Failure { code: 1, message: e.to_string() }
    }

    fn data(e: impl fmt::Display) -> Self {
        Failure { code: 2, message: e.to_string() }
    }

    fn oracle(e: OracleError) -> Self {
        Failure { code: 3, message: e.to_string() }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn load(path: &Path, format: InputFormat) -> Result<Relation, Failure> {
    parse_relation(open(path)?, format).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

impl InputArgs {
    fn relations(&self) -> Result<(Relation, Relation), Failure> {
        match (&self.self_join, &self.left, &self.right) {
            (Some(path), _, _) => Ok(self_join(&load(path, self.format)?)),
            (None, Some(l), Some(r)) => Ok((
                load(l, self.format)?,
                load(r, self.format)?.with_side(Side::Right),
            )),
            _ => Err(Failure::usage("give --left and --right, or --self")),
        }
    }

    fn stem(&self) -> String {
        self.self_join
            .as_ref()
            .or(self.left.as_ref())
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "instance".into())
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Failure::data)?;
    text.push('\n');
    Ok(text)
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        let _ = writeln!($out, $($arg)*);
    };
}

/// `sample-estimate` output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub estimate: SampleEstimate,
    pub beta_epsilon: f64,
    /// Result size above which a `1 +- beta_epsilon` estimate holds with
    /// probability 5/6.
    pub beta: f64,
    pub above_beta: bool,
}

/// `exact` output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactReport {
    pub z: u64,
    pub n: usize,
    pub groups: usize,
}

fn run(cli: Cli) -> Result<String, Failure> {
    let mut out = String::new();
    match cli.command {
        Command::Estimate { input, estimator, json } => {
            let cfg = estimator.config()?;
            let (l, r) = input.relations()?;
            let grouped = group_and_prune(&l, &r);
            let est = estimate_median(&grouped, &cfg).map_err(Failure::usage)?;
            if json {
                return to_json(&est);
            }
            say!(out, "kind            {:?}", est.kind);
            say!(out, "estimate        {}", est.value);
            say!(out, "k               {}", est.k);
            say!(out, "runs            {}", est.runs);
            say!(out, "initial p       {}", est.p0.to_fraction::<f64>());
            if let Some(v) = est.kth_hash {
                say!(out, "k-th hash       {}", v.to_fraction::<f64>());
            }
            say!(out, "tuples          {}", grouped.n());
            let w = est.work;
            say!(out, "work            {} (sort {}, min search {}, walk {})", w.total(), w.sorted_elements, w.sbar_increments, w.inner_iterations);
            say!(out, "pairs emitted   {} ({} accepted, {} combines)", w.emitted, w.accepted, w.combines);
            Ok(out)
        }
        Command::Exact { input, cap, json } => {
            let (l, r) = input.relations()?;
            let grouped = group_and_prune(&l, &r);
            let exact = exact_size(&grouped, cap).map_err(Failure::oracle)?;
            let report = ExactReport {
                z: exact.z,
                n: grouped.n(),
                groups: grouped.groups().len(),
            };
            if json {
                return to_json(&report);
            }
            say!(out, "{}", report.z);
            Ok(out)
        }
        Command::Experiment {
            input,
            estimator,
            trials,
            exact_value,
            out_dir,
            name,
            sample_prob,
            cap,
            json,
        } => {
            let cfg = estimator.config()?;
            let (l, r) = input.relations()?;
            let exact = match exact_value {
                Some(z) => z,
                None => {
                    exact_size(&group_and_prune(&l, &r), cap)
                        .map_err(|e| Failure {
                            code: 3,
                            message: format!("{e}; pass --exact-value"),
                        })?
                        .z
                }
            };
            let setup = ExperimentSetup {
                instance: name.unwrap_or_else(|| input.stem()),
                trials,
                estimator: cfg,
                sample_probability: sample_prob,
            };
            let report = run_experiment(&l, &r, exact, &setup).map_err(Failure::usage)?;
            let (cdf, summary) = report.write_files(&out_dir).map_err(Failure::data)?;
            if json {
                return to_json(&report);
            }
            out.push_str(&report.render_table());
            say!(out, "wrote {} and {}", cdf.display(), summary.display());
            Ok(out)
        }
        Command::Sample {
            input,
            format,
            prob,
            side,
            self_join: is_self,
            seed,
            output,
        } => {
            let relation = load(&input, format)?;
            let relation = match (is_self, side) {
                (true, Side::Left) => self_join(&relation).0,
                (true, Side::Right) => self_join(&relation).1,
                (false, _) => relation.with_side(side),
            };
            let sample = draw_sample(&relation, prob, selector_for(seed, side)).map_err(Failure::usage)?;
            let file = File::create(&output).map_err(|e| Failure::data(format!("{}: {e}", output.display())))?;
            let mut writer = BufWriter::new(file);
            sample.write_to(&mut writer).map_err(Failure::data)?;
            writer.flush().map_err(Failure::data)?;
            say!(out, 
                "kept {} of {} tuples ({} side, p = {})",
                sample.tuples().len(),
                sample.source_tuples(),
                side,
                sample.probability::<f64>()
            );
            Ok(out)
        }
        Command::SampleEstimate {
            left_sample,
            right_sample,
            estimator,
            beta_epsilon,
            json,
        } => {
            let cfg = estimator.config()?;
            let read = |p: &Path| -> Result<DistinctSample, Failure> {
                DistinctSample::read_from(open(p)?).map_err(|e: SampleFileError| Failure::data(format!("{}: {e}", p.display())))
            };
            let (s1, s2) = (read(&left_sample)?, read(&right_sample)?);
            let estimate = estimate_from_samples(&s1, &s2, &cfg).map_err(Failure::data)?;
            let beta = beta_for_samples(&s1, &s2, beta_epsilon);
            let report = SampleReport {
                estimate,
                beta_epsilon,
                beta,
                above_beta: estimate.value > beta,
            };
            if json {
                return to_json(&report);
            }
            say!(out, "estimate        {}", estimate.value);
            say!(out, "sampled size    {}", estimate.sampled_size);
            say!(out, "fallback        {}", estimate.fallback);
            say!(out, "p1, p2          {}, {}", estimate.p1, estimate.p2);
            say!(out, 
                "beta            {beta:.0} at epsilon {beta_epsilon} ({})",
                if report.above_beta { "estimate above beta" } else { "estimate below beta, accuracy not guaranteed" }
            );
            Ok(out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(text) => {
            // a closed pipe (e.g. `| head`) is not an error
            let _ = io::stdout().lock().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(f) => {
            let _ = writeln!(io::stderr(), "error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
