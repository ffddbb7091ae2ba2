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

//! Size estimation for join-projects `π_{a,c}(R1(a,b) ⋈ R2(b,c))`, and
//! equivalently for the number of non-zeros of a sparse boolean matrix
//! product.
//!
//! The estimator hashes every result pair `(x, y)` to `(h1(x) - h2(y)) mod 1`
//! and keeps the `k` smallest hash values seen. Sorting each join group by
//! `h1` and `h2` makes it possible to enumerate only the pairs whose hash
//! falls below a threshold, so the full result is never materialised.
//!
//! ```
//! use joinsize::{group_and_prune, EstimatorConfig, Relation, Side};
//!
//! let left = Relation::new(Side::Left, (0..50).map(|a| (a, a % 5)));
//! let right = Relation::new(Side::Right, (0..50).map(|c| (c % 5, c)));
//! let input = group_and_prune(&left, &right);
//! let est = joinsize::estimate_median(&input, &EstimatorConfig::with_k(64).runs(3)).unwrap();
//! assert!(est.value > 0.0);
//! ```

pub mod enumerator;
pub mod estimator;
pub mod experiment;
pub mod hashing;
pub mod kmin;
pub mod oracle;
pub mod relation;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod select;
pub mod synthetic;

pub use estimator::{
    choose_threshold, estimate_median, k_for_epsilon, run_hash, run_once, ConfigError, EstimateKind,
    SketchSize, ThresholdMode, WorkCounters,
};
pub use experiment::{quantile_epsilon, run_experiment, ExperimentError};
pub use hashing::{HashFamily, HashValue, PairHash, PairwiseHash, Threshold};
pub use oracle::{exact_size, ExactResult, OracleError};
pub use relation::{group_and_prune, parse_relation, self_join, GroupedInput, InputFormat, Relation, Side};
pub use sampling::{draw_sample, estimate_from_samples, DistinctSample, SamplingError};
pub use scalar::Real;

pub type Estimate = estimator::Estimate<f64>;
pub type EstimatorConfig = estimator::EstimatorConfig<f64>;
pub type SampleEstimate = sampling::SampleEstimate<f64>;
pub type SampleSizePlan = sampling::SampleSizePlan<f64>;
pub type ExperimentSetup = experiment::ExperimentSetup<f64>;
pub type ExperimentReport = experiment::ExperimentReport<f64>;
