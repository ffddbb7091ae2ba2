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

//! Distinct samples: per-relation sketches that can be built independently
//! and joined later.
//!
//! A left sample keeps every tuple whose `a` value passes a hash cut, a right
//! sample every tuple whose `c` value does. Joining the two samples and
//! scaling the result size by `1 / (p1 p2)` gives an unbiased estimate of the
//! full result size.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{estimate_median, ConfigError, Estimate, EstimateKind, EstimatorConfig, ThresholdMode};
use crate::hashing::{HashFamily, PairwiseHash};
use crate::relation::{group_and_prune, Pair, Relation, Side};
use crate::rng::{derive_rng, Purpose};
use crate::scalar::{from_u128, from_u64, lit, Real, TWO_POW_64};

/// Magic bytes at the start of a sample file.
pub const SAMPLE_MAGIC: [u8; 8] = *b"JZSAMPLE";
/// Current sample file version.
pub const SAMPLE_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("expected a {expected} sample, got a {found} sample")]
    SideMismatch { expected: Side, found: Side },
}

#[derive(Debug, Error)]
pub enum SampleFileError {
    #[error("not a sample file")]
    BadMagic,
    #[error("unsupported sample file version {0}")]
    UnsupportedVersion(u16),
    #[error("corrupt sample file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Largest admitted selector value for sampling probability `prob`.
///
/// `raw <= cut` holds exactly when `raw < prob * 2^64`.
pub fn cut_for_probability<R: Real>(prob: R) -> u64 {
    let scaled = (prob.to_f64().unwrap_or(0.0) * TWO_POW_64).ceil();
    if scaled >= TWO_POW_64 {
        u64::MAX
    } else if scaled < 1.0 {
        0
    } else {
        scaled as u64 - 1
    }
}

/// The selector for one side under `seed`. The two sides use independent
/// streams so that equal attribute domains are still sampled independently.
pub fn selector_for(seed: u64, side: Side) -> PairwiseHash {
    let stream = match side {
        Side::Left => 0,
        Side::Right => 1,
    };
    PairwiseHash::random(&mut derive_rng(seed, Purpose::Sampler, stream))
}

/// A value-consistent sample of one relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistinctSample {
    side: Side,
    max_admitted: u64,
    selector: PairwiseHash,
    source_tuples: u64,
    source_distinct: u64,
    tuples: Relation,
}

impl DistinctSample {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn selector(&self) -> PairwiseHash {
        self.selector
    }

    pub fn max_admitted(&self) -> u64 {
        self.max_admitted
    }

    /// The exact probability that a value passes the cut.
    pub fn probability<R: Real>(&self) -> R {
        from_u128::<R>(self.max_admitted as u128 + 1) / lit::<R>(TWO_POW_64)
    }

    /// `|R|` of the relation the sample was drawn from.
    pub fn source_tuples(&self) -> u64 {
        self.source_tuples
    }

    /// Distinct sampled-attribute values (`n_a` or `n_c`) of the source.
    pub fn source_distinct(&self) -> u64 {
        self.source_distinct
    }

    pub fn tuples(&self) -> &Relation {
        &self.tuples
    }

    /// Expected sample size `p * |R|`.
    pub fn expected_size<R: Real>(&self) -> R {
        self.probability::<R>() * from_u64::<R>(self.source_tuples)
    }

    pub fn admits(&self, value: u32) -> bool {
        self.selector.eval(value).raw() <= self.max_admitted
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(&SAMPLE_MAGIC)?;
        out.write_all(&SAMPLE_VERSION.to_le_bytes())?;
        out.write_all(&[side_code(self.side), self.selector.family().code()])?;
        for word in [
            self.max_admitted,
            self.selector.multiplier(),
            self.selector.addend(),
            self.source_tuples,
            self.source_distinct,
            self.tuples.len() as u64,
        ] {
            out.write_all(&word.to_le_bytes())?;
        }
        for &(l, r) in self.tuples.tuples() {
            out.write_all(&l.to_le_bytes())?;
            out.write_all(&r.to_le_bytes())?;
        }
        out.flush()
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, SampleFileError> {
        let mut magic = [0u8; 8];
        read_exact(&mut input, &mut magic)?;
        if magic != SAMPLE_MAGIC {
            return Err(SampleFileError::BadMagic);
        }
        let mut version = [0u8; 2];
        read_exact(&mut input, &mut version)?;
        let version = u16::from_le_bytes(version);
        if version != SAMPLE_VERSION {
            return Err(SampleFileError::UnsupportedVersion(version));
        }
        let mut codes = [0u8; 2];
        read_exact(&mut input, &mut codes)?;
        let side = match codes[0] {
            0 => Side::Left,
            1 => Side::Right,
            other => return Err(SampleFileError::Corrupt(format!("side code {other}"))),
        };
        let family = HashFamily::from_code(codes[1])
            .ok_or_else(|| SampleFileError::Corrupt(format!("hash family code {}", codes[1])))?;
        let mut words = [0u64; 6];
        for w in &mut words {
            let mut buf = [0u8; 8];
            read_exact(&mut input, &mut buf)?;
            *w = u64::from_le_bytes(buf);
        }
        let [max_admitted, multiplier, addend, source_tuples, source_distinct, count] = words;
        let selector = PairwiseHash::from_parts(family, multiplier, addend)
            .ok_or_else(|| SampleFileError::Corrupt("invalid selector parameters".into()))?;
        let mut tuples: Vec<Pair> = Vec::with_capacity(count.min(1 << 24) as usize);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            read_exact(&mut input, &mut buf)?;
            let l = u32::from_le_bytes(buf[..4].try_into().expect("4 bytes"));
            let r = u32::from_le_bytes(buf[4..].try_into().expect("4 bytes"));
            tuples.push((l, r));
        }
        let mut trailing = [0u8; 1];
        if input.read(&mut trailing)? != 0 {
            return Err(SampleFileError::Corrupt("trailing bytes".into()));
        }
        Ok(DistinctSample {
            side,
            max_admitted,
            selector,
            source_tuples,
            source_distinct,
            tuples: Relation::new(side, tuples),
        })
    }
}

fn side_code(side: Side) -> u8 {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<(), SampleFileError> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => SampleFileError::Corrupt("truncated".into()),
        _ => SampleFileError::Io(e),
    })
}

/// One pass over `relation`, keeping tuples whose non-join value passes the
/// selector cut for `prob`.
pub fn draw_sample<R: Real>(
    relation: &Relation,
    prob: R,
    selector: PairwiseHash,
) -> Result<DistinctSample, SamplingError> {
    let p = prob.to_f64().unwrap_or(f64::NAN);
    if !(p > 0.0 && p <= 1.0) {
        return Err(ConfigError::Invalid(format!("sampling probability must lie in (0, 1], got {p}")).into());
    }
    let max_admitted = cut_for_probability(prob);
    let kept = relation
        .tuples()
        .iter()
        .copied()
        .filter(|&t| selector.eval(relation.outer_value(t)).raw() <= max_admitted);
    Ok(DistinctSample {
        side: relation.side(),
        max_admitted,
        selector,
        source_tuples: relation.len() as u64,
        source_distinct: relation.distinct_outer() as u64,
        tuples: Relation::new(relation.side(), kept),
    })
}

/// Estimate computed from two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEstimate<R> {
    /// `|Z'| / (p1 p2)`.
    pub value: R,
    /// The (estimated or exact) size of the joined samples.
    pub sampled_size: R,
    /// The inner sketch never filled, so `sampled_size` is the exact count of
    /// pairs it received.
    pub fallback: bool,
    pub p1: R,
    pub p2: R,
    pub inner: Estimate<R>,
}

/// Joins two samples and scales the result size.
///
/// The inner estimator always starts at threshold one, so an unfilled sketch
/// yields the exact sampled size (the fallback case) and empty samples yield
/// zero.
pub fn estimate_from_samples<R: Real>(
    left: &DistinctSample,
    right: &DistinctSample,
    inner: &EstimatorConfig<R>,
) -> Result<SampleEstimate<R>, SamplingError> {
    if left.side != Side::Left {
        return Err(SamplingError::SideMismatch {
            expected: Side::Left,
            found: left.side,
        });
    }
    if right.side != Side::Right {
        return Err(SamplingError::SideMismatch {
            expected: Side::Right,
            found: right.side,
        });
    }
    let cfg = inner.threshold_mode(ThresholdMode::StartAtOne);
    let grouped = group_and_prune(&left.tuples, &right.tuples);
    let est = estimate_median(&grouped, &cfg)?;
    let p1 = left.probability::<R>();
    let p2 = right.probability::<R>();
    Ok(SampleEstimate {
        value: est.value / (p1 * p2),
        sampled_size: est.value,
        fallback: est.kind == EstimateKind::ExactSmall,
        p1,
        p2,
        inner: est,
    })
}

fn cross_term<R: Real>(n1: u64, n2: u64, n_a: u64, n_c: u64) -> R {
    from_u64::<R>(n_c) * from_u64::<R>(n1) + from_u64::<R>(n_a) * from_u64::<R>(n2)
}

/// Result size above which two samples of expected size `s` give a
/// `1 +- epsilon` estimate with probability 5/6:
/// `beta = 14 / epsilon^2 * (n_c n1 + n_a n2) / s`.
pub fn beta_bound<R: Real>(n1: u64, n2: u64, n_a: u64, n_c: u64, s: R, epsilon: R) -> R {
    lit::<R>(14.0) / (epsilon * epsilon) * cross_term::<R>(n1, n2, n_a, n_c) / s
}

/// The `epsilon` at which `beta_bound` equals `z`.
pub fn epsilon_at<R: Real>(n1: u64, n2: u64, n_a: u64, n_c: u64, s: R, z: R) -> R {
    (lit::<R>(14.0) * cross_term::<R>(n1, n2, n_a, n_c) / (s * z)).sqrt()
}

fn check_sizes<R: Real>(
    counts: [u64; 4],
    z: R,
    epsilon: R,
    delta: R,
) -> Result<(), ConfigError> {
    if counts.contains(&0) {
        return Err(ConfigError::Invalid("relation sizes must be positive".into()));
    }
    let (z, e, d) = (
        z.to_f64().unwrap_or(f64::NAN),
        epsilon.to_f64().unwrap_or(f64::NAN),
        delta.to_f64().unwrap_or(f64::NAN),
    );
    if z.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(ConfigError::Invalid(format!("result size lower bound must be positive, got {z}")));
    }
    if !(e > 0.0 && e < 1.0) {
        return Err(ConfigError::Invalid(format!("epsilon must lie in (0, 1), got {e}")));
    }
    if !(d > 0.0 && d < 0.5) {
        return Err(ConfigError::Invalid(format!("delta must lie in (0, 1/2), got {d}")));
    }
    Ok(())
}

/// The real-valued bound
/// `((n_c n1 + n_a n2) / z) * (1 + 1 / (2 sqrt(delta))) / (epsilon^2 delta)`
/// that the sample size must exceed.
pub fn sample_size_bound<R: Real>(
    n1: u64,
    n2: u64,
    n_a: u64,
    n_c: u64,
    z_lower: R,
    epsilon: R,
    delta: R,
) -> Result<R, ConfigError> {
    check_sizes([n1, n2, n_a, n_c], z_lower, epsilon, delta)?;
    let one = R::one();
    let spread = one + one / (lit::<R>(2.0) * delta.sqrt());
    Ok(cross_term::<R>(n1, n2, n_a, n_c) / z_lower * spread / (epsilon * epsilon * delta))
}

/// Smallest integer sample size strictly above [`sample_size_bound`].
pub fn sufficient_sample_size<R: Real>(
    n1: u64,
    n2: u64,
    n_a: u64,
    n_c: u64,
    z_lower: R,
    epsilon: R,
    delta: R,
) -> Result<u64, ConfigError> {
    let bound = sample_size_bound(n1, n2, n_a, n_c, z_lower, epsilon, delta)?;
    let b = bound.to_f64().unwrap_or(f64::INFINITY);
    if !b.is_finite() || b >= u64::MAX as f64 {
        return Err(ConfigError::Invalid("sample size bound overflows".into()));
    }
    Ok(b.floor() as u64 + 1)
}

/// Sampling parameters for a pair of relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSizePlan<R> {
    /// Expected tuples per sample.
    pub s: u64,
    pub p1: R,
    pub p2: R,
    pub beta: R,
    pub epsilon: R,
    pub delta: R,
}

impl<R: Real> SampleSizePlan<R> {
    /// Plan from a known lower bound on the result size.
    pub fn for_lower_bound(
        n1: u64,
        n2: u64,
        n_a: u64,
        n_c: u64,
        z_lower: R,
        epsilon: R,
        delta: R,
    ) -> Result<Self, ConfigError> {
        let s = sufficient_sample_size(n1, n2, n_a, n_c, z_lower, epsilon, delta)?;
        Self::for_sample_size(n1, n2, n_a, n_c, s, epsilon, delta)
    }

    /// Plan for a fixed sample size; `beta` tells from which result size on
    /// the estimate is accurate.
    pub fn for_sample_size(
        n1: u64,
        n2: u64,
        n_a: u64,
        n_c: u64,
        s: u64,
        epsilon: R,
        delta: R,
    ) -> Result<Self, ConfigError> {
        if s == 0 {
            return Err(ConfigError::Invalid("sample size must be positive".into()));
        }
        check_sizes([n1, n2, n_a, n_c], R::one(), epsilon, delta)?;
        let sr = from_u64::<R>(s);
        let one = R::one();
        Ok(SampleSizePlan {
            s,
            p1: (sr / from_u64::<R>(n1)).min(one),
            p2: (sr / from_u64::<R>(n2)).min(one),
            beta: beta_bound(n1, n2, n_a, n_c, sr, epsilon),
            epsilon,
            delta,
        })
    }
}

/// `beta` for two persisted samples, taking `s` as the smaller expected size.
pub fn beta_for_samples<R: Real>(left: &DistinctSample, right: &DistinctSample, epsilon: R) -> R {
    let s = left.expected_size::<R>().min(right.expected_size::<R>());
    beta_bound(
        left.source_tuples,
        right.source_tuples,
        left.source_distinct,
        right.source_distinct,
        s,
        epsilon,
    )
}
