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

//! Fixed-point hash values and the structured pair hash.
//!
//! A hash value is a fraction `raw / 2^64`. Wrapping `u64` arithmetic then
//! realizes "mod 1" exactly, so the pair hash
//!
//! ```text
//! h(x, y) = (h1(x) - h2(y)) mod 1
//! ```
//!
//! is a single wrapping subtraction. Sorting the rows of an `A x C` block by
//! `h1` and the columns by `h2` makes every column cyclically ascending and
//! every row cyclically descending, which is what the enumerator exploits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{from_u128, from_u64, Real, TWO_POW_64};

/// The Mersenne prime `2^61 - 1` used by [`HashFamily::MersennePrime`].
pub const MERSENNE_61: u64 = (1 << 61) - 1;

const ONE_RAW: u128 = 1 << 64;

/// A point of the grid `{ i / 2^64 }` in `[0, 1)`.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct HashValue(pub u64);

impl HashValue {
    pub const ZERO: HashValue = HashValue(0);
    pub const MAX: HashValue = HashValue(u64::MAX);

    #[inline]
    pub fn raw(self) -> u64 {
        self.0
    }

    /// Rounds `fraction` down onto the grid, reducing mod 1 first.
    pub fn from_fraction<R: Real>(fraction: R) -> Self {
        let f = fraction.to_f64().unwrap_or(0.0);
        let f = f - f.floor();
        let scaled = (f * TWO_POW_64).floor();
        if scaled >= TWO_POW_64 {
            HashValue(u64::MAX)
        } else {
            HashValue(scaled as u64)
        }
    }

    pub fn to_fraction<R: Real>(self) -> R {
        from_u64::<R>(self.0) / from_u128::<R>(ONE_RAW)
    }

    /// `(self - other) mod 1`.
    #[inline]
    pub fn wrapping_sub(self, other: HashValue) -> HashValue {
        HashValue(self.0.wrapping_sub(other.0))
    }
}

/// A cutoff on the hash grid in `[0, 1]`.
///
/// Unlike [`HashValue`] this can represent `1`, the all-pass threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Threshold(u128);

impl Threshold {
    pub const ZERO: Threshold = Threshold(0);
    pub const ONE: Threshold = Threshold(ONE_RAW);

    /// Builds a threshold from `raw / 2^64`, saturating at one.
    pub fn from_raw(raw: u128) -> Self {
        Threshold(raw.min(ONE_RAW))
    }

    /// Threshold sitting exactly at `value`; `value` itself is not admitted.
    pub fn at(value: HashValue) -> Self {
        Threshold(value.0 as u128)
    }

    /// `floor(numerator / denominator)` on the grid, saturating at one.
    ///
    /// A zero denominator yields one.
    pub fn ratio(numerator: u128, denominator: u128) -> Self {
        if denominator == 0 {
            return Threshold::ONE;
        }
        // numerator * 2^64 / denominator without overflowing u128
        let whole = numerator / denominator;
        if whole >= 1 {
            return Threshold::ONE;
        }
        let rem = numerator % denominator;
        Threshold(mul_shift_div(rem, denominator))
    }

    pub fn from_fraction<R: Real>(fraction: R) -> Self {
        let f = fraction.to_f64().unwrap_or(0.0);
        if f.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Threshold::ZERO;
        }
        if f >= 1.0 {
            return Threshold::ONE;
        }
        Threshold(((f * TWO_POW_64).floor() as u128).min(ONE_RAW))
    }

    #[inline]
    pub fn raw(self) -> u128 {
        self.0
    }

    #[inline]
    pub fn is_one(self) -> bool {
        self.0 == ONE_RAW
    }

    /// Whether `value` lies strictly below the threshold.
    #[inline]
    pub fn admits(self, value: HashValue) -> bool {
        (value.0 as u128) < self.0
    }

    pub fn to_fraction<R: Real>(self) -> R {
        from_u128::<R>(self.0) / from_u128::<R>(ONE_RAW)
    }
}

/// `floor(rem * 2^64 / den)` for `rem < den`, by long division on the high bits.
fn mul_shift_div(rem: u128, den: u128) -> u128 {
    if den <= u64::MAX as u128 + 1 {
        // rem < 2^64 so rem << 64 fits
        return (rem << 64) / den;
    }
    let mut q: u128 = 0;
    let mut r = rem;
    for _ in 0..64 {
        let carry = r >> 127;
        r <<= 1;
        q <<= 1;
        if carry == 1 || r >= den {
            r = r.wrapping_sub(den);
            q |= 1;
        }
    }
    q
}

/// Which universal family a [`PairwiseHash`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HashFamily {
    /// `multiplier * x + addend` in wrapping 64-bit arithmetic, odd multiplier.
    ///
    /// A bijection on `u64`, so distinct keys never collide. Close to, but not
    /// exactly, pairwise independent on the fraction grid.
    MultiplyAdd,
    /// `(multiplier * x + addend) mod (2^61 - 1)`, rescaled onto the 2^-64 grid.
    /// Exactly pairwise independent over keys below the prime.
    MersennePrime,
}

impl HashFamily {
    /// The family used when none is requested explicitly.
    pub const DEFAULT: HashFamily = if cfg!(feature = "exact-pairwise") {
        HashFamily::MersennePrime
    } else {
        HashFamily::MultiplyAdd
    };

    pub(crate) fn code(self) -> u8 {
        match self {
            HashFamily::MultiplyAdd => 0,
            HashFamily::MersennePrime => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(HashFamily::MultiplyAdd),
            1 => Some(HashFamily::MersennePrime),
            _ => None,
        }
    }
}

impl Default for HashFamily {
    fn default() -> Self {
        HashFamily::DEFAULT
    }
}

/// One member of a universal family mapping attribute ids to [`HashValue`]s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairwiseHash {
    family: HashFamily,
    multiplier: u64,
    addend: u64,
}

impl PairwiseHash {
    /// # Panics
    ///
    /// Panics if `multiplier` is even.
    pub fn multiply_add(multiplier: u64, addend: u64) -> Self {
        assert!(multiplier & 1 == 1, "multiplier must be odd, got {multiplier}");
        PairwiseHash {
            family: HashFamily::MultiplyAdd,
            multiplier,
            addend,
        }
    }

    /// # Panics
    ///
    /// Panics unless `1 <= multiplier < 2^61 - 1` and `addend < 2^61 - 1`.
    pub fn mersenne(multiplier: u64, addend: u64) -> Self {
        assert!(
            (1..MERSENNE_61).contains(&multiplier) && addend < MERSENNE_61,
            "parameters out of range for the Mersenne family"
        );
        PairwiseHash {
            family: HashFamily::MersennePrime,
            multiplier,
            addend,
        }
    }

    /// Rebuilds a hash from persisted parameters, validating them.
    pub fn from_parts(family: HashFamily, multiplier: u64, addend: u64) -> Option<Self> {
        let ok = match family {
            HashFamily::MultiplyAdd => multiplier & 1 == 1,
            HashFamily::MersennePrime => {
                (1..MERSENNE_61).contains(&multiplier) && addend < MERSENNE_61
            }
        };
        ok.then_some(PairwiseHash {
            family,
            multiplier,
            addend,
        })
    }

    /// Draws a member of the default family.
    pub fn random<G: Rng + ?Sized>(rng: &mut G) -> Self {
        Self::random_in(HashFamily::DEFAULT, rng)
    }

    pub fn random_in<G: Rng + ?Sized>(family: HashFamily, rng: &mut G) -> Self {
        match family {
            HashFamily::MultiplyAdd => Self::multiply_add(rng.gen::<u64>() | 1, rng.gen()),
            HashFamily::MersennePrime => {
                // low bits by rejection, so the draw is not a rescaled copy of
                // the multiply-add parameters for the same stream
                let mut below = |lo: u64| loop {
                    let v = rng.gen::<u64>() & MERSENNE_61;
                    if (lo..MERSENNE_61).contains(&v) {
                        break v;
                    }
                };
                let multiplier = below(1);
                Self::mersenne(multiplier, below(0))
            }
        }
    }

    pub fn family(&self) -> HashFamily {
        self.family
    }

    pub fn multiplier(&self) -> u64 {
        self.multiplier
    }

    pub fn addend(&self) -> u64 {
        self.addend
    }

    #[inline]
    pub fn eval(&self, x: u32) -> HashValue {
        match self.family {
            HashFamily::MultiplyAdd => HashValue(
                self.multiplier
                    .wrapping_mul(x as u64)
                    .wrapping_add(self.addend),
            ),
            HashFamily::MersennePrime => {
                let p = MERSENNE_61 as u128;
                let v = (self.multiplier as u128 * x as u128 + self.addend as u128) % p;
                HashValue(((v << 64) / p) as u64)
            }
        }
    }
}

/// The structured pair hash `h(x, y) = (h1(x) - h2(y)) mod 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairHash {
    pub left: PairwiseHash,
    pub right: PairwiseHash,
}

impl PairHash {
    pub fn new(left: PairwiseHash, right: PairwiseHash) -> Self {
        PairHash { left, right }
    }

    /// Two independent draws from the default family.
    pub fn random<G: Rng + ?Sized>(rng: &mut G) -> Self {
        let left = PairwiseHash::random(rng);
        let right = PairwiseHash::random(rng);
        PairHash { left, right }
    }

    #[inline]
    pub fn eval(&self, x: u32, y: u32) -> HashValue {
        self.left.eval(x).wrapping_sub(self.right.eval(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_rng, Purpose};
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

    fn frac(f: f64) -> HashValue {
        HashValue::from_fraction(f)
    }

    #[test]
    fn multiply_add_direct_formula() {
        assert_eq!(PairwiseHash::multiply_add(1, 0).eval(0), HashValue(0));
        assert_eq!(PairwiseHash::multiply_add(1, 5).eval(3), HashValue(8));
        let h = PairwiseHash::multiply_add(3, u64::MAX);
        assert_eq!(h.eval(1), HashValue(2));
    }

    #[test]
    #[should_panic(expected = "odd")]
    fn even_multiplier_rejected() {
        PairwiseHash::multiply_add(2, 0);
    }

    #[test]
    fn seed_42_regression_vector() {
        let mut rng = derive_rng(42, Purpose::Estimator, 0);
        let h = PairwiseHash::random_in(HashFamily::MultiplyAdd, &mut rng);
        let got: Vec<u64> = (1..=3).map(|x| h.eval(x).raw()).collect();
        assert_ne!(got[0], got[1]);
        assert_ne!(got[1], got[2]);
        assert_ne!(got[0], got[2]);
        assert_eq!(got, SEED_42_VECTOR);
    }

    const SEED_42_VECTOR: [u64; 3] = [12081100101405406719, 467612687094228320, 7300869346492601537];

    #[test]
    fn pair_hash_fraction_arithmetic() {
        // h1(x) = 0.3, h2(y) = 0.7 -> 0.6
        let h = PairHash::new(
            PairwiseHash::multiply_add(1, frac(0.3).raw()),
            PairwiseHash::multiply_add(1, frac(0.7).raw()),
        );
        let v: f64 = h.eval(0, 0).to_fraction();
        assert!((v - 0.6).abs() < 1e-15, "{v}");
        let same = PairwiseHash::multiply_add(1, 12345);
        assert_eq!(PairHash::new(same, same).eval(9, 9), HashValue::ZERO);
    }

    #[test]
    fn threshold_ratio_exact() {
        assert_eq!(Threshold::ratio(1, 1), Threshold::ONE);
        assert_eq!(Threshold::ratio(5, 4), Threshold::ONE);
        assert_eq!(Threshold::ratio(1, 2).raw(), 1 << 63);
        assert_eq!(Threshold::ratio(1, 3).raw(), u64::MAX as u128 / 3);
        assert_eq!(Threshold::ratio(100, 1_000_000), Threshold::ratio(1, 10_000));
        // denominators above 2^64 go through the long-division path
        let den = (1u128 << 70) + 12345;
        let t = Threshold::ratio(1 << 69, den);
        assert!(t.raw() < 1 << 63 && t.raw() > (1 << 63) - (1 << 20));
        assert!(Threshold::ONE.admits(HashValue::MAX));
        assert!(!Threshold::ZERO.admits(HashValue::ZERO));
    }

    #[test]
    fn long_division_matches_direct_when_both_apply() {
        for (rem, den) in [(1u128, 3u128), (7, 10), (12345, 1 << 40), (5, (1 << 64) - 1)] {
            let mut q: u128 = 0;
            let mut r = rem;
            for _ in 0..64 {
                r <<= 1;
                q <<= 1;
                if r >= den {
                    r -= den;
                    q |= 1;
                }
            }
            assert_eq!(mul_shift_div(rem, den), q);
        }
    }

    #[test]
    fn mersenne_family_is_injective_on_small_keys() {
        let mut rng = derive_rng(3, Purpose::Estimator, 0);
        let h = PairwiseHash::random_in(HashFamily::MersennePrime, &mut rng);
        let mut seen: Vec<u64> = (0..5000).map(|x| h.eval(x).raw()).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 5000);
    }

    #[test]
    fn no_pair_collisions_among_distinct_pairs() {
        // 2e4 distinct pairs give ~2e8 pairs-of-pairs; the tolerated rate
        // 10 * 2^-32 allows zero collisions at that volume.
        let mut rng = derive_rng(11, Purpose::Estimator, 0);
        let h = PairHash::random(&mut rng);
        let mut pairs: Vec<(u32, u32)> = (0..20_000).map(|_| (rng.gen(), rng.gen())).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut hashes: Vec<u64> = pairs.iter().map(|&(x, y)| h.eval(x, y).raw()).collect();
        hashes.sort_unstable();
        let collisions = hashes.windows(2).filter(|w| w[0] == w[1]).count();
        let pp = (pairs.len() * (pairs.len() - 1) / 2) as f64;
        assert!(collisions as f64 / pp <= 10.0 / 4_294_967_296.0);
    }

    #[test]
    fn pair_hash_marginal_uniformity() {
        let mut rng = derive_rng(5, Purpose::Estimator, 9);
        let trials = 200_000usize;
        for t in [1u128 << 32, 1 << 48, 1 << 60] {
            let cut = Threshold::from_raw(t);
            let mut hits = 0usize;
            for _ in 0..trials {
                let h = PairHash::random(&mut rng);
                let (x, y) = (rng.gen::<u32>(), rng.gen::<u32>());
                if cut.admits(h.eval(x, y)) {
                    hits += 1;
                }
            }
            let p = t as f64 / TWO_POW_64;
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            let observed = hits as f64 / trials as f64;
            assert!((observed - p).abs() <= 3.0 * se + 1e-12, "t={t} observed={observed}");
        }
    }

    fn cyclic_descents(values: &[u64]) -> usize {
        let m = values.len();
        (0..m).filter(|&i| values[(i + 1) % m] < values[i]).count()
    }

    proptest! {
        #[test]
        fn columns_cyclically_ascending(seed: u64, xs in proptest::collection::hash_set(any::<u32>(), 2..100), y: u32) {
            let mut rng = derive_rng(seed, Purpose::Estimator, 0);
            let h = PairHash::random(&mut rng);
            let mut xs: Vec<u32> = xs.into_iter().collect();
            xs.sort_by_key(|&x| (h.left.eval(x), x));
            let col: Vec<u64> = xs.iter().map(|&x| h.eval(x, y).raw()).collect();
            prop_assert_eq!(cyclic_descents(&col), 1);
        }

        #[test]
        fn rows_cyclically_descending(seed: u64, ys in proptest::collection::hash_set(any::<u32>(), 2..100), x: u32) {
            let mut rng = derive_rng(seed, Purpose::Estimator, 0);
            let h = PairHash::random(&mut rng);
            let mut ys: Vec<u32> = ys.into_iter().collect();
            ys.sort_by_key(|&y| (h.right.eval(y), y));
            let mut row: Vec<u64> = ys.iter().map(|&y| h.eval(x, y).raw()).collect();
            row.reverse();
            prop_assert_eq!(cyclic_descents(&row), 1);
        }

        #[test]
        fn fraction_round_trip(raw: u64) {
            let v = HashValue(raw);
            let f: f64 = v.to_fraction();
            prop_assert!((0.0..1.0).contains(&f));
            let back = HashValue::from_fraction(f);
            prop_assert!(back.raw().abs_diff(raw) <= 1 << 12);
        }
    }
}
