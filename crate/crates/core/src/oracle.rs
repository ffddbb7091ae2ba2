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

//! Brute-force ground truth. Materializes the result; for tests and
//! desk-scale experiments only.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::{HashValue, PairHash, Threshold};
use crate::kmin::Candidate;
use crate::relation::{GroupedInput, Pair};

/// Default bound on materialized pairs.
pub const DEFAULT_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("exact computation needs more than {cap} materialized pairs")]
    CapExceeded { cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactResult {
    pub z: u64,
    /// Sorted distinct pairs, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<Pair>>,
}

fn distinct_pairs(input: &GroupedInput, cap: usize) -> Result<HashSet<Pair>, OracleError> {
    let mut out: HashSet<Pair> = HashSet::new();
    for g in input.groups() {
        for &a in &g.left {
            for &c in &g.right {
                out.insert((a, c));
            }
        }
        if out.len() > cap {
            return Err(OracleError::CapExceeded { cap });
        }
    }
    Ok(out)
}

/// Exact size of the union of `A_b x C_b`.
pub fn exact_size(input: &GroupedInput, cap: usize) -> Result<ExactResult, OracleError> {
    let z = distinct_pairs(input, cap)?.len() as u64;
    Ok(ExactResult { z, pairs: None })
}

/// Like [`exact_size`], also returning the sorted pair set.
pub fn exact_pairs(input: &GroupedInput, cap: usize) -> Result<ExactResult, OracleError> {
    let mut pairs: Vec<Pair> = distinct_pairs(input, cap)?.into_iter().collect();
    pairs.sort_unstable();
    Ok(ExactResult {
        z: pairs.len() as u64,
        pairs: Some(pairs),
    })
}

/// Exact size through per-`a` bitsets of reachable `c` values.
///
/// Independent of [`exact_size`]; the cap bounds the bitset area in bits / 64.
pub fn exact_size_bitset(input: &GroupedInput, cap: usize) -> Result<u64, OracleError> {
    let mut a_index: HashMap<u32, usize> = HashMap::new();
    let mut c_index: HashMap<u32, usize> = HashMap::new();
    for g in input.groups() {
        for &a in &g.left {
            let next = a_index.len();
            a_index.entry(a).or_insert(next);
        }
        for &c in &g.right {
            let next = c_index.len();
            c_index.entry(c).or_insert(next);
        }
    }
    let words = c_index.len().div_ceil(64);
    if a_index.len().saturating_mul(words) > cap {
        return Err(OracleError::CapExceeded { cap });
    }
    let mut rows = vec![0u64; a_index.len() * words];
    let mut mask = vec![0u64; words];
    for g in input.groups() {
        mask.iter_mut().for_each(|w| *w = 0);
        for c in &g.right {
            let i = c_index[c];
            mask[i / 64] |= 1 << (i % 64);
        }
        for a in &g.left {
            let row = a_index[a] * words;
            for (dst, src) in rows[row..row + words].iter_mut().zip(&mask) {
                *dst |= src;
            }
        }
    }
    Ok(rows.iter().map(|w| w.count_ones() as u64).sum())
}

/// The k-th smallest pair hash, or how many pairs exist when fewer than k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KthHash {
    Found(HashValue),
    Undersupplied { count: u64 },
}

/// k-th smallest hash over every distinct result pair, ordered by
/// `(hash, a, c)`.
pub fn exact_kth_hash(
    input: &GroupedInput,
    hash: &PairHash,
    k: usize,
    cap: usize,
) -> Result<KthHash, OracleError> {
    exact_kth_hash_below(input, hash, k, Threshold::ONE, cap)
}

/// As [`exact_kth_hash`], restricted to pairs whose hash is below `threshold`.
pub fn exact_kth_hash_below(
    input: &GroupedInput,
    hash: &PairHash,
    k: usize,
    threshold: Threshold,
    cap: usize,
) -> Result<KthHash, OracleError> {
    assert!(k > 0, "k must be positive");
    let mut all: Vec<Candidate> = distinct_pairs(input, cap)?
        .into_iter()
        .map(|p| Candidate::new(p, hash.eval(p.0, p.1)))
        .filter(|c| threshold.admits(c.hash))
        .collect();
    all.sort_unstable();
    Ok(match all.get(k - 1) {
        Some(c) => KthHash::Found(c.hash),
        None => KthHash::Undersupplied {
            count: all.len() as u64,
        },
    })
}
