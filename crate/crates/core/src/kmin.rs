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

//! The k-minimum-values sketch with an unordered overflow buffer.
//!
//! `S` holds the k smallest distinct candidates seen so far and `F` the most
//! recent arrivals. When `F` reaches k entries the two are merged by rank-k
//! selection, which costs O(k) and happens at most once per k accepted
//! offers, giving amortized O(1) per offer without a heap.
//!
//! Candidates are ordered by `(hash, a, c)`. The pair components only matter
//! when two distinct pairs collide on the hash, and make the rank boundary
//! deterministic.

use std::collections::HashSet;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::enumerator::PairSink;
use crate::hashing::{HashValue, Threshold};
use crate::relation::Pair;
use crate::select::select_nth;

/// A result pair together with its hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Candidate {
    pub hash: HashValue,
    pub pair: Pair,
}

impl Candidate {
    pub fn new(pair: Pair, hash: HashValue) -> Self {
        Candidate { hash, pair }
    }
}

/// Result of merging the sketch with the buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Combined {
    /// The k-th smallest candidate, when at least k were available.
    pub kth: Option<Candidate>,
    /// The `min(k, |S ∪ F|)` smallest candidates, unordered.
    pub kept: Vec<Candidate>,
}

/// Merges `sketch` and `buffer` (disjoint) and keeps the k smallest.
pub fn combine(
    mut sketch: Vec<Candidate>,
    mut buffer: Vec<Candidate>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Combined {
    assert!(k > 0, "k must be positive");
    sketch.append(&mut buffer);
    let mut all = sketch;
    if all.len() < k {
        return Combined {
            kth: None,
            kept: all,
        };
    }
    let kth = if all.len() == k {
        *all.iter().max().expect("k > 0")
    } else {
        select_nth(&mut all, k - 1, rng);
        all.truncate(k);
        all[k - 1]
    };
    Combined {
        kth: Some(kth),
        kept: all,
    }
}

/// Outcome of a finished sketch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchOutcome {
    /// k distinct pairs were found; `kth` is the k-th smallest hash.
    Filled { kth: HashValue },
    /// Fewer than k distinct pairs fell below the initial threshold.
    Unfilled { count: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchStats {
    pub offers: u64,
    pub accepted: u64,
    pub combines: u64,
}

/// Mutable sketch state owned by a single estimator run.
#[derive(Debug, Clone)]
pub struct KMinState {
    k: usize,
    sketch: Vec<Candidate>,
    buffer: Vec<Candidate>,
    members: HashSet<Pair>,
    threshold: Threshold,
    initial: Threshold,
    filled: bool,
    stats: SketchStats,
    rng: ChaCha8Rng,
}

impl KMinState {
    /// # Panics
    ///
    /// Panics if `k == 0`.
    pub fn new(k: usize, threshold: Threshold, rng: ChaCha8Rng) -> Self {
        assert!(k > 0, "k must be positive");
        KMinState {
            k,
            sketch: Vec::with_capacity(k),
            buffer: Vec::with_capacity(k),
            members: HashSet::with_capacity(2 * k),
            threshold,
            initial: threshold,
            filled: false,
            stats: SketchStats::default(),
            rng,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The live threshold: only hashes strictly below it are accepted.
    pub fn threshold(&self) -> Threshold {
        self.threshold
    }

    pub fn initial_threshold(&self) -> Threshold {
        self.initial
    }

    pub fn is_filled(&self) -> bool {
        self.filled
    }

    pub fn stats(&self) -> SketchStats {
        self.stats
    }

    pub fn sketch(&self) -> &[Candidate] {
        &self.sketch
    }

    pub fn buffer(&self) -> &[Candidate] {
        &self.buffer
    }

    pub fn contains(&self, pair: Pair) -> bool {
        self.members.contains(&pair)
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    /// Offers a pair whose hash lies below the live threshold.
    ///
    /// Returns `false` if the pair is already held. Triggers a combine once
    /// the buffer holds k pairs.
    pub fn offer(&mut self, pair: Pair, hash: HashValue) -> bool {
        debug_assert!(self.threshold.admits(hash), "offer above threshold");
        self.stats.offers += 1;
        if !self.members.insert(pair) {
            return false;
        }
        self.stats.accepted += 1;
        self.buffer.push(Candidate::new(pair, hash));
        if self.buffer.len() == self.k {
            self.combine();
        }
        true
    }

    /// Merges the buffer into the sketch and tightens the threshold.
    pub fn combine(&mut self) {
        self.stats.combines += 1;
        let sketch = std::mem::take(&mut self.sketch);
        let buffer = std::mem::replace(&mut self.buffer, Vec::with_capacity(self.k));
        let merged = combine(sketch, buffer, self.k, &mut self.rng);
        if let Some(kth) = merged.kth {
            self.threshold = Threshold::at(kth.hash);
            self.filled = true;
        }
        self.sketch = merged.kept;
        self.members.clear();
        self.members.extend(self.sketch.iter().map(|c| c.pair));
    }

    /// Runs the final combine and reports the outcome.
    pub fn finalize(&mut self) -> SketchOutcome {
        self.combine();
        if self.sketch.len() == self.k {
            let kth = self.sketch.iter().max().expect("k > 0").hash;
            SketchOutcome::Filled { kth }
        } else {
            SketchOutcome::Unfilled {
                count: self.sketch.len(),
            }
        }
    }
}

impl PairSink for KMinState {
    fn threshold(&self) -> Threshold {
        self.threshold
    }

    fn offer(&mut self, pair: Pair, hash: HashValue) {
        KMinState::offer(self, pair, hash);
    }
}
