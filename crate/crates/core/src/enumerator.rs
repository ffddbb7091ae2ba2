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

//! Enumeration of the small-hash pairs of one group `A x C`.
//!
//! With rows sorted by `h1` and columns by `h2`, each column of the conceptual
//! hash matrix is a rotation of an ascending run. The scan keeps a pointer to
//! the row holding the column minimum; that pointer only moves forward
//! (cyclically) as the column index grows, for at most `2|A|` steps in total.
//! From the minimum the column is walked while hashes stay below the live
//! threshold, so the expected work is `O(|A| + |C| + p |A| |C|)` and the
//! product is never materialized.

use serde::{Deserialize, Serialize};

use crate::hashing::{HashValue, PairHash, Threshold};
use crate::relation::Pair;

/// Receiver of enumerated pairs.
///
/// The threshold is re-read before every comparison, so a sink that tightens
/// it while receiving pairs (the k-min sketch) takes effect mid-scan.
pub trait PairSink {
    fn threshold(&self) -> Threshold;
    fn offer(&mut self, pair: Pair, hash: HashValue);
}

/// Sink with a fixed threshold that records everything it receives.
#[derive(Debug, Clone)]
pub struct CollectBelow {
    pub threshold: Threshold,
    pub pairs: Vec<(Pair, HashValue)>,
}

impl CollectBelow {
    pub fn new(threshold: Threshold) -> Self {
        CollectBelow {
            threshold,
            pairs: Vec::new(),
        }
    }
}

impl PairSink for CollectBelow {
    fn threshold(&self) -> Threshold {
        self.threshold
    }

    fn offer(&mut self, pair: Pair, hash: HashValue) {
        self.pairs.push((pair, hash));
    }
}

/// A group with both sides sorted by their hash and the hashes cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedGroup {
    xs: Vec<u32>,
    x_hashes: Vec<u64>,
    ys: Vec<u32>,
    y_hashes: Vec<u64>,
}

impl SortedGroup {
    pub fn xs(&self) -> &[u32] {
        &self.xs
    }

    pub fn ys(&self) -> &[u32] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len() + self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty() || self.ys.is_empty()
    }
}

fn sorted_by_hash(values: &[u32], eval: impl Fn(u32) -> HashValue) -> (Vec<u32>, Vec<u64>) {
    let mut keyed: Vec<(u64, u32)> = values.iter().map(|&v| (eval(v).raw(), v)).collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(h, v)| (v, h)).unzip()
}

/// Sorts `left` by `h1` and `right` by `h2`, ties broken by value.
pub fn sort_group(left: &[u32], right: &[u32], hash: &PairHash) -> SortedGroup {
    let (xs, x_hashes) = sorted_by_hash(left, |x| hash.left.eval(x));
    let (ys, y_hashes) = sorted_by_hash(right, |y| hash.right.eval(y));
    SortedGroup {
        xs,
        x_hashes,
        ys,
        y_hashes,
    }
}

/// Work done by one scan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanWork {
    /// Advances of the column-minimum pointer.
    pub sbar_increments: u64,
    /// Evaluations of the inner walk condition, failing ones included.
    pub inner_iterations: u64,
    /// Pairs handed to the sink.
    pub emitted: u64,
}

/// Emits every pair of `group` whose hash is below `sink.threshold()`.
///
/// Each qualifying pair is emitted once. With a threshold that only
/// decreases during the scan, every pair below the final threshold is
/// emitted.
pub fn scan_group<S: PairSink + ?Sized>(group: &SortedGroup, sink: &mut S) -> ScanWork {
    let mut work = ScanWork::default();
    let rows = group.xs.len();
    if rows == 0 {
        return work;
    }
    let xh = &group.x_hashes;
    let mut sbar = 0usize;
    for (&y, &yh) in group.ys.iter().zip(&group.y_hashes) {
        let at = |s: usize| xh[s].wrapping_sub(yh);

        // Move to the row minimizing h in this column. The column has one
        // cyclic descent, so this stops within `rows` steps; the cap only
        // guards against degenerate (colliding) inputs.
        let mut steps = 0;
        while steps < rows {
            let prev = if sbar == 0 { rows - 1 } else { sbar - 1 };
            if at(sbar) > at(prev) {
                sbar = if sbar + 1 == rows { 0 } else { sbar + 1 };
                steps += 1;
            } else {
                break;
            }
        }
        work.sbar_increments += steps as u64;

        // Walk down from the minimum; never more than one lap.
        let mut s = sbar;
        let mut walked = 0;
        loop {
            work.inner_iterations += 1;
            if walked == rows {
                break;
            }
            let h = HashValue(at(s));
            if !sink.threshold().admits(h) {
                break;
            }
            sink.offer((group.xs[s], y), h);
            work.emitted += 1;
            s = if s + 1 == rows { 0 } else { s + 1 };
            walked += 1;
        }
    }
    work
}
