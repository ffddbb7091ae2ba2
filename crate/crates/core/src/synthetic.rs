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

//! Seeded instance generators for tests, benchmarks and experiments.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::relation::{Pair, Relation, Side};

/// Join values `0..groups`; each group links `group_size` distinct outer
/// values drawn uniformly from a domain of `n_a` (left) or `n_c` (right)
/// identifiers. Identifiers are scattered over `u32` so that they are not
/// consecutive integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockInstance {
    pub n_a: usize,
    pub n_c: usize,
    pub groups: usize,
    pub group_size: usize,
}

impl BlockInstance {
    /// About `10^5` distinct result pairs.
    pub const Z_1E5: BlockInstance = BlockInstance {
        n_a: 1000,
        n_c: 1000,
        groups: 1054,
        group_size: 10,
    };

    /// About `10^6` distinct result pairs.
    pub const Z_1E6: BlockInstance = BlockInstance {
        n_a: 2000,
        n_c: 2000,
        groups: 1278,
        group_size: 30,
    };

    /// Expected number of distinct result pairs.
    pub fn expected_size(&self) -> f64 {
        let cells = self.n_a as f64 * self.n_c as f64;
        let hit = (self.group_size.min(self.n_a) as f64 / self.n_a as f64)
            * (self.group_size.min(self.n_c) as f64 / self.n_c as f64);
        cells * (1.0 - (1.0 - hit).powf(self.groups as f64))
    }

    pub fn generate(&self, rng: &mut ChaCha8Rng) -> (Relation, Relation) {
        let left_ids = scattered_ids(rng, self.n_a);
        let right_ids = scattered_ids(rng, self.n_c);
        let mut left: Vec<Pair> = Vec::with_capacity(self.groups * self.group_size);
        let mut right: Vec<Pair> = Vec::with_capacity(self.groups * self.group_size);
        for b in 0..self.groups as u32 {
            for i in sample(rng, self.n_a, self.group_size.min(self.n_a)) {
                left.push((left_ids[i], b));
            }
            for i in sample(rng, self.n_c, self.group_size.min(self.n_c)) {
                right.push((b, right_ids[i]));
            }
        }
        (Relation::new(Side::Left, left), Relation::new(Side::Right, right))
    }
}

fn scattered_ids(rng: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    sample(rng, u32::MAX as usize, n).into_iter().map(|i| i as u32).collect()
}

/// A small random instance with at most `max_tuples` tuples per side over
/// small domains, so that groups, duplicates and empty joins all occur.
pub fn random_small(rng: &mut ChaCha8Rng, max_tuples: usize) -> (Relation, Relation) {
    let n1 = rng.gen_range(0..=max_tuples);
    let n2 = rng.gen_range(0..=max_tuples);
    let dom_a = rng.gen_range(1..=40u32);
    let dom_b = rng.gen_range(1..=12u32);
    let dom_c = rng.gen_range(1..=40u32);
    let left: Vec<Pair> = (0..n1)
        .map(|_| (rng.gen_range(0..dom_a), rng.gen_range(0..dom_b)))
        .collect();
    let right: Vec<Pair> = (0..n2)
        .map(|_| (rng.gen_range(0..dom_b), rng.gen_range(0..dom_c)))
        .collect();
    (Relation::new(Side::Left, left), Relation::new(Side::Right, right))
}
