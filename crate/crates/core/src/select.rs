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

//! Randomized selection (Hoare's quickselect) with a caller-supplied generator.

use std::cmp::Ordering;

use rand::Rng;

/// Reorders `items` so that `items[nth]` holds the element of rank `nth`
/// (0-based), everything before it is `<=` and everything after it is `>=`.
///
/// Expected linear time. Pivots are drawn from `rng`, so the permutation is
/// reproducible for a fixed generator state.
///
/// # Panics
///
/// Panics if `nth >= items.len()`.
pub fn select_nth<T: Ord, G: Rng + ?Sized>(items: &mut [T], nth: usize, rng: &mut G) {
    assert!(nth < items.len(), "rank {nth} out of bounds for {} items", items.len());
    let mut lo = 0;
    let mut hi = items.len();
    loop {
        if hi - lo <= 1 {
            return;
        }
        let pivot = rng.gen_range(lo..hi);
        let (lt, gt) = partition3(&mut items[lo..hi], pivot - lo);
        let (lt, gt) = (lo + lt, lo + gt);
        if nth < lt {
            hi = lt;
        } else if nth >= gt {
            lo = gt;
        } else {
            return;
        }
    }
}

/// Three-way partition around `items[pivot]`. Returns `(lt, gt)` such that
/// `items[..lt] < p`, `items[lt..gt] == p`, `items[gt..] > p`.
fn partition3<T: Ord>(items: &mut [T], pivot: usize) -> (usize, usize) {
    items.swap(0, pivot);
    let mut lt = 0;
    let mut i = 1;
    let mut gt = items.len();
    // items[0] is the pivot until the end; indices shift as it moves
    while i < gt {
        match items[i].cmp(&items[lt]) {
            Ordering::Less => {
                items.swap(i, lt);
                lt += 1;
                i += 1;
            }
            Ordering::Greater => {
                gt -= 1;
                items.swap(i, gt);
            }
            Ordering::Equal => i += 1,
        }
    }
    (lt, gt)
}
