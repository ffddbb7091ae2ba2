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

//! Deterministic seeding.
//!
//! Every random choice in the crate is derived from a user seed, a purpose
//! tag and a stream index, so independent consumers (estimator runs, sample
//! selectors) never share random bits even under the same seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived generator is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Hash functions and selection pivots of one estimator run.
    Estimator,
    /// Value selectors of distinct samples.
    Sampler,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Estimator => 0x6a09_e667_f3bc_c908,
            Purpose::Sampler => 0xbb67_ae85_84ca_a73b,
        }
    }
}

/// Generator for `(seed, purpose, stream)`.
pub fn derive_rng(seed: u64, purpose: Purpose, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.tag());
    rng.set_stream(stream);
    rng
}
