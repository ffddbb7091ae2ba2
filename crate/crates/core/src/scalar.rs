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

//! Real-valued scalar abstraction.
//!
//! Hash arithmetic is fixed-point and lives on `u64`; everything that is a
//! genuine real number (estimates, probabilities, error bounds) is generic
//! over [`Real`] so callers can pick `f32` or `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable for estimates and error bounds.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// 2^64 as an `f64`; the scale of the fixed-point hash grid.
pub(crate) const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

#[inline]
pub(crate) fn lit<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 literal representable in target scalar")
}

#[inline]
pub(crate) fn from_u64<R: Real>(x: u64) -> R {
    R::from_u64(x).expect("u64 representable in target scalar")
}

#[inline]
pub(crate) fn from_u128<R: Real>(x: u128) -> R {
    R::from_u128(x).expect("u128 representable in target scalar")
}
