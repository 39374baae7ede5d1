// SPDX-License-Identifier: Apache-2.0

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the solvers are generic over.
///
/// Implemented for `f32` and `f64`. All linear algebra goes through
/// `nalgebra`, so the bound is `RealField` plus the `num-traits`
/// conversions used to read literals and report results.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the provided impls.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the concrete type.
    fn eps() -> Self;
}

impl Scalar for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

impl Scalar for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

/// `|x|` without the `Signed`/`ComplexField` method ambiguity.
#[inline]
pub(crate) fn abs<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        -x
    } else {
        x
    }
}

#[inline]
pub(crate) fn max<T: Scalar>(a: T, b: T) -> T {
    if a >= b {
        a
    } else {
        b
    }
}

#[inline]
pub(crate) fn min<T: Scalar>(a: T, b: T) -> T {
    if a <= b {
        a
    } else {
        b
    }
}
