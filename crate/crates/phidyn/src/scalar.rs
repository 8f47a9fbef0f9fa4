//! Scalar abstraction.
//!
//! All numeric code in this crate is generic over a floating-point scalar so
//! the same algorithms run in `f32` or `f64`. The default tolerances quoted
//! throughout the crate (fixed-point residuals, solver stopping rules) are
//! calibrated for `f64`; `f32` builds but cannot meet them.

use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar used by every numeric routine in the crate.
pub trait Real:
    Float + FromPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("constant not representable in scalar type")
}

/// Strictly positive and not NaN.
#[inline]
pub fn is_positive<R: Real>(x: R) -> bool {
    x > R::zero()
}
