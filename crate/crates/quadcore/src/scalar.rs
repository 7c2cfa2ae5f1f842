//! Scalar abstraction: the whole crate is generic over the floating-point
//! type, with `f64` as the working default (see the aliases in the crate
//! root).

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {}

impl<T: RealField + Copy + FromPrimitive + ToPrimitive> Real for T {}

/// Convert an `f64` constant into the working scalar.
#[inline]
pub(crate) fn fr<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant must be representable in the scalar type")
}

/// Lossy view of a scalar as `f64`, for diagnostics.
#[inline]
pub(crate) fn as_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
