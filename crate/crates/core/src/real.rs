//! Scalar abstraction for the estimation core.

use num_traits::FromPrimitive;

/// Floating-point scalar the estimation math is generic over: `f32` or `f64`.
///
/// `eps()` is the unit roundoff of the type; validation tolerances scale with
/// it so the same invariants hold for both precisions.
pub trait Real: nalgebra::RealField + FromPrimitive + Copy {
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn cvt<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}
