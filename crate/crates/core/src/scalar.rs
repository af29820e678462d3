//! Scalar abstraction shared by the covariance-path numerics.

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive};

/// Real floating-point scalar usable throughout the covariance path.
///
/// Implemented for `f32` and `f64`. Tolerances quoted in this crate are
/// tuned for `f64`; `f32` runs are useful for smoke tests only.
pub trait Real: RealField + Copy + FromPrimitive + FloatConst {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable literal")
    }

    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// `|z|` for a complex number over a generic real field.
#[inline]
pub fn modulus<T: Real>(z: num_complex::Complex<T>) -> T {
    z.re.hypot(z.im)
}
