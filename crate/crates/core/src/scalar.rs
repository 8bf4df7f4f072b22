//! Scalar abstraction for the numerical core.

use nalgebra::RealField;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by every numerical routine in this crate.
///
/// Implemented for `f32` and `f64`. Model files always store `f64`;
/// conversion happens at the serialization boundary.
pub trait Scalar:
    RealField + Float + FromPrimitive + ToPrimitive + Copy + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` for constants and file I/O.
    fn from_f64_c(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 converts")
    }

    fn to_f64_c(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("scalar converts to f64")
    }

    /// Logistic sigmoid, the hidden-layer nonlinearity.
    fn sigmoid(self) -> Self {
        let one = <Self as num_traits::One>::one();
        one / (one + Float::exp(-self))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_at_zero_is_half() {
        assert_eq!(0.0f64.sigmoid(), 0.5);
        assert_eq!(0.0f32.sigmoid(), 0.5);
    }

    #[test]
    fn sigmoid_stays_in_open_unit_interval() {
        // f64 saturates to exactly 1.0 for large z, so the upper bound is
        // inclusive.
        for z in [-50.0, -3.0, -0.1, 0.2, 4.0, 50.0f64] {
            let s = z.sigmoid();
            assert!(s > 0.0 && s <= 1.0, "sigmoid({z}) = {s}");
        }
    }
}
