//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point type usable by kernels, posteriors and diagnostics.
///
/// Arithmetic and elementary functions come from [`RealField`]; conversions
/// from the num-traits side.
pub trait Real:
    RealField + Copy + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default
{
    /// Converts an `f64` literal. Panics only for non-representable values,
    /// which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real")
    }

    /// Machine epsilon of the type.
    fn epsilon() -> Self;

    fn is_finite_real(self) -> bool {
        self.as_f64().is_finite()
    }
}

impl Real for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}
