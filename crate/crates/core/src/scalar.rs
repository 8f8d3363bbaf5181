//! Floating-point scalar abstraction used by the geometric kernel.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Real scalar type for coordinates: `f32` or `f64`.
///
/// `DEGENERACY_TOL` is the absolute threshold below which an orientation
/// determinant or a height gap is treated as degenerate.
pub trait Real:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    const DEGENERACY_TOL: Self;

    #[inline]
    fn lit(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("literal representable")
    }
}

impl Real for f64 {
    const DEGENERACY_TOL: f64 = 1e-12;
}

// single precision carries ~7 digits, so the guard has to be far coarser
impl Real for f32 {
    const DEGENERACY_TOL: f32 = 1e-5;
}
