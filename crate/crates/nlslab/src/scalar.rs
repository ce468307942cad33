//! Scalar abstraction: the numerical core is generic over the real field.
//!
//! Everything downstream works over any [`Real`] (`f32` or `f64`); the
//! concrete aliases used by the CLI and the test suite live at the crate
//! root. Complex arithmetic comes from [`num_complex::Complex`].

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point field for the numerical core.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal conversion")
    }

    /// Lossy conversion to `f64` for reporting and serialization.
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

/// Complex number over the generic real field.
pub type Cplx<R> = Complex<R>;

/// `f64` literal lifted into the generic field.
#[inline]
pub fn r<R: Real>(x: f64) -> R {
    R::of(x)
}

/// Purely imaginary unit.
#[inline]
pub fn i<R: Real>() -> Cplx<R> {
    Cplx::new(R::zero(), R::one())
}

/// Real number lifted into the complex field.
#[inline]
pub fn cr<R: Real>(x: R) -> Cplx<R> {
    Cplx::new(x, R::zero())
}
