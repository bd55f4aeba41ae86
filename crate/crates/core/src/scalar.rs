//! Scalar abstraction shared by every numerical module.

use std::fmt;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Real floating-point type the solvers are generic over.
///
/// Implemented for `f32` and `f64`.
pub trait Real:
    Float
    + FloatConst
    + FftNum
    + FromPrimitive
    + Default
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Machine epsilon scaled to a loose relative tolerance for series truncation.
    fn series_eps() -> Self {
        Self::epsilon() * lit(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable")
}

/// Converts a `usize` into `T`.
#[inline]
pub fn idx<T: Real>(i: usize) -> T {
    T::from_usize(i).expect("index representable")
}

/// Converts `T` to `f64`.
#[inline]
pub fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `e^{i t}`.
#[inline]
pub fn cis<T: Real>(t: T) -> Complex<T> {
    Complex::new(t.cos(), t.sin())
}

/// Complex unit `i`.
#[inline]
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Real number as a complex value.
#[inline]
pub fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Whether both parts of `z` are finite.
#[inline]
pub fn finite<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
