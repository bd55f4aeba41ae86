//! Bessel functions of order zero and the outgoing Hankel function.
//!
//! Small arguments use the ascending power series, large ones the
//! Hankel asymptotic expansion. Both agree to about 1e-11 at the seam.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Argument where evaluation switches from the power series to the asymptotic expansion.
pub const SERIES_SEAM: f64 = 12.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `(J0(r), Y0(r))` from the ascending series. Requires `r > 0`.
fn series_j0_y0<T: Real>(r: T) -> (T, T) {
    let q = r * r * lit(0.25);
    let mut term = T::one();
    let mut j0 = T::one();
    let mut harmonic = T::zero();
    let mut tail = T::zero();
    let mut k = 1usize;
    loop {
        let kt: T = lit(k as f64);
        term = -term * q / (kt * kt);
        harmonic = harmonic + T::one() / kt;
        j0 = j0 + term;
        tail = tail + harmonic * term;
        if term.abs() * (T::one() + harmonic) < T::series_eps() && kt > r {
            break;
        }
        k += 1;
        if k > 400 {
            break;
        }
    }
    let y0 = lit::<T>(2.0) / T::PI() * (((r * lit(0.5)).ln() + lit(EULER_GAMMA)) * j0 - tail);
    (j0, y0)
}

/// `H0^(1)(r)` from the asymptotic expansion. Accurate for `r >= SERIES_SEAM`.
fn asymptotic_h0<T: Real>(r: T) -> Complex<T> {
    let mut coef = T::one();
    let mut sum = Complex::new(T::one(), T::zero());
    // i^k cycles through 1, i, -1, -i
    let mut phase = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let mut last = T::infinity();
    for k in 1..200usize {
        let kt: T = lit(k as f64);
        let odd = lit::<T>(2.0) * kt - T::one();
        coef = -coef * odd * odd / (lit::<T>(8.0) * kt * r);
        phase = phase * i;
        let mag = coef.abs();
        if mag > last {
            break;
        }
        sum = sum + phase * coef;
        last = mag;
        if mag < T::series_eps() {
            break;
        }
    }
    let amp = (lit::<T>(2.0) / (T::PI() * r)).sqrt();
    let arg = r - T::FRAC_PI_4();
    sum * Complex::new(arg.cos(), arg.sin()) * amp
}

/// Bessel function of the first kind, order zero. Defined for every real argument.
pub fn bessel_j0<T: Real>(r: T) -> T {
    let r = r.abs();
    if r < lit(SERIES_SEAM) {
        if r == T::zero() {
            return T::one();
        }
        series_j0_y0(r).0
    } else {
        asymptotic_h0(r).re
    }
}

/// Bessel function of the second kind, order zero, for `r > 0`.
pub fn bessel_y0<T: Real>(r: T) -> Result<T> {
    Ok(hankel1_0(r)?.im)
}

/// Outgoing Hankel function `H0^(1)(r) = J0(r) + i Y0(r)` for real `r > 0`.
pub fn hankel1_0<T: Real>(r: T) -> Result<Complex<T>> {
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::UnsupportedRegion(format!(
            "Hankel function needs a finite positive argument, got {r}"
        )));
    }
    if r < lit(SERIES_SEAM) {
        let (j, y) = series_j0_y0(r);
        Ok(Complex::new(j, y))
    } else {
        Ok(asymptotic_h0(r))
    }
}
