use num_complex::Complex;

use super::{Fft2, ScalarField};
use crate::scalar::{f64_of, lit, Real};

/// `erfc((r - centre) / width) / 2`: one near the origin, zero far out, Gaussian-smooth.
pub fn erfc_window<T: Real>(r: T, centre: T, width: T) -> T {
    lit(0.5 * libm::erfc(f64_of((r - centre) / width)))
}

/// Compactly supported smooth cutoff: one for `r <= inner`, zero for `r >= outer`.
pub fn interior_window<T: Real>(r: T, inner: T, outer: T) -> T {
    if r <= inner {
        return T::one();
    }
    if r >= outer {
        return T::zero();
    }
    let t = (r - inner) / (outer - inner);
    let a = (-T::one() / t).exp();
    let b = (-T::one() / (T::one() - t)).exp();
    b / (a + b)
}

/// `(d1 f, d2 f)` by spectral differentiation on the periodic box.
///
/// The highest (unpaired) mode is dropped.
pub fn spectral_derivatives<T: Real>(f: &ScalarField<T>) -> (ScalarField<T>, ScalarField<T>) {
    let g = *f.grid();
    let n = g.n();
    let fft = Fft2::new(n);
    let mut spec = f.values().to_vec();
    fft.to_spectral(g.spacing(), &mut spec);
    let mut d1 = spec.clone();
    let mut d2 = spec;
    for k in 0..g.len() {
        let (k1, k2) = (k % n, k / n);
        // F(d_j f) = -i xi_j F f
        let w1 = if k1 == 0 { T::zero() } else { g.frequency(k1) };
        let w2 = if k2 == 0 { T::zero() } else { g.frequency(k2) };
        d1[k] = d1[k] * Complex::new(T::zero(), -w1);
        d2[k] = d2[k] * Complex::new(T::zero(), -w2);
    }
    fft.to_physical(g.half_width(), &mut d1);
    fft.to_physical(g.half_width(), &mut d2);
    (
        ScalarField::from_vec(g, d1).expect("finite derivative"),
        ScalarField::from_vec(g, d2).expect("finite derivative"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    #[test]
    fn windows_have_expected_limits() {
        assert!((erfc_window(0.0f64, 5.0, 0.5) - 1.0).abs() < 1e-15);
        assert!(erfc_window(10.0, 5.0, 0.5) < 1e-15);
        assert_eq!(erfc_window(5.0, 5.0, 0.5), 0.5);
        assert_eq!(interior_window(0.5, 1.0, 2.0), 1.0);
        assert_eq!(interior_window(2.5, 1.0, 2.0), 0.0);
        assert!((interior_window(1.5f64, 1.0, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_gaussian() {
        let g = GridSpec::<f64>::new(64, 6.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |[a, b]| Complex::new((-(a * a + b * b)).exp(), 0.0));
        let (d1, d2) = spectral_derivatives(&f);
        for k in 0..g.len() {
            let [a, b] = g.point(k);
            let e = (-(a * a + b * b)).exp();
            assert!((d1.values()[k].re + 2.0 * a * e).abs() < 1e-10);
            assert!((d2.values()[k].re + 2.0 * b * e).abs() < 1e-10);
        }
    }
}
