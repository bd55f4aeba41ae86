use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{ScalarField, SpectralField};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Planned square 2-D FFT of side `n`.
#[derive(Clone)]
pub struct Fft2<T: Real> {
    n: usize,
    plus: Arc<dyn Fft<T>>,
    minus: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl<T: Real> Fft2<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, plus: planner.plan_fft_inverse(n), minus: planner.plan_fft_forward(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transpose(&self, data: &mut [Complex<T>]) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                data.swap(i * n + j, j * n + i);
            }
        }
    }

    fn run(&self, plan: &Arc<dyn Fft<T>>, data: &mut [Complex<T>]) {
        assert_eq!(data.len(), self.n * self.n, "buffer does not match the plan");
        plan.process(data);
        self.transpose(data);
        plan.process(data);
        self.transpose(data);
    }

    /// Unnormalized sum with kernel `e^{+2 pi i k j / n}`.
    pub fn plus(&self, data: &mut [Complex<T>]) {
        self.run(&self.plus, data);
    }

    /// Unnormalized sum with kernel `e^{-2 pi i k j / n}`.
    pub fn minus(&self, data: &mut [Complex<T>]) {
        self.run(&self.minus, data);
    }

    fn checkerboard(&self, data: &mut [Complex<T>], s: T) {
        let n = self.n;
        for (k, z) in data.iter_mut().enumerate() {
            let sign = if ((k % n) + (k / n)) % 2 == 0 { s } else { -s };
            *z = *z * sign;
        }
    }

    /// Physical samples with spacing `h` to centered spectral samples, in place.
    pub fn to_spectral(&self, h: T, data: &mut [Complex<T>]) {
        self.checkerboard(data, T::one());
        self.plus(data);
        self.checkerboard(data, h * h);
    }

    /// Centered spectral samples back to physical samples on a box of half width `half`.
    pub fn to_physical(&self, half: T, data: &mut [Complex<T>]) {
        self.checkerboard(data, T::one());
        self.minus(data);
        self.checkerboard(data, T::one() / (lit::<T>(4.0) * half * half));
    }
}

/// Fourier transform `F f(xi) = int e^{i x.xi} f(x) dx` sampled on the centered lattice.
pub fn fft_forward<T: Real>(f: &ScalarField<T>) -> Result<SpectralField<T>> {
    f.check_finite()?;
    let g = *f.grid();
    let mut data = f.values().to_vec();
    Fft2::new(g.n()).to_spectral(g.spacing(), &mut data);
    SpectralField::from_vec(g, data)
}

/// Inverse transform with the `1/(4 pi^2)` normalization. Exact inverse of `fft_forward`.
pub fn fft_inverse<T: Real>(f: &SpectralField<T>) -> Result<ScalarField<T>> {
    f.check_finite()?;
    let g = *f.grid();
    let mut data = f.values().to_vec();
    Fft2::new(g.n()).to_physical(g.half_width(), &mut data);
    ScalarField::from_vec(g, data).map_err(|e| match e {
        Error::NonFinite(_) => Error::NonFinite("inverse transform".into()),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use crate::scalar::cis;

    fn direct_transform(f: &ScalarField<f64>) -> SpectralField<f64> {
        let g = *f.grid();
        let h2 = g.spacing() * g.spacing();
        SpectralField::from_fn(g, |xi| {
            let mut s = Complex::new(0.0, 0.0);
            for (k, &v) in f.values().iter().enumerate() {
                let x = g.point(k);
                s += v * cis(x[0] * xi[0] + x[1] * xi[1]);
            }
            s * h2
        })
    }

    #[test]
    fn matches_direct_sum() {
        let g = GridSpec::<f64>::new(16, 2.5, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |[a, b]| Complex::new((-a * a - 2.0 * b * b).exp(), a * 0.3));
        let fast = fft_forward(&f).unwrap();
        let slow = direct_transform(&f);
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_is_exact() {
        let g = GridSpec::<f64>::new(32, 3.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |[a, b]| Complex::new(a.sin() * b, (a * b).cos()));
        let back = fft_inverse(&fft_forward(&f).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        // F exp(-|x|^2) = pi exp(-|xi|^2 / 4)
        let g = GridSpec::<f64>::new(64, 8.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |[a, b]| Complex::new((-(a * a + b * b)).exp(), 0.0));
        let s = fft_forward(&f).unwrap();
        for (k, v) in s.values().iter().enumerate() {
            let [p, q] = g.xi(k);
            let exact = std::f64::consts::PI * (-(p * p + q * q) / 4.0).exp();
            assert!((v.re - exact).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }
}
