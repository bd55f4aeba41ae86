//! Uniform grids, sampled fields and their spectral counterparts.
//!
//! The physical box is `[-L, L)^2` sampled at `x_j = -L + j h`, `h = 2L/n`.
//! Spectral fields live on the centered lattice `xi_m = (pi/L) m`,
//! `m in [-n/2, n/2)`. Values are stored row-major with the second
//! coordinate as the slow index.

mod fft;
mod interp;
pub mod io;
mod norms;
mod window;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{finite, idx, lit, Real};

pub use fft::{fft_forward, fft_inverse, Fft2};
pub use interp::bicubic;
pub use norms::{
    norm_l2, norm_l2_spectral, norm_sup, radial_profile, sobolev_tail_exponent, norm_lp_weighted,
    TailFit,
};
pub use window::{erfc_window, interior_window, spectral_derivatives};

/// Sampling layout shared by a family of fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    n: usize,
    half_width: T,
    support_radius: T,
}

impl<T: Real> GridSpec<T> {
    /// Validates `n` (power of two, at least 16), `L > 0` and `0 < R < L/2`.
    pub fn new(n: usize, half_width: T, support_radius: T) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 16")));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        if !(support_radius > T::zero()) || !(support_radius < half_width * lit(0.5)) {
            return Err(Error::InvalidGrid(format!(
                "support radius {support_radius} must lie in (0, L/2) with L = {half_width}"
            )));
        }
        Ok(Self { n, half_width, support_radius })
    }

    /// Same spacing and support, `n` points. Used for padded work lattices.
    pub fn with_points(&self, n: usize) -> Result<Self> {
        let h = self.spacing();
        let half = h * idx::<T>(n) * lit(0.5);
        Self::new(n, half, self.support_radius)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn support_radius(&self) -> T {
        self.support_radius
    }

    pub fn spacing(&self) -> T {
        lit::<T>(2.0) * self.half_width / idx(self.n)
    }

    /// Spacing of the spectral lattice, `pi / L`.
    pub fn spectral_spacing(&self) -> T {
        T::PI() / self.half_width
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Coordinate of grid index `j` along either axis.
    #[inline]
    pub fn coord(&self, j: usize) -> T {
        -self.half_width + idx::<T>(j) * self.spacing()
    }

    /// Physical point of linear index `k`.
    #[inline]
    pub fn point(&self, k: usize) -> [T; 2] {
        [self.coord(k % self.n), self.coord(k / self.n)]
    }

    /// Integer frequency of spectral index `k` along an axis.
    #[inline]
    pub fn mode(&self, k: usize) -> i64 {
        k as i64 - (self.n / 2) as i64
    }

    /// Frequency of spectral index `k` along either axis.
    #[inline]
    pub fn frequency(&self, k: usize) -> T {
        lit::<T>(self.mode(k) as f64) * self.spectral_spacing()
    }

    /// Frequency vector of linear spectral index `k`.
    #[inline]
    pub fn xi(&self, k: usize) -> [T; 2] {
        [self.frequency(k % self.n), self.frequency(k / self.n)]
    }

    /// Index of the grid point at the origin along an axis.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Whether two grids describe the same layout.
    pub fn same_layout(&self, other: &Self) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }
}

/// Complex samples on a physical grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    grid: GridSpec<T>,
    data: Vec<Complex<T>>,
}

/// Complex samples on the centered spectral lattice of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T> {
    grid: GridSpec<T>,
    data: Vec<Complex<T>>,
}

macro_rules! field_common {
    ($ty:ident, $pt:ident) => {
        impl<T: Real> $ty<T> {
            pub fn zeros(grid: GridSpec<T>) -> Self {
                Self { grid, data: vec![Complex::new(T::zero(), T::zero()); grid.len()] }
            }

            /// Builds a field from raw samples, rejecting wrong lengths and non-finite values.
            pub fn from_vec(grid: GridSpec<T>, data: Vec<Complex<T>>) -> Result<Self> {
                if data.len() != grid.len() {
                    return Err(Error::InvalidGrid(format!(
                        "expected {} samples, got {}",
                        grid.len(),
                        data.len()
                    )));
                }
                let f = Self { grid, data };
                f.check_finite()?;
                Ok(f)
            }

            /// Samples `f` at every point.
            pub fn from_fn(grid: GridSpec<T>, mut f: impl FnMut([T; 2]) -> Complex<T>) -> Self {
                let data = (0..grid.len()).map(|k| f(grid.$pt(k))).collect();
                Self { grid, data }
            }

            pub fn grid(&self) -> &GridSpec<T> {
                &self.grid
            }

            pub fn values(&self) -> &[Complex<T>] {
                &self.data
            }

            pub fn values_mut(&mut self) -> &mut [Complex<T>] {
                &mut self.data
            }

            pub fn into_values(self) -> Vec<Complex<T>> {
                self.data
            }

            #[inline]
            pub fn at(&self, i1: usize, i2: usize) -> Complex<T> {
                self.data[i2 * self.grid.n() + i1]
            }

            pub fn check_finite(&self) -> Result<()> {
                if self.data.iter().all(|&z| finite(z)) {
                    Ok(())
                } else {
                    Err(Error::NonFinite(stringify!($ty).to_string()))
                }
            }

            fn same_grid(&self, other: &Self) -> Result<()> {
                if self.grid.same_layout(&other.grid) {
                    Ok(())
                } else {
                    Err(Error::GridMismatch)
                }
            }

            /// Pointwise combination of two fields on the same grid.
            pub fn zip_with(
                &self,
                other: &Self,
                mut op: impl FnMut(Complex<T>, Complex<T>) -> Complex<T>,
            ) -> Result<Self> {
                self.same_grid(other)?;
                let data = self.data.iter().zip(&other.data).map(|(&a, &b)| op(a, b)).collect();
                Ok(Self { grid: self.grid, data })
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a + b)
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a - b)
            }

            pub fn mul(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a * b)
            }

            pub fn scale(&self, s: Complex<T>) -> Self {
                self.map(|z| z * s)
            }

            pub fn map(&self, mut op: impl FnMut(Complex<T>) -> Complex<T>) -> Self {
                Self { grid: self.grid, data: self.data.iter().map(|&z| op(z)).collect() }
            }

            /// Pointwise map that also sees the sample location.
            pub fn map_with_point(
                &self,
                mut op: impl FnMut([T; 2], Complex<T>) -> Complex<T>,
            ) -> Self {
                let g = self.grid;
                let data = self.data.iter().enumerate().map(|(k, &z)| op(g.$pt(k), z)).collect();
                Self { grid: g, data }
            }

            pub fn conj(&self) -> Self {
                self.map(|z| z.conj())
            }

            pub fn max_abs(&self) -> T {
                self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
            }
        }
    };
}

field_common!(ScalarField, point);
field_common!(SpectralField, xi);

impl<T: Real> ScalarField<T> {
    /// L2 mass (squared, times h^2) outside the support disk.
    pub fn mass_outside_support(&self) -> T {
        let g = self.grid;
        let r2 = g.support_radius() * g.support_radius();
        let h2 = g.spacing() * g.spacing();
        self.data
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let [a, b] = g.point(*k);
                a * a + b * b > r2
            })
            .fold(T::zero(), |s, (_, z)| s + z.norm_sqr() * h2)
    }

    /// Fails with `SupportViolation` if the mass outside the support exceeds `tol`.
    pub fn check_support(&self, tol: T) -> Result<()> {
        let mass = self.mass_outside_support().sqrt();
        if mass > tol {
            Err(Error::SupportViolation {
                radius: crate::scalar::f64_of(self.grid.support_radius()),
                mass: crate::scalar::f64_of(mass),
            })
        } else {
            Ok(())
        }
    }

    /// Copy with everything outside the disk of radius `r` set to zero.
    pub fn restrict_to_disk(&self, r: T) -> Self {
        let r2 = r * r;
        self.map_with_point(|[a, b], z| if a * a + b * b <= r2 { z } else { Complex::new(T::zero(), T::zero()) })
    }

    /// `h^2 * sum f`, the Riemann sum of the field.
    pub fn integral(&self) -> Complex<T> {
        let h2 = self.grid.spacing() * self.grid.spacing();
        self.data.iter().fold(Complex::new(T::zero(), T::zero()), |s, &z| s + z) * h2
    }

    /// Zero-extends onto a larger grid with the same spacing and centre.
    pub fn embed(&self, big: &GridSpec<T>) -> Result<Self> {
        let n = self.grid.n();
        let m = big.n();
        if m < n || (big.spacing() - self.grid.spacing()).abs() > self.grid.spacing() * lit(1e-12) {
            return Err(Error::GridMismatch);
        }
        let off = (m - n) / 2;
        let mut out = ScalarField::zeros(*big);
        for i2 in 0..n {
            let src = &self.data[i2 * n..(i2 + 1) * n];
            let start = (i2 + off) * m + off;
            out.data[start..start + n].copy_from_slice(src);
        }
        Ok(out)
    }

    /// Central window of a larger grid with the same spacing and centre.
    pub fn crop(&self, small: &GridSpec<T>) -> Result<Self> {
        let n = small.n();
        let m = self.grid.n();
        if m < n || (small.spacing() - self.grid.spacing()).abs() > small.spacing() * lit(1e-12) {
            return Err(Error::GridMismatch);
        }
        let off = (m - n) / 2;
        let mut out = ScalarField::zeros(*small);
        for i2 in 0..n {
            let start = (i2 + off) * m + off;
            out.data[i2 * n..(i2 + 1) * n].copy_from_slice(&self.data[start..start + n]);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::<f64>::new(64, 4.0, 1.0).is_ok());
        assert!(GridSpec::<f64>::new(60, 4.0, 1.0).is_err());
        assert!(GridSpec::<f64>::new(64, 4.0, 2.0).is_err());
        assert!(GridSpec::<f64>::new(64, -1.0, 0.1).is_err());
    }

    #[test]
    fn origin_is_a_grid_point() {
        let g = GridSpec::<f64>::new(32, 3.0, 1.0).unwrap();
        assert_eq!(g.coord(g.origin_index()), 0.0);
        assert_eq!(g.frequency(g.origin_index()), 0.0);
    }

    #[test]
    fn embed_then_crop_roundtrips() {
        let g = GridSpec::<f64>::new(16, 2.0, 0.5).unwrap();
        let f = ScalarField::from_fn(g, |[a, b]| Complex::new(a, b * a));
        let big = g.with_points(64).unwrap();
        let e = f.embed(&big).unwrap();
        assert_eq!(e.crop(&g).unwrap(), f);
        assert_eq!(e.integral(), f.integral());
    }

    #[test]
    fn support_violation_detected() {
        let g = GridSpec::<f64>::new(32, 4.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |[a, _]| Complex::new(if a > 1.5 { 1.0 } else { 0.0 }, 0.0));
        assert!(matches!(f.check_support(1e-9), Err(Error::SupportViolation { .. })));
        assert!(f.restrict_to_disk(1.0).check_support(1e-12).is_ok());
    }

    #[test]
    fn nonfinite_rejected() {
        let g = GridSpec::<f64>::new(16, 1.0, 0.2).unwrap();
        let mut v = vec![Complex::new(0.0, 0.0); 256];
        v[3] = Complex::new(f64::NAN, 0.0);
        assert!(ScalarField::from_vec(g, v).is_err());
    }
}
