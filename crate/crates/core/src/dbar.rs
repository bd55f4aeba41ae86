//! Inverses of the Cauchy–Riemann operators and related multipliers.
//!
//! Points are identified with complex numbers `x = x1 + i x2`, with
//! `dbar = (d1 + i d2)/2` and `d = (d1 - i d2)/2`. The Cauchy transform
//! `C f = f * 1/(pi z)` inverts `dbar`, its conjugate `A f = f * 1/(pi zbar)`
//! inverts `d`, and the Beurling transform `S = d dbar^{-1}` has symbol
//! `conj(xi_c)/xi_c`.
//!
//! Two discretizations of `C` are offered. [`cauchy_transform`] convolves
//! with the sampled kernel on a doubled grid and works for any data on the
//! box. [`TruncatedConvolver`] convolves with the kernel cut off at a
//! finite radius, whose transform is known in closed form; this is
//! spectrally accurate for smooth data of compact support.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::{spectral_derivatives, Fft2, GridSpec, ScalarField};
use crate::scalar::{cis, idx, lit, Real};
use crate::special::bessel_j0;

/// Direction of a modulation `e^{± i x.xi}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// `e^{± i x.xi} f`.
pub fn modulate<T: Real>(f: &ScalarField<T>, xi: [T; 2], sign: Sign) -> ScalarField<T> {
    let s = match sign {
        Sign::Plus => T::one(),
        Sign::Minus => -T::one(),
    };
    f.map_with_point(|[a, b], v| v * cis(s * (a * xi[0] + b * xi[1])))
}

/// Cauchy transform with the sampled kernel `1/(pi z)` on a doubled grid.
///
/// The kernel is zero at the origin; the four nearest neighbours carry a
/// 5/4 weight, which cancels the leading quadrature error for smooth data.
pub fn cauchy_transform<T: Real>(f: &ScalarField<T>) -> Result<ScalarField<T>> {
    f.check_finite()?;
    let g = *f.grid();
    let n = g.n();
    let m = 2 * n;
    let h = g.spacing();
    let fft = Fft2::new(m);

    let mut kernel = vec![Complex::new(T::zero(), T::zero()); m * m];
    let near: T = lit(1.25);
    for k2 in 0..m {
        let d2 = if k2 < n { k2 as i64 } else { k2 as i64 - m as i64 };
        for k1 in 0..m {
            let d1 = if k1 < n { k1 as i64 } else { k1 as i64 - m as i64 };
            if d1 == 0 && d2 == 0 {
                continue;
            }
            let z = Complex::new(lit::<T>(d1 as f64), lit::<T>(d2 as f64)) * (h * T::PI());
            let mut v = z.inv();
            if d1.abs() + d2.abs() == 1 {
                v = v * near;
            }
            kernel[k2 * m + k1] = v;
        }
    }
    fft.minus(&mut kernel);

    let mut data = vec![Complex::new(T::zero(), T::zero()); m * m];
    for i2 in 0..n {
        data[i2 * m..i2 * m + n].copy_from_slice(&f.values()[i2 * n..(i2 + 1) * n]);
    }
    fft.minus(&mut data);
    let scale = h * h / idx::<T>(m * m);
    for (d, k) in data.iter_mut().zip(&kernel) {
        *d = *d * *k * scale;
    }
    fft.plus(&mut data);
    let mut out = ScalarField::zeros(g);
    for i2 in 0..n {
        out.values_mut()[i2 * n..(i2 + 1) * n].copy_from_slice(&data[i2 * m..i2 * m + n]);
    }
    out.check_finite()?;
    Ok(out)
}

/// Conjugate Cauchy transform `A f = conj(C conj f)`, inverting `d`.
pub fn anticauchy_transform<T: Real>(f: &ScalarField<T>) -> Result<ScalarField<T>> {
    Ok(cauchy_transform(&f.conj())?.conj())
}

/// Beurling multiplier `conj(xi_c)/xi_c`, zero at the origin.
#[inline]
pub fn beurling_symbol<T: Real>(xi: [T; 2]) -> Complex<T> {
    let c = Complex::new(xi[0], xi[1]);
    if c.norm_sqr() == T::zero() {
        Complex::new(T::zero(), T::zero())
    } else {
        c.conj() / c
    }
}

/// Beurling transform applied spectrally on the periodic box.
///
/// An exact isometry on mean-free data.
pub fn beurling_transform<T: Real>(f: &ScalarField<T>) -> Result<ScalarField<T>> {
    f.check_finite()?;
    let g = *f.grid();
    let fft = Fft2::new(g.n());
    let mut data = f.values().to_vec();
    fft.to_spectral(g.spacing(), &mut data);
    for (k, d) in data.iter_mut().enumerate() {
        *d = *d * beurling_symbol(g.xi(k));
    }
    fft.to_physical(g.half_width(), &mut data);
    ScalarField::from_vec(g, data)
}

/// `dbar f` and `d f` by spectral differentiation on the periodic box.
pub fn dbar_and_d<T: Real>(f: &ScalarField<T>) -> (ScalarField<T>, ScalarField<T>) {
    let (d1, d2) = spectral_derivatives(f);
    let half: T = lit(0.5);
    let i = Complex::new(T::zero(), T::one());
    let db = d1.zip_with(&d2, |a, b| (a + i * b) * half).expect("same grid");
    let d = d1.zip_with(&d2, |a, b| (a - i * b) * half).expect("same grid");
    (db, d)
}

/// Transform of `1_{|y|<t} / (pi y_c)` at `eta`: `(1 - J0(t|eta|)) 2i/(eta_1 + i eta_2)`.
#[inline]
pub fn truncated_cauchy_symbol<T: Real>(eta: [T; 2], t: T) -> Complex<T> {
    let c = Complex::new(eta[0], eta[1]);
    let r = c.norm();
    if r == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let two_i = Complex::new(T::zero(), lit(2.0));
    two_i * (T::one() - bessel_j0(t * r)) / c
}

/// Transform of `1_{|y|<t} / (pi conj(y_c))` at `eta`.
#[inline]
pub fn truncated_anticauchy_symbol<T: Real>(eta: [T; 2], t: T) -> Complex<T> {
    let c = Complex::new(eta[0], -eta[1]);
    let r = c.norm();
    if r == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let two_i = Complex::new(T::zero(), lit(2.0));
    two_i * (T::one() - bessel_j0(t * r)) / c
}

/// Which Cauchy-type kernel a [`TruncatedConvolver`] applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    /// `1/(pi z)`, inverting `dbar`.
    Cauchy,
    /// `1/(pi zbar)`, inverting `d`.
    AntiCauchy,
}

/// Spectral convolution with a radially truncated Cauchy kernel on a padded lattice.
///
/// For data supported in `|x| <= source` the result equals the whole-plane
/// transform on `|x| <= target`, up to the resolution of the data.
#[derive(Clone, Debug)]
pub struct TruncatedConvolver<T: Real> {
    lattice: GridSpec<T>,
    fft: Fft2<T>,
    symbol: Vec<Complex<T>>,
}

/// Smallest power-of-two lattice size with period at least `period` and at least `n` points.
pub fn padded_size<T: Real>(n: usize, spacing: T, period: T, limit: usize) -> Result<usize> {
    let need = (period / spacing).ceil().to_usize().unwrap_or(usize::MAX);
    let size = need.max(n).next_power_of_two();
    if size > limit {
        Err(Error::TooLarge(size))
    } else {
        Ok(size)
    }
}

impl<T: Real> TruncatedConvolver<T> {
    /// Plans a convolution on a lattice with the spacing of `grid`.
    ///
    /// `shift` evaluates the symbol at `eta - shift`, which convolves with
    /// `e^{-i y.shift}` times the kernel.
    pub fn new(
        grid: &GridSpec<T>,
        kernel: Kernel,
        source: T,
        target: T,
        shift: [T; 2],
        limit: usize,
    ) -> Result<Self> {
        if !(source > T::zero()) || !(target > T::zero()) {
            return Err(Error::InvalidArgument("radii must be positive".into()));
        }
        let h = grid.spacing();
        let period = lit::<T>(2.0) * (source + target) + lit::<T>(4.0) * h;
        let m = padded_size(grid.n(), h, period, limit)?;
        Ok(Self::on_lattice(grid.with_points(m)?, kernel, source + target, shift))
    }

    /// Plans on a given lattice with truncation radius `radius`.
    ///
    /// Exact for data in `|x| <= s` on `|x| <= t` whenever `s + t <= radius`
    /// and the lattice period exceeds `s + t + radius`.
    pub fn on_lattice(lattice: GridSpec<T>, kernel: Kernel, radius: T, shift: [T; 2]) -> Self {
        let symbol = (0..lattice.len())
            .map(|k| {
                let [p, q] = lattice.xi(k);
                let eta = [p - shift[0], q - shift[1]];
                match kernel {
                    Kernel::Cauchy => truncated_cauchy_symbol(eta, radius),
                    Kernel::AntiCauchy => truncated_anticauchy_symbol(eta, radius),
                }
            })
            .collect();
        Self { lattice, fft: Fft2::new(lattice.n()), symbol }
    }

    pub fn lattice(&self) -> &GridSpec<T> {
        &self.lattice
    }

    /// Convolves a field living on the padded lattice, in place.
    pub fn apply_padded(&self, data: &mut [Complex<T>]) {
        let l = &self.lattice;
        self.fft.to_spectral(l.spacing(), data);
        for (d, s) in data.iter_mut().zip(&self.symbol) {
            *d = *d * *s;
        }
        self.fft.to_physical(l.half_width(), data);
    }

    /// Convolves a field on a smaller grid with the same spacing; the result is cropped back.
    pub fn apply(&self, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        let mut big = f.embed(&self.lattice)?.into_values();
        self.apply_padded(&mut big);
        ScalarField::from_vec(self.lattice, big)?.crop(f.grid())
    }
}

/// Spectrally accurate Cauchy transform of smooth data supported in the grid's support disk.
///
/// Accurate on `|x| <= target`; values beyond that are not meaningful.
pub fn cauchy_transform_truncated<T: Real>(f: &ScalarField<T>, target: T) -> Result<ScalarField<T>> {
    let g = f.grid();
    let conv = TruncatedConvolver::new(g, Kernel::Cauchy, g.support_radius(), target, [T::zero(); 2], 1 << 13)?;
    conv.apply(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{interior_window, norm_l2};

    fn bump(g: GridSpec<f64>, r0: f64) -> ScalarField<f64> {
        ScalarField::from_fn(g, |[a, b]| {
            let t = (a * a + b * b) / (r0 * r0);
            let v = if t < 1.0 { (1.0 - 1.0 / (1.0 - t)).exp() } else { 0.0 };
            Complex::new(v * (1.0 + 0.3 * a), 0.2 * v * b)
        })
    }

    fn disk(g: GridSpec<f64>, r: f64) -> ScalarField<f64> {
        let h = g.spacing();
        ScalarField::from_fn(g, |[a, b]| {
            let s = 16;
            let mut c = 0;
            for p in 0..s {
                for q in 0..s {
                    let x = a + h * ((p as f64 + 0.5) / s as f64 - 0.5);
                    let y = b + h * ((q as f64 + 0.5) / s as f64 - 0.5);
                    if x * x + y * y < r * r {
                        c += 1;
                    }
                }
            }
            Complex::new(c as f64 / (s * s) as f64, 0.0)
        })
    }

    #[test]
    fn cauchy_of_disk_matches_closed_form() {
        let r = 1.0;
        let g = GridSpec::<f64>::new(512, 4.0, 1.5).unwrap();
        let u = cauchy_transform(&disk(g, r)).unwrap();
        let h = g.spacing();
        let mut worst = 0.0f64;
        for k in 0..g.len() {
            let [a, b] = g.point(k);
            let rho = (a * a + b * b).sqrt();
            if (rho - r).abs() < 2.0 * h || a.abs() > 2.0 || b.abs() > 2.0 {
                continue;
            }
            let z = Complex::new(a, b);
            let exact = if rho < r { z.conj() } else { z.inv() };
            worst = worst.max((u.values()[k] - exact).norm());
        }
        assert!(worst < 1e-3, "worst {worst:e}");
    }

    #[test]
    fn gaussian_cauchy_is_fourth_order() {
        // C exp(-4|x|^2) = (1 - exp(-4|x|^2)) / (4 z)
        let err = |n: usize| {
            let g = GridSpec::<f64>::new(n, 2.0, 0.9).unwrap();
            let f = ScalarField::from_fn(g, |[a, b]| Complex::new((-4.0 * (a * a + b * b)).exp(), 0.0));
            let u = cauchy_transform(&f).unwrap();
            let exact = ScalarField::from_fn(g, |[a, b]| {
                let r2 = a * a + b * b;
                if r2 == 0.0 {
                    Complex::new(0.0, 0.0)
                } else {
                    Complex::new(1.0 - (-4.0 * r2).exp(), 0.0) / (Complex::new(a, b) * 4.0)
                }
            });
            let d = u.sub(&exact).unwrap().restrict_to_disk(1.0);
            norm_l2(&d) / norm_l2(&exact.restrict_to_disk(1.0))
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e2 < 1e-5 && e1 / e2 > 12.0, "{e1:e} {e2:e}");
    }

    #[test]
    fn dbar_inverts_cauchy_on_bump() {
        let g = GridSpec::<f64>::new(512, 4.0, 1.0).unwrap();
        let f = bump(g, 1.0);
        let u = cauchy_transform(&f).unwrap();
        let w = u.map_with_point(|[a, b], v| v * interior_window((a * a + b * b).sqrt(), 2.0, 3.5));
        let (db, _) = dbar_and_d(&w);
        let d = db.sub(&f).unwrap().restrict_to_disk(1.5);
        let rel = norm_l2(&d) / norm_l2(&f);
        assert!(rel < 1e-4, "{rel:e}");
    }

    #[test]
    fn anticauchy_is_conjugate() {
        let g = GridSpec::<f64>::new(64, 4.0, 1.0).unwrap();
        let f = bump(g, 1.0);
        let a = anticauchy_transform(&f).unwrap();
        let c = cauchy_transform(&f.conj()).unwrap().conj();
        assert_eq!(a, c);
    }

    #[test]
    fn cauchy_decays_like_inverse_distance() {
        let g = GridSpec::<f64>::new(256, 8.0, 1.0).unwrap();
        let f = bump(g, 1.0);
        let u = cauchy_transform(&f).unwrap();
        let o = g.origin_index();
        let step = (2.0 / g.spacing()) as usize;
        let near = u.at(o + step, o).norm();
        let far = u.at(o + 2 * step, o).norm();
        assert!((near / far - 2.0).abs() < 0.2, "{}", near / far);
    }

    #[test]
    fn truncated_scheme_matches_closed_form() {
        let g = GridSpec::<f64>::new(128, 4.0, 1.5).unwrap();
        let f = ScalarField::from_fn(g, |[a, b]| Complex::new((-16.0 * (a * a + b * b)).exp(), 0.0));
        let u = cauchy_transform_truncated(&f, 1.9).unwrap();
        for k in 0..g.len() {
            let [a, b] = g.point(k);
            let r2 = a * a + b * b;
            if r2 == 0.0 || r2 > 1.9 * 1.9 {
                continue;
            }
            let exact = Complex::new(1.0 - (-16.0 * r2).exp(), 0.0) / (Complex::new(a, b) * 16.0);
            assert!((u.values()[k] - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn beurling_is_isometric_on_mean_free_data() {
        let g = GridSpec::<f64>::new(64, 4.0, 1.0).unwrap();
        let f = bump(g, 1.2);
        let mean = f.integral() / (64.0 * 64.0 * g.spacing() * g.spacing());
        let f0 = f.map(|v| v - mean);
        let s = beurling_transform(&f0).unwrap();
        assert!((norm_l2(&s) - norm_l2(&f0)).abs() < 1e-10 * norm_l2(&f0));
    }

    #[test]
    fn modulation_roundtrips() {
        let g = GridSpec::<f64>::new(32, 4.0, 1.0).unwrap();
        let f = bump(g, 1.0);
        let back = modulate(&modulate(&f, [3.0, -2.0], Sign::Plus), [3.0, -2.0], Sign::Minus);
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
