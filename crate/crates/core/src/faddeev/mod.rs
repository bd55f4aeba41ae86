//! Faddeev's Green function `g_z` for `-Delta - 2i(z, grad)` with `(z, z) = 0`.
//!
//! With `z = (xi_1 - i xi_2, xi_2 + i xi_1)/2` and `a = xi_2 + i xi_1` the
//! operator factors as `-4 dbar e^{-ix.xi} d e^{ix.xi}`, so
//!
//! ```text
//! g_z * f = -1/4 e^{-ix.xi} A(e^{ix.xi} C f)
//! ```
//!
//! Both inverses are applied with radially truncated kernels on a padded
//! lattice. The intermediate `C f` decays only like `1/|x|`; it is cut off
//! with a smooth `erfc` window whose width is tied to `1/|xi|`, which the
//! oscillating second kernel turns into a Gaussian-small error.
//!
//! The symbol of the operator is `|eta|^2 - 2(z, eta)`, vanishing at
//! `eta = 0` and `eta = xi`.

mod kernel;
mod multiplier;
mod probe;

use num_complex::Complex;

use crate::dbar::{padded_size, Kernel, TruncatedConvolver};
use crate::error::{Error, Result};
use crate::field::{erfc_window, Fft2, GridSpec, ScalarField};
use crate::scalar::{lit, Real};

pub use kernel::{KernelFactory, SupportBox, SupportKernel};
pub use multiplier::{
    faddeev_convolve_multiplier, gauss_legendre, symbol_zero_collisions, MultiplierOptions,
    MultiplierReport,
};
pub(crate) use probe::loglog_slope;
pub use probe::{estimate_c_gamma, prop1_probe, GammaEstimate, ProbeResult};

/// `z = (xi_1 - i xi_2, xi_2 + i xi_1) / 2`, satisfying `(z, z) = 0` and `|z| = |xi|/sqrt 2`.
pub fn z_from_xi<T: Real>(xi: [T; 2]) -> [Complex<T>; 2] {
    let half: T = lit(0.5);
    [Complex::new(xi[0], -xi[1]) * half, Complex::new(xi[1], xi[0]) * half]
}

/// `a = xi_2 + i xi_1`, the eigenvalue of `2d` on `e^{ix.xi}`.
pub fn a_from_xi<T: Real>(xi: [T; 2]) -> Complex<T> {
    Complex::new(xi[1], xi[0])
}

/// Symbol `|eta|^2 - 2(z, eta)` of `-Delta - 2i(z, grad)` under `F f = int e^{ix.eta} f`.
#[inline]
pub fn faddeev_symbol<T: Real>(eta: [T; 2], xi: [T; 2]) -> Complex<T> {
    let z = z_from_xi(xi);
    let two: T = lit(2.0);
    Complex::new(eta[0] * eta[0] + eta[1] * eta[1], T::zero()) - (z[0] * eta[0] + z[1] * eta[1]) * two
}

pub(crate) fn magnitude<T: Real>(xi: [T; 2]) -> T {
    (xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
}

/// Numerical controls of the factorized route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaddeevOptions<T> {
    /// Window width is `window_scale / |xi|`; the truncation error behaves like
    /// `exp(-window_scale^2 / 4)`.
    pub window_scale: T,
    /// Upper bound on the window width, reached for small `|xi|`.
    pub max_window: T,
    /// Largest admissible padded lattice side.
    pub max_points: usize,
}

impl<T: Real> Default for FaddeevOptions<T> {
    fn default() -> Self {
        Self { window_scale: lit(7.0), max_window: lit(3.0), max_points: 4096 }
    }
}

/// Placement of the smooth cutoff applied to the intermediate Cauchy transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowParams<T> {
    pub width: T,
    pub centre: T,
    /// Radius beyond which the window is negligible.
    pub outer: T,
}

impl<T: Real> WindowParams<T> {
    pub fn new(xi_mag: T, target: T, spacing: T, opts: &FaddeevOptions<T>) -> Self {
        let width = (opts.window_scale / xi_mag).min(opts.max_window).max(spacing * lit(2.0));
        let centre = target + width * lit(6.0);
        Self { width, centre, outer: centre + width * lit(6.5) }
    }

    pub fn at(&self, r: T) -> T {
        erfc_window(r, self.centre, self.width)
    }
}

/// Padded lattice and window shared by the two convolution steps.
pub(crate) fn plan_lattice<T: Real>(
    grid: &GridSpec<T>,
    xi: [T; 2],
    source: T,
    target: T,
    opts: &FaddeevOptions<T>,
) -> Result<(GridSpec<T>, WindowParams<T>)> {
    let mag = magnitude(xi);
    if mag == T::zero() {
        return Err(Error::ZeroParameter);
    }
    let h = grid.spacing();
    let win = WindowParams::new(mag, target, h, opts);
    let period = lit::<T>(2.0) * (win.outer + source.max(target)) + lit::<T>(4.0) * h;
    let m = padded_size(grid.n(), h, period, opts.max_points)?;
    Ok((grid.with_points(m)?, win))
}

/// Factorized evaluation of `g_z * f` for one `xi`, reusable across inputs.
#[derive(Clone, Debug)]
pub struct FactorizedPlan<T: Real> {
    grid: GridSpec<T>,
    xi: [T; 2],
    window: Vec<T>,
    cauchy: TruncatedConvolver<T>,
    anti: TruncatedConvolver<T>,
}

impl<T: Real> FactorizedPlan<T> {
    /// Plans for inputs supported in `|x| <= source` and output accurate on `|x| <= target`.
    pub fn new(grid: &GridSpec<T>, xi: [T; 2], source: T, target: T, opts: &FaddeevOptions<T>) -> Result<Self> {
        let (lattice, win) = plan_lattice(grid, xi, source, target, opts)?;
        let cauchy = TruncatedConvolver::on_lattice(lattice, Kernel::Cauchy, source + win.outer, [T::zero(); 2]);
        let anti = TruncatedConvolver::on_lattice(lattice, Kernel::AntiCauchy, win.outer + target, xi);
        let window = (0..lattice.len())
            .map(|k| {
                let [a, b] = lattice.point(k);
                win.at((a * a + b * b).sqrt())
            })
            .collect();
        Ok(Self { grid: *grid, xi, window, cauchy, anti })
    }

    pub fn xi(&self) -> [T; 2] {
        self.xi
    }

    pub fn lattice(&self) -> &GridSpec<T> {
        self.cauchy.lattice()
    }

    /// Applies the plan to data living on the padded lattice, in place.
    pub(crate) fn apply_padded(&self, data: &mut [Complex<T>]) {
        self.cauchy.apply_padded(data);
        for (d, w) in data.iter_mut().zip(&self.window) {
            *d = *d * *w;
        }
        self.anti.apply_padded(data);
        let q: T = lit(-0.25);
        for d in data.iter_mut() {
            *d = *d * q;
        }
    }

    /// `g_z * f` on the plan's grid.
    pub fn apply(&self, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        if !f.grid().same_layout(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let mut data = f.embed(self.lattice())?.into_values();
        self.apply_padded(&mut data);
        ScalarField::from_vec(*self.lattice(), data)?.crop(&self.grid)
    }
}

/// Relative tolerance on mass outside the support before inputs are rejected.
pub const SUPPORT_TOLERANCE: f64 = 1e-10;

pub(crate) fn check_input<T: Real>(f: &ScalarField<T>) -> Result<()> {
    f.check_finite()?;
    let scale = crate::field::norm_l2(f);
    f.check_support(scale * lit(SUPPORT_TOLERANCE))
}

/// `g_z * f` through the factorized route, accurate on `|x| <= target`.
pub fn faddeev_convolve_factorized<T: Real>(
    f: &ScalarField<T>,
    xi: [T; 2],
    target: T,
    opts: &FaddeevOptions<T>,
) -> Result<ScalarField<T>> {
    check_input(f)?;
    let g = f.grid();
    FactorizedPlan::new(g, xi, g.support_radius(), target, opts)?.apply(f)
}

/// `(-Delta - 2i(z, grad)) (w u)` computed spectrally, where `w` is an
/// `erfc` cutoff falling from one at `inner` to zero at `outer`.
///
/// Well inside `inner` this is the operator applied to `u` itself.
pub fn apply_faddeev_operator<T: Real>(u: &ScalarField<T>, xi: [T; 2], inner: T, outer: T) -> Result<ScalarField<T>> {
    let g = *u.grid();
    let fft = Fft2::new(g.n());
    let centre = (inner + outer) * lit(0.5);
    let width = (outer - inner) / lit(6.0);
    let mut data = u
        .map_with_point(|[a, b], v| v * erfc_window((a * a + b * b).sqrt(), centre, width))
        .into_values();
    fft.to_spectral(g.spacing(), &mut data);
    for (k, d) in data.iter_mut().enumerate() {
        let (k1, k2) = (k % g.n(), k / g.n());
        // the unpaired Nyquist row and column carry no derivative
        *d = if k1 == 0 || k2 == 0 { Complex::new(T::zero(), T::zero()) } else { *d * faddeev_symbol(g.xi(k), xi) };
    }
    fft.to_physical(g.half_width(), &mut data);
    ScalarField::from_vec(g, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::norm_l2;

    pub(crate) fn bump(g: GridSpec<f64>) -> ScalarField<f64> {
        ScalarField::from_fn(g, |[a, b]| {
            let t = a * a + b * b;
            let v = if t < 1.0 { (1.0 - 1.0 / (1.0 - t)).exp() } else { 0.0 };
            Complex::new(v * (1.0 + 0.3 * a), 0.1 * v * b)
        })
    }

    #[test]
    fn z_is_isotropic() {
        for xi in [[3.0f64, -1.0], [0.0, 5.0], [7.5, 2.25]] {
            let z = z_from_xi(xi);
            let zz = z[0] * z[0] + z[1] * z[1];
            assert!(zz.norm() < 1e-14);
            let mag: f64 = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
            assert!((mag - magnitude(xi) / 2f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn symbol_vanishes_at_origin_and_xi() {
        let xi = [6.0, 0.0];
        assert_eq!(faddeev_symbol([0.0, 0.0], xi).norm(), 0.0);
        assert!(faddeev_symbol(xi, xi).norm() < 1e-14);
        assert!(faddeev_symbol([-6.0, 0.0], xi).norm() > 1.0);
    }

    #[test]
    fn factorized_route_solves_the_equation() {
        let g = GridSpec::<f64>::new(256, 8.0, 1.0).unwrap();
        let f = bump(g);
        for xi in [[4.0, 0.0], [8.0, 0.0], [5.0, -6.0], [0.0, 16.0]] {
            let u = faddeev_convolve_factorized(&f, xi, 3.0, &FaddeevOptions::default()).unwrap();
            let lu = apply_faddeev_operator(&u, xi, 2.0, 3.0).unwrap();
            let r = lu.sub(&f).unwrap().restrict_to_disk(1.0);
            let rel = norm_l2(&r) / norm_l2(&f);
            assert!(rel < 1e-4, "xi={xi:?} residual {rel:e}");
        }
    }

    #[test]
    fn rejects_zero_xi_and_unsupported_input() {
        let g = GridSpec::<f64>::new(64, 4.0, 1.0).unwrap();
        let f = bump(g);
        let opts = FaddeevOptions::default();
        assert!(matches!(faddeev_convolve_factorized(&f, [0.0, 0.0], 1.0, &opts), Err(Error::ZeroParameter)));
        let wide = ScalarField::from_fn(g, |_| Complex::new(1.0, 0.0));
        assert!(matches!(
            faddeev_convolve_factorized(&wide, [3.0, 0.0], 1.0, &opts),
            Err(Error::SupportViolation { .. })
        ));
    }
}
