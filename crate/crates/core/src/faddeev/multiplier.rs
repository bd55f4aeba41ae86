//! Fourier-multiplier evaluation of `g_z * f = F^{-1}(F f / s)`.
//!
//! The symbol `s` vanishes to first order at `eta = 0` and `eta = xi`. A
//! smooth partition of unity splits the integral: away from the zeros it
//! is a lattice sum on a padded grid, near each zero it is a polar
//! Gauss–Legendre rule whose Jacobian cancels the `1/rho` singularity.

use num_complex::Complex;

use super::{check_input, faddeev_symbol, magnitude};
use crate::error::{Error, Result};
use crate::field::{interior_window, Fft2, GridSpec, ScalarField};
use crate::scalar::{cis, lit, Real};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Spectral lattice indices `(k1, k2)` where the symbol vanishes.
pub fn symbol_zero_collisions<T: Real>(grid: &GridSpec<T>, xi: [T; 2]) -> Vec<[usize; 2]> {
    let mag = magnitude(xi);
    let tol = lit::<T>(1e-9) * (mag * mag).max(T::one());
    let n = grid.n();
    (0..grid.len())
        .filter(|&k| faddeev_symbol(grid.xi(k), xi).norm() <= tol)
        .map(|k| [k % n, k / n])
        .collect()
}

/// Controls of the multiplier route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierOptions<T> {
    /// Regularization `1/s -> conj(s)/(|s|^2 + eps^2)`; zero gives the exact symbol.
    pub eps: T,
    /// Padding factor of the lattice part.
    pub padding: usize,
    /// Lower bound on the padded period of the lattice part.
    pub min_period: T,
    /// Patch radius as a fraction of `|xi|`.
    pub patch_fraction: T,
    pub max_points: usize,
}

impl<T: Real> Default for MultiplierOptions<T> {
    fn default() -> Self {
        Self { eps: T::zero(), padding: 4, min_period: lit(64.0), patch_fraction: lit(0.45), max_points: 2048 }
    }
}

fn inverse_symbol<T: Real>(s: Complex<T>, eps: T) -> Complex<T> {
    if eps == T::zero() {
        s.inv()
    } else {
        s.conj() / (s.norm_sqr() + eps * eps)
    }
}

/// `g_z * f` on `|x| <= target` by the multiplier route; zero outside that disk.
pub fn faddeev_convolve_multiplier<T: Real>(
    f: &ScalarField<T>,
    xi: [T; 2],
    target: T,
    opts: &MultiplierOptions<T>,
) -> Result<ScalarField<T>> {
    check_input(f)?;
    let mag = magnitude(xi);
    if mag == T::zero() {
        return Err(Error::ZeroParameter);
    }
    let g = *f.grid();
    let h = g.spacing();
    let rho0 = opts.patch_fraction * mag;
    let half = rho0 * lit(0.5);
    let chi = |eta: [T; 2], c: [T; 2]| {
        let (p, q) = (eta[0] - c[0], eta[1] - c[1]);
        interior_window((p * p + q * q).sqrt(), half, rho0)
    };
    let centres = [[T::zero(), T::zero()], xi];

    // lattice part
    let m = crate::dbar::padded_size(g.n() * opts.padding, h, opts.min_period, opts.max_points)?;
    let lattice = g.with_points(m)?;
    let fft = Fft2::new(m);
    let mut data = f.embed(&lattice)?.into_values();
    fft.to_spectral(h, &mut data);
    for (k, d) in data.iter_mut().enumerate() {
        let eta = lattice.xi(k);
        let rest = T::one() - chi(eta, centres[0]) - chi(eta, centres[1]);
        *d = if rest <= T::zero() {
            Complex::new(T::zero(), T::zero())
        } else {
            *d * inverse_symbol(faddeev_symbol(eta, xi), opts.eps) * rest
        };
    }
    fft.to_physical(lattice.half_width(), &mut data);
    let mut out = ScalarField::from_vec(lattice, data)?.crop(&g)?;

    // polar patches
    let support: Vec<([T; 2], Complex<T>)> = (0..g.len())
        .filter(|&k| f.values()[k].norm() > T::zero())
        .map(|k| (g.point(k), f.values()[k]))
        .collect();
    let targets: Vec<usize> = (0..g.len())
        .filter(|&k| {
            let [a, b] = g.point(k);
            a * a + b * b <= target * target
        })
        .collect();
    let phase_range = crate::scalar::f64_of((g.support_radius() + target) * rho0);
    let nr = ((0.5 * phase_range).ceil() as usize + 24).max(48);
    let na = 2 * nr;
    let (gx, gw) = gauss_legendre(nr);
    let two_pi = T::PI() * lit(2.0);
    let norm = T::one() / (lit::<T>(4.0) * T::PI() * T::PI());
    let h2 = h * h;
    let mut acc = vec![Complex::new(T::zero(), T::zero()); targets.len()];
    for c in centres {
        for (&t, &w) in gx.iter().zip(&gw) {
            let rho = (lit::<T>(t) + T::one()) * half;
            let wr = lit::<T>(w) * half;
            for j in 0..na {
                let th = two_pi * lit::<T>(j as f64) / lit::<T>(na as f64);
                let eta = [c[0] + rho * th.cos(), c[1] + rho * th.sin()];
                let weight = chi(eta, c);
                if weight == T::zero() {
                    continue;
                }
                let fhat = support
                    .iter()
                    .fold(Complex::new(T::zero(), T::zero()), |s, (x, v)| s + *v * cis(x[0] * eta[0] + x[1] * eta[1]))
                    * h2;
                let coef = fhat
                    * inverse_symbol(faddeev_symbol(eta, xi), opts.eps)
                    * (weight * rho * wr * two_pi / lit::<T>(na as f64) * norm);
                for (a, &k) in acc.iter_mut().zip(&targets) {
                    let x = g.point(k);
                    *a = *a + coef * cis(-(x[0] * eta[0] + x[1] * eta[1]));
                }
            }
        }
    }
    let mut mask = vec![false; g.len()];
    for (a, &k) in acc.iter().zip(&targets) {
        out.values_mut()[k] = out.values()[k] + *a;
        mask[k] = true;
    }
    for (v, keep) in out.values_mut().iter_mut().zip(mask) {
        if !keep {
            *v = Complex::new(T::zero(), T::zero());
        }
    }
    out.check_finite()?;
    Ok(out)
}

/// Multiplier-route results at `eps`, `eps/2` and their Richardson combination.
#[derive(Clone, Debug)]
pub struct MultiplierReport<T> {
    pub eps: T,
    pub at_eps: ScalarField<T>,
    pub at_half_eps: ScalarField<T>,
    /// `2 u(eps/2) - u(eps)`, removing the leading `O(eps)` bias.
    pub extrapolated: ScalarField<T>,
}

impl<T: Real> MultiplierReport<T> {
    pub fn run(f: &ScalarField<T>, xi: [T; 2], target: T, opts: &MultiplierOptions<T>) -> Result<Self> {
        let at_eps = faddeev_convolve_multiplier(f, xi, target, opts)?;
        let half = MultiplierOptions { eps: opts.eps * lit(0.5), ..*opts };
        let at_half_eps = faddeev_convolve_multiplier(f, xi, target, &half)?;
        let extrapolated = at_half_eps.zip_with(&at_eps, |a, b| a * lit::<T>(2.0) - b)?;
        Ok(Self { eps: opts.eps, at_eps, at_half_eps, extrapolated })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faddeev::{faddeev_convolve_factorized, tests::bump, FaddeevOptions};
    use crate::field::norm_l2;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let p: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((p - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn collisions_found_at_both_zeros() {
        let g = GridSpec::<f64>::new(32, std::f64::consts::PI, 1.0).unwrap();
        let c = symbol_zero_collisions(&g, [6.0, 0.0]);
        assert_eq!(c, vec![[16, 16], [22, 16]]);
        assert!(symbol_zero_collisions(&g, [6.5, 0.0]).len() == 1);
    }

    #[test]
    fn routes_agree() {
        let g = GridSpec::<f64>::new(128, 4.0, 1.0).unwrap();
        let f = bump(g);
        for xi in [[4.0, 0.0], [5.0, -6.0]] {
            let a = faddeev_convolve_factorized(&f, xi, 1.5, &FaddeevOptions::default()).unwrap();
            let b = faddeev_convolve_multiplier(&f, xi, 1.5, &MultiplierOptions::default()).unwrap();
            let d = a.sub(&b).unwrap().restrict_to_disk(1.0);
            let rel = norm_l2(&d) / norm_l2(&a.restrict_to_disk(1.0));
            assert!(rel < 1e-5, "xi={xi:?} rel {rel:e}");
        }
    }

    #[test]
    fn regularization_extrapolates_toward_exact() {
        let g = GridSpec::<f64>::new(64, 4.0, 1.0).unwrap();
        let f = bump(g);
        let xi = [6.0, 0.0];
        let exact = faddeev_convolve_multiplier(&f, xi, 1.0, &MultiplierOptions::default()).unwrap();
        let opts = MultiplierOptions { eps: 0.2, ..Default::default() };
        let rep = MultiplierReport::run(&f, xi, 1.0, &opts).unwrap();
        let e0 = norm_l2(&rep.at_eps.sub(&exact).unwrap());
        let e1 = norm_l2(&rep.extrapolated.sub(&exact).unwrap());
        assert!(e1 < e0 / 2.0, "{e0:e} {e1:e}");
    }
}
