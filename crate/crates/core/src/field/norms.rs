use super::{ScalarField, SpectralField};
use crate::error::{Error, Result};
use crate::scalar::{f64_of, lit, Real};

/// `(h^2 sum |f|^2)^{1/2}`.
pub fn norm_l2<T: Real>(f: &ScalarField<T>) -> T {
    let h = f.grid().spacing();
    let s = f.values().iter().fold(T::zero(), |s, z| s + z.norm_sqr());
    (s * h * h).sqrt()
}

/// Discrete spectral L2 norm, equal to `norm_l2` of the inverse transform.
pub fn norm_l2_spectral<T: Real>(f: &SpectralField<T>) -> T {
    let d = f.grid().spectral_spacing();
    let s = f.values().iter().fold(T::zero(), |s, z| s + z.norm_sqr());
    (s * d * d).sqrt() / (lit::<T>(2.0) * T::PI())
}

pub fn norm_sup<T: Real>(f: &ScalarField<T>) -> T {
    f.max_abs()
}

/// Weighted norm `(int |f|^p (1+|x|)^{p(delta+1)} dx)^{1/p}` for `p > 1`.
pub fn norm_lp_weighted<T: Real>(f: &ScalarField<T>, p: T, delta: T) -> Result<T> {
    if !(p > T::one()) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("exponent p = {p} must exceed 1")));
    }
    let g = f.grid();
    let h = g.spacing();
    let w = p * (delta + T::one());
    let s = f.values().iter().enumerate().fold(T::zero(), |s, (k, z)| {
        let [a, b] = g.point(k);
        let m = z.norm();
        if m == T::zero() {
            return s;
        }
        s + m.powf(p) * (T::one() + (a * a + b * b).sqrt()).powf(w)
    });
    Ok((s * h * h).powf(T::one() / p))
}

/// Mean of `|f|` over `bins` equal-width rings up to `r_max`.
///
/// Returns `(ring centre, mean modulus, sample count)` per ring.
pub fn radial_profile<T: Real>(f: &ScalarField<T>, r_max: T, bins: usize) -> Vec<(T, T, usize)> {
    let g = f.grid();
    let width = r_max / lit(bins as f64);
    let mut acc = vec![(T::zero(), 0usize); bins];
    for (k, z) in f.values().iter().enumerate() {
        let [a, b] = g.point(k);
        let r = (a * a + b * b).sqrt();
        if r < r_max {
            let i = (r / width).to_usize().unwrap_or(bins).min(bins - 1);
            acc[i].0 = acc[i].0 + z.norm();
            acc[i].1 += 1;
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(i, (s, c))| {
            let centre = (lit::<T>(i as f64) + lit(0.5)) * width;
            let mean = if c > 0 { s / lit(c as f64) } else { T::zero() };
            (centre, mean, c)
        })
        .collect()
}

/// Outcome of a log-log fit of the radial power spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct TailFit {
    /// Sobolev exponent estimate `(-slope - 2) / 2`, capped at [`TailFit::CAP`].
    pub exponent: f64,
    /// Fitted slope of `log mean |F|^2` against `log |xi|`.
    pub slope: f64,
    /// `(log-mean radius, mean |F|^2)` of every annulus used in the fit.
    pub annuli: Vec<(f64, f64)>,
}

impl TailFit {
    pub const CAP: f64 = 10.0;
    /// Annuli with fewer lattice points are dropped.
    pub const MIN_POINTS: usize = 16;
    /// Minimum number of surviving annuli for a fit.
    pub const MIN_ANNULI: usize = 4;
}

/// Estimates the Sobolev exponent of a field from the decay of `|F|^2` over a band.
///
/// The band `[lo, hi]` is split into `annuli` log-spaced rings (at least 8).
pub fn sobolev_tail_exponent<T: Real>(
    f: &SpectralField<T>,
    lo: T,
    hi: T,
    annuli: usize,
) -> Result<TailFit> {
    if annuli < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 annuli, got {annuli}")));
    }
    let (lo, hi) = (f64_of(lo), f64_of(hi));
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::BandTooNarrow(format!("band [{lo}, {hi}] is empty")));
    }
    let g = f.grid();
    let ratio = (hi / lo).ln() / annuli as f64;
    let mut acc = vec![(0.0f64, 0.0f64, 0usize); annuli];
    for (k, z) in f.values().iter().enumerate() {
        let [a, b] = g.xi(k);
        let r = f64_of((a * a + b * b).sqrt());
        if r < lo || r >= hi {
            continue;
        }
        let i = (((r / lo).ln() / ratio) as usize).min(annuli - 1);
        acc[i].0 += r.ln();
        acc[i].1 += f64_of(z.norm_sqr());
        acc[i].2 += 1;
    }
    let used: Vec<(f64, f64)> = acc
        .into_iter()
        .filter(|a| a.2 >= TailFit::MIN_POINTS)
        .map(|(lr, p, c)| ((lr / c as f64).exp(), p / c as f64))
        .collect();
    if used.len() < TailFit::MIN_ANNULI {
        return Err(Error::BandTooNarrow(format!(
            "only {} annuli hold at least {} lattice points",
            used.len(),
            TailFit::MIN_POINTS
        )));
    }
    let peak = used.iter().fold(0.0f64, |m, a| m.max(a.1));
    if used.iter().any(|a| a.1 <= peak * 1e-300 || a.1 == 0.0) {
        return Ok(TailFit { exponent: TailFit::CAP, slope: f64::NEG_INFINITY, annuli: used });
    }
    let m = used.len() as f64;
    let (sx, sy) = used.iter().fold((0.0, 0.0), |(sx, sy), a| (sx + a.0.ln(), sy + a.1.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = used.iter().fold((0.0, 0.0), |(sxy, sxx), a| {
        let dx = a.0.ln() - mx;
        (sxy + dx * (a.1.ln() - my), sxx + dx * dx)
    });
    let slope = sxy / sxx;
    let exponent = ((-slope - 2.0) / 2.0).min(TailFit::CAP);
    Ok(TailFit { exponent, slope, annuli: used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{fft_forward, GridSpec};
    use num_complex::Complex;

    #[test]
    fn parseval_holds() {
        let g = GridSpec::<f64>::new(64, 4.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |[a, b]| Complex::new((-a * a).exp() * b.cos(), a * (-b * b).exp()));
        let s = fft_forward(&f).unwrap();
        let (p, q) = (norm_l2(&f), norm_l2_spectral(&s));
        assert!((p - q).abs() < 1e-12 * p);
    }

    #[test]
    fn inverse_square_decay_has_exponent_one() {
        let g = GridSpec::<f64>::new(256, 8.0, 1.0).unwrap();
        let s = SpectralField::from_fn(g, |[a, b]| {
            let r2 = a * a + b * b;
            Complex::new(if r2 > 0.0 { 1.0 / r2 } else { 0.0 }, 0.0)
        });
        let fit = sobolev_tail_exponent(&s, 5.0, 90.0, 10).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn gaussian_hits_cap() {
        let g = GridSpec::<f64>::new(128, 8.0, 1.0).unwrap();
        let s = SpectralField::from_fn(g, |[a, b]| Complex::new((-(a * a + b * b) / 2.0).exp(), 0.0));
        let fit = sobolev_tail_exponent(&s, 5.0, 45.0, 8).unwrap();
        assert_eq!(fit.exponent, TailFit::CAP);
    }

    #[test]
    fn weighted_norm_of_disk_is_root_pi() {
        let g = GridSpec::<f64>::new(256, 4.0, 1.5).unwrap();
        let disk = ScalarField::from_fn(g, |[a, b]| Complex::new(if a * a + b * b < 1.0 { 1.0 } else { 0.0 }, 0.0));
        let v = norm_lp_weighted(&disk, 2.0, -1.0).unwrap();
        assert!((v / std::f64::consts::PI.sqrt() - 1.0).abs() < 1e-2, "{v}");
        assert_eq!(norm_lp_weighted(&ScalarField::zeros(g), 3.0, 0.5).unwrap(), 0.0);
        assert!(norm_lp_weighted(&disk, 1.0, 0.0).is_err());
    }

    #[test]
    fn narrow_band_rejected() {
        let g = GridSpec::<f64>::new(32, 4.0, 1.0).unwrap();
        let s = SpectralField::from_fn(g, |_| Complex::new(1.0, 0.0));
        assert!(matches!(sobolev_tail_exponent(&s, 1.0, 1.2, 8), Err(Error::BandTooNarrow(_))));
        assert!(sobolev_tail_exponent(&s, 1.0, 20.0, 4).is_err());
    }
}
