//! Empirical checks of the decay `||g_z * f||_inf <= c_gamma |z|^{-gamma} ||f||_2`.

use super::{FactorizedPlan, FaddeevOptions};
use crate::error::{Error, Result};
use crate::field::{norm_l2, ScalarField};
use crate::scalar::{f64_of, lit, Real};

/// Sup norms of `g_z * f` over a set of `|z|` and directions.
#[derive(Clone, Debug)]
pub struct ProbeResult {
    /// `(|z|, max over directions of ||g_z * f||_inf / ||f||_2)`.
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope of `log ratio` against `log |z|`.
    pub slope: f64,
}

pub(crate) fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0.ln(), b + p.1.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), p| {
        let dx = p.0.ln() - mx;
        (a + dx * (p.1.ln() - my), b + dx * dx)
    });
    sxy / sxx
}

/// Measures `||g_z * f||_inf / ||f||_2` for each `|z|` in `z_magnitudes`.
///
/// The sup is taken over `|x| <= 2R` and the worst of the given direction
/// angles of `xi`; `|xi| = sqrt(2) |z|`.
pub fn prop1_probe<T: Real>(
    f: &ScalarField<T>,
    z_magnitudes: &[T],
    angles: &[T],
    opts: &FaddeevOptions<T>,
) -> Result<ProbeResult> {
    if z_magnitudes.len() < 2 || angles.is_empty() {
        return Err(Error::InvalidArgument("need at least two |z| values and one direction".into()));
    }
    super::check_input(f)?;
    let g = f.grid();
    let fnorm = f64_of(norm_l2(f));
    if fnorm == 0.0 {
        return Err(Error::InvalidArgument("probe field is zero".into()));
    }
    let target = g.support_radius() * lit(2.0);
    let mut samples = Vec::with_capacity(z_magnitudes.len());
    for &zm in z_magnitudes {
        let xm = zm * T::SQRT_2();
        let mut worst = 0.0f64;
        for &th in angles {
            let xi = [xm * th.cos(), xm * th.sin()];
            let u = FactorizedPlan::new(g, xi, g.support_radius(), target, opts)?.apply(f)?;
            worst = worst.max(f64_of(u.restrict_to_disk(target).max_abs()));
        }
        samples.push((f64_of(zm), worst / fnorm));
    }
    let slope = loglog_slope(&samples);
    Ok(ProbeResult { samples, slope })
}

/// Empirical constant for the decay estimate at exponent `gamma`.
#[derive(Clone, Debug)]
pub struct GammaEstimate {
    pub gamma: f64,
    /// Safety factor times the largest observed `ratio * |z|^gamma`.
    pub c_gamma: f64,
    pub observed: f64,
    pub safety: f64,
}

/// Safety factor applied to the observed constant.
pub const C_GAMMA_SAFETY: f64 = 2.0;

/// Estimates `c_gamma` as twice the largest `||g_z*f||_inf |z|^gamma / ||f||_2` over a corpus.
pub fn estimate_c_gamma<T: Real>(
    gamma: T,
    corpus: &[ScalarField<T>],
    z_magnitudes: &[T],
    angles: &[T],
    opts: &FaddeevOptions<T>,
) -> Result<GammaEstimate> {
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} must lie in (0, 1)")));
    }
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("empty probe corpus".into()));
    }
    let gm = f64_of(gamma);
    let mut observed = 0.0f64;
    for f in corpus {
        let p = prop1_probe(f, z_magnitudes, angles, opts)?;
        for (z, r) in p.samples {
            observed = observed.max(r * z.powf(gm));
        }
    }
    Ok(GammaEstimate { gamma: gm, c_gamma: C_GAMMA_SAFETY * observed, observed, safety: C_GAMMA_SAFETY })
}
