//! Born approximation `q_B = F^{-1}(T_h)` and the diagnostics comparing it to
//! `h0 = F^{-1}(T_{h,0})`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::cgo::CgoSolver;
use crate::dbar::{beurling_transform, Kernel, TruncatedConvolver};
use crate::error::{Error, Result};
use crate::faddeev::{a_from_xi, magnitude, plan_lattice, FaddeevOptions};
use crate::field::{fft_forward, fft_inverse, sobolev_tail_exponent, GridSpec, ScalarField, SpectralField, TailFit};
use crate::potential::{e0, PotentialModel};
use crate::scalar::{cis, f64_of, lit, Real};
use crate::transform::{fourier_sample, PointFailure, PointRecord, Provenance, TransformSamples};

/// Inverse transform of the samples on their own lattice.
pub fn born_reconstruct<T: Real>(t: &TransformSamples<T>) -> Result<ScalarField<T>> {
    fft_inverse(&t.values)
}

/// `h0` on the lattice's physical grid, without any low-frequency cutoff.
///
/// Each sample integrates `h(x, e0(x; xi))` with its own `xi`.
pub fn compute_h0<T: Real>(model: &PotentialModel<T>, lattice: &GridSpec<T>) -> Result<ScalarField<T>> {
    let g = model.grid();
    let h = g.spacing();
    let p = model.potential();
    let reach = g.support_radius() + h;
    let pts: Vec<[T; 2]> = (0..g.len())
        .map(|k| g.point(k))
        .filter(|x| x[0] * x[0] + x[1] * x[1] <= reach * reach)
        .collect();
    let values: Vec<Complex<T>> = (0..lattice.len())
        .into_par_iter()
        .map(|k| {
            let xi = lattice.xi(k);
            let acc = pts.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &x| {
                acc + p.eval_cell(x, h, e0(x, xi)) * cis(x[0] * xi[0] + x[1] * xi[1])
            });
            acc * (h * h)
        })
        .collect();
    fft_inverse(&SpectralField::from_vec(*lattice, values)?)
}

/// First iterate `R_1 = -g_z * h(., e0)` through Cauchy and Beurling transforms:
///
/// `R_1 = (C f - e^{-ix.xi} A(e^{ix.xi} S f)) / (2a)`, with `a = xi_2 + i xi_1`.
///
/// Accurate on the support disk; the Beurling term is windowed like the
/// factorized route.
pub fn r1_explicit<T: Real>(model: &PotentialModel<T>, xi: [T; 2], opts: &FaddeevOptions<T>) -> Result<ScalarField<T>> {
    if magnitude(xi) == T::zero() {
        return Err(Error::ZeroParameter);
    }
    let g = model.grid();
    let f = model.h0_field(xi);
    let src = g.support_radius() + g.spacing();
    let (lattice, win) = plan_lattice(g, xi, src, src, opts)?;
    let big = f.embed(&lattice)?;
    let mut cf = big.values().to_vec();
    TruncatedConvolver::on_lattice(lattice, Kernel::Cauchy, src + src, [T::zero(); 2]).apply_padded(&mut cf);
    let mut t = beurling_transform(&big)?.into_values();
    for (k, v) in t.iter_mut().enumerate() {
        let [a, b] = lattice.point(k);
        *v = *v * win.at((a * a + b * b).sqrt());
    }
    TruncatedConvolver::on_lattice(lattice, Kernel::AntiCauchy, win.outer + src, xi).apply_padded(&mut t);
    let inv = (a_from_xi(xi) * lit::<T>(2.0)).inv();
    let out: Vec<Complex<T>> = cf.iter().zip(&t).map(|(c, s)| (*c - *s) * inv).collect();
    ScalarField::from_vec(lattice, out)?.crop(g)
}

/// Source of `R_1` for the first-order transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum R1Route {
    /// [`r1_explicit`].
    Explicit,
    /// One Picard step of the solver.
    Iterate,
}

/// First-order transform `T_{h,1}` on the lattice, zero below the cutoff.
pub fn assemble_first_order<T: Real>(
    solver: &CgoSolver<T>,
    lattice: &GridSpec<T>,
    route: R1Route,
) -> Result<TransformSamples<T>> {
    let cutoff = solver.constants().cutoff;
    let radius = solver.grid().support_radius() + solver.grid().spacing();
    let results: Vec<_> = (0..lattice.len())
        .into_par_iter()
        .map(|k| {
            let xi = lattice.xi(k);
            let mag = magnitude(xi);
            if mag < cutoff || mag == T::zero() {
                return None;
            }
            let r1 = match route {
                R1Route::Explicit => {
                    r1_explicit(solver.model(), xi, &solver.options().faddeev).map(|r| r.restrict_to_disk(radius))
                }
                R1Route::Iterate => solver.iterates(xi, 1).map(|mut v| v.pop().expect("two iterates")),
            };
            let t = r1.and_then(|r| Ok((fourier_sample(&solver.source_field(xi, &r)?, xi), f64_of(r.max_abs()))));
            Some((k, f64_of(mag), t))
        })
        .collect();
    let mut values = vec![Complex::new(T::zero(), T::zero()); lattice.len()];
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (index, xi_magnitude, res) in results.into_iter().flatten() {
        match res {
            Ok((t, step)) => {
                values[index] = t;
                records.push(PointRecord { index, xi_magnitude, iterations: 1, residual: step, provenance: Provenance::Order(1) });
            }
            Err(e) => failures.push(PointFailure { index, xi_magnitude, message: e.to_string() }),
        }
    }
    Ok(TransformSamples { values: SpectralField::from_vec(*lattice, values)?, cutoff, records, failures })
}

/// `q_{B,1} = F^{-1}(chi T_{h,1})`.
pub fn compute_qb1<T: Real>(solver: &CgoSolver<T>, lattice: &GridSpec<T>, route: R1Route) -> Result<ScalarField<T>> {
    born_reconstruct(&assemble_first_order(solver, lattice, route)?)
}

/// Settings of the tail comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityOptions {
    pub band: (f64, f64),
    pub annuli: usize,
    /// Required excess of `tail(q_B - h0)` over `tail(h0)`.
    pub gain: f64,
    /// `tail(h0)` at or above this counts as smooth.
    pub smooth_threshold: f64,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        Self { band: (4.0, 20.0), annuli: 8, gain: 0.25, smooth_threshold: 2.0 }
    }
}

/// Tail exponents of `h0` and of the reconstruction errors.
#[derive(Clone, Debug)]
pub struct RegularityReport {
    pub band: (f64, f64),
    pub h0: TailFit,
    pub difference: TailFit,
    /// Tail of `q_B - q_{B,1}` when the first-order field is present.
    pub first_order: Option<TailFit>,
    pub gain: f64,
    /// `tail(q_B - h0) >= tail(h0) + gain`.
    pub passed: bool,
    /// `h0` is already smooth on the band, so there is no singularity to recover.
    pub smooth: bool,
    /// `||Im q_B|| / ||Re q_B||`.
    pub imag_ratio: f64,
}

impl RegularityReport {
    pub fn table(&self) -> String {
        let mut s = format!("band {:.3} {:.3}\n", self.band.0, self.band.1);
        s += &format!("tail h0         {:.4} (slope {:.4})\n", self.h0.exponent, self.h0.slope);
        s += &format!("tail qB - h0    {:.4} (slope {:.4})\n", self.difference.exponent, self.difference.slope);
        if let Some(f) = &self.first_order {
            s += &format!("tail qB - qB1   {:.4} (slope {:.4})\n", f.exponent, f.slope);
        }
        s += &format!("imag/real       {:.4e}\n", self.imag_ratio);
        s += &format!(
            "gain {:.2}: {}{}\n",
            self.gain,
            if self.passed { "PASS" } else { "FAIL" },
            if self.smooth { " (no singularity to recover)" } else { "" }
        );
        s
    }
}

/// Output of a reconstruction.
#[derive(Clone, Debug)]
pub struct ReconstructionResult<T> {
    pub q_b: ScalarField<T>,
    pub h0: ScalarField<T>,
    pub q_b1: Option<ScalarField<T>>,
    pub report: RegularityReport,
}

/// Compares Fourier tails of `h0`, `q_B - h0` and optionally `q_B - q_{B,1}` on one band.
pub fn regularity_report<T: Real>(
    q_b: &ScalarField<T>,
    h0: &ScalarField<T>,
    q_b1: Option<&ScalarField<T>>,
    opts: &RegularityOptions,
) -> Result<RegularityReport> {
    let (lo, hi) = (lit::<T>(opts.band.0), lit::<T>(opts.band.1));
    let tail = |f: &ScalarField<T>| sobolev_tail_exponent(&fft_forward(f)?, lo, hi, opts.annuli);
    let th0 = tail(h0)?;
    let diff = tail(&q_b.sub(h0)?)?;
    let first = q_b1.map(|q1| tail(&q_b.sub(q1)?)).transpose()?;
    let (mut re2, mut im2) = (0.0, 0.0);
    for v in q_b.values() {
        re2 += f64_of(v.re * v.re);
        im2 += f64_of(v.im * v.im);
    }
    let imag_ratio = if re2 > 0.0 { (im2 / re2).sqrt() } else { 0.0 };
    Ok(RegularityReport {
        band: opts.band,
        passed: diff.exponent >= th0.exponent + opts.gain,
        smooth: th0.exponent >= opts.smooth_threshold,
        h0: th0,
        difference: diff,
        first_order: first,
        gain: opts.gain,
        imag_ratio,
    })
}

/// Location of the steepest ring of `Re q`.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpReport {
    /// Radius of the annulus with the largest mean `|grad Re q|`.
    pub ring_radius: f64,
    /// Distance to the expected radius in grid cells.
    pub offset_cells: f64,
    /// `(radius, mean |grad Re q|)` per annulus of width `h`.
    pub profile: Vec<(f64, f64)>,
}

/// Finds the radius where the angular mean of `|grad Re q|` peaks.
pub fn jump_ring<T: Real>(q: &ScalarField<T>, expected: T, r_max: T) -> Result<JumpReport> {
    let g = q.grid();
    let n = g.n();
    let h = f64_of(g.spacing());
    let bins = (f64_of(r_max) / h).ceil() as usize;
    if bins < 4 {
        return Err(Error::InvalidArgument("radius range spans fewer than 4 cells".into()));
    }
    let mut acc = vec![(0.0f64, 0usize); bins];
    let re = |i: usize, j: usize| f64_of(q.at(i, j).re);
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let [a, b] = g.point(j * n + i);
            let r = f64_of((a * a + b * b).sqrt());
            let bin = (r / h + 0.5) as usize;
            if bin >= bins {
                continue;
            }
            let gx = (re(i + 1, j) - re(i - 1, j)) / (2.0 * h);
            let gy = (re(i, j + 1) - re(i, j - 1)) / (2.0 * h);
            acc[bin].0 += gx.hypot(gy);
            acc[bin].1 += 1;
        }
    }
    let profile: Vec<(f64, f64)> =
        acc.iter().enumerate().filter(|(_, a)| a.1 > 0).map(|(b, a)| (b as f64 * h, a.0 / a.1 as f64)).collect();
    let ring = profile.iter().fold((0.0, f64::NEG_INFINITY), |m, p| if p.1 > m.1 { *p } else { m }).0;
    Ok(JumpReport { ring_radius: ring, offset_cells: (ring - f64_of(expected)).abs() / h, profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgo::{compute_constants, SolverOptions};
    use crate::faddeev::faddeev_convolve_factorized;
    use crate::field::norm_l2;
    use crate::potential::{BuiltinPotential, PotentialKind};
    use std::sync::Arc;

    fn disk_model(n: usize, l: f64) -> PotentialModel<f64> {
        let g = GridSpec::new(n, l, 1.25).unwrap();
        PotentialModel::new(Arc::new(BuiltinPotential::disk(1.0, 1.0)), g).unwrap()
    }

    #[test]
    fn explicit_r1_matches_one_iteration() {
        let m = disk_model(256, 4.0);
        let opts = FaddeevOptions::default();
        for xi in [[8.0, 0.0], [5.0, -7.0]] {
            let f = m.h0_field(xi);
            let iter = faddeev_convolve_factorized(&f, xi, 1.25, &opts).unwrap().scale(Complex::new(-1.0, 0.0));
            let ex = r1_explicit(&m, xi, &opts).unwrap();
            let d = norm_l2(&ex.sub(&iter).unwrap().restrict_to_disk(1.0)) / norm_l2(&iter.restrict_to_disk(1.0));
            assert!(d < 1e-4, "xi={xi:?} {d:e}");
        }
    }

    #[test]
    fn h0_reduces_to_the_potential_for_linear_models() {
        let m = disk_model(64, 4.0);
        let lattice = *m.grid();
        let h0 = compute_h0(&m, &lattice).unwrap();
        let d = h0.sub(&m.h0_field([0.0, 0.0])).unwrap().max_abs();
        assert!(d < 1e-12, "{d:e}");
    }

    #[test]
    fn h0_moves_linearly_with_saturation() {
        let g = GridSpec::new(32, 4.0, 1.25).unwrap();
        let lattice = GridSpec::new(16, 4.0, 1.0).unwrap();
        let q = compute_h0(&PotentialModel::new(Arc::new(BuiltinPotential::disk(1.0, 1.0)), g).unwrap(), &lattice).unwrap();
        let mut d: Vec<f64> = vec![];
        for mu in [1e-3, 5e-4] {
            let p = BuiltinPotential::new(PotentialKind::SaturatingDisk, Complex::new(1.0, 0.0), 1.0, mu, 1.0).unwrap();
            let h0 = compute_h0(&PotentialModel::new(Arc::new(p), g).unwrap(), &lattice).unwrap();
            d.push(h0.sub(&q).unwrap().max_abs());
        }
        assert!((d[0] / d[1] - 2.0).abs() < 0.01, "{d:?}");
    }

    #[test]
    fn synthetic_transform_recovers_band_limited_disk() {
        let m = disk_model(64, 4.0);
        let q = m.h0_field([0.0, 0.0]);
        let fq = fft_forward(&q).unwrap();
        let g = *fq.grid();
        let cutoff = 2.0;
        let chi = SpectralField::from_fn(g, |_| Complex::new(0.0, 0.0));
        let mut vals = chi.into_values();
        for (k, v) in vals.iter_mut().enumerate() {
            if magnitude(g.xi(k)) >= cutoff {
                *v = fq.values()[k];
            }
        }
        let t = TransformSamples { values: SpectralField::from_vec(g, vals).unwrap(), cutoff, records: vec![], failures: vec![] };
        let qb = born_reconstruct(&t).unwrap();
        let ideal = q.sub(&fft_inverse(&SpectralField::from_vec(g, fq.values().iter().enumerate().map(|(k, v)| if magnitude(g.xi(k)) < cutoff { *v } else { Complex::new(0.0, 0.0) }).collect()).unwrap()).unwrap()).unwrap();
        assert!(qb.sub(&ideal).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn first_order_routes_agree() {
        let m = disk_model(64, 4.0);
        let c = compute_constants(0.5, 0.25, 1.0, 1.0).unwrap().with_cutoff(6.0).unwrap();
        let s = CgoSolver::new(m, c, SolverOptions::default()).unwrap();
        let lattice = GridSpec::new(16, 2.0, 0.5).unwrap();
        let a = compute_qb1(&s, &lattice, R1Route::Explicit).unwrap();
        let b = compute_qb1(&s, &lattice, R1Route::Iterate).unwrap();
        let d = norm_l2(&a.sub(&b).unwrap()) / norm_l2(&b);
        assert!(d < 1e-4, "{d:e}");
    }

    #[test]
    fn jump_ring_finds_disk_edge() {
        let g = GridSpec::new(64, 4.0, 1.5).unwrap();
        let q = ScalarField::from_fn(g, |[a, b]| Complex::new(if a * a + b * b < 1.0 { 1.0 } else { 0.0 }, 0.0));
        let j = jump_ring(&q, 1.0, 2.0).unwrap();
        assert!(j.offset_cells <= 1.0, "{j:?}");
    }
}
