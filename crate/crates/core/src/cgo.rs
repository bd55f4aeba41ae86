//! Complex geometrical optics solutions `u = e^{i(x,z)} (1 + R)`.
//!
//! `R` is the fixed point of
//! `R = -g_z * (h(., e0 |1 + R|) (1 + R))`, computed by Picard iteration
//! from `R_0 = 0` on a box around the support.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::faddeev::{magnitude, z_from_xi, FactorizedPlan, FaddeevOptions, KernelFactory, SupportBox, SupportKernel};
use crate::field::{GridSpec, ScalarField};
use crate::potential::{e0, PotentialModel};
use crate::scalar::{f64_of, lit, re, Real};

/// Spectral parameter `xi` and the matching `z` with `(z, z) = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgoParameter<T> {
    pub xi: [T; 2],
    pub z: [Complex<T>; 2],
}

impl<T: Real> CgoParameter<T> {
    pub fn new(xi: [T; 2]) -> Result<Self> {
        if magnitude(xi) == T::zero() {
            return Err(Error::ZeroParameter);
        }
        if !xi[0].is_finite() || !xi[1].is_finite() {
            return Err(Error::NonFinite("xi".into()));
        }
        Ok(Self { xi, z: z_from_xi(xi) })
    }

    pub fn xi_magnitude(&self) -> T {
        magnitude(self.xi)
    }

    pub fn z_magnitude(&self) -> T {
        self.xi_magnitude() / T::SQRT_2()
    }

    pub fn e0(&self, x: [T; 2]) -> T {
        e0(x, self.xi)
    }

    pub fn e0_field(&self, grid: GridSpec<T>) -> ScalarField<T> {
        ScalarField::from_fn(grid, |x| re(self.e0(x)))
    }
}

/// Size constants of the existence theorem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConstants<T> {
    pub gamma: T,
    pub c_gamma: T,
    pub alpha_norm: T,
    pub beta_norm: T,
    /// `(c_gamma (||beta|| + 2 ||alpha||))^{1/gamma}`, a bound on `|z|`.
    pub c0_raw: T,
    /// Threshold on `|xi|`, `sqrt 2 c0_raw` unless overridden.
    pub cutoff: T,
    pub rho_lo: T,
    pub rho_hi: T,
    /// Ball radius used by the solver, the midpoint of `(rho_lo, rho_hi)`.
    pub rho: T,
}

/// Constants for the given decay exponent, decay constant and envelope norms.
pub fn compute_constants<T: Real>(gamma: T, c_gamma: T, alpha_norm: T, beta_norm: T) -> Result<SolverConstants<T>> {
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(Error::InvalidConstants(format!("gamma = {gamma} must lie in (0, 1)")));
    }
    if !(c_gamma > T::zero()) || !c_gamma.is_finite() {
        return Err(Error::InvalidConstants(format!("c_gamma = {c_gamma} must be positive")));
    }
    if !(alpha_norm > T::zero() && beta_norm > T::zero()) || !alpha_norm.is_finite() || !beta_norm.is_finite() {
        return Err(Error::InvalidConstants(format!("envelope norms {alpha_norm}, {beta_norm} must be positive")));
    }
    let c0_raw = (c_gamma * (beta_norm + lit::<T>(2.0) * alpha_norm)).powf(T::one() / gamma);
    let rho_lo = alpha_norm / (beta_norm + alpha_norm);
    let rho_hi = alpha_norm / beta_norm;
    Ok(SolverConstants {
        gamma,
        c_gamma,
        alpha_norm,
        beta_norm,
        c0_raw,
        cutoff: c0_raw * T::SQRT_2(),
        rho_lo,
        rho_hi,
        rho: (rho_lo + rho_hi) * lit(0.5),
    })
}

impl<T: Real> SolverConstants<T> {
    /// Same constants with a different `|xi|` threshold.
    pub fn with_cutoff(mut self, cutoff: T) -> Result<Self> {
        if !(cutoff >= T::zero()) || !cutoff.is_finite() {
            return Err(Error::InvalidConstants(format!("cutoff {cutoff} must be nonnegative")));
        }
        self.cutoff = cutoff;
        Ok(self)
    }
}

/// Controls of the Picard iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Refuse `|xi|` below the cutoff instead of solving and flagging.
    pub strict_cutoff: bool,
    pub faddeev: FaddeevOptions<T>,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self { tol: lit(1e-9), max_iter: 50, strict_cutoff: false, faddeev: FaddeevOptions::default() }
    }
}

/// Converged remainder and its iteration history.
#[derive(Clone, Debug)]
pub struct CgoSolution<T> {
    pub param: CgoParameter<T>,
    /// `R` on the solver's active disk, zero elsewhere.
    pub r: ScalarField<T>,
    pub iterations: usize,
    /// Sup norms of successive updates.
    pub updates: Vec<T>,
    pub contraction_ratios: Vec<T>,
    /// Sup-norm defect of one more application of the map.
    pub residual: T,
    pub rho_used: T,
    pub below_cutoff: bool,
}

impl<T: Real> CgoSolution<T> {
    pub fn sup_norm(&self) -> T {
        self.r.max_abs()
    }
}

/// Successive iteration failures before the contraction is declared lost.
pub const CONTRACTION_PATIENCE: usize = 3;

/// Picard solver for one potential, reusable across `xi`.
#[derive(Debug)]
pub struct CgoSolver<T: Real> {
    model: PotentialModel<T>,
    consts: SolverConstants<T>,
    opts: SolverOptions<T>,
    support: SupportBox,
    /// Box-local indices where the potential can be nonzero.
    active: Vec<usize>,
    points: Vec<[T; 2]>,
    factories: Mutex<BTreeMap<i32, Arc<KernelFactory<T>>>>,
}

type Data<T> = Vec<Complex<T>>;

impl<T: Real> CgoSolver<T> {
    pub fn new(model: PotentialModel<T>, consts: SolverConstants<T>, opts: SolverOptions<T>) -> Result<Self> {
        if !(opts.tol > T::zero()) || opts.max_iter == 0 {
            return Err(Error::InvalidArgument("tol and max_iter must be positive".into()));
        }
        let grid = *model.grid();
        let support = SupportBox::new(&grid);
        let reach = grid.support_radius() + grid.spacing();
        let points: Vec<[T; 2]> = (0..support.len * support.len).map(|k| support.point(&grid, k)).collect();
        let active = (0..points.len())
            .filter(|&k| {
                let [a, b] = points[k];
                a * a + b * b <= reach * reach
            })
            .collect();
        Ok(Self { model, consts, opts, support, active, points, factories: Mutex::new(BTreeMap::new()) })
    }

    pub fn model(&self) -> &PotentialModel<T> {
        &self.model
    }

    pub fn constants(&self) -> &SolverConstants<T> {
        &self.consts
    }

    pub fn options(&self) -> &SolverOptions<T> {
        &self.opts
    }

    pub fn grid(&self) -> &GridSpec<T> {
        self.model.grid()
    }

    /// Kernel for `xi`, planned on the dyadic `|xi|` band containing it.
    pub fn kernel(&self, xi: [T; 2]) -> Result<SupportKernel<T>> {
        let mag = magnitude(xi);
        if mag == T::zero() {
            return Err(Error::ZeroParameter);
        }
        let band = f64_of(mag).log2().floor() as i32;
        let factory = {
            let mut map = self.factories.lock().expect("kernel cache poisoned");
            match map.get(&band) {
                Some(f) => Arc::clone(f),
                None => {
                    let f = Arc::new(KernelFactory::new(self.grid(), lit(2f64.powi(band)), &self.opts.faddeev)?);
                    map.insert(band, Arc::clone(&f));
                    f
                }
            }
        };
        factory.kernel(xi)
    }

    fn e0_box(&self, xi: [T; 2]) -> Vec<T> {
        self.points.iter().map(|&x| e0(x, xi)).collect()
    }

    /// `h(x, e0 |1 + R|) (1 + R)` on the box.
    fn source(&self, e0v: &[T], r: &[Complex<T>]) -> Data<T> {
        let h = self.grid().spacing();
        let p = self.model.potential();
        let mut out = vec![Complex::new(T::zero(), T::zero()); r.len()];
        for &k in &self.active {
            let one_r = r[k] + T::one();
            out[k] = p.eval_cell(self.points[k], h, e0v[k] * one_r.norm()) * one_r;
        }
        out
    }

    /// One application of the fixed-point map.
    fn step(&self, kernel: &SupportKernel<T>, e0v: &[T], r: &[Complex<T>]) -> Data<T> {
        let g = kernel.apply(&self.source(e0v, r));
        let mut out = vec![Complex::new(T::zero(), T::zero()); r.len()];
        for &k in &self.active {
            out[k] = -g[k];
        }
        out
    }

    fn sup_diff(a: &[Complex<T>], b: &[Complex<T>]) -> T {
        a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm()))
    }

    fn sup(a: &[Complex<T>]) -> T {
        a.iter().fold(T::zero(), |m, x| m.max(x.norm()))
    }

    fn check_cutoff(&self, param: &CgoParameter<T>) -> Result<bool> {
        let below = param.xi_magnitude() < self.consts.cutoff;
        if below && self.opts.strict_cutoff {
            return Err(Error::BelowCutoff {
                magnitude: f64_of(param.xi_magnitude()),
                cutoff: f64_of(self.consts.cutoff),
            });
        }
        Ok(below)
    }

    /// Solves from `R_0 = 0`.
    pub fn solve(&self, xi: [T; 2]) -> Result<CgoSolution<T>> {
        self.solve_from(xi, None)
    }

    /// Solves from the given starting remainder, restricted to the active disk.
    pub fn solve_from(&self, xi: [T; 2], start: Option<&ScalarField<T>>) -> Result<CgoSolution<T>> {
        let param = CgoParameter::new(xi)?;
        let below = self.check_cutoff(&param)?;
        let kernel = self.kernel(xi)?;
        let e0v = self.e0_box(xi);
        let mut r = vec![Complex::new(T::zero(), T::zero()); self.points.len()];
        if let Some(s) = start {
            if !s.grid().same_layout(self.grid()) {
                return Err(Error::GridMismatch);
            }
            let data = self.support.extract(s);
            for &k in &self.active {
                r[k] = data[k];
            }
        }
        let rho = self.consts.rho;
        let mut updates = Vec::new();
        let mut ratios = Vec::new();
        let mut strikes = 0;
        for it in 1..=self.opts.max_iter {
            let next = self.step(&kernel, &e0v, &r);
            if next.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::NonFinite(format!("iterate {it}")));
            }
            let upd = Self::sup_diff(&next, &r);
            let norm = Self::sup(&next);
            if let Some(&prev) = updates.last() {
                if prev > T::zero() {
                    let q: T = upd / prev;
                    ratios.push(q);
                    strikes = if q >= T::one() { strikes + 1 } else { 0 };
                    if strikes >= CONTRACTION_PATIENCE {
                        return Err(Error::ContractionFailure { step: it, ratio: f64_of(q) });
                    }
                }
            }
            updates.push(upd);
            r = next;
            if !below && norm > rho {
                return Err(Error::BallExit { step: it, norm: f64_of(norm), rho: f64_of(rho) });
            }
            if upd <= self.opts.tol * (T::one() + norm) {
                let residual = Self::sup_diff(&self.step(&kernel, &e0v, &r), &r);
                return Ok(CgoSolution {
                    param,
                    r: self.support.insert(self.grid(), &r),
                    iterations: it,
                    updates,
                    contraction_ratios: ratios,
                    residual,
                    rho_used: rho,
                    below_cutoff: below,
                });
            }
        }
        Err(Error::NotConverged { iterations: self.opts.max_iter, increment: f64_of(*updates.last().unwrap_or(&T::zero())) })
    }

    /// Iterates `R_0 = 0, R_1, ..., R_j` as fields.
    pub fn iterates(&self, xi: [T; 2], j: usize) -> Result<Vec<ScalarField<T>>> {
        let param = CgoParameter::new(xi)?;
        self.check_cutoff(&param)?;
        let e0v = self.e0_box(xi);
        let mut r = vec![Complex::new(T::zero(), T::zero()); self.points.len()];
        let mut out = vec![self.support.insert(self.grid(), &r)];
        if j == 0 {
            return Ok(out);
        }
        let kernel = self.kernel(xi)?;
        for _ in 0..j {
            r = self.step(&kernel, &e0v, &r);
            out.push(self.support.insert(self.grid(), &r));
        }
        Ok(out)
    }

    /// `h(x, e0 |1 + R|) (1 + R)` on the full grid.
    pub fn source_field(&self, xi: [T; 2], r: &ScalarField<T>) -> Result<ScalarField<T>> {
        if !r.grid().same_layout(self.grid()) {
            return Err(Error::GridMismatch);
        }
        let h = self.grid().spacing();
        let p = self.model.potential();
        let mut i = 0;
        let vals = r.values();
        Ok(ScalarField::from_fn(*self.grid(), |x| {
            let one_r = vals[i] + T::one();
            i += 1;
            p.eval_cell(x, h, e0(x, xi) * one_r.norm()) * one_r
        }))
    }

    /// `R` on the full grid, accurate on `|x| <= target`, from the converged interior values.
    pub fn extend(&self, sol: &CgoSolution<T>, target: T) -> Result<ScalarField<T>> {
        let f = self.source_field(sol.param.xi, &sol.r)?;
        let source = self.grid().support_radius() + self.grid().spacing();
        let plan = FactorizedPlan::new(self.grid(), sol.param.xi, source, target, &self.opts.faddeev)?;
        Ok(plan.apply(&f)?.scale(re(-T::one())))
    }

    /// Random starting remainder with `||R_0||_inf <= radius` on the active disk.
    pub fn random_start(&self, radius: T, seed: u64) -> ScalarField<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![Complex::new(T::zero(), T::zero()); self.points.len()];
        for &k in &self.active {
            let m: f64 = rng.gen::<f64>().sqrt();
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            data[k] = Complex::new(lit::<T>(m * a.cos()), lit::<T>(m * a.sin())) * radius;
        }
        self.support.insert(self.grid(), &data)
    }
}

/// Errors of the iterates against the converged remainder.
#[derive(Clone, Debug)]
pub struct IterateReport {
    /// `(j, ||R - R_j||_inf)`.
    pub errors: Vec<(usize, f64)>,
    /// Geometric mean of consecutive error ratios.
    pub mean_ratio: f64,
}

/// `||R - R_j||_inf` for `j = 0..=j_max`.
pub fn iterate_diagnostics<T: Real>(solver: &CgoSolver<T>, xi: [T; 2], j_max: usize) -> Result<IterateReport> {
    let sol = solver.solve(xi)?;
    let its = solver.iterates(xi, j_max)?;
    let errors: Vec<(usize, f64)> =
        its.iter().enumerate().map(|(j, rj)| (j, f64_of(sol.r.sub(rj).map_or(T::zero(), |d| d.max_abs())))).collect();
    let logs: Vec<f64> = errors
        .windows(2)
        .filter(|w| w[0].1 > 0.0 && w[1].1 > 0.0)
        .map(|w| (w[1].1 / w[0].1).ln())
        .collect();
    let mean_ratio = if logs.is_empty() { 0.0 } else { (logs.iter().sum::<f64>() / logs.len() as f64).exp() };
    Ok(IterateReport { errors, mean_ratio })
}

/// Fitted slope of `log ||R||_inf` against `log |z|` along the direction `angle`.
pub fn decay_slope<T: Real>(solver: &CgoSolver<T>, xi_magnitudes: &[T], angle: T) -> Result<(Vec<(f64, f64)>, f64)> {
    if xi_magnitudes.len() < 2 {
        return Err(Error::InvalidArgument("need at least two |xi| values".into()));
    }
    let mut pts = Vec::with_capacity(xi_magnitudes.len());
    for &m in xi_magnitudes {
        let sol = solver.solve([m * angle.cos(), m * angle.sin()])?;
        pts.push((f64_of(sol.param.z_magnitude()), f64_of(sol.sup_norm())));
    }
    let slope = crate::faddeev::loglog_slope(&pts);
    Ok((pts, slope))
}
