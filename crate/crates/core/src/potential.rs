//! Nonlinear potentials `h(x, s)` and the structural conditions they must meet.
//!
//! A potential is compactly supported in `x` and is evaluated at
//! `s = e0(x) |1 + R(x)|` during the CGO iteration, where
//! `e0 = exp((x1 xi2 - x2 xi1)/2)`. Two envelopes control the analysis:
//! `|h(x, s)| <= alpha(x)` and
//! `|h(x, e0|1+R1|) - h(x, e0|1+R2|)| <= beta(x) |R1 - R2|`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField};
use crate::scalar::{f64_of, lit, Real};

/// `e0(x; xi) = exp((x1 xi2 - x2 xi1) / 2) = |exp(i x.z)|`.
#[inline]
pub fn e0<T: Real>(x: [T; 2], xi: [T; 2]) -> T {
    ((x[0] * xi[1] - x[1] * xi[0]) * lit(0.5)).exp()
}

/// A potential depending on position and on the modulus of the solution.
pub trait NonlinearPotential<T: Real>: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// Radius of a disk containing the support.
    fn support_radius(&self) -> T;

    /// `h(x, s)` for `s >= 0`.
    fn eval(&self, x: [T; 2], s: T) -> Complex<T>;

    /// `h` averaged over the grid cell of side `cell` centred at `x`.
    fn eval_cell(&self, x: [T; 2], _cell: T, s: T) -> Complex<T> {
        self.eval(x, s)
    }

    /// `dh/ds`, when the model supplies it.
    fn ds(&self, _x: [T; 2], _s: T) -> Option<Complex<T>> {
        None
    }

    /// `d^2h/ds^2`, when the model supplies it.
    fn dss(&self, _x: [T; 2], _s: T) -> Option<Complex<T>> {
        None
    }

    /// Envelope `alpha(x) >= sup_s |h(x, s)|`.
    fn alpha(&self, x: [T; 2]) -> T;

    /// Lipschitz envelope `beta(x)` with respect to `R`.
    fn beta(&self, x: [T; 2]) -> T;

    /// Envelope of the first-order remainder, when known.
    fn beta1(&self, _x: [T; 2]) -> Option<T> {
        None
    }

    /// Whether `h` ignores `s`.
    fn is_linear(&self) -> bool {
        false
    }
}

/// Shapes of the built-in potentials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialKind {
    /// `c` on a disk of radius `r`.
    Disk,
    /// `c exp(-|x|^2/w^2)` cut off at radius `r`.
    Gaussian,
    /// `c` on two disks of radius `0.4 r` centred at `(+-0.5 r, 0)`.
    TwoDisks,
    /// `c / (1 + mu s/(1+s))` on a disk of radius `r`.
    SaturatingDisk,
}

impl PotentialKind {
    pub const ALL: [PotentialKind; 4] =
        [PotentialKind::Disk, PotentialKind::Gaussian, PotentialKind::TwoDisks, PotentialKind::SaturatingDisk];

    pub fn as_str(self) -> &'static str {
        match self {
            PotentialKind::Disk => "disk",
            PotentialKind::Gaussian => "gaussian",
            PotentialKind::TwoDisks => "two-disks",
            PotentialKind::SaturatingDisk => "saturating-disk",
        }
    }
}

impl std::str::FromStr for PotentialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PotentialKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown potential kind {s:?}")))
    }
}

/// Radius probed for `|R|` when bounding the Lipschitz envelope of nonlinear models.
pub const LIPSCHITZ_PROBE_RADIUS: f64 = 0.5;

/// One of the built-in models.
#[derive(Clone, Debug, PartialEq)]
pub struct BuiltinPotential<T> {
    pub kind: PotentialKind,
    pub amplitude: Complex<T>,
    pub radius: T,
    /// Saturation strength; ignored by the linear kinds.
    pub mu: T,
    /// Gaussian width; ignored by the other kinds.
    pub width: T,
    /// Largest `e0` the Lipschitz envelope has to cover.
    pub e0_max: T,
}

impl<T: Real> BuiltinPotential<T> {
    pub fn new(kind: PotentialKind, amplitude: Complex<T>, radius: T, mu: T, e0_max: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("radius {radius} must be positive")));
        }
        if !(mu >= T::zero()) || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("mu {mu} must be nonnegative")));
        }
        if !(e0_max >= T::one()) {
            return Err(Error::InvalidArgument("e0_max must be at least 1".into()));
        }
        if !amplitude.re.is_finite() || !amplitude.im.is_finite() {
            return Err(Error::NonFinite("amplitude".into()));
        }
        Ok(Self { kind, amplitude, radius, mu, width: radius / lit(3.0), e0_max })
    }

    pub fn with_width(mut self, width: T) -> Result<Self> {
        if !(width > T::zero()) || !width.is_finite() {
            return Err(Error::InvalidArgument(format!("width {width} must be positive")));
        }
        self.width = width;
        Ok(self)
    }

    /// Linear disk of amplitude `c` and radius `r`.
    pub fn disk(c: T, r: T) -> Self {
        Self::new(PotentialKind::Disk, Complex::new(c, T::zero()), r, T::zero(), T::one()).expect("valid disk")
    }

    /// `e0_max` for a support of radius `r` and `|xi| <= xi_max`.
    pub fn e0_bound(r: T, xi_max: T) -> T {
        (r * xi_max * lit(0.5)).exp()
    }

    fn inside(&self, x: [T; 2]) -> bool {
        let r = self.radius;
        let within = |c: T, rad: T| {
            let a = x[0] - c;
            a * a + x[1] * x[1] < rad * rad
        };
        match self.kind {
            PotentialKind::TwoDisks => {
                let c = r * lit(0.5);
                let rad = r * lit(0.4);
                within(c, rad) || within(-c, rad)
            }
            _ => within(T::zero(), r),
        }
    }

    fn shape(&self, x: [T; 2]) -> T {
        match self.kind {
            PotentialKind::Gaussian => (-(x[0] * x[0] + x[1] * x[1]) / (self.width * self.width)).exp(),
            _ => T::one(),
        }
    }

    /// Spatial profile in `[0, 1]`.
    fn profile(&self, x: [T; 2]) -> T {
        if self.inside(x) { self.shape(x) } else { T::zero() }
    }

    /// Fraction of the cell of side `cell` centred at `x` lying in the support set.
    fn coverage(&self, x: [T; 2], cell: T) -> T {
        let half = cell * lit(0.5);
        let probes = [[-half, -half], [half, -half], [-half, half], [half, half], [T::zero(), T::zero()]];
        let first = self.inside(x);
        let uniform = probes.iter().all(|c| self.inside([x[0] + c[0], x[1] + c[1]]) == first);
        // the disks are convex, and for the pair the only non-convex spot is the gap near x1 = 0
        let near_gap = self.kind == PotentialKind::TwoDisks && x[0].abs() < self.radius * lit(0.1) + cell;
        if uniform && !near_gap {
            return if first { T::one() } else { T::zero() };
        }
        const SUB: usize = 16;
        let mut hits = 0usize;
        for p in 0..SUB {
            for q in 0..SUB {
                let u = (lit::<T>(p as f64) + lit(0.5)) / lit(SUB as f64) - lit(0.5);
                let v = (lit::<T>(q as f64) + lit(0.5)) / lit(SUB as f64) - lit(0.5);
                hits += usize::from(self.inside([x[0] + u * cell, x[1] + v * cell]));
            }
        }
        lit::<T>(hits as f64) / lit((SUB * SUB) as f64)
    }

    fn cell_profile(&self, x: [T; 2], cell: T) -> T {
        if cell == T::zero() {
            return self.profile(x);
        }
        self.coverage(x, cell) * self.shape(x)
    }

    fn saturation(&self, s: T) -> T {
        match self.kind {
            PotentialKind::SaturatingDisk => {
                let s = s.max(T::zero());
                T::one() / (T::one() + self.mu * s / (T::one() + s))
            }
            _ => T::one(),
        }
    }

    /// `sup_{e0 <= e0_max} e0 / (1 + k e0)^2` with `k = (1 + mu)(1 - probe)`.
    fn lipschitz_factor(&self) -> T {
        let k = (T::one() + self.mu) * (T::one() - lit(LIPSCHITZ_PROBE_RADIUS));
        let peak = T::one() / k;
        let e = if self.e0_max < peak { self.e0_max } else { peak };
        e / ((T::one() + k * e) * (T::one() + k * e))
    }
}

impl<T: Real> NonlinearPotential<T> for BuiltinPotential<T> {
    fn name(&self) -> String {
        self.kind.as_str().to_string()
    }

    fn support_radius(&self) -> T {
        self.radius
    }

    fn eval(&self, x: [T; 2], s: T) -> Complex<T> {
        self.amplitude * (self.profile(x) * self.saturation(s))
    }

    fn eval_cell(&self, x: [T; 2], cell: T, s: T) -> Complex<T> {
        self.amplitude * (self.cell_profile(x, cell) * self.saturation(s))
    }

    fn ds(&self, x: [T; 2], s: T) -> Option<Complex<T>> {
        Some(match self.kind {
            PotentialKind::SaturatingDisk => {
                let d = T::one() + (T::one() + self.mu) * s;
                self.amplitude * (-self.mu * self.profile(x) / (d * d))
            }
            _ => Complex::new(T::zero(), T::zero()),
        })
    }

    fn dss(&self, x: [T; 2], s: T) -> Option<Complex<T>> {
        Some(match self.kind {
            PotentialKind::SaturatingDisk => {
                let d = T::one() + (T::one() + self.mu) * s;
                self.amplitude * (lit::<T>(2.0) * self.mu * (T::one() + self.mu) * self.profile(x) / (d * d * d))
            }
            _ => Complex::new(T::zero(), T::zero()),
        })
    }

    fn alpha(&self, x: [T; 2]) -> T {
        self.amplitude.norm() * self.profile(x)
    }

    fn beta(&self, x: [T; 2]) -> T {
        match self.kind {
            PotentialKind::SaturatingDisk if self.mu > T::zero() => {
                self.amplitude.norm() * self.mu * self.profile(x) * self.lipschitz_factor()
            }
            // any nonnegative envelope bounds a linear model; alpha keeps it comparable
            _ => self.alpha(x),
        }
    }

    fn beta1(&self, x: [T; 2]) -> Option<T> {
        Some(match self.kind {
            PotentialKind::SaturatingDisk => self.beta(x),
            _ => T::zero(),
        })
    }

    fn is_linear(&self) -> bool {
        self.kind != PotentialKind::SaturatingDisk || self.mu == T::zero()
    }
}

/// A potential bound to a grid, with cached envelope norms.
#[derive(Clone, Debug)]
pub struct PotentialModel<T: Real> {
    potential: Arc<dyn NonlinearPotential<T>>,
    grid: GridSpec<T>,
    alpha_norm: T,
    beta_norm: T,
}

impl<T: Real> PotentialModel<T> {
    /// Binds `potential` to `grid`, which must contain its support.
    pub fn new(potential: Arc<dyn NonlinearPotential<T>>, grid: GridSpec<T>) -> Result<Self> {
        if potential.support_radius() > grid.support_radius() {
            return Err(Error::SupportViolation {
                radius: f64_of(grid.support_radius()),
                mass: f64_of(potential.support_radius()),
            });
        }
        let (alpha_norm, beta_norm) = Self::envelope_norms(potential.as_ref(), &grid);
        Ok(Self { potential, grid, alpha_norm, beta_norm })
    }

    fn envelope_norms(p: &dyn NonlinearPotential<T>, grid: &GridSpec<T>) -> (T, T) {
        let h = grid.spacing();
        let (mut a, mut b) = (T::zero(), T::zero());
        for k in 0..grid.len() {
            let x = grid.point(k);
            let (av, bv) = (p.alpha(x), p.beta(x));
            a = a + av * av;
            b = b + bv * bv;
        }
        ((a * h * h).sqrt(), (b * h * h).sqrt())
    }

    /// Recomputes the norms from scratch; equals the cached values.
    pub fn recompute_norms(&self) -> (T, T) {
        Self::envelope_norms(self.potential.as_ref(), &self.grid)
    }

    pub fn potential(&self) -> &dyn NonlinearPotential<T> {
        self.potential.as_ref()
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn alpha_norm(&self) -> T {
        self.alpha_norm
    }

    pub fn beta_norm(&self) -> T {
        self.beta_norm
    }

    /// `h(x, e0)` on the grid, the potential seen by the zeroth iterate.
    pub fn h0_field(&self, xi: [T; 2]) -> ScalarField<T> {
        let h = self.grid.spacing();
        ScalarField::from_fn(self.grid, |x| self.potential.eval_cell(x, h, e0(x, xi)))
    }

    /// Grid samples of `alpha`.
    pub fn alpha_field(&self) -> ScalarField<T> {
        ScalarField::from_fn(self.grid, |x| Complex::new(self.potential.alpha(x), T::zero()))
    }

    /// Cell-averaged `h(x, s(x))` for an arbitrary nonnegative `s` field.
    pub fn sample(&self, s: impl Fn([T; 2]) -> T) -> ScalarField<T> {
        let h = self.grid.spacing();
        ScalarField::from_fn(self.grid, |x| self.potential.eval_cell(x, h, s(x)))
    }
}

/// Result of probing the two structural conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    /// Largest `|h| / alpha` seen.
    pub boundedness_ratio: f64,
    /// Largest `|h(R1) - h(R2)| / (beta |R1 - R2|)` seen.
    pub lipschitz_ratio: f64,
    pub samples: usize,
    pub boundedness_ok: bool,
    pub lipschitz_ok: bool,
    /// `(x, xi)` of the worst Lipschitz sample.
    pub worst: ([f64; 2], [f64; 2]),
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.boundedness_ok && self.lipschitz_ok
    }
}

/// Relative slack allowed in the condition checks.
pub const CONDITION_SLACK: f64 = 1e-6;

/// Samples random support points, `R1`, `R2` with `|R| <= r_bound` and every `xi` in `xis`.
pub fn verify_conditions<T: Real>(
    p: &dyn NonlinearPotential<T>,
    xis: &[[T; 2]],
    samples_per_xi: usize,
    r_bound: T,
    seed: u64,
) -> ConditionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rad = f64_of(p.support_radius());
    let rb = f64_of(r_bound);
    let mut bound = 0.0f64;
    let mut lip = 0.0f64;
    let mut worst = ([0.0; 2], [0.0; 2]);
    let mut count = 0;
    let slack = 1.0 + CONDITION_SLACK;
    let mut bounded_ok = true;
    let mut lip_ok = true;
    for xi in xis {
        for _ in 0..samples_per_xi {
            let (rr, th): (f64, f64) = (rad * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
            let x = [lit::<T>(rr * th.cos()), lit::<T>(rr * th.sin())];
            let mut rand_r = || {
                let (m, a): (f64, f64) = (rb * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
                Complex::new(lit::<T>(m * a.cos()), lit::<T>(m * a.sin()))
            };
            let (r1, r2) = (rand_r(), rand_r());
            let e = e0(x, *xi);
            let s1 = e * (Complex::new(T::one(), T::zero()) + r1).norm();
            let s2 = e * (Complex::new(T::one(), T::zero()) + r2).norm();
            let (h1, h2) = (p.eval(x, s1), p.eval(x, s2));
            let a = f64_of(p.alpha(x));
            let hb = f64_of(h1.norm().max(h2.norm()));
            if hb > a * slack + 1e-300 {
                bounded_ok = false;
            }
            if a > 0.0 {
                bound = bound.max(hb / a);
            }
            let diff = f64_of((h1 - h2).norm());
            let denom = f64_of(p.beta(x)) * f64_of((r1 - r2).norm());
            if diff > denom * slack + 1e-300 {
                lip_ok = false;
            }
            if denom > 0.0 {
                let q = diff / denom;
                if q > lip {
                    lip = q;
                    worst = ([f64_of(x[0]), f64_of(x[1])], [f64_of(xi[0]), f64_of(xi[1])]);
                }
            } else if diff > 0.0 {
                lip = f64::INFINITY;
            }
            count += 1;
        }
    }
    ConditionReport {
        boundedness_ratio: bound,
        lipschitz_ratio: lip,
        samples: count,
        boundedness_ok: bounded_ok,
        lipschitz_ok: lip_ok,
        worst,
    }
}

/// Expansion `h(x, e0 (1 + s)) = h0 + dsh s + O(s^2)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaylorData<T> {
    pub h0: Complex<T>,
    /// `d/ds h(x, e0(1+s))` at `s = 0`, i.e. `e0 dh/dS(x, e0)`.
    pub dsh: Complex<T>,
    /// Bound on the quadratic coefficient over `|s| <= 1/2`.
    pub remainder_bound: T,
}

/// First-order expansion of `h` in the relative perturbation of its second argument.
pub fn taylor_data<T: Real>(p: &dyn NonlinearPotential<T>, x: [T; 2], e0v: T) -> Result<TaylorData<T>> {
    let h0 = p.eval(x, e0v);
    let d = p.ds(x, e0v).ok_or_else(|| Error::NotDifferentiable(p.name()))?;
    let mut sup = T::zero();
    const STEPS: usize = 64;
    for j in 0..=STEPS {
        let t = lit::<T>(j as f64 / STEPS as f64) - lit(0.5);
        let second = p.dss(x, e0v * (T::one() + t)).ok_or_else(|| Error::NotDifferentiable(p.name()))?;
        sup = sup.max(second.norm());
    }
    // sampled sup of a monotone-on-pieces second derivative; pad by 10%
    let remainder_bound = sup * e0v * e0v * lit(0.55);
    Ok(TaylorData { h0, dsh: d * e0v, remainder_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn saturating() -> BuiltinPotential<f64> {
        BuiltinPotential::new(PotentialKind::SaturatingDisk, Complex::new(1.0, 0.0), 1.0, 0.8, 1e4).unwrap()
    }

    /// Bounded but with an `s`-derivative that grows without limit.
    #[derive(Debug)]
    struct Oscillating;

    impl NonlinearPotential<f64> for Oscillating {
        fn name(&self) -> String {
            "oscillating".into()
        }
        fn support_radius(&self) -> f64 {
            1.0
        }
        fn eval(&self, x: [f64; 2], s: f64) -> Complex<f64> {
            let inside = x[0] * x[0] + x[1] * x[1] < 1.0;
            Complex::new(if inside { 0.5 * (1.0 + (s * s).sin()) } else { 0.0 }, 0.0)
        }
        fn alpha(&self, x: [f64; 2]) -> f64 {
            if x[0] * x[0] + x[1] * x[1] < 1.0 { 1.0 } else { 0.0 }
        }
        fn beta(&self, x: [f64; 2]) -> f64 {
            self.alpha(x)
        }
    }

    #[test]
    fn builtins_satisfy_conditions() {
        let xis: Vec<[f64; 2]> = (0..8).map(|k| {
            let t = k as f64 * 0.7;
            [12.0 * t.cos(), 12.0 * t.sin()]
        }).collect();
        for kind in PotentialKind::ALL {
            let e0_max = BuiltinPotential::e0_bound(1.0, 12.0);
            let p = BuiltinPotential::new(kind, Complex::new(1.3, -0.2), 1.0, 0.8, e0_max).unwrap();
            let rep = verify_conditions(&p, &xis, 400, 0.5, 7);
            assert!(rep.passed(), "{kind:?} {rep:?}");
        }
    }

    #[test]
    fn adversarial_model_fails_lipschitz() {
        let xis = [[0.0, 8.0], [8.0, 0.0], [-6.0, 6.0]];
        let rep = verify_conditions(&Oscillating, &xis, 500, 0.5, 3);
        assert!(rep.boundedness_ok);
        assert!(!rep.lipschitz_ok, "{rep:?}");
    }

    #[test]
    fn taylor_remainder_is_quadratic() {
        let p = saturating();
        let x = [0.2, -0.3];
        for e in [0.3, 1.0, 4.0] {
            let td = taylor_data(&p, x, e).unwrap();
            let mut prev = None;
            for s in [0.1, 0.05, 0.025] {
                let exact = p.eval(x, e * (1.0 + s));
                let rem = (exact - td.h0 - td.dsh * s).norm();
                assert!(rem <= td.remainder_bound * s * s, "e0={e} s={s}");
                if let Some(p) = prev {
                    let ratio: f64 = p / rem;
                    assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
                }
                prev = Some(rem);
            }
        }
    }

    #[test]
    fn missing_derivative_is_reported() {
        let err = taylor_data(&Oscillating, [0.1, 0.1], 2.0).unwrap_err();
        assert!(matches!(err, Error::NotDifferentiable(_)));
    }

    #[test]
    fn cached_norms_match_recomputation() {
        let g = GridSpec::<f64>::new(64, 4.0, 1.5).unwrap();
        let m = PotentialModel::new(Arc::new(saturating()), g).unwrap();
        let (a, b) = m.recompute_norms();
        assert!((a - m.alpha_norm()).abs() <= 1e-12 * a);
        assert!((b - m.beta_norm()).abs() <= 1e-12 * b.max(1e-300));
    }

    #[test]
    fn coverage_sampling_preserves_area() {
        let g = GridSpec::<f64>::new(128, 2.0, 0.9).unwrap();
        let p = BuiltinPotential::disk(1.0, 0.7);
        let m = PotentialModel::new(Arc::new(p), g).unwrap();
        let area = m.h0_field([3.0, 1.0]).integral().re;
        assert!((area - std::f64::consts::PI * 0.49).abs() < 5e-4, "{area}");
    }

    #[test]
    fn support_must_fit_grid() {
        let g = GridSpec::<f64>::new(64, 4.0, 1.0).unwrap();
        assert!(PotentialModel::new(Arc::new(BuiltinPotential::disk(1.0, 1.5)), g).is_err());
    }

    #[test]
    fn kinds_parse() {
        for k in PotentialKind::ALL {
            assert_eq!(k.as_str().parse::<PotentialKind>().unwrap(), k);
        }
        assert!("square".parse::<PotentialKind>().is_err());
    }
}
