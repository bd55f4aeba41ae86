//! The scattering transform `T_h(xi) = int e^{i x.xi} h(x, e0 |1+R|) (1 + R) dx`.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;
use rayon::prelude::*;

use crate::cgo::{CgoSolution, CgoSolver};
use crate::error::{Error, Result};
use crate::faddeev::magnitude;
use crate::field::{bicubic, io::write_atomic, GridSpec, ScalarField, SpectralField};
use crate::scalar::{cis, f64_of, idx, imag_unit, lit, Real};

/// How a sample was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Volume,
    Boundary,
    /// The `j`-th Picard iterate stands in for `R`.
    Order(usize),
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Volume => write!(f, "volume"),
            Provenance::Boundary => write!(f, "boundary"),
            Provenance::Order(j) => write!(f, "order_{j}"),
        }
    }
}

/// Assembly mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransformMode<T> {
    Volume,
    /// Contour formula on a circle of the given radius.
    Boundary { radius: T },
    Order(usize),
}

/// Bookkeeping for one nonzero sample.
#[derive(Clone, Debug, PartialEq)]
pub struct PointRecord {
    pub index: usize,
    pub xi_magnitude: f64,
    pub iterations: usize,
    pub residual: f64,
    pub provenance: Provenance,
}

/// A lattice point whose solve failed; its sample is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PointFailure {
    pub index: usize,
    pub xi_magnitude: f64,
    pub message: String,
}

/// Transform samples on a spectral lattice.
#[derive(Clone, Debug)]
pub struct TransformSamples<T> {
    pub values: SpectralField<T>,
    /// Samples with `|xi|` below this are exactly zero.
    pub cutoff: T,
    pub records: Vec<PointRecord>,
    pub failures: Vec<PointFailure>,
}

impl<T: Real> TransformSamples<T> {
    /// One line per nonzero sample: index, `|xi|`, iterations, residual, provenance.
    pub fn sidecar(&self) -> String {
        let mut s = String::from("# index |xi| iterations residual provenance\n");
        for r in &self.records {
            let _ = writeln!(s, "{} {:.12e} {} {:.6e} {}", r.index, r.xi_magnitude, r.iterations, r.residual, r.provenance);
        }
        for f in &self.failures {
            let _ = writeln!(s, "# failed {} {:.12e} {}", f.index, f.xi_magnitude, f.message);
        }
        s
    }

    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.sidecar().as_bytes())
    }

    /// Lattice points strictly inside the cutoff disk.
    pub fn below_cutoff_count(&self) -> usize {
        let g = self.values.grid();
        (0..g.len()).filter(|&k| magnitude(g.xi(k)) < self.cutoff).count()
    }
}

/// `sum_x e^{i x.xi} f(x) h^2` over the nonzero samples of `f`.
pub fn fourier_sample<T: Real>(f: &ScalarField<T>, xi: [T; 2]) -> Complex<T> {
    let g = f.grid();
    let h = g.spacing();
    let mut acc = Complex::new(T::zero(), T::zero());
    for (k, v) in f.values().iter().enumerate() {
        if v.re != T::zero() || v.im != T::zero() {
            let [a, b] = g.point(k);
            acc = acc + *v * cis(a * xi[0] + b * xi[1]);
        }
    }
    acc * (h * h)
}

/// Volume formula with the converged remainder.
pub fn transform_volume<T: Real>(solver: &CgoSolver<T>, sol: &CgoSolution<T>) -> Result<Complex<T>> {
    let f = solver.source_field(sol.param.xi, &sol.r)?;
    Ok(fourier_sample(&f, sol.param.xi))
}

/// Volume formula with the `j`-th iterate; `j = 0` uses `R = 0`.
pub fn transform_order_j<T: Real>(solver: &CgoSolver<T>, xi: [T; 2], j: usize) -> Result<Complex<T>> {
    let r = solver.iterates(xi, j)?.pop().expect("iterates include R_0");
    Ok(fourier_sample(&solver.source_field(xi, &r)?, xi))
}

/// Default number of quadrature nodes on the contour.
pub const CONTOUR_NODES: usize = 512;

/// Contour formula on the circle `|x| = radius` outside the support.
///
/// `dR/dnu` is a central difference over `+-2h` of bicubic samples of the
/// exterior extension of `R`.
pub fn transform_boundary<T: Real>(
    solver: &CgoSolver<T>,
    sol: &CgoSolution<T>,
    radius: T,
    nodes: usize,
) -> Result<Complex<T>> {
    let g = solver.grid();
    let delta = g.spacing() * lit(2.0);
    if !(radius - delta > g.support_radius()) || !(radius + delta < g.half_width() * lit(0.5)) {
        return Err(Error::InvalidArgument(format!(
            "contour radius {radius} must leave 2h clearance from the support {} and from L/2",
            g.support_radius()
        )));
    }
    if nodes < 8 {
        return Err(Error::InvalidArgument("need at least 8 contour nodes".into()));
    }
    let ext = solver.extend(sol, radius + delta * lit(2.0))?;
    let xi = sol.param.xi;
    let z = sol.param.z;
    let i = imag_unit::<T>();
    let two: T = lit(2.0);
    let mut acc = Complex::new(T::zero(), T::zero());
    for j in 0..nodes {
        let th = T::PI() * two * idx::<T>(j) / idx::<T>(nodes);
        let nu = [th.cos(), th.sin()];
        let at = |r: T| bicubic(&ext, [r * nu[0], r * nu[1]]).ok_or_else(|| Error::UnsupportedRegion("contour".into()));
        let r0 = at(radius)?;
        let dr = (at(radius + delta)? - at(radius - delta)?) / (two * delta);
        let e = cis(radius * (nu[0] * xi[0] + nu[1] * xi[1]));
        let de = e * i * (nu[0] * xi[0] + nu[1] * xi[1]);
        let znu = z[0] * nu[0] + z[1] * nu[1];
        acc = acc + e * dr - r0 * de + i * znu * e * r0 * two;
    }
    Ok(acc * (radius * T::PI() * two / idx::<T>(nodes)))
}

fn sample_point<T: Real>(
    solver: &CgoSolver<T>,
    xi: [T; 2],
    mode: TransformMode<T>,
) -> Result<(Complex<T>, usize, f64, Provenance)> {
    match mode {
        TransformMode::Volume => {
            let sol = solver.solve(xi)?;
            Ok((transform_volume(solver, &sol)?, sol.iterations, f64_of(sol.residual), Provenance::Volume))
        }
        TransformMode::Boundary { radius } => {
            let sol = solver.solve(xi)?;
            let t = transform_boundary(solver, &sol, radius, CONTOUR_NODES)?;
            Ok((t, sol.iterations, f64_of(sol.residual), Provenance::Boundary))
        }
        TransformMode::Order(j) => {
            let its = solver.iterates(xi, j)?;
            let last = its.last().expect("iterates include R_0");
            let step = if j > 0 { f64_of(last.sub(&its[j - 1])?.max_abs()) } else { 0.0 };
            let t = fourier_sample(&solver.source_field(xi, last)?, xi);
            Ok((t, j, step, Provenance::Order(j)))
        }
    }
}

/// Samples the transform on every point of `lattice`, in parallel.
///
/// Points below the solver's cutoff are exact zeros unless `apply_cutoff` is
/// false. Failed points are zeroed and listed.
pub fn assemble_transform<T: Real>(
    solver: &CgoSolver<T>,
    lattice: &GridSpec<T>,
    mode: TransformMode<T>,
    apply_cutoff: bool,
) -> Result<TransformSamples<T>> {
    let cutoff = if apply_cutoff { solver.constants().cutoff } else { T::zero() };
    let results: Vec<_> = (0..lattice.len())
        .into_par_iter()
        .map(|k| {
            let xi = lattice.xi(k);
            let mag = magnitude(xi);
            if mag < cutoff || mag == T::zero() {
                return None;
            }
            Some((k, f64_of(mag), sample_point(solver, xi, mode)))
        })
        .collect();
    let mut values = vec![Complex::new(T::zero(), T::zero()); lattice.len()];
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (index, xi_magnitude, res) in results.into_iter().flatten() {
        match res {
            Ok((t, iterations, residual, provenance)) if t.re.is_finite() && t.im.is_finite() => {
                values[index] = t;
                records.push(PointRecord { index, xi_magnitude, iterations, residual, provenance });
            }
            Ok(_) => failures.push(PointFailure { index, xi_magnitude, message: "non-finite sample".into() }),
            Err(e) => failures.push(PointFailure { index, xi_magnitude, message: e.to_string() }),
        }
    }
    Ok(TransformSamples { values: SpectralField::from_vec(*lattice, values)?, cutoff, records, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgo::{compute_constants, SolverOptions};
    use crate::field::fft_forward;
    use crate::potential::{BuiltinPotential, PotentialModel};
    use std::sync::Arc;

    fn disk_solver(amp: f64, n: usize, cutoff: f64) -> CgoSolver<f64> {
        let g = GridSpec::new(n, 4.0, 1.25).unwrap();
        let m = PotentialModel::new(Arc::new(BuiltinPotential::disk(amp, 1.0)), g).unwrap();
        let c = compute_constants(0.5, 0.25, 1.0, 1.0).unwrap().with_cutoff(cutoff).unwrap();
        CgoSolver::new(m, c, SolverOptions::default()).unwrap()
    }

    #[test]
    fn order_zero_is_fourier_transform_for_linear_potentials() {
        let s = disk_solver(1.0, 64, 1.0);
        let q = s.model().h0_field([1.0, 0.0]);
        let fq = fft_forward(&q).unwrap();
        let g = *q.grid();
        for k in [g.origin_index() * 65 + 3, 100, 2000] {
            let t = transform_order_j(&s, g.xi(k), 0).unwrap();
            assert!((t - fq.values()[k]).norm() < 1e-12, "{k}");
        }
    }

    #[test]
    fn weak_potential_tends_to_fourier_transform() {
        let xi = [5.0, 2.0];
        let mut prev = f64::INFINITY;
        for amp in [1e-1, 1e-2] {
            let s = disk_solver(amp, 64, 1.0);
            let sol = s.solve(xi).unwrap();
            let t = transform_volume(&s, &sol).unwrap();
            let t0 = transform_order_j(&s, xi, 0).unwrap();
            let q1 = amp * std::f64::consts::PI;
            let d = (t - t0).norm();
            assert!(d <= 4.0 * sol.sup_norm() * q1, "{d:e}");
            assert!(d < prev / 50.0);
            prev = d;
        }
    }

    #[test]
    fn iterates_approach_the_limit() {
        let s = disk_solver(1.0, 64, 1.0);
        let xi = [6.0, -3.0];
        let t = transform_volume(&s, &s.solve(xi).unwrap()).unwrap();
        let errs: Vec<f64> = (0..4).map(|j| (transform_order_j(&s, xi, j).unwrap() - t).norm()).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!((transform_order_j(&s, xi, 12).unwrap() - t).norm() < 1e-8);
    }

    #[test]
    fn contour_formula_matches_volume() {
        let s = disk_solver(1.0, 256, 1.0);
        let xi = [3.0, 2.0];
        let sol = s.solve(xi).unwrap();
        let v = transform_volume(&s, &sol).unwrap();
        let b1 = transform_boundary(&s, &sol, 1.5, CONTOUR_NODES).unwrap();
        let b2 = transform_boundary(&s, &sol, 1.8, CONTOUR_NODES).unwrap();
        assert!((b1 - v).norm() < 0.02 * v.norm(), "{v} {b1}");
        assert!((b1 - b2).norm() < 0.01 * b1.norm(), "{b1} {b2}");
        assert!(transform_boundary(&s, &sol, 1.26, 64).is_err());
    }

    #[test]
    fn assembly_zeroes_below_cutoff() {
        let s = disk_solver(0.5, 32, 3.0);
        let lattice = GridSpec::new(16, 2.0, 0.5).unwrap();
        let t = assemble_transform(&s, &lattice, TransformMode::Volume, true).unwrap();
        assert!(t.failures.is_empty());
        let mut zeros = 0;
        for k in 0..lattice.len() {
            let m = magnitude(lattice.xi(k));
            let v = t.values.values()[k];
            if m < 3.0 {
                assert!(v.re == 0.0 && v.im == 0.0);
                zeros += 1;
            } else {
                assert!(v.norm() > 0.0);
            }
        }
        assert_eq!(zeros, t.below_cutoff_count());
        assert_eq!(t.records.len(), lattice.len() - zeros);
        let disk = (-8i32..8)
            .flat_map(|a| (-8i32..8).map(move |b| a * a + b * b))
            .filter(|&m2| (m2 as f64).sqrt() * std::f64::consts::FRAC_PI_2 < 3.0)
            .count();
        assert_eq!(zeros, disk);
    }
}
