//! Fixed-energy forward scattering by the Lippmann–Schwinger equation
//! `u = u0 - G_k * (h(., |u|) u)` with the outgoing Green function
//! `G_k(r) = (i/4) H0(kr)`.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::{bicubic, Fft2, GridSpec, ScalarField};
use crate::potential::PotentialModel;
use crate::scalar::{cis, f64_of, idx, lit, Real};
use crate::special::hankel1_0;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `(i/4) H0(k r)` for `k, r > 0`.
pub fn green_outgoing<T: Real>(k: T, r: T) -> Result<Complex<T>> {
    if !(k > T::zero()) {
        return Err(Error::InvalidArgument(format!("wavenumber {k} must be positive")));
    }
    Ok(hankel1_0(k * r)? * Complex::new(T::zero(), lit(0.25)))
}

/// Mean of `(i/4) H0(k|x|)` over the square cell of side `h` centred at the origin,
/// from the small-argument form of `H0`.
pub fn green_cell_average<T: Real>(k: T, h: T) -> Complex<T> {
    // mean of ln|x| over [-a, a]^2 is ln a + (ln 2 - 3 + pi/2)/2
    let mean_log = (h * lit(0.5)).ln() + lit((2f64.ln() - 3.0 + PI / 2.0) / 2.0);
    let arg = (k * lit(0.5)).ln() + mean_log + lit(EULER_GAMMA);
    let h0 = Complex::new(T::one(), lit::<T>(2.0 / PI) * arg);
    h0 * Complex::new(T::zero(), lit(0.25))
}

/// Plane wave `e^{ik(x, theta)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncidentWave<T> {
    pub k: T,
    pub theta: [T; 2],
}

impl<T: Real> IncidentWave<T> {
    pub fn new(k: T, theta: [T; 2]) -> Result<Self> {
        if !(k > T::zero()) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!("wavenumber {k} must be positive")));
        }
        let norm = (theta[0] * theta[0] + theta[1] * theta[1]).sqrt();
        if (norm - T::one()).abs() > lit(1e-12) {
            return Err(Error::InvalidArgument(format!("direction has length {norm}, not 1")));
        }
        Ok(Self { k, theta })
    }

    pub fn from_angle(k: T, angle: T) -> Result<Self> {
        Self::new(k, [angle.cos(), angle.sin()])
    }

    pub fn at(&self, x: [T; 2]) -> Complex<T> {
        cis(self.k * (x[0] * self.theta[0] + x[1] * self.theta[1]))
    }

    pub fn field(&self, grid: GridSpec<T>) -> ScalarField<T> {
        ScalarField::from_fn(grid, |x| self.at(x))
    }
}

/// Picard controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for ForwardOptions<T> {
    fn default() -> Self {
        Self { tol: lit(1e-10), max_iter: 200 }
    }
}

/// Total and scattered field of one incident wave.
#[derive(Clone, Debug)]
pub struct ScatteringSolution<T> {
    pub wave: IncidentWave<T>,
    pub u: ScalarField<T>,
    pub u_sc: ScalarField<T>,
    pub iterations: usize,
    pub residual: T,
}

/// Fewest grid points per wavelength accepted.
pub const POINTS_PER_WAVELENGTH: f64 = 8.0;

/// Lippmann–Schwinger solver for one potential and wavenumber.
#[derive(Clone, Debug)]
pub struct HelmholtzSolver<T: Real> {
    model: PotentialModel<T>,
    k: T,
    fft: Fft2<T>,
    /// Transform of the sampled Green function on the doubled grid.
    ghat: Vec<Complex<T>>,
}

impl<T: Real> HelmholtzSolver<T> {
    pub fn new(model: PotentialModel<T>, k: T) -> Result<Self> {
        if !(k > T::zero()) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!("wavenumber {k} must be positive")));
        }
        let g = *model.grid();
        let h = g.spacing();
        let ppw = f64_of(T::PI() * lit(2.0) / (k * h));
        if ppw < POINTS_PER_WAVELENGTH {
            return Err(Error::InvalidArgument(format!(
                "grid resolves {ppw:.2} points per wavelength, need {POINTS_PER_WAVELENGTH}"
            )));
        }
        let m = 2 * g.n();
        let mut ghat = vec![Complex::new(T::zero(), T::zero()); m * m];
        for j2 in 0..m {
            for j1 in 0..m {
                let d1 = if j1 < g.n() { j1 as f64 } else { j1 as f64 - m as f64 };
                let d2 = if j2 < g.n() { j2 as f64 } else { j2 as f64 - m as f64 };
                let r = lit::<T>(d1.hypot(d2)) * h;
                ghat[j2 * m + j1] = if r == T::zero() { green_cell_average(k, h) } else { green_outgoing(k, r)? };
            }
        }
        let fft = Fft2::new(m);
        fft.minus(&mut ghat);
        let scale = h * h / idx::<T>(m * m);
        for v in ghat.iter_mut() {
            *v = *v * scale;
        }
        Ok(Self { model, k, fft, ghat })
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn grid(&self) -> &GridSpec<T> {
        self.model.grid()
    }

    pub fn model(&self) -> &PotentialModel<T> {
        &self.model
    }

    /// `G_k * f` on the grid, with the convolution summed exactly over all grid pairs.
    pub fn convolve(&self, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        let g = self.grid();
        if !f.grid().same_layout(g) {
            return Err(Error::GridMismatch);
        }
        let n = g.n();
        let m = 2 * n;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); m * m];
        for i2 in 0..n {
            buf[i2 * m..i2 * m + n].copy_from_slice(&f.values()[i2 * n..(i2 + 1) * n]);
        }
        self.fft.minus(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.ghat) {
            *b = *b * *k;
        }
        self.fft.plus(&mut buf);
        let mut out = Vec::with_capacity(n * n);
        for i2 in 0..n {
            out.extend_from_slice(&buf[i2 * m..i2 * m + n]);
        }
        ScalarField::from_vec(*g, out)
    }

    /// `h(x, |u|) u`.
    pub fn source(&self, u: &ScalarField<T>) -> ScalarField<T> {
        let h = self.grid().spacing();
        let p = self.model.potential();
        let reach = p.support_radius() + h;
        u.map_with_point(|x, v| {
            if x[0] * x[0] + x[1] * x[1] > reach * reach {
                return Complex::new(T::zero(), T::zero());
            }
            p.eval_cell(x, h, v.norm()) * v
        })
    }

    /// Picard iteration from `u = u0`.
    pub fn solve(&self, wave: IncidentWave<T>, opts: &ForwardOptions<T>) -> Result<ScatteringSolution<T>> {
        if (wave.k - self.k).abs() > lit::<T>(1e-12) * self.k {
            return Err(Error::InvalidArgument("incident wavenumber differs from the solver's".into()));
        }
        let u0 = wave.field(*self.grid());
        let mut u = u0.clone();
        let mut prev = None;
        let mut strikes = 0;
        for it in 1..=opts.max_iter {
            let u_sc = self.convolve(&self.source(&u))?.scale(Complex::new(-T::one(), T::zero()));
            let next = u0.add(&u_sc)?;
            let upd = next.sub(&u)?.max_abs();
            if let Some(p) = prev {
                if p > T::zero() && upd >= p {
                    strikes += 1;
                    if strikes >= 3 {
                        return Err(Error::ContractionFailure { step: it, ratio: f64_of(upd / p) });
                    }
                } else {
                    strikes = 0;
                }
            }
            prev = Some(upd);
            u = next;
            if upd <= opts.tol * (T::one() + u.max_abs()) {
                let again = u0.sub(&self.convolve(&self.source(&u))?)?;
                let residual = again.sub(&u)?.max_abs();
                return Ok(ScatteringSolution { wave, u, u_sc, iterations: it, residual });
            }
        }
        Err(Error::NotConverged { iterations: opts.max_iter, increment: f64_of(prev.unwrap_or(T::zero())) })
    }
}

/// Samples of `A(k, theta', theta)`.
#[derive(Clone, Debug)]
pub struct AmplitudeSamples<T> {
    pub k: T,
    pub incident: [T; 2],
    pub directions: Vec<[T; 2]>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> AmplitudeSamples<T> {
    /// One line per direction: angle, `Re A`, `Im A`.
    pub fn table(&self) -> String {
        let mut s = String::from("# angle re im\n");
        for (d, v) in self.directions.iter().zip(&self.values) {
            s += &format!("{:.12e} {:.12e} {:.12e}\n", f64_of(d[1].atan2(d[0])), f64_of(v.re), f64_of(v.im));
        }
        s
    }
}

/// `A(k, theta', theta) = int e^{-ik(theta', y)} h(y, |u|) u(y) dy` for each `theta'`.
pub fn scattering_amplitude<T: Real>(
    solver: &HelmholtzSolver<T>,
    sol: &ScatteringSolution<T>,
    directions: &[[T; 2]],
) -> AmplitudeSamples<T> {
    let f = solver.source(&sol.u);
    let g = f.grid();
    let h2 = g.spacing() * g.spacing();
    let k = solver.k();
    let values = directions
        .iter()
        .map(|d| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (i, v) in f.values().iter().enumerate() {
                if v.re != T::zero() || v.im != T::zero() {
                    let [a, b] = g.point(i);
                    acc = acc + *v * cis(-k * (d[0] * a + d[1] * b));
                }
            }
            acc * h2
        })
        .collect();
    AmplitudeSamples { k, incident: sol.wave.theta, directions: directions.to_vec(), values }
}

/// Relative mismatch between `u_sc` and its far-field form per radius.
#[derive(Clone, Debug, PartialEq)]
pub struct FarFieldReport {
    /// `(radius, sum |u_sc - predicted| / sum |predicted|)`.
    pub rows: Vec<(f64, f64)>,
    /// Both sides vanish, so mismatches are reported as zero.
    pub degenerate: bool,
    pub decreasing: bool,
}

/// Compares `u_sc(r theta')` with `-(1+i)/(4 sqrt pi) (kr)^{-1/2} e^{ikr} A(theta')`.
pub fn far_field_check<T: Real>(
    sol: &ScatteringSolution<T>,
    amp: &AmplitudeSamples<T>,
    radii: &[T],
) -> Result<FarFieldReport> {
    let g = sol.u_sc.grid();
    let support = g.support_radius();
    let mut rows = Vec::with_capacity(radii.len());
    let pref = Complex::new(-T::one(), -T::one()) / (lit::<T>(4.0) * T::PI().sqrt());
    let degenerate = amp.values.iter().all(|v| v.norm() == T::zero()) && sol.u_sc.max_abs() == T::zero();
    for &r in radii {
        if r < support * lit(4.0) || r + g.spacing() * lit(2.0) >= g.half_width() {
            return Err(Error::InvalidArgument(format!("radius {r} outside [4 R, L - 2h)")));
        }
        if degenerate {
            rows.push((f64_of(r), 0.0));
            continue;
        }
        let (mut num, mut den) = (T::zero(), T::zero());
        for (d, a) in amp.directions.iter().zip(&amp.values) {
            let x = [r * d[0], r * d[1]];
            let got = bicubic(&sol.u_sc, x).ok_or_else(|| Error::UnsupportedRegion("far-field sample".into()))?;
            let pred = pref * *a * cis(amp.k * r) / (amp.k * r).sqrt();
            num = num + (got - pred).norm();
            den = den + pred.norm();
        }
        rows.push((f64_of(r), f64_of(num / den)));
    }
    let decreasing = rows.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(FarFieldReport { rows, degenerate, decreasing })
}

/// Unit vectors at `count` equally spaced angles starting from `offset`.
pub fn directions<T: Real>(count: usize, offset: T) -> Vec<[T; 2]> {
    (0..count)
        .map(|j| {
            let a = offset + T::PI() * lit(2.0) * idx::<T>(j) / idx::<T>(count);
            [a.cos(), a.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{BuiltinPotential, PotentialKind};
    use std::sync::Arc;

    fn solver(kind: PotentialKind, amp: f64, n: usize, l: f64) -> HelmholtzSolver<f64> {
        let g = GridSpec::new(n, l, 1.0).unwrap();
        let p = BuiltinPotential::new(kind, Complex::new(amp, 0.0), 1.0, 0.0, 1.0).unwrap();
        HelmholtzSolver::new(PotentialModel::new(Arc::new(p), g).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn green_function_values() {
        let g = green_outgoing(1.0f64, 1.0).unwrap();
        assert!((g.re + 0.0220642410).abs() < 1e-9 && (g.im - 0.1912994217).abs() < 1e-9, "{g}");
        let a = green_outgoing(2.0, 0.7).unwrap();
        let b = green_outgoing(1.0, 1.4).unwrap();
        assert!((a - b).norm() < 1e-15);
        assert!(green_outgoing(0.0, 1.0).is_err());
    }

    #[test]
    fn cell_average_matches_quadrature() {
        let (k, h) = (1.0f64, 0.05);
        let m = 200;
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                let x = (i as f64 + 0.5) / m as f64 * h - h / 2.0;
                let y = (j as f64 + 0.5) / m as f64 * h - h / 2.0;
                acc += green_outgoing(k, x.hypot(y)).unwrap();
            }
        }
        acc /= (m * m) as f64;
        assert!((acc - green_cell_average(k, h)).norm() < 3e-4 * acc.norm(), "{acc} {}", green_cell_average(k, h));
    }

    #[test]
    fn zero_potential_leaves_incident_wave() {
        let s = solver(PotentialKind::Disk, 0.0, 64, 6.0);
        let w = IncidentWave::from_angle(1.0, 0.3).unwrap();
        let sol = s.solve(w, &ForwardOptions::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.u_sc.max_abs(), 0.0);
        let amp = scattering_amplitude(&s, &sol, &directions(8, 0.0));
        assert!(amp.values.iter().all(|v| v.norm() == 0.0));
        let rep = far_field_check(&sol, &amp, &[4.0, 5.0]).unwrap();
        assert!(rep.degenerate);
    }

    #[test]
    fn weak_scattering_is_linear() {
        let w = IncidentWave::from_angle(1.0, 0.0).unwrap();
        let norms: Vec<f64> = [1e-3, 5e-4]
            .iter()
            .map(|&e| solver(PotentialKind::Gaussian, e, 64, 6.0).solve(w, &ForwardOptions::default()).unwrap().u_sc.max_abs())
            .collect();
        assert!((norms[0] / norms[1] - 2.0).abs() < 0.1, "{norms:?}");
    }

    #[test]
    fn amplitude_over_strength_converges() {
        let w = IncidentWave::from_angle(1.0, 0.0).unwrap();
        let dirs = directions::<f64>(8, 0.0);
        let r: Vec<f64> = [1e-2, 5e-3]
            .iter()
            .map(|&e| {
                let s = solver(PotentialKind::Disk, e, 64, 6.0);
                let sol = s.solve(w, &ForwardOptions::default()).unwrap();
                scattering_amplitude(&s, &sol, &dirs).values.iter().fold(0.0f64, |m, v| m.max(v.norm())) / e
            })
            .collect();
        assert!((r[0] / r[1] - 1.0).abs() < 0.05, "{r:?}");
        let u = solver(PotentialKind::Disk, 0.2, 64, 6.0).solve(w, &ForwardOptions::default()).unwrap();
        let u0 = w.field(*u.u.grid());
        assert!(u0.add(&u.u_sc).unwrap().sub(&u.u).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn reciprocity_and_symmetry() {
        let s = solver(PotentialKind::Disk, 0.3, 64, 6.0);
        let opts = ForwardOptions::default();
        let dirs = directions::<f64>(8, 0.0);
        let amps: Vec<AmplitudeSamples<f64>> =
            dirs.iter().map(|d| scattering_amplitude(&s, &s.solve(IncidentWave::new(1.0, *d).unwrap(), &opts).unwrap(), &dirs)).collect();
        let neg = |i: usize| (i + 4) % 8;
        for i in 0..8 {
            for j in 0..8 {
                let a = amps[i].values[j];
                let b = amps[neg(j)].values[neg(i)];
                assert!((a - b).norm() < 1e-6 * a.norm(), "{i} {j}");
                // quarter turns and reflections of the square grid
                let c = amps[(i + 2) % 8].values[(j + 2) % 8];
                assert!((a - c).norm() < 1e-6 * a.norm());
            }
        }
        let w = IncidentWave::from_angle(1.0, 0.0).unwrap();
        let u1 = s.solve(w, &opts).unwrap().u_sc;
        let u2 = s.solve(IncidentWave::from_angle(1.0, std::f64::consts::PI).unwrap(), &opts).unwrap().u_sc;
        let n = 64;
        for i2 in 1..n {
            for i1 in 1..n {
                assert!((u1.at(i1, i2) - u2.at(n - i1, n - i2)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn far_field_form_emerges() {
        let s = solver(PotentialKind::Gaussian, 0.05, 256, 12.0);
        let sol = s.solve(IncidentWave::from_angle(1.0, 0.0).unwrap(), &ForwardOptions::default()).unwrap();
        let amp = scattering_amplitude(&s, &sol, &directions(16, 0.1));
        let rep = far_field_check(&sol, &amp, &[4.0, 6.0, 8.0, 10.0]).unwrap();
        assert!(rep.rows[1].1 < 0.2 && rep.decreasing, "{rep:?}");
    }

    #[test]
    fn underresolved_grid_rejected() {
        let g = GridSpec::new(16, 12.0, 1.0).unwrap();
        let m = PotentialModel::new(Arc::new(BuiltinPotential::disk(1.0, 1.0)), g).unwrap();
        assert!(HelmholtzSolver::new(m, 1.0).is_err());
    }
}
