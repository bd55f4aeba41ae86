//! Discrete Faddeev kernels restricted to the support of the potential.
//!
//! Fixed-point iterations only need `g_z * f` on the support for `f`
//! supported there. The factorized route is linear and translation
//! invariant, so it is run once on a unit sample at the origin; the
//! resulting kernel is then applied with small FFTs on the support box.

use num_complex::Complex;

use super::{plan_lattice, FaddeevOptions, WindowParams};
use crate::dbar::{truncated_anticauchy_symbol, Kernel, TruncatedConvolver};
use crate::error::{Error, Result};
use crate::field::{Fft2, GridSpec, ScalarField};
use crate::scalar::{idx, lit, Real};

/// Square block of grid indices covering the support disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SupportBox {
    pub offset: usize,
    pub len: usize,
}

impl SupportBox {
    pub fn new<T: Real>(grid: &GridSpec<T>) -> Self {
        let c = (grid.support_radius() / grid.spacing()).ceil().to_usize().unwrap_or(0) + 1;
        let o = grid.origin_index();
        let c = c.min(o);
        Self { offset: o - c, len: (2 * c + 1).min(grid.n() - (o - c)) }
    }

    /// Copies the box out of a full-grid field.
    pub fn extract<T: Real>(&self, f: &ScalarField<T>) -> Vec<Complex<T>> {
        let n = f.grid().n();
        let mut out = Vec::with_capacity(self.len * self.len);
        for i2 in 0..self.len {
            let start = (self.offset + i2) * n + self.offset;
            out.extend_from_slice(&f.values()[start..start + self.len]);
        }
        out
    }

    /// Full-grid field equal to `data` on the box and zero elsewhere.
    pub fn insert<T: Real>(&self, grid: &GridSpec<T>, data: &[Complex<T>]) -> ScalarField<T> {
        let n = grid.n();
        let mut f = ScalarField::zeros(*grid);
        for i2 in 0..self.len {
            let start = (self.offset + i2) * n + self.offset;
            f.values_mut()[start..start + self.len].copy_from_slice(&data[i2 * self.len..(i2 + 1) * self.len]);
        }
        f
    }

    /// Physical point of box-local index `k`.
    pub fn point<T: Real>(&self, grid: &GridSpec<T>, k: usize) -> [T; 2] {
        [grid.coord(self.offset + k % self.len), grid.coord(self.offset + k / self.len)]
    }
}

/// Builds [`SupportKernel`]s for many `xi` sharing one padded lattice and window.
#[derive(Debug)]
pub struct KernelFactory<T: Real> {
    grid: GridSpec<T>,
    support: SupportBox,
    lattice: GridSpec<T>,
    window: WindowParams<T>,
    fft: Fft2<T>,
    small: Fft2<T>,
    /// Transform of the windowed Cauchy kernel on the lattice.
    vhat: Vec<Complex<T>>,
    radius: T,
    /// Anti-Cauchy symbol on the doubled difference lattice, when affordable.
    table: Option<Vec<Complex<T>>>,
}

/// Largest padded side for which the shifted-symbol table is precomputed.
const TABLE_LIMIT: usize = 1024;

impl<T: Real> KernelFactory<T> {
    /// Plans for every `|xi| >= min_xi`.
    pub fn new(grid: &GridSpec<T>, min_xi: T, opts: &FaddeevOptions<T>) -> Result<Self> {
        if !(min_xi > T::zero()) {
            return Err(Error::ZeroParameter);
        }
        let h = grid.spacing();
        let support = SupportBox::new(grid);
        let target = lit::<T>(2.0) * grid.support_radius() + lit::<T>(3.0) * h;
        let (lattice, window) = plan_lattice(grid, [min_xi, T::zero()], h, target, opts)?;
        let n = lattice.n();

        let mut v = vec![Complex::new(T::zero(), T::zero()); lattice.len()];
        let o = lattice.origin_index();
        v[o * n + o] = Complex::new(T::one(), T::zero());
        TruncatedConvolver::on_lattice(lattice, Kernel::Cauchy, h + window.outer, [T::zero(); 2]).apply_padded(&mut v);
        for (k, d) in v.iter_mut().enumerate() {
            let [a, b] = lattice.point(k);
            *d = *d * window.at((a * a + b * b).sqrt());
        }
        let fft = Fft2::new(n);
        fft.to_spectral(h, &mut v);

        let radius = window.outer + target;
        let table = (n <= TABLE_LIMIT).then(|| {
            let d = lattice.spectral_spacing();
            let m = 2 * n;
            (0..m * m)
                .map(|k| {
                    let p = lit::<T>((k % m) as f64 - n as f64) * d;
                    let q = lit::<T>((k / m) as f64 - n as f64) * d;
                    truncated_anticauchy_symbol([p, q], radius)
                })
                .collect()
        });
        let small_n = (2 * support.len - 1).next_power_of_two();
        Ok(Self { grid: *grid, support, lattice, window, fft, small: Fft2::new(small_n), vhat: v, radius, table })
    }

    pub fn support_box(&self) -> SupportBox {
        self.support
    }

    pub fn lattice(&self) -> &GridSpec<T> {
        &self.lattice
    }

    pub fn window(&self) -> &WindowParams<T> {
        &self.window
    }

    /// Lattice coordinates of `xi` if it sits on the padded spectral lattice.
    fn lattice_index(&self, xi: [T; 2]) -> Option<[i64; 2]> {
        let d = self.lattice.spectral_spacing();
        let half = (self.lattice.n() / 2) as i64;
        let mut out = [0i64; 2];
        for a in 0..2 {
            let s = xi[a] / d;
            let r = s.round();
            if (s - r).abs() > lit(1e-9) {
                return None;
            }
            out[a] = r.to_i64()?;
            if out[a].abs() > half {
                return None;
            }
        }
        Some(out)
    }

    /// Discrete kernel of `g_z` for this `xi`.
    pub fn kernel(&self, xi: [T; 2]) -> Result<SupportKernel<T>> {
        if xi[0] == T::zero() && xi[1] == T::zero() {
            return Err(Error::ZeroParameter);
        }
        let n = self.lattice.n();
        let quarter: T = lit(-0.25);
        let mut data = self.vhat.clone();
        match (self.table.as_ref(), self.lattice_index(xi)) {
            (Some(table), Some([j1, j2])) => {
                let m = 2 * n as i64;
                let half = (n / 2) as i64;
                for (k, d) in data.iter_mut().enumerate() {
                    let p = (k % n) as i64 - half - j1 + n as i64;
                    let q = (k / n) as i64 - half - j2 + n as i64;
                    *d = *d * table[(q * m + p) as usize] * quarter;
                }
            }
            _ => {
                for (k, d) in data.iter_mut().enumerate() {
                    let [p, q] = self.lattice.xi(k);
                    *d = *d * truncated_anticauchy_symbol([p - xi[0], q - xi[1]], self.radius) * quarter;
                }
            }
        }
        self.fft.to_physical(self.lattice.half_width(), &mut data);

        let len = self.support.len as i64;
        let s = self.small.n();
        let o = self.lattice.origin_index() as i64;
        let mut g = vec![Complex::new(T::zero(), T::zero()); s * s];
        for d2 in -(len - 1)..len {
            for d1 in -(len - 1)..len {
                let src = ((o + d2) as usize) * n + (o + d1) as usize;
                let dst = (d2.rem_euclid(s as i64) as usize) * s + d1.rem_euclid(s as i64) as usize;
                g[dst] = data[src];
            }
        }
        self.small.minus(&mut g);
        let scale = T::one() / idx::<T>(s * s);
        for v in g.iter_mut() {
            *v = *v * scale;
        }
        Ok(SupportKernel { xi, grid: self.grid, support: self.support, fft: self.small.clone(), ghat: g })
    }
}

/// `g_z * f` for `f` supported in the support box, evaluated on the box.
#[derive(Clone, Debug)]
pub struct SupportKernel<T: Real> {
    xi: [T; 2],
    grid: GridSpec<T>,
    support: SupportBox,
    fft: Fft2<T>,
    ghat: Vec<Complex<T>>,
}

impl<T: Real> SupportKernel<T> {
    pub fn xi(&self) -> [T; 2] {
        self.xi
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn support_box(&self) -> SupportBox {
        self.support
    }

    /// Convolves box data (`len * len`, row-major) with the kernel.
    pub fn apply(&self, f: &[Complex<T>]) -> Vec<Complex<T>> {
        let len = self.support.len;
        let s = self.fft.n();
        let mut buf = vec![Complex::new(T::zero(), T::zero()); s * s];
        for i2 in 0..len {
            buf[i2 * s..i2 * s + len].copy_from_slice(&f[i2 * len..(i2 + 1) * len]);
        }
        self.fft.minus(&mut buf);
        for (b, g) in buf.iter_mut().zip(&self.ghat) {
            *b = *b * *g;
        }
        self.fft.plus(&mut buf);
        let mut out = Vec::with_capacity(len * len);
        for i2 in 0..len {
            out.extend_from_slice(&buf[i2 * s..i2 * s + len]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faddeev::{faddeev_convolve_factorized, tests::bump};

    #[test]
    fn kernel_matches_direct_route_on_support() {
        let g = GridSpec::<f64>::new(128, 4.0, 1.0).unwrap();
        let f = bump(g);
        let opts = FaddeevOptions::default();
        let factory = KernelFactory::new(&g, 4.0, &opts).unwrap();
        let sb = factory.support_box();
        // on-lattice and off-lattice parameters
        for xi in [[2.0 * std::f64::consts::PI, 0.0], [5.0, -6.0], [0.0, 11.3]] {
            let direct = faddeev_convolve_factorized(&f, xi, 1.5, &opts).unwrap();
            let fast = sb.insert(&g, &factory.kernel(xi).unwrap().apply(&sb.extract(&f)));
            let scale = direct.max_abs();
            for k in 0..g.len() {
                let [a, b] = g.point(k);
                if a * a + b * b <= 1.0 {
                    let e = (fast.values()[k] - direct.values()[k]).norm();
                    assert!(e < 1e-6 * scale, "xi={xi:?} err {e:e}");
                }
            }
        }
    }
}
