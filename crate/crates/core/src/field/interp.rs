use num_complex::Complex;

use super::ScalarField;
use crate::scalar::{lit, Real};

fn keys<T: Real>(t: T) -> [T; 4] {
    // Catmull-Rom weights for offsets -1, 0, 1, 2
    let half: T = lit(0.5);
    let t2 = t * t;
    let t3 = t2 * t;
    [
        half * (-t3 + lit::<T>(2.0) * t2 - t),
        half * (lit::<T>(3.0) * t3 - lit::<T>(5.0) * t2 + lit(2.0)),
        half * (-lit::<T>(3.0) * t3 + lit::<T>(4.0) * t2 + t),
        half * (t3 - t2),
    ]
}

/// Cubic convolution interpolation at `x`. `None` when the stencil leaves the grid.
pub fn bicubic<T: Real>(f: &ScalarField<T>, x: [T; 2]) -> Option<Complex<T>> {
    let g = f.grid();
    let h = g.spacing();
    let n = g.n() as i64;
    let mut base = [0i64; 2];
    let mut w = [[T::zero(); 4]; 2];
    for a in 0..2 {
        let s = (x[a] + g.half_width()) / h;
        let fl = s.floor();
        base[a] = fl.to_i64()?;
        if base[a] < 1 || base[a] + 2 >= n {
            return None;
        }
        w[a] = keys(s - fl);
    }
    let mut acc = Complex::new(T::zero(), T::zero());
    for (j, wy) in w[1].iter().enumerate() {
        let i2 = (base[1] - 1 + j as i64) as usize;
        let mut row = Complex::new(T::zero(), T::zero());
        for (i, wx) in w[0].iter().enumerate() {
            let i1 = (base[0] - 1 + i as i64) as usize;
            row = row + f.at(i1, i2) * *wx;
        }
        acc = acc + row * *wy;
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    #[test]
    fn reproduces_quadratics_and_nodes() {
        let g = GridSpec::<f64>::new(32, 2.0, 0.5).unwrap();
        let f = ScalarField::from_fn(g, |[a, b]| Complex::new(a * a - 3.0 * a * b + b, a));
        let v = bicubic(&f, [0.3, -0.41]).unwrap();
        assert!((v.re - (0.09 + 3.0 * 0.3 * 0.41 - 0.41)).abs() < 1e-12);
        assert!((v.im - 0.3).abs() < 1e-12);
        let node = bicubic(&f, [g.coord(7), g.coord(20)]).unwrap();
        assert!((node - f.at(7, 20)).norm() < 1e-14);
        assert!(bicubic(&f, [-1.99, 0.0]).is_none());
    }
}
