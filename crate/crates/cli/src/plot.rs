//! Plain-text plot tables, one `x y...` row per line.

use std::fmt::Write;

use cgo_scatter::field::{radial_profile, ScalarField};

/// Mean modulus over rings out to the grid edge.
pub fn radial(f: &ScalarField<f64>, bins: usize) -> String {
    let mut s = String::from("# r mean_abs\n");
    for (r, v, _) in radial_profile(f, f.grid().half_width(), bins) {
        let _ = writeln!(s, "{r:.9e} {v:.9e}");
    }
    s
}

/// Values along the `x1` axis through the origin.
pub fn cross_section(f: &ScalarField<f64>) -> String {
    let g = f.grid();
    let row = g.origin_index();
    let mut s = String::from("# x re im\n");
    for j in 0..g.n() {
        let v = f.at(j, row);
        let _ = writeln!(s, "{:.9e} {:.9e} {:.9e}", g.coord(j), v.re, v.im);
    }
    s
}

/// `x y` rows sorted by `x`.
pub fn table(header: &str, rows: &[(f64, f64)]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut s = format!("# {header}\n");
    for (x, y) in sorted {
        let _ = writeln!(s, "{x:.9e} {y:.9e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use cgo_scatter::field::GridSpec;

    #[test]
    fn zero_field_gives_zero_profile() {
        let f = ScalarField::zeros(GridSpec::new(16, 2.0, 0.5).unwrap());
        let p = radial(&f, 4);
        assert_eq!(p.lines().count(), 5);
        assert!(p.lines().skip(1).all(|l| l.ends_with(" 0.000000000e0")));
        assert!(cross_section(&f).lines().skip(1).all(|l| l.ends_with("0.000000000e0 0.000000000e0")));
    }

    #[test]
    fn tables_are_ordered() {
        let t = table("z ratio", &[(20.0, 0.1), (5.0, 0.4), (10.0, 0.2)]);
        let xs: Vec<f64> = t.lines().skip(1).map(|l| l.split(' ').next().unwrap().parse().unwrap()).collect();
        assert_eq!(xs, vec![5.0, 10.0, 20.0]);
    }
}
