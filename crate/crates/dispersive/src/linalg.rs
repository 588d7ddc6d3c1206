//! Small dense complex solves with row/column equilibration and a
//! minimum-norm fallback for numerically singular systems.

use nalgebra::{DMatrix, DVector};

use crate::C64;

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: DVector<C64>,
    /// determinant of the unscaled matrix
    pub det: C64,
    /// determinant after equilibration; the resonance test looks at this one
    pub det_equilibrated: C64,
    pub singular: bool,
    /// ‖A x − b‖ / ‖b‖ in the equilibrated norm (0 for b = 0)
    pub residual: f64,
}

/// Diagonal scalings making every row, then every column, unit 2-norm.
fn equilibrate(a: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, Vec<f64>) {
    let mut m = a.clone();
    let rows: Vec<f64> = (0..m.nrows())
        .map(|i| {
            let n = m.row(i).norm();
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        })
        .collect();
    for (i, r) in rows.iter().enumerate() {
        m.row_mut(i).scale_mut(*r);
    }
    let cols: Vec<f64> = (0..m.ncols())
        .map(|j| {
            let n = m.column(j).norm();
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        })
        .collect();
    for (j, c) in cols.iter().enumerate() {
        m.column_mut(j).scale_mut(*c);
    }
    (m, rows, cols)
}

/// Solves A x = b; below `tau` (equilibrated |det|) falls back to the SVD
/// minimum-norm solution and reports the residual.
pub fn solve(a: &DMatrix<C64>, b: &DVector<C64>, tau: f64) -> Solution {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let det = a.clone().lu().determinant();
    let (m, rs, cs) = equilibrate(a);
    let rhs = DVector::from_iterator(n, b.iter().zip(&rs).map(|(v, r)| v * *r));
    let lu = m.clone().lu();
    let det_eq = lu.determinant();
    let singular = !(det_eq.norm() >= tau);
    let y = if singular {
        let svd = m.clone().svd(true, true);
        let smax = svd.singular_values.max();
        svd.solve(&rhs, tau * smax.max(f64::MIN_POSITIVE)).unwrap_or_else(|_| DVector::zeros(n))
    } else {
        let mut y = lu.solve(&rhs).unwrap_or_else(|| DVector::zeros(n));
        if n > 3 {
            let r = &rhs - &m * &y;
            if let Some(dy) = lu.solve(&r) {
                y += dy;
            }
        }
        y
    };
    let bn = rhs.norm();
    let residual = if bn > 0.0 { (&m * &y - &rhs).norm() / bn } else { 0.0 };
    let x = DVector::from_iterator(n, y.iter().zip(&cs).map(|(v, c)| v * *c));
    Solution { x, det, det_equilibrated: det_eq, singular, residual }
}

/// Unit vector spanning the numerical null space (smallest singular direction).
pub fn null_vector(a: &DMatrix<C64>) -> (DVector<C64>, f64) {
    let (m, _, cs) = equilibrate(a);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let (imin, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, s)| (i, *s))
        .expect("nonempty");
    let v = DVector::from_iterator(a.ncols(), vt.row(imin).iter().zip(&cs).map(|(z, c)| z.conj() * *c));
    let nrm = v.norm();
    (v / C64::new(nrm, 0.0), smin)
}
