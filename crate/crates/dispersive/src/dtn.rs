//! Per-mode linear systems for the unknown boundary coefficients.
//!
//! Mode n of the global relation has numerator
//!   Σ_j c_j(k)·(G_n^{(j)} − e^{−ik} H_n^{(j)})
//! over the denominator i·n·ω + Ω(k). Entirety forces the numerator to vanish at
//! the N roots (n ≠ 0) or to vanish to order N at k = 0 (n = 0). Together with the
//! N prescribed conditions this fixes all 2N boundary values.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::linalg;
use crate::model::{
    build_symbol_polynomials, denominator_roots, BoundaryValue, DispersionMonomial, FourierBoundaryData,
    SymbolPolynomials,
};
use crate::{Error, Result, C64, TAU_RES};

const I: C64 = C64::new(0.0, 1.0);

/// Prescribed conditions solved for pivot values: v = base + map·x_free.
#[derive(Debug, Clone)]
struct Elimination {
    free: Vec<usize>,
    map: DMatrix<C64>,
    base: DVector<C64>,
}

/// Reduced-row-echelon elimination of the conditions; pivots are taken as the
/// first usable column in canonical order so a coupling eliminates its left value.
fn eliminate(data: &FourierBoundaryData, big_n: usize, n: i64) -> Result<Elimination> {
    let m = data.conditions.len();
    let mut c = DMatrix::<C64>::zeros(m, 2 * big_n);
    for (r, cond) in data.conditions.iter().enumerate() {
        for (bv, coef) in &cond.terms {
            c[(r, bv.slot(big_n))] += *coef;
        }
    }
    let mut p = DVector::from_vec(data.rhs(n));
    let mut pivots = Vec::with_capacity(m);
    for r in 0..m {
        let scale = c.row(r).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let col = (0..2 * big_n)
            .find(|&j| !pivots.contains(&j) && c[(r, j)].norm() > 1e-12 * scale)
            .ok_or_else(|| Error::MalformedBoundaryConditions(format!("condition {r} is linearly dependent")))?;
        let piv = c[(r, col)];
        for j in 0..2 * big_n {
            c[(r, j)] /= piv;
        }
        p[r] /= piv;
        for s in 0..m {
            if s != r {
                let f = c[(s, col)];
                if f != C64::new(0.0, 0.0) {
                    for j in 0..2 * big_n {
                        let v = c[(r, j)];
                        c[(s, j)] -= f * v;
                    }
                    let pr = p[r];
                    p[s] -= f * pr;
                }
            }
        }
        pivots.push(col);
    }
    let free: Vec<usize> = (0..2 * big_n).filter(|j| !pivots.contains(j)).collect();
    let mut map = DMatrix::<C64>::zeros(2 * big_n, free.len());
    let mut base = DVector::<C64>::zeros(2 * big_n);
    for (f, &slot) in free.iter().enumerate() {
        map[(slot, f)] = C64::new(1.0, 0.0);
    }
    for (r, &col) in pivots.iter().enumerate() {
        base[col] = p[r];
        for (f, &slot) in free.iter().enumerate() {
            map[(col, f)] = -c[(r, slot)];
        }
    }
    Ok(Elimination { free, map, base })
}

/// The N×N system for the unknowns at one mode.
#[derive(Debug, Clone)]
pub struct ModeSystem {
    pub n: i64,
    pub matrix: DMatrix<C64>,
    pub rhs: DVector<C64>,
    pub unknowns: Vec<BoundaryValue>,
    pub det: C64,
    /// the denominator roots (empty for n = 0)
    pub roots: Vec<C64>,
    elim: Elimination,
}

impl ModeSystem {
    /// All 2N boundary values given the unknowns.
    pub fn boundary_values(&self, x: &DVector<C64>) -> Vec<C64> {
        (&self.elim.base + &self.elim.map * x).iter().copied().collect()
    }

    fn from_rows(n: i64, rows: DMatrix<C64>, elim: Elimination, big_n: usize, roots: Vec<C64>) -> Self {
        // rows act on the canonical 2N vector; push the prescribed part to the right
        let matrix = &rows * &elim.map;
        let rhs = -(&rows * &elim.base);
        let det = if matrix.nrows() == matrix.ncols() { matrix.clone().lu().determinant() } else { C64::new(0.0, 0.0) };
        let unknowns = elim.free.iter().map(|&s| BoundaryValue::from_slot(s, big_n)).collect();
        Self { n, matrix, rhs, unknowns, det, roots, elim }
    }
}

/// Row of the numerator functional at root κ, divided by c_{N−1} so that the
/// highest-derivative coefficients read (1, −e^{−iκ}).
fn numerator_row(sym: &SymbolPolynomials, k: C64) -> Vec<C64> {
    let big_n = sym.len();
    let lead = sym.coeff(big_n - 1);
    let mut e = (-I * k).exp();
    let mut shift = C64::new(1.0, 0.0);
    // avoid overflow of e^{−iκ} for huge Im κ (changes the row by a nonzero factor)
    if e.norm() > 1e150 {
        shift = (I * k).exp();
        e = C64::new(1.0, 0.0);
    }
    let mut row = vec![C64::new(0.0, 0.0); 2 * big_n];
    for j in 0..big_n {
        let cj = sym.eval(j, k) / lead;
        row[j] = cj * shift;
        row[big_n + j] = -e * cj;
    }
    row
}

pub fn assemble_mode_system(pde: &DispersionMonomial, data: &FourierBoundaryData, n: i64) -> Result<ModeSystem> {
    if n == 0 {
        return assemble_zero_mode_system(pde, data);
    }
    data.validate(pde)?;
    let big_n = pde.order();
    let sym = build_symbol_polynomials(pde);
    let elim = eliminate(data, big_n, n)?;
    let spec = denominator_roots(pde, data.omega, n);
    let mut rows = DMatrix::<C64>::zeros(big_n, 2 * big_n);
    for (r, &k) in spec.roots.iter().enumerate() {
        for (j, v) in numerator_row(&sym, k).into_iter().enumerate() {
            rows[(r, j)] = v;
        }
    }
    Ok(ModeSystem::from_rows(n, rows, elim, big_n, spec.roots))
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Rows r = 0..N−1: the r-th k-derivative of the numerator at k = 0.
fn zero_mode_rows(sym: &SymbolPolynomials) -> DMatrix<C64> {
    let big_n = sym.len();
    let lead = sym.coeff(big_n - 1);
    let mut rows = DMatrix::<C64>::zeros(big_n, 2 * big_n);
    for r in 0..big_n {
        for j in 0..big_n {
            let s = sym.degree(j);
            let g = sym.coeff(j) / lead;
            if r == s {
                rows[(r, j)] = g * factorial(s);
            }
            if s <= r {
                rows[(r, big_n + j)] = -g * binom(r, s) * factorial(s) * (-I).powu((r - s) as u32);
            }
        }
    }
    rows
}

pub fn assemble_zero_mode_system(pde: &DispersionMonomial, data: &FourierBoundaryData) -> Result<ModeSystem> {
    data.validate(pde)?;
    let big_n = pde.order();
    let sym = build_symbol_polynomials(pde);
    let elim = eliminate(data, big_n, 0)?;
    Ok(ModeSystem::from_rows(0, zero_mode_rows(&sym), elim, big_n, Vec::new()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ModeOutcome {
    Solved {
        /// canonical (G⁽⁰⁾…G⁽ᴺ⁻¹⁾, H⁽⁰⁾…H⁽ᴺ⁻¹⁾)
        values: Vec<C64>,
        /// solved through the minimum-norm path because the system is singular
        flagged: bool,
        det: C64,
    },
    Resonant {
        det_abs: f64,
        rhs_norm: f64,
        residual: f64,
        root: C64,
    },
}

impl ModeOutcome {
    pub fn values(&self) -> Option<&[C64]> {
        match self {
            ModeOutcome::Solved { values, .. } => Some(values),
            ModeOutcome::Resonant { .. } => None,
        }
    }

    pub fn is_resonant(&self) -> bool {
        matches!(self, ModeOutcome::Resonant { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DtnResult {
    pub order: usize,
    pub modes: BTreeMap<i64, ModeOutcome>,
    /// data modes beyond n_max that were dropped
    pub truncated: Vec<i64>,
}

impl DtnResult {
    pub fn resonant_modes(&self) -> Vec<i64> {
        self.modes.iter().filter(|(_, m)| m.is_resonant()).map(|(n, _)| *n).collect()
    }

    pub fn value(&self, n: i64, bv: BoundaryValue) -> Option<C64> {
        self.modes.get(&n)?.values().map(|v| v[bv.slot(self.order)])
    }
}

fn solve_mode(
    sys: &ModeSystem,
    pde: &DispersionMonomial,
    data: &FourierBoundaryData,
    mean: Option<C64>,
) -> ModeOutcome {
    let big_n = pde.order();
    let mut matrix = sys.matrix.clone();
    let mut rhs = sys.rhs.clone();
    let pnorm = DVector::from_vec(data.rhs(sys.n)).norm();
    if sys.n == 0 {
        if let Some(mean) = mean {
            let mscale = matrix.norm();
            if let Some(r) = (0..big_n).find(|&r| matrix.row(r).norm() <= 1e-14 * mscale) {
                if rhs[r].norm() > TAU_RES * pnorm {
                    return ModeOutcome::Resonant {
                        det_abs: 0.0,
                        rhs_norm: rhs.norm(),
                        residual: 1.0,
                        root: C64::new(0.0, 0.0),
                    };
                }
                // ∫₀¹ U₀ = Σ_j G^{(j)}/(j+1)!
                let mut closure = DMatrix::<C64>::zeros(1, 2 * big_n);
                for j in 0..big_n {
                    closure[(0, j)] = C64::new(1.0 / factorial(j + 1), 0.0);
                }
                let reduced = &closure * &sys.elim.map;
                matrix.row_mut(r).copy_from(&reduced.row(0));
                rhs[r] = mean - (&closure * &sys.elim.base)[0];
            }
        }
    }
    let sol = linalg::solve(&matrix, &rhs, TAU_RES);
    if sol.singular && sol.residual > TAU_RES {
        let root = sys.roots.iter().copied().min_by(|a, b| a.im.abs().total_cmp(&b.im.abs())).unwrap_or_default();
        return ModeOutcome::Resonant {
            det_abs: sol.det_equilibrated.norm(),
            rhs_norm: rhs.norm(),
            residual: sol.residual,
            root,
        };
    }
    ModeOutcome::Solved { values: sys.boundary_values(&sol.x), flagged: sol.singular, det: sol.det }
}

/// Solves every mode in the data support (|n| ≤ n_max), plus n = 0 when a mean is given.
pub fn solve_dtn(
    pde: &DispersionMonomial,
    data: &FourierBoundaryData,
    n_max: i64,
    mean_value: Option<C64>,
) -> Result<DtnResult> {
    data.validate(pde)?;
    let support = data.support();
    let mut modes: Vec<i64> = support.iter().copied().filter(|n| n.abs() <= n_max).collect();
    let truncated = support.iter().copied().filter(|n| n.abs() > n_max).collect();
    if mean_value.is_some() && !modes.contains(&0) {
        modes.push(0);
        modes.sort_unstable();
    }
    let mut out = BTreeMap::new();
    for n in modes {
        let sys = assemble_mode_system(pde, data, n)?;
        out.insert(n, solve_mode(&sys, pde, data, mean_value));
    }
    Ok(DtnResult { order: pde.order(), modes: out, truncated })
}

/// Σ_j c_j(k)(G_j − e^{−ik}H_j) and the sum of the magnitudes of its terms.
pub fn numerator(sym: &SymbolPolynomials, values: &[C64], k: C64) -> (C64, f64) {
    let big_n = sym.len();
    let e = (-I * k).exp();
    let mut v = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for j in 0..big_n {
        let cj = sym.eval(j, k);
        let a = cj * values[j];
        let b = cj * e * values[big_n + j];
        v += a - b;
        scale += a.norm() + b.norm();
    }
    (v, scale)
}

/// Largest relative numerator residual over the roots (n ≠ 0) or over the
/// N derivative conditions at k = 0 (n = 0).
pub fn entirety_residual(pde: &DispersionMonomial, omega: f64, n: i64, values: &[C64]) -> f64 {
    let sym = build_symbol_polynomials(pde);
    if n == 0 {
        let rows = zero_mode_rows(&sym);
        let v = DVector::from_column_slice(values);
        (0..rows.nrows())
            .map(|r| {
                let terms: Vec<C64> = (0..v.len()).map(|j| rows[(r, j)] * v[j]).collect();
                let s: f64 = terms.iter().map(|z| z.norm()).sum();
                let t: C64 = terms.iter().sum();
                if s > 0.0 {
                    t.norm() / s
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    } else {
        denominator_roots(pde, omega, n)
            .roots
            .iter()
            .map(|&k| {
                let (v, s) = numerator(&sym, values, k);
                if s > 0.0 {
                    v.norm() / s
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

/// coth and csch, stable for large Re z ≥ 0.
fn coth_csch(z: C64) -> (C64, C64) {
    let z = if z.re < 0.0 { -z } else { z };
    let e = (-2.0 * z).exp();
    let one = C64::new(1.0, 0.0);
    ((one + e) / (one - e), 2.0 * (-z).exp() / (one - e))
}

/// LS Dirichlet → Neumann for n ≠ 0; returns (G⁽¹⁾, H⁽¹⁾).
pub fn ls_closed_form(n: i64, omega: f64, g0: C64, h0: C64) -> Result<(C64, C64)> {
    assert!(n != 0);
    let s = (n.unsigned_abs() as f64 * omega).sqrt();
    if n > 0 {
        let (coth, csch) = coth_csch(C64::new(s, 0.0));
        Ok((s * (h0 * csch - g0 * coth), s * (h0 * coth - g0 * csch)))
    } else {
        let (sn, cs) = s.sin_cos();
        if sn.abs() < TAU_RES {
            return Err(Error::Resonance { n, det_abs: sn.abs() });
        }
        Ok((s * (h0 - g0 * cs) / sn, s * (h0 * cs - g0) / sn))
    }
}

/// Heat Neumann → Dirichlet for n ≠ 0; returns (G⁽⁰⁾, H⁽⁰⁾).
pub fn heat_closed_form(n: i64, omega: f64, g1: C64, h1: C64) -> (C64, C64) {
    assert!(n != 0);
    if n > 0 {
        let r = (I * (n as f64) * omega).sqrt();
        let (coth, csch) = coth_csch(r);
        ((h1 * csch - g1 * coth) / r, (h1 * coth - g1 * csch) / r)
    } else {
        // √(inω) = −iρ with ρ = √(i|n|ω): trigonometric form
        let rho = (I * (n.unsigned_abs() as f64) * omega).sqrt();
        let (sn, cs) = (rho.sin(), rho.cos());
        ((g1 * cs - h1) / (rho * sn), (g1 - h1 * cs) / (rho * sn))
    }
}
