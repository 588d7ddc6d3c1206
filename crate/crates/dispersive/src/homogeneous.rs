//! The remainder u₂: homogeneous boundary conditions, initial datum w₀ = u₀ − u_T.
//!
//! LS and heat use sine/cosine series. Stokes with the coupled family uses the
//! biorthogonal eigenfunction series; the decoupled family has no complete
//! eigenbasis, so u₂ is evaluated from its contour-integral representation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::detfun::{canonical_rotation, eval_delta, locate_zeros, Family, Rect};
use crate::linalg;
use crate::model::alpha;
use crate::periodic::ExpSum;
use crate::quad::{gauss_legendre, CompositeRule, KahanSum};
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

fn coefficient_rule(m_max: usize) -> CompositeRule {
    CompositeRule::new(0.0, 1.0, (m_max / 2).max(16), 20)
}

/// u₂ for LS with homogeneous Dirichlet data: Σ b_m sin(mπx) e^{−im²π²t}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SineSeries {
    pub coeffs: Vec<C64>,
}

impl SineSeries {
    pub fn new<F: Fn(f64) -> C64>(w0: F, m_max: usize) -> Self {
        let rule = coefficient_rule(m_max);
        let coeffs = (1..=m_max).map(|m| 2.0 * rule.integrate(|x| w0(x) * (m as f64 * PI * x).sin())).collect();
        Self { coeffs }
    }

    pub fn eval(&self, x: f64, t: f64) -> C64 {
        // e^{−im²π²t} = e^{−iπ m² s}, s = πt mod 2: exact 2/π-periodicity
        let s = (PI * t).rem_euclid(2.0);
        let mut acc = KahanSum::default();
        for (i, b) in self.coeffs.iter().enumerate() {
            let m = (i + 1) as f64;
            let ang = ((m * m) * s).rem_euclid(2.0);
            acc.add(b * (m * PI * x).sin() * C64::from_polar(1.0, -PI * ang));
        }
        acc.value()
    }
}

pub fn ls_u2<F: Fn(f64) -> C64>(w0: F, x: f64, t: f64, m_max: usize) -> C64 {
    SineSeries::new(w0, m_max).eval(x, t)
}

/// u₂ for heat with homogeneous Neumann data: Σ_{m≥1} a_m cos(mπx) e^{−m²π²t}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosineSeries {
    pub coeffs: Vec<C64>,
}

impl CosineSeries {
    pub fn new<F: Fn(f64) -> C64>(w0: F, m_max: usize) -> Result<Self> {
        let rule = coefficient_rule(m_max);
        let mean = rule.integrate(&w0);
        if mean.norm() > 1e-10 {
            return Err(Error::MeanNotZero(mean.norm()));
        }
        let coeffs = (1..=m_max).map(|m| 2.0 * rule.integrate(|x| w0(x) * (m as f64 * PI * x).cos())).collect();
        Ok(Self { coeffs })
    }

    pub fn eval(&self, x: f64, t: f64) -> C64 {
        let mut acc = KahanSum::default();
        for (i, a) in self.coeffs.iter().enumerate() {
            let m = (i + 1) as f64;
            acc.add(a * (m * PI * x).cos() * (-m * m * PI * PI * t).exp());
        }
        acc.value()
    }
}

pub fn heat_u2<F: Fn(f64) -> C64>(w0: F, x: f64, t: f64, m_max: usize) -> Result<C64> {
    Ok(CosineSeries::new(w0, m_max)?.eval(x, t))
}

/// One eigenpair of −∂³ with u(0)=u(1)=0, u'(0)=βu'(1), and its adjoint partner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenMode {
    /// canonical zero λ of Δ (arg in (−π/3, π/3])
    pub lambda: C64,
    /// time exponent iλ³: the mode evolves as e^{iλ³t}
    pub rate: C64,
    pub e: ExpSum,
    /// adjoint eigenfunction, scaled so that ⟨E, E*⟩ = 1
    pub e_star: ExpSum,
    /// smallest singular values of the two trace systems
    pub null_residuals: (f64, f64),
}

impl EigenMode {
    /// −E''' − iλ³E at x, relative to the amplitude scale.
    pub fn residual(&self, x: f64) -> f64 {
        let r = -self.e.derivative(x, 3) - self.rate * self.e.eval(x);
        let s: f64 = self.e.amps.iter().map(|a| a.norm()).sum::<f64>() * self.lambda.norm().powi(3);
        r.norm() / s
    }
}

fn coupled_trace_matrix(e: &ExpSum, beta: f64, adjoint: bool) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(3, 3);
    for r in 0..3 {
        m[(0, r)] = e.basis(r, 0.0, 0);
        m[(1, r)] = e.basis(r, 1.0, 0);
        m[(2, r)] = if adjoint {
            beta * e.basis(r, 0.0, 1) - e.basis(r, 1.0, 1)
        } else {
            e.basis(r, 0.0, 1) - beta * e.basis(r, 1.0, 1)
        };
    }
    m
}

/// Eigenpairs for the coupled Stokes family, ordered by |λ|.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledEigenBasis {
    pub beta: f64,
    pub modes: Vec<EigenMode>,
}

impl CoupledEigenBasis {
    pub fn new(beta: f64, m_max: usize) -> Result<Self> {
        if beta.abs() < 1.0 {
            return Err(Error::IllPosed(format!("|β| = {} < 1", beta.abs())));
        }
        let family = Family::Coupled { beta };
        // each asymptotic index contributes two eigenvalues (λ and −λ̄)
        let big_m = (m_max / 2 + 2) as f64;
        let rect = Rect::new(
            -(6.0 * big_m + 2.0) * PI / 3.0,
            (6.0 * big_m + 2.0) * PI / 3.0,
            -(beta.abs().ln() + 2.0),
            beta.abs().ln() + 2.0,
        );
        let zs = locate_zeros(family, rect, None)?;
        let mut lambdas: Vec<C64> = Vec::new();
        for z in zs.zeros.iter().filter(|z| z.location.norm() > 1e-6) {
            let c = canonical_rotation(z.location);
            if !lambdas.iter().any(|l| (l - c).norm() < 1e-8 * c.norm()) {
                lambdas.push(c);
            }
        }
        lambdas.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        if lambdas.len() < m_max {
            return Err(Error::EigenBasisUnavailable { found: lambdas.len(), needed: m_max });
        }
        lambdas.truncate(m_max);
        let a = alpha(3);
        let modes = lambdas
            .into_iter()
            .map(|lambda| {
                let ks: Vec<C64> = (0..3).map(|j| a.powu(j) * lambda).collect();
                let mut e = ExpSum::anchored(ks.clone());
                let (v, s1) = linalg::null_vector(&coupled_trace_matrix(&e, beta, false));
                e.amps = v.iter().copied().collect();
                let nrm = e.inner(&e).re.sqrt();
                e.scale(C64::new(1.0 / nrm, 0.0));
                let mut es = ExpSum::anchored(ks.iter().map(|k| k.conj()).collect());
                let (w, s2) = linalg::null_vector(&coupled_trace_matrix(&es, beta, true));
                es.amps = w.iter().copied().collect();
                let p = e.inner(&es);
                es.scale((1.0 / p).conj());
                EigenMode { lambda, rate: I * lambda.powu(3), e, e_star: es, null_residuals: (s1, s2) }
            })
            .collect();
        Ok(Self { beta, modes })
    }

    /// Gram matrix ⟨E_m, E*_l⟩.
    pub fn biorthogonality(&self) -> DMatrix<C64> {
        let n = self.modes.len();
        DMatrix::from_fn(n, n, |m, l| self.modes[m].e.inner(&self.modes[l].e_star))
    }
}

/// u₂ = Σ ⟨w₀, E*_m⟩ e^{iλ_m³t} E_m(x).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledSeries {
    pub basis: CoupledEigenBasis,
    pub coeffs: Vec<C64>,
}

impl CoupledSeries {
    pub fn new<F: Fn(f64) -> C64>(basis: CoupledEigenBasis, w0: F) -> Self {
        let top = basis.modes.last().map(|m| m.lambda.norm()).unwrap_or(1.0);
        let rule = CompositeRule::new(0.0, 1.0, ((top * 2.0) as usize).max(32), 20);
        let samples: Vec<C64> = rule.nodes.iter().map(|&x| w0(x)).collect();
        let coeffs = basis
            .modes
            .iter()
            .map(|m| {
                let mut s = KahanSum::default();
                for ((x, w), f) in rule.nodes.iter().zip(&rule.weights).zip(&samples) {
                    s.add(f * m.e_star.eval(*x).conj() * *w);
                }
                s.value()
            })
            .collect();
        Self { basis, coeffs }
    }

    pub fn eval(&self, x: f64, t: f64) -> C64 {
        let mut acc = KahanSum::default();
        for (m, c) in self.basis.modes.iter().zip(&self.coeffs) {
            acc.add(c * (m.rate * t).exp() * m.e.eval(x));
        }
        acc.value()
    }

    /// min over modes of −Re(iλ³).
    pub fn decay_rate(&self) -> f64 {
        self.basis.modes.iter().map(|m| -m.rate.re).fold(f64::INFINITY, f64::min)
    }
}

pub fn stokes_coupled_u2<F: Fn(f64) -> C64>(w0: F, beta: f64, x: f64, t: f64, m_max: usize) -> Result<C64> {
    Ok(CoupledSeries::new(CoupledEigenBasis::new(beta, m_max)?, w0).eval(x, t))
}

/// Parameters of the deformed contours for the decoupled family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourParams {
    /// deformation angle δ (radians) away from the boundaries of the sectors
    pub delta: f64,
    /// the paths pass through ±i·vertex instead of the origin
    pub vertex: f64,
    pub initial_panels: usize,
    pub order: usize,
    /// absolute tolerance for panel doubling
    pub tol: f64,
    /// clearance from zeros; None uses half the minimum zero separation, capped at 0.25
    pub eps: Option<f64>,
}

impl Default for ContourParams {
    fn default() -> Self {
        Self { delta: PI / 18.0, vertex: 0.5, initial_panels: 50, order: 20, tol: 1e-12, eps: None }
    }
}

/// ŵ₀(k) = ∫₀¹ w₀(x) e^{−ikx} dx on a fixed Gauss rule.
#[derive(Debug, Clone)]
pub struct Transform {
    nodes: Vec<f64>,
    weighted: Vec<C64>,
}

impl Transform {
    pub fn new<F: Fn(f64) -> C64>(w0: F) -> Self {
        let (x, w) = gauss_legendre(64);
        let nodes: Vec<f64> = x.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let weighted = nodes.iter().zip(&w).map(|(&x, &w)| w0(x) * 0.5 * w).collect();
        Self { nodes, weighted }
    }

    pub fn eval(&self, k: C64) -> C64 {
        self.nodes.iter().zip(&self.weighted).map(|(&x, f)| f * (-I * k * x).exp()).sum()
    }
}

/// u₂ for the decoupled family from
///   2π u₂ = −∫_{∂E⁺} e^{ikx+ik³t} Z⁺ dk − ∫_{∂E⁻} e^{ik(x−1)+ik³t} Z⁻ dk,
/// with the boundaries of E± pushed by δ into the decay sectors and off the origin.
#[derive(Debug, Clone)]
pub struct DecoupledContour {
    transform: Transform,
    pub params: ContourParams,
}

impl DecoupledContour {
    pub fn new<F: Fn(f64) -> C64>(w0: F, params: ContourParams) -> Self {
        Self { transform: Transform::new(w0), params }
    }

    fn s(k: C64) -> C64 {
        let a = alpha(3);
        (-I * k).exp() + a * (-I * a * k).exp() + a * a * (-I * a * a * k).exp()
    }

    pub fn z_plus(&self, k: C64) -> C64 {
        let a = alpha(3);
        let w = |z: C64| self.transform.eval(z);
        (-w(k) * (a * a * (-I * a * a * k).exp() + a * (-I * a * k).exp())
            + (a * w(a * k) + a * a * w(a * a * k)) * (-I * k).exp())
            / Self::s(k)
    }

    pub fn z_minus(&self, k: C64) -> C64 {
        let a = alpha(3);
        let w = |z: C64| self.transform.eval(z);
        (w(k) + a * w(a * k) + a * a * w(a * a * k)) / Self::s(k)
    }

    /// Radius beyond which e^{−R³ t sin 3δ} is negligible against growth e^{2R}.
    fn radius(&self, t: f64) -> f64 {
        let decay = t * (3.0 * self.params.delta).sin();
        let mut r: f64 = 1.0;
        while r.powi(3) * decay - 2.0 * r < 40.0 {
            r *= 1.05;
        }
        r.max(2.0 * self.params.vertex)
    }

    /// The three polygonal paths (start, vertex, end) and whether they carry Z⁻.
    fn paths(&self, t: f64) -> Vec<([C64; 3], bool)> {
        let r = self.radius(t);
        let d = self.params.delta;
        let e = |th: f64| C64::from_polar(r, th);
        let vp = C64::new(0.0, self.params.vertex);
        vec![
            ([e(PI - d), vp, e(2.0 * PI / 3.0 + d)], false),
            ([e(PI / 3.0 - d), vp, e(d)], false),
            ([e(-PI / 3.0 - d), -vp, e(-2.0 * PI / 3.0 + d)], true),
        ]
    }

    /// Checks the paths keep the clearance ε from every nonzero zero of Δ nearby.
    pub fn check_clearance(&self, t: f64) -> Result<f64> {
        let r = self.radius(t) + 1.0;
        let zs = locate_zeros(Family::Uncoupled, Rect::new(-r, r, -r, r), None)?;
        let nonzero: Vec<C64> = zs.zeros.iter().map(|z| z.location).filter(|z| z.norm() > 1e-6).collect();
        let mut sep = f64::INFINITY;
        for (i, a) in nonzero.iter().enumerate() {
            for b in &nonzero[i + 1..] {
                sep = sep.min((a - b).norm());
            }
        }
        let eps = self.params.eps.unwrap_or((0.5 * sep).min(0.25));
        for (pts, _) in self.paths(t) {
            for seg in pts.windows(2) {
                for z in &nonzero {
                    if segment_distance(seg[0], seg[1], *z) < eps {
                        return Err(Error::PoleClearanceFailure { eps, zero: *z });
                    }
                }
            }
        }
        Ok(eps)
    }

    fn integrate_with(&self, x: f64, t: f64, panels: usize) -> C64 {
        let (gx, gw) = gauss_legendre(self.params.order);
        let mut total = KahanSum::default();
        for (pts, minus) in self.paths(t) {
            for seg in pts.windows(2) {
                let (p, q) = (seg[0], seg[1]);
                for i in 0..panels {
                    let s0 = p + (q - p) * (i as f64 / panels as f64);
                    let s1 = p + (q - p) * ((i + 1) as f64 / panels as f64);
                    let h = (s1 - s0) / 2.0;
                    let mid = (s0 + s1) / 2.0;
                    for (xi, wi) in gx.iter().zip(&gw) {
                        let k = mid + h * *xi;
                        let v = if minus {
                            (I * k * (x - 1.0) + I * k.powu(3) * t).exp() * self.z_minus(k)
                        } else {
                            (I * k * x + I * k.powu(3) * t).exp() * self.z_plus(k)
                        };
                        total.add(v * h * *wi);
                    }
                }
            }
        }
        -total.value() / (2.0 * PI)
    }

    /// u₂(x, t) for t > 0, doubling panels until successive values agree to `tol`.
    pub fn eval(&self, x: f64, t: f64) -> Result<C64> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument("the contour representation needs t > 0".into()));
        }
        self.check_clearance(t)?;
        let mut panels = self.params.initial_panels;
        let mut prev = self.integrate_with(x, t, panels);
        for _ in 0..6 {
            panels *= 2;
            let next = self.integrate_with(x, t, panels);
            if (next - prev).norm() < self.params.tol {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::NonConvergence(format!("contour quadrature at t = {t} did not settle")))
    }
}

fn segment_distance(p: C64, q: C64, z: C64) -> f64 {
    let d = q - p;
    let s = (((z - p) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (p + d * s - z).norm()
}

pub fn stokes_decoupled_u2<F: Fn(f64) -> C64>(w0: F, x: f64, t: f64, params: ContourParams) -> Result<C64> {
    DecoupledContour::new(w0, params).eval(x, t)
}

/// Smallest-modulus nonzero zero of the decoupled determinant on the negative imaginary axis.
pub fn decoupled_lambda0() -> Result<C64> {
    let zs = locate_zeros(Family::Uncoupled, Rect::new(-0.5, 0.5, -8.0, -1.0), None)?;
    zs.zeros
        .iter()
        .map(|z| z.location)
        .find(|z| z.re.abs() < 1e-8)
        .ok_or_else(|| Error::NonConvergence("no zero on the negative imaginary axis".into()))
        .inspect(|&z| debug_assert!(eval_delta(Family::Uncoupled, z).norm() < 1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn ls_single_mode() {
        let s = SineSeries::new(|x| c((3.0 * PI * x).sin()), 8);
        for &(x, t) in &[(0.2, 0.0), (0.6, 0.13), (0.9, 1.7)] {
            let expect = (3.0 * PI * x).sin() * C64::from_polar(1.0, -9.0 * PI * PI * t);
            assert!((s.eval(x, t) - expect).norm() < 1e-13);
        }
        assert_eq!(ls_u2(|_| c(0.0), 0.3, 0.4, 5), c(0.0));
    }

    #[test]
    fn ls_period_two_over_pi() {
        let s = SineSeries::new(|x| c(x * (1.0 - x) * (x + 0.3)), 40);
        for &t in &[0.1, 1.3, 7.9] {
            assert!((s.eval(0.41, t + 2.0 / PI) - s.eval(0.41, t)).norm() < 1e-12);
        }
        // reproduces the datum at t = 0
        assert!((s.eval(0.41, 0.0) - c(0.41 * 0.59 * 0.71)).norm() < 1e-4);
    }

    #[test]
    fn heat_single_mode_and_mean_check() {
        let s = CosineSeries::new(|x| c((PI * x).cos()), 6).unwrap();
        let v = s.eval(0.3, 0.2);
        assert!((v - c((-PI * PI * 0.2).exp() * (PI * 0.3).cos())).norm() < 1e-13);
        assert!(matches!(CosineSeries::new(c, 6), Err(Error::MeanNotZero(_))));
        assert_eq!(heat_u2(|_| c(0.0), 0.5, 0.1, 4).unwrap(), c(0.0));
    }

    #[test]
    fn lambda0_bound() {
        let l = decoupled_lambda0().unwrap();
        assert!((I * l.powu(3)).re < -64.0);
    }

    #[test]
    fn coupled_eigenpairs() {
        let b = CoupledEigenBasis::new(10.0, 6).unwrap();
        for m in &b.modes {
            assert!(m.null_residuals.0 < 1e-10 && m.null_residuals.1 < 1e-10);
            for &x in &[0.1, 0.5, 0.9] {
                assert!(m.residual(x) < 1e-9);
            }
            assert!(m.rate.re < 0.0);
        }
        let g = b.biorthogonality();
        let off = (g - DMatrix::<C64>::identity(6, 6)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(off < 1e-8, "{off}");
        assert!(matches!(CoupledEigenBasis::new(0.5, 4), Err(Error::IllPosed(_))));
    }

    #[test]
    fn coupled_single_mode_datum() {
        let b = CoupledEigenBasis::new(10.0, 4).unwrap();
        let e1 = b.modes[0].e.clone();
        let rate = b.modes[0].rate;
        let s = CoupledSeries::new(b, |x| e1.eval(x));
        assert!((s.coeffs[0] - 1.0).norm() < 1e-10);
        for c in &s.coeffs[1..] {
            assert!(c.norm() < 1e-10);
        }
        let t = 0.01;
        assert!((s.eval(0.4, t) - (rate * t).exp() * e1.eval(0.4)).norm() < 1e-10);
    }

    #[test]
    fn decoupled_zero_datum() {
        let v = stokes_decoupled_u2(|_| c(0.0), 0.5, 0.3, ContourParams::default()).unwrap();
        assert_eq!(v, c(0.0));
    }

    #[test]
    fn decoupled_bump_matches_reference() {
        let w0 = |x: f64| c((x * (1.0 - x)).powi(4));
        for &(t, expect) in &[(0.05, 7.545949464982691e-05), (0.1, 1.7000084867957363e-06)] {
            let v = stokes_decoupled_u2(w0, 0.5, t, ContourParams::default()).unwrap();
            assert!((v - c(expect)).norm() < 1e-12 + 1e-8 * expect, "{t}: {v}");
        }
    }

    #[test]
    fn z_kernels_regular_near_origin() {
        let dc = DecoupledContour::new(|x| c(x * (1.0 - x) * (1.0 - x)), ContourParams::default());
        let a = dc.z_minus(C64::new(1e-3, 1e-3));
        let b = dc.z_minus(C64::new(-1e-3, 2e-3));
        assert!((a - b).norm() < 1e-2 * a.norm().max(1e-3));
    }
}
