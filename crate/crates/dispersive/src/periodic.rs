//! Mode profiles U_n, the datum u_T and the exactly periodic solution u₁.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dtn::{DtnResult, ModeOutcome};
use crate::linalg;
use crate::model::{denominator_roots, DispersionMonomial, FourierBoundaryData};
use crate::quad::KahanSum;
use crate::{Error, Result, C64, TAU_RES};

const I: C64 = C64::new(0.0, 1.0);

/// Σ_r A_r e^{iκ_r(x − x_r)} with x_r ∈ {0, 1} chosen so every term is bounded by |A_r| on [0,1].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpSum {
    pub exponents: Vec<C64>,
    pub anchors: Vec<f64>,
    pub amps: Vec<C64>,
}

impl ExpSum {
    pub fn anchored(exponents: Vec<C64>) -> Self {
        let anchors = exponents.iter().map(|k| if k.im >= 0.0 { 0.0 } else { 1.0 }).collect();
        let amps = vec![C64::new(0.0, 0.0); exponents.len()];
        Self { exponents, anchors, amps }
    }

    /// j-th derivative of the r-th basis function at x.
    pub fn basis(&self, r: usize, x: f64, j: usize) -> C64 {
        let k = self.exponents[r];
        (I * k).powu(j as u32) * (I * k * (x - self.anchors[r])).exp()
    }

    pub fn derivative(&self, x: f64, j: usize) -> C64 {
        (0..self.amps.len()).map(|r| self.amps[r] * self.basis(r, x, j)).sum()
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.derivative(x, 0)
    }

    /// ∫₀¹ f conj(g) in closed form.
    pub fn inner(&self, other: &ExpSum) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (r, a) in self.amps.iter().enumerate() {
            for (q, b) in other.amps.iter().enumerate() {
                let k = self.exponents[r];
                let m = other.exponents[q].conj();
                // exponent φ(x) = iκ(x − x_r) − i m̄(x − x_q), linear in x
                let phi = |x: f64| I * k * (x - self.anchors[r]) - I * m * (x - other.anchors[q]);
                let slope = I * (k - m);
                let v = if slope.norm() < 1e-8 {
                    phi(0.0).exp() * (1.0 + slope / 2.0 + slope * slope / 6.0)
                } else {
                    (phi(1.0).exp() - phi(0.0).exp()) / slope
                };
                s += a * b.conj() * v;
            }
        }
        s
    }

    pub fn scale(&mut self, c: C64) {
        for a in &mut self.amps {
            *a *= c;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileBasis {
    /// e^{iκ_r x} terms (n ≠ 0)
    Exponential(ExpSum),
    /// Σ p_j x^j (n = 0)
    Polynomial { coeffs: Vec<C64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicProfile {
    pub n: i64,
    pub basis: ProfileBasis,
}

impl PeriodicProfile {
    pub fn derivative(&self, x: f64, j: usize) -> C64 {
        match &self.basis {
            ProfileBasis::Exponential(e) => e.derivative(x, j),
            ProfileBasis::Polynomial { coeffs } => {
                let mut s = C64::new(0.0, 0.0);
                for (p, c) in coeffs.iter().enumerate().skip(j) {
                    let fall: f64 = (p - j + 1..=p).map(|v| v as f64).product();
                    s += c * fall * x.powi((p - j) as i32);
                }
                s
            }
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.derivative(x, 0)
    }

    pub fn max_amplitude(&self) -> f64 {
        match &self.basis {
            ProfileBasis::Exponential(e) => e.amps.iter().map(|a| a.norm()).fold(0.0, f64::max),
            ProfileBasis::Polynomial { coeffs } => coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max),
        }
    }

    /// All 2N boundary values (G⁽⁰⁾…, H⁽⁰⁾…) of the profile.
    pub fn traces(&self, order: usize) -> Vec<C64> {
        let mut v: Vec<C64> = (0..order).map(|j| self.derivative(0.0, j)).collect();
        v.extend((0..order).map(|j| self.derivative(1.0, j)));
        v
    }

    /// |[inω + Ω(−i d/dx)]U| at x, using the analytic N-th derivative.
    pub fn ode_residual(&self, pde: &DispersionMonomial, omega: f64, x: f64) -> C64 {
        let big_n = pde.order();
        I * (self.n as f64) * omega * self.eval(x) + pde.a() * (-I).powu(big_n as u32) * self.derivative(x, big_n)
    }
}

fn zero_profile(n: i64, big_n: usize) -> PeriodicProfile {
    PeriodicProfile { n, basis: ProfileBasis::Polynomial { coeffs: vec![C64::new(0.0, 0.0); big_n] } }
}

pub fn build_profile(
    pde: &DispersionMonomial,
    data: &FourierBoundaryData,
    n: i64,
    dtn: &DtnResult,
) -> Result<PeriodicProfile> {
    let big_n = pde.order();
    let values = match dtn.modes.get(&n) {
        None => return Ok(zero_profile(n, big_n)),
        Some(ModeOutcome::Resonant { det_abs, .. }) => return Err(Error::Resonance { n, det_abs: *det_abs }),
        Some(ModeOutcome::Solved { values, .. }) => values,
    };
    if n == 0 {
        // Taylor data: p_j = G⁽ʲ⁾/j!
        let mut f = 1.0;
        let coeffs = (0..big_n)
            .map(|j| {
                if j > 0 {
                    f *= j as f64;
                }
                values[j] / f
            })
            .collect();
        return Ok(PeriodicProfile { n, basis: ProfileBasis::Polynomial { coeffs } });
    }
    let mut e = ExpSum::anchored(denominator_roots(pde, data.omega, n).roots);
    let mut m = DMatrix::<C64>::zeros(big_n, big_n);
    for (i, cond) in data.conditions.iter().enumerate() {
        for (bv, coef) in &cond.terms {
            for r in 0..big_n {
                m[(i, r)] += coef * e.basis(r, bv.side.x(), bv.order);
            }
        }
    }
    let rhs = DVector::from_vec(data.rhs(n));
    let sol = linalg::solve(&m, &rhs, TAU_RES);
    if sol.singular {
        return Err(Error::ProfileSingular { n });
    }
    e.amps = sol.x.iter().copied().collect();
    Ok(PeriodicProfile { n, basis: ProfileBasis::Exponential(e) })
}

/// u₁(x,t) = Σ_n e^{inωt} U_n(x).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicSolution {
    pub omega: f64,
    pub order: usize,
    pub profiles: Vec<PeriodicProfile>,
}

impl PeriodicSolution {
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    fn phase(&self, n: i64, t: f64) -> C64 {
        // reduce first so that t and t + T give bit-identical phases
        let tr = t.rem_euclid(self.period());
        C64::from_polar(1.0, n as f64 * self.omega * tr)
    }

    /// ∂_x^j u₁(x,t)
    pub fn derivative(&self, x: f64, t: f64, j: usize) -> C64 {
        let mut s = KahanSum::default();
        for p in &self.profiles {
            s.add(self.phase(p.n, t) * p.derivative(x, j));
        }
        s.value()
    }

    pub fn eval(&self, x: f64, t: f64) -> C64 {
        self.derivative(x, t, 0)
    }

    pub fn u_t(&self, x: f64) -> C64 {
        self.eval(x, 0.0)
    }

    pub fn time_derivative(&self, x: f64, t: f64) -> C64 {
        let mut s = KahanSum::default();
        for p in &self.profiles {
            s.add(I * (p.n as f64) * self.omega * self.phase(p.n, t) * p.eval(x));
        }
        s.value()
    }

    /// u_t + Ω(−i∂x)u at (x,t) from analytic derivatives.
    pub fn pde_residual(&self, pde: &DispersionMonomial, x: f64, t: f64) -> C64 {
        let big_n = pde.order();
        self.time_derivative(x, t) + pde.a() * (-I).powu(big_n as u32) * self.derivative(x, t, big_n)
    }

    pub fn amplitude_scale(&self) -> f64 {
        self.profiles.iter().map(|p| p.max_amplitude()).fold(0.0, f64::max)
    }
}

pub fn build_periodic_solution(
    pde: &DispersionMonomial,
    data: &FourierBoundaryData,
    dtn: &DtnResult,
    n_max: i64,
) -> Result<PeriodicSolution> {
    let mut profiles = Vec::new();
    for (&n, _) in dtn.modes.iter().filter(|(n, _)| n.abs() <= n_max) {
        profiles.push(build_profile(pde, data, n, dtn)?);
    }
    let top = profiles.iter().map(|p| p.max_amplitude()).fold(0.0, f64::max);
    profiles.retain(|p| p.max_amplitude() >= 1e-14 * top && p.max_amplitude() > 0.0);
    Ok(PeriodicSolution { omega: data.omega, order: pde.order(), profiles })
}
