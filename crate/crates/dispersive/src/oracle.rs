//! Independent reference solver: Chebyshev collocation in x, implicit one-step
//! schemes in t, boundary data imposed at the new time level.
//!
//! The collocation is rectangular: the operator is sampled on the M+1−K interior
//! Chebyshev points of the first kind (K = number of boundary conditions) and the
//! K boundary rows are appended, so no collocation row is discarded.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::{DispersionMonomial, FourierBoundaryData, Side};
use crate::problem::{Problem, Remainder, Resolution};
use crate::{Error, Result, C64};

const BLOWUP: f64 = 1e12;

/// Nodes x_j = (1 − cos(jπ/M))/2 on [0,1] and the differentiation matrix.
pub fn chebyshev(m: usize) -> (Vec<f64>, DMatrix<f64>) {
    assert!(m >= 1);
    // symmetric form of cos(jπ/M) keeps the nodes exactly mirrored
    let xc: Vec<f64> = (0..=m).map(|j| (PI * (m as f64 - 2.0 * j as f64) / (2.0 * m as f64)).sin()).collect();
    let c = |j: usize| if j == 0 || j == m { 2.0 } else { 1.0 } * if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut d = DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 0..=m {
        for j in 0..=m {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (xc[i] - xc[j]);
            }
        }
    }
    for i in 0..=m {
        let s: f64 = (0..=m).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    let x = (0..=m).map(|j| (PI * j as f64 / (2.0 * m as f64)).sin().powi(2)).collect();
    (x, d * -2.0)
}

/// Barycentric weights of the Lobatto grid.
fn lobatto_weights(m: usize) -> Vec<f64> {
    (0..=m)
        .map(|j| {
            let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
            if j == 0 || j == m {
                s / 2.0
            } else {
                s
            }
        })
        .collect()
}

/// Matrix evaluating the Lobatto interpolant at the points y.
pub fn barycentric_matrix(x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let w = lobatto_weights(x.len() - 1);
    let mut p = DMatrix::<f64>::zeros(y.len(), x.len());
    for (r, &yr) in y.iter().enumerate() {
        if let Some(j) = x.iter().position(|&xj| xj == yr) {
            p[(r, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = x.iter().zip(&w).map(|(&xj, &wj)| wj / (yr - xj)).collect();
        let s: f64 = terms.iter().sum();
        for (j, t) in terms.iter().enumerate() {
            p[(r, j)] = t / s;
        }
    }
    p
}

/// Evaluates the Lobatto interpolant of `u` at a single point.
pub fn interpolate(x: &[f64], u: &[C64], at: f64) -> C64 {
    let p = barycentric_matrix(x, &[at]);
    (0..x.len()).map(|j| u[j] * p[(0, j)]).sum()
}

/// Clenshaw–Curtis weights for the Lobatto grid on [0,1].
pub fn clenshaw_curtis(m: usize) -> Vec<f64> {
    let theta = |j: usize| PI * j as f64 / m as f64;
    let mut w = vec![0.0; m + 1];
    let mut v = vec![1.0; m.saturating_sub(1)];
    if m.is_multiple_of(2) {
        let w0 = 1.0 / ((m * m) as f64 - 1.0);
        w[0] = w0;
        w[m] = w0;
        for k in 1..m / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * k as f64 * theta(i + 1)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (m as f64 * theta(i + 1)).cos() / ((m * m) as f64 - 1.0);
        }
    } else {
        let w0 = 1.0 / (m * m) as f64;
        w[0] = w0;
        w[m] = w0;
        for k in 1..=(m - 1) / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * k as f64 * theta(i + 1)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / m as f64;
    }
    // [−1,1] → [0,1]
    w.iter().map(|wi| wi / 2.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// implicit trapezoidal rule; norm preserving for LS
    Trapezoidal,
    /// trapezoidal stage followed by BDF2; L-stable, damps the stiff third-order spectrum
    TrBdf2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretisation {
    /// polynomial degree; the grid has M+1 points
    pub m: usize,
    pub dt: f64,
    pub scheme: Scheme,
}

impl Discretisation {
    /// Trapezoidal for purely dispersive second-order symbols, TR-BDF2 otherwise.
    pub fn for_pde(pde: &DispersionMonomial, m: usize, dt: f64) -> Self {
        let unitary = pde.order() == 2 && pde.a().re.abs() < 1e-14;
        Self { m, dt, scheme: if unitary { Scheme::Trapezoidal } else { Scheme::TrBdf2 } }
    }

    pub fn grid(&self) -> Vec<f64> {
        chebyshev(self.m).0
    }

    pub fn refined(&self) -> Self {
        Self { m: 2 * self.m, dt: self.dt / 2.0, scheme: self.scheme }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub dt: f64,
    /// step index of each snapshot
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<C64>>,
    pub sup_norms: Vec<f64>,
}

impl Trajectory {
    pub fn at_step(&self, step: usize) -> Option<&[C64]> {
        self.steps.iter().position(|&s| s == step).map(|i| self.snapshots[i].as_slice())
    }

    /// d(t) = ‖u(·,t+T) − u(·,t)‖∞ for the snapshot pairs a whole period apart.
    pub fn periodicity_defect(&self, period: f64) -> Vec<(f64, f64)> {
        let shift = (period / self.dt).round() as usize;
        if shift == 0 || ((shift as f64) * self.dt - period).abs() > 1e-9 * period.max(1.0) {
            return Vec::new();
        }
        self.steps
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| {
                let later = self.at_step(s + shift)?;
                let d = later.iter().zip(&self.snapshots[i]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                Some((self.times[i], d))
            })
            .collect()
    }

    /// ‖u(·,t) − f(·,t)‖∞ on the grid at every snapshot.
    pub fn deviation<F: Fn(f64, f64) -> C64>(&self, f: F) -> Vec<(f64, f64)> {
        self.times
            .iter()
            .zip(&self.snapshots)
            .map(|(&t, u)| (t, self.x.iter().zip(u).map(|(&x, v)| (v - f(x, t)).norm()).fold(0.0, f64::max)))
            .collect()
    }
}

/// The stepping operators for one discretisation.
struct Stepper {
    x: Vec<f64>,
    dt: f64,
    scheme: Scheme,
    // left-hand factorizations per stage; right-hand operator of the trapezoidal stage
    lhs: Vec<nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
    rhs_ops: Vec<DMatrix<C64>>,
    p: DMatrix<C64>,
}

impl Stepper {
    fn new(pde: &DispersionMonomial, data: &FourierBoundaryData, disc: &Discretisation) -> Result<Self> {
        let m = disc.m;
        let k = data.conditions.len();
        if m < 2 * k {
            return Err(Error::InvalidArgument(format!("degree M = {m} is too small for {k} boundary conditions")));
        }
        let (x, d) = chebyshev(m);
        let rows = m + 1 - k;
        let y: Vec<f64> = (0..rows).map(|j| (PI * (2 * j + 1) as f64 / (4.0 * rows as f64)).sin().powi(2)).collect();
        let p = barycentric_matrix(&x, &y).map(|v| C64::new(v, 0.0));
        let dc = d.map(|v| C64::new(v, 0.0));
        let big_n = pde.order();
        let mut dn = DMatrix::<C64>::identity(m + 1, m + 1);
        let mut powers = vec![dn.clone()];
        for _ in 0..big_n.max(k) {
            dn = &dc * &dn;
            powers.push(dn.clone());
        }
        // u_t = −a(−i)^N ∂^N u
        let op = &powers[big_n] * (-pde.a() * C64::new(0.0, -1.0).powu(big_n as u32));
        let pop = &p * &op;
        let mut bc = DMatrix::<C64>::zeros(k, m + 1);
        for (r, cond) in data.conditions.iter().enumerate() {
            for (bv, coeff) in &cond.terms {
                let node = match bv.side {
                    Side::Left => 0,
                    Side::Right => m,
                };
                let row = powers[bv.order].row(node).into_owned() * *coeff;
                let mut target = bc.row_mut(r);
                target += row;
            }
        }
        let stack = |top: DMatrix<C64>| {
            let mut a = DMatrix::<C64>::zeros(m + 1, m + 1);
            a.rows_mut(0, rows).copy_from(&top);
            a.rows_mut(rows, k).copy_from(&bc);
            a.lu()
        };
        let dt = disc.dt;
        let (lhs, rhs_ops) = match disc.scheme {
            Scheme::Trapezoidal => {
                let h = C64::new(dt / 2.0, 0.0);
                (vec![stack(&p - &pop * h)], vec![&p + &pop * h])
            }
            Scheme::TrBdf2 => {
                let g = 2.0 - 2f64.sqrt();
                let h = C64::new(g * dt / 2.0, 0.0);
                let w = C64::new((1.0 - g) / (2.0 - g) * dt, 0.0);
                (vec![stack(&p - &pop * h), stack(&p - &pop * w)], vec![&p + &pop * h])
            }
        };
        Ok(Self { x, dt, scheme: disc.scheme, lhs, rhs_ops, p })
    }

    fn boundary_values(data: &FourierBoundaryData, t: f64) -> Vec<C64> {
        data.conditions.iter().map(|c| c.series.eval(data.omega, t)).collect()
    }

    fn solve(&self, stage: usize, top: nalgebra::DVector<C64>, g: &[C64]) -> Result<nalgebra::DVector<C64>> {
        let n = self.x.len();
        let rows = top.len();
        let mut b = nalgebra::DVector::<C64>::zeros(n);
        b.rows_mut(0, rows).copy_from(&top);
        for (i, v) in g.iter().enumerate() {
            b[rows + i] = *v;
        }
        self.lhs[stage].solve(&b).ok_or_else(|| Error::NonConvergence("singular stepping matrix".into()))
    }

    fn step(&self, data: &FourierBoundaryData, u: &nalgebra::DVector<C64>, t: f64) -> Result<nalgebra::DVector<C64>> {
        let dt = self.dt;
        match self.scheme {
            Scheme::Trapezoidal => self.solve(0, &self.rhs_ops[0] * u, &Self::boundary_values(data, t + dt)),
            Scheme::TrBdf2 => {
                let g = 2.0 - 2f64.sqrt();
                let us = self.solve(0, &self.rhs_ops[0] * u, &Self::boundary_values(data, t + g * dt))?;
                let c1 = 1.0 / (g * (2.0 - g));
                let c0 = (1.0 - g).powi(2) / (g * (2.0 - g));
                let mix = us * C64::new(c1, 0.0) - u * C64::new(c0, 0.0);
                self.solve(1, &self.p * mix, &Self::boundary_values(data, t + dt))
            }
        }
    }
}

/// Step indices for the requested snapshot times, which must be multiples of dt.
fn snapshot_steps(times: &[f64], dt: f64) -> Result<Vec<usize>> {
    let mut steps = Vec::with_capacity(times.len());
    for &t in times {
        let s = (t / dt).round();
        if t < 0.0 || (s * dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidArgument(format!("snapshot time {t} is not a multiple of dt = {dt}")));
        }
        let s = s as usize;
        if steps.last().is_some_and(|&p| s <= p) {
            return Err(Error::InvalidArgument("snapshot times must be strictly increasing".into()));
        }
        steps.push(s);
    }
    Ok(steps)
}

/// Integrates from u₀ (sampled on `disc.grid()`) and records the requested times.
pub fn step_solve(
    pde: &DispersionMonomial,
    data: &FourierBoundaryData,
    u0: &[C64],
    disc: &Discretisation,
    times: &[f64],
) -> Result<Trajectory> {
    data.validate(pde)?;
    if !(disc.dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let stepper = Stepper::new(pde, data, disc)?;
    if u0.len() != stepper.x.len() {
        return Err(Error::InvalidArgument(format!("u0 has {} samples, the grid {}", u0.len(), stepper.x.len())));
    }
    let steps = snapshot_steps(times, disc.dt)?;
    let mut traj = Trajectory {
        x: stepper.x.clone(),
        dt: disc.dt,
        steps: Vec::new(),
        times: Vec::new(),
        snapshots: Vec::new(),
        sup_norms: Vec::new(),
    };
    let mut u = nalgebra::DVector::from_column_slice(u0);
    let last = steps.last().copied().unwrap_or(0);
    let mut next = 0;
    for s in 0..=last {
        let t = s as f64 * disc.dt;
        if s > 0 {
            u = stepper.step(data, &u, (s - 1) as f64 * disc.dt)?;
            let sup = u.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if u.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::InstabilityDetected { t });
            }
            if sup > BLOWUP {
                return Err(Error::BlowupDetected { t });
            }
        }
        if next < steps.len() && steps[next] == s {
            traj.steps.push(s);
            traj.times.push(t);
            traj.sup_norms.push(u.iter().map(|v| v.norm()).fold(0.0, f64::max));
            traj.snapshots.push(u.iter().copied().collect());
            next += 1;
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionSample {
    pub t: f64,
    /// max over the grid of |u_num − u₁ − u₂|
    pub error: f64,
    /// |u_fine − u_coarse|/3, the Richardson estimate of the fine solution's error
    pub richardson: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub samples: Vec<DecompositionSample>,
    pub max_error: f64,
    pub max_richardson: f64,
    /// every sample satisfies error ≤ 3·richardson (or error ≤ 1e−12)
    pub consistent: bool,
}

/// Compares the oracle solution with u₁ + u₂ at the given times; the discretisation
/// error is estimated by rerunning with M doubled and dt halved.
pub fn verify_decomposition(
    problem: &Problem,
    disc: &Discretisation,
    times: &[f64],
    res: &Resolution,
) -> Result<DecompositionReport> {
    let pde = problem.pde();
    let c = problem.construct()?;
    let u2: Remainder = problem.remainder(&c, res)?;
    let run = |d: &Discretisation| {
        let u0: Vec<C64> = d.grid().iter().map(|&x| c.u0(x)).collect();
        step_solve(&pde, &problem.data, &u0, d, times)
    };
    let coarse = run(disc)?;
    let fine = run(&disc.refined())?;
    let mut samples = Vec::new();
    for (i, &t) in coarse.times.iter().enumerate() {
        let mut error: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for (j, &x) in coarse.x.iter().enumerate() {
            // the refined Lobatto grid contains the coarse one at even indices
            let uf = fine.snapshots[i][2 * j];
            diff = diff.max((uf - coarse.snapshots[i][j]).norm());
            error = error.max((uf - c.u1.eval(x, t) - u2.eval(x, t)?).norm());
        }
        samples.push(DecompositionSample { t, error, richardson: diff / 3.0 });
    }
    let max_error = samples.iter().map(|s| s.error).fold(0.0, f64::max);
    let max_richardson = samples.iter().map(|s| s.richardson).fold(0.0, f64::max);
    let consistent = samples.iter().all(|s| s.error <= 3.0 * s.richardson || s.error <= 1e-12);
    Ok(DecompositionReport { samples, max_error, max_richardson, consistent })
}
