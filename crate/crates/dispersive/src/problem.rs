//! A preset problem bundled with its initial datum, and the pieces of the
//! u = u₁ + u₂ decomposition built from it.

use serde::{Deserialize, Serialize};

use crate::dtn::{solve_dtn, DtnResult};
use crate::homogeneous::{ContourParams, CosineSeries, CoupledEigenBasis, CoupledSeries, DecoupledContour, SineSeries};
use crate::model::{DispersionMonomial, FourierBoundaryData, FourierSeries, Preset};
use crate::periodic::{build_periodic_solution, PeriodicSolution};
use crate::quad::CompositeRule;
use crate::{Error, Result, C64};

/// The initial datum u₀ as a function of x; may refer to the periodic trace u_T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatum {
    Zero,
    /// u₀ = u_T
    PeriodicTrace,
    /// u₀ = u_T + perturbation
    TracePlus {
        perturbation: Box<InitialDatum>,
    },
    /// amp·sin(mπx)
    Sine {
        m: u32,
        amp: f64,
    },
    /// amp·cos(mπx)
    Cosine {
        m: u32,
        amp: f64,
    },
    /// Σ c_i x^i
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// amp·x^p(1−x)^q
    Bump {
        p: i32,
        q: i32,
        amp: f64,
    },
    /// grid samples, linearly interpolated (exact at the nodes)
    Samples {
        x: Vec<f64>,
        re: Vec<f64>,
        im: Vec<f64>,
    },
    Sum {
        terms: Vec<InitialDatum>,
    },
}

impl InitialDatum {
    pub fn eval(&self, x: f64, trace: &dyn Fn(f64) -> C64) -> C64 {
        let r = |v: f64| C64::new(v, 0.0);
        match self {
            InitialDatum::Zero => r(0.0),
            InitialDatum::PeriodicTrace => trace(x),
            InitialDatum::TracePlus { perturbation } => trace(x) + perturbation.eval(x, trace),
            InitialDatum::Sine { m, amp } => r(amp * (*m as f64 * std::f64::consts::PI * x).sin()),
            InitialDatum::Cosine { m, amp } => r(amp * (*m as f64 * std::f64::consts::PI * x).cos()),
            InitialDatum::Polynomial { coeffs } => r(coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)),
            InitialDatum::Bump { p, q, amp } => r(amp * x.powi(*p) * (1.0 - x).powi(*q)),
            InitialDatum::Samples { x: xs, re, im } => interpolate(xs, re, im, x),
            InitialDatum::Sum { terms } => terms.iter().map(|d| d.eval(x, trace)).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialDatum::Samples { x, re, im } => {
                if x.len() < 2 || x.len() != re.len() || x.len() != im.len() {
                    return Err(Error::InvalidArgument("samples need ≥ 2 points and matching lengths".into()));
                }
                let mut sorted = x.clone();
                sorted.sort_by(f64::total_cmp);
                if sorted.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidArgument("sample abscissae must be distinct and finite".into()));
                }
                Ok(())
            }
            InitialDatum::TracePlus { perturbation } => perturbation.validate(),
            InitialDatum::Sum { terms } => terms.iter().try_for_each(|t| t.validate()),
            _ => Ok(()),
        }
    }
}

fn interpolate(xs: &[f64], re: &[f64], im: &[f64], x: f64) -> C64 {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let at = |i: usize| C64::new(re[idx[i]], im[idx[i]]);
    let xv = |i: usize| xs[idx[i]];
    if let Some(i) = (0..idx.len()).find(|&i| xv(i) == x) {
        return at(i);
    }
    let n = idx.len();
    let j = (1..n).find(|&j| xv(j) >= x).unwrap_or(n - 1);
    let s = (x - xv(j - 1)) / (xv(j) - xv(j - 1));
    at(j - 1) * (1.0 - s) + at(j) * s
}

/// Truncation and resolution knobs shared by construction and the u₂ evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resolution {
    /// sine/cosine terms
    pub m_max: usize,
    /// coupled-Stokes eigenmodes
    pub eigenmodes: usize,
    /// points of the uniform grid used for sup-norm checks
    pub grid: usize,
    pub contour: ContourParams,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { m_max: 64, eigenmodes: 16, grid: 201, contour: ContourParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub preset: Preset,
    pub data: FourierBoundaryData,
    pub u0: InitialDatum,
    pub n_max: i64,
}

/// u₁ with its DtN solution; `reference` is the trace the datum refers to.
#[derive(Debug, Clone)]
pub struct Construction {
    pub dtn: DtnResult,
    pub u1: PeriodicSolution,
    reference: PeriodicSolution,
    u0: InitialDatum,
}

impl Construction {
    pub fn u0(&self, x: f64) -> C64 {
        self.u0.eval(x, &|y| self.reference.u_t(y))
    }

    /// w₀ = u₀ − u_T
    pub fn w0(&self, x: f64) -> C64 {
        self.u0(x) - self.u1.u_t(x)
    }

    pub fn w0_sup(&self, grid: usize) -> f64 {
        uniform(grid).map(|x| self.w0(x).norm()).fold(0.0, f64::max)
    }
}

pub fn uniform(points: usize) -> impl Iterator<Item = f64> {
    let m = points.max(2) - 1;
    (0..=m).map(move |i| i as f64 / m as f64)
}

fn mean_of<F: Fn(f64) -> C64>(f: F) -> C64 {
    CompositeRule::new(0.0, 1.0, 16, 20).integrate(f)
}

/// The remainder u₂ for the preset.
#[derive(Debug, Clone)]
pub enum Remainder {
    Sine(SineSeries),
    Cosine(CosineSeries),
    Coupled(CoupledSeries),
    Decoupled { contour: DecoupledContour, w0: Vec<(f64, C64)> },
}

impl Remainder {
    pub fn eval(&self, x: f64, t: f64) -> Result<C64> {
        match self {
            Remainder::Sine(s) => Ok(s.eval(x, t)),
            Remainder::Cosine(s) => Ok(s.eval(x, t)),
            Remainder::Coupled(s) => Ok(s.eval(x, t)),
            Remainder::Decoupled { contour, w0 } => {
                if t == 0.0 {
                    Ok(interpolate(
                        &w0.iter().map(|p| p.0).collect::<Vec<_>>(),
                        &w0.iter().map(|p| p.1.re).collect::<Vec<_>>(),
                        &w0.iter().map(|p| p.1.im).collect::<Vec<_>>(),
                        x,
                    ))
                } else {
                    contour.eval(x, t)
                }
            }
        }
    }
}

impl Problem {
    pub fn new(
        preset: Preset,
        omega: f64,
        g: FourierSeries,
        h: FourierSeries,
        u0: InitialDatum,
        n_max: i64,
    ) -> Result<Self> {
        let data = preset.data(omega, g, h)?;
        u0.validate()?;
        Ok(Self { preset, data, u0, n_max })
    }

    pub fn pde(&self) -> DispersionMonomial {
        self.preset.pde()
    }

    fn needs_mean(&self) -> bool {
        matches!(self.preset, Preset::HeatNeumann)
    }

    pub fn solve_dtn(&self, mean: C64) -> Result<DtnResult> {
        solve_dtn(&self.pde(), &self.data, self.n_max, self.needs_mean().then_some(mean))
    }

    /// u₁ and the DtN values. For heat the free constant in U₀ is chosen so that
    /// ∫(u₀ − u_T) = 0, the only choice for which u₂ decays.
    pub fn construct(&self) -> Result<Construction> {
        let pde = self.pde();
        let dtn = self.solve_dtn(C64::new(0.0, 0.0))?;
        let reference = build_periodic_solution(&pde, &self.data, &dtn, self.n_max)?;
        if !self.needs_mean() {
            return Ok(Construction { dtn, u1: reference.clone(), reference, u0: self.u0.clone() });
        }
        let shift = mean_of(|x| self.u0.eval(x, &|y| reference.u_t(y)) - reference.u_t(x));
        let dtn = self.solve_dtn(shift)?;
        let u1 = build_periodic_solution(&pde, &self.data, &dtn, self.n_max)?;
        Ok(Construction { dtn, u1, reference, u0: self.u0.clone() })
    }

    pub fn remainder(&self, c: &Construction, res: &Resolution) -> Result<Remainder> {
        let w0 = |x: f64| c.w0(x);
        Ok(match self.preset {
            Preset::LsDirichlet => Remainder::Sine(SineSeries::new(w0, res.m_max)),
            Preset::HeatNeumann => Remainder::Cosine(CosineSeries::new(w0, res.m_max)?),
            Preset::StokesCoupled { beta } => {
                Remainder::Coupled(CoupledSeries::new(CoupledEigenBasis::new(beta, res.eigenmodes)?, w0))
            }
            Preset::StokesDecoupled => Remainder::Decoupled {
                contour: DecoupledContour::new(w0, res.contour),
                w0: uniform(res.grid).map(|x| (x, c.w0(x))).collect(),
            },
        })
    }
}
