//! Periodicity verdicts from the resonance, commensurability and spectral conditions.

use std::f64::consts::PI;

use num_rational::Ratio;
use serde::Serialize;

use crate::detfun::{eval_with_derivative, locate_zeros, Family, Rect};
use crate::dtn::ModeOutcome;
use crate::model::{denominator_roots, FourierBoundaryData, Preset};
use crate::problem::{InitialDatum, Problem, Resolution};
use crate::quad::CompositeRule;
use crate::{Error, Result, C64, TAU_RES};

/// Default largest continued-fraction denominator tried.
pub const Q_MAX: u64 = 1_000_000;
/// ‖u₀ − u_T‖∞ threshold for exact periodicity.
pub const EXACT_TOL: f64 = 1e-10;

/// A time period, exactly as a rational multiple of 2/π when known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Period {
    pub decimal: f64,
    /// (p, q) with period = (p/q)·2/π
    pub two_over_pi: Option<(i64, i64)>,
}

impl Period {
    pub fn float(t: f64) -> Self {
        Self { decimal: t, two_over_pi: None }
    }

    pub fn rational(r: Ratio<i64>) -> Self {
        Self { decimal: *r.numer() as f64 / *r.denom() as f64 * 2.0 / PI, two_over_pi: Some((*r.numer(), *r.denom())) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodSpec {
    Float(f64),
    /// T = (p/q)·2/π
    RationalTimes2OverPi(i64, i64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Commensurability {
    /// T = ratio·(2/π); the least common period is lcm.
    Dependent {
        ratio: (i64, i64),
        lcm: Period,
        exact: bool,
    },
    Independent {
        q_max: u64,
    },
}

fn lcm_of(r: Ratio<i64>) -> Commensurability {
    // lcm(p/q, 1) = p for p/q in lowest terms
    Commensurability::Dependent {
        ratio: (*r.numer(), *r.denom()),
        lcm: Period::rational(Ratio::from_integer(*r.numer())),
        exact: false,
    }
}

/// Decides whether T and 2/π are rationally related. Floating input is decided
/// only up to `q_max`.
pub fn commensurability(t: PeriodSpec, q_max: u64) -> Result<Commensurability> {
    match t {
        PeriodSpec::RationalTimes2OverPi(p, q) => {
            if p <= 0 || q <= 0 {
                return Err(Error::InvalidArgument("the period must be positive".into()));
            }
            let mut c = lcm_of(Ratio::new(p, q));
            if let Commensurability::Dependent { exact, .. } = &mut c {
                *exact = true;
            }
            Ok(c)
        }
        PeriodSpec::Float(t) => {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidArgument("the period must be positive".into()));
            }
            let r = t * PI / 2.0;
            let (mut h0, mut h1) = (0i128, 1i128);
            let (mut k0, mut k1) = (1i128, 0i128);
            let mut x = r;
            loop {
                let a = x.floor();
                if a > 1e15 {
                    break;
                }
                let a = a as i128;
                let (h, k) = (a * h1 + h0, a * k1 + k0);
                if k as u64 > q_max {
                    break;
                }
                if h > 0 && ((k as f64) * r - h as f64).abs() <= 1e-9 {
                    return Ok(lcm_of(Ratio::new(h as i64, k as i64)));
                }
                (h0, h1, k0, k1) = (h1, h, k1, k);
                let frac = x - x.floor();
                if frac == 0.0 {
                    break;
                }
                x = 1.0 / frac;
            }
            Ok(Commensurability::Independent { q_max })
        }
    }
}

/// A mode that obstructs asymptotic periodicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub n: i64,
    pub root: C64,
    pub coefficient: C64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictKind {
    ExactlyPeriodic { period: Period },
    StronglyAsymptoticallyPeriodic { period: Period },
    NotAsymptoticallyPeriodic { witness: Witness },
    PeriodicIffCommensurate { period: Period, formula: String },
    Undetermined { notes: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeEvidence {
    pub n: i64,
    /// |det| of the mode system, or |Δ(k_n)| relative to its term scale for the Stokes families
    pub det_abs: f64,
    pub data_coefficient: C64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    #[serde(flatten)]
    pub kind: VerdictKind,
    pub evidence: Vec<ModeEvidence>,
    pub commensurability: Option<Commensurability>,
    pub caveats: Vec<String>,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self.kind {
            VerdictKind::ExactlyPeriodic { .. } => "exactly_periodic",
            VerdictKind::StronglyAsymptoticallyPeriodic { .. } => "strongly_asymptotically_periodic",
            VerdictKind::NotAsymptoticallyPeriodic { .. } => "not_asymptotically_periodic",
            VerdictKind::PeriodicIffCommensurate { .. } => "periodic_iff_commensurate",
            VerdictKind::Undetermined { .. } => "undetermined",
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.kind {
            VerdictKind::NotAsymptoticallyPeriodic { witness } => Some(witness),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub q_max: u64,
    /// exact period when known, overriding 2π/ω for the commensurability test
    pub period: Option<PeriodSpec>,
    pub resolution: Resolution,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { q_max: Q_MAX, period: None, resolution: Resolution::default() }
    }
}

pub fn classify(preset: Preset, data: &FourierBoundaryData, u0: &InitialDatum, n_max: i64) -> Result<Verdict> {
    let problem = Problem { preset, data: data.clone(), u0: u0.clone(), n_max };
    classify_problem(&problem, &ClassifyOptions::default())
}

/// Largest prescribed coefficient at mode n (over the conditions).
fn data_coefficient(data: &FourierBoundaryData, n: i64) -> C64 {
    data.rhs(n).into_iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default()
}

pub fn classify_problem(p: &Problem, opts: &ClassifyOptions) -> Result<Verdict> {
    let pde = p.pde();
    p.data.validate(&pde)?;
    p.u0.validate()?;
    if let Preset::StokesCoupled { beta } = p.preset {
        if beta.abs() < 1.0 {
            return Err(Error::IllPosed(format!("coupling |β| = {} < 1: the problem is not well posed", beta.abs())));
        }
    }
    let omega = p.data.omega;
    let scale = p.data.support().iter().map(|&n| data_coefficient(&p.data, n).norm()).fold(0.0, f64::max);
    let nonzero = |c: C64| c.norm() > 1e-14 * scale && c.norm() > 0.0;
    let dtn = p.solve_dtn(C64::new(0.0, 0.0))?;
    let mut caveats = Vec::new();
    if !dtn.truncated.is_empty() {
        caveats.push(format!("data modes {:?} lie beyond n_max = {} and were not examined", dtn.truncated, p.n_max));
    }

    let mut evidence = Vec::new();
    let mut witness: Option<Witness> = None;
    for (&n, outcome) in &dtn.modes {
        let coefficient = data_coefficient(&p.data, n);
        let (det_abs, status) = match outcome {
            ModeOutcome::Solved { det, flagged, .. } => {
                (det.norm(), if *flagged { "solved_singular" } else { "solved" })
            }
            ModeOutcome::Resonant { det_abs, .. } => (*det_abs, "resonant"),
        };
        let mut ev = ModeEvidence { n, det_abs, data_coefficient: coefficient, status: status.into() };
        let mut hit = match outcome {
            ModeOutcome::Resonant { root, .. } => Some(Witness {
                n,
                root: *root,
                coefficient,
                reason: "mode system is singular and the data are incompatible".into(),
            }),
            _ => None,
        };
        match p.preset {
            Preset::LsDirichlet if n < 0 => {
                let s = ((n.unsigned_abs() as f64) * omega).sqrt();
                if s.sin().abs() < TAU_RES && nonzero(coefficient) && hit.is_none() {
                    hit = Some(Witness {
                        n,
                        root: C64::new(s, 0.0),
                        coefficient,
                        reason: format!("sin√(|n|ω) = {:.3e} with nonzero boundary data", s.sin()),
                    });
                }
            }
            Preset::StokesDecoupled | Preset::StokesCoupled { .. } if n != 0 => {
                let family = match p.preset {
                    Preset::StokesCoupled { beta } => Family::Coupled { beta },
                    _ => Family::Uncoupled,
                };
                let kn = (n as f64 * omega).cbrt();
                let (d, _, sc) = eval_with_derivative(family, C64::new(kn, 0.0));
                let rel = d.norm() / sc;
                ev.det_abs = rel;
                let g0 = p.data.rhs(n)[0];
                if rel < TAU_RES && nonzero(g0) && hit.is_none() {
                    hit = Some(Witness {
                        n,
                        root: C64::new(kn, 0.0),
                        coefficient: g0,
                        reason: format!("Δ(k_n) vanishes (relative {rel:.3e}) with G_n⁽⁰⁾ ≠ 0"),
                    });
                }
            }
            _ => {}
        }
        if witness.is_none() {
            witness = hit;
        }
        evidence.push(ev);
    }
    if let Some(witness) = witness {
        return Ok(Verdict {
            kind: VerdictKind::NotAsymptoticallyPeriodic { witness },
            evidence,
            commensurability: None,
            caveats,
        });
    }

    let c = p.construct()?;
    let period = match opts.period {
        Some(PeriodSpec::RationalTimes2OverPi(a, b)) => Period::rational(Ratio::new(a, b)),
        _ => Period::float(2.0 * PI / omega),
    };
    let mismatch = c.w0_sup(opts.resolution.grid);
    if mismatch <= EXACT_TOL {
        return Ok(Verdict {
            kind: VerdictKind::ExactlyPeriodic { period },
            evidence,
            commensurability: None,
            caveats,
        });
    }
    caveats.push(format!("‖u₀ − u_T‖∞ = {mismatch:.3e}"));

    let kind = match p.preset {
        Preset::LsDirichlet => {
            let spec = opts.period.unwrap_or(PeriodSpec::Float(2.0 * PI / omega));
            let cm = commensurability(spec, opts.q_max)?;
            let kind = match &cm {
                Commensurability::Dependent { ratio, lcm, .. } => VerdictKind::PeriodicIffCommensurate {
                    period: *lcm,
                    formula: format!("lcm(T, 2/π) = {}·(2/π) with T = ({}/{})·(2/π)", ratio.0, ratio.0, ratio.1),
                },
                Commensurability::Independent { q_max } => {
                    caveats.push(format!("T and 2/π show no integer relation with denominator ≤ {q_max}"));
                    caveats.push(
                        "for incommensurate T the failure of asymptotic periodicity holds for generic u₀; checked empirically only"
                            .into(),
                    );
                    VerdictKind::NotAsymptoticallyPeriodic { witness: sine_witness(&|x| c.w0(x)) }
                }
            };
            return Ok(Verdict { kind, evidence, commensurability: Some(cm), caveats });
        }
        Preset::HeatNeumann | Preset::StokesDecoupled => VerdictKind::StronglyAsymptoticallyPeriodic { period },
        Preset::StokesCoupled { beta } if beta.abs() > 1.0 => {
            let growing = growing_zeros(beta, opts.resolution.eigenmodes)?;
            if growing.is_empty() {
                caveats.push("no nonzero Δ-zeros found with Re(iλ³) ≥ 0 in the search region".into());
                VerdictKind::StronglyAsymptoticallyPeriodic { period }
            } else {
                VerdictKind::Undetermined {
                    notes: growing
                        .iter()
                        .map(|z| format!("Δ-zero {z} has Re(iλ³) = {:.3e} ≥ 0", (C64::i() * z.powu(3)).re))
                        .collect(),
                }
            }
        }
        Preset::StokesCoupled { .. } => VerdictKind::Undetermined {
            notes: vec![
                "Δ(k_n) ≠ 0 at every data mode; with β = ±1 the solution will not usually be asymptotically periodic"
                    .into(),
            ],
        },
    };
    Ok(Verdict { kind, evidence, commensurability: None, caveats })
}

/// Sine coefficient of largest modulus among the first 64, as a witness for LS.
fn sine_witness(w0: &dyn Fn(f64) -> C64) -> Witness {
    let rule = CompositeRule::new(0.0, 1.0, 32, 20);
    let (m, b) = (1..=64)
        .map(|m| (m, 2.0 * rule.integrate(|x| w0(x) * (m as f64 * PI * x).sin())))
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("nonempty");
    Witness {
        n: m,
        root: C64::new(m as f64 * PI, 0.0),
        coefficient: b,
        reason: "homogeneous mode of u₀ − u_T with frequency m²π² incommensurate with ω".into(),
    }
}

/// Nonzero zeros of the coupled determinant with Re(iλ³) ≥ 0.
fn growing_zeros(beta: f64, modes: usize) -> Result<Vec<C64>> {
    let big_m = (modes / 2 + 2) as f64;
    let x = (6.0 * big_m + 2.0) * PI / 3.0;
    let y = beta.abs().ln() + 2.0;
    let zs = locate_zeros(Family::Coupled { beta }, Rect::new(-x, x, -y, y), None)?;
    Ok(zs
        .zeros
        .iter()
        .map(|z| z.location)
        .filter(|z| z.norm() > 1e-6 && (C64::i() * z.powu(3)).re >= -1e-9 * z.norm().powi(3))
        .collect())
}

/// The real roots k with iω n + Ω(k) = 0, for evidence tables.
pub fn real_roots(p: &Problem, n: i64) -> Vec<C64> {
    denominator_roots(&p.pde(), p.data.omega, n)
        .roots
        .into_iter()
        .filter(|r| r.im.abs() < 1e-12 * r.norm().max(1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FourierSeries;

    #[test]
    fn commensurability_examples() {
        let two_over_pi = 2.0 / PI;
        match commensurability(PeriodSpec::Float(two_over_pi), Q_MAX).unwrap() {
            Commensurability::Dependent { ratio, lcm, .. } => {
                assert_eq!(ratio, (1, 1));
                assert_eq!(lcm.two_over_pi, Some((1, 1)));
            }
            c => panic!("{c:?}"),
        }
        match commensurability(PeriodSpec::Float(3.0 / PI), Q_MAX).unwrap() {
            Commensurability::Dependent { ratio, lcm, .. } => {
                assert_eq!(ratio, (3, 2));
                assert!((lcm.decimal - 6.0 / PI).abs() < 1e-15);
            }
            c => panic!("{c:?}"),
        }
        assert_eq!(
            commensurability(PeriodSpec::Float(2f64.sqrt() * two_over_pi), Q_MAX).unwrap(),
            Commensurability::Independent { q_max: Q_MAX }
        );
        match commensurability(PeriodSpec::RationalTimes2OverPi(6, 4), Q_MAX).unwrap() {
            Commensurability::Dependent { ratio, exact, .. } => assert_eq!((ratio, exact), ((3, 2), true)),
            c => panic!("{c:?}"),
        }
        assert!(commensurability(PeriodSpec::Float(-1.0), Q_MAX).is_err());
    }

    #[test]
    fn ls_example_witness() {
        let data = Preset::LsDirichlet.data(PI * PI, FourierSeries::sine(1, 1.0), FourierSeries::zero()).unwrap();
        let v = classify(Preset::LsDirichlet, &data, &InitialDatum::Zero, 8).unwrap();
        let w = v.witness().expect("witness");
        assert_eq!(w.n, -1);
        assert!((w.root.re - PI).abs() < 1e-12);
        assert!(w.coefficient.norm() > 0.0);
    }

    #[test]
    fn heat_verdicts() {
        let data = Preset::HeatNeumann.data(3.0, FourierSeries::cosine(2, 1.0), FourierSeries::sine(1, 2.0)).unwrap();
        let v = classify(Preset::HeatNeumann, &data, &InitialDatum::Sine { m: 1, amp: 1.0 }, 8).unwrap();
        assert_eq!(v.name(), "strongly_asymptotically_periodic");
        let mut g = FourierSeries::zero();
        g.0.insert(0, C64::new(1.0, 0.0));
        let bad = Preset::HeatNeumann.data(3.0, g, FourierSeries::zero()).unwrap();
        let v = classify(Preset::HeatNeumann, &bad, &InitialDatum::Zero, 8).unwrap();
        assert_eq!(v.witness().unwrap().n, 0);
    }

    #[test]
    fn empty_data_zero_datum_is_exact() {
        for preset in
            [Preset::LsDirichlet, Preset::HeatNeumann, Preset::StokesDecoupled, Preset::StokesCoupled { beta: 2.0 }]
        {
            let data = preset.data(1.0, FourierSeries::zero(), FourierSeries::zero()).unwrap();
            let v = classify(preset, &data, &InitialDatum::Zero, 4).unwrap();
            assert_eq!(v.name(), "exactly_periodic", "{preset:?}");
        }
    }

    #[test]
    fn ls_commensurate_and_not() {
        let data = Preset::LsDirichlet.data(PI * PI, FourierSeries::cosine(2, 1.0), FourierSeries::zero()).unwrap();
        let v = classify(Preset::LsDirichlet, &data, &InitialDatum::Sine { m: 2, amp: 1.0 }, 4).unwrap();
        match v.kind {
            VerdictKind::PeriodicIffCommensurate { period, .. } => assert_eq!(period.two_over_pi, Some((1, 1))),
            k => panic!("{k:?}"),
        }
        let omega = PI * PI / 2f64.sqrt();
        let data = Preset::LsDirichlet.data(omega, FourierSeries::cosine(1, 1.0), FourierSeries::zero()).unwrap();
        let v = classify(Preset::LsDirichlet, &data, &InitialDatum::Sine { m: 3, amp: 1.0 }, 4).unwrap();
        assert_eq!(v.name(), "not_asymptotically_periodic");
        assert!(matches!(v.commensurability, Some(Commensurability::Independent { .. })));
    }

    #[test]
    fn coupled_verdicts() {
        let data =
            Preset::StokesCoupled { beta: 0.5 }.data(1.0, FourierSeries::sine(1, 1.0), FourierSeries::zero()).unwrap();
        assert!(matches!(
            classify(Preset::StokesCoupled { beta: 0.5 }, &data, &InitialDatum::Zero, 4),
            Err(Error::IllPosed(_))
        ));
        // ω = λ³ for the first positive real zero of the β = 1 determinant
        let lambda: f64 = 5.2251542487689635;
        let preset = Preset::StokesCoupled { beta: 1.0 };
        let data =
            preset.data(lambda.powi(3), FourierSeries::single(1, C64::new(1.0, 0.0)), FourierSeries::zero()).unwrap();
        let v = classify(preset, &data, &InitialDatum::Zero, 4).unwrap();
        assert_eq!(v.witness().unwrap().n, 1);
        let data = preset.data(1.0, FourierSeries::sine(1, 1.0), FourierSeries::zero()).unwrap();
        assert_eq!(classify(preset, &data, &InitialDatum::Zero, 4).unwrap().name(), "undetermined");
        let strong = Preset::StokesCoupled { beta: 10.0 };
        let data = strong.data(1.0, FourierSeries::sine(1, 1.0), FourierSeries::zero()).unwrap();
        assert_eq!(classify(strong, &data, &InitialDatum::Zero, 4).unwrap().name(), "strongly_asymptotically_periodic");
    }

    #[test]
    fn verdict_json_shape() {
        let data = Preset::StokesDecoupled.data(2.0, FourierSeries::sine(1, 1.0), FourierSeries::zero()).unwrap();
        let v = classify(Preset::StokesDecoupled, &data, &InitialDatum::Zero, 4).unwrap();
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["kind"], "strongly_asymptotically_periodic");
        assert!(j["period"]["decimal"].as_f64().unwrap() > 0.0);
        assert_eq!(j["evidence"].as_array().unwrap().len(), 2);
    }
}
