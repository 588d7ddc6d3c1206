use std::path::Path;

use anyhow::anyhow;
use dispersive::classify::{classify_problem, ClassifyOptions};
use dispersive::detfun::{count_zeros, export_heatmap, locate_zeros, Family};
use dispersive::dtn::{solve_dtn, ModeOutcome};
use dispersive::model::BoundaryValue;
use dispersive::oracle::{step_solve, verify_decomposition};
use dispersive::periodic::{build_periodic_solution, PeriodicSolution};
use dispersive::problem::InitialDatum;
use dispersive::C64;
use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::output::{read_samples, Sink};
use crate::Failure;

type Outcome = Result<(), Failure>;

fn pair(z: C64) -> Value {
    json!([z.re, z.im])
}

fn print(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn sink(cfg: &Config, out: Option<&Path>, command: &'static str) -> Result<Sink, Failure> {
    Ok(Sink::new(out.unwrap_or(Path::new(".")), command, cfg)?)
}

fn summary(sink: &Sink, mut fields: Value) -> Value {
    let files: Vec<String> = sink.written.iter().map(|p| p.display().to_string()).collect();
    fields["files"] = json!(files);
    fields
}

fn initial_datum(cfg: &Config) -> Result<InitialDatum, Failure> {
    match &cfg.u0_file {
        None => Ok(cfg.u0.clone()),
        Some(path) => {
            let (x, re, im) = read_samples(Path::new(path)).map_err(Failure::Config)?;
            Ok(InitialDatum::Samples { x, re, im })
        }
    }
}

fn uses_trace(d: &InitialDatum) -> bool {
    match d {
        InitialDatum::PeriodicTrace | InitialDatum::TracePlus { .. } => true,
        InitialDatum::Sum { terms } => terms.iter().any(uses_trace),
        _ => false,
    }
}

/// u₁ for the config; presets fix the heat constant from u₀.
fn periodic_solution(cfg: &Config, u0: &InitialDatum) -> dispersive::Result<PeriodicSolution> {
    if cfg.preset.is_some() {
        return Ok(cfg.problem(u0.clone())?.construct()?.u1);
    }
    let s = cfg.setup()?;
    let dtn = solve_dtn(&s.pde, &s.data, cfg.n_max, None)?;
    build_periodic_solution(&s.pde, &s.data, &dtn, cfg.n_max)
}

pub fn classify(cfg: &Config, out: Option<&Path>) -> Outcome {
    let problem = cfg.problem(initial_datum(cfg)?)?;
    let opts = ClassifyOptions { q_max: cfg.tolerances.q_max, period: cfg.period_spec(), resolution: cfg.resolution };
    let verdict = serde_json::to_value(classify_problem(&problem, &opts)?).map_err(anyhow::Error::from)?;
    if let Some(dir) = out {
        Sink::new(dir, "classify", cfg)?.json("verdict.json", &verdict)?;
    }
    print(&verdict);
    Ok(())
}

pub fn dtn(cfg: &Config, out: Option<&Path>) -> Outcome {
    let s = cfg.setup()?;
    let result = solve_dtn(&s.pde, &s.data, cfg.n_max, None)?;
    let big_n = result.order;
    let modes: Vec<Value> = result
        .modes
        .iter()
        .map(|(&n, m)| match m {
            ModeOutcome::Solved { values, flagged, det } => {
                let table: Map<String, Value> = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (BoundaryValue::from_slot(i, big_n).label(), pair(*v)))
                    .collect();
                json!({"n": n, "status": "solved", "values": table, "det": pair(*det), "flagged": flagged})
            }
            ModeOutcome::Resonant { det_abs, rhs_norm, residual, root } => json!({
                "n": n, "status": "resonant", "det_abs": det_abs, "rhs_norm": rhs_norm,
                "residual": residual, "root": pair(*root),
            }),
        })
        .collect();
    let table = json!({
        "omega": s.data.omega,
        "order": big_n,
        "modes": modes,
        "resonant": result.resonant_modes(),
        "truncated": result.truncated,
    });
    if let Some(dir) = out {
        Sink::new(dir, "dtn", cfg)?.json("dtn.json", &table)?;
    }
    print(&table);
    Ok(())
}

pub fn construct(cfg: &Config, out: Option<&Path>) -> Outcome {
    let s = cfg.setup()?;
    let u1 = periodic_solution(cfg, &initial_datum(cfg)?)?;
    // sampled on the oracle grid so that `simulate` can take the file back exactly
    let grid = cfg.discretisation(&s.pde).grid();
    let rows: Vec<Vec<f64>> = grid
        .iter()
        .map(|&x| {
            let v = u1.u_t(x);
            vec![x, v.re, v.im]
        })
        .collect();
    let times: Vec<f64> = (0..50).map(|i| i as f64 * u1.period() / 50.0).collect();
    let residual = times
        .iter()
        .flat_map(|&t| grid.iter().map(move |&x| (x, t)))
        .map(|(x, t)| u1.pde_residual(&s.pde, x, t).norm())
        .fold(0.0, f64::max);
    let manifest = json!({
        "representation": "u1(x,t) = sum_n exp(i n omega t) U_n(x)",
        "omega": u1.omega,
        "period": u1.period(),
        "order": u1.order,
        "pde_residual": residual,
        "profiles": u1.profiles,
    });
    let mut sink = sink(cfg, out, "construct")?;
    sink.csv("u_T.csv", &["x", "re", "im"], &rows, json!({"grid": "chebyshev_lobatto", "m": cfg.discretisation.m}))?;
    sink.json("u1.json", &manifest)?;
    print(&summary(&sink, json!({"period": u1.period(), "modes": u1.profiles.len(), "pde_residual": residual})));
    Ok(())
}

pub fn simulate(cfg: &Config, out: Option<&Path>) -> Outcome {
    let s = cfg.setup()?;
    let datum = initial_datum(cfg)?;
    let u1 = match periodic_solution(cfg, &datum) {
        Ok(u) => Some(u),
        Err(e) if uses_trace(&datum) => return Err(e.into()),
        Err(_) => None,
    };
    let disc = cfg.discretisation(&s.pde);
    let period = s.data.period();
    let trace = |x: f64| u1.as_ref().map_or(C64::new(0.0, 0.0), |u| u.u_t(x));
    let grid = disc.grid();
    let init: Vec<C64> = grid.iter().map(|&x| datum.eval(x, &trace)).collect();
    let last = (cfg.simulate.periods * period / disc.dt).round() as usize;
    let times: Vec<f64> = (0..=last).step_by(cfg.simulate.every).map(|k| k as f64 * disc.dt).collect();
    let traj = step_solve(&s.pde, &s.data, &init, &disc, &times)?;

    let mut rows = Vec::new();
    for (t, u) in traj.times.iter().zip(&traj.snapshots) {
        for (x, v) in traj.x.iter().zip(u) {
            rows.push(vec![*t, *x, v.re, v.im]);
        }
    }
    let defect = traj.periodicity_defect(period);
    let deviation = u1.as_ref().map(|u| traj.deviation(|x, t| u.eval(x, t)));
    let final_defect = defect.last().map(|d| d.1);
    let diagnostics = json!({
        "period": period,
        "m": disc.m,
        "dt": disc.dt,
        "scheme": disc.scheme,
        "steps": last,
        "sup_norms": traj.times.iter().zip(&traj.sup_norms).map(|(t, n)| [*t, *n]).collect::<Vec<_>>(),
        "periodicity_defect": defect,
        "deviation_from_u1": deviation,
        "final_defect": final_defect,
        "periodic": final_defect.map(|d| d <= cfg.tolerances.periodicity),
    });
    let mut sink = sink(cfg, out, "simulate")?;
    sink.csv("trajectory.csv", &["t", "x", "re", "im"], &rows, Value::Null)?;
    sink.json("diagnostics.json", &diagnostics)?;
    print(&summary(&sink, json!({"final_defect": final_defect, "periodic": diagnostics["periodic"]})));
    Ok(())
}

pub fn delta_map(cfg: &Config, out: Option<&Path>) -> Outcome {
    let family = cfg
        .family()
        .ok_or_else(|| Failure::Config(anyhow!("delta-map needs the stokes_decoupled or stokes_coupled preset")))?;
    let m = &cfg.delta_map;
    let beta = match family {
        Family::Coupled { beta } => Some(beta),
        Family::Uncoupled => None,
    };
    let heat = export_heatmap(family, m.rect, m.nx, m.ny);
    let mut sink = sink(cfg, out, "delta-map")?;
    sink.csv(
        "heatmap.csv",
        &[],
        &heat,
        json!({"rect": m.rect, "resolution": [m.nx, m.ny], "family": family, "beta": beta}),
    )?;
    let mut report = json!({"family": family, "rect": m.rect, "count": count_zeros(family, m.rect)?});
    if m.zeros {
        let zs = locate_zeros(family, m.rect, None)?;
        report["zeros"] = json!(zs.zeros);
        sink.json("zeros.json", &report)?;
    }
    print(&summary(&sink, json!({"count": report["count"]})));
    Ok(())
}

pub fn verify(cfg: &Config, out: Option<&Path>) -> Outcome {
    let problem = cfg.problem(initial_datum(cfg)?)?;
    let mut disc = cfg.discretisation(&problem.pde());
    if cfg.discretisation.dt.is_none() {
        // the sample times must be whole steps
        disc.dt = 5e-3;
    }
    let report = verify_decomposition(&problem, &disc, &cfg.verify.times, &cfg.resolution)?;
    let mut sink = sink(cfg, out, "verify")?;
    sink.json("verify.json", &report)?;
    print(&summary(&sink, json!({"consistent": report.consistent, "max_error": report.max_error})));
    if !report.consistent {
        return Err(Failure::Check(format!(
            "u₁ + u₂ differs from the oracle by {:e}, above the discretisation estimate {:e}",
            report.max_error, report.max_richardson
        )));
    }
    Ok(())
}
