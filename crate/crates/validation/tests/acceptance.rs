//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest harness
//! so that every line reaches the output; exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::panic;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dispersive::classify::{commensurability, Commensurability, PeriodSpec, Q_MAX};
use dispersive::detfun::{count_zeros_detailed, locate_zeros, Family, Rect};
use dispersive::dtn::{entirety_residual, heat_closed_form, ls_closed_form, solve_dtn, ModeOutcome};
use dispersive::homogeneous::{decoupled_lambda0, stokes_decoupled_u2, ContourParams};
use dispersive::model::{alpha, BoundaryValue, FourierBoundaryData, FourierSeries, Preset, Side};
use dispersive::oracle::{step_solve, verify_decomposition, Discretisation};
use dispersive::periodic::build_periodic_solution;
use dispersive::problem::{InitialDatum, Problem, Resolution};
use dispersive::C64;

fn report(n: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {n:>2} [{name}]: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    if !pass {
        panic::panic_any(Reported);
    }
}

/// Unwinding marker for a criterion that already printed its FAIL line.
struct Reported;

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn cnorm(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn criterion_01_ls_worked_example() {
    let start = Instant::now();
    let preset = Preset::LsDirichlet;
    let data = preset.data(PI * PI, FourierSeries::sine(1, 1.0), FourierSeries::zero()).unwrap();
    let dtn = solve_dtn(&preset.pde(), &data, 4, None).unwrap();
    let g1 = dtn.value(1, BoundaryValue::new(Side::Left, 1)).unwrap();
    let h1 = dtn.value(1, BoundaryValue::new(Side::Right, 1)).unwrap();
    let i = C64::i();
    let g_expect = -i * PI * PI.cosh() / (2.0 * PI.sinh());
    let h_expect = -i * PI / (2.0 * PI.sinh());
    let resonant = dtn.modes[&-1].is_resonant();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = rel(g1, g_expect) <= 1e-10 && rel(h1, h_expect) <= 1e-10 && resonant && elapsed < 1.0;
    report(
        1,
        "LS worked example",
        pass,
        format!(
            "G1 = {g1:.12}, expected {g_expect:.12} (rel {:.2e}); H1 = {h1:.12}, expected {h_expect:.12} (rel {:.2e}); n = −1 resonant: {resonant}; {elapsed:.3}s",
            rel(g1, g_expect),
            rel(h1, h_expect)
        ),
    );
}

fn criterion_02_closed_form_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut draws = [0usize; 2];
    while draws[0] < 200 {
        let n: i64 = rng.gen_range(1..=8) * if rng.gen_bool(0.5) { 1 } else { -1 };
        let omega = rng.gen_range(0.3..30.0);
        let s = (n.unsigned_abs() as f64 * omega).sqrt();
        if n < 0 && s.sin().abs() < 1e-3 {
            continue;
        }
        let (g0, h0) = (cnorm(&mut rng), cnorm(&mut rng));
        let data = Preset::LsDirichlet.data(omega, FourierSeries::single(n, g0), FourierSeries::single(n, h0)).unwrap();
        let dtn = solve_dtn(&Preset::LsDirichlet.pde(), &data, 8, None).unwrap();
        let (g1, h1) = ls_closed_form(n, omega, g0, h0).unwrap();
        worst = worst
            .max(rel(dtn.value(n, BoundaryValue::new(Side::Left, 1)).unwrap(), g1))
            .max(rel(dtn.value(n, BoundaryValue::new(Side::Right, 1)).unwrap(), h1));
        draws[0] += 1;
    }
    while draws[1] < 200 {
        let n: i64 = rng.gen_range(1..=8) * if rng.gen_bool(0.5) { 1 } else { -1 };
        let omega = rng.gen_range(0.3..30.0);
        let s = (n.unsigned_abs() as f64 * omega).sqrt();
        if n < 0 && s.sin().abs() < 1e-3 {
            continue;
        }
        let (g1, h1) = (cnorm(&mut rng), cnorm(&mut rng));
        let data = Preset::HeatNeumann.data(omega, FourierSeries::single(n, g1), FourierSeries::single(n, h1)).unwrap();
        let dtn = solve_dtn(&Preset::HeatNeumann.pde(), &data, 8, None).unwrap();
        let (g0, h0) = heat_closed_form(n, omega, g1, h1);
        worst = worst
            .max(rel(dtn.value(n, BoundaryValue::new(Side::Left, 0)).unwrap(), g0))
            .max(rel(dtn.value(n, BoundaryValue::new(Side::Right, 0)).unwrap(), h0));
        draws[1] += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        2,
        "closed form vs generic",
        worst <= 1e-11 && elapsed < 5.0,
        format!("{} LS + {} heat draws, worst relative difference {worst:.2e}; {elapsed:.3}s", draws[0], draws[1]),
    );
}

fn test_matrix() -> Vec<(Preset, FourierBoundaryData)> {
    let mut out = Vec::new();
    let presets = [
        Preset::LsDirichlet,
        Preset::HeatNeumann,
        Preset::StokesDecoupled,
        Preset::StokesCoupled { beta: 10.0 },
        Preset::StokesCoupled { beta: -2.0 },
        Preset::StokesCoupled { beta: 1.0 },
    ];
    for preset in presets {
        for omega in [0.7, 2.0, PI * PI, 25.0] {
            let mut g = FourierSeries::zero();
            let mut h = FourierSeries::zero();
            for n in -4i64..=4 {
                if n != 0 {
                    g.0.insert(n, C64::new(1.0 / n as f64, 0.3 * n as f64));
                    h.0.insert(n, C64::new(0.5, -0.2 / n as f64));
                }
            }
            out.push((preset, preset.data(omega, g, h).unwrap()));
        }
    }
    out
}

fn criterion_03_entirety() {
    let mut worst: f64 = 0.0;
    let mut solved = 0;
    for (preset, data) in test_matrix() {
        let pde = preset.pde();
        let dtn = solve_dtn(&pde, &data, 8, None).unwrap();
        for (&n, outcome) in &dtn.modes {
            if let ModeOutcome::Solved { values, .. } = outcome {
                worst = worst.max(entirety_residual(&pde, data.omega, n, values));
                solved += 1;
            }
        }
    }
    report(
        3,
        "entirety",
        worst <= 1e-10,
        format!("{solved} solved modes, worst relative numerator residual {worst:.2e}"),
    );
}

fn criterion_04_decoupled_spectral_bound() {
    let start = Instant::now();
    let l0 = decoupled_lambda0().unwrap();
    let v = C64::i() * l0.powu(3);
    let elapsed = start.elapsed().as_secs_f64();
    report(
        4,
        "Stokes decoupled spectral bound",
        v.re < -64.0 && v.im.abs() < 1e-8 * v.norm() && elapsed < 10.0,
        format!("λ0 = {l0:.10}, iλ0³ = {v:.6}; {elapsed:.3}s"),
    );
}

fn criterion_05_coupled_zero_asymptotics() {
    let zs = locate_zeros(Family::Coupled { beta: 1.0 }, Rect::new(0.5, 31.5 * PI, -0.5, 0.5), None).unwrap();
    let mut real: Vec<f64> = zs.zeros.iter().map(|z| z.location.re).collect();
    real.sort_by(f64::total_cmp);
    let mut worst_real: f64 = 0.0;
    for m in 5..=15usize {
        let predicted = (2.0 * m as f64 - 1.0 / 3.0) * PI;
        worst_real = worst_real.max(real.get(m - 1).map_or(f64::INFINITY, |z| (z - predicted).abs()));
    }
    let c = 10f64.ln();
    let zs = locate_zeros(Family::Coupled { beta: 10.0 }, Rect::new(-41.0, 41.0, -41.0, 41.0), None).unwrap();
    let a = alpha(3);
    let mut worst_line: f64 = 0.0;
    let mut checked = 0;
    for z in zs.zeros.iter().map(|z| z.location).filter(|z| (10.0..=40.0).contains(&z.norm())) {
        let d = (0..3).map(|j| ((a.powi(-j) * z).im - c).abs()).fold(f64::INFINITY, f64::min);
        worst_line = worst_line.max(d);
        checked += 1;
    }
    report(
        5,
        "coupled zero asymptotics",
        worst_real <= 0.05 && worst_line <= 0.5 && checked > 0,
        format!("β = 1: worst |z_m − (2m − 1/3)π| over m = 5…15 is {worst_real:.2e}; β = 10: {checked} zeros, worst line distance {worst_line:.3}"),
    );
}

fn criterion_06_argument_principle_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = Vec::new();
    let mut total = 0;
    for family in [Family::Uncoupled, Family::Coupled { beta: 10.0 }, Family::Coupled { beta: -1.0 }] {
        for _ in 0..20 {
            let c = C64::new(rng.gen_range(-25.0..25.0), rng.gen_range(-25.0..25.0));
            let (hx, hy) = (rng.gen_range(1.0..10.0), rng.gen_range(1.0..10.0));
            let rect = Rect::new(c.re - hx, c.re + hx, c.im - hy, c.im + hy);
            let (count, used) = count_zeros_detailed(family, rect).unwrap();
            let located = locate_zeros(family, used, None).unwrap();
            let inside: usize =
                located.zeros.iter().filter(|z| used.contains(z.location)).map(|z| z.multiplicity).sum();
            total += count;
            if inside != count {
                mismatches.push(format!("{family:?} {used:?}: {count} vs {inside}"));
            }
        }
    }
    report(
        6,
        "argument principle consistency",
        mismatches.is_empty(),
        format!("60 rectangles, {total} zeros counted; mismatches: {mismatches:?}"),
    );
}

fn criterion_07_exact_periodicity_of_u1() {
    let mut worst = [0.0f64; 3];
    for preset in
        [Preset::LsDirichlet, Preset::HeatNeumann, Preset::StokesDecoupled, Preset::StokesCoupled { beta: 10.0 }]
    {
        for (n, omega) in [(1i64, 2.0), (-1, 3.0), (2, 1.3)] {
            let data = preset
                .data(
                    omega,
                    FourierSeries::single(n, C64::new(0.8, -0.4)),
                    FourierSeries::single(n, C64::new(0.0, 0.5)),
                )
                .unwrap();
            let pde = preset.pde();
            let dtn = solve_dtn(&pde, &data, 4, None).unwrap();
            let u1 = build_periodic_solution(&pde, &data, &dtn, 4).unwrap();
            let period = u1.period();
            for s in 0..50 {
                let t = s as f64 * period / 17.0;
                for c in &data.conditions {
                    let lhs: C64 =
                        c.terms.iter().map(|(bv, coeff)| coeff * u1.derivative(bv.side.x(), t, bv.order)).sum();
                    worst[1] = worst[1].max((lhs - c.series.eval(omega, t)).norm());
                }
                for k in 0..=10 {
                    let x = k as f64 / 10.0;
                    worst[0] = worst[0].max(u1.pde_residual(&pde, x, t).norm());
                    worst[2] = worst[2].max((u1.eval(x, t + period) - u1.eval(x, t)).norm());
                }
            }
        }
    }
    report(
        7,
        "exact periodicity of u1",
        worst[0] <= 1e-9 && worst[1] <= 1e-9 && worst[2] <= 1e-12,
        format!("PDE residual {:.2e}, boundary residual {:.2e}, period shift {:.2e}", worst[0], worst[1], worst[2]),
    );
}

fn heat_problem() -> Problem {
    let perturbation = InitialDatum::Sum {
        terms: vec![
            InitialDatum::Cosine { m: 1, amp: 1.0 },
            InitialDatum::Cosine { m: 2, amp: 0.5 },
            InitialDatum::Polynomial { coeffs: vec![0.3] },
        ],
    };
    Problem::new(
        Preset::HeatNeumann,
        2.0 * PI,
        FourierSeries::cosine(1, 1.0),
        FourierSeries::cosine(1, 0.5),
        InitialDatum::TracePlus { perturbation: Box::new(perturbation) },
        4,
    )
    .unwrap()
}

fn criterion_08_decomposition_vs_oracle() {
    let start = Instant::now();
    let times = [0.1, 0.5, 1.0];
    let heat = heat_problem();
    let r_heat =
        verify_decomposition(&heat, &Discretisation::for_pde(&heat.pde(), 24, 5e-3), &times, &Resolution::default())
            .unwrap();
    let stokes = Problem::new(
        Preset::StokesCoupled { beta: 10.0 },
        2.0,
        FourierSeries::sine(1, 1.0),
        FourierSeries::zero(),
        InitialDatum::TracePlus { perturbation: Box::new(InitialDatum::Bump { p: 4, q: 4, amp: 1.0 }) },
        4,
    )
    .unwrap();
    let r_stokes = verify_decomposition(
        &stokes,
        &Discretisation::for_pde(&stokes.pde(), 32, 5e-3),
        &times,
        &Resolution::default(),
    )
    .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let describe = |r: &dispersive::oracle::DecompositionReport| {
        r.samples
            .iter()
            .map(|s| format!("t={}: {:.2e} ≤ 3×{:.2e}", s.t, s.error, s.richardson))
            .collect::<Vec<_>>()
            .join(", ")
    };
    report(
        8,
        "decomposition vs oracle",
        r_heat.consistent && r_stokes.consistent && elapsed < 60.0,
        format!("heat [{}]; Stokes β=10 [{}]; {elapsed:.2}s", describe(&r_heat), describe(&r_stokes)),
    );
}

fn criterion_09_resonant_growth() {
    let preset = Preset::LsDirichlet;
    let pde = preset.pde();
    let data = preset.data(PI * PI, FourierSeries::sine(1, 1.0), FourierSeries::zero()).unwrap();
    let period = 2.0 / PI;
    let disc = Discretisation::for_pde(&pde, 32, period / 640.0);
    let times: Vec<f64> = (1..=20).map(|m| m as f64 * 640.0 * disc.dt).collect();
    let u0 = vec![C64::new(0.0, 0.0); disc.m + 1];
    let tr = step_solve(&pde, &data, &u0, &disc, &times).unwrap();
    let increasing = tr.sup_norms.windows(2).all(|w| w[1] > w[0]);
    report(
        9,
        "resonant growth",
        increasing,
        format!(
            "‖u(·,mT)‖∞ for m = 1, 10, 20: {:.4}, {:.4}, {:.4}; strictly increasing: {increasing}",
            tr.sup_norms[0], tr.sup_norms[9], tr.sup_norms[19]
        ),
    );
}

fn criterion_10_heat_decay() {
    let preset = Preset::HeatNeumann;
    let pde = preset.pde();
    let data = preset.data(1.0, FourierSeries::zero(), FourierSeries::zero()).unwrap();
    let disc = Discretisation::for_pde(&pde, 24, 1e-3);
    let u0: Vec<C64> =
        disc.grid().iter().map(|&x| C64::new((PI * x).cos() - 0.3 * (2.0 * PI * x).cos(), 0.0)).collect();
    let times: Vec<f64> = (0..=10).map(|k| (100 + 50 * k) as f64 * disc.dt).collect();
    let tr = step_solve(&pde, &data, &u0, &disc, &times).unwrap();
    let ys: Vec<f64> = tr.sup_norms.iter().map(|v| v.ln()).collect();
    let n = ys.len() as f64;
    let (mx, my) = (tr.times.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = tr.times.iter().zip(&ys).map(|(t, y)| (t - mx) * (y - my)).sum();
    let sxx: f64 = tr.times.iter().map(|t| (t - mx).powi(2)).sum();
    let rate = -sxy / sxx;
    let err = (rate / (PI * PI) - 1.0).abs();
    report(10, "heat decay", err <= 0.02, format!("fitted rate {rate:.5} vs π² = {:.5} (relative {err:.2e})", PI * PI));
}

fn criterion_11_decoupled_u2_decay() {
    let w0 = |x: f64| C64::new(x * (1.0 - x).powi(2), 0.0);
    let ts = [1.0, 2.0, 4.0, 8.0];
    let p10 = ContourParams { delta: PI / 18.0, ..ContourParams::default() };
    let p20 = ContourParams { delta: PI / 9.0, ..ContourParams::default() };
    let mut values = Vec::new();
    let mut independence: f64 = 0.0;
    for &t in &ts {
        let a = stokes_decoupled_u2(w0, 0.5, t, p10).unwrap();
        let b = stokes_decoupled_u2(w0, 0.5, t, p20).unwrap();
        independence = independence.max((a - b).norm());
        values.push(a.norm());
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let pass = (-1.1..=-0.4).contains(&slope) && independence <= 1e-6;
    let rate = (C64::i() * decoupled_lambda0().unwrap().powu(3)).re;
    report(
        11,
        "Stokes decoupled u2 decay",
        pass,
        format!(
            "|u2(0.5,t)| at t = 1,2,4,8: {:.3e}, {:.3e}, {:.3e}, {:.3e}; fitted exponent {slope:.3}; δ = 10° vs 20° difference {independence:.2e}; residue bound e^(iλ0³t) at t = 1 is {:.1e}",
            values[0], values[1], values[2], values[3], rate.exp()
        ),
    );
}

fn criterion_12_commensurability() {
    let a = commensurability(PeriodSpec::Float(2.0 / PI), Q_MAX).unwrap();
    let b = commensurability(PeriodSpec::Float(3.0 / PI), Q_MAX).unwrap();
    let c = commensurability(PeriodSpec::Float(2f64.sqrt() * 2.0 / PI), Q_MAX).unwrap();
    let ok_a = matches!(a, Commensurability::Dependent { ratio: (1, 1), .. });
    let ok_b = matches!(b, Commensurability::Dependent { lcm, .. } if lcm.two_over_pi == Some((3, 1)) && (lcm.decimal - 6.0 / PI).abs() < 1e-14);
    let ok_c = c == Commensurability::Independent { q_max: Q_MAX };
    report(12, "commensurability", ok_a && ok_b && ok_c, format!("2/π → {a:?}; 3/π → {b:?}; √2·2/π → {c:?}"));
}

fn main() {
    let criteria: [(&str, fn()); 12] = [
        ("criterion_01_ls_worked_example", criterion_01_ls_worked_example),
        ("criterion_02_closed_form_equivalence", criterion_02_closed_form_equivalence),
        ("criterion_03_entirety", criterion_03_entirety),
        ("criterion_04_decoupled_spectral_bound", criterion_04_decoupled_spectral_bound),
        ("criterion_05_coupled_zero_asymptotics", criterion_05_coupled_zero_asymptotics),
        ("criterion_06_argument_principle_consistency", criterion_06_argument_principle_consistency),
        ("criterion_07_exact_periodicity_of_u1", criterion_07_exact_periodicity_of_u1),
        ("criterion_08_decomposition_vs_oracle", criterion_08_decomposition_vs_oracle),
        ("criterion_09_resonant_growth", criterion_09_resonant_growth),
        ("criterion_10_heat_decay", criterion_10_heat_decay),
        ("criterion_11_decoupled_u2_decay", criterion_11_decoupled_u2_decay),
        ("criterion_12_commensurability", criterion_12_commensurability),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        if let Err(e) = panic::catch_unwind(run) {
            failed += 1;
            if !e.is::<Reported>() {
                let msg = e.downcast_ref::<String>().map(String::as_str).or_else(|| e.downcast_ref::<&str>().copied());
                println!("{name}: FAIL — panicked: {}", msg.unwrap_or("unknown"));
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
