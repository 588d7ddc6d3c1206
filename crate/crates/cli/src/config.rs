//! The problem configuration: one JSON document, optionally patched by dotted overrides.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dispersive::classify::{PeriodSpec, Q_MAX};
use dispersive::detfun::{Family, Rect};
use dispersive::model::{
    BoundaryCondition, BoundaryValue, DispersionMonomial, FourierBoundaryData, FourierSeries, Preset, Side,
};
use dispersive::oracle::{Discretisation, Scheme};
use dispersive::problem::{InitialDatum, Problem, Resolution};
use dispersive::C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Coefficient table: rows [n, re, im].
pub type Table = Vec<(i64, f64, f64)>;

fn series(t: &Table) -> FourierSeries {
    let mut s = FourierSeries::zero();
    for &(n, re, im) in t {
        *s.0.entry(n).or_default() += C64::new(re, im);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    LsDirichlet,
    HeatNeumann,
    StokesDecoupled,
    StokesCoupled,
}

/// One row of an explicit boundary system: Σ coeff·∂^order u(side) = Σ_n c_n e^{inωt}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionConfig {
    /// [side, order, re, im]
    pub terms: Vec<(Side, usize, f64, f64)>,
    #[serde(default)]
    pub data: Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretisationConfig {
    pub m: usize,
    /// overrides steps_per_period
    pub dt: Option<f64>,
    pub steps_per_period: usize,
    pub scheme: Option<Scheme>,
}

impl Default for DiscretisationConfig {
    fn default() -> Self {
        Self { m: 32, dt: None, steps_per_period: 200, scheme: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// in periods
    pub periods: f64,
    /// snapshot stride in steps
    pub every: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { periods: 2.0, every: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub times: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { times: vec![0.05, 0.1, 0.2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaMapConfig {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    /// locate and refine the zeros inside the rectangle
    pub zeros: bool,
}

impl Default for DeltaMapConfig {
    fn default() -> Self {
        Self { rect: Rect::new(-15.0, 15.0, -8.0, 8.0), nx: 161, ny: 91, zeros: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub q_max: u64,
    /// ‖u(t+T) − u(t)‖ accepted by `simulate` as periodic
    pub periodicity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { q_max: Q_MAX, periodicity: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub preset: Option<PresetName>,
    pub beta: Option<f64>,
    /// explicit symbol Ω(k) = a·k^order, a = [re, im]
    pub a: Option<(f64, f64)>,
    pub order: Option<usize>,
    pub omega: Option<f64>,
    pub period: Option<f64>,
    /// period as (p/q)·2/π, decided exactly by the commensurability test
    pub period_two_over_pi: Option<(i64, i64)>,
    /// left and right data of a preset
    pub g: Table,
    pub h: Table,
    /// explicit boundary system, used with (a, order)
    pub conditions: Vec<ConditionConfig>,
    pub real_data: bool,
    pub u0: InitialDatum,
    /// CSV of x,re,im samples used as u₀ instead of `u0`
    pub u0_file: Option<String>,
    pub n_max: i64,
    pub resolution: Resolution,
    pub discretisation: DiscretisationConfig,
    pub simulate: SimulateConfig,
    pub verify: VerifyConfig,
    pub delta_map: DeltaMapConfig,
    pub tolerances: Tolerances,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            preset: None,
            beta: None,
            a: None,
            order: None,
            omega: None,
            period: None,
            period_two_over_pi: None,
            g: Vec::new(),
            h: Vec::new(),
            conditions: Vec::new(),
            real_data: false,
            u0: InitialDatum::Zero,
            u0_file: None,
            n_max: 64,
            resolution: Resolution::default(),
            discretisation: DiscretisationConfig::default(),
            simulate: SimulateConfig::default(),
            verify: VerifyConfig::default(),
            delta_map: DeltaMapConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Applies `a.b.c=value`; the value is read as JSON and falls back to a bare string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| anyhow!("override `{assignment}` is not key=value"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("override `{assignment}` has an empty key");
    }
    let mut node = doc;
    for k in &keys[..keys.len() - 1] {
        let obj = node.as_object_mut().ok_or_else(|| anyhow!("`{path}`: `{k}` is inside a non-object"))?;
        node = obj.entry(k.to_string()).or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    node.as_object_mut()
        .ok_or_else(|| anyhow!("`{path}` does not address an object field"))?
        .insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Value::Object(Default::default()),
    };
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: Config = serde_json::from_value(doc).context("invalid configuration")?;
    cfg.check()?;
    Ok(cfg)
}

/// The differential operator and boundary data a config describes.
pub struct Setup {
    pub pde: DispersionMonomial,
    pub data: FourierBoundaryData,
    pub preset: Option<Preset>,
}

impl Config {
    fn check(&self) -> Result<()> {
        match (self.preset, self.a.is_some() || self.order.is_some()) {
            (Some(_), true) => bail!("give either `preset` or (`a`, `order`), not both"),
            (None, false) => bail!("missing `preset` or (`a`, `order`)"),
            (None, true) if self.a.is_none() || self.order.is_none() => {
                bail!("explicit symbols need both `a` and `order`")
            }
            _ => {}
        }
        if self.preset.is_some() && !self.conditions.is_empty() {
            bail!("`conditions` are for explicit symbols; presets take `g` and `h`");
        }
        if self.preset.is_none() && (!self.g.is_empty() || !self.h.is_empty()) {
            bail!("`g` and `h` need a preset; use `conditions`");
        }
        if self.beta.is_some() != (self.preset == Some(PresetName::StokesCoupled)) {
            bail!("`beta` is required by, and only by, the stokes_coupled preset");
        }
        let periods = [self.omega.is_some(), self.period.is_some(), self.period_two_over_pi.is_some()];
        if periods.iter().filter(|&&b| b).count() != 1 {
            bail!("give exactly one of `omega`, `period`, `period_two_over_pi`");
        }
        if self.n_max < 0 {
            bail!("`n_max` must be non-negative");
        }
        if self.u0_file.is_some() && self.u0 != InitialDatum::Zero {
            bail!("`u0` and `u0_file` are exclusive");
        }
        let d = &self.discretisation;
        if d.m < 4 || d.steps_per_period == 0 || d.dt.is_some_and(|dt| !(dt > 0.0)) {
            bail!("discretisation needs m ≥ 4 and a positive step");
        }
        if self.simulate.every == 0 || !(self.simulate.periods > 0.0) {
            bail!("simulate needs positive `periods` and `every`");
        }
        let r = &self.delta_map.rect;
        if !(r.x1 > r.x0 && r.y1 > r.y0) || self.delta_map.nx < 2 || self.delta_map.ny < 2 {
            bail!("delta_map needs a non-degenerate rectangle and at least 2×2 samples");
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        if let Some(w) = self.omega {
            w
        } else if let Some(t) = self.period {
            2.0 * PI / t
        } else {
            let (p, q) = self.period_two_over_pi.unwrap();
            // T = (p/q)·2/π  ⇒  ω = π²q/p
            PI * PI * q as f64 / p as f64
        }
    }

    pub fn period_spec(&self) -> Option<PeriodSpec> {
        self.period_two_over_pi.map(|(p, q)| PeriodSpec::RationalTimes2OverPi(p, q))
    }

    pub fn preset(&self) -> Option<Preset> {
        self.preset.map(|p| match p {
            PresetName::LsDirichlet => Preset::LsDirichlet,
            PresetName::HeatNeumann => Preset::HeatNeumann,
            PresetName::StokesDecoupled => Preset::StokesDecoupled,
            PresetName::StokesCoupled => Preset::StokesCoupled { beta: self.beta.unwrap() },
        })
    }

    pub fn setup(&self) -> dispersive::Result<Setup> {
        let omega = self.omega();
        let preset = self.preset();
        let (pde, data) = match preset {
            Some(p) => (p.pde(), p.data(omega, series(&self.g), series(&self.h))?),
            None => {
                let (re, im) = self.a.unwrap();
                let pde = DispersionMonomial::new(C64::new(re, im), self.order.unwrap())?;
                let conds = self
                    .conditions
                    .iter()
                    .map(|c| BoundaryCondition {
                        terms: c
                            .terms
                            .iter()
                            .map(|&(s, o, re, im)| (BoundaryValue::new(s, o), C64::new(re, im)))
                            .collect(),
                        series: series(&c.data),
                    })
                    .collect();
                (pde, FourierBoundaryData::new(omega, conds)?)
            }
        };
        let data = if self.real_data { data.real()? } else { data };
        data.validate(&pde)?;
        Ok(Setup { pde, data, preset })
    }

    pub fn problem(&self, u0: InitialDatum) -> dispersive::Result<Problem> {
        let s = self.setup()?;
        let preset =
            s.preset.ok_or_else(|| dispersive::Error::InvalidArgument("this command needs a preset".into()))?;
        u0.validate()?;
        Ok(Problem { preset, data: s.data, u0, n_max: self.n_max })
    }

    pub fn discretisation(&self, pde: &DispersionMonomial) -> Discretisation {
        let d = &self.discretisation;
        let dt = d.dt.unwrap_or(2.0 * PI / self.omega() / d.steps_per_period as f64);
        let mut disc = Discretisation::for_pde(pde, d.m, dt);
        if let Some(s) = d.scheme {
            disc.scheme = s;
        }
        disc
    }

    pub fn family(&self) -> Option<Family> {
        match self.preset()? {
            Preset::StokesDecoupled => Some(Family::Uncoupled),
            Preset::StokesCoupled { beta } => Some(Family::Coupled { beta }),
            _ => None,
        }
    }
}
