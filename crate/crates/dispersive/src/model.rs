//! The PDE symbol, boundary data and the per-mode spectral ingredients.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Ω(k) = a·k^N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionMonomial {
    a: C64,
    order: usize,
}

impl DispersionMonomial {
    pub fn new(a: C64, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidSymbol(format!("order {order} < 2")));
        }
        if a.norm() == 0.0 || !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::InvalidSymbol("coefficient must be finite and nonzero".into()));
        }
        // a small slack so that a = ±i passes despite rounding in arg
        if a.arg().abs() > PI / 2.0 + 1e-14 {
            return Err(Error::InvalidSymbol(format!("arg(a) = {} outside [-π/2, π/2]", a.arg())));
        }
        Ok(Self { a, order })
    }

    /// Linear Schrödinger, Ω = i k².
    pub fn schrodinger() -> Self {
        Self { a: I, order: 2 }
    }

    /// Heat, Ω = k².
    pub fn heat() -> Self {
        Self { a: C64::new(1.0, 0.0), order: 2 }
    }

    /// Stokes, Ω = −i k³ (u_t + u_xxx = 0).
    pub fn stokes() -> Self {
        Self { a: -I, order: 3 }
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn omega(&self, k: C64) -> C64 {
        self.a * k.powu(self.order as u32)
    }
}

/// c_j(k) = coeff_j · k^{deg_j}.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPolynomials {
    coeffs: Vec<C64>,
}

impl SymbolPolynomials {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, j: usize) -> C64 {
        self.coeffs[j]
    }

    pub fn degree(&self, j: usize) -> usize {
        self.coeffs.len() - 1 - j
    }

    pub fn eval(&self, j: usize, k: C64) -> C64 {
        self.coeffs[j] * k.powu(self.degree(j) as u32)
    }
}

pub fn build_symbol_polynomials(pde: &DispersionMonomial) -> SymbolPolynomials {
    let n = pde.order;
    let coeffs = (0..n).map(|j| I * pde.a * (-I).powu(j as u32)).collect();
    SymbolPolynomials { coeffs }
}

/// The N roots of i·n·ω + Ω(k) = 0 for n ≠ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub n: i64,
    pub roots: Vec<C64>,
}

/// Roots are α^r·κ₀, α = e^{2πi/N}, κ₀ the N-th root of −inω/a with arg in (−π/N, π/N].
pub fn denominator_roots(pde: &DispersionMonomial, omega: f64, n: i64) -> ModeSpectrum {
    assert!(n != 0, "denominator_roots needs n ≠ 0");
    let big_n = pde.order as f64;
    let target = -I * (n as f64) * omega / pde.a;
    let r = target.norm().powf(1.0 / big_n);
    let mut arg = target.arg();
    // atan2 yields −π for a negative real with −0.0 imaginary part
    if arg <= -PI {
        arg += 2.0 * PI;
    }
    let principal = C64::from_polar(r, arg / big_n);
    let roots = (0..pde.order)
        .map(|j| {
            let rot = C64::from_polar(1.0, 2.0 * PI * j as f64 / big_n);
            let z = rot * principal;
            // snap rounding noise on exactly real/imaginary roots
            C64::new(snap(z.re, r), snap(z.im, r))
        })
        .collect();
    ModeSpectrum { n, roots }
}

fn snap(v: f64, scale: f64) -> f64 {
    if v.abs() <= 4.0 * f64::EPSILON * scale {
        0.0
    } else {
        v
    }
}

/// The primitive N-th root of unity e^{2πi/N}.
pub fn alpha(order: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI / order as f64)
}

/// Boundary point: left (x=0) or right (x=1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn x(self) -> f64 {
        self.index() as f64
    }
}

/// ∂_x^order u at a side. Ordering: left before right, then by order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundaryValue {
    pub side: Side,
    pub order: usize,
}

impl BoundaryValue {
    pub fn new(side: Side, order: usize) -> Self {
        Self { side, order }
    }

    /// Position in the canonical vector (G⁽⁰⁾,…,G⁽ᴺ⁻¹⁾,H⁽⁰⁾,…,H⁽ᴺ⁻¹⁾).
    pub fn slot(self, big_n: usize) -> usize {
        self.side.index() * big_n + self.order
    }

    pub fn from_slot(slot: usize, big_n: usize) -> Self {
        let side = if slot < big_n { Side::Left } else { Side::Right };
        Self { side, order: slot % big_n }
    }

    /// G^{(j)} for the left side, H^{(j)} for the right.
    pub fn label(self) -> String {
        match self.side {
            Side::Left => format!("G{}", self.order),
            Side::Right => format!("H{}", self.order),
        }
    }
}

/// A finitely supported Fourier series n ↦ c_n in e^{inωt}.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries(pub BTreeMap<i64, C64>);

impl FourierSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(n: i64, c: C64) -> Self {
        Self(BTreeMap::from([(n, c)]))
    }

    /// sin(nωt) = (e^{inωt} − e^{−inωt})/(2i)
    pub fn sine(n: i64, amp: f64) -> Self {
        Self(BTreeMap::from([(n, C64::new(0.0, -amp / 2.0)), (-n, C64::new(0.0, amp / 2.0))]))
    }

    pub fn cosine(n: i64, amp: f64) -> Self {
        Self(BTreeMap::from([(n, C64::new(amp / 2.0, 0.0)), (-n, C64::new(amp / 2.0, 0.0))]))
    }

    pub fn get(&self, n: i64) -> C64 {
        self.0.get(&n).copied().unwrap_or_default()
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.0.iter().filter(|(_, c)| c.norm() > 0.0).map(|(n, _)| *n)
    }

    pub fn eval(&self, omega: f64, t: f64) -> C64 {
        self.0.iter().map(|(&n, &c)| c * C64::from_polar(1.0, n as f64 * omega * t)).sum()
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self(self.0.iter().map(|(&n, &c)| (n, c * s)).collect())
    }

    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        self.0.iter().all(|(&n, &c)| (self.get(-n) - c.conj()).norm() <= tol * c.norm().max(1.0))
    }
}

/// Σ coeff·(boundary value) = series, mode by mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub terms: Vec<(BoundaryValue, C64)>,
    pub series: FourierSeries,
}

impl BoundaryCondition {
    pub fn prescribe(side: Side, order: usize, series: FourierSeries) -> Self {
        Self { terms: vec![(BoundaryValue::new(side, order), C64::new(1.0, 0.0))], series }
    }

    /// ∂^order u(0) − β ∂^order u(1) = 0
    pub fn coupling(order: usize, beta: f64) -> Self {
        Self {
            terms: vec![
                (BoundaryValue::new(Side::Left, order), C64::new(1.0, 0.0)),
                (BoundaryValue::new(Side::Right, order), C64::new(-beta, 0.0)),
            ],
            series: FourierSeries::zero(),
        }
    }

    /// Value of the functional applied to a canonical boundary vector.
    pub fn apply(&self, values: &[C64], big_n: usize) -> C64 {
        self.terms.iter().map(|(bv, c)| c * values[bv.slot(big_n)]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierBoundaryData {
    pub omega: f64,
    pub conditions: Vec<BoundaryCondition>,
    /// the time-domain data is declared real, so series must be conjugate-symmetric
    pub real_valued: bool,
}

impl FourierBoundaryData {
    pub fn new(omega: f64, conditions: Vec<BoundaryCondition>) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidArgument(format!("omega = {omega} must be positive")));
        }
        Ok(Self { omega, conditions, real_valued: false })
    }

    pub fn real(mut self) -> Result<Self> {
        for c in &self.conditions {
            if !c.series.is_conjugate_symmetric(1e-12) {
                return Err(Error::MalformedBoundaryConditions(
                    "real-valued data needs conjugate-symmetric coefficient tables".into(),
                ));
            }
        }
        self.real_valued = true;
        Ok(self)
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn validate(&self, pde: &DispersionMonomial) -> Result<()> {
        let n = pde.order();
        if self.conditions.len() != n {
            return Err(Error::MalformedBoundaryConditions(format!(
                "{} conditions prescribed, the order-{n} problem needs {n}",
                self.conditions.len()
            )));
        }
        for c in &self.conditions {
            if c.terms.is_empty() {
                return Err(Error::MalformedBoundaryConditions("empty condition".into()));
            }
            if let Some((bv, _)) = c.terms.iter().find(|(bv, _)| bv.order >= n) {
                return Err(Error::MalformedBoundaryConditions(format!("derivative order {} not below {n}", bv.order)));
            }
        }
        Ok(())
    }

    /// All modes carrying nonzero prescribed data.
    pub fn support(&self) -> Vec<i64> {
        let mut s: Vec<i64> = self.conditions.iter().flat_map(|c| c.series.support()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Prescribed right-hand sides at mode n, in condition order.
    pub fn rhs(&self, n: i64) -> Vec<C64> {
        self.conditions.iter().map(|c| c.series.get(n)).collect()
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        for c in &mut out.conditions {
            c.series = c.series.scaled(s);
        }
        out
    }

    /// Adds the series of two data sets with identical condition functionals.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.conditions.len() != other.conditions.len() || self.omega != other.omega {
            return Err(Error::InvalidArgument("incompatible boundary data".into()));
        }
        let mut out = self.clone();
        for (c, o) in out.conditions.iter_mut().zip(&other.conditions) {
            if c.terms != o.terms {
                return Err(Error::InvalidArgument("condition functionals differ".into()));
            }
            for (&n, &v) in &o.series.0 {
                *c.series.0.entry(n).or_default() += v;
            }
        }
        out.real_valued = self.real_valued && other.real_valued;
        Ok(out)
    }
}

/// The boundary families exercised by the classifier and the presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    /// LS, u(0,t)=g₀, u(1,t)=h₀
    LsDirichlet,
    /// heat, u_x(0,t)=g₁, u_x(1,t)=h₁
    HeatNeumann,
    /// Stokes, u(0,t)=g₀, u(1,t)=0, u_x(1,t)=0
    StokesDecoupled,
    /// Stokes, u(0,t)=g₀, u(1,t)=0, u_x(0,t)=β·u_x(1,t)
    StokesCoupled { beta: f64 },
}

impl Preset {
    pub fn pde(&self) -> DispersionMonomial {
        match self {
            Preset::LsDirichlet => DispersionMonomial::schrodinger(),
            Preset::HeatNeumann => DispersionMonomial::heat(),
            Preset::StokesDecoupled | Preset::StokesCoupled { .. } => DispersionMonomial::stokes(),
        }
    }

    /// Boundary data from the two series g (left) and h (right) the preset lets vary.
    pub fn data(&self, omega: f64, g: FourierSeries, h: FourierSeries) -> Result<FourierBoundaryData> {
        use BoundaryCondition as B;
        let zero = FourierSeries::zero;
        let conds = match *self {
            Preset::LsDirichlet => vec![B::prescribe(Side::Left, 0, g), B::prescribe(Side::Right, 0, h)],
            Preset::HeatNeumann => vec![B::prescribe(Side::Left, 1, g), B::prescribe(Side::Right, 1, h)],
            Preset::StokesDecoupled => vec![
                B::prescribe(Side::Left, 0, g),
                B::prescribe(Side::Right, 0, h),
                B::prescribe(Side::Right, 1, zero()),
            ],
            Preset::StokesCoupled { beta } => {
                vec![B::prescribe(Side::Left, 0, g), B::prescribe(Side::Right, 0, h), B::coupling(1, beta)]
            }
        };
        FourierBoundaryData::new(omega, conds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() <= 1e-14 * b.norm().max(1.0)
    }

    #[test]
    fn preset_polynomials() {
        let ls = build_symbol_polynomials(&DispersionMonomial::schrodinger());
        assert!(close(ls.coeff(0), C64::new(-1.0, 0.0)) && ls.degree(0) == 1);
        assert!(close(ls.coeff(1), I) && ls.degree(1) == 0);

        let heat = build_symbol_polynomials(&DispersionMonomial::heat());
        assert!(close(heat.coeff(0), I));
        assert!(close(heat.coeff(1), C64::new(1.0, 0.0)));

        let st = build_symbol_polynomials(&DispersionMonomial::stokes());
        assert!(close(st.coeff(0), C64::new(1.0, 0.0)) && st.degree(0) == 2);
        assert!(close(st.coeff(1), -I) && st.degree(1) == 1);
        assert!(close(st.coeff(2), C64::new(-1.0, 0.0)));
    }

    #[test]
    fn rejects_bad_symbols() {
        assert!(DispersionMonomial::new(C64::new(-1.0, 0.0), 2).is_err());
        assert!(DispersionMonomial::new(I, 1).is_err());
        assert!(DispersionMonomial::new(-I, 3).is_ok());
    }

    #[test]
    fn ls_roots() {
        let w = 2.5;
        let s = denominator_roots(&DispersionMonomial::schrodinger(), w, 1);
        let mut im: Vec<f64> = s.roots.iter().map(|z| z.im).collect();
        im.sort_by(f64::total_cmp);
        assert!((im[0] + w.sqrt()).abs() < 1e-14 && (im[1] - w.sqrt()).abs() < 1e-14);
        assert!(s.roots.iter().all(|z| z.re == 0.0));
    }

    #[test]
    fn heat_roots_negative_mode() {
        let w = 3.0;
        let s = denominator_roots(&DispersionMonomial::heat(), w, -1);
        let r = (I * w).sqrt();
        assert!(s.roots.iter().any(|z| close(*z, r)) && s.roots.iter().any(|z| close(*z, -r)));
    }

    #[test]
    fn stokes_real_root() {
        let s = denominator_roots(&DispersionMonomial::stokes(), 1.0, 8);
        let a = alpha(3);
        assert!(close(s.roots[0], C64::new(2.0, 0.0)));
        assert!(close(s.roots[1], a * 2.0) && close(s.roots[2], a * a * 2.0));
        let neg = denominator_roots(&DispersionMonomial::stokes(), 1.0, -8);
        assert!(neg.roots.iter().any(|z| close(*z, C64::new(-2.0, 0.0))));
    }

    #[test]
    fn sine_series_eval() {
        let s = FourierSeries::sine(1, 1.0);
        for &t in &[0.1, 0.7, 2.3] {
            let v = s.eval(3.0, t);
            assert!((v.re - (3.0 * t).sin()).abs() < 1e-15 && v.im.abs() < 1e-15);
        }
        assert!(s.is_conjugate_symmetric(0.0));
    }

    #[test]
    fn validate_counts_conditions() {
        let pde = DispersionMonomial::stokes();
        let d = Preset::LsDirichlet.data(1.0, FourierSeries::zero(), FourierSeries::zero()).unwrap();
        assert!(matches!(d.validate(&pde), Err(Error::MalformedBoundaryConditions(_))));
        let d = Preset::StokesCoupled { beta: 2.0 }.data(1.0, FourierSeries::zero(), FourierSeries::zero()).unwrap();
        assert!(d.validate(&pde).is_ok());
    }
}
