//! Exponential-polynomial determinants of the Stokes boundary families and their zeros.
//!
//! Uncoupled (u(0), u(1), u_x(1) given):  Δ(k) = (α²−α)·Σ_j α^j e^{−iα^j k}
//! Coupled   (u_x(0) = β u_x(1)):         Δ(k) = (α²−α)·Σ_j α^j (e^{iα^j k} + β e^{−iα^j k})
//!
//! Both satisfy Δ(αk) = α^{−1}Δ(k), so zero sets are invariant under rotation by α.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::model::alpha;
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Uncoupled,
    Coupled { beta: f64 },
}

/// Δ, Δ' and Σ|terms| (the scale against which |Δ| is judged).
pub fn eval_with_derivative(family: Family, k: C64) -> (C64, C64, f64) {
    let a = alpha(3);
    let pre = a * a - a;
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    let mut s = 0.0;
    let mut aj = C64::new(1.0, 0.0);
    for _ in 0..3 {
        let em = (-I * aj * k).exp();
        match family {
            Family::Uncoupled => {
                v += aj * em;
                d += aj * (-I * aj) * em;
                s += em.norm();
            }
            Family::Coupled { beta } => {
                let ep = (I * aj * k).exp();
                v += aj * (ep + beta * em);
                d += aj * (I * aj) * (ep - beta * em);
                s += ep.norm() + beta.abs() * em.norm();
            }
        }
        aj *= a;
    }
    (pre * v, pre * d, pre.norm() * s)
}

pub fn eval_delta(family: Family, k: C64) -> C64 {
    eval_with_derivative(family, k).0
}

pub fn eval_delta_prime(family: Family, k: C64) -> C64 {
    eval_with_derivative(family, k).1
}

/// The coupled determinant split into (β−1) and (β+1) parts with E = e^{√3k/2}.
pub fn coupled_delta_split(beta: f64, k: C64) -> C64 {
    let s3 = 3f64.sqrt();
    let e = (s3 * k / 2.0).exp();
    let ei = (-s3 * k / 2.0).exp();
    let h = k / 2.0;
    let odd = -k.sin() + (h + 2.0 * PI / 3.0).sin() * e + (h - 2.0 * PI / 3.0).sin() * ei;
    let even = k.cos() - (h + PI / 6.0).sin() * e - (-h + PI / 6.0).sin() * ei;
    (beta - 1.0) * s3 * odd - I * (beta + 1.0) * s3 * even
}

/// Axis-aligned rectangle [x0,x1]×[y0,y1] in ℂ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        assert!(x1 > x0 && y1 > y0, "degenerate rectangle");
        Self { x0, x1, y0, y1 }
    }

    pub fn centered(c: C64, half: f64) -> Self {
        Self::new(c.re - half, c.re + half, c.im - half, c.im + half)
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn grown(&self, d: f64) -> Self {
        Self::new(self.x0 - d, self.x1 + d, self.y0 - d, self.y1 + d)
    }

    fn size(&self) -> f64 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }

    fn corners(&self) -> [C64; 4] {
        [C64::new(self.x0, self.y0), C64::new(self.x1, self.y0), C64::new(self.x1, self.y1), C64::new(self.x0, self.y1)]
    }
}

/// Total change of arg f along a closed polygon, or None if f (nearly) vanishes on it.
/// Pieces are refined until the phase step is below π/4 and the logarithmic
/// derivative bound |f'/f|·h stays below 1.
fn phase_change<F>(f: &F, vertices: &[C64], h0: f64) -> Option<f64>
where
    F: Fn(C64) -> (C64, C64, f64),
{
    let mut total = 0.0;
    for i in 0..vertices.len() {
        let (a, b) = (vertices[i], vertices[(i + 1) % vertices.len()]);
        let pieces = ((b - a).norm() / h0).ceil().max(1.0) as usize;
        for p in 0..pieces {
            let za = a + (b - a) * (p as f64 / pieces as f64);
            let zb = a + (b - a) * ((p + 1) as f64 / pieces as f64);
            total += segment_phase(f, za, f(za), zb, f(zb), 0)?;
        }
    }
    Some(total)
}

fn segment_phase<F>(f: &F, a: C64, fa: (C64, C64, f64), b: C64, fb: (C64, C64, f64), depth: u32) -> Option<f64>
where
    F: Fn(C64) -> (C64, C64, f64),
{
    for (v, _, s) in [fa, fb] {
        if !(v.norm() > 1e-13 * s) {
            return None;
        }
    }
    let h = (b - a).norm();
    let d = (fb.0 / fa.0).arg();
    let lip = h * (fa.1.norm() / fa.0.norm()).max(fb.1.norm() / fb.0.norm());
    if d.abs() < PI / 4.0 && lip < 1.0 {
        return Some(d);
    }
    if depth > 48 || h < 1e-11 * (1.0 + a.norm()) {
        return None;
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    Some(segment_phase(f, a, fa, m, fm, depth + 1)? + segment_phase(f, m, fm, b, fb, depth + 1)?)
}

fn winding<F>(f: &F, vertices: &[C64], h0: f64) -> Option<i64>
where
    F: Fn(C64) -> (C64, C64, f64),
{
    let turns = phase_change(f, vertices, h0)? / (2.0 * PI);
    let r = turns.round();
    if (turns - r).abs() > 0.05 {
        return None;
    }
    Some(r as i64)
}

const SAMPLE_STEP: f64 = 0.05;
const DITHERS: usize = 5;

/// Winding count of Δ over the rectangle, dithering the boundary outwards when
/// it passes through (or too close to) a zero. Returns the rectangle actually used.
pub fn count_zeros_detailed(family: Family, rect: Rect) -> Result<(usize, Rect)> {
    let f = |k: C64| eval_with_derivative(family, k);
    count_with(&f, rect)
}

fn count_with<F>(f: &F, rect: Rect) -> Result<(usize, Rect)>
where
    F: Fn(C64) -> (C64, C64, f64),
{
    let h0 = SAMPLE_STEP.min(rect.size() / 8.0);
    for attempt in 0..=DITHERS {
        // golden-ratio spaced offsets, alternating sign
        let frac = ((attempt as f64) * 0.618_033_988_75).fract();
        let sign = if attempt % 2 == 0 { 1.0 } else { -1.0 };
        let d = if attempt == 0 { 0.0 } else { sign * 1e-3 * rect.size() * (0.5 + frac) };
        let r = rect.grown(d);
        if let Some(w) = winding(f, &r.corners(), h0) {
            if w < 0 {
                return Err(Error::NonConvergence(format!("negative winding {w} for an entire function")));
            }
            return Ok((w as usize, r));
        }
    }
    Err(Error::BoundaryZero)
}

pub fn count_zeros(family: Family, rect: Rect) -> Result<usize> {
    Ok(count_zeros_detailed(family, rect)?.0)
}

/// Winding count on a circle (64-gon) around c.
pub fn disk_count(family: Family, c: C64, radius: f64) -> Option<usize> {
    let f = |k: C64| eval_with_derivative(family, k);
    let poly: Vec<C64> = (0..64).map(|i| c + C64::from_polar(radius, 2.0 * PI * i as f64 / 64.0)).collect();
    winding(&f, &poly, radius / 4.0).map(|w| w.max(0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Zero {
    pub location: C64,
    pub multiplicity: usize,
    /// |Δ(z)| / Σ|terms|
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSet {
    pub zeros: Vec<Zero>,
    pub region: Rect,
}

impl ZeroSet {
    pub fn total_multiplicity(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity).sum()
    }
}

fn newton(family: Family, z0: C64, m: usize) -> Option<C64> {
    let mut z = z0;
    for _ in 0..100 {
        let (v, d, _) = eval_with_derivative(family, z);
        if v.norm() == 0.0 {
            return Some(z);
        }
        if d.norm() == 0.0 || !d.norm().is_finite() {
            return None;
        }
        let step = m as f64 * v / d;
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    None
}

const DISK_RADIUS: f64 = 1e-3;

/// Locates all zeros in `rect` by recursive subdivision and Newton refinement.
pub fn locate_zeros(family: Family, rect: Rect, seeds: Option<&[C64]>) -> Result<ZeroSet> {
    let (count, used) = count_zeros_detailed(family, rect)?;
    let mut zeros = Vec::new();
    let seeds = seeds.unwrap_or(&[]);
    locate_rec(family, used, count, seeds, 0, &mut zeros)?;
    zeros.sort_by(|a, b| a.location.norm().total_cmp(&b.location.norm()));
    Ok(ZeroSet { zeros, region: used })
}

fn locate_rec(
    family: Family,
    rect: Rect,
    count: usize,
    seeds: &[C64],
    depth: usize,
    out: &mut Vec<Zero>,
) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    let mut starts: Vec<C64> = seeds.iter().copied().filter(|s| rect.contains(*s)).collect();
    starts.push(rect.center());
    for s in starts {
        if let Some(z) = newton(family, s, count) {
            if rect.contains(z) && disk_count(family, z, DISK_RADIUS) == Some(count) {
                let (v, _, sc) = eval_with_derivative(family, z);
                out.push(Zero { location: z, multiplicity: count, residual: v.norm() / sc });
                return Ok(());
            }
        }
        // a zero of multiplicity `count` needs the modified step; otherwise try a plain one
        if count > 1 {
            if let Some(z) = newton(family, s, 1) {
                if rect.contains(z) && disk_count(family, z, DISK_RADIUS) == Some(count) {
                    let (v, _, sc) = eval_with_derivative(family, z);
                    out.push(Zero { location: z, multiplicity: count, residual: v.norm() / sc });
                    return Ok(());
                }
            }
        }
    }
    if depth >= 20 {
        return Err(Error::NonConvergence(format!("subdivision depth exceeded near {}", rect.center())));
    }
    for attempt in 0..DITHERS {
        let t = 0.5 + 0.013 * attempt as f64 * if attempt % 2 == 0 { 1.0 } else { -1.0 };
        let (ra, rb) = if rect.x1 - rect.x0 >= rect.y1 - rect.y0 {
            let xm = rect.x0 + t * (rect.x1 - rect.x0);
            (Rect::new(rect.x0, xm, rect.y0, rect.y1), Rect::new(xm, rect.x1, rect.y0, rect.y1))
        } else {
            let ym = rect.y0 + t * (rect.y1 - rect.y0);
            (Rect::new(rect.x0, rect.x1, rect.y0, ym), Rect::new(rect.x0, rect.x1, ym, rect.y1))
        };
        let f = |k: C64| eval_with_derivative(family, k);
        let h0 = SAMPLE_STEP.min(ra.size().min(rb.size()) / 8.0);
        let ca = winding(&f, &ra.corners(), h0);
        let cb = winding(&f, &rb.corners(), h0);
        if let (Some(ca), Some(cb)) = (ca, cb) {
            if ca >= 0 && cb >= 0 && (ca + cb) as usize == count {
                locate_rec(family, ra, ca as usize, seeds, depth + 1, out)?;
                return locate_rec(family, rb, cb as usize, seeds, depth + 1, out);
            }
        }
    }
    Err(Error::NonConvergence(format!("cannot split rectangle around {}", rect.center())))
}

/// Asymptotic zero predictions used as Newton seeds.
///
/// Coupled β > 0: ±(6|m|−1)π/3 + i·ln β (sign of m picks the side); β < 0 shifts by π.
/// Uncoupled: −i·(2/√3)(π/6 + mπ), m ≥ 1, on the negative imaginary axis.
/// Rotations by α give the remaining zeros in both cases.
pub fn predict_zero_seeds(family: Family, m_range: std::ops::RangeInclusive<i64>) -> Vec<C64> {
    let mut out = Vec::new();
    for m in m_range {
        if m == 0 {
            continue;
        }
        match family {
            Family::Coupled { beta } => {
                let mm = m.unsigned_abs() as f64;
                let re = if beta >= 0.0 { (6.0 * mm - 1.0) * PI / 3.0 } else { (6.0 * mm + 2.0) * PI / 3.0 };
                out.push(C64::new(m.signum() as f64 * re, beta.abs().ln()));
            }
            Family::Uncoupled => {
                if m > 0 {
                    out.push(C64::new(0.0, -(2.0 / 3f64.sqrt()) * (PI / 6.0 + m as f64 * PI)));
                }
            }
        }
    }
    out
}

/// sin(arg Δ) on an nx×ny grid; row j is y = y0 + j·dy, column i is x = x0 + i·dx.
pub fn export_heatmap(family: Family, rect: Rect, nx: usize, ny: usize) -> Vec<Vec<f64>> {
    assert!(nx >= 2 && ny >= 2, "resolution must be at least 2×2");
    let dx = (rect.x1 - rect.x0) / (nx - 1) as f64;
    let dy = (rect.y1 - rect.y0) / (ny - 1) as f64;
    (0..ny)
        .map(|j| {
            (0..nx)
                .map(|i| {
                    let k = C64::new(rect.x0 + i as f64 * dx, rect.y0 + j as f64 * dy);
                    eval_delta(family, k).arg().sin()
                })
                .collect()
        })
        .collect()
}

/// Rotates a zero into the sector arg ∈ (−π/3, π/3]; λ and αλ share λ³.
pub fn canonical_rotation(z: C64) -> C64 {
    let a = alpha(3);
    let mut w = z;
    for _ in 0..3 {
        let t = w.arg();
        if t > -PI / 3.0 && t <= PI / 3.0 + 1e-12 {
            return w;
        }
        w *= a;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_at_origin() {
        assert!(eval_delta(Family::Uncoupled, C64::new(0.0, 0.0)).norm() < 1e-15);
        assert!(eval_delta(Family::Coupled { beta: 7.0 }, C64::new(0.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn coupled_beta_one_is_imaginary_on_reals() {
        for x in [0.3, 1.7, 5.0, 12.2] {
            let v = eval_delta(Family::Coupled { beta: 1.0 }, C64::new(x, 0.0));
            assert!(v.re.abs() <= 1e-12 * v.norm().max(1.0));
            let s3 = 3f64.sqrt();
            let e = (s3 * x / 2.0).exp();
            let direct = -2.0 * s3 * (x.cos() - (PI / 6.0 + x / 2.0).sin() * e - (PI / 6.0 - x / 2.0).sin() / e);
            assert!((v.im - direct).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn rotation_identity() {
        let a = alpha(3);
        let k = C64::new(1.3, -0.4);
        for fam in [Family::Uncoupled, Family::Coupled { beta: 3.0 }] {
            let lhs = eval_delta(fam, a * k);
            assert!((lhs - eval_delta(fam, k) / a).norm() < 1e-13 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let h = 1e-6;
        for fam in [Family::Uncoupled, Family::Coupled { beta: -2.5 }] {
            let k = C64::new(0.7, 1.1);
            let fd = (eval_delta(fam, k + h) - eval_delta(fam, k - h)) / (2.0 * h);
            assert!((fd - eval_delta_prime(fam, k)).norm() < 1e-7 * fd.norm());
        }
    }

    #[test]
    fn origin_has_order_two_for_uncoupled() {
        let r = Rect::new(-0.5, 0.5, -0.5, 0.5);
        assert_eq!(count_zeros(Family::Uncoupled, r).unwrap(), 2);
    }

    #[test]
    fn empty_rect_counts_zero() {
        let r = Rect::centered(C64::new(1.0, 1.0), 0.1);
        assert_eq!(count_zeros(Family::Uncoupled, r).unwrap(), 0);
        let map = export_heatmap(Family::Uncoupled, r, 16, 16);
        for row in &map {
            assert!(row.iter().all(|v| (-1.0..=1.0).contains(v)));
            assert!(row.windows(2).all(|w| (w[0] - w[1]).abs() < 1.0));
        }
    }

    #[test]
    fn uncoupled_first_axis_zero() {
        let seed = predict_zero_seeds(Family::Uncoupled, 1..=1)[0];
        assert!(seed.norm().powi(3) >= 64.0);
        let z = newton(Family::Uncoupled, seed, 1).unwrap();
        assert!(z.re.abs() < 1e-12);
        let l3 = I * z * z * z;
        assert!(l3.re < -64.0);
    }

    #[test]
    fn zero_at_origin_located_with_multiplicity() {
        let zs = locate_zeros(Family::Uncoupled, Rect::new(-0.5, 0.5, -0.5, 0.5), None).unwrap();
        assert_eq!(zs.zeros.len(), 1);
        assert_eq!(zs.zeros[0].multiplicity, 2);
        assert!(zs.zeros[0].location.norm() < 1e-6);
    }

    #[test]
    fn beta_e_seed_is_close() {
        let fam = Family::Coupled { beta: std::f64::consts::E };
        let seed = predict_zero_seeds(fam, 5..=5)[0];
        let z = newton(fam, seed, 1).unwrap();
        assert!((z - seed).norm() < 0.5);
    }

    #[test]
    fn canonical_sector() {
        let a = alpha(3);
        let z = C64::new(4.0, 1.0);
        for w in [z, a * z, a * a * z] {
            assert!((canonical_rotation(w) - z).norm() < 1e-12);
        }
    }
}
