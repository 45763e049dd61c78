//! Direct numerical integration of `((ℏ∂)² − Q(z,ℏ))ψ = 0` at a fixed small
//! ℏ, used as an independent check on the formal WKB side.

use num::complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algfun::{AlgError, SpectralData};
use crate::exact::RationalFunction;
use crate::numeric::ode::{integrate, OdeError};
use crate::wkb::{voros_symbol, BranchTracker, Cycle, WkbError, WkbSeries};

const RTOL: f64 = 1e-12;
/// Decay exponent `|∫√Q₀|/|ℏ|` reached at the start of a framing integration.
pub const DEPTH_EXPONENT: f64 = 36.0;
pub const FRAMING_ANGLE_TOL: f64 = 1e-6;
const PIECES: usize = 64;

#[derive(Debug, Error)]
pub enum OdeCheckError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error(transparent)]
    Wkb(#[from] WkbError),
    #[error("path geometry: {0}")]
    Geometry(String),
    #[error("framing in sector {sector} is unstable under deepening (angle {angle:e})")]
    Unstable { sector: usize, angle: f64 },
    #[error("framings {0} and {1} are linearly dependent")]
    Degenerate(usize, usize),
    #[error("{0}")]
    Unsupported(String),
}

/// Numerical `Q(z, ℏ) = Σ ℏᵏ Q_k(z)`.
#[derive(Clone, Debug)]
pub struct Potential {
    q: Vec<crate::exact::NumericRf>,
    hbar: C64,
    poles: Vec<C64>,
}

impl Potential {
    pub fn new(s: &SpectralData, hbar: C64) -> Result<Self, OdeCheckError> {
        let q = s.potential()?;
        let poles = q.iter().flat_map(|r| r.den().roots().into_iter().map(|(p, _)| p)).collect();
        Ok(Potential { q: q.iter().map(RationalFunction::numeric).collect(), hbar, poles })
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.q.iter().rev().fold(C64::default(), |acc, qk| acc * self.hbar + qk.eval(z))
    }

    fn check_path(&self, path: &[C64]) -> Result<(), OdeCheckError> {
        for w in path.windows(2) {
            for &p in &self.poles {
                let d = distance_to_segment(p, w[0], w[1]);
                if d < 1e-6 * p.norm().max(1.0) {
                    return Err(OdeCheckError::Geometry(format!("path passes through the pole {p}")));
                }
            }
        }
        Ok(())
    }
}

fn distance_to_segment(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    if d.norm() == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a) * d.conj()).re / d.norm_sqr();
    (p - (a + d * t.clamp(0.0, 1.0))).norm()
}

/// Transfer matrix of `Y = (ψ, ℏψ′)` along a path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransferMatrix {
    pub m: [[C64; 2]; 2],
}

impl TransferMatrix {
    pub fn identity() -> Self {
        let (o, z) = (C64::new(1.0, 0.0), C64::default());
        TransferMatrix { m: [[o, z], [z, o]] }
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }

    /// Transfer along `self` then `next`.
    pub fn then(&self, next: &TransferMatrix) -> TransferMatrix {
        let (a, b) = (&next.m, &self.m);
        let mut m = [[C64::default(); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TransferMatrix { m }
    }

    pub fn max_diff(&self, o: &TransferMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - o.m[i][j]).norm());
            }
        }
        d
    }
}

/// Integrate the system along the straight segment `[a, b]`, state `y` holding
/// `k` column vectors.
fn segment(pot: &Potential, a: C64, b: C64, y: &[C64]) -> Result<Vec<C64>, OdeCheckError> {
    let d = b - a;
    let inv = d / pot.hbar;
    let f = |t: f64, y: &[C64]| {
        let q = pot.eval(a + d * t);
        let mut out = Vec::with_capacity(y.len());
        for c in y.chunks(2) {
            out.push(inv * c[1]);
            out.push(inv * q * c[0]);
        }
        Some(out)
    };
    let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    Ok(integrate(f, 0.0, 1.0, y, RTOL, 1e-14 * scale)?)
}

/// Split a polyline so each piece is short against the local frequency.
fn pieces(path: &[C64]) -> Vec<(C64, C64)> {
    let mut out = Vec::new();
    for w in path.windows(2) {
        for k in 0..PIECES {
            let a = w[0] + (w[1] - w[0]) * (k as f64 / PIECES as f64);
            let b = w[0] + (w[1] - w[0]) * ((k + 1) as f64 / PIECES as f64);
            out.push((a, b));
        }
    }
    out
}

pub fn integrate_schrodinger(s: &SpectralData, path: &[C64], hbar: C64) -> Result<TransferMatrix, OdeCheckError> {
    if !s.is_schrodinger() {
        return Err(OdeCheckError::Unsupported("the ODE check needs a Schrödinger-form input".into()));
    }
    let pot = Potential::new(s, hbar)?;
    pot.check_path(path)?;
    let o = C64::new(1.0, 0.0);
    let mut y = vec![o, C64::default(), C64::default(), o];
    for w in path.windows(2) {
        y = segment(&pot, w[0], w[1], &y)?;
    }
    Ok(TransferMatrix { m: [[y[0], y[2]], [y[1], y[3]]] })
}

/// Line of recessive solutions at a pole, transported to a common point.
#[derive(Clone, Debug, Serialize)]
pub struct Framing {
    pub pole: String,
    pub sector: usize,
    pub angle: f64,
    pub depth: f64,
    pub at: C64,
    pub direction: [C64; 2],
}

fn normalize(v: [C64; 2]) -> [C64; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

/// Angle between the complex lines spanned by `v` and `w`.
pub fn line_angle(v: [C64; 2], w: [C64; 2]) -> f64 {
    let (v, w) = (normalize(v), normalize(w));
    det(v, w).norm().min(1.0).asin()
}

pub fn det(v: [C64; 2], w: [C64; 2]) -> C64 {
    v[0] * w[1] - v[1] * w[0]
}

/// Leading data `Q₀ ~ a z^d` at ∞.
fn infinity_data(s: &SpectralData) -> Result<(C64, i64), OdeCheckError> {
    let q0 = s.potential()?.remove(0);
    let d = q0.degree_at_infinity();
    if d < 1 {
        return Err(OdeCheckError::Unsupported(format!("∞ has pole order {} < 3", d + 4)));
    }
    Ok((q0.lead_at_infinity().to_c64(), d))
}

/// Number of anti-Stokes sectors at ∞.
pub fn sectors_at_infinity(s: &SpectralData) -> Result<usize, OdeCheckError> {
    Ok(infinity_data(s)?.1 as usize + 2)
}

/// Central direction of the `k`-th sector at ∞.
pub fn sector_angle(s: &SpectralData, hbar: C64, k: usize) -> Result<f64, OdeCheckError> {
    let (a, d) = infinity_data(s)?;
    Ok(2.0 / (d + 2) as f64 * (hbar.arg() - a.sqrt().arg() + k as f64 * std::f64::consts::PI))
}

/// Which solution to start from far out in the sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    Recessive,
    Dominant,
}

fn framing_from(pot: &Potential, a: C64, d: i64, theta: f64, k: usize, radius: f64, to: C64, start: Start) -> Result<[C64; 2], OdeCheckError> {
    let far = C64::from_polar(radius, theta);
    // WKB germ: ℏψ′/ψ ≈ σ√Q − ℏQ′/(4Q)
    let guess = a.sqrt() * C64::from_polar(radius.powf(d as f64 / 2.0), d as f64 * theta / 2.0);
    let mut root = pot.eval(far).sqrt();
    if (root - guess).norm() > (root + guess).norm() {
        root = -root;
    }
    let mut sigma = if k % 2 == 0 { -1.0 } else { 1.0 };
    if start == Start::Dominant {
        sigma = -sigma;
    }
    let h = 1e-6 * radius;
    let dq = (pot.eval(far + h) - pot.eval(far - h)) / (2.0 * h);
    let slope = sigma * root - pot.hbar * dq / (4.0 * pot.eval(far));
    let path = [far, to];
    pot.check_path(&path)?;
    let mut y = vec![C64::new(1.0, 0.0), slope];
    for (p, q) in pieces(&path) {
        y = segment(pot, p, q, &y)?;
        let n = normalize([y[0], y[1]]);
        y = vec![n[0], n[1]];
    }
    Ok([y[0], y[1]])
}

fn framing_radius(s: &SpectralData, a: C64, d: i64, hbar: C64, depth: f64) -> f64 {
    let crit = s
        .turning_point_locations()
        .into_iter()
        .chain(s.finite_singular_points().iter().copied())
        .map(|z| z.norm())
        .fold(1.0, f64::max);
    // (2/(d+2))√|a| R^{(d+2)/2} / |ℏ| = depth
    let e = (d + 2) as f64 / 2.0;
    let r = (depth * hbar.norm() * e / a.norm().sqrt()).powf(1.0 / e);
    r.max(1.5 * crit + 0.5)
}

/// Framing at ∞ from the `k`-th anti-Stokes sector, transported to `to`.
pub fn framing_at_infinity(s: &SpectralData, k: usize, hbar: C64, to: C64) -> Result<Framing, OdeCheckError> {
    framing_with_start(s, k, hbar, to, Start::Recessive)
}

pub fn framing_with_start(s: &SpectralData, k: usize, hbar: C64, to: C64, start: Start) -> Result<Framing, OdeCheckError> {
    if !s.is_schrodinger() {
        return Err(OdeCheckError::Unsupported("the ODE check needs a Schrödinger-form input".into()));
    }
    let (a, d) = infinity_data(s)?;
    let theta = sector_angle(s, hbar, k)?;
    let pot = Potential::new(s, hbar)?;
    let r = framing_radius(s, a, d, hbar, DEPTH_EXPONENT);
    let v = framing_from(&pot, a, d, theta, k, r, to, start)?;
    let r2 = framing_radius(s, a, d, hbar, DEPTH_EXPONENT * 1.5);
    let w = framing_from(&pot, a, d, theta, k, r2, to, start)?;
    let angle = line_angle(v, w);
    if start == Start::Recessive && angle > FRAMING_ANGLE_TOL {
        return Err(OdeCheckError::Unstable { sector: k, angle });
    }
    Ok(Framing { pole: "infinity".into(), sector: k, angle: theta, depth: r, at: to, direction: normalize(w) })
}

/// `det(v₁v₂)det(v₃v₄) / (det(v₂v₃)det(v₁v₄))`.
pub fn fg_edge_coordinate(v: &[[C64; 2]; 4]) -> Result<C64, OdeCheckError> {
    let scale: Vec<f64> = v.iter().map(|x| (x[0].norm_sqr() + x[1].norm_sqr()).sqrt()).collect();
    let d = |i: usize, j: usize| -> Result<C64, OdeCheckError> {
        let x = det(v[i], v[j]);
        if x.norm() <= 1e-12 * scale[i] * scale[j] {
            return Err(OdeCheckError::Degenerate(i + 1, j + 1));
        }
        Ok(x)
    };
    Ok(d(0, 1)? * d(2, 3)? / (d(1, 2)? * d(0, 3)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct FgRow {
    pub hbar: C64,
    pub cross_ratio: C64,
    /// Fock–Goncharov coordinate, `−cross_ratio`.
    pub x_fg: C64,
    pub log_minus_x: C64,
    pub voros: C64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FgReport {
    pub order: usize,
    pub sectors: [usize; 4],
    pub rows: Vec<FgRow>,
    pub ratios: Vec<f64>,
    pub expected_ratio: f64,
    pub monotone: bool,
    pub in_band: bool,
}

impl FgReport {
    pub fn pass(&self) -> bool {
        self.monotone && self.in_band
    }
}

fn wrap_im(z: C64) -> C64 {
    let tau = 2.0 * std::f64::consts::PI;
    C64::new(z.re, z.im - tau * (z.im / tau).round())
}

/// Truncated Voros sum `Σ_{m=−1}^{N} ℏᵐ V_m`.
pub fn truncated_voros(terms: &[(i64, C64)], n: usize, hbar: C64) -> C64 {
    terms.iter().filter(|(m, _)| *m <= n as i64).map(|(m, v)| hbar.powi(*m as i32) * v).sum()
}

/// Compare `log(−X_FG)` from ODE framings in the sectors `quad` (ccw) at ∞
/// with the truncated Voros sum of `cycle`, for ℏ halving along `hbars`.
pub fn compare_voros_fg(s: &SpectralData, quad: [usize; 4], cycle: &Cycle, n: usize, hbars: &[C64], at: C64) -> Result<FgReport, OdeCheckError> {
    let series = WkbSeries::from_spectral(s, n)?;
    let tracker = BranchTracker::new(&s.potential()?[0]);
    let terms = voros_symbol(&series, &tracker, cycle)?;
    let rows: Vec<FgRow> = hbars
        .par_iter()
        .map(|&h| -> Result<FgRow, OdeCheckError> {
            let sh = s.with_hbar(h)?;
            let mut v = [[C64::default(); 2]; 4];
            for (slot, &k) in v.iter_mut().zip(quad.iter()) {
                *slot = framing_at_infinity(&sh, k, h, at)?.direction;
            }
            let cross = fg_edge_coordinate(&v)?;
            let x = -cross;
            let voros = truncated_voros(&terms, n, h);
            let diff = wrap_im((-x).ln() - voros);
            Ok(FgRow { hbar: h, cross_ratio: cross, x_fg: x, log_minus_x: voros + diff, voros, residual: diff.norm() })
        })
        .collect::<Result<_, _>>()?;
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[0].residual / w[1].residual).collect();
    let expected = 2f64.powi(n as i32 + 1);
    let monotone = rows.windows(2).all(|w| w[1].residual < w[0].residual);
    let in_band = !ratios.is_empty() && ratios.iter().all(|r| *r >= expected / 4.0 && *r <= expected * 4.0);
    Ok(FgReport { order: n, sectors: quad, rows, ratios, expected_ratio: expected, monotone, in_band })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algfun::{airy, rf_ints, weber};
    use crate::wkb::{stadium, CycleKind};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn constant(q: i64, hbar: C64) -> SpectralData {
        SpectralData::schrodinger(vec![rf_ints(&[q], &[1])], hbar).unwrap()
    }

    #[test]
    fn free_and_constant_potentials() {
        let h = c(0.5, 0.0);
        let path = [c(0.0, 0.0), c(1.0, 0.5), c(2.0, -0.3)];
        let disp = path[2] - path[0];
        // Q₀ = 0 is rejected upstream, so use a tiny constant for the free case
        let s = SpectralData::schrodinger(vec![rf_ints(&[1], &[1e12 as i64])], h).unwrap();
        let t = integrate_schrodinger(&s, &path, h).unwrap();
        assert!((t.m[0][1] - disp / h).norm() < 1e-9);
        assert!((t.m[0][0] - 1.0).norm() < 1e-9);
        let s = constant(1, h);
        let t = integrate_schrodinger(&s, &[c(0.0, 0.0), c(1.3, 0.0)], h).unwrap();
        let x: f64 = 1.3 / 0.5;
        assert!((t.m[0][0] - x.cosh()).norm() < 1e-9 * x.cosh());
        assert!((t.m[0][1] - x.sinh()).norm() < 1e-9 * x.cosh());
        assert!((t.m[1][0] - x.sinh()).norm() < 1e-9 * x.cosh());
    }

    #[test]
    fn wronskian_and_composition() {
        let h = c(0.3, 0.1);
        let s = weber(h);
        let p1 = [c(-1.5, 0.2), c(0.0, 1.0), c(0.7, -0.4)];
        let p2 = [c(0.7, -0.4), c(1.8, 0.3)];
        let a = integrate_schrodinger(&s, &p1, h).unwrap();
        let b = integrate_schrodinger(&s, &p2, h).unwrap();
        let whole = integrate_schrodinger(&s, &[p1[0], p1[1], p1[2], p2[1]], h).unwrap();
        assert!((a.det() - 1.0).norm() < 1e-8);
        assert!((whole.det() - 1.0).norm() < 1e-8);
        let comp = a.then(&b);
        let scale = whole.m.iter().flatten().map(|x| x.norm()).fold(1.0, f64::max);
        assert!(comp.max_diff(&whole) < 1e-8 * scale);
    }

    #[test]
    fn cross_ratio_identities() {
        let o = c(1.0, 0.0);
        let z = C64::default();
        let v = [[o, z], [z, o], [o, o], [o, -o]];
        assert!((fg_edge_coordinate(&v).unwrap() - c(-2.0, 0.0)).norm() < 1e-14);
        let rot = [v[1], v[2], v[3], v[0]];
        let x = fg_edge_coordinate(&v).unwrap();
        assert!((fg_edge_coordinate(&rot).unwrap() * x - 1.0).norm() < 1e-12);
        let mut scaled = v;
        scaled[2] = [v[2][0] * c(0.3, 2.0), v[2][1] * c(0.3, 2.0)];
        assert!((fg_edge_coordinate(&scaled).unwrap() - x).norm() < 1e-12);
        assert!(matches!(fg_edge_coordinate(&[v[0], v[0], v[2], v[3]]), Err(OdeCheckError::Degenerate(1, 2))));
    }

    #[test]
    fn airy_framing_is_the_decaying_solution() {
        let h = c(0.2, 0.0);
        let s = airy(h);
        let z0 = c(2.0, 0.0);
        let f = framing_at_infinity(&s, 0, h, z0).unwrap();
        assert!(f.angle.abs() < 1e-12);
        // ψ ≈ z^{−1/4}e^{−(2/3)z^{3/2}/ℏ}: ℏψ′/ψ ≈ −√z − ℏ/(4z)
        let slope = f.direction[1] / f.direction[0];
        let wkb = -z0.sqrt() - h / (4.0 * z0);
        assert!((slope - wkb).norm() < 0.02, "{slope} vs {wkb}");
        // a dominant start, not deep enough for roundoff to take over, gives a different line
        let pot = Potential::new(&s, h).unwrap();
        let g = framing_from(&pot, c(1.0, 0.0), 1, 0.0, 0, 2.5, z0, Start::Dominant).unwrap();
        assert!(line_angle(f.direction, g) > 0.1);
        // independent of the depth
        let a = framing_from(&pot, c(1.0, 0.0), 1, 0.0, 0, 8.0, z0, Start::Recessive).unwrap();
        assert!(line_angle(a, f.direction) < FRAMING_ANGLE_TOL);
    }

    fn edge_cycle(s: &SpectralData) -> Cycle {
        let tracker = BranchTracker::new(&s.potential().unwrap()[0]);
        let pts = stadium(c(-1.0, 0.0), c(1.0, 0.0), 0.5, 64);
        let root = tracker.q0(pts[0]).sqrt();
        Cycle::new("edge", pts, root, CycleKind::VorosEdge)
    }

    #[test]
    fn fg_coordinate_is_independent_of_the_transport_point() {
        let h = c(0.2, 0.0);
        let s = weber(h);
        let quad = [1, 2, 3, 0];
        let x_at = |z: C64| {
            let mut v = [[C64::default(); 2]; 4];
            for (slot, &k) in v.iter_mut().zip(quad.iter()) {
                *slot = framing_at_infinity(&s, k, h, z).unwrap().direction;
            }
            fg_edge_coordinate(&v).unwrap()
        };
        let (a, b) = (x_at(C64::default()), x_at(c(0.4, -0.7)));
        assert!((a - b).norm() < 1e-7 * a.norm(), "{a} {b}");
    }

    #[test]
    fn voros_leading_term_scales_with_the_potential() {
        let h = c(1.0, 0.0);
        let s1 = weber(h);
        let s4 = SpectralData::schrodinger(vec![rf_ints(&[-4, 0, 4], &[1])], h).unwrap();
        let lead = |s: &SpectralData| {
            let series = WkbSeries::from_spectral(s, 0).unwrap();
            let tracker = BranchTracker::new(&s.potential().unwrap()[0]);
            voros_symbol(&series, &tracker, &edge_cycle(s)).unwrap()[0].1
        };
        assert!((lead(&s4) - 2.0 * lead(&s1)).norm() < 1e-9);
    }

    fn halving(h0: f64) -> Vec<C64> {
        vec![c(h0, 0.0), c(h0 / 2.0, 0.0), c(h0 / 4.0, 0.0)]
    }

    #[test]
    fn harmonic_cross_ratio_is_the_voros_exponential() {
        let s = weber(c(1.0, 0.0));
        let r = compare_voros_fg(&s, [1, 2, 3, 0], &edge_cycle(&s), 3, &halving(0.3), C64::default()).unwrap();
        for row in &r.rows {
            assert!(row.residual < 1e-9, "{row:?}");
            assert!((row.cross_ratio - row.voros.exp()).norm() < 1e-9);
        }
    }

    #[test]
    fn first_order_correction_is_seen_by_the_band() {
        // z² − 1 + ℏz is a shifted oscillator with V = iπ/ℏ + iπℏ/4
        let s = SpectralData::schrodinger(vec![rf_ints(&[-1, 0, 1], &[1]), rf_ints(&[0, 1], &[1])], c(1.0, 0.0)).unwrap();
        let cyc = edge_cycle(&s);
        let r0 = compare_voros_fg(&s, [1, 2, 3, 0], &cyc, 0, &halving(0.3), C64::default()).unwrap();
        assert!(r0.pass(), "{r0:?}");
        for (row, ratio) in r0.rows.iter().zip(&r0.ratios) {
            assert!((row.residual - std::f64::consts::PI * row.hbar.re / 4.0).abs() < 1e-9);
            assert!((ratio - 2.0).abs() < 1e-6);
        }
        let r1 = compare_voros_fg(&s, [1, 2, 3, 0], &cyc, 1, &halving(0.3), C64::default()).unwrap();
        for (a, b) in r0.rows.iter().zip(&r1.rows) {
            assert!(b.residual < 1e-9 && b.residual < a.residual);
        }
    }
}
