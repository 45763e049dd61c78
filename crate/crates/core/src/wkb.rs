//! WKB recursion for `((ℏ∂)² − Q(z,ℏ))ψ = 0`, `Q = Σ Q_k ℏ^k`.
//!
//! With `ψ = exp ∫ S`, `S = Σ_{m≥−1} ℏ^m P_m`, the Riccati equation
//! `ℏ²(S′ + S²) = Q` gives, order by order in ℏ,
//!
//! ```text
//! P₋₁² = Q₀
//! 2P₋₁P_m + Σ_{m₁+m₂=m−1, m₁,m₂≥0} P_{m₁}P_{m₂} + P′_{m−1} = Q_{m+1}   (m ≥ 0)
//! ```
//!
//! Every `P_m` is stored exactly as `a + b√Q₀` with rational `a`, `b`.

use num::complex::Complex64;
use thiserror::Error;

use crate::algfun::{AlgError, SpectralData};
use crate::exact::{GaussRat, NumericRf, RationalFunction};
use crate::numeric::quad::{integrate_segment, QuadError};

pub type C64 = Complex64;

const QUAD_ABS: f64 = 1e-13;
const QUAD_REL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WkbError {
    #[error("Q₀ vanishes identically")]
    Degenerate,
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("contour geometry: {0}")]
    Geometry(String),
}

/// `a + b·√Q₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct SqrtQElement {
    pub a: RationalFunction,
    pub b: RationalFunction,
}

impl SqrtQElement {
    pub fn zero() -> Self {
        SqrtQElement { a: RationalFunction::zero(), b: RationalFunction::zero() }
    }

    pub fn rational(a: RationalFunction) -> Self {
        SqrtQElement { a, b: RationalFunction::zero() }
    }

    /// `√Q₀` itself.
    pub fn sqrt() -> Self {
        SqrtQElement { a: RationalFunction::zero(), b: RationalFunction::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        SqrtQElement { a: &self.a + &o.a, b: &self.b + &o.b }
    }

    pub fn sub(&self, o: &Self) -> Self {
        SqrtQElement { a: &self.a - &o.a, b: &self.b - &o.b }
    }

    pub fn neg(&self) -> Self {
        SqrtQElement { a: -&self.a, b: -&self.b }
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        SqrtQElement { a: self.a.scale(c), b: self.b.scale(c) }
    }

    /// Image under the sheet flip `√Q₀ ↦ −√Q₀`.
    pub fn flip(&self) -> Self {
        SqrtQElement { a: self.a.clone(), b: -&self.b }
    }

    pub fn odd_part(&self) -> Self {
        SqrtQElement { a: RationalFunction::zero(), b: self.b.clone() }
    }

    pub fn even_part(&self) -> Self {
        SqrtQElement::rational(self.a.clone())
    }
}

/// Arithmetic context: the ring `ℚ(i)(z)[√Q₀]`.
#[derive(Clone, Debug)]
pub struct SqrtQ {
    q0: RationalFunction,
    /// `Q₀′/(2Q₀)`, so that `(√Q₀)′ = (Q₀′/(2Q₀))·√Q₀`.
    half_log: RationalFunction,
}

impl SqrtQ {
    pub fn new(q0: RationalFunction) -> Result<Self, WkbError> {
        if q0.is_zero() {
            return Err(WkbError::Degenerate);
        }
        let half_log = q0.derivative().div(&q0).expect("nonzero").scale(&GaussRat::from_ratio(1, 2));
        Ok(SqrtQ { q0, half_log })
    }

    pub fn q0(&self) -> &RationalFunction {
        &self.q0
    }

    pub fn mul(&self, x: &SqrtQElement, y: &SqrtQElement) -> SqrtQElement {
        let a = &(&x.a * &y.a) + &(&(&x.b * &y.b) * &self.q0);
        let b = &(&x.a * &y.b) + &(&x.b * &y.a);
        SqrtQElement { a, b }
    }

    pub fn derivative(&self, x: &SqrtQElement) -> SqrtQElement {
        SqrtQElement { a: x.a.derivative(), b: &x.b.derivative() + &(&x.b * &self.half_log) }
    }

    /// `x / √Q₀ = b + (a/Q₀)√Q₀`.
    pub fn div_sqrt(&self, x: &SqrtQElement) -> SqrtQElement {
        SqrtQElement { a: x.b.clone(), b: x.a.div(&self.q0).expect("nonzero") }
    }
}

/// `P₋₁ … P_N` for one potential.
#[derive(Clone, Debug)]
pub struct WkbSeries {
    ctx: SqrtQ,
    q: Vec<RationalFunction>,
    /// `terms[m + 1] = P_m`.
    terms: Vec<SqrtQElement>,
}

/// Run the recursion through `P_N`.
pub fn wkb_recursion(q: &[RationalFunction], n: usize) -> Result<WkbSeries, WkbError> {
    let q0 = q.first().cloned().ok_or(WkbError::Degenerate)?;
    let ctx = SqrtQ::new(q0)?;
    let qk = |k: usize| q.get(k).cloned().unwrap_or_else(RationalFunction::zero);
    let half = GaussRat::from_ratio(1, 2);
    let mut terms = vec![SqrtQElement::sqrt()];
    for m in 0..=n {
        // P_m = (Q_{m+1} − Σ' P_{m₁}P_{m₂} − P′_{m−1}) / (2√Q₀)
        let mut rhs = SqrtQElement::rational(qk(m + 1));
        if m >= 1 {
            for m1 in 0..m {
                let m2 = m - 1 - m1;
                rhs = rhs.sub(&ctx.mul(&terms[m1 + 1], &terms[m2 + 1]));
            }
        }
        rhs = rhs.sub(&ctx.derivative(&terms[m]));
        terms.push(ctx.div_sqrt(&rhs).scale(&half));
    }
    Ok(WkbSeries { ctx, q: q.to_vec(), terms })
}

impl WkbSeries {
    pub fn from_spectral(s: &SpectralData, n: usize) -> Result<Self, WkbError> {
        wkb_recursion(&s.potential()?, n)
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 2
    }

    pub fn context(&self) -> &SqrtQ {
        &self.ctx
    }

    /// `P_m`, `m ≥ −1`.
    pub fn term(&self, m: i64) -> &SqrtQElement {
        &self.terms[(m + 1) as usize]
    }

    /// Coefficients of `ℏ²(S′ + S²) − Q` at `ℏ^0 … ℏ^{N+1}`.
    pub fn residual(&self) -> Vec<SqrtQElement> {
        let n = self.order() as i64;
        let mut out = Vec::new();
        for k in 0..=n + 1 {
            let mut acc = SqrtQElement::rational(-&self.q.get(k as usize).cloned().unwrap_or_else(RationalFunction::zero));
            for m1 in -1..=k - 1 {
                let m2 = k - 2 - m1;
                if (-1..=n).contains(&m2) {
                    acc = acc.add(&self.ctx.mul(self.term(m1), self.term(m2)));
                }
            }
            if k >= 1 {
                acc = acc.add(&self.ctx.derivative(self.term(k - 2)));
            }
            out.push(acc);
        }
        out
    }

    /// Sheet-flip-odd parts, indexed from `ℏ^{−1}`.
    pub fn p_odd(&self) -> Vec<SqrtQElement> {
        self.terms.iter().map(|t| t.odd_part()).collect()
    }

    pub fn p_even(&self) -> Vec<SqrtQElement> {
        self.terms.iter().map(|t| t.even_part()).collect()
    }

    /// `−½ (P_od)′/P_od` expanded in ℏ, indexed from `ℏ^0` through `ℏ^N`.
    pub fn even_from_odd(&self) -> Vec<SqrtQElement> {
        let o = self.p_odd();
        let n = self.order();
        // R = O′/O with O = Σ_{k≥−1} O_k ℏ^k; R_{k+1} = (O′_k − Σ_{a=0}^{k} R_a O_{k−a}) / O₋₁
        let mut r: Vec<SqrtQElement> = Vec::with_capacity(n + 1);
        for kk in 0..=n {
            let k = kk as i64 - 1;
            let mut acc = self.ctx.derivative(&o[(k + 1) as usize]);
            for a in 0..kk {
                let idx = k - a as i64;
                acc = acc.sub(&self.ctx.mul(&r[a], &o[(idx + 1) as usize]));
            }
            // divide by O₋₁ = b₋₁√Q₀
            let b = &o[0].b;
            let divided = self.ctx.div_sqrt(&acc);
            let inv_b = b.inv().expect("nonzero leading term");
            r.push(SqrtQElement { a: &divided.a * &inv_b, b: &divided.b * &inv_b });
        }
        r.iter().map(|x| x.scale(&GaussRat::from_ratio(-1, 2))).collect()
    }

    /// Numerical evaluators `(a_m, b_m)` for `m = −1 … N`.
    pub fn numeric_terms(&self) -> Vec<(NumericRf, NumericRf)> {
        self.terms.iter().map(|t| (t.a.numeric(), t.b.numeric())).collect()
    }
}

/// Tracks a branch of `√Q₀` along straight segments. Pieces are kept short
/// relative to the distance to zeros and poles of `Q₀`, so that on each piece
/// `√(Q₀(z)/Q₀(z_start))` stays on the principal branch.
#[derive(Clone, Debug)]
pub struct BranchTracker {
    q0: NumericRf,
    critical: Vec<C64>,
    total_mult: f64,
}

impl BranchTracker {
    pub fn new(q0: &RationalFunction) -> Self {
        let mut critical = Vec::new();
        let mut total = 0.0;
        for (r, k) in q0.num().roots().into_iter().chain(q0.den().roots()) {
            critical.push(r);
            total += k as f64;
        }
        BranchTracker { q0: q0.numeric(), critical, total_mult: total.max(1.0) }
    }

    pub fn q0(&self, z: C64) -> C64 {
        self.q0.eval(z)
    }

    pub fn critical_points(&self) -> &[C64] {
        &self.critical
    }

    fn max_piece(&self, z: C64) -> f64 {
        let d = self.critical.iter().map(|r| (z - r).norm()).fold(f64::INFINITY, f64::min);
        0.4 * d / self.total_mult
    }

    /// Continue a root `s₀` of `Q₀` at `path[0]` to the end of `path`.
    pub fn continue_root(&self, path: &[C64], s0: C64) -> Result<C64, WkbError> {
        Ok(self.integrate_path(path, s0, |_, _| C64::default(), false)?.1)
    }

    /// `∫ f(z, √Q₀(z)) dz` along `path` starting on the branch `s0` at
    /// `path[0]`; returns the integral and the branch value at the end.
    pub fn integrate_path<F: Fn(C64, C64) -> C64>(&self, path: &[C64], s0: C64, f: F, integrate: bool) -> Result<(C64, C64), WkbError> {
        let mut root = s0;
        let mut total = C64::default();
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut pos = a;
            let mut guard = 0usize;
            while (b - pos).norm() > 0.0 {
                let h = self.max_piece(pos);
                if h < 1e-14 * pos.norm().max(1.0) {
                    return Err(WkbError::Geometry(format!("path passes through a zero or pole of Q₀ near {pos}")));
                }
                let rem = (b - pos).norm();
                let next = if rem <= h { b } else { pos + (b - pos) * (h / rem) };
                let qs = self.q0.eval(pos);
                if integrate {
                    let r = root;
                    let v = integrate_segment(|z| f(z, r * (self.q0.eval(z) / qs).sqrt()), pos, next, QUAD_ABS, QUAD_REL)?;
                    total += v;
                }
                root *= (self.q0.eval(next) / qs).sqrt();
                pos = next;
                guard += 1;
                if guard > 1_000_000 {
                    return Err(WkbError::Geometry("path subdivision did not terminate".into()));
                }
            }
        }
        Ok((total, root))
    }
}

/// Kind of a cycle on the spectral curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleKind {
    VorosEdge,
    PullBack,
    TurningPointLoop,
    Composite,
}

/// Closed polyline on the base with a starting branch of `√Q₀`; its lift to
/// the spectral curve must close up.
#[derive(Clone, Debug)]
pub struct Cycle {
    pub id: String,
    pub points: Vec<C64>,
    pub start_root: C64,
    pub kind: CycleKind,
}

impl Cycle {
    pub fn new(id: impl Into<String>, points: Vec<C64>, start_root: C64, kind: CycleKind) -> Self {
        Cycle { id: id.into(), points, start_root, kind }
    }

    pub fn reversed(&self, tracker: &BranchTracker) -> Result<Cycle, WkbError> {
        let end = tracker.continue_root(&self.points, self.start_root)?;
        let mut pts = self.points.clone();
        pts.reverse();
        Ok(Cycle { id: format!("{}-rev", self.id), points: pts, start_root: end, kind: self.kind })
    }

    /// Concatenation; both cycles must start at the same point and branch.
    pub fn concat(&self, other: &Cycle) -> Result<Cycle, WkbError> {
        let (a, b) = (self.points[0], other.points[0]);
        if (a - b).norm() > 1e-12 * a.norm().max(1.0) || (self.start_root - other.start_root).norm() > 1e-9 * self.start_root.norm().max(1.0) {
            return Err(WkbError::Geometry("cycles do not share a base point and branch".into()));
        }
        let mut pts = self.points.clone();
        pts.extend_from_slice(&other.points[1..]);
        Ok(Cycle { id: format!("{}+{}", self.id, other.id), points: pts, start_root: self.start_root, kind: CycleKind::Composite })
    }

    /// Winding number of the base loop around `v`.
    pub fn winding(&self, v: C64) -> i64 {
        let mut total = 0.0;
        for w in self.points.windows(2) {
            total += ((w[1] - v) / (w[0] - v)).arg();
        }
        (total / (2.0 * std::f64::consts::PI)).round() as i64
    }
}

/// Closed polygon approximating a circle, starting at angle `phase`.
pub fn circle(center: C64, r: f64, n: usize, phase: f64) -> Vec<C64> {
    let mut pts: Vec<C64> = (0..n)
        .map(|k| center + C64::from_polar(r, phase + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    pts.push(pts[0]);
    pts
}

/// Closed stadium around the segment `[v1, v2]` at distance `width`,
/// counterclockwise, starting above the midpoint.
pub fn stadium(v1: C64, v2: C64, width: f64, n_arc: usize) -> Vec<C64> {
    let d = (v2 - v1) / (v2 - v1).norm();
    let nrm = d * C64::new(0.0, 1.0);
    let mid = 0.5 * (v1 + v2);
    let mut pts = vec![mid + nrm * width];
    // left cap around v1, from +normal to −normal
    for k in 0..=n_arc {
        let t = std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / n_arc as f64;
        pts.push(v1 + d * C64::from_polar(width, t));
    }
    pts.push(mid - nrm * width);
    for k in 0..=n_arc {
        let t = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / n_arc as f64;
        pts.push(v2 + d * C64::from_polar(width, t));
    }
    pts.push(pts[0]);
    pts
}

/// Voros symbol `∮_γ P_od`, one entry `(m, ∮ b_m√Q₀ dz)` per ℏ-order.
pub fn voros_symbol(series: &WkbSeries, tracker: &BranchTracker, cycle: &Cycle) -> Result<Vec<(i64, C64)>, WkbError> {
    let nums = series.numeric_terms();
    let mut out = Vec::with_capacity(nums.len());
    for (k, (_, b)) in nums.iter().enumerate() {
        let m = k as i64 - 1;
        if b.is_zero() {
            out.push((m, C64::default()));
            continue;
        }
        let (v, _) = tracker.integrate_path(&cycle.points, cycle.start_root, |z, s| b.eval(z) * s, true)?;
        out.push((m, v));
    }
    Ok(out)
}

/// `∫_v^z P_od dz := ½∮` over the minimal counterclockwise loop around the
/// turning point `v` that ends at `(z, root)`; one entry per ℏ-order.
pub fn turning_point_normalization(series: &WkbSeries, tracker: &BranchTracker, v: C64, z: C64, root: C64) -> Result<Vec<(i64, C64)>, WkbError> {
    let loop_pts = normalization_loop(tracker, v, z)?;
    // the loop flips the sheet, so it starts on −root
    let cycle = Cycle::new("tp-normalization", loop_pts, -root, CycleKind::TurningPointLoop);
    let end = tracker.continue_root(&cycle.points, cycle.start_root)?;
    if (end - root).norm() > 1e-6 * root.norm().max(1e-300) {
        return Err(WkbError::Geometry(format!("loop around {v} does not flip the sheet")));
    }
    Ok(voros_symbol(series, tracker, &cycle)?.into_iter().map(|(m, x)| (m, 0.5 * x)).collect())
}

/// Keyhole loop from `z` around `v` and back, avoiding other critical points.
pub fn normalization_loop(tracker: &BranchTracker, v: C64, z: C64) -> Result<Vec<C64>, WkbError> {
    let others = tracker
        .critical_points()
        .iter()
        .filter(|r| (*r - v).norm() > 1e-12 * v.norm().max(1.0))
        .map(|r| (r - v).norm())
        .fold(f64::INFINITY, f64::min);
    let dist = (z - v).norm();
    if dist == 0.0 {
        return Err(WkbError::Geometry("endpoint coincides with the turning point".into()));
    }
    let rho = dist.min(0.5 * others);
    let u = (z - v) / dist;
    let phase = u.arg();
    let mut pts = Vec::new();
    if rho < dist {
        pts.push(z);
    }
    pts.extend(circle(v, rho, 64, phase));
    if rho < dist {
        pts.push(z);
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algfun::rf_ints;
    use crate::exact::Poly;

    fn rf(num: &[i64], den: &[i64]) -> RationalFunction {
        rf_ints(num, den)
    }

    #[test]
    fn airy_low_orders_by_hand() {
        let s = wkb_recursion(&[rf(&[0, 1], &[1])], 2).unwrap();
        // P₀ = −1/(4z)
        assert_eq!(s.term(0), &SqrtQElement::rational(rf(&[-1], &[0, 4])));
        // P₁ = −5/(32 z³)·√z
        let p1 = s.term(1);
        assert!(p1.a.is_zero());
        assert_eq!(p1.b, rf(&[-5], &[0, 0, 0, 32]));
    }

    #[test]
    fn weber_p1_by_hand() {
        let s = wkb_recursion(&[rf(&[-1, 0, 1], &[1])], 1).unwrap();
        // P₀ = −z/(2(z²−1)); P₁ = −(3z²+2)/(8(z²−1)³)·√Q₀
        assert_eq!(s.term(0), &SqrtQElement::rational(rf(&[0, -1], &[-2, 0, 2])));
        let den = &Poly::from_ints(&[-1, 0, 1]).pow(3) * &Poly::from_ints(&[8]);
        let b = RationalFunction::new(Poly::from_ints(&[-2, 0, -3]), den).unwrap();
        assert!(s.term(1).a.is_zero());
        assert_eq!(s.term(1).b, b);
    }

    #[test]
    fn residual_vanishes_exactly() {
        for q0 in [rf(&[0, 1], &[1]), rf(&[-1, 0, 1], &[1]), rf(&[-1, 0, 1], &[0, 0, 0, 0, 1])] {
            let s = wkb_recursion(&[q0], 4).unwrap();
            assert!(s.residual().iter().all(|r| r.is_zero()));
        }
        // with ℏ-corrections in Q
        let q = [rf(&[-1, 0, 1], &[1]), rf(&[0, 1], &[1]), rf(&[1], &[0, 1])];
        let s = wkb_recursion(&q, 3).unwrap();
        assert!(s.residual().iter().all(|r| r.is_zero()));
    }

    #[test]
    fn parity_and_log_derivative() {
        let s = wkb_recursion(&[rf(&[-1, 0, 1], &[1])], 5).unwrap();
        for m in -1..=5i64 {
            let t = s.term(m);
            if m.rem_euclid(2) == 1 {
                assert!(t.a.is_zero(), "P_{m} must be odd");
            } else {
                assert!(t.b.is_zero(), "P_{m} must be even");
            }
        }
        let ev = s.p_even();
        let from_odd = s.even_from_odd();
        for (k, e) in from_odd.iter().enumerate() {
            assert_eq!(e, &ev[k + 1], "order {k}");
        }
        // Airy: leading order P₀ = −½ (√z)′/√z
        let a = wkb_recursion(&[rf(&[0, 1], &[1])], 1).unwrap();
        assert_eq!(a.even_from_odd()[0], a.p_even()[1]);
    }

    #[test]
    fn weber_edge_cycle_leading_term() {
        let q0 = rf(&[-1, 0, 1], &[1]);
        let s = wkb_recursion(std::slice::from_ref(&q0), 3).unwrap();
        let tr = BranchTracker::new(&q0);
        let pts = stadium(C64::new(-1.0, 0.0), C64::new(1.0, 0.0), 0.5, 32);
        let z0 = pts[0];
        let root = (z0 * z0 - 1.0).sqrt();
        let cyc = Cycle::new("edge", pts, root, CycleKind::VorosEdge);
        let v = voros_symbol(&s, &tr, &cyc).unwrap();
        assert!((v[0].1.norm() - std::f64::consts::PI).abs() < 1e-9);
        assert!(v[0].1.re.abs() < 1e-9);
        // harmonic oscillator: higher cycle integrals vanish
        for (_, x) in &v[1..] {
            assert!(x.norm() < 1e-8);
        }
        let rev = cyc.reversed(&tr).unwrap();
        let vr = voros_symbol(&s, &tr, &rev).unwrap();
        assert!((vr[0].1 + v[0].1).norm() < 1e-9);
    }

    #[test]
    fn contractible_cycle_vanishes() {
        let q0 = rf(&[-1, 0, 1], &[1]);
        let s = wkb_recursion(std::slice::from_ref(&q0), 3).unwrap();
        let tr = BranchTracker::new(&q0);
        let pts = circle(C64::new(3.0, 2.0), 0.7, 24, 0.3);
        let root = (pts[0] * pts[0] - 1.0).sqrt();
        let v = voros_symbol(&s, &tr, &Cycle::new("c", pts, root, CycleKind::PullBack)).unwrap();
        assert!(v.iter().all(|(_, x)| x.norm() < 1e-10));
    }

    #[test]
    fn airy_turning_point_normalization() {
        let q0 = rf(&[0, 1], &[1]);
        let s = wkb_recursion(std::slice::from_ref(&q0), 3).unwrap();
        let tr = BranchTracker::new(&q0);
        for z in [C64::new(1.3, 0.4), C64::new(-0.7, 0.9)] {
            let root = z.sqrt();
            let v = turning_point_normalization(&s, &tr, C64::default(), z, root).unwrap();
            let expect = 2.0 / 3.0 * root * z;
            assert!((v[0].1 - expect).norm() < 1e-10, "{} vs {}", v[0].1, expect);
            let w = turning_point_normalization(&s, &tr, C64::default(), z, -root).unwrap();
            assert!((w[0].1 + v[0].1).norm() < 1e-10);
            // P₁ = −5/32 z^{−5/2}: finite part of ∫₀^z is (5/48) z^{−3/2}
            let p1 = 5.0 / 48.0 / (root * z);
            assert!((v[2].1 - p1).norm() < 1e-9, "{} vs {}", v[2].1, p1);
        }
    }
}
