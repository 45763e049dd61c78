//! Spectral data of an ℏ-connection given by its characteristic polynomial
//! `ξⁿ + B₁ξⁿ⁻¹ + … + Bₙ` (each `B_k = Σ_i B_{k,i} ℏ^i` with rational
//! coefficients): turning points, poles, sheets and their continuation.

use num::complex::Complex64;
use num::Zero;
use thiserror::Error;

use crate::exact::{GaussRat, NumericRf, Poly, RationalFunction};
use crate::numeric::roots::polynomial_roots;

pub type C64 = Complex64;

/// Relative factor for the turning-point exclusion radius.
pub const DELTA_TP_FACTOR: f64 = 1e-3;
const NEWTON_ITERS: usize = 30;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgError {
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("expected {expected} characteristic-polynomial coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },
    #[error("discriminant of the spectral curve vanishes identically")]
    DegenerateCurve,
    #[error("the leading potential Q₀ vanishes identically")]
    ZeroPotential,
    #[error("ℏ must be nonzero")]
    ZeroHbar,
    #[error("continuation path passes within δ_tp of the turning point {0}")]
    AmbiguousContinuation(C64),
    #[error("sheet matching failed near z = {0}")]
    MatchingFailed(C64),
    #[error("operation requires rank 2, got rank {0}")]
    NotRankTwo(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PoleLocation {
    Finite(C64),
    Infinity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pole {
    pub location: PoleLocation,
    /// Rank 2: order of the quadratic differential `Q₀dz²`. Higher rank:
    /// order of the one-form `ξ dz`, rounded up.
    pub order: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TurningPoint {
    pub z: C64,
    /// Multiplicity of `z` as a zero of the discriminant.
    pub multiplicity: u32,
    /// Number of sheets meeting at `z`.
    pub colliding: usize,
}

impl TurningPoint {
    /// A simple turning point: exactly two sheets meet, square-root type.
    pub fn is_double_branch(&self) -> bool {
        self.multiplicity == 1 && self.colliding == 2
    }
}

/// Base point and ordered sheet values there.
#[derive(Clone, Debug, PartialEq)]
pub struct SheetLabeling {
    pub base: C64,
    pub values: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    rank: usize,
    /// `coeffs[k-1][i]` is `B_{k,i}`.
    coeffs: Vec<Vec<RationalFunction>>,
    numeric: Vec<Vec<NumericRf>>,
    hbar: C64,
    schrodinger: bool,
    discriminant: RationalFunction,
    turning_points: Vec<TurningPoint>,
    poles: Vec<Pole>,
    singular: Vec<C64>,
    delta_tp: f64,
    labeling: SheetLabeling,
}

fn rf_const(a: i64) -> RationalFunction {
    RationalFunction::constant(GaussRat::from_int(a, 0))
}

/// Determinant over the field of rational functions by Gaussian elimination.
fn det_rf(mut m: Vec<Vec<RationalFunction>>) -> RationalFunction {
    let n = m.len();
    let mut det = RationalFunction::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return RationalFunction::zero();
        };
        if piv != col {
            m.swap(piv, col);
            det = -&det;
        }
        det = &det * &m[col][col];
        let inv = m[col][col].inv().expect("nonzero pivot");
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] * &inv;
            for c in col..n {
                let t = &f * &m[col][c];
                m[r][c] = &m[r][c] - &t;
            }
        }
    }
    det
}

/// Discriminant in ξ of the monic polynomial with coefficients `a` (high to
/// low, leading 1 omitted): `ξⁿ + a₀ξⁿ⁻¹ + … + a_{n−1}`.
pub fn discriminant(a: &[RationalFunction]) -> RationalFunction {
    let n = a.len();
    if n <= 1 {
        return RationalFunction::one();
    }
    // p = [1, a0, ..., a_{n-1}] high to low; p' = [n, (n-1)a0, ..., a_{n-2}]
    let mut p = vec![RationalFunction::one()];
    p.extend(a.iter().cloned());
    let dp: Vec<RationalFunction> = (0..n)
        .map(|k| p[k].scale(&GaussRat::from_int((n - k) as i64, 0)))
        .collect();
    let size = 2 * n - 1;
    let mut syl = vec![vec![RationalFunction::zero(); size]; size];
    // n-1 rows of p (degree n), n rows of p' (degree n-1)
    for r in 0..n - 1 {
        for (k, c) in p.iter().enumerate() {
            syl[r][r + k] = c.clone();
        }
    }
    for r in 0..n {
        for (k, c) in dp.iter().enumerate() {
            syl[n - 1 + r][r + k] = c.clone();
        }
    }
    let res = det_rf(syl);
    let sign = if (n * (n - 1) / 2) % 2 == 0 { 1 } else { -1 };
    res.scale(&GaussRat::from_int(sign, 0))
}

fn root_multiplicity(p: &Poly, z: C64, tol: f64) -> u32 {
    p.roots().iter().filter(|(r, _)| (r - z).norm() < tol).map(|(_, k)| *k).sum()
}

impl SpectralData {
    /// From characteristic-polynomial coefficients: `coeffs[k-1][i] = B_{k,i}`.
    pub fn from_charpoly(rank: usize, coeffs: Vec<Vec<RationalFunction>>, hbar: C64) -> Result<Self, AlgError> {
        Self::build(rank, coeffs, hbar, false, None)
    }

    /// Rank-2 Schrödinger data `((ℏ∂)² − Q(z,ℏ))ψ = 0`, `q[i] = Q_i`.
    pub fn schrodinger(q: Vec<RationalFunction>, hbar: C64) -> Result<Self, AlgError> {
        if q.first().is_none_or(|q0| q0.is_zero()) {
            return Err(AlgError::ZeroPotential);
        }
        let b2: Vec<RationalFunction> = q.iter().map(|x| -x).collect();
        Self::build(2, vec![vec![RationalFunction::zero()], b2], hbar, true, None)
    }

    pub fn with_base_point(self, base: C64) -> Result<Self, AlgError> {
        Self::build(self.rank, self.coeffs, self.hbar, self.schrodinger, Some(base))
    }

    pub fn with_hbar(&self, hbar: C64) -> Result<Self, AlgError> {
        if hbar.norm() == 0.0 {
            return Err(AlgError::ZeroHbar);
        }
        let mut s = self.clone();
        s.hbar = hbar;
        Ok(s)
    }

    fn build(rank: usize, mut coeffs: Vec<Vec<RationalFunction>>, hbar: C64, schrodinger: bool, base: Option<C64>) -> Result<Self, AlgError> {
        if rank == 0 {
            return Err(AlgError::ZeroRank);
        }
        if coeffs.len() != rank {
            return Err(AlgError::CoefficientCount { expected: rank, got: coeffs.len() });
        }
        if hbar.norm() == 0.0 || !hbar.is_finite() {
            return Err(AlgError::ZeroHbar);
        }
        for c in coeffs.iter_mut() {
            if c.is_empty() {
                c.push(RationalFunction::zero());
            }
        }
        let lead: Vec<RationalFunction> = coeffs.iter().map(|c| c[0].clone()).collect();
        let discriminant = discriminant(&lead);
        if discriminant.is_zero() {
            return Err(AlgError::DegenerateCurve);
        }

        // finite singular points from every coefficient
        let mut singular: Vec<C64> = Vec::new();
        for c in coeffs.iter().flatten() {
            for (r, _) in c.den().roots() {
                if !singular.iter().any(|s| (s - r).norm() < 1e-9 * r.norm().max(1.0)) {
                    singular.push(r);
                }
            }
        }
        singular.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

        let poles = Self::leading_poles(rank, &lead, &singular);

        let mut turning_points = Vec::new();
        if rank >= 2 {
            for (z, mult) in discriminant.num().roots() {
                if singular.iter().any(|s| (s - z).norm() < 1e-9 * z.norm().max(1.0)) {
                    continue;
                }
                turning_points.push(TurningPoint { z, multiplicity: mult, colliding: 0 });
            }
        }

        let mut pts: Vec<C64> = turning_points.iter().map(|t| t.z).collect();
        pts.extend(singular.iter().copied());
        let mut min_d = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                min_d = min_d.min((pts[i] - pts[j]).norm());
            }
        }
        let delta_tp = DELTA_TP_FACTOR * if min_d.is_finite() { min_d } else { 1.0 };

        let numeric = coeffs.iter().map(|c| c.iter().map(|f| f.numeric()).collect()).collect();
        let mut s = SpectralData {
            rank,
            coeffs,
            numeric,
            hbar,
            schrodinger,
            discriminant,
            turning_points,
            poles,
            singular,
            delta_tp,
            labeling: SheetLabeling { base: C64::default(), values: vec![] },
        };
        for k in 0..s.turning_points.len() {
            let z = s.turning_points[k].z;
            s.turning_points[k].colliding = s.colliding_count(z);
        }
        let base = base.unwrap_or_else(|| s.default_base_point());
        let mut values = s.leading_roots(base);
        values.sort_by(|a, b| b.im.total_cmp(&a.im).then(b.re.total_cmp(&a.re)));
        s.labeling = SheetLabeling { base, values };
        Ok(s)
    }

    fn leading_poles(rank: usize, lead: &[RationalFunction], singular: &[C64]) -> Vec<Pole> {
        let mut poles = Vec::new();
        for &p in singular {
            let tol = 1e-7 * p.norm().max(1.0);
            let order = if rank == 2 {
                // Q₀ = B₁²/4 − B₂
                let q0 = Self::q0_of(lead);
                root_multiplicity(q0.den(), p, tol)
            } else {
                let mut best: f64 = 0.0;
                for (k, b) in lead.iter().enumerate() {
                    let m = root_multiplicity(b.den(), p, tol) as f64;
                    best = best.max(m / (k + 1) as f64);
                }
                best.ceil() as u32
            };
            if order > 0 {
                poles.push(Pole { location: PoleLocation::Finite(p), order });
            }
        }
        let inf_order: i64 = if rank == 2 {
            let q0 = Self::q0_of(lead);
            if q0.is_zero() { i64::MIN } else { q0.degree_at_infinity() + 4 }
        } else {
            let mut d = f64::NEG_INFINITY;
            for (k, b) in lead.iter().enumerate() {
                if !b.is_zero() {
                    d = d.max(b.degree_at_infinity() as f64 / (k + 1) as f64);
                }
            }
            if d.is_finite() { (d + 2.0).ceil() as i64 } else { 2 }
        };
        if inf_order > 0 {
            poles.push(Pole { location: PoleLocation::Infinity, order: inf_order as u32 });
        }
        poles
    }

    fn q0_of(lead: &[RationalFunction]) -> RationalFunction {
        let b1 = &lead[0];
        let quarter = GaussRat::from_ratio(1, 4);
        &(b1 * b1).scale(&quarter) - &lead[1]
    }

    fn default_base_point(&self) -> C64 {
        let scale = self.scale();
        // generic point in the upper half plane, away from the real axis
        let mut base = C64::new(0.05 * scale, 0.5 * scale);
        let bad = |b: C64| {
            self.turning_points.iter().any(|t| (t.z - b).norm() < 0.05 * scale)
                || self.singular.iter().any(|p| (p - b).norm() < 0.05 * scale)
        };
        let mut k = 0;
        while bad(base) && k < 32 {
            base += C64::new(0.037 * scale, 0.11 * scale);
            k += 1;
        }
        base
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn hbar(&self) -> C64 {
        self.hbar
    }

    pub fn is_schrodinger(&self) -> bool {
        self.schrodinger
    }

    pub fn coeffs(&self) -> &[Vec<RationalFunction>] {
        &self.coeffs
    }

    pub fn discriminant(&self) -> &RationalFunction {
        &self.discriminant
    }

    pub fn turning_points(&self) -> &[TurningPoint] {
        &self.turning_points
    }

    pub fn turning_point_locations(&self) -> Vec<C64> {
        self.turning_points.iter().map(|t| t.z).collect()
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    /// Finite points where some coefficient has a pole.
    pub fn finite_singular_points(&self) -> &[C64] {
        &self.singular
    }

    pub fn infinity_is_pole(&self) -> bool {
        self.poles.iter().any(|p| p.location == PoleLocation::Infinity)
    }

    pub fn infinity_order(&self) -> u32 {
        self.poles
            .iter()
            .find(|p| p.location == PoleLocation::Infinity)
            .map_or(0, |p| p.order)
    }

    pub fn delta_tp(&self) -> f64 {
        self.delta_tp
    }

    pub fn set_delta_tp(&mut self, d: f64) {
        self.delta_tp = d;
    }

    pub fn labeling(&self) -> &SheetLabeling {
        &self.labeling
    }

    /// `max(|turning points|, |finite poles|, 1)`.
    pub fn scale(&self) -> f64 {
        self.turning_points
            .iter()
            .map(|t| t.z.norm())
            .chain(self.singular.iter().map(|p| p.norm()))
            .fold(1.0, f64::max)
    }

    /// Potential `Q_i` of the rank-2 Schrödinger form (`Q = B₁²/4 − B₂`).
    pub fn potential(&self) -> Result<Vec<RationalFunction>, AlgError> {
        if self.rank != 2 {
            return Err(AlgError::NotRankTwo(self.rank));
        }
        let b1 = &self.coeffs[0];
        let b2 = &self.coeffs[1];
        let len = (2 * b1.len() - 1).max(b2.len());
        let quarter = GaussRat::from_ratio(1, 4);
        let mut q = Vec::with_capacity(len);
        for i in 0..len {
            let mut acc = RationalFunction::zero();
            for a in 0..=i {
                if let (Some(x), Some(y)) = (b1.get(a), b1.get(i - a)) {
                    acc = &acc + &(x * y).scale(&quarter);
                }
            }
            if let Some(b) = b2.get(i) {
                acc = &acc - b;
            }
            q.push(acc);
        }
        while q.len() > 1 && q.last().is_some_and(|x| x.is_zero()) {
            q.pop();
        }
        Ok(q)
    }

    /// Coefficients of the leading charpoly at `z`, low to high degree in ξ.
    pub fn charpoly_at(&self, z: C64) -> Vec<C64> {
        let n = self.rank;
        let mut c = vec![C64::default(); n + 1];
        c[n] = C64::new(1.0, 0.0);
        for k in 1..=n {
            c[n - k] = self.numeric[k - 1][0].eval(z);
        }
        c
    }

    /// Full charpoly at `(z, ℏ)`, low to high degree in ξ.
    pub fn charpoly_at_hbar(&self, z: C64, hbar: C64) -> Vec<C64> {
        let n = self.rank;
        let mut c = vec![C64::default(); n + 1];
        c[n] = C64::new(1.0, 0.0);
        for k in 1..=n {
            let mut acc = C64::default();
            let mut hp = C64::new(1.0, 0.0);
            for b in &self.numeric[k - 1] {
                acc += b.eval(z) * hp;
                hp *= hbar;
            }
            c[n - k] = acc;
        }
        c
    }

    /// Unordered roots of the leading charpoly.
    pub fn leading_roots(&self, z: C64) -> Vec<C64> {
        let c = self.charpoly_at(z);
        if self.rank == 2 {
            let (b, cc) = (c[1], c[0]);
            let d = (b * b - 4.0 * cc).sqrt();
            return vec![0.5 * (-b + d), 0.5 * (-b - d)];
        }
        polynomial_roots(&c)
    }

    fn colliding_count(&self, z: C64) -> usize {
        let roots = self.leading_roots(z);
        let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
        let tol = 1e-5 * scale;
        let mut best = 1;
        for r in &roots {
            let c = roots.iter().filter(|s| (*s - r).norm() < tol).count();
            best = best.max(c);
        }
        best
    }

    /// Colliding value and the remaining sheet values at a turning point.
    pub fn collision_at(&self, v: C64) -> (C64, Vec<C64>) {
        let roots = self.leading_roots(v);
        let mut best = (0, 1, f64::INFINITY);
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                let d = (roots[i] - roots[j]).norm();
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        let double = 0.5 * (roots[best.0] + roots[best.1]);
        let others = roots
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != best.0 && *k != best.1)
            .map(|(_, r)| *r)
            .collect();
        (double, others)
    }

    fn newton_root(&self, c: &[C64], mut x: C64) -> Option<C64> {
        for _ in 0..NEWTON_ITERS {
            let mut p = C64::default();
            let mut dp = C64::default();
            for a in c.iter().rev() {
                dp = dp * x + p;
                p = p * x + a;
            }
            if dp.norm() == 0.0 {
                return None;
            }
            let step = p / dp;
            x -= step;
            if step.norm() <= 1e-15 * x.norm().max(1.0) {
                return Some(x);
            }
        }
        let mut p = C64::default();
        for a in c.iter().rev() {
            p = p * x + a;
        }
        (p.norm() < 1e-10 * x.norm().max(1.0).powi(self.rank as i32)).then_some(x)
    }

    /// Sheet values at `z` continued from values `prev` at a nearby point;
    /// `None` if the match is not clearly separated.
    pub fn step_sheets(&self, prev: &[C64], z: C64) -> Option<Vec<C64>> {
        if self.rank == 1 {
            return Some(self.leading_roots(z));
        }
        if self.rank == 2 {
            let r = self.leading_roots(z);
            let (a, b) = (r[0], r[1]);
            let d_same = (a - prev[0]).norm().max((b - prev[1]).norm());
            let d_swap = (b - prev[0]).norm().max((a - prev[1]).norm());
            let (out, drift) = if d_same <= d_swap { (vec![a, b], d_same) } else { (vec![b, a], d_swap) };
            let sep = (prev[0] - prev[1]).norm();
            return (3.0 * drift <= sep).then_some(out);
        }
        let c = self.charpoly_at(z);
        let mut out = Vec::with_capacity(prev.len());
        for &p in prev {
            out.push(self.newton_root(&c, p)?);
        }
        let mut sep = f64::INFINITY;
        let mut sep_new = f64::INFINITY;
        for i in 0..prev.len() {
            for j in i + 1..prev.len() {
                sep = sep.min((prev[i] - prev[j]).norm());
                sep_new = sep_new.min((out[i] - out[j]).norm());
            }
        }
        let drift = prev.iter().zip(&out).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        (3.0 * drift <= sep && sep_new > 0.0).then_some(out)
    }

    /// Continue sheet values along a polyline, refining steps adaptively.
    pub fn continue_along(&self, path: &[C64], start: &[C64]) -> Result<Vec<C64>, AlgError> {
        let mut cur = start.to_vec();
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut t: f64 = 0.0;
            let mut h: f64 = 0.25;
            while t < 1.0 {
                let tn = (t + h).min(1.0);
                let z = a + (b - a) * tn;
                match self.step_sheets(&cur, z) {
                    Some(next) => {
                        cur = next;
                        t = tn;
                        h = (h * 2.0).min(0.25);
                    }
                    None => {
                        h *= 0.5;
                        if h < 0.5f64.powi(MAX_HALVINGS as i32) {
                            return Err(AlgError::MatchingFailed(z));
                        }
                    }
                }
            }
        }
        Ok(cur)
    }

    fn segment_hits_turning_point(&self, a: C64, b: C64) -> Option<C64> {
        let d = b - a;
        let len2 = d.norm_sqr();
        for tp in &self.turning_points {
            let t = if len2 == 0.0 { 0.0 } else { ((tp.z - a) * d.conj()).re / len2 };
            let t = t.clamp(0.0, 1.0);
            if (a + d * t - tp.z).norm() < self.delta_tp {
                return Some(tp.z);
            }
        }
        None
    }

    /// Canonical sheet values at `z`: the base labeling continued along the
    /// straight segment from the base point.
    pub fn sheets_at(&self, z: C64) -> Result<Vec<C64>, AlgError> {
        if let Some(tp) = self.segment_hits_turning_point(self.labeling.base, z) {
            return Err(AlgError::AmbiguousContinuation(tp));
        }
        self.continue_along(&[self.labeling.base, z], &self.labeling.values)
    }

    /// Like [`sheets_at`](Self::sheets_at) but detours to the left of a
    /// turning point lying on the segment.
    pub fn sheets_at_rerouted(&self, z: C64) -> Result<Vec<C64>, AlgError> {
        match self.sheets_at(z) {
            Err(AlgError::AmbiguousContinuation(tp)) => {
                let base = self.labeling.base;
                let dir = (z - base) / (z - base).norm();
                let detour = tp + dir * C64::new(0.0, 1.0) * (4.0 * self.delta_tp);
                if self.segment_hits_turning_point(base, detour).is_some() || self.segment_hits_turning_point(detour, z).is_some() {
                    return Err(AlgError::AmbiguousContinuation(tp));
                }
                self.continue_along(&[base, detour, z], &self.labeling.values)
            }
            other => other,
        }
    }

    /// Permutation induced by continuation along `path`: sheet `k` at the
    /// start (canonical labels) ends as canonical sheet `perm[k]`.
    pub fn continue_sheets(&self, path: &[C64]) -> Result<Vec<usize>, AlgError> {
        let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
            return Ok((0..self.rank).collect());
        };
        for w in path.windows(2) {
            if let Some(tp) = self.segment_hits_turning_point(w[0], w[1]) {
                return Err(AlgError::AmbiguousContinuation(tp));
            }
        }
        let start = self.sheets_at_rerouted(first)?;
        let end_vals = self.continue_along(path, &start)?;
        let canon = self.sheets_at_rerouted(last)?;
        Ok(match_labels(&end_vals, &canon))
    }

    /// Canonical index of each value in `vals` by nearest canonical sheet at `z`.
    pub fn label_at(&self, z: C64, vals: &[C64]) -> Result<Vec<usize>, AlgError> {
        let canon = self.sheets_at_rerouted(z)?;
        Ok(match_labels(vals, &canon))
    }

    /// Weakly GMN check (rank 2); returns diagnostics on failure.
    pub fn check_weakly_gmn(&self) -> Result<(), Vec<String>> {
        let mut diag = Vec::new();
        if self.rank != 2 {
            diag.push(format!("rank {} is not 2", self.rank));
            return Err(diag);
        }
        for p in &self.poles {
            if p.order < 2 {
                diag.push(format!("pole {:?} has order {} < 2", p.location, p.order));
            }
        }
        if !self.poles.iter().any(|p| p.order >= 2) {
            diag.push("no pole of order ≥ 2".into());
        }
        let q0 = &self.potential().expect("rank 2")[0];
        let has_branch = q0
            .num()
            .roots()
            .iter()
            .any(|(z, k)| k % 2 == 1 && !self.singular.iter().any(|s| (s - z).norm() < 1e-9));
        if !has_branch {
            diag.push("no branch point".into());
        }
        if diag.is_empty() { Ok(()) } else { Err(diag) }
    }

    /// Pole-order clauses of WKB regularity (rank 2).
    pub fn check_wkb_regular(&self) -> Result<(), Vec<String>> {
        if self.rank != 2 {
            return Err(vec![format!("rank {} is not 2", self.rank)]);
        }
        let q = self.potential().expect("rank 2");
        let mut diag = Vec::new();
        for p in &self.poles {
            let m = p.order as i64;
            for (i, qi) in q.iter().enumerate().skip(1) {
                if qi.is_zero() {
                    if m == 2 && i == 2 {
                        diag.push(format!("Q₂ must have a double pole at {:?}", p.location));
                    }
                    continue;
                }
                let (ord, lead) = laurent_lead(qi, p.location);
                if m >= 3 {
                    if 2 * ord >= 2 + m {
                        diag.push(format!("ord Q_{i} = {ord} ≥ 1 + {m}/2 at {:?}", p.location));
                    }
                } else if m == 2 {
                    if i == 2 {
                        let ok = ord == 2 && (lead - C64::new(-0.25, 0.0)).norm() < 1e-9;
                        if !ok {
                            diag.push(format!("Q₂ ≠ −1/(4(z−p)²)(1+O(z−p)) at {:?}", p.location));
                        }
                    } else if ord > 1 {
                        diag.push(format!("Q_{i} not simple at {:?}", p.location));
                    }
                }
            }
        }
        if diag.is_empty() { Ok(()) } else { Err(diag) }
    }
}

/// Pole order (as a quadratic differential) and leading Laurent coefficient.
fn laurent_lead(f: &RationalFunction, at: PoleLocation) -> (i64, C64) {
    match at {
        PoleLocation::Infinity => {
            let d = f.degree_at_infinity();
            (d + 4, f.lead_at_infinity().to_c64())
        }
        PoleLocation::Finite(p) => {
            let tol = 1e-7 * p.norm().max(1.0);
            let kd = root_multiplicity(f.den(), p, tol) as i64;
            let kn = root_multiplicity(f.num(), p, tol) as i64;
            // leading coefficient: N^{(kn)}(p)/kn! · kd!/D^{(kd)}(p)
            let nth = |poly: &Poly, k: i64| {
                let mut q = poly.clone();
                let mut fact = 1.0;
                for j in 1..=k {
                    q = q.derivative();
                    fact *= j as f64;
                }
                q.eval(p) / fact
            };
            (kd - kn, nth(f.num(), kn) / nth(f.den(), kd))
        }
    }
}

/// For each value in `vals`, the index of the nearest entry of `canon`
/// (greedy on increasing distance, so the result is a permutation).
pub fn match_labels(vals: &[C64], canon: &[C64]) -> Vec<usize> {
    let n = vals.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, v) in vals.iter().enumerate() {
        for (j, c) in canon.iter().enumerate() {
            pairs.push(((v - c).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = vec![usize::MAX; n];
    let mut used = vec![false; canon.len()];
    for (_, i, j) in pairs {
        if out[i] == usize::MAX && !used[j] {
            out[i] = j;
            used[j] = true;
        }
    }
    out
}

/// Parse a list of exact coefficient values.
pub fn poly_from_strings(c: &[String]) -> Result<Poly, crate::exact::ExactError> {
    let v = c.iter().map(|s| GaussRat::parse_real(s)).collect::<Result<Vec<_>, _>>()?;
    Ok(Poly::new(v))
}

/// Convenience: rational function with integer coefficient lists.
pub fn rf_ints(num: &[i64], den: &[i64]) -> RationalFunction {
    RationalFunction::new(Poly::from_ints(num), Poly::from_ints(den)).expect("nonzero denominator")
}

/// The Airy potential `Q₀ = z`.
pub fn airy(hbar: C64) -> SpectralData {
    SpectralData::schrodinger(vec![rf_ints(&[0, 1], &[1])], hbar).expect("valid")
}

/// `Q₀ = z² − 1`.
pub fn weber(hbar: C64) -> SpectralData {
    SpectralData::schrodinger(vec![rf_ints(&[-1, 0, 1], &[1])], hbar).expect("valid")
}

/// The rank-3 curve `ξ³ + 3ξ + 2iz = 0`.
pub fn bnr(hbar: C64) -> SpectralData {
    let b1 = RationalFunction::zero();
    let b2 = rf_const(3);
    let b3 = RationalFunction::from_poly(Poly::new(vec![GaussRat::zero(), GaussRat::from_int(0, 2)]));
    SpectralData::from_charpoly(3, vec![vec![b1], vec![b2], vec![b3]], hbar).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn turning_points_examples() {
        let a = airy(one());
        assert_eq!(a.turning_points().len(), 1);
        assert!(a.turning_points()[0].z.norm() < 1e-12);
        assert!(a.turning_points()[0].is_double_branch());

        let w = weber(one());
        let tps = w.turning_point_locations();
        assert_eq!(tps.len(), 2);
        assert!((tps[0] - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((tps[1] - C64::new(1.0, 0.0)).norm() < 1e-12);

        let b = bnr(one());
        let tps = b.turning_point_locations();
        assert_eq!(tps.len(), 2);
        assert!((tps[0] - C64::new(-1.0, 0.0)).norm() < 1e-9);
        assert!((tps[1] - C64::new(1.0, 0.0)).norm() < 1e-9);
        assert!(b.turning_points().iter().all(|t| t.is_double_branch()));
    }

    #[test]
    fn discriminants_by_hand() {
        // disc(ξ² − z) = 4z ; disc(ξ³ + 3ξ + 2iz) = 108(z² − 1)
        assert_eq!(airy(one()).discriminant(), &rf_ints(&[0, 4], &[1]));
        assert_eq!(weber(one()).discriminant(), &rf_ints(&[-4, 0, 4], &[1]));
        assert_eq!(bnr(one()).discriminant(), &rf_ints(&[-108, 0, 108], &[1]));
    }

    #[test]
    fn bnr_collisions_at_turning_points() {
        let b = bnr(one());
        let (d, others) = b.collision_at(C64::new(1.0, 0.0));
        assert!((d - C64::new(0.0, -1.0)).norm() < 1e-6);
        assert!((others[0] - C64::new(0.0, 2.0)).norm() < 1e-9);
        let (d, others) = b.collision_at(C64::new(-1.0, 0.0));
        assert!((d - C64::new(0.0, 1.0)).norm() < 1e-6);
        assert!((others[0] - C64::new(0.0, -2.0)).norm() < 1e-9);
    }

    #[test]
    fn poles_and_gmn() {
        let w = weber(one());
        assert_eq!(w.poles(), &[Pole { location: PoleLocation::Infinity, order: 6 }]);
        assert!(w.check_weakly_gmn().is_ok());
        let flat = SpectralData::schrodinger(vec![rf_ints(&[1], &[1])], one()).unwrap();
        let err = flat.check_weakly_gmn().unwrap_err();
        assert!(err.iter().any(|d| d.contains("branch")));
        let simple = SpectralData::schrodinger(vec![rf_ints(&[1], &[0, 1])], one()).unwrap();
        let err = simple.check_weakly_gmn().unwrap_err();
        assert!(err.iter().any(|d| d.contains("order 1")));
    }

    #[test]
    fn wkb_regular_examples() {
        assert!(weber(one()).check_wkb_regular().is_ok());
        let bad = SpectralData::schrodinger(vec![rf_ints(&[1], &[0, 0, 0, 0, 1]), rf_ints(&[1], &[0, 0, 0, 1])], one()).unwrap();
        assert!(bad.check_wkb_regular().is_err());
        let q2 = RationalFunction::new(Poly::from_ints(&[-1]), Poly::from_ints(&[0, 0, 4])).unwrap();
        let good = SpectralData::schrodinger(vec![rf_ints(&[1], &[0, 0, 1]), RationalFunction::zero(), q2], one()).unwrap();
        assert!(good.check_wkb_regular().is_ok(), "{:?}", good.check_wkb_regular());
    }

    #[test]
    fn sheets_at_examples() {
        let a = airy(one());
        let mut s = a.sheets_at(one()).unwrap();
        s.sort_by(|x, y| x.re.total_cmp(&y.re));
        assert!((s[0] + one()).norm() < 1e-12 && (s[1] - one()).norm() < 1e-12);

        let b = bnr(one());
        let mut s = b.sheets_at(C64::default()).unwrap();
        s.sort_by(|x, y| x.im.total_cmp(&y.im));
        let r3 = 3f64.sqrt();
        assert!((s[0] - C64::new(0.0, -r3)).norm() < 1e-10);
        assert!(s[1].norm() < 1e-10);
        assert!((s[2] - C64::new(0.0, r3)).norm() < 1e-10);
    }

    fn circle(center: C64, r: f64, n: usize) -> Vec<C64> {
        (0..=n)
            .map(|k| center + C64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect()
    }

    #[test]
    fn loop_monodromy() {
        let a = airy(one());
        assert_eq!(a.continue_sheets(&circle(C64::default(), 0.5, 16)).unwrap(), vec![1, 0]);
        assert_eq!(a.continue_sheets(&[one(), one()]).unwrap(), vec![0, 1]);

        let b = bnr(one());
        let perm = b.continue_sheets(&circle(one(), 0.5, 24)).unwrap();
        let fixed: Vec<usize> = (0..3).filter(|&k| perm[k] == k).collect();
        assert_eq!(fixed.len(), 1);
        // the fixed sheet is the one not colliding at +1 (value near 2i there)
        let vals = b.sheets_at_rerouted(C64::new(1.5, 0.0)).unwrap();
        assert!(vals[fixed[0]].im > 1.0);
    }
}
