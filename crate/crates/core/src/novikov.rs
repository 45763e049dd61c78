//! Truncated Novikov series `Σ a_c T^c` with real exponents and coefficients
//! that are either complex scalars or complex polynomials in ℏ, plus square
//! matrices over them.
//!
//! Exponents are doubles. Two exponents closer than
//! `ε_T · max(1, |c|)` are treated as equal, where `ε_T` defaults to
//! [`EXP_MERGE_TOL`] and can be changed process-wide. Coefficients whose
//! largest component is below [`COEFF_ZERO_TOL`] are dropped, which keeps
//! floating-point cancellations (commutators of unipotent factors, for
//! instance) from leaving ghost terms behind.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num::complex::Complex64;
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use thiserror::Error;

pub type C64 = Complex64;

pub const EXP_MERGE_TOL: f64 = 1e-9;
pub const COEFF_ZERO_TOL: f64 = 1e-12;

static MERGE_TOL_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Current exponent merge tolerance `ε_T`.
pub fn exp_merge_tol() -> f64 {
    f64::from_bits(MERGE_TOL_BITS.load(Ordering::Relaxed))
}

/// Set `ε_T` for the whole process; intended to be called once at start-up.
pub fn set_exp_merge_tol(eps: f64) {
    MERGE_TOL_BITS.store(eps.to_bits(), Ordering::Relaxed);
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NovikovError {
    #[error("series cutoffs differ: {0:?} vs {1:?}")]
    CutoffMismatch(Option<f64>, Option<f64>),
    #[error("matrix dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("malformed series json: {0}")]
    Json(String),
}

fn exps_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= exp_merge_tol() * a.abs().max(1.0)
}

fn cutoffs_equal(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => exps_equal(x, y),
        _ => false,
    }
}

/// Polynomial in ℏ truncated at a fixed order. Trailing zeros are trimmed,
/// so the zero polynomial has no stored terms.
#[derive(Clone, Debug, PartialEq)]
pub struct HbarPoly {
    order: usize,
    terms: Vec<C64>,
}

impl HbarPoly {
    pub fn new(order: usize, mut terms: Vec<C64>) -> Self {
        terms.truncate(order + 1);
        let mut p = HbarPoly { order, terms };
        p.trim();
        p
    }

    pub fn constant(order: usize, c: C64) -> Self {
        HbarPoly::new(order, vec![c])
    }

    fn trim(&mut self) {
        while let Some(last) = self.terms.last() {
            if last.norm() <= COEFF_ZERO_TOL {
                self.terms.pop();
            } else {
                break;
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &[C64] {
        &self.terms
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.terms.get(k).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add(&self, other: &HbarPoly) -> HbarPoly {
        let order = self.order.min(other.order);
        let len = self.terms.len().max(other.terms.len()).min(order + 1);
        let terms = (0..len).map(|k| self.coeff(k) + other.coeff(k)).collect();
        HbarPoly::new(order, terms)
    }

    fn mul(&self, other: &HbarPoly) -> HbarPoly {
        let order = self.order.min(other.order);
        if self.is_zero() || other.is_zero() {
            return HbarPoly::new(order, vec![]);
        }
        let len = (self.terms.len() + other.terms.len() - 1).min(order + 1);
        let mut terms = vec![C64::default(); len];
        for (i, a) in self.terms.iter().enumerate() {
            for (j, b) in other.terms.iter().enumerate() {
                if i + j < len {
                    terms[i + j] += a * b;
                }
            }
        }
        HbarPoly::new(order, terms)
    }

    pub fn scale(&self, c: C64) -> HbarPoly {
        HbarPoly::new(self.order, self.terms.iter().map(|t| t * c).collect())
    }

    /// Multiplicative inverse as a truncated power series; needs a nonzero
    /// constant term.
    pub fn inverse(&self) -> Option<HbarPoly> {
        let c0 = self.coeff(0);
        if c0.norm() <= COEFF_ZERO_TOL {
            return None;
        }
        let mut inv = vec![C64::default(); self.order + 1];
        inv[0] = c0.inv();
        for k in 1..=self.order {
            let mut acc = C64::default();
            for j in 1..=k {
                acc += self.coeff(j) * inv[k - j];
            }
            inv[k] = -acc * inv[0];
        }
        Some(HbarPoly::new(self.order, inv))
    }

    /// `exp` as a truncated power series.
    pub fn exp(&self) -> HbarPoly {
        // exp(c0 + u) = e^{c0} Σ u^k / k!, u nilpotent mod ℏ^{N+1}
        let c0 = self.coeff(0);
        let mut u = self.clone();
        if !u.terms.is_empty() {
            u.terms[0] = C64::default();
        }
        let mut acc = HbarPoly::constant(self.order, C64::new(1.0, 0.0));
        let mut power = acc.clone();
        for k in 1..=self.order {
            power = power.mul(&u).scale(C64::new(1.0 / k as f64, 0.0));
            acc = acc.add(&power);
        }
        acc.scale(c0.exp())
    }

    pub fn eval(&self, hbar: C64) -> C64 {
        self.terms.iter().rev().fold(C64::default(), |acc, c| acc * hbar + c)
    }
}

/// Coefficient ring element: a complex scalar or a truncated ℏ-polynomial.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Scalar(C64),
    Hbar(HbarPoly),
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient::Scalar(C64::default())
    }

    pub fn one() -> Self {
        Coefficient::Scalar(C64::new(1.0, 0.0))
    }

    pub fn scalar(re: f64, im: f64) -> Self {
        Coefficient::Scalar(C64::new(re, im))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Scalar(c) => c.norm() <= COEFF_ZERO_TOL,
            Coefficient::Hbar(p) => p.is_zero(),
        }
    }

    /// The ℏ⁰ part.
    pub fn constant_term(&self) -> C64 {
        match self {
            Coefficient::Scalar(c) => *c,
            Coefficient::Hbar(p) => p.coeff(0),
        }
    }

    pub fn eval(&self, hbar: C64) -> C64 {
        match self {
            Coefficient::Scalar(c) => *c,
            Coefficient::Hbar(p) => p.eval(hbar),
        }
    }

    fn magnitude(&self) -> f64 {
        match self {
            Coefficient::Scalar(c) => c.norm(),
            Coefficient::Hbar(p) => p.terms.iter().map(|c| c.norm()).fold(0.0, f64::max),
        }
    }

    pub fn add(&self, other: &Coefficient) -> Coefficient {
        use Coefficient::*;
        match (self, other) {
            (Scalar(a), Scalar(b)) => Scalar(a + b),
            (Scalar(a), Hbar(p)) | (Hbar(p), Scalar(a)) => {
                Hbar(p.add(&HbarPoly::constant(p.order, *a)))
            }
            (Hbar(p), Hbar(q)) => Hbar(p.add(q)),
        }
    }

    pub fn mul(&self, other: &Coefficient) -> Coefficient {
        use Coefficient::*;
        match (self, other) {
            (Scalar(a), Scalar(b)) => Scalar(a * b),
            (Scalar(a), Hbar(p)) | (Hbar(p), Scalar(a)) => Hbar(p.scale(*a)),
            (Hbar(p), Hbar(q)) => Hbar(p.mul(q)),
        }
    }

    pub fn neg(&self) -> Coefficient {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: C64) -> Coefficient {
        match self {
            Coefficient::Scalar(a) => Coefficient::Scalar(a * c),
            Coefficient::Hbar(p) => Coefficient::Hbar(p.scale(c)),
        }
    }

    pub fn inverse(&self) -> Option<Coefficient> {
        match self {
            Coefficient::Scalar(a) if a.norm() > COEFF_ZERO_TOL => Some(Coefficient::Scalar(a.inv())),
            Coefficient::Scalar(_) => None,
            Coefficient::Hbar(p) => p.inverse().map(Coefficient::Hbar),
        }
    }
}

impl Serialize for Coefficient {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Coefficient::Scalar(c) => [c.re, c.im].serialize(s),
            Coefficient::Hbar(p) => {
                let mut seq = s.serialize_seq(Some(p.terms.len()))?;
                for c in &p.terms {
                    seq.serialize_element(&[c.re, c.im])?;
                }
                seq.end()
            }
        }
    }
}

/// Finite Novikov series truncated at `cutoff` (`None` = no truncation).
#[derive(Clone, Debug, PartialEq)]
pub struct NovikovSeries {
    terms: Vec<(f64, Coefficient)>,
    cutoff: Option<f64>,
}

impl NovikovSeries {
    pub fn zero(cutoff: Option<f64>) -> Self {
        NovikovSeries { terms: Vec::new(), cutoff }
    }

    pub fn one(cutoff: Option<f64>) -> Self {
        Self::monomial(0.0, Coefficient::one(), cutoff)
    }

    pub fn monomial(exp: f64, coeff: Coefficient, cutoff: Option<f64>) -> Self {
        Self::from_terms(vec![(exp, coeff)], cutoff)
    }

    /// `c·T^exp` with a scalar coefficient.
    pub fn scalar_monomial(exp: f64, c: C64, cutoff: Option<f64>) -> Self {
        Self::monomial(exp, Coefficient::Scalar(c), cutoff)
    }

    pub fn from_terms(terms: Vec<(f64, Coefficient)>, cutoff: Option<f64>) -> Self {
        let mut s = NovikovSeries { terms, cutoff };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        let mut terms = std::mem::take(&mut self.terms);
        terms.retain(|(e, _)| e.is_finite());
        terms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, Coefficient)> = Vec::with_capacity(terms.len());
        for (e, c) in terms {
            match merged.last_mut() {
                Some((le, lc)) if exps_equal(*le, e) => *lc = lc.add(&c),
                _ => merged.push((e, c)),
            }
        }
        let cutoff = self.cutoff;
        merged.retain(|(e, c)| {
            !c.is_zero() && c.magnitude() > COEFF_ZERO_TOL && cutoff.is_none_or(|w| *e < w && !exps_equal(*e, w))
        });
        self.terms = merged;
    }

    pub fn terms(&self) -> &[(f64, Coefficient)] {
        &self.terms
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Smallest stored exponent, `+∞` for the zero series.
    pub fn valuation(&self) -> f64 {
        self.terms.first().map_or(f64::INFINITY, |t| t.0)
    }

    pub fn leading(&self) -> Option<&(f64, Coefficient)> {
        self.terms.first()
    }

    fn check(&self, other: &NovikovSeries) -> Result<(), NovikovError> {
        if cutoffs_equal(self.cutoff, other.cutoff) {
            Ok(())
        } else {
            Err(NovikovError::CutoffMismatch(self.cutoff, other.cutoff))
        }
    }

    pub fn add(&self, other: &NovikovSeries) -> Result<NovikovSeries, NovikovError> {
        self.check(other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self::from_terms(terms, self.cutoff))
    }

    pub fn sub(&self, other: &NovikovSeries) -> Result<NovikovSeries, NovikovError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> NovikovSeries {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: C64) -> NovikovSeries {
        self.mul_coeff(&Coefficient::Scalar(c))
    }

    pub fn mul_coeff(&self, c: &Coefficient) -> NovikovSeries {
        let terms = self.terms.iter().map(|(e, a)| (*e, a.mul(c))).collect();
        Self::from_terms(terms, self.cutoff)
    }

    /// Multiply by `T^shift`; exponents may become negative (the result then
    /// lives in the Novikov field rather than its valuation ring).
    pub fn shift(&self, shift: f64) -> NovikovSeries {
        let terms = self.terms.iter().map(|(e, a)| (e + shift, a.clone())).collect();
        Self::from_terms(terms, self.cutoff)
    }

    pub fn multiply(&self, other: &NovikovSeries) -> Result<NovikovSeries, NovikovError> {
        self.check(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea + eb;
                if self.cutoff.is_some_and(|w| e >= w || exps_equal(e, w)) {
                    continue;
                }
                terms.push((e, ca.mul(cb)));
            }
        }
        Ok(Self::from_terms(terms, self.cutoff))
    }

    /// Drop every term with exponent `>= w` (and tighten the cutoff).
    pub fn truncate(&self, w: f64) -> NovikovSeries {
        let cutoff = Some(self.cutoff.map_or(w, |c| c.min(w)));
        Self::from_terms(self.terms.clone(), cutoff)
    }

    pub fn with_cutoff(&self, cutoff: Option<f64>) -> NovikovSeries {
        Self::from_terms(self.terms.clone(), cutoff)
    }

    /// Substitute `T^c = e^{-c}` and `ℏ = hbar` in ℏ-polynomial coefficients.
    pub fn evaluate_at(&self, hbar: C64) -> C64 {
        self.terms
            .iter()
            .map(|(e, c)| c.eval(hbar) * (-e).exp())
            .sum()
    }

    /// Coefficient sitting at exponent `exp` (zero if absent).
    pub fn coeff_at(&self, exp: f64) -> Coefficient {
        self.terms
            .iter()
            .find(|(e, _)| exps_equal(*e, exp))
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Coefficient::zero)
    }

    /// Largest coefficient distance between two series (exponents matched
    /// with the merge tolerance); infinite when the supports differ.
    pub fn distance(&self, other: &NovikovSeries) -> f64 {
        let diff = match self.with_cutoff(None).sub(&other.with_cutoff(None)) {
            Ok(d) => d,
            Err(_) => return f64::INFINITY,
        };
        diff.terms.iter().map(|(_, c)| c.magnitude()).fold(0.0, f64::max)
    }

    pub fn from_json(value: &serde_json::Value, cutoff: Option<f64>, hbar_order: usize) -> Result<Self, NovikovError> {
        let arr = value
            .as_array()
            .ok_or_else(|| NovikovError::Json("series must be an array".into()))?;
        let mut terms = Vec::with_capacity(arr.len());
        for item in arr {
            let exp = item
                .get("exp")
                .and_then(|e| e.as_f64())
                .ok_or_else(|| NovikovError::Json("term without numeric exp".into()))?;
            let coeff = item
                .get("coeff")
                .ok_or_else(|| NovikovError::Json("term without coeff".into()))?;
            terms.push((exp, coeff_from_json(coeff, hbar_order)?));
        }
        Ok(Self::from_terms(terms, cutoff))
    }
}

fn pair(v: &serde_json::Value) -> Option<C64> {
    let a = v.as_array()?;
    if a.len() != 2 {
        return None;
    }
    Some(C64::new(a[0].as_f64()?, a[1].as_f64()?))
}

fn coeff_from_json(v: &serde_json::Value, hbar_order: usize) -> Result<Coefficient, NovikovError> {
    if let Some(c) = pair(v) {
        return Ok(Coefficient::Scalar(c));
    }
    let arr = v
        .as_array()
        .ok_or_else(|| NovikovError::Json("coeff must be [re, im] or [[re, im], ...]".into()))?;
    let terms = arr
        .iter()
        .map(|t| pair(t).ok_or_else(|| NovikovError::Json("bad ℏ-coefficient".into())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Coefficient::Hbar(HbarPoly::new(hbar_order, terms)))
}

impl Serialize for NovikovSeries {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Term<'a>(f64, &'a Coefficient);
        impl Serialize for Term<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("exp", &self.0)?;
                m.serialize_entry("coeff", self.1)?;
                m.end()
            }
        }
        let mut seq = s.serialize_seq(Some(self.terms.len()))?;
        for (e, c) in &self.terms {
            seq.serialize_element(&Term(*e, c))?;
        }
        seq.end()
    }
}

impl fmt::Display for NovikovSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            match c {
                Coefficient::Scalar(z) => write!(f, "({:.6}{:+.6}i)T^{:.6}", z.re, z.im, e)?,
                Coefficient::Hbar(p) => write!(f, "[ℏ-poly deg {}]T^{:.6}", p.terms.len().saturating_sub(1), e)?,
            }
        }
        Ok(())
    }
}

/// Square matrix over Novikov series sharing one cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct NovikovMatrix {
    n: usize,
    entries: Vec<NovikovSeries>,
    cutoff: Option<f64>,
}

impl NovikovMatrix {
    pub fn identity(n: usize, cutoff: Option<f64>) -> Self {
        let entries = (0..n * n)
            .map(|k| {
                if k / n == k % n {
                    NovikovSeries::one(cutoff)
                } else {
                    NovikovSeries::zero(cutoff)
                }
            })
            .collect();
        NovikovMatrix { n, entries, cutoff }
    }

    /// `I + x·E_{ij}` (0-based indices, `i != j`).
    pub fn elementary(n: usize, i: usize, j: usize, x: &NovikovSeries) -> Self {
        let mut m = Self::identity(n, x.cutoff());
        m.entries[i * n + j] = m.entries[i * n + j].add(x).expect("shared cutoff");
        m
    }

    pub fn diagonal(diag: &[Coefficient], cutoff: Option<f64>) -> Self {
        let n = diag.len();
        let mut m = Self::identity(n, cutoff);
        for (k, d) in diag.iter().enumerate() {
            m.entries[k * n + k] = NovikovSeries::monomial(0.0, d.clone(), cutoff);
        }
        m
    }

    /// Permutation-with-weights matrix: row `k` has `w[k]` in column `perm[k]`.
    pub fn monomial_matrix(perm: &[usize], w: &[Coefficient], cutoff: Option<f64>) -> Self {
        let n = perm.len();
        let mut entries = vec![NovikovSeries::zero(cutoff); n * n];
        for k in 0..n {
            entries[k * n + perm[k]] = NovikovSeries::monomial(0.0, w[k].clone(), cutoff);
        }
        NovikovMatrix { n, entries, cutoff }
    }

    pub fn from_entries(n: usize, entries: Vec<NovikovSeries>, cutoff: Option<f64>) -> Self {
        assert_eq!(entries.len(), n * n);
        let entries = entries.into_iter().map(|e| e.with_cutoff(cutoff)).collect();
        NovikovMatrix { n, entries, cutoff }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    pub fn get(&self, i: usize, j: usize) -> &NovikovSeries {
        &self.entries[i * self.n + j]
    }

    pub fn multiply(&self, other: &NovikovMatrix) -> Result<NovikovMatrix, NovikovError> {
        if self.n != other.n {
            return Err(NovikovError::DimensionMismatch(self.n, other.n));
        }
        if !cutoffs_equal(self.cutoff, other.cutoff) {
            return Err(NovikovError::CutoffMismatch(self.cutoff, other.cutoff));
        }
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut terms = Vec::new();
                for k in 0..n {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    terms.extend(a.multiply(b)?.terms);
                }
                entries.push(NovikovSeries::from_terms(terms, self.cutoff));
            }
        }
        Ok(NovikovMatrix { n, entries, cutoff: self.cutoff })
    }

    /// Conjugate-free rescaling `D·M·D⁻¹` entry (i,j) gets `d_i/d_j`, here
    /// expressed as a per-entry exponent shift `s_i - s_j`.
    pub fn shift_conjugate(&self, shifts: &[f64]) -> NovikovMatrix {
        let n = self.n;
        let entries = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                self.entries[k].shift(shifts[i] - shifts[j])
            })
            .collect();
        NovikovMatrix { n, entries, cutoff: self.cutoff }
    }

    /// Nonzero entries of `M - I`, 0-based `(row, col, series)`.
    pub fn deviation(&self) -> Vec<(usize, usize, NovikovSeries)> {
        let n = self.n;
        let one = NovikovSeries::one(self.cutoff);
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let e = self.get(i, j);
                let d = if i == j { e.sub(&one).expect("shared cutoff") } else { e.clone() };
                if !d.is_zero() {
                    out.push((i, j, d));
                }
            }
        }
        out
    }

    /// Smallest valuation among the entries of `M - I` (`+∞` for the identity).
    pub fn deviation_valuation(&self) -> f64 {
        self.deviation()
            .iter()
            .map(|(_, _, s)| s.valuation())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn truncate(&self, w: f64) -> NovikovMatrix {
        let entries: Vec<_> = self.entries.iter().map(|e| e.truncate(w)).collect();
        let cutoff = entries.first().and_then(|e| e.cutoff()).or(Some(w));
        NovikovMatrix { n: self.n, entries, cutoff }
    }

    pub fn specialize(&self, hbar: C64) -> Vec<Vec<C64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).evaluate_at(hbar)).collect())
            .collect()
    }

    pub fn distance(&self, other: &NovikovMatrix) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }
}

impl Serialize for NovikovMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[NovikovSeries]> = self.entries.chunks(self.n.max(1)).collect();
        rows.serialize(s)
    }
}

/// Multiply a list of complex matrices (row-major `Vec<Vec<_>>`).
pub fn complex_matmul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = a.len();
    let m = b.first().map_or(0, |r| r.len());
    let mut out = vec![vec![C64::default(); m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            let aik = a[i][k];
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}
