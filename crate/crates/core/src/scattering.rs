//! Spectral scattering diagrams: walls with Novikov coefficients, monodromy
//! at collision points, consistency modulo `T^w` and the inductive
//! construction of new walls.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::algfun::{AlgError, SpectralData};
use crate::novikov::{Coefficient, HbarPoly, NovikovError, NovikovMatrix, NovikovSeries};
use crate::registry::{Registry, UnknownStrategy};
use crate::tracer::{
    detect_collisions_from, germ_from_point, trace_all, trace_initial, Collision, Germ, Sample, Source, StokesCurve, TraceConfig,
    TraceError, TOL_IM, TOL_X_FACTOR,
};
use crate::wkb::{turning_point_normalization, BranchTracker, WkbError, WkbSeries};

pub type C64 = num::complex::Complex64;

/// Slack for comparisons of exponents computed from traced masses.
pub const WEIGHT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatteringError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error(transparent)]
    Novikov(#[from] NovikovError),
    #[error(transparent)]
    Wkb(#[from] WkbError),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
    #[error("local consistency fails at turning point {0}: {1}")]
    TurningPoint(usize, String),
    #[error("cyclic monodromy at collision {0}: entries ({1},{2}) and ({2},{1}) both nonzero")]
    Cyclic(usize, usize, usize),
    #[error("weight law violated at collision {collision}: deviation valuation {found} < {bound}")]
    WeightLaw { collision: usize, found: f64, bound: f64 },
    #[error("wall {wall} of generation {generation} has weight {weight} < {bound}")]
    Generation { wall: usize, generation: usize, weight: f64, bound: f64 },
    #[error("normalization: {0}")]
    Normalization(String),
    #[error("point {0} is beyond the traced extent of wall {1}")]
    Extent(f64, usize),
    #[error("w_min is not positive ({0})")]
    WMin(f64),
}

#[derive(Clone, Debug)]
pub struct Wall {
    pub id: usize,
    pub curve: StokesCurve,
    pub phi: NovikovSeries,
    pub ty: (usize, usize),
    pub generation: usize,
    /// Optional diagonal edge matrix `A` carried by the wall (identity if `None`).
    pub edge_matrix: Option<Vec<Coefficient>>,
}

impl Wall {
    /// `w = val(φ)`.
    pub fn weight(&self) -> f64 {
        self.phi.valuation()
    }

    /// Weight at a point of the wall: `val(φ) + mass`.
    pub fn weight_at(&self, mass: f64) -> f64 {
        self.weight() + mass
    }
}

/// One wall meeting a collision point.
#[derive(Clone, Debug)]
pub struct Incidence {
    pub wall: usize,
    pub mass: f64,
    pub ty: (usize, usize),
    /// Unit tangent in the direction of increasing mass.
    pub tangent: C64,
    pub incoming: bool,
    pub outgoing: bool,
}

/// A factor of `M(c)`: the wall crossed at `angle`, inverted if `inverse`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub angle: f64,
    pub inverse: bool,
}

/// How a wall incident to a collision contributes to `M(c)`.
pub trait MonodromyRule: Send + Sync {
    fn name(&self) -> &'static str;
    fn crossings(&self, inc: &Incidence) -> Vec<Crossing>;
}

/// A small counterclockwise loop around `c` crosses every half-ray once:
/// outgoing half-rays right to left, incoming ones left to right.
pub struct HalfRayRule;

impl MonodromyRule for HalfRayRule {
    fn name(&self) -> &'static str {
        "half-ray"
    }

    fn crossings(&self, inc: &Incidence) -> Vec<Crossing> {
        let a = inc.tangent.arg().rem_euclid(2.0 * PI);
        let mut out = Vec::new();
        if inc.outgoing {
            out.push(Crossing { angle: a, inverse: false });
        }
        if inc.incoming {
            out.push(Crossing { angle: (a + PI).rem_euclid(2.0 * PI), inverse: true });
        }
        out
    }
}

/// One factor `id + M E_ij` per incident curve, ordered by tangent angle.
pub struct PerCurveRule;

impl MonodromyRule for PerCurveRule {
    fn name(&self) -> &'static str {
        "per-curve"
    }

    fn crossings(&self, inc: &Incidence) -> Vec<Crossing> {
        vec![Crossing { angle: inc.tangent.arg().rem_euclid(2.0 * PI), inverse: false }]
    }
}

pub fn monodromy_rules() -> Registry<dyn MonodromyRule> {
    Registry::new("monodromy rule").register("half-ray", || Box::new(HalfRayRule) as Box<dyn MonodromyRule>).register("per-curve", || Box::new(PerCurveRule) as Box<dyn MonodromyRule>)
}

/// Everything a normalization scheme may need about the curve.
pub struct NormContext<'a> {
    pub spectral: &'a SpectralData,
    pub hbar_order: usize,
    pub wkb: Option<(WkbSeries, BranchTracker)>,
}

impl<'a> NormContext<'a> {
    pub fn new(spectral: &'a SpectralData, hbar_order: usize, needs_wkb: bool) -> Result<Self, ScatteringError> {
        let wkb = if needs_wkb {
            if !spectral.is_schrodinger() {
                return Err(ScatteringError::Normalization("formal normalization needs a Schrödinger-form curve".into()));
            }
            let q = spectral.potential()?;
            let series = WkbSeries::from_spectral(spectral, hbar_order + 1)?;
            let tracker = BranchTracker::new(&q[0]);
            Some((series, tracker))
        } else {
            None
        };
        Ok(NormContext { spectral, hbar_order, wkb })
    }
}

/// The ratio `m_{γ,i} m_{γ,j}^{-1}` at a point of a wall.
pub trait NormalizationScheme: Send + Sync {
    fn name(&self) -> &'static str;
    fn needs_wkb(&self) -> bool {
        false
    }
    fn factor(&self, ctx: &NormContext, wall: &Wall, at: &Sample) -> Result<Coefficient, ScatteringError>;
}

pub struct TrivialNormalization;

impl NormalizationScheme for TrivialNormalization {
    fn name(&self) -> &'static str {
        "trivial"
    }

    fn factor(&self, _: &NormContext, _: &Wall, _: &Sample) -> Result<Coefficient, ScatteringError> {
        Ok(Coefficient::one())
    }
}

/// `exp ∫_v^c Σ_{m≥1} ℏ^m (P_m^{(i)} − P_m^{(j)})` with the turning-point
/// normalization of the odd part; rank 2 only. Walls born at collisions carry
/// factor 1 (rank 2 has no ordered collisions).
pub struct FormalNormalization;

impl NormalizationScheme for FormalNormalization {
    fn name(&self) -> &'static str {
        "formal"
    }

    fn needs_wkb(&self) -> bool {
        true
    }

    fn factor(&self, ctx: &NormContext, wall: &Wall, at: &Sample) -> Result<Coefficient, ScatteringError> {
        let Source::TurningPoint(k) = wall.curve.source else {
            return Ok(Coefficient::one());
        };
        let (series, tracker) = ctx.wkb.as_ref().ok_or_else(|| ScatteringError::Normalization("missing WKB data".into()))?;
        let v = ctx.spectral.turning_points()[k].z;
        if (at.z - v).norm() < 1e-12 * ctx.spectral.scale() {
            return Ok(Coefficient::Hbar(HbarPoly::constant(ctx.hbar_order, C64::new(1.0, 0.0))));
        }
        let root = at.roots[wall.curve.pair.0];
        let vals = turning_point_normalization(series, tracker, v, at.z, root)?;
        let mut terms = vec![C64::default(); ctx.hbar_order + 1];
        for (m, x) in vals {
            if m >= 1 && (m as usize) <= ctx.hbar_order {
                terms[m as usize] = 2.0 * x;
            }
        }
        Ok(Coefficient::Hbar(HbarPoly::new(ctx.hbar_order, terms).exp()))
    }
}

pub fn normalization_schemes() -> Registry<dyn NormalizationScheme> {
    Registry::new("normalization scheme")
        .register("trivial", || Box::new(TrivialNormalization) as Box<dyn NormalizationScheme>)
        .register("formal", || Box::new(FormalNormalization) as Box<dyn NormalizationScheme>)
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizationData {
    pub mode: String,
    pub hbar_order: usize,
}

#[derive(Clone, Debug)]
pub struct ScatteringDiagram {
    pub walls: Vec<Wall>,
    pub collisions: Vec<Collision>,
    pub normalization: NormalizationData,
    /// Largest `w` at which the diagram has been verified consistent.
    pub consistency_level: f64,
    pub cutoff: f64,
    pub w_min: f64,
    pub rule: String,
}

/// Runtime strategies and tolerances shared by the scattering operations.
pub struct ScatteringContext<'a> {
    pub spectral: &'a SpectralData,
    pub rule: Box<dyn MonodromyRule>,
    pub scheme: Box<dyn NormalizationScheme>,
    pub norm: NormContext<'a>,
    pub window: f64,
    pub tol_x: f64,
    pub tol_im: f64,
}

impl<'a> ScatteringContext<'a> {
    pub fn new(spectral: &'a SpectralData, rule: &str, scheme: &str, hbar_order: usize, window: f64) -> Result<Self, ScatteringError> {
        let rule = monodromy_rules().create(rule)?;
        let scheme = normalization_schemes().create(scheme)?;
        let norm = NormContext::new(spectral, hbar_order, scheme.needs_wkb())?;
        Ok(ScatteringContext { spectral, rule, scheme, norm, window, tol_x: TOL_X_FACTOR * spectral.scale(), tol_im: TOL_IM })
    }

    fn trace_config(&self, mass_cap: f64) -> TraceConfig {
        TraceConfig { tol_im: self.tol_im, ..TraceConfig::new(mass_cap, self.window) }
    }
}

/// `∏ (id + x E_ij)` around a turning point must equal the local monodromy
/// `C_v`; the wall factors carry the twist `κ = −i`.
pub const TURNING_POINT_TWIST: C64 = C64::new(0.0, -1.0);

fn turning_point_check(s: &SpectralData, k: usize, walls: &[&Wall], cutoff: f64) -> Result<(), ScatteringError> {
    let v = s.turning_points()[k].z;
    let n = s.rank();
    let cut = (v - s.labeling().base).arg();
    let mut rays: Vec<(f64, &Wall)> = walls.iter().map(|w| (((w.curve.samples[1].z - v).arg() - cut).rem_euclid(2.0 * PI), *w)).collect();
    rays.sort_by(|a, b| a.0.total_cmp(&b.0));
    let one = Some(cutoff);
    let mut m = NovikovMatrix::identity(n, one);
    let mut pair = BTreeSet::new();
    for (_, w) in &rays {
        pair.insert(w.ty.0);
        pair.insert(w.ty.1);
        let x = w.phi.with_cutoff(one).scale(TURNING_POINT_TWIST);
        m = m.multiply(&NovikovMatrix::elementary(n, w.ty.0, w.ty.1, &x))?;
    }
    if pair.len() != 2 || rays.len() != 3 {
        return Err(ScatteringError::TurningPoint(k, format!("ray types {:?}", rays.iter().map(|r| r.1.ty).collect::<Vec<_>>())));
    }
    let p: Vec<usize> = pair.into_iter().collect();
    // C_v = −i · (transposition of the colliding sheets) ⊕ id
    let mut perm: Vec<usize> = (0..n).collect();
    perm.swap(p[0], p[1]);
    let w: Vec<Coefficient> = (0..n).map(|r| if p.contains(&r) { Coefficient::scalar(0.0, -1.0) } else { Coefficient::one() }).collect();
    let cv = NovikovMatrix::monomial_matrix(&perm, &w, one);
    let check = m.multiply(&cv)?;
    let dev = check.deviation();
    if dev.iter().any(|(_, _, x)| x.valuation() < cutoff) {
        return Err(ScatteringError::TurningPoint(k, format!("deviation {:?}", dev.iter().map(|d| (d.0, d.1)).collect::<Vec<_>>())));
    }
    Ok(())
}

/// One wall per generation-0 Stokes curve with `φ = −1`.
pub fn initial_diagram(ctx: &ScatteringContext, cutoff: f64) -> Result<ScatteringDiagram, ScatteringError> {
    let s = ctx.spectral;
    let cfg = ctx.trace_config(cutoff);
    let curves = trace_initial(s, &cfg)?;
    let walls: Vec<Wall> = curves
        .into_iter()
        .enumerate()
        .map(|(id, c)| Wall {
            id,
            ty: c.ty,
            curve: c,
            phi: NovikovSeries::scalar_monomial(0.0, C64::new(-1.0, 0.0), Some(cutoff)),
            generation: 0,
            edge_matrix: None,
        })
        .collect();
    for k in 0..s.turning_points().len() {
        let at: Vec<&Wall> = walls.iter().filter(|w| w.curve.source == Source::TurningPoint(k)).collect();
        turning_point_check(s, k, &at, cutoff)?;
    }
    let curves: Vec<StokesCurve> = walls.iter().map(|w| w.curve.clone()).collect();
    let collisions = detect_collisions_from(s, &curves, ctx.tol_x, 0);
    Ok(ScatteringDiagram {
        walls,
        collisions,
        normalization: NormalizationData { mode: ctx.scheme.name().into(), hbar_order: ctx.norm.hbar_order },
        consistency_level: 0.0,
        cutoff,
        w_min: f64::NAN,
        rule: ctx.rule.name().into(),
    })
}

/// `M_l(c) = m_i m_j^{-1} φ T^{mass(c)}`.
pub fn wall_factor(ctx: &ScatteringContext, wall: &Wall, mass: f64) -> Result<NovikovSeries, ScatteringError> {
    let end = wall.curve.end_mass();
    if mass < -WEIGHT_TOL || mass > end * (1.0 + 1e-12) + WEIGHT_TOL {
        return Err(ScatteringError::Extent(mass, wall.id));
    }
    let at = wall.curve.point_at_mass(ctx.spectral, mass.clamp(0.0, end))?;
    let m = ctx.scheme.factor(&ctx.norm, wall, &at)?;
    Ok(wall.phi.shift(mass).mul_coeff(&m))
}

/// Walls meeting collision `k`: those passing through it and those born there.
pub fn incidences(d: &ScatteringDiagram, k: usize) -> Vec<Incidence> {
    let col = &d.collisions[k];
    let mut out: Vec<Incidence> = col
        .hits
        .iter()
        .map(|h| {
            let end = d.walls[h.curve].curve.end_mass();
            Incidence {
                wall: h.curve,
                mass: h.mass,
                ty: h.ty,
                tangent: h.tangent,
                incoming: h.mass > WEIGHT_TOL,
                outgoing: h.mass < end - WEIGHT_TOL,
            }
        })
        .collect();
    for w in d.walls.iter().filter(|w| w.curve.source == Source::Collision(k)) {
        if w.curve.samples.len() < 2 {
            continue;
        }
        out.push(Incidence { wall: w.id, mass: 0.0, ty: w.ty, tangent: w.curve.tangent(0), incoming: false, outgoing: true });
    }
    out
}

/// `M(c)`: ordered product of the crossing factors counterclockwise from angle 0.
pub fn point_monodromy(ctx: &ScatteringContext, d: &ScatteringDiagram, k: usize) -> Result<NovikovMatrix, ScatteringError> {
    let n = ctx.spectral.rank();
    let cutoff = Some(d.cutoff);
    let mut factors: Vec<(f64, usize, NovikovMatrix)> = Vec::new();
    for inc in incidences(d, k) {
        let wall = &d.walls[inc.wall];
        let x = wall_factor(ctx, wall, inc.mass)?.with_cutoff(cutoff).truncate(d.cutoff);
        for cr in ctx.rule.crossings(&inc) {
            let xx = if cr.inverse { x.neg() } else { x.clone() };
            let mut f = NovikovMatrix::elementary(n, inc.ty.0, inc.ty.1, &xx);
            if let Some(a) = &wall.edge_matrix {
                f = NovikovMatrix::diagonal(a, cutoff).multiply(&f)?;
            }
            factors.push((cr.angle, inc.wall, f));
        }
    }
    factors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut m = NovikovMatrix::identity(n, cutoff);
    for (_, _, f) in &factors {
        m = m.multiply(f)?;
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && !m.get(i, j).is_zero() && !m.get(j, i).is_zero() {
                return Err(ScatteringError::Cyclic(k, i, j));
            }
        }
    }
    Ok(m)
}

/// Lower bound for the deviation valuation: the two smallest incident weights.
pub fn weight_law_bound(d: &ScatteringDiagram, k: usize) -> f64 {
    let mut w: Vec<f64> = incidences(d, k).iter().map(|i| d.walls[i.wall].weight_at(i.mass)).collect();
    w.sort_by(f64::total_cmp);
    if w.len() < 2 {
        return f64::INFINITY;
    }
    w[0] + w[1]
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviationEntry {
    pub row: usize,
    pub col: usize,
    pub valuation: f64,
    pub series: NovikovSeries,
}

#[derive(Clone, Debug, Serialize)]
pub struct CollisionFailure {
    pub collision: usize,
    #[serde(serialize_with = "ser_c64")]
    pub point: C64,
    pub entries: Vec<DeviationEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub w: f64,
    pub consistent: bool,
    /// Smallest deviation valuation over all collisions (`∞` if none).
    pub level: f64,
    pub failures: Vec<CollisionFailure>,
}

fn ser_c64<S: serde::Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// Deviation of `M(c)` from the identity below `T^w`, per collision.
pub fn consistency_check(ctx: &ScatteringContext, d: &ScatteringDiagram, w: f64) -> Result<ConsistencyReport, ScatteringError> {
    let mut failures = Vec::new();
    let mut level = f64::INFINITY;
    for k in 0..d.collisions.len() {
        let m = point_monodromy(ctx, d, k)?;
        let val = m.deviation_valuation();
        let bound = weight_law_bound(d, k);
        if ctx.rule.name() == "half-ray" && val < bound - WEIGHT_TOL {
            return Err(ScatteringError::WeightLaw { collision: k, found: val, bound });
        }
        level = level.min(val);
        let entries: Vec<DeviationEntry> = m
            .deviation()
            .into_iter()
            .filter(|(_, _, x)| x.valuation() < w - WEIGHT_TOL)
            .map(|(row, col, series)| DeviationEntry { row, col, valuation: series.valuation(), series })
            .collect();
        if !entries.is_empty() {
            failures.push(CollisionFailure { collision: k, point: d.collisions[k].point, entries });
        }
    }
    Ok(ConsistencyReport { w, consistent: failures.is_empty(), level, failures })
}

/// Add one wall per deviation entry at every collision, in `order`.
pub fn inductive_step_ordered(ctx: &ScatteringContext, d: &ScatteringDiagram, order: &[usize]) -> Result<ScatteringDiagram, ScatteringError> {
    let s = ctx.spectral;
    let mut plans: Vec<(Germ, NovikovSeries, usize, f64)> = Vec::new();
    for &k in order {
        let m = point_monodromy(ctx, d, k)?;
        let gen = incidences(d, k).iter().map(|i| d.walls[i.wall].generation).max().unwrap_or(0) + 1;
        let c = d.collisions[k].point;
        for (i, j, dev) in m.deviation() {
            let phi = dev.neg().truncate(d.cutoff);
            if phi.is_zero() {
                continue;
            }
            let cap = d.cutoff - phi.valuation();
            if cap <= 0.0 {
                continue;
            }
            let germ = germ_from_point(s, Source::Collision(k), c, (i, j))?;
            plans.push((germ, phi, gen, cap));
        }
    }
    let mut out = d.clone();
    if plans.is_empty() {
        return Ok(out);
    }
    let curves: Vec<StokesCurve> = {
        use rayon::prelude::*;
        plans.par_iter().map(|(g, _, _, cap)| trace_all(s, std::slice::from_ref(g), &ctx.trace_config(*cap)).remove(0)).collect()
    };
    let first_new = out.walls.len();
    for ((germ, phi, gen, _), curve) in plans.into_iter().zip(curves) {
        let id = out.walls.len();
        out.walls.push(Wall { id, ty: germ.ty, curve, phi, generation: gen, edge_matrix: None });
    }
    let all: Vec<StokesCurve> = out.walls.iter().map(|w| w.curve.clone()).collect();
    for col in detect_collisions_from(s, &all, ctx.tol_x, first_new) {
        match out.collisions.iter_mut().find(|c| (c.point - col.point).norm() < 1e-6 * s.scale()) {
            Some(existing) => {
                for h in col.hits {
                    if !existing.hits.iter().any(|x| x.curve == h.curve) {
                        existing.hits.push(h);
                    }
                }
                let types: Vec<_> = existing.hits.iter().map(|h| h.ty).collect();
                existing.ordered = crate::tracer::is_ordered(&types);
                existing.cyclic = crate::tracer::is_cyclic(&types);
            }
            None => out.collisions.push(col),
        }
    }
    Ok(out)
}

pub fn inductive_step(ctx: &ScatteringContext, d: &ScatteringDiagram) -> Result<ScatteringDiagram, ScatteringError> {
    let order: Vec<usize> = (0..d.collisions.len()).collect();
    inductive_step_ordered(ctx, d, &order)
}

/// Mass of a traced curve when it first leaves the disk `|z − v| < r`.
fn exit_mass(c: &StokesCurve, v: C64, r: f64) -> f64 {
    for w in c.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if (b.z - v).norm() >= r {
            let (da, db) = ((a.z - v).norm(), (b.z - v).norm());
            let t = if db > da { ((r - da) / (db - da)).clamp(0.0, 1.0) } else { 1.0 };
            return a.mass + t * (b.mass - a.mass);
        }
    }
    c.end_mass()
}

#[derive(Clone, Debug, Serialize)]
pub struct WMinReport {
    pub w_min: f64,
    /// Per turning point: `(d(U_v), d(V_v), d_v / 2)`.
    pub terms: Vec<[f64; 3]>,
}

/// `w_min = min_v {d(U_v), d(V_v), d_v / 2}` from the generation-0 curves.
pub fn compute_w_min(s: &SpectralData, curves: &[StokesCurve], collisions: &[Collision]) -> Result<WMinReport, ScatteringError> {
    let tps = s.turning_point_locations();
    let mut terms = Vec::new();
    let mut w_min = f64::INFINITY;
    for (k, &v) in tps.iter().enumerate() {
        let own: Vec<&StokesCurve> = curves.iter().filter(|c| c.source == Source::TurningPoint(k)).collect();
        // U_v: largest disk free of other singular points, collisions and foreign curves
        let mut r = tps
            .iter()
            .chain(s.finite_singular_points())
            .filter(|z| (*z - v).norm() > 0.0)
            .map(|z| 0.5 * (z - v).norm())
            .fold(f64::INFINITY, f64::min);
        for col in collisions {
            r = r.min((col.point - v).norm());
        }
        for c in curves.iter().filter(|c| c.source != Source::TurningPoint(k)) {
            for p in &c.samples {
                r = r.min((p.z - v).norm());
            }
        }
        if !r.is_finite() {
            r = 4.0 * s.scale();
        }
        let d_u = own.iter().map(|c| exit_mass(c, v, r)).fold(f64::INFINITY, f64::min);
        let d_v_nbhd = if s.rank() == 2 { f64::INFINITY } else { own.iter().map(|c| exit_mass(c, v, 0.5 * r)).fold(f64::INFINITY, f64::min) };
        // d_v: flat distance to the nearest other turning point along the chord
        let mut d_v = f64::INFINITY;
        for &u in tps.iter().filter(|u| (**u - v).norm() > 0.0) {
            let m = flat_length(s, v, u)?;
            d_v = d_v.min(m);
        }
        let t = [d_u, d_v_nbhd, 0.5 * d_v];
        w_min = w_min.min(t.iter().copied().fold(f64::INFINITY, f64::min));
        terms.push(t);
    }
    if !(w_min > 0.0) {
        return Err(ScatteringError::WMin(w_min));
    }
    Ok(WMinReport { w_min, terms })
}

/// `∫ min_{i≠j} |ξ_i − ξ_j| |dz| / |♄|` along the segment `[a, b]`.
fn flat_length(s: &SpectralData, a: C64, b: C64) -> Result<f64, ScatteringError> {
    let n = 400;
    let hbar = s.hbar().norm();
    let mut total = 0.0;
    // midpoint rule; the endpoints are square-root zeros
    for k in 0..n {
        let z = a + (b - a) * ((k as f64 + 0.5) / n as f64);
        let r = s.leading_roots(z);
        let mut d = f64::INFINITY;
        for x in 0..r.len() {
            for y in x + 1..r.len() {
                d = d.min((r[x] - r[y]).norm());
            }
        }
        total += d * (b - a).norm() / n as f64;
    }
    let best = total / hbar;
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScatteringRun {
    pub generations: usize,
    pub reports: Vec<ConsistencyReport>,
    pub w_min: WMinReport,
}

/// Iterate the inductive step until consistent modulo `T^W` or
/// `⌈W / w_min⌉` generations have been added.
pub fn run_scattering(ctx: &ScatteringContext, cutoff: f64, w_min_override: Option<f64>) -> Result<(ScatteringDiagram, ScatteringRun), ScatteringError> {
    let mut d = initial_diagram(ctx, cutoff)?;
    let curves: Vec<StokesCurve> = d.walls.iter().map(|w| w.curve.clone()).collect();
    let mut wm = if ctx.spectral.turning_points().is_empty() {
        WMinReport { w_min: cutoff, terms: vec![] }
    } else {
        compute_w_min(ctx.spectral, &curves, &d.collisions)?
    };
    if let Some(w) = w_min_override {
        if !(w > 0.0) {
            return Err(ScatteringError::WMin(w));
        }
        wm.w_min = w;
    }
    d.w_min = wm.w_min;
    let max_gen = (cutoff / wm.w_min).ceil() as usize;
    let mut reports = Vec::new();
    let mut generations = 0;
    loop {
        let rep = consistency_check(ctx, &d, cutoff)?;
        d.consistency_level = rep.level.min(cutoff);
        let done = rep.consistent;
        reports.push(rep);
        if done || generations >= max_gen {
            break;
        }
        let next = inductive_step(ctx, &d)?;
        generations += 1;
        if next.walls.len() == d.walls.len() {
            d = next;
            break;
        }
        d = next;
        for w in &d.walls {
            let bound = w.generation as f64 * d.w_min;
            if w.weight() < bound - WEIGHT_TOL {
                return Err(ScatteringError::Generation { wall: w.id, generation: w.generation, weight: w.weight(), bound });
            }
        }
    }
    Ok((d, ScatteringRun { generations, reports, w_min: wm }))
}
