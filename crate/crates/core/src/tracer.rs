//! Tracing of Stokes curves `Im∫(ζ_i − ζ_j)dz = 0` parametrized by mass
//! `s = Re∫(ζ_i − ζ_j)dz`, i.e. solutions of `dz/ds = ♄/(ξ_i − ξ_j)`, and
//! detection of their intersections.

use std::collections::{BTreeMap, HashSet};

use num::complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algfun::{AlgError, SpectralData};
use crate::numeric::ode::{dopri5_step, step_factor};
use crate::numeric::quad::{integrate, QuadError};

pub type C64 = Complex64;

pub const TOL_IM: f64 = 1e-8;
pub const TOL_X_FACTOR: f64 = 1e-9;
const GERM_FACTOR: f64 = 20.0;
const RTOL: f64 = 1e-11;
const MAX_STEPS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("turning point {0} is not a simple double branch")]
    UnsupportedTurningPoint(C64),
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("germ construction failed at {0}: {1}")]
    Germ(C64, String),
    #[error("re-integration failed: {0}")]
    Reintegration(String),
}

#[derive(Clone, Debug)]
pub struct TraceConfig {
    pub mass_cap: f64,
    /// Curves leaving this radius are stopped (emulated pole at ∞).
    pub escape_radius: f64,
    /// Largest step in `z` (keeps polylines fine enough for intersection).
    pub max_dz: f64,
    pub rtol: f64,
    pub tol_im: f64,
}

impl TraceConfig {
    pub fn new(mass_cap: f64, window: f64) -> Self {
        TraceConfig { mass_cap, escape_radius: 1.25 * window, max_dz: 0.01 * window, rtol: RTOL, tol_im: TOL_IM }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, PartialOrd, Ord, Hash)]
#[serde(tag = "kind", content = "index", rename_all = "kebab-case")]
pub enum Source {
    TurningPoint(usize),
    Collision(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Terminus {
    Pole,
    MassCap,
    TurningPointHit { index: usize, matching: bool },
    Stalled { reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub z: C64,
    pub mass: f64,
    /// All sheet values, continued along the curve.
    pub roots: Vec<C64>,
}

/// Initial piece of a curve: source point, first point and sheet data.
#[derive(Clone, Debug)]
pub struct Germ {
    pub source: Source,
    pub origin: C64,
    pub first: Sample,
    /// Indices into `first.roots` of the sheets `(i, j)`.
    pub pair: (usize, usize),
    /// Canonical type at the first point.
    pub ty: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct StokesCurve {
    pub source: Source,
    pub ty: (usize, usize),
    pub pair: (usize, usize),
    pub samples: Vec<Sample>,
    pub terminus: Terminus,
    pub hbar: C64,
}

impl StokesCurve {
    pub fn end_mass(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.mass)
    }

    pub fn points(&self) -> Vec<C64> {
        self.samples.iter().map(|s| s.z).collect()
    }

    fn diff(&self, k: usize) -> C64 {
        let r = &self.samples[k].roots;
        r[self.pair.0] - r[self.pair.1]
    }

    /// Unit tangent at sample `k` (direction of increasing mass).
    pub fn tangent(&self, k: usize) -> C64 {
        let t = self.hbar / self.diff(k.max(1).min(self.samples.len() - 1));
        t / t.norm()
    }

    /// Canonical type at sample `k`.
    pub fn type_at(&self, s: &SpectralData, k: usize) -> Result<(usize, usize), AlgError> {
        let k = k.max(1).min(self.samples.len() - 1);
        let smp = &self.samples[k];
        let perm = s.label_at(smp.z, &smp.roots)?;
        Ok((perm[self.pair.0], perm[self.pair.1]))
    }

    /// Point and sheet values at mass `m`, re-integrated from the nearest
    /// stored sample below `m`.
    pub fn point_at_mass(&self, s: &SpectralData, m: f64) -> Result<Sample, TraceError> {
        let k = match self.samples.iter().rposition(|x| x.mass <= m) {
            Some(k) => k,
            None => 0,
        };
        let k = if k == 0 && self.samples.len() > 1 && matches!(self.source, Source::TurningPoint(_)) {
            // the first piece from a turning point is a chord; start at sample 1
            if m < self.samples[1].mass {
                return Ok(self.interpolate_first(m));
            }
            1
        } else {
            k
        };
        let start = &self.samples[k];
        integrate_pair(s, start, self.pair, m - start.mass, self.hbar)
    }

    fn interpolate_first(&self, m: f64) -> Sample {
        // near a turning point mass ∝ |z − v|^{3/2}
        let (a, b) = (&self.samples[0], &self.samples[1]);
        let t = (m / b.mass).max(0.0).powf(2.0 / 3.0);
        Sample { z: a.z + (b.z - a.z) * t, mass: m, roots: b.roots.clone() }
    }
}

fn rhs(s: &SpectralData, roots: &[C64], pair: (usize, usize), hbar: C64, z: C64) -> Option<C64> {
    let r = s.step_sheets(roots, z)?;
    let d = r[pair.0] - r[pair.1];
    if d.norm() == 0.0 {
        return None;
    }
    Some(hbar / d)
}

/// Integrate `dz/ds` over a mass increment `dm` from `start`.
fn integrate_pair(s: &SpectralData, start: &Sample, pair: (usize, usize), dm: f64, hbar: C64) -> Result<Sample, TraceError> {
    let mut cur = start.clone();
    if dm == 0.0 {
        return Ok(cur);
    }
    let mut done = 0.0;
    let mut h = dm;
    let mut guard = 0;
    while (dm - done).abs() > 0.0 {
        guard += 1;
        if guard > 10_000 {
            return Err(TraceError::Reintegration("too many steps".into()));
        }
        let hh = if h.abs() > (dm - done).abs() { dm - done } else { h };
        let roots = cur.roots.clone();
        let f = |_: f64, y: &[C64]| rhs(s, &roots, pair, hbar, y[0]).map(|v| vec![v]);
        match dopri5_step(&f, 0.0, &[cur.z], hh, 1e-13, 1e-15) {
            Some(step) if step.err <= 1.0 => {
                let z = step.y[0];
                let Some(r) = s.step_sheets(&cur.roots, z) else {
                    h = hh * 0.5;
                    continue;
                };
                cur = Sample { z, mass: cur.mass + hh, roots: r };
                done += hh;
                h = hh * step_factor(step.err);
            }
            Some(step) => h = hh * step_factor(step.err).min(0.9),
            None => h = hh * 0.25,
        }
        if h.abs() < 1e-15 * dm.abs().max(1e-300) {
            return Err(TraceError::Reintegration("step collapse".into()));
        }
    }
    Ok(cur)
}

/// Roots at `z` computed afresh.
fn fresh_roots(s: &SpectralData, z: C64) -> Vec<C64> {
    s.leading_roots(z)
}

/// The two roots at `z` closest to `target`, as indices.
fn closest_pair(roots: &[C64], target: C64) -> (usize, usize) {
    let mut idx: Vec<usize> = (0..roots.len()).collect();
    idx.sort_by(|&a, &b| (roots[a] - target).norm().total_cmp(&(roots[b] - target).norm()));
    (idx[0], idx[1])
}

/// `∫_v^{z1} (ξ_p − ξ_q) dz` along the segment, where `d1 = (ξ_p − ξ_q)(z1)`;
/// computed with `z = v + u²(z1 − v)` to remove the square-root endpoint.
fn germ_integral(s: &SpectralData, v: C64, z1: C64, xi_d: C64, d1: C64) -> Result<C64, TraceError> {
    let w = z1 - v;
    let val = integrate(
        |u| {
            if u == 0.0 {
                return C64::default();
            }
            let z = v + w * (u * u);
            let r = fresh_roots(s, z);
            let (a, b) = closest_pair(&r, xi_d);
            let mut d = r[a] - r[b];
            // branch: d/u is close to d1 along the whole segment
            if (d / u - d1).norm() > (-d / u - d1).norm() {
                d = -d;
            }
            d * w * (2.0 * u)
        },
        0.0,
        1.0,
        1e-15,
        1e-13,
    )?;
    Ok(val)
}

/// Three germs of Stokes curves from a simple turning point.
pub fn initial_rays(s: &SpectralData, tp_index: usize) -> Result<Vec<Germ>, TraceError> {
    let tp = &s.turning_points()[tp_index];
    if !tp.is_double_branch() {
        return Err(TraceError::UnsupportedTurningPoint(tp.z));
    }
    let v = tp.z;
    let (xi_d, _) = s.collision_at(v);
    let eps = GERM_FACTOR * s.delta_tp();
    let hbar = s.hbar();
    // local constant c in ξ_p − ξ_q ≈ c (z − v)^{1/2}
    let probe = v + C64::new(eps, 0.0);
    let r = fresh_roots(s, probe);
    let (a, b) = closest_pair(&r, xi_d);
    let c = (r[a] - r[b]) / C64::new(eps, 0.0).sqrt();
    let mut germs = Vec::with_capacity(3);
    for k in 0..3 {
        let mut theta = 2.0 / 3.0 * (hbar.arg() - c.arg() + k as f64 * std::f64::consts::PI);
        let mut z1 = v + C64::from_polar(eps, theta);
        let mut integral = C64::default();
        let mut roots = Vec::new();
        let mut pq = (0, 1);
        for _ in 0..8 {
            z1 = v + C64::from_polar(eps, theta);
            roots = fresh_roots(s, z1);
            pq = closest_pair(&roots, xi_d);
            let d1 = roots[pq.0] - roots[pq.1];
            integral = germ_integral(s, v, z1, xi_d, d1)?;
            let im = (integral / hbar).im;
            // d/dθ of ∫ is d1 · i(z1 − v)
            let dim = (d1 * C64::new(0.0, 1.0) * (z1 - v) / hbar).im;
            if dim == 0.0 {
                break;
            }
            let step = im / dim;
            theta -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let mut mass = (integral / hbar).re;
        if mass < 0.0 {
            pq = (pq.1, pq.0);
            mass = -mass;
        }
        if (integral / hbar).im.abs() > 1e-12 * mass.max(1e-300).max(1.0) * 10.0 {
            return Err(TraceError::Germ(v, format!("residual imaginary part {:e}", (integral / hbar).im)));
        }
        let first = Sample { z: z1, mass, roots: roots.clone() };
        let perm = s.label_at(z1, &roots)?;
        let ty = (perm[pq.0], perm[pq.1]);
        germs.push(Germ { source: Source::TurningPoint(tp_index), origin: v, first, pair: pq, ty });
    }
    Ok(germs)
}

/// Germ of an `(i, j)` curve (canonical labels at `c`) leaving the point `c`.
pub fn germ_from_point(s: &SpectralData, source: Source, c: C64, ty: (usize, usize)) -> Result<Germ, TraceError> {
    let roots = s.sheets_at_rerouted(c)?;
    let first = Sample { z: c, mass: 0.0, roots };
    Ok(Germ { source, origin: c, first, pair: ty, ty })
}

/// Integrate a germ until the mass cap, a pole, escape, or a turning point.
pub fn trace_curve(s: &SpectralData, germ: &Germ, cfg: &TraceConfig) -> StokesCurve {
    let hbar = s.hbar();
    let mut samples = Vec::new();
    if matches!(germ.source, Source::TurningPoint(_)) {
        let (xi_d, _) = s.collision_at(germ.origin);
        let mut r0 = germ.first.roots.clone();
        r0[germ.pair.0] = xi_d;
        r0[germ.pair.1] = xi_d;
        samples.push(Sample { z: germ.origin, mass: 0.0, roots: r0 });
    }
    samples.push(germ.first.clone());
    let tps = s.turning_points();
    let poles = s.finite_singular_points();
    let delta = s.delta_tp();
    let own_tp = match germ.source {
        Source::TurningPoint(k) => Some(k),
        Source::Collision(_) => None,
    };
    let mut cur = germ.first.clone();
    let scale = s.scale();
    let mut h = (0.5 * cur.mass).max(1e-6 * cfg.mass_cap.max(1e-3));
    let mut terminus = Terminus::MassCap;
    let mut steps = 0;
    while cur.mass < cfg.mass_cap {
        steps += 1;
        if steps > MAX_STEPS {
            terminus = Terminus::Stalled { reason: "step limit".into() };
            break;
        }
        // cap the z-step near critical points and globally
        let dcrit = tps
            .iter()
            .enumerate()
            .filter(|(k, _)| Some(*k) != own_tp || (cur.z - germ.origin).norm() > 2.0 * GERM_FACTOR * delta)
            .map(|(_, t)| (t.z - cur.z).norm())
            .chain(poles.iter().map(|p| (p - cur.z).norm()))
            .fold(f64::INFINITY, f64::min);
        let d = cur.roots[germ.pair.0] - cur.roots[germ.pair.1];
        let speed = (hbar / d).norm();
        let dz_cap = cfg.max_dz.min(0.25 * dcrit.max(delta));
        let hmax = dz_cap / speed;
        let hh = h.min(hmax).min(cfg.mass_cap - cur.mass);
        let roots = cur.roots.clone();
        let pair = germ.pair;
        let f = |_: f64, y: &[C64]| rhs(s, &roots, pair, hbar, y[0]).map(|v| vec![v]);
        let atol = 1e-13 * scale;
        match dopri5_step(&f, cur.mass, &[cur.z], hh, cfg.rtol, atol) {
            Some(step) if step.err <= 1.0 => {
                let z = step.y[0];
                match s.step_sheets(&cur.roots, z) {
                    Some(r) => {
                        let mass = if hh == cfg.mass_cap - cur.mass { cfg.mass_cap } else { cur.mass + hh };
                        cur = Sample { z, mass, roots: r };
                        samples.push(cur.clone());
                        h = hh * step_factor(step.err);
                    }
                    None => {
                        h = hh * 0.5;
                    }
                }
            }
            Some(step) => h = hh * step_factor(step.err).min(0.9),
            None => h = hh * 0.25,
        }
        if h < 1e-14 * cfg.mass_cap.max(1.0) {
            terminus = Terminus::Stalled { reason: format!("step collapse at {}", cur.z) };
            break;
        }
        if cur.z.norm() > cfg.escape_radius {
            terminus = Terminus::Pole;
            break;
        }
        if poles.iter().any(|p| (p - cur.z).norm() < delta) {
            terminus = Terminus::Pole;
            break;
        }
        let hit = tps.iter().enumerate().find(|(k, t)| {
            (t.z - cur.z).norm() < 2.0 * delta && (Some(*k) != own_tp || (cur.z - germ.origin).norm() > 0.0 && cur.mass > 2.0 * germ.first.mass)
        });
        if let Some((k, t)) = hit {
            let (xi_d, others) = s.collision_at(t.z);
            let sep = others.iter().map(|o| (o - xi_d).norm()).fold(f64::INFINITY, f64::min);
            let near = |x: C64| (x - xi_d).norm() < 0.25 * sep.min(1.0e300).max(1e-3);
            let matching = near(cur.roots[germ.pair.0]) && near(cur.roots[germ.pair.1]);
            if matching {
                terminus = Terminus::TurningPointHit { index: k, matching };
                break;
            }
        }
    }
    StokesCurve { source: germ.source, ty: germ.ty, pair: germ.pair, samples, terminus, hbar }
}

/// Trace several germs in parallel; output order follows input order.
pub fn trace_all(s: &SpectralData, germs: &[Germ], cfg: &TraceConfig) -> Vec<StokesCurve> {
    germs.par_iter().map(|g| trace_curve(s, g, cfg)).collect()
}

/// All generation-0 curves (three per turning point).
pub fn trace_initial(s: &SpectralData, cfg: &TraceConfig) -> Result<Vec<StokesCurve>, TraceError> {
    let mut germs = Vec::new();
    for k in 0..s.turning_points().len() {
        germs.extend(initial_rays(s, k)?);
    }
    Ok(trace_all(s, &germs, cfg))
}

/// Independent re-quadrature of `∫(ζ_i − ζ_j)dz` along the stored polyline:
/// returns `(max |Im|, max relative mass error)` over the samples.
pub fn requadrature(s: &SpectralData, c: &StokesCurve) -> Result<(f64, f64), TraceError> {
    let hbar = s.hbar();
    let mut acc = C64::default();
    let mut max_im: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let start = if matches!(c.source, Source::TurningPoint(_)) {
        let (xi_d, _) = s.collision_at(c.samples[0].z);
        let d1 = c.diff(1);
        acc = germ_integral(s, c.samples[0].z, c.samples[1].z, xi_d, d1)? / hbar;
        1
    } else {
        0
    };
    for k in start..c.samples.len() - 1 {
        let (a, b) = (&c.samples[k], &c.samples[k + 1]);
        let w = b.z - a.z;
        let ra = a.roots.clone();
        let pair = c.pair;
        let seg = integrate(
            |t| {
                let z = a.z + w * t;
                match s.step_sheets(&ra, z) {
                    Some(r) => (r[pair.0] - r[pair.1]) * w,
                    None => C64::new(f64::NAN, 0.0),
                }
            },
            0.0,
            1.0,
            1e-15,
            1e-13,
        )?;
        acc += seg / hbar;
        max_im = max_im.max(acc.im.abs());
        let rel = (acc.re - b.mass).abs() / b.mass.max(1e-300);
        max_rel = max_rel.max(rel);
    }
    Ok((max_im, max_rel))
}

/// One curve passing through a collision point.
#[derive(Clone, Debug, Serialize)]
pub struct CurveHit {
    pub curve: usize,
    /// Mass of the curve at the point.
    pub mass: f64,
    /// Canonical type at the point (0-based).
    #[serde(skip)]
    pub ty: (usize, usize),
    #[serde(skip)]
    pub tangent: C64,
    /// Sample index just before the point.
    pub segment: usize,
}

#[derive(Clone, Debug)]
pub struct Collision {
    pub point: C64,
    pub hits: Vec<CurveHit>,
    pub ordered: bool,
    pub cyclic: bool,
    pub transverse: bool,
}

/// Whether incident types chain as `(i, j), (j, k)` with distinct `i, j, k`.
pub fn is_ordered(types: &[(usize, usize)]) -> bool {
    types.iter().any(|&(i, j)| types.iter().any(|&(j2, k)| j2 == j && k != i && k != j))
}

/// Whether the directed graph of incident types has a cycle.
pub fn is_cyclic(types: &[(usize, usize)]) -> bool {
    let nodes: Vec<usize> = types.iter().flat_map(|&(a, b)| [a, b]).collect();
    let n = nodes.iter().max().map_or(0, |m| m + 1);
    // Kahn's algorithm
    let mut indeg = vec![0usize; n];
    let edges: HashSet<(usize, usize)> = types.iter().copied().collect();
    for &(_, b) in &edges {
        indeg[b] += 1;
    }
    let present: HashSet<usize> = nodes.into_iter().collect();
    let mut queue: Vec<usize> = present.iter().copied().filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop() {
        seen += 1;
        for &(a, b) in &edges {
            if a == v {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    queue.push(b);
                }
            }
        }
    }
    seen < present.len()
}

pub fn segment_intersection(p0: C64, p1: C64, q0: C64, q1: C64) -> Option<(f64, f64)> {
    let r = p1 - p0;
    let s = q1 - q0;
    let cross = |a: C64, b: C64| a.re * b.im - a.im * b.re;
    let denom = cross(r, s);
    if denom == 0.0 {
        return None;
    }
    let qp = q0 - p0;
    let t = cross(qp, s) / denom;
    let u = cross(qp, r) / denom;
    ((0.0..1.0).contains(&t) && (0.0..1.0).contains(&u)).then_some((t, u))
}

/// Refine an intersection by Newton on the two masses.
fn refine(s: &SpectralData, a: &StokesCurve, b: &StokesCurve, ma: f64, mb: f64, tol: f64) -> Result<(C64, f64, f64), TraceError> {
    let (mut ma, mut mb) = (ma, mb);
    let mut za = a.point_at_mass(s, ma)?;
    let mut zb = b.point_at_mass(s, mb)?;
    for _ in 0..12 {
        let f = za.z - zb.z;
        if f.norm() <= tol {
            break;
        }
        let da = a.hbar / (za.roots[a.pair.0] - za.roots[a.pair.1]);
        let db = b.hbar / (zb.roots[b.pair.0] - zb.roots[b.pair.1]);
        // solve da·x − db·y = −f for real x, y
        let det = da.re * (-db.im) - (-db.re) * da.im;
        if det.abs() < 1e-300 {
            break;
        }
        let x = ((-f.re) * (-db.im) - (-db.re) * (-f.im)) / det;
        let y = (da.re * (-f.im) - (-f.re) * da.im) / det;
        ma = (ma + x).clamp(0.0, a.end_mass());
        mb = (mb + y).clamp(0.0, b.end_mass());
        za = a.point_at_mass(s, ma)?;
        zb = b.point_at_mass(s, mb)?;
    }
    Ok((0.5 * (za.z + zb.z), ma, mb))
}

/// Pairwise intersections of curve polylines, refined and clustered.
pub fn detect_collisions(s: &SpectralData, curves: &[StokesCurve], tol_x: f64) -> Vec<Collision> {
    detect_collisions_from(s, curves, tol_x, 0)
}

/// Like [`detect_collisions`], restricted to pairs involving a curve with
/// index `>= new_from`.
pub fn detect_collisions_from(s: &SpectralData, curves: &[StokesCurve], tol_x: f64, new_from: usize) -> Vec<Collision> {
    let scale = s.scale();
    let cell = 0.05 * scale;
    let key = |z: C64| ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64);
    let mut grid: BTreeMap<(i64, i64), Vec<(usize, usize)>> = BTreeMap::new();
    for (ci, c) in curves.iter().enumerate() {
        for k in 0..c.samples.len().saturating_sub(1) {
            let (a, b) = (c.samples[k].z, c.samples[k + 1].z);
            let (x0, y0) = key(C64::new(a.re.min(b.re), a.im.min(b.im)));
            let (x1, y1) = key(C64::new(a.re.max(b.re), a.im.max(b.im)));
            for x in x0..=x1 {
                for y in y0..=y1 {
                    grid.entry((x, y)).or_default().push((ci, k));
                }
            }
        }
    }
    let mut raw: BTreeMap<(usize, usize, usize, usize), (f64, f64)> = BTreeMap::new();
    for segs in grid.values() {
        for (ia, &(ca, ka)) in segs.iter().enumerate() {
            for &(cb, kb) in &segs[ia + 1..] {
                if ca == cb || ca.max(cb) < new_from {
                    continue;
                }
                let (ca, ka, cb, kb) = if ca < cb { (ca, ka, cb, kb) } else { (cb, kb, ca, ka) };
                if raw.contains_key(&(ca, ka, cb, kb)) {
                    continue;
                }
                let (a, b) = (&curves[ca], &curves[cb]);
                let (p0, p1) = (a.samples[ka].z, a.samples[ka + 1].z);
                let (q0, q1) = (b.samples[kb].z, b.samples[kb + 1].z);
                if let Some((t, u)) = segment_intersection(p0, p1, q0, q1) {
                    let ma = a.samples[ka].mass + t * (a.samples[ka + 1].mass - a.samples[ka].mass);
                    let mb = b.samples[kb].mass + u * (b.samples[kb + 1].mass - b.samples[kb].mass);
                    raw.insert((ca, ka, cb, kb), (ma, mb));
                }
            }
        }
    }
    // curves from one turning point meet only at their common source
    let near_shared_source = |a: &StokesCurve, b: &StokesCurve, z: C64| match (a.source, b.source) {
        (Source::TurningPoint(i), Source::TurningPoint(j)) if i == j => {
            (s.turning_points()[i].z - z).norm() < 2.0 * GERM_FACTOR * s.delta_tp()
        }
        _ => false,
    };
    let refined: Vec<_> = raw
        .par_iter()
        .filter_map(|(&(ca, ka, cb, kb), &(ma, mb))| {
            let (a, b) = (&curves[ca], &curves[cb]);
            let p = a.samples[ka].z;
            if near_shared_source(a, b, p) {
                return None;
            }
            // a curve born on another one meets it at its own source
            let at_source = |c: &StokesCurve, m: f64| matches!(c.source, Source::Collision(_)) && m <= 1e-9 * c.end_mass().max(1.0);
            if at_source(a, ma) || at_source(b, mb) {
                return None;
            }
            let (z, ma, mb) = refine(s, a, b, ma, mb, tol_x).ok()?;
            if at_source(a, ma) || at_source(b, mb) {
                return None;
            }
            Some((z, ca, ma, ka, cb, mb, kb))
        })
        .collect();
    let cluster_tol = 1e-6 * scale;
    let mut out: Vec<Collision> = Vec::new();
    for (z, ca, ma, ka, cb, mb, kb) in refined {
        let idx = match out.iter().position(|c| (c.point - z).norm() < cluster_tol) {
            Some(i) => i,
            None => {
                out.push(Collision { point: z, hits: vec![], ordered: false, cyclic: false, transverse: true });
                out.len() - 1
            }
        };
        for (ci, m, k) in [(ca, ma, ka), (cb, mb, kb)] {
            if !out[idx].hits.iter().any(|h| h.curve == ci) {
                out[idx].hits.push(CurveHit { curve: ci, mass: m, ty: (0, 0), tangent: C64::default(), segment: k });
            }
        }
    }
    for col in out.iter_mut() {
        col.hits.sort_by_key(|h| h.curve);
        for h in col.hits.iter_mut() {
            let c = &curves[h.curve];
            if let Ok(smp) = c.point_at_mass(s, h.mass) {
                let t = c.hbar / (smp.roots[c.pair.0] - smp.roots[c.pair.1]);
                h.tangent = t / t.norm();
                if let Ok(perm) = s.label_at(col.point, &smp.roots) {
                    h.ty = (perm[c.pair.0], perm[c.pair.1]);
                }
            }
        }
        let types: Vec<(usize, usize)> = col.hits.iter().map(|h| h.ty).collect();
        col.ordered = is_ordered(&types);
        col.cyclic = is_cyclic(&types);
        col.transverse = col.hits.iter().enumerate().all(|(i, a)| {
            col.hits[i + 1..].iter().all(|b| (a.tangent.conj() * b.tangent).im.abs() > 1e-6)
        });
    }
    out.sort_by(|a, b| a.point.re.total_cmp(&b.point.re).then(a.point.im.total_cmp(&b.point.im)));
    out
}

/// A Stokes segment: a curve running into a turning point of its own pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StokesSegment {
    pub curve: usize,
    pub from: Source,
    pub to_turning_point: usize,
}

pub fn detect_stokes_segments(curves: &[StokesCurve]) -> Vec<StokesSegment> {
    curves
        .iter()
        .enumerate()
        .filter_map(|(k, c)| match c.terminus {
            Terminus::TurningPointHit { index, matching: true } => Some(StokesSegment { curve: k, from: c.source, to_turning_point: index }),
            _ => None,
        })
        .collect()
}
