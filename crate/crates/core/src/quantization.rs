//! Gluing data of the sheaf quantization attached to a consistent scattering
//! diagram, loop compositions, and microlocal monodromy along cycles.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::algfun::{match_labels, AlgError, SpectralData};
use crate::graph::{EdgeKind, StokesGraph, VertexKind};
use crate::novikov::{Coefficient, HbarPoly, NovikovError, NovikovMatrix, NovikovSeries};
use crate::numeric::quad::{integrate, QuadError};
use crate::registry::{Registry, UnknownStrategy};
use crate::scattering::{consistency_check, wall_factor, ScatteringContext, ScatteringDiagram, ScatteringError};
use crate::tracer::segment_intersection;
use crate::wkb::{voros_symbol, BranchTracker, Cycle, CycleKind, WkbError, WkbSeries};

pub type C64 = num::complex::Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantError {
    #[error("diagram is not consistent below T^{w}: collisions {collisions:?}")]
    Inconsistent { w: f64, collisions: Vec<usize> },
    #[error("loop passes through a singular point near {0}; reroute it")]
    Reroute(C64),
    #[error("cycle crosses a pole near {0}")]
    InvalidCycle(C64),
    #[error("sheet tracking failed: {0}")]
    Sheets(String),
    #[error("spin twist '{rule}' has no sign for cycle kind {kind:?}")]
    NoTwist { rule: &'static str, kind: CycleKind },
    #[error("microlocalization needs rank 2")]
    NotRankTwo,
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error(transparent)]
    Novikov(#[from] NovikovError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Wkb(#[from] WkbError),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
}

/// Continue all sheets along `[a, b]` from `vals` at `a`; also returns
/// `∫_a^b ξ_k dz` for every sheet.
pub fn segment_primitives(s: &SpectralData, a: C64, b: C64, vals: &[C64]) -> Result<(Vec<C64>, Vec<C64>), QuantError> {
    let n = vals.len();
    let mut cur = vals.to_vec();
    let mut total = vec![C64::default(); n];
    let mut t = 0.0;
    let mut h: f64 = 1.0;
    while t < 1.0 {
        let tn = (t + h).min(1.0);
        let (za, zb) = (a + (b - a) * t, a + (b - a) * tn);
        let Some(next) = s.step_sheets(&cur, zb) else {
            h *= 0.5;
            if h < 1e-12 {
                return Err(QuantError::Sheets(format!("continuation stalls near {za}")));
            }
            continue;
        };
        // per-piece quadrature using the piece's starting values as anchors
        let anchor = cur.clone();
        let w = zb - za;
        let piece: Result<Vec<C64>, QuadError> = (0..n)
            .map(|k| {
                integrate(
                    |u| match s.step_sheets(&anchor, za + w * u) {
                        Some(r) => r[k] * w,
                        None => C64::new(f64::NAN, 0.0),
                    },
                    0.0,
                    1.0,
                    1e-14,
                    1e-12,
                )
            })
            .collect();
        let Ok(piece) = piece else {
            h *= 0.5;
            if h < 1e-12 {
                return Err(QuantError::Sheets(format!("quadrature fails near {za}")));
            }
            continue;
        };
        for (a, b) in total.iter_mut().zip(piece) {
            *a += b;
        }
        cur = next;
        t = tn;
        h = (h * 2.0).min(1.0);
    }
    Ok((cur, total))
}

/// `∫_v^z ξ_k dz` for each canonical sheet at `z`, along the straight segment
/// from `v` (which may be a square-root branch point).
pub fn primitives_from(s: &SpectralData, v: C64, z: C64) -> Result<Vec<C64>, QuantError> {
    let canon = s.sheets_at_rerouted(z)?;
    if (z - v).norm() == 0.0 {
        return Ok(vec![C64::default(); canon.len()]);
    }
    // continue from z toward v, stopping short; the remaining piece is O(r^{3/2})
    let stop = v + (z - v) * 1e-6;
    let (_, back) = segment_primitives(s, z, stop, &canon)?;
    Ok(back.into_iter().map(|x| -x).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionSample {
    pub z: [f64; 2],
    /// `f_k = −Re∫_v^z ξ_k/♄ dz`.
    pub f: Vec<f64>,
    /// `g_k = Im∫_v^z ξ_k/♄ dz`.
    pub g: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionData {
    pub face: usize,
    pub reference_vertex: usize,
    pub reference: [f64; 2],
    pub samples: Vec<RegionSample>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeGluing {
    pub edge: usize,
    pub wall: usize,
    pub ty: (usize, usize),
    pub matrix: NovikovMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct Extension {
    pub turning_point: usize,
    pub marker: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SheafQuantizationData {
    pub cutoff: f64,
    pub regions: Vec<RegionData>,
    pub gluings: Vec<EdgeGluing>,
    pub extensions: Vec<Extension>,
    /// All gluings unit-triangular.
    pub simple: bool,
}

fn sample_region(s: &SpectralData, g: &StokesGraph, face: usize, v: C64, grid: usize) -> Vec<RegionSample> {
    let hbar = s.hbar();
    let mut out = Vec::new();
    let r = g.window;
    for a in 0..grid {
        for b in 0..grid {
            let z = C64::new(-r + 2.0 * r * (a as f64 + 0.5) / grid as f64, -r + 2.0 * r * (b as f64 + 0.5) / grid as f64);
            if z.norm() >= r || g.face_containing(z) != Some(face) {
                continue;
            }
            let Ok(p) = primitives_from(s, v, z) else { continue };
            out.push(RegionSample {
                z: [z.re, z.im],
                f: p.iter().map(|x| -(x / hbar).re).collect(),
                g: p.iter().map(|x| (x / hbar).im).collect(),
            });
        }
    }
    out
}

/// Assemble regions, edge gluings and turning-point extensions; refuses an
/// inconsistent diagram.
pub fn build_quantization(ctx: &ScatteringContext, d: &ScatteringDiagram, g: &StokesGraph, grid: usize) -> Result<SheafQuantizationData, QuantError> {
    let s = ctx.spectral;
    let rep = consistency_check(ctx, d, d.cutoff)?;
    if !rep.consistent {
        return Err(QuantError::Inconsistent { w: d.cutoff, collisions: rep.failures.iter().map(|f| f.collision).collect() });
    }
    let n = s.rank();
    let mut regions = Vec::new();
    for f in &g.faces {
        let verts: Vec<usize> = f.boundary.iter().map(|&h| g.half_edge_origin(h)).collect();
        let rv = verts
            .iter()
            .copied()
            .find(|&v| matches!(g.vertices[v].kind, VertexKind::TurningPoint(_)))
            .unwrap_or(verts[0]);
        let z = g.vertices[rv].z;
        regions.push(RegionData { face: f.id, reference_vertex: rv, reference: [z.re, z.im], samples: sample_region(s, g, f.id, z, grid) });
    }
    let mut gluings = Vec::new();
    for e in &g.edges {
        let EdgeKind::Curve { curve, ty } = e.kind else { continue };
        let wall = &d.walls[curve];
        let m0 = e.start_mass.unwrap_or(0.0).min(wall.curve.end_mass());
        let x = wall_factor(ctx, wall, m0)?;
        let mut m = NovikovMatrix::elementary(n, ty.0, ty.1, &x.with_cutoff(Some(d.cutoff)));
        if let Some(a) = &wall.edge_matrix {
            m = NovikovMatrix::diagonal(a, Some(d.cutoff)).multiply(&m)?;
        }
        gluings.push(EdgeGluing { edge: e.id, wall: curve, ty, matrix: m });
    }
    let simple = gluings.iter().all(|gl| {
        (0..n).all(|i| {
            (0..n).all(|j| {
                let x = gl.matrix.get(i, j);
                if i == j {
                    x.terms().len() == 1 && x.terms()[0].0 == 0.0 && x.terms()[0].1 == Coefficient::one()
                } else {
                    x.is_zero() || (i, j) == gl.ty
                }
            })
        })
    });
    let extensions = (0..s.turning_points().len())
        .map(|k| Extension { turning_point: k, marker: if n == 2 { "1 ⊕ 1".into() } else { "marker".into() } })
        .collect();
    Ok(SheafQuantizationData { cutoff: d.cutoff, regions, gluings, extensions, simple })
}

impl SheafQuantizationData {
    pub fn compose_loop_gluing(&self, ctx: &ScatteringContext, d: &ScatteringDiagram, lp: &[C64], reference: Option<C64>) -> Result<NovikovMatrix, QuantError> {
        compose_loop_gluing(ctx, d, lp, reference)
    }
}

struct CrossingEvent {
    seg: usize,
    t: f64,
    wall: usize,
    wseg: usize,
}

/// Ordered product of wall factors crossed by the closed polyline `lp`,
/// expressed in the frame of sheets continued from `reference` (default: the
/// start of the loop) along the segment to the start and then the loop.
pub fn compose_loop_gluing(ctx: &ScatteringContext, d: &ScatteringDiagram, lp: &[C64], reference: Option<C64>) -> Result<NovikovMatrix, QuantError> {
    let s = ctx.spectral;
    let n = s.rank();
    let cutoff = Some(d.cutoff);
    let hbar = s.hbar();
    let mut pts = lp.to_vec();
    if pts.first() != pts.last() {
        pts.push(pts[0]);
    }
    let tol = 10.0 * s.delta_tp();
    for z in &pts {
        for v in s.turning_point_locations().iter().chain(s.finite_singular_points()).chain(d.collisions.iter().map(|c| &c.point)) {
            if (z - v).norm() < tol {
                return Err(QuantError::Reroute(*v));
            }
        }
    }
    let mut events = Vec::new();
    for k in 0..pts.len() - 1 {
        let (p0, p1) = (pts[k], pts[k + 1]);
        for (wi, w) in d.walls.iter().enumerate() {
            for (j, pair) in w.curve.samples.windows(2).enumerate() {
                if let Some((t, _)) = segment_intersection(p0, p1, pair[0].z, pair[1].z) {
                    events.push(CrossingEvent { seg: k, t, wall: wi, wseg: j });
                }
            }
        }
    }
    events.sort_by(|a, b| a.seg.cmp(&b.seg).then(a.t.total_cmp(&b.t)).then(a.wall.cmp(&b.wall)));
    // running frame values and primitives ∫ ξ_k dz from the reference
    let (start_vals, mut prim) = match reference {
        Some(r) => segment_primitives(s, r, pts[0], &s.sheets_at_rerouted(r)?)?,
        None => (s.sheets_at_rerouted(pts[0])?, vec![C64::default(); n]),
    };
    let mut vals = start_vals.clone();
    let mut at = pts[0];
    let mut m = NovikovMatrix::identity(n, cutoff);
    let mut ev = events.iter().peekable();
    for k in 0..pts.len() - 1 {
        let (p0, p1) = (pts[k], pts[k + 1]);
        while let Some(e) = ev.next_if(|e| e.seg == k) {
            let x = p0 + (p1 - p0) * e.t;
            let (v2, dp) = segment_primitives(s, at, x, &vals)?;
            vals = v2;
            for (a, b) in prim.iter_mut().zip(dp) {
                *a += b;
            }
            at = x;
            let wall = &d.walls[e.wall];
            let smp = &wall.curve.samples[e.wseg];
            let wz = smp.z;
            let (wv, wdp) = segment_primitives(s, wz, x, &smp.roots)?;
            let (i, j) = wall.curve.pair;
            // full ∫_v^x (ζ_i − ζ_j): x sits on a chord, slightly off the curve
            let wint = (wdp[i] - wdp[j]) / hbar;
            let mass = smp.mass + wint.re;
            // frame indices of the wall's sheets
            let lab = match_labels(&[wv[i], wv[j]], &vals);
            let (a, b) = (lab[0], lab[1]);
            let r = (prim[a] - prim[b]) / hbar;
            let mass = mass.clamp(0.0, wall.curve.end_mass());
            let factor = wall_factor(ctx, wall, mass)?
                .shift(-r.re)
                .scale(C64::from_polar(1.0, r.im - wint.im))
                .with_cutoff(cutoff)
                .truncate(d.cutoff);
            let tangent = hbar / (wv[i] - wv[j]);
            let dir = p1 - p0;
            let left = (tangent.conj() * dir).im > 0.0;
            let x = if left { factor } else { factor.neg() };
            m = m.multiply(&NovikovMatrix::elementary(n, a, b, &x))?;
        }
        let (v2, dp) = segment_primitives(s, at, p1, &vals)?;
        vals = v2;
        for (a, b) in prim.iter_mut().zip(dp) {
            *a += b;
        }
        at = p1;
    }
    let perm = match_labels(&vals, &start_vals);
    if perm.iter().enumerate().any(|(k, p)| k != *p) {
        let ones = vec![Coefficient::one(); n];
        m = m.multiply(&NovikovMatrix::monomial_matrix(&perm, &ones, cutoff))?;
    }
    Ok(m)
}

/// Sign attached to a closed cycle on the spectral cover.
pub trait SpinTwist: Send + Sync {
    fn name(&self) -> &'static str;
    fn sign(&self, s: &SpectralData, cycle: &Cycle) -> Result<i32, QuantError>;
}

/// `i^{−Σ_v winding_v(γ)}` over turning points, read off the geometry.
pub struct GeometricTwist;

impl SpinTwist for GeometricTwist {
    fn name(&self) -> &'static str {
        "geometric"
    }

    fn sign(&self, s: &SpectralData, cycle: &Cycle) -> Result<i32, QuantError> {
        let w: i64 = s.turning_point_locations().iter().map(|v| cycle.winding(*v)).sum();
        Ok(if w.rem_euclid(4) == 0 { 1 } else if w.rem_euclid(4) == 2 { -1 } else { return Err(QuantError::Sheets("odd total winding".into())) })
    }
}

/// `−1` on Voros edge cycles, `+1` on pull-back cycles.
pub struct KindTableTwist;

impl SpinTwist for KindTableTwist {
    fn name(&self) -> &'static str {
        "kind-table"
    }

    fn sign(&self, _: &SpectralData, cycle: &Cycle) -> Result<i32, QuantError> {
        match cycle.kind {
            CycleKind::VorosEdge => Ok(-1),
            CycleKind::PullBack => Ok(1),
            kind => Err(QuantError::NoTwist { rule: "kind-table", kind }),
        }
    }
}

pub fn spin_twists() -> Registry<dyn SpinTwist> {
    Registry::new("spin twist")
        .register("geometric", || Box::new(GeometricTwist) as Box<dyn SpinTwist>)
        .register("kind-table", || Box::new(KindTableTwist) as Box<dyn SpinTwist>)
}

#[derive(Clone, Debug, Serialize)]
pub struct MicrolocalMonodromy {
    pub cycle: String,
    /// Sign from sheet changes at turning points (`−1` per half turn pair).
    pub spin_sign: i32,
    pub twist: i32,
    pub value: NovikovSeries,
    pub specialized: Option<[f64; 2]>,
}

/// `twist · spin · e^{∮P_od^{≥0}} · T^{−Re∮√Q₀/♄}` with the phase
/// `e^{i Im∮√Q₀/♄}` in the coefficient. Without a WKB series only the
/// leading exponential is used.
pub fn microlocalize(
    s: &SpectralData,
    series: Option<&WkbSeries>,
    tracker: &BranchTracker,
    cycle: &Cycle,
    twist: &dyn SpinTwist,
) -> Result<MicrolocalMonodromy, QuantError> {
    if s.rank() != 2 {
        return Err(QuantError::NotRankTwo);
    }
    for p in s.finite_singular_points() {
        for w in cycle.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let d = b - a;
            let t = (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
            if (a + d * t - p).norm() < 1e-9 * s.scale() {
                return Err(QuantError::InvalidCycle(*p));
            }
        }
    }
    let hbar = s.hbar();
    let (order, terms) = match series {
        Some(ser) => (ser.order(), voros_symbol(ser, tracker, cycle)?),
        None => {
            let (v, _) = tracker.integrate_path(&cycle.points, cycle.start_root, |_, r| r, true)?;
            (0, vec![(-1, v)])
        }
    };
    let lead = terms.iter().find(|(m, _)| *m == -1).map(|x| x.1).unwrap_or_default() / hbar;
    let mut poly = vec![C64::default(); order + 1];
    for (m, v) in &terms {
        if *m >= 0 && (*m as usize) <= order {
            poly[*m as usize] = *v;
        }
    }
    let winding: i64 = s.turning_point_locations().iter().map(|v| cycle.winding(*v)).sum();
    let spin = if winding.rem_euclid(4) == 2 { -1 } else { 1 };
    let tw = twist.sign(s, cycle)?;
    let sign = (spin * tw) as f64;
    let coeff = HbarPoly::new(order, poly).exp().scale(C64::from_polar(sign, lead.im));
    let value = NovikovSeries::monomial(-lead.re, Coefficient::Hbar(coeff), None);
    let z = value.evaluate_at(hbar);
    Ok(MicrolocalMonodromy { cycle: cycle.id.clone(), spin_sign: spin, twist: tw, value, specialized: Some([z.re, z.im]) })
}

/// Evaluate at `T = e^{−1}` with `ℏ = ♄` in ℏ-coefficients.
pub fn specialize_series(x: &NovikovSeries, hbar: C64) -> C64 {
    x.evaluate_at(hbar)
}

pub fn specialize_matrix(m: &NovikovMatrix, hbar: C64) -> Vec<Vec<C64>> {
    m.specialize(hbar)
}

/// Small circle around `c` that avoids other singular points.
pub fn loop_around(c: C64, r: f64, n: usize) -> Vec<C64> {
    (0..n).map(|k| c + C64::from_polar(r, 2.0 * PI * k as f64 / n as f64 + 0.1)).collect()
}
