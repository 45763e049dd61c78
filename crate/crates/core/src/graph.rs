//! Stokes graph inside a clipping disk: vertices, edges, faces, rank-2
//! region classes and tameness.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::algfun::SpectralData;
use crate::tracer::{detect_stokes_segments, Collision, Source, StokesCurve, Terminus};

pub type C64 = num::complex::Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("Stokes segment present (curve {0})")]
    StokesSegment(usize),
    #[error("non-transverse intersection at {0}")]
    Tangency(C64),
    #[error("face {face} cannot be classified: {turning} turning points, {poles} pole visits")]
    Unclassifiable { face: usize, turning: usize, poles: usize },
    #[error("region classification needs rank 2")]
    NotRankTwo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "kebab-case")]
pub enum VertexKind {
    TurningPoint(usize),
    Collision(usize),
    Pole(usize),
    /// Curve cut by the window boundary.
    Stub,
    /// Curve ending inside the window (mass cap or stall).
    Dangling,
    /// Placeholder on an empty window boundary.
    Anchor,
}

#[derive(Clone, Debug, Serialize)]
pub struct Vertex {
    pub id: usize,
    pub kind: VertexKind,
    #[serde(serialize_with = "ser_c64")]
    pub z: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EdgeKind {
    Curve { curve: usize, ty: (usize, usize) },
    WindowArc,
}

#[derive(Clone, Debug, Serialize)]
pub struct Edge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    /// Mass of the curve at the first point (curve edges only).
    pub start_mass: Option<f64>,
    #[serde(serialize_with = "ser_c64s")]
    pub points: Vec<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Face {
    pub id: usize,
    /// Half-edges `2e` (along edge `e`) or `2e + 1` (against it), face on the left.
    pub boundary: Vec<usize>,
    /// Boundaries of components lying inside the face.
    pub holes: Vec<Vec<usize>>,
    /// Finite poles inside the face that are not on its boundary.
    pub punctures: Vec<usize>,
    pub area: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StokesGraph {
    pub window: f64,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub faces: Vec<Face>,
    /// Half-edge cycle of the unbounded side of the window.
    pub outer: Vec<usize>,
    pub components: usize,
}

fn ser_c64<S: serde::Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

fn ser_c64s<S: serde::Serializer>(z: &[C64], s: S) -> Result<S::Ok, S::Error> {
    z.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
}

/// Default window radius.
pub fn window_radius(s: &SpectralData) -> f64 {
    let m = s
        .turning_point_locations()
        .iter()
        .chain(s.finite_singular_points())
        .map(|z| z.norm())
        .fold(1.0, f64::max);
    4.0 * m
}

impl StokesGraph {
    pub fn half_edge_points(&self, h: usize) -> Vec<C64> {
        let e = &self.edges[h / 2];
        if h % 2 == 0 {
            e.points.clone()
        } else {
            e.points.iter().rev().copied().collect()
        }
    }

    pub fn half_edge_origin(&self, h: usize) -> usize {
        let e = &self.edges[h / 2];
        if h % 2 == 0 {
            e.from
        } else {
            e.to
        }
    }

    pub fn half_edge_target(&self, h: usize) -> usize {
        self.half_edge_origin(h ^ 1)
    }

    /// Closed polygon traced by a cycle of half-edges.
    pub fn cycle_polygon(&self, cycle: &[usize]) -> Vec<C64> {
        let mut pts = Vec::new();
        for &h in cycle {
            let p = self.half_edge_points(h);
            pts.extend_from_slice(&p[..p.len() - 1]);
        }
        pts
    }

    /// `V − E + F` counting the unbounded side as a face.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64 + 1
    }

    pub fn face_containing(&self, z: C64) -> Option<usize> {
        self.faces
            .iter()
            .filter(|f| winding_number(&self.cycle_polygon(&f.boundary), z) != 0)
            .filter(|f| f.holes.iter().all(|h| winding_number(&self.cycle_polygon(h), z) == 0))
            .min_by(|a, b| a.area.total_cmp(&b.area))
            .map(|f| f.id)
    }
}

pub fn signed_area(poly: &[C64]) -> f64 {
    let n = poly.len();
    (0..n).map(|k| {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        a.re * b.im - a.im * b.re
    }).sum::<f64>()
        * 0.5
}

pub fn winding_number(poly: &[C64], z: C64) -> i64 {
    let n = poly.len();
    let mut total = 0.0;
    for k in 0..n {
        let (a, b) = (poly[k] - z, poly[(k + 1) % n] - z);
        total += (b / a).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

struct Builder {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

impl Builder {
    fn vertex(&mut self, kind: VertexKind, z: C64) -> usize {
        if matches!(kind, VertexKind::TurningPoint(_) | VertexKind::Collision(_) | VertexKind::Pole(_)) {
            if let Some(v) = self.vertices.iter().find(|v| v.kind == kind) {
                return v.id;
            }
        }
        let id = self.vertices.len();
        self.vertices.push(Vertex { id, kind, z });
        id
    }

    fn edge(&mut self, from: usize, to: usize, kind: EdgeKind, start_mass: Option<f64>, points: Vec<C64>) {
        let id = self.edges.len();
        self.edges.push(Edge { id, from, to, kind, start_mass, points });
    }
}

/// Split curves at collisions, clip to the window, add boundary arcs and
/// extract faces by half-edge traversal.
pub fn build_graph(s: &SpectralData, curves: &[StokesCurve], collisions: &[Collision], window: f64) -> Result<StokesGraph, GraphError> {
    if let Some(seg) = detect_stokes_segments(curves).first() {
        return Err(GraphError::StokesSegment(seg.curve));
    }
    if let Some(c) = collisions.iter().find(|c| !c.transverse) {
        return Err(GraphError::Tangency(c.point));
    }
    let scale = s.scale();
    let mut b = Builder { vertices: Vec::new(), edges: Vec::new() };
    let tps = s.turning_points();
    for (k, t) in tps.iter().enumerate() {
        if t.z.norm() < window {
            b.vertex(VertexKind::TurningPoint(k), t.z);
        }
    }
    let mut stubs: Vec<(f64, usize)> = Vec::new();
    for (ci, c) in curves.iter().enumerate() {
        // cut points along the curve: (mass, vertex kind, point)
        let mut cuts: Vec<(f64, VertexKind, C64)> = Vec::new();
        for (k, col) in collisions.iter().enumerate() {
            for h in col.hits.iter().filter(|h| h.curve == ci) {
                cuts.push((h.mass, VertexKind::Collision(k), col.point));
            }
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        // clip at the first exit from the window
        let exit = c.samples.iter().position(|p| p.z.norm() >= window);
        let mut pts: Vec<(C64, f64)> = Vec::new();
        let last = exit.unwrap_or(c.samples.len() - 1);
        for p in &c.samples[..=last] {
            pts.push((p.z, p.mass));
        }
        let end_kind;
        if let Some(k) = exit {
            let (a, bb) = (c.samples[k - 1].z, c.samples[k].z);
            let t = circle_crossing(a, bb, window);
            let z = a + (bb - a) * t;
            let m = c.samples[k - 1].mass + t * (c.samples[k].mass - c.samples[k - 1].mass);
            pts.pop();
            pts.push((z, m));
            end_kind = VertexKind::Stub;
        } else {
            end_kind = match &c.terminus {
                Terminus::Pole => {
                    let end = c.samples.last().unwrap().z;
                    match s.finite_singular_points().iter().enumerate().min_by(|a, b| (a.1 - end).norm().total_cmp(&(b.1 - end).norm())) {
                        Some((k, p)) if (p - end).norm() < 0.1 * scale => {
                            pts.push((*p, f64::INFINITY));
                            VertexKind::Pole(k)
                        }
                        _ => VertexKind::Dangling,
                    }
                }
                Terminus::TurningPointHit { index, .. } => {
                    pts.push((tps[*index].z, c.end_mass()));
                    VertexKind::TurningPoint(*index)
                }
                _ => VertexKind::Dangling,
            };
        }
        let start_kind = match c.source {
            Source::TurningPoint(k) => VertexKind::TurningPoint(k),
            Source::Collision(_) => VertexKind::Dangling,
        };
        let start_vertex = match start_kind {
            VertexKind::TurningPoint(k) => b.vertex(start_kind, tps[k].z),
            _ => {
                // a curve born at a detected collision starts at that vertex
                let z0 = pts[0].0;
                match collisions.iter().position(|col| (col.point - z0).norm() < 1e-6 * scale) {
                    Some(k) => b.vertex(VertexKind::Collision(k), collisions[k].point),
                    None => b.vertex(VertexKind::Dangling, z0),
                }
            }
        };
        let mut cur_v = start_vertex;
        let mut cur_m = pts[0].1;
        let mut cur_pts = vec![pts[0].0];
        let mut idx = 1;
        let max_mass = pts.last().unwrap().1;
        let tol = 1e-9 * scale;
        for (m, kind, z) in cuts.into_iter().filter(|c| c.0 < max_mass) {
            while idx < pts.len() && pts[idx].1 < m {
                if (pts[idx].0 - z).norm() > tol {
                    cur_pts.push(pts[idx].0);
                }
                idx += 1;
            }
            cur_pts.push(z);
            let v = b.vertex(kind, z);
            let ty = c.type_at(s, c.samples.iter().rposition(|p| p.mass <= m).unwrap_or(0)).unwrap_or(c.ty);
            b.edge(cur_v, v, EdgeKind::Curve { curve: ci, ty }, Some(cur_m), std::mem::take(&mut cur_pts));
            cur_v = v;
            cur_m = m;
            cur_pts.push(z);
            while idx < pts.len() && (pts[idx].0 - z).norm() <= tol {
                idx += 1;
            }
        }
        for p in &pts[idx..] {
            cur_pts.push(p.0);
        }
        let end_z = *cur_pts.last().unwrap();
        let v = match end_kind {
            VertexKind::TurningPoint(k) => b.vertex(end_kind, tps[k].z),
            VertexKind::Pole(k) => b.vertex(end_kind, s.finite_singular_points()[k]),
            _ => b.vertex(end_kind, end_z),
        };
        if end_kind == VertexKind::Stub {
            stubs.push((end_z.arg().rem_euclid(2.0 * PI), v));
        }
        let ty = c.type_at(s, c.samples.len() - 1).unwrap_or(c.ty);
        b.edge(cur_v, v, EdgeKind::Curve { curve: ci, ty }, Some(cur_m), cur_pts);
    }
    // window boundary arcs
    stubs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if stubs.is_empty() {
        let v = b.vertex(VertexKind::Anchor, C64::new(window, 0.0));
        stubs.push((0.0, v));
    }
    let n = stubs.len();
    for k in 0..n {
        let (a0, v0) = stubs[k];
        let (mut a1, v1) = stubs[(k + 1) % n];
        if a1 <= a0 {
            a1 += 2.0 * PI;
        }
        let m = (((a1 - a0) / (2.0 * PI) * 128.0).ceil() as usize).max(2);
        let pts: Vec<C64> = (0..=m).map(|j| C64::from_polar(window, a0 + (a1 - a0) * j as f64 / m as f64)).collect();
        b.edge(v0, v1, EdgeKind::WindowArc, None, pts);
    }
    let mut g = StokesGraph { window, vertices: b.vertices, edges: b.edges, faces: vec![], outer: vec![], components: 0 };
    extract_faces(&mut g, s);
    Ok(g)
}

fn circle_crossing(a: C64, b: C64, r: f64) -> f64 {
    // |a + t(b − a)| = r
    let d = b - a;
    let qa = d.norm_sqr();
    let qb = 2.0 * (a.re * d.re + a.im * d.im);
    let qc = a.norm_sqr() - r * r;
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    ((-qb + disc.sqrt()) / (2.0 * qa)).clamp(0.0, 1.0)
}

fn outgoing_angle(g: &StokesGraph, h: usize) -> f64 {
    let p = g.half_edge_points(h);
    let o = p[0];
    let q = p.iter().skip(1).find(|q| (**q - o).norm() > 0.0).copied().unwrap_or(o + 1.0);
    (q - o).arg()
}

fn extract_faces(g: &mut StokesGraph, s: &SpectralData) {
    let nv = g.vertices.len();
    let nh = 2 * g.edges.len();
    // outgoing half-edges at each vertex, ccw by angle
    let mut out: Vec<Vec<(f64, usize)>> = vec![Vec::new(); nv];
    for h in 0..nh {
        out[g.half_edge_origin(h)].push((outgoing_angle(g, h), h));
    }
    for o in out.iter_mut() {
        o.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }
    let next = |h: usize| -> usize {
        let v = g.half_edge_target(h);
        let twin = h ^ 1;
        let o = &out[v];
        let k = o.iter().position(|x| x.1 == twin).unwrap();
        // the outgoing half-edge just clockwise of the twin
        o[(k + o.len() - 1) % o.len()].1
    };
    let mut seen = vec![false; nh];
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for h0 in 0..nh {
        if seen[h0] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut h = h0;
        while !seen[h] {
            seen[h] = true;
            cyc.push(h);
            h = next(h);
        }
        cycles.push(cyc);
    }
    // union-find for connected components
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for e in &g.edges {
        let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
        parent[a] = b;
    }
    let roots: std::collections::BTreeSet<usize> = (0..nv).map(|v| find(&mut parent, v)).collect();
    g.components = roots.len();
    let mut faces = Vec::new();
    let mut holes = Vec::new();
    for cyc in cycles {
        let poly = g.cycle_polygon(&cyc);
        let area = signed_area(&poly);
        let has_arc_cw = cyc.iter().any(|&h| h % 2 == 1 && g.edges[h / 2].kind == EdgeKind::WindowArc);
        if has_arc_cw {
            g.outer = cyc;
        } else if area > 0.0 {
            faces.push((cyc, area));
        } else {
            holes.push(cyc);
        }
    }
    faces.sort_by(|a, b| a.0.iter().min().cmp(&b.0.iter().min()));
    g.faces = faces
        .into_iter()
        .enumerate()
        .map(|(id, (boundary, area))| Face { id, boundary, holes: vec![], punctures: vec![], area })
        .collect();
    for hole in holes {
        let p = g.cycle_polygon(&hole)[0];
        let probe = p + C64::new(1e-9 * g.window, 0.0);
        let owner = g
            .faces
            .iter()
            .filter(|f| winding_number(&g.cycle_polygon(&f.boundary), probe) != 0)
            .min_by(|a, b| a.area.total_cmp(&b.area))
            .map(|f| f.id);
        if let Some(f) = owner {
            g.faces[f].holes.push(hole);
        }
    }
    for (k, p) in s.finite_singular_points().iter().enumerate() {
        if p.norm() >= g.window || g.vertices.iter().any(|v| v.kind == VertexKind::Pole(k)) {
            continue;
        }
        if let Some(f) = g.face_containing(*p) {
            g.faces[f].punctures.push(k);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    HorizontalStrip,
    HalfPlane,
    WindowTruncated,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionClass {
    pub face: usize,
    pub class: RegionKind,
    pub turning_points: usize,
    pub pole_visits: usize,
}

fn boundary_counts(g: &StokesGraph, s: &SpectralData, f: &Face) -> (usize, usize, bool) {
    let mut tp = 0;
    let mut poles = 0;
    let mut truncated = !f.holes.is_empty() || !f.punctures.is_empty();
    let n = f.boundary.len();
    for (k, &h) in f.boundary.iter().enumerate() {
        let prev_arc = g.edges[f.boundary[(k + n - 1) % n] / 2].kind == EdgeKind::WindowArc;
        if g.edges[h / 2].kind == EdgeKind::WindowArc {
            if !prev_arc {
                if s.infinity_is_pole() {
                    poles += 1;
                } else {
                    truncated = true;
                }
            }
            continue;
        }
        match g.vertices[g.half_edge_origin(h)].kind {
            VertexKind::TurningPoint(_) => tp += 1,
            VertexKind::Pole(_) => poles += 1,
            VertexKind::Dangling => truncated = true,
            _ => {}
        }
    }
    (tp, poles, truncated)
}

/// Strip (two zeros, two poles) or half-plane (one zero, one pole) for each face.
pub fn classify_regions(g: &StokesGraph, s: &SpectralData) -> Result<Vec<RegionClass>, GraphError> {
    if s.rank() != 2 {
        return Err(GraphError::NotRankTwo);
    }
    g.faces
        .iter()
        .map(|f| {
            let (tp, poles, truncated) = boundary_counts(g, s, f);
            let class = if truncated {
                RegionKind::WindowTruncated
            } else if tp == 2 && poles == 2 {
                RegionKind::HorizontalStrip
            } else if tp == 1 && poles == 1 {
                RegionKind::HalfPlane
            } else {
                return Err(GraphError::Unclassifiable { face: f.id, turning: tp, poles });
            };
            Ok(RegionClass { face: f.id, class, turning_points: tp, pole_visits: poles })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, PartialOrd, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    NonSimpleTurningPoint { index: usize },
    OrderedCollisionAtTurningPoint { turning_point: usize },
    CyclicCollision { collision: [i64; 2] },
    NonTransverse { collision: [i64; 2] },
    SingularSetNotDiscrete { distance: f64 },
    BadTerminus { source: Source, reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct TamenessReport {
    pub tame: bool,
    pub ordered_collisions: usize,
    pub min_singular_distance: f64,
    pub violations: Vec<Violation>,
}

fn key(z: C64) -> [i64; 2] {
    [(z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64]
}

/// Tameness of a curve collection with its collisions.
pub fn check_tameness(s: &SpectralData, curves: &[StokesCurve], collisions: &[Collision]) -> TamenessReport {
    let mut v = Vec::new();
    let scale = s.scale();
    for (k, t) in s.turning_points().iter().enumerate() {
        if !t.is_double_branch() {
            v.push(Violation::NonSimpleTurningPoint { index: k });
        }
    }
    for c in collisions {
        if c.ordered {
            if let Some(k) = s.turning_points().iter().position(|t| (t.z - c.point).norm() < 2.0 * s.delta_tp()) {
                v.push(Violation::OrderedCollisionAtTurningPoint { turning_point: k });
            }
        }
        if c.cyclic {
            v.push(Violation::CyclicCollision { collision: key(c.point) });
        }
        if !c.transverse {
            v.push(Violation::NonTransverse { collision: key(c.point) });
        }
    }
    let sing: Vec<C64> = s
        .turning_point_locations()
        .into_iter()
        .chain(collisions.iter().filter(|c| c.ordered).map(|c| c.point))
        .collect();
    let mut dmin = f64::INFINITY;
    for i in 0..sing.len() {
        for j in i + 1..sing.len() {
            dmin = dmin.min((sing[i] - sing[j]).norm());
        }
    }
    if dmin < 1e-6 * scale {
        v.push(Violation::SingularSetNotDiscrete { distance: dmin });
    }
    for c in curves {
        match &c.terminus {
            Terminus::Pole | Terminus::MassCap => {}
            Terminus::TurningPointHit { index, .. } => {
                v.push(Violation::BadTerminus { source: c.source, reason: format!("runs into turning point {index}") })
            }
            Terminus::Stalled { reason } => v.push(Violation::BadTerminus { source: c.source, reason: reason.clone() }),
        }
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v.dedup();
    TamenessReport {
        tame: v.is_empty(),
        ordered_collisions: collisions.iter().filter(|c| c.ordered).count(),
        min_singular_distance: dmin,
        violations: v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algfun::{airy, bnr, weber};
    use crate::tracer::{detect_collisions, trace_initial, TraceConfig};

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    fn graph_for(s: &SpectralData, window: f64) -> (StokesGraph, Vec<StokesCurve>, Vec<Collision>) {
        let curves = trace_initial(s, &TraceConfig::new(1e3, window)).unwrap();
        let cols = detect_collisions(s, &curves, 1e-9);
        (build_graph(s, &curves, &cols, window).unwrap(), curves, cols)
    }

    #[test]
    fn airy_graph() {
        let s = airy(one());
        let w = window_radius(&s);
        let (g, curves, cols) = graph_for(&s, w);
        assert_eq!(g.faces.len(), 3);
        assert_eq!(g.vertices.iter().filter(|v| v.kind == VertexKind::TurningPoint(0)).count(), 1);
        assert_eq!(g.edges.iter().filter(|e| e.kind != EdgeKind::WindowArc).count(), 3);
        assert_eq!(g.euler_characteristic(), 1 + g.components as i64);
        let classes = classify_regions(&g, &s).unwrap();
        assert!(classes.iter().all(|c| c.class == RegionKind::HalfPlane));
        assert!(check_tameness(&s, &curves, &cols).tame);
    }

    #[test]
    fn weber_graph_has_a_strip() {
        let s = weber(one());
        let w = window_radius(&s);
        let (g, _, _) = graph_for(&s, w);
        let classes = classify_regions(&g, &s).unwrap();
        let strips = classes.iter().filter(|c| c.class == RegionKind::HorizontalStrip).count();
        let halves = classes.iter().filter(|c| c.class == RegionKind::HalfPlane).count();
        assert_eq!((strips, halves), (1, 4));
        let strip = classes.iter().find(|c| c.class == RegionKind::HorizontalStrip).unwrap();
        assert_eq!(g.face_containing(C64::new(0.0, 0.0)), Some(strip.face));
    }

    #[test]
    fn classes_stable_under_window_doubling() {
        let s = weber(C64::from_polar(1.0, 0.3));
        let w = window_radius(&s);
        let count = |w: f64| {
            let (g, _, _) = graph_for(&s, w);
            let mut c: Vec<_> = classify_regions(&g, &s).unwrap().into_iter().map(|c| format!("{:?}", c.class)).collect();
            c.sort();
            c
        };
        assert_eq!(count(w), count(2.0 * w));
    }

    #[test]
    fn empty_curve_set() {
        let s = airy(one());
        let g = build_graph(&s, &[], &[], 4.0).unwrap();
        assert_eq!(g.faces.len(), 1);
    }

    #[test]
    fn every_half_edge_once() {
        let s = bnr(one());
        let (g, curves, cols) = graph_for(&s, window_radius(&s));
        let mut all: Vec<usize> = g.faces.iter().flat_map(|f| f.boundary.iter().copied().chain(f.holes.iter().flatten().copied())).collect();
        all.extend(&g.outer);
        all.sort();
        assert_eq!(all, (0..2 * g.edges.len()).collect::<Vec<_>>());
        assert_eq!(g.euler_characteristic(), 1 + g.components as i64);
        let rep = check_tameness(&s, &curves, &cols);
        assert!(rep.tame, "{:?}", rep.violations);
        assert_eq!(rep.ordered_collisions, 2);
    }
}
