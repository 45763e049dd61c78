//! End-to-end run: turning points, tracing, graph, tameness, scattering,
//! quantization, microlocalization and the optional ODE check, with JSON and
//! SVG artifacts written to an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use num::complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algfun::SpectralData;
use crate::graph::{build_graph, check_tameness, window_radius, TamenessReport};
use crate::io::{parse_spectral, InputError};
use crate::novikov::{set_exp_merge_tol, NovikovMatrix, NovikovSeries, EXP_MERGE_TOL};
use crate::odecheck::{compare_voros_fg, sectors_at_infinity, FgReport};
use crate::quantization::{build_quantization, compose_loop_gluing, loop_around, microlocalize, spin_twists, MicrolocalMonodromy, QuantError};
use crate::scattering::{run_scattering, weight_law_bound, ConsistencyReport, NormalizationData, ScatteringContext, ScatteringDiagram, ScatteringError, WMinReport};
use crate::svg::{render, Stroke};
use crate::tracer::{detect_collisions, detect_stokes_segments, requadrature, trace_initial, Source, StokesCurve, StokesSegment, Terminus, TraceConfig, TraceError, TOL_IM, TOL_X_FACTOR};
use crate::wkb::{stadium, voros_symbol, BranchTracker, Cycle, CycleKind, WkbSeries};

/// Truncation used when none is given and there are no collisions.
pub const DEFAULT_TRUNCATION: f64 = 10.0;
/// Mass cap for the preliminary trace; curves normally leave the window first.
const PRELIMINARY_CAP: f64 = 1e3;
const MAX_POLYLINE: usize = 400;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    pub hbar_mod: Option<f64>,
    pub hbar_arg: Option<f64>,
    pub truncation: Option<f64>,
    pub hbar_order: usize,
    pub normalization: String,
    pub monodromy_rule: String,
    pub twist: String,
    pub window: Option<f64>,
    pub sweep: Vec<f64>,
    pub ode_check: bool,
    pub ode_hbars: Vec<f64>,
    pub ode_order: usize,
    pub quadrilateral: Option<[usize; 4]>,
    pub out: PathBuf,
    pub grid: usize,
    pub tol_im: f64,
    pub tol_x: Option<f64>,
    pub eps_t: f64,
    pub delta_tp: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: PathBuf::new(),
            hbar_mod: None,
            hbar_arg: None,
            truncation: None,
            hbar_order: 2,
            normalization: "trivial".into(),
            monodromy_rule: "half-ray".into(),
            twist: "geometric".into(),
            window: None,
            sweep: Vec::new(),
            ode_check: false,
            ode_hbars: vec![0.2, 0.1, 0.05],
            ode_order: 3,
            quadrilateral: None,
            out: PathBuf::from("out"),
            grid: 8,
            tol_im: TOL_IM,
            tol_x: None,
            eps_t: EXP_MERGE_TOL,
            delta_tp: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Input,
    TurningPoints,
    Tracing,
    Tameness,
    Scattering,
    Graph,
    Quantization,
    Microlocalization,
    OdeCheck,
    Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureClass {
    Degeneracy,
    Input,
    Numeric,
}

#[derive(Debug, Error)]
#[error("{stage:?} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub class: FailureClass,
    pub message: String,
    pub diagnostics: Vec<String>,
}

impl PipelineError {
    fn new(stage: Stage, class: FailureClass, message: impl Into<String>) -> Self {
        PipelineError { stage, class, message: message.into(), diagnostics: Vec::new() }
    }

    fn with(mut self, diagnostics: Vec<String>) -> Self {
        self.diagnostics = diagnostics;
        self
    }

    pub fn exit_code(&self) -> i32 {
        match self.class {
            FailureClass::Degeneracy => 1,
            FailureClass::Input => 2,
            FailureClass::Numeric => 3,
        }
    }
}

fn numeric(stage: Stage) -> impl Fn(&dyn std::fmt::Display) -> PipelineError {
    move |e| PipelineError::new(stage, FailureClass::Numeric, e.to_string())
}

fn scattering_error(e: ScatteringError) -> PipelineError {
    let class = match e {
        ScatteringError::Strategy(_) => FailureClass::Input,
        ScatteringError::Cyclic(..) => FailureClass::Degeneracy,
        _ => FailureClass::Numeric,
    };
    PipelineError::new(Stage::Scattering, class, e.to_string())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::new(Stage::Input, FailureClass::Input, m));
        if let Some(w) = self.truncation {
            if !(w > 0.0 && w.is_finite()) {
                return bad(format!("truncation must be positive, got {w}"));
            }
        }
        if let Some(m) = self.hbar_mod {
            if !(m > 0.0 && m.is_finite()) {
                return bad(format!("|ℏ| must be positive, got {m}"));
            }
        }
        if let Some(w) = self.window {
            if !(w > 0.0 && w.is_finite()) {
                return bad(format!("window must be positive, got {w}"));
            }
        }
        if self.grid == 0 {
            return bad("grid must be at least 1".into());
        }
        for (name, t) in [("tol_im", Some(self.tol_im)), ("tol_x", self.tol_x), ("eps_t", Some(self.eps_t)), ("delta_tp", self.delta_tp)] {
            if let Some(t) = t {
                if !(t > 0.0 && t.is_finite()) {
                    return bad(format!("{name} must be positive, got {t}"));
                }
            }
        }
        Ok(())
    }

    /// Spectral data with the configured ℏ and tolerances applied.
    pub fn load(&self) -> Result<SpectralData, PipelineError> {
        let text = fs::read_to_string(&self.input)
            .map_err(|e| PipelineError::new(Stage::Input, FailureClass::Input, format!("{}: {e}", self.input.display())))?;
        self.load_str(&text)
    }

    pub fn load_str(&self, text: &str) -> Result<SpectralData, PipelineError> {
        let input_err = |e: InputError| PipelineError::new(Stage::Input, FailureClass::Input, e.to_string());
        let spec = parse_spectral(text).map_err(input_err)?;
        let h0 = spec.hbar();
        let hbar = C64::from_polar(self.hbar_mod.unwrap_or(h0.norm()), self.hbar_arg.unwrap_or(h0.arg()));
        let mut s = spec.build(Some(hbar)).map_err(input_err)?;
        if let Some(d) = self.delta_tp {
            s.set_delta_tp(d);
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, Serialize)]
struct WallJson<'a> {
    id: usize,
    #[serde(rename = "type")]
    ty: [usize; 2],
    generation: usize,
    source: Source,
    terminus: &'a Terminus,
    weight: f64,
    end_mass: f64,
    phi: &'a NovikovSeries,
    /// `[x, y, mass]` samples.
    polyline: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, Serialize)]
struct CollisionJson {
    id: usize,
    point: [f64; 2],
    incident: Vec<usize>,
    types: Vec<[usize; 2]>,
    masses: Vec<f64>,
    weight: f64,
    ordered: bool,
    cyclic: bool,
    transverse: bool,
}

#[derive(Clone, Debug, Serialize)]
struct DiagramJson<'a> {
    name: Option<String>,
    rank: usize,
    hbar: [f64; 2],
    turning_points: Vec<[f64; 2]>,
    window: f64,
    cutoff: f64,
    w_min: &'a WMinReport,
    generations: usize,
    consistency_level: f64,
    consistent: bool,
    rule: &'a str,
    normalization: &'a NormalizationData,
    tameness: &'a TamenessReport,
    requadrature_max_im: f64,
    walls: Vec<WallJson<'a>>,
    collisions: Vec<CollisionJson>,
    consistency: &'a [ConsistencyReport],
}

#[derive(Clone, Debug, Serialize)]
struct CycleJson {
    id: String,
    kind: CycleKind,
    turning_points: [usize; 2],
    /// `[m, re, im]` for `∮ b_m √Q₀ dz`.
    voros: Vec<[f64; 3]>,
    microlocal: MicrolocalMonodromy,
}

#[derive(Clone, Debug, Serialize)]
struct LoopJson {
    collision: usize,
    center: [f64; 2],
    radius: f64,
    matrix: NovikovMatrix,
    identity: bool,
    specialized: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize)]
struct MonodromyJson {
    twist: String,
    cycles: Vec<CycleJson>,
    loops: Vec<LoopJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepFrame {
    pub theta: f64,
    pub curves: usize,
    pub segments: Vec<[usize; 2]>,
    pub degenerate: bool,
    pub error: Option<String>,
    pub svg: Option<String>,
}

/// What a run produced.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub files: Vec<String>,
    pub walls: usize,
    pub collisions: usize,
    pub generations: usize,
    pub cutoff: f64,
    pub consistent: bool,
    pub ode_check: Option<bool>,
    pub degenerate_frames: usize,
}

fn c2(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn polyline(c: &StokesCurve) -> Vec<[f64; 3]> {
    let n = c.samples.len();
    let step = n.div_ceil(MAX_POLYLINE).max(1);
    let mut out: Vec<[f64; 3]> = c.samples.iter().step_by(step).map(|s| [s.z.re, s.z.im, s.mass]).collect();
    if (n - 1) % step != 0 {
        let s = &c.samples[n - 1];
        out.push([s.z.re, s.z.im, s.mass]);
    }
    out
}

fn segment_diagnostics(segs: &[StokesSegment]) -> Vec<String> {
    segs.iter().map(|g| format!("curve {} from {:?} runs into turning point {}", g.curve, g.from, g.to_turning_point)).collect()
}

/// Trace the generation-0 curves far enough to reach the window.
pub fn preliminary_trace(s: &SpectralData, window: f64) -> Result<Vec<StokesCurve>, TraceError> {
    trace_initial(s, &TraceConfig::new(PRELIMINARY_CAP, window))
}

fn write(out: &Path, name: &str, text: &str, files: &mut Vec<String>) -> Result<(), PipelineError> {
    fs::write(out.join(name), text).map_err(|e| PipelineError::new(Stage::Output, FailureClass::Input, format!("{}: {e}", out.join(name).display())))?;
    files.push(name.to_string());
    Ok(())
}

fn to_json<T: Serialize>(x: &T) -> Result<String, PipelineError> {
    let mut s = serde_json::to_string_pretty(x).map_err(|e| numeric(Stage::Output)(&e))?;
    s.push('\n');
    Ok(s)
}

/// Edge cycles around pairs of turning points that see no other critical
/// point nearby.
fn edge_cycles(s: &SpectralData, tracker: &BranchTracker) -> Vec<(usize, usize, Cycle)> {
    let tps = s.turning_point_locations();
    let crit = tracker.critical_points();
    let mut out = Vec::new();
    for i in 0..tps.len() {
        for j in i + 1..tps.len() {
            let (a, b) = (tps[i], tps[j]);
            let d = b - a;
            let clearance = crit
                .iter()
                .filter(|c| (**c - a).norm() > 1e-9 && (**c - b).norm() > 1e-9)
                .map(|c| {
                    let t = (((c - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
                    (c - (a + d * t)).norm()
                })
                .fold(f64::INFINITY, f64::min);
            let width = 0.4 * clearance.min(d.norm());
            let pts = stadium(a, b, width, 64);
            let root = tracker.q0(pts[0]).sqrt();
            let Ok(end) = tracker.continue_root(&pts, root) else { continue };
            if (end - root).norm() > 1e-6 * root.norm() {
                continue;
            }
            out.push((i, j, Cycle::new(format!("edge-{i}-{j}"), pts, root, CycleKind::VorosEdge)));
        }
    }
    out
}

fn monodromy(cfg: &RunConfig, ctx: &ScatteringContext, d: &ScatteringDiagram, window: f64) -> Result<MonodromyJson, PipelineError> {
    let s = ctx.spectral;
    let twist = spin_twists().create(&cfg.twist).map_err(|e| PipelineError::new(Stage::Microlocalization, FailureClass::Input, e.to_string()))?;
    let mut cycles = Vec::new();
    if s.rank() == 2 {
        let q = s.potential().map_err(|e| numeric(Stage::Microlocalization)(&e))?;
        let tracker = BranchTracker::new(&q[0]);
        let series = WkbSeries::from_spectral(s, cfg.hbar_order).map_err(|e| numeric(Stage::Microlocalization)(&e))?;
        for (i, j, cyc) in edge_cycles(s, &tracker) {
            let voros = voros_symbol(&series, &tracker, &cyc).map_err(|e| numeric(Stage::Microlocalization)(&e))?;
            let micro = microlocalize(s, Some(&series), &tracker, &cyc, twist.as_ref()).map_err(|e| match e {
                QuantError::NoTwist { .. } => PipelineError::new(Stage::Microlocalization, FailureClass::Input, e.to_string()),
                _ => numeric(Stage::Microlocalization)(&e),
            })?;
            cycles.push(CycleJson {
                id: cyc.id.clone(),
                kind: cyc.kind,
                turning_points: [i, j],
                voros: voros.iter().map(|(m, v)| [*m as f64, v.re, v.im]).collect(),
                microlocal: micro,
            });
        }
    }
    let mut feats: Vec<C64> = s.turning_point_locations();
    feats.extend(s.finite_singular_points().iter().copied());
    let loops = d
        .collisions
        .iter()
        .enumerate()
        .map(|(k, col)| -> Result<LoopJson, PipelineError> {
            let c = col.point;
            let others = feats
                .iter()
                .copied()
                .chain(d.collisions.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, o)| o.point))
                .map(|z| (z - c).norm())
                .fold(f64::INFINITY, f64::min);
            let r = (0.0125 * window).min(0.4 * others);
            let m = compose_loop_gluing(ctx, d, &loop_around(c, r, 48), Some(c)).map_err(|e| numeric(Stage::Microlocalization)(&e))?;
            let identity = m.deviation().is_empty();
            let specialized = m.specialize(s.hbar()).iter().map(|row| row.iter().map(|z| c2(*z)).collect()).collect();
            Ok(LoopJson { collision: k, center: c2(c), radius: r, matrix: m, identity, specialized })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MonodromyJson { twist: cfg.twist.clone(), cycles, loops })
}

fn ode_check(cfg: &RunConfig, s: &SpectralData) -> Result<Vec<FgReport>, PipelineError> {
    let err = numeric(Stage::OdeCheck);
    if s.rank() != 2 || !s.is_schrodinger() {
        return Err(PipelineError::new(Stage::OdeCheck, FailureClass::Input, "the ODE check needs a Schrödinger-form input"));
    }
    let sectors = sectors_at_infinity(s).map_err(|e| err(&e))?;
    let quad = match cfg.quadrilateral {
        Some(q) => q,
        None if sectors == 4 => [1, 2, 3, 0],
        None => {
            return Err(PipelineError::new(
                Stage::OdeCheck,
                FailureClass::Input,
                format!("∞ has {sectors} sectors; pass the quadrilateral explicitly"),
            ))
        }
    };
    if quad.iter().any(|&k| k >= sectors) {
        return Err(PipelineError::new(Stage::OdeCheck, FailureClass::Input, format!("quadrilateral {quad:?} names a sector ≥ {sectors}")));
    }
    let q = s.potential().map_err(|e| err(&e))?;
    let tracker = BranchTracker::new(&q[0]);
    let phase = s.hbar() / s.hbar().norm();
    let hbars: Vec<C64> = cfg.ode_hbars.iter().map(|h| phase * *h).collect();
    edge_cycles(s, &tracker)
        .into_iter()
        .map(|(_, _, cyc)| compare_voros_fg(s, quad, &cyc, cfg.ode_order, &hbars, C64::default()).map_err(|e| err(&e)))
        .collect()
}

/// One traced graph per ♄-phase; per-frame failures are recorded, not fatal.
pub fn theta_sweep(s: &SpectralData, thetas: &[f64], window: f64) -> Vec<SweepFrame> {
    let modulus = s.hbar().norm();
    thetas
        .par_iter()
        .map(|&theta| {
            let frame = |error: String| SweepFrame { theta, curves: 0, segments: vec![], degenerate: false, error: Some(error), svg: None };
            let st = match s.with_hbar(C64::from_polar(modulus, theta)) {
                Ok(st) => st,
                Err(e) => return frame(e.to_string()),
            };
            let curves = match preliminary_trace(&st, window) {
                Ok(c) => c,
                Err(e) => return frame(e.to_string()),
            };
            let segs = detect_stokes_segments(&curves);
            let mut segments: Vec<[usize; 2]> = segs
                .iter()
                .filter_map(|g| match g.from {
                    Source::TurningPoint(a) => Some([a.min(g.to_turning_point), a.max(g.to_turning_point)]),
                    Source::Collision(_) => None,
                })
                .collect();
            segments.sort();
            segments.dedup();
            let pts: Vec<Vec<C64>> = curves.iter().map(|c| c.points()).collect();
            let strokes: Vec<Stroke> = curves.iter().zip(&pts).map(|(c, p)| Stroke { points: p, ty: c.ty, generation: 0 }).collect();
            let svg = render(&st, &strokes, &[], window, &format!("theta = {theta}"));
            SweepFrame { theta, curves: curves.len(), degenerate: !segs.is_empty(), segments, error: None, svg: Some(svg) }
        })
        .collect()
}

/// Run every stage and write the artifacts into `cfg.out`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    set_exp_merge_tol(cfg.eps_t);
    let name = fs::read_to_string(&cfg.input).ok().and_then(|t| parse_spectral(&t).ok()).and_then(|x| x.name);
    let s = cfg.load()?;
    if s.turning_points().iter().any(|t| !t.is_double_branch()) {
        return Err(PipelineError::new(Stage::TurningPoints, FailureClass::Degeneracy, "a turning point is not a simple branch point"));
    }
    if s.rank() == 2 {
        s.check_weakly_gmn().map_err(|d| PipelineError::new(Stage::TurningPoints, FailureClass::Degeneracy, "not weakly GMN").with(d))?;
    }
    let window = cfg.window.unwrap_or_else(|| window_radius(&s));
    let tol_x = cfg.tol_x.unwrap_or(TOL_X_FACTOR * s.scale());

    // preliminary trace for segments, collisions and tameness
    let curves = preliminary_trace(&s, window).map_err(|e| numeric(Stage::Tracing)(&e))?;
    let segs = detect_stokes_segments(&curves);
    if !segs.is_empty() {
        return Err(PipelineError::new(Stage::Tracing, FailureClass::Degeneracy, "Stokes segment at this ♄-phase").with(segment_diagnostics(&segs)));
    }
    let collisions = detect_collisions(&s, &curves, tol_x);
    let tameness = check_tameness(&s, &curves, &collisions);
    if !tameness.tame {
        let diag = tameness.violations.iter().map(|v| format!("{v:?}")).collect();
        return Err(PipelineError::new(Stage::Tameness, FailureClass::Degeneracy, "Stokes graph is not tame").with(diag));
    }

    let mut ctx = ScatteringContext::new(&s, &cfg.monodromy_rule, &cfg.normalization, cfg.hbar_order, window).map_err(scattering_error)?;
    ctx.tol_x = tol_x;
    let cutoff = match cfg.truncation {
        Some(w) => w,
        // three times the lightest first collision; generation-0 weights are masses
        None => collisions
            .iter()
            .filter_map(|c| {
                let mut m: Vec<f64> = c.hits.iter().map(|h| h.mass).collect();
                m.sort_by(f64::total_cmp);
                (m.len() >= 2).then(|| 3.0 * (m[0] + m[1]))
            })
            .fold(f64::INFINITY, f64::min),
    };
    let cutoff = if cutoff.is_finite() { cutoff } else { DEFAULT_TRUNCATION };
    let (d, run) = run_scattering(&ctx, cutoff, None).map_err(scattering_error)?;
    let mut max_im: f64 = 0.0;
    for w in &d.walls {
        let (im, _) = requadrature(&s, &w.curve).map_err(|e| numeric(Stage::Scattering)(&e))?;
        max_im = max_im.max(im);
    }
    if max_im > cfg.tol_im {
        return Err(PipelineError::new(Stage::Scattering, FailureClass::Numeric, format!("requadrature finds |Im∫| = {max_im:e} > {:e}", cfg.tol_im)));
    }
    let consistent = run.reports.last().is_some_and(|r| r.consistent);

    // generation-0 walls are drawn out to the window; beyond the cutoff their
    // gluings are trivial modulo T^W
    let wall_curves: Vec<StokesCurve> = d
        .walls
        .iter()
        .map(|w| match curves.get(w.id) {
            Some(c) if w.generation == 0 && c.source == w.curve.source && c.ty == w.curve.ty => c.clone(),
            _ => w.curve.clone(),
        })
        .collect();
    let g = build_graph(&s, &wall_curves, &d.collisions, window).map_err(|e| numeric(Stage::Graph)(&e))?;
    let quant = build_quantization(&ctx, &d, &g, cfg.grid).map_err(|e| match e {
        QuantError::Inconsistent { .. } => PipelineError::new(Stage::Quantization, FailureClass::Degeneracy, e.to_string()),
        _ => numeric(Stage::Quantization)(&e),
    })?;
    let mono = monodromy(cfg, &ctx, &d, window)?;
    let ode = if cfg.ode_check { Some(ode_check(cfg, &s)?) } else { None };
    let frames = theta_sweep(&s, &cfg.sweep, window);

    let walls: Vec<WallJson> = d
        .walls
        .iter()
        .map(|w| WallJson {
            id: w.id,
            ty: [w.ty.0 + 1, w.ty.1 + 1],
            generation: w.generation,
            source: w.curve.source,
            terminus: &w.curve.terminus,
            weight: w.weight(),
            end_mass: w.curve.end_mass(),
            phi: &w.phi,
            polyline: polyline(&w.curve),
        })
        .collect();
    let cols: Vec<CollisionJson> = d
        .collisions
        .iter()
        .enumerate()
        .map(|(k, c)| CollisionJson {
            id: k,
            point: c2(c.point),
            incident: c.hits.iter().map(|h| h.curve).collect(),
            types: c.hits.iter().map(|h| [h.ty.0 + 1, h.ty.1 + 1]).collect(),
            masses: c.hits.iter().map(|h| h.mass).collect(),
            weight: weight_law_bound(&d, k),
            ordered: c.ordered,
            cyclic: c.cyclic,
            transverse: c.transverse,
        })
        .collect();
    let diagram = DiagramJson {
        name,
        rank: s.rank(),
        hbar: c2(s.hbar()),
        turning_points: s.turning_point_locations().into_iter().map(c2).collect(),
        window,
        cutoff,
        w_min: &run.w_min,
        generations: run.generations,
        consistency_level: d.consistency_level,
        consistent,
        rule: &d.rule,
        normalization: &d.normalization,
        tameness: &tameness,
        requadrature_max_im: max_im,
        walls,
        collisions: cols,
        consistency: &run.reports,
    };

    fs::create_dir_all(&cfg.out).map_err(|e| PipelineError::new(Stage::Output, FailureClass::Input, format!("{}: {e}", cfg.out.display())))?;
    let mut files = Vec::new();
    write(&cfg.out, "diagram.json", &to_json(&diagram)?, &mut files)?;
    write(&cfg.out, "quantization.json", &to_json(&quant)?, &mut files)?;
    write(&cfg.out, "monodromy.json", &to_json(&mono)?, &mut files)?;
    let pts: Vec<Vec<C64>> = wall_curves.iter().map(|c| c.points()).collect();
    let strokes: Vec<Stroke> = d.walls.iter().zip(&pts).map(|(w, p)| Stroke { points: p, ty: w.ty, generation: w.generation }).collect();
    let marks: Vec<C64> = d.collisions.iter().map(|c| c.point).collect();
    let title = format!("Stokes graph, hbar = {}", s.hbar());
    write(&cfg.out, "graph.svg", &render(&s, &strokes, &marks, window, &title), &mut files)?;
    let ode_pass = match &ode {
        Some(reports) => {
            write(&cfg.out, "odecheck.json", &to_json(reports)?, &mut files)?;
            Some(reports.iter().all(FgReport::pass))
        }
        None => None,
    };
    let mut degenerate_frames = 0;
    if !cfg.sweep.is_empty() {
        for (k, f) in frames.iter().enumerate() {
            if let Some(svg) = &f.svg {
                write(&cfg.out, &format!("sweep_{k:03}.svg"), svg, &mut files)?;
            }
            degenerate_frames += f.degenerate as usize;
        }
        let summary: Vec<SweepFrame> = frames.iter().map(|f| SweepFrame { svg: None, ..f.clone() }).collect();
        write(&cfg.out, "sweep.json", &to_json(&summary)?, &mut files)?;
    }
    Ok(RunSummary {
        files,
        walls: d.walls.len(),
        collisions: d.collisions.len(),
        generations: run.generations,
        cutoff,
        consistent,
        ode_check: ode_pass,
        degenerate_frames,
    })
}
