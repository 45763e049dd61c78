use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::{Path, PathBuf};

use num::complex::Complex64 as C64;
use wkbscatter::algfun::airy;
use wkbscatter::pipeline::{preliminary_trace, run_pipeline, theta_sweep, FailureClass, RunConfig, Stage};

fn config(name: &str, out: &Path) -> RunConfig {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    RunConfig { input: root.join(format!("{name}.json")), out: out.to_path_buf(), ..RunConfig::default() }
}

fn read(dir: &Path, f: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(f)).unwrap()).unwrap()
}

#[test]
fn airy_three_rays_no_collisions() {
    let dir = tempfile::tempdir().unwrap();
    let sum = run_pipeline(&config("airy", dir.path())).unwrap();
    assert_eq!((sum.walls, sum.collisions, sum.generations), (3, 0, 0));
    let d = read(dir.path(), "diagram.json");
    let walls = d["walls"].as_array().unwrap();
    assert!(walls.iter().all(|w| w["generation"] == 0 && w["terminus"]["kind"] == "mass-cap"));
    let q = read(dir.path(), "quantization.json");
    assert_eq!(q["regions"].as_array().unwrap().len(), 3);
    assert_eq!(q["simple"], true);
}

#[test]
fn weber_cycles_ode_report_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("weber", dir.path());
    cfg.ode_check = true;
    cfg.sweep = vec![0.0, FRAC_PI_2];
    let sum = run_pipeline(&cfg).unwrap();
    assert_eq!(sum.walls, 6);
    assert_eq!(sum.degenerate_frames, 1);
    let m = read(dir.path(), "monodromy.json");
    let cyc = &m["cycles"][0];
    assert_eq!(cyc["kind"], "voros-edge");
    let lead = &cyc["voros"][0];
    assert_eq!(lead[0].as_f64().unwrap(), -1.0);
    assert!((lead[2].as_f64().unwrap().abs() - PI).abs() < 1e-8);
    let ode = read(dir.path(), "odecheck.json");
    assert_eq!(ode[0]["rows"].as_array().unwrap().len(), 3);
    let sw = read(dir.path(), "sweep.json");
    assert_eq!(sw[0]["degenerate"], false);
    assert_eq!(sw[1]["degenerate"], true);
    assert_eq!(sw[1]["segments"][0], serde_json::json!([0, 1]));
}

#[test]
fn bnr_walls_collisions_and_loops() {
    let dir = tempfile::tempdir().unwrap();
    let sum = run_pipeline(&config("bnr", dir.path())).unwrap();
    assert!(sum.consistent);
    assert_eq!(sum.collisions, 2);
    let d = read(dir.path(), "diagram.json");
    let walls = d["walls"].as_array().unwrap();
    assert_eq!(walls.iter().filter(|w| w["generation"] == 0).count(), 6);
    assert!(walls.iter().any(|w| w["generation"] == 1));
    for c in d["collisions"].as_array().unwrap() {
        assert_eq!(c["ordered"], true);
        assert_eq!(c["cyclic"], false);
    }
    let m = read(dir.path(), "monodromy.json");
    assert!(m["cycles"].as_array().unwrap().is_empty());
    for l in m["loops"].as_array().unwrap() {
        assert_eq!(l["identity"], true);
    }
}

#[test]
fn segment_phase_is_a_degeneracy() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("weber", dir.path());
    cfg.hbar_arg = Some(FRAC_PI_2);
    let e = run_pipeline(&cfg).unwrap_err();
    assert_eq!((e.stage, e.class, e.exit_code()), (Stage::Tracing, FailureClass::Degeneracy, 1));
    assert_eq!(e.diagnostics.len(), 2);
}

#[test]
fn unknown_strategy_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("airy", dir.path());
    cfg.monodromy_rule = "sideways".into();
    assert_eq!(run_pipeline(&cfg).unwrap_err().exit_code(), 2);
}

#[test]
fn airy_rays_rotate_with_the_phase() {
    // rays sit at arg z = (2/3)(θ + kπ)
    for theta in [0.0, 0.3, 0.6, 0.9] {
        let s = airy(C64::from_polar(1.0, theta));
        let curves = preliminary_trace(&s, 4.0).unwrap();
        let mut args: Vec<f64> = curves.iter().map(|c| c.samples.last().unwrap().z.arg().rem_euclid(2.0 * PI)).collect();
        args.sort_by(f64::total_cmp);
        for (k, a) in args.iter().enumerate() {
            let want = (2.0 / 3.0 * (theta + k as f64 * PI)).rem_euclid(2.0 * PI);
            assert!((a - want).abs() < 1e-6, "θ = {theta}: {a} vs {want}");
        }
    }
    assert!(theta_sweep(&airy(C64::new(1.0, 0.0)), &[], 4.0).is_empty());
}
