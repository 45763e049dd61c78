//! Command-line front end for the scattering pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wkbscatter::pipeline::{run_pipeline, RunConfig};
use wkbscatter::quantization::spin_twists;
use wkbscatter::scattering::{monodromy_rules, normalization_schemes};

/// Stokes graphs, scattering diagrams and Voros symbols for a spectral curve.
///
/// Exit codes: 0 ok, 1 degeneracy (Stokes segment, non-tame graph), 2 input
/// error, 3 numerical failure.
#[derive(Parser, Debug)]
#[command(name = "wkbscatter", version)]
struct Args {
    /// Run configuration (JSON); flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spectral data (JSON).
    #[arg(long)]
    input: Option<PathBuf>,
    /// |♄|; defaults to the modulus in the input file.
    #[arg(long)]
    hbar_mod: Option<f64>,
    /// arg ♄ in radians; defaults to the phase in the input file.
    #[arg(long, allow_hyphen_values = true)]
    hbar_arg: Option<f64>,
    /// Truncation W; defaults to three times the lightest first collision.
    #[arg(long)]
    truncation: Option<f64>,
    /// ℏ-order N of the WKB data.
    #[arg(long)]
    hbar_order: Option<usize>,
    /// Normalization scheme.
    #[arg(long)]
    normalization: Option<String>,
    /// Rule for point monodromies at collisions.
    #[arg(long)]
    monodromy_rule: Option<String>,
    /// Spin twist for microlocal monodromies.
    #[arg(long)]
    twist: Option<String>,
    /// Window radius.
    #[arg(long)]
    window: Option<f64>,
    /// ♄-phases for a sweep, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sweep: Option<Vec<f64>>,
    /// Compare Voros symbols with ODE cross-ratios.
    #[arg(long)]
    ode_check: bool,
    /// |ℏ| values for the ODE check, comma separated.
    #[arg(long, value_delimiter = ',')]
    ode_hbars: Option<Vec<f64>>,
    /// Truncation order of the Voros sum in the ODE check.
    #[arg(long)]
    ode_order: Option<usize>,
    /// Sector indices at ∞ of the quadrilateral, counterclockwise.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    quadrilateral: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid size for sampled region primitives.
    #[arg(long)]
    grid: Option<usize>,
    /// Bound on |Im∫| along traced curves.
    #[arg(long)]
    tol_im: Option<f64>,
    /// Collision refinement tolerance.
    #[arg(long)]
    tol_x: Option<f64>,
    /// Exponent merge tolerance for series.
    #[arg(long)]
    eps_t: Option<f64>,
    /// Turning-point exclusion radius.
    #[arg(long)]
    delta_tp: Option<f64>,
    /// List the registered strategies and exit.
    #[arg(long)]
    list: bool,
}

fn input_error(msg: String) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn build_config(a: Args) -> Result<RunConfig, String> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = a.$f { cfg.$f = v; } )* };
    }
    macro_rules! set_opt {
        ($($f:ident),*) => { $( if a.$f.is_some() { cfg.$f = a.$f; } )* };
    }
    set!(input, hbar_order, normalization, monodromy_rule, twist, sweep, ode_hbars, ode_order, out, grid, tol_im, eps_t);
    set_opt!(hbar_mod, hbar_arg, truncation, window, tol_x, delta_tp);
    if let Some(q) = a.quadrilateral {
        cfg.quadrilateral = Some([q[0], q[1], q[2], q[3]]);
    }
    cfg.ode_check |= a.ode_check;
    if cfg.input.as_os_str().is_empty() {
        return Err("no input given (--input or \"input\" in --config)".into());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list {
        println!("monodromy rules: {}", monodromy_rules().names().join(", "));
        println!("normalizations: {}", normalization_schemes().names().join(", "));
        println!("spin twists: {}", spin_twists().names().join(", "));
        return ExitCode::SUCCESS;
    }
    let cfg = match build_config(args) {
        Ok(c) => c,
        Err(e) => return input_error(e),
    };
    match run_pipeline(&cfg) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            if summary.ode_check == Some(false) {
                eprintln!("ODE check: residuals outside the asymptotic band (see odecheck.json)");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            for d in &e.diagnostics {
                eprintln!("  {d}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
