//! Command-line front end. Every command writes CSV/JSON outputs plus a
//! `manifest.json` recording the resolved parameters, the seed and the
//! emitted files; `replay` re-runs a manifest and compares bytes.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analytic::limits::partly_stuck_limit_density;
use crate::analytic::stationary::stationary_grid;
use crate::analytic::{
    limit_pdf_stuck, limit_pdf_viscous, linspace, normalizer_residual, potential_minimizer, resolved_grid,
    stationary_pdf, DensityCurve, Potential,
};
use crate::error::{Error, Result};
use crate::model::{scale_to_unit_diffusion, DriftScale, ModelParams, ReducedParams};
use crate::propagator::{propagator_forced_curve, propagator_free_curve, FallbackConfig};
use crate::simulate::{
    euler_maruyama_ensemble, girsanov_propagator_estimate, GirsanovRequest, PathEnsemble, SimConfig,
};
use crate::stats::{ks_distance, Ecdf};
use crate::validate::{free_cdf_table, run_validation, Level};

/// Seed used when neither `--seed` nor `DRYFRICTION_SEED` is given.
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const SEED_ENV: &str = "DRYFRICTION_SEED";
/// Revision of the formula set the numerics implement; bumped whenever a
/// closed form changes.
pub const FORMULA_REVISION: &str = "formulas-r3";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const FIGURE1_STUCK: [&str; 3] = ["stuck_w0", "stuck_w0.4", "stuck_w0.9"];
pub const FIGURE1_PARTLY: &str = "partly_stuck_tau1";
pub const FIGURE1_VISCOUS: &str = "viscous_tau1_y3";

#[derive(Debug, Parser)]
#[command(
    name = "dryfriction",
    version,
    about = "Langevin dynamics with dry friction: densities, propagators, simulation"
)]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary density in reduced coordinates.
    Stationary(StationaryArgs),
    /// Data for the limit-law figure: five curves and an index.
    Figure1(Figure1Args),
    /// Transition density (unit diffusion, unit drift scale).
    Propagator(PropagatorArgs),
    /// Euler–Maruyama ensemble.
    Simulate(SimulateArgs),
    /// Run the numerical gates and write a report.
    Validate(ValidateArgs),
    /// Re-run a manifest and compare against its recorded outputs.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct StationaryArgs {
    #[arg(long)]
    pub nu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_hi: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Figure1Args {
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closed,
    Quadrature,
    Girsanov,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PropagatorArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub v0: f64,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, allow_negative_numbers = true, default_value_t = -4.0)]
    pub grid_lo: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 4.0)]
    pub grid_hi: f64,
    #[arg(long, default_value_t = 801)]
    pub points: usize,
    /// Paths for the weighted-path estimator (and the quadrature fallback).
    #[arg(long)]
    pub n_paths: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Use the simulation route even when the quadrature gate passes.
    #[arg(long)]
    pub force_fallback: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub diffusion: f64,
    /// Prefactor of the drift, 0.5 or 1.
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub drift_scale: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub v0: f64,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n_paths: usize,
    /// Also record local time, occupation and path integrals per path.
    #[arg(long)]
    pub record_functionals: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Level::Fast)]
    pub level: Level,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory for the re-run; defaults to the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    #[serde(rename = "crate")]
    pub crate_version: String,
    pub formulas: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub seed: u64,
    pub versions: Versions,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: &impl Serialize, seed: u64, outputs: Vec<String>) -> Self {
        RunManifest {
            command: command.into(),
            parameters: serde_json::to_value(parameters).expect("arguments serialize"),
            seed,
            versions: Versions {
                crate_version: env!("CARGO_PKG_VERSION").into(),
                formulas: FORMULA_REVISION.into(),
            },
            outputs,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: "manifest",
            detail: e.to_string(),
        })
    }
}

/// Files produced by a command, as `(file name, contents)`.
type Outputs = Vec<(String, String)>;

fn write_outputs(dir: &Path, files: &Outputs) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

fn finish(command: &str, args: &impl Serialize, seed: u64, dir: &Path, files: &Outputs) -> Result<RunManifest> {
    let outputs = write_outputs(dir, files)?;
    let manifest = RunManifest::new(command, args, seed, outputs);
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializes") + "\n"
}

/// Makes sure `0` is a grid node when the grid straddles it, so curve
/// values at the origin are read off directly.
fn with_origin(mut grid: Vec<f64>) -> Vec<f64> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if lo < 0.0 && hi > 0.0 {
        let i = grid.partition_point(|&g| g < 0.0);
        let step = (hi - lo) / (grid.len() - 1) as f64;
        if grid[i] == 0.0 {
        } else if grid[i] < 1e-9 * step {
            grid[i] = 0.0;
        } else if -grid[i - 1] < 1e-9 * step {
            grid[i - 1] = 0.0;
        } else {
            grid.insert(i, 0.0);
        }
    }
    grid
}

fn check_grid(lo: f64, hi: f64, points: usize) -> Result<()> {
    if !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
        return Err(Error::invalid(
            "grid_hi",
            format!("need finite grid_lo < grid_hi, got [{lo}, {hi}]"),
        ));
    }
    if points < 2 {
        return Err(Error::invalid("points", "need at least 2"));
    }
    Ok(())
}

pub fn stationary_outputs(args: &StationaryArgs) -> Result<(DensityCurve, Outputs)> {
    let r = ReducedParams::new(args.nu, args.tau, args.y)?;
    let grid = if args.grid_lo.is_none() && args.grid_hi.is_none() && args.points.is_none() {
        stationary_grid(&r)?
    } else {
        let default = stationary_grid(&r)?;
        let lo = args.grid_lo.unwrap_or(default[0]);
        let hi = args.grid_hi.unwrap_or(default[default.len() - 1]);
        let points = args.points.unwrap_or(crate::analytic::curve::DEFAULT_GRID_POINTS);
        check_grid(lo, hi, points)?;
        linspace(lo, hi, points)
    };
    let check = normalizer_residual(&r)?;
    let curve = stationary_pdf(&r, &with_origin(grid))?
        .with_meta("normalizer", check.ln_closed_form.exp())
        .with_meta("ln_normalizer", check.ln_closed_form)
        .with_meta("normalizer_quadrature_relative_error", check.relative_error);
    let files = vec![
        ("stationary.csv".to_string(), curve.to_csv()),
        ("stationary.json".to_string(), curve.to_json() + "\n"),
    ];
    Ok((curve, files))
}

fn cmd_stationary(args: &StationaryArgs, seed: u64) -> Result<i32> {
    let (curve, files) = stationary_outputs(args)?;
    println!(
        "normalizer = {:.15e} (ln = {:.15e}); quadrature relative residual = {:.3e}",
        curve.meta["normalizer"].as_f64().unwrap_or(f64::NAN),
        curve.meta["ln_normalizer"].as_f64().unwrap_or(f64::NAN),
        curve.meta["normalizer_quadrature_relative_error"]
            .as_f64()
            .unwrap_or(f64::NAN),
    );
    finish("stationary", args, seed, &args.out, &files)?;
    Ok(0)
}

/// Grid from `lo` to `hi` through 0, resolving features of width `scale`.
fn grid_through_zero(lo: f64, hi: f64, scale: f64) -> Vec<f64> {
    let mut g = resolved_grid(lo, 0.0, scale);
    g.extend(resolved_grid(0.0, hi, scale).into_iter().skip(1));
    g
}

/// The five figure curves, keyed by name.
pub fn figure1_curves() -> Result<Vec<(String, DensityCurve)>> {
    let mut out = Vec::with_capacity(5);
    for (name, w) in FIGURE1_STUCK.iter().zip([0.0, 0.4, 0.9]) {
        let grid = grid_through_zero(-20.0 / (1.0 + w), 20.0 / (1.0 - w), 0.25);
        let curve = limit_pdf_stuck(w, &grid)?.with_meta("y", w).with_meta("tau", 1.0);
        out.push((name.to_string(), curve));
    }
    // opposing branch on s <= 0 (left limit 2 at the origin), driven
    // half-Gaussian on s > 0
    let tau = 1.0;
    let grid = grid_through_zero(-8.0, 6.0, 0.05);
    let values = grid
        .iter()
        .map(|&s| {
            if s <= 0.0 {
                Ok(2.0 * (2.0 * s).exp())
            } else {
                partly_stuck_limit_density(crate::analytic::Side::Driven, tau, s)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let partly = DensityCurve::new(grid, values)?
        .with_meta("kind", "partly_stuck_limit_composite")
        .with_meta("tau", tau)
        .with_meta("y", 1.0)
        .with_meta("variable", "s<=0: sgn(a) v/nu; s>0: sgn(a) v/sqrt(nu)")
        .with_meta("opposing_height_at_0", 2.0)
        .with_meta("driven_height_at_0", 2.0 / (2.0 * std::f64::consts::PI * tau).sqrt());
    out.push((FIGURE1_PARTLY.to_string(), partly));
    let (tau, y) = (1.0, 3.0);
    let mean = potential_minimizer(&Potential::new(tau, y)?);
    let viscous = limit_pdf_viscous(tau, &grid_through_zero(-8.0, 8.0, 0.05))?
        .with_meta("y", y)
        .with_meta("asymptotic_mean", mean);
    out.push((FIGURE1_VISCOUS.to_string(), viscous));
    Ok(out)
}

pub fn figure1_outputs() -> Result<Outputs> {
    let curves = figure1_curves()?;
    let index: Vec<Value> = curves
        .iter()
        .map(|(name, c)| json!({ "name": name, "file": format!("{name}.csv"), "annotations": c.meta }))
        .collect();
    let mut files: Outputs = curves
        .iter()
        .map(|(name, c)| (format!("{name}.csv"), c.to_csv()))
        .collect();
    files.push(("figure1.json".to_string(), pretty(&json!({ "curves": index }))));
    Ok(files)
}

fn cmd_figure1(args: &Figure1Args, seed: u64) -> Result<i32> {
    let files = figure1_outputs()?;
    finish("figure1", args, seed, &args.out_dir, &files)?;
    println!("wrote {} curves to {}", files.len() - 1, args.out_dir.display());
    Ok(0)
}

pub fn propagator_outputs(args: &PropagatorArgs, seed: u64) -> Result<(DensityCurve, Outputs)> {
    check_grid(args.grid_lo, args.grid_hi, args.points)?;
    let grid = with_origin(linspace(args.grid_lo, args.grid_hi, args.points));
    let n_paths = args.n_paths.unwrap_or(100_000);
    let dt = args.dt.unwrap_or(1e-3);
    let curve = match args.method {
        Method::Closed => {
            if args.a != 0.0 {
                return Err(Error::invalid(
                    "a",
                    "method closed needs a = 0; use --method quadrature",
                ));
            }
            if args.alpha != 0.0 {
                return Err(Error::invalid(
                    "alpha",
                    "method closed needs alpha = 0; use --method girsanov",
                ));
            }
            let simulation_flags = [
                ("n_paths", args.n_paths.is_some()),
                ("dt", args.dt.is_some()),
                ("bandwidth", args.bandwidth.is_some()),
                ("force_fallback", args.force_fallback),
            ];
            if let Some((name, _)) = simulation_flags.iter().find(|f| f.1) {
                return Err(Error::invalid(name, "not used by method closed"));
            }
            propagator_free_curve(args.v0, args.t, args.delta, &grid)?.with_meta("method", "closed")
        }
        Method::Quadrature => {
            if args.alpha != 0.0 {
                return Err(Error::invalid(
                    "alpha",
                    "method quadrature needs alpha = 0; use --method girsanov",
                ));
            }
            let fallback = FallbackConfig {
                n_paths,
                dt,
                seed,
                bandwidth: args.bandwidth,
            };
            propagator_forced_curve(
                args.v0,
                args.t,
                args.delta,
                args.a,
                &grid,
                &fallback,
                args.force_fallback,
            )?
            .with_meta("method", "quadrature")
        }
        Method::Girsanov => {
            let req = GirsanovRequest {
                v0: args.v0,
                t: args.t,
                delta: args.delta,
                a: args.a,
                alpha: args.alpha,
                n_paths,
                dt,
                seed,
                bandwidth: args.bandwidth,
            };
            girsanov_propagator_estimate(&req, &grid)?
                .curve
                .with_meta("method", "girsanov")
        }
    };
    let files = vec![
        ("propagator.csv".to_string(), curve.to_csv()),
        ("propagator.json".to_string(), curve.to_json() + "\n"),
    ];
    Ok((curve, files))
}

fn cmd_propagator(args: &PropagatorArgs, seed: u64) -> Result<i32> {
    let (curve, files) = propagator_outputs(args, seed)?;
    for key in [
        "fallback_used",
        "error_estimate",
        "panels_used",
        "gate_max_abs_error",
        "ess",
        "bandwidth",
        "warning",
    ] {
        if let Some(v) = curve.meta.get(key) {
            println!("{key} = {v}");
        }
    }
    finish("propagator", args, seed, &args.out, &files)?;
    Ok(0)
}

fn sim_config(args: &SimulateArgs, seed: u64) -> Result<SimConfig> {
    let drift_scale = DriftScale::try_from(args.drift_scale)
        .map_err(|_| Error::invalid("drift_scale", format!("must be 0.5 or 1, got {}", args.drift_scale)))?;
    let cfg = SimConfig {
        params: ModelParams::new(args.alpha, args.a, args.delta, args.diffusion, drift_scale)?,
        v0: args.v0,
        t_final: args.t,
        dt: args.dt,
        n_paths: args.n_paths,
        seed,
        record_functionals: args.record_functionals,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn simulate_run(args: &SimulateArgs, seed: u64) -> Result<(PathEnsemble, Outputs)> {
    let ens = euler_maruyama_ensemble(&sim_config(args, seed)?)?;
    let files = vec![
        ("terminal.csv".to_string(), ens.to_csv()),
        ("summary.json".to_string(), pretty(&ens.summary())),
    ];
    Ok((ens, files))
}

/// Contents of every file `simulate` writes, without touching the disk.
pub fn simulate_outputs(args: &SimulateArgs, seed: u64) -> Result<Outputs> {
    Ok(simulate_run(args, seed)?.1)
}

/// KS distance of the terminal sample to the closed-form law, when the
/// model is driftless (`alpha = a = 0`, unit drift scale, `D > 0`).
pub fn simulate_closed_form_ks(args: &SimulateArgs, terminal: &[f64]) -> Result<Option<f64>> {
    if args.alpha != 0.0 || args.a != 0.0 || args.drift_scale != 1.0 || !(args.diffusion > 0.0) {
        return Ok(None);
    }
    let params = ModelParams::new(0.0, 0.0, args.delta, args.diffusion, DriftScale::Unit)?;
    let scaled = scale_to_unit_diffusion(&params, args.t)?;
    let table = free_cdf_table(args.v0, scaled.time, scaled.params.delta())?;
    Ok(Some(ks_distance(&Ecdf::from_slice(terminal)?, |x| table.eval(x))))
}

fn cmd_simulate(args: &SimulateArgs, seed: u64) -> Result<i32> {
    let (ens, files) = simulate_run(args, seed)?;
    let s = ens.summary();
    println!("n = {}, mean = {:.6}, variance = {:.6}", s.n, s.mean, s.variance);
    if let Some(ks) = simulate_closed_form_ks(args, &ens.terminal)? {
        println!("ks_vs_closed_form = {ks:.6}");
    }
    finish("simulate", args, seed, &args.out, &files)?;
    Ok(0)
}

fn cmd_validate(args: &ValidateArgs, seed: u64) -> Result<i32> {
    let report = run_validation(args.level, seed);
    for g in &report.gates {
        println!("{}", g.summary_line());
    }
    let dir = match args.report.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = args
        .report
        .file_name()
        .ok_or_else(|| Error::invalid("report", "must name a file"))?
        .to_string_lossy()
        .into_owned();
    let stem = args
        .report
        .file_stem()
        .map_or("report".into(), |s| s.to_string_lossy().into_owned());
    let files = vec![(name, pretty(&report))];
    let outputs = write_outputs(&dir, &files)?;
    let manifest = RunManifest::new("validate", args, seed, outputs);
    let path = dir.join(format!("{stem}.manifest.json"));
    std::fs::write(&path, pretty(&manifest)).map_err(|e| Error::io(&path, e))?;
    println!(
        "{}",
        if report.passed {
            "all gates passed"
        } else {
            "some gates failed"
        }
    );
    Ok(if report.passed { 0 } else { 1 })
}

fn parse_params<T: for<'de> Deserialize<'de>>(m: &RunManifest) -> Result<T> {
    serde_json::from_value(m.parameters.clone()).map_err(|e| Error::Parse {
        what: "manifest parameters",
        detail: e.to_string(),
    })
}

/// Re-runs a manifest. With `--out`, the files are written there and each
/// is compared byte for byte with the recorded one; exit 1 on a mismatch.
fn cmd_replay(args: &ReplayArgs) -> Result<i32> {
    let m = RunManifest::read(&args.manifest)?;
    let (dir, files) = match m.command.as_str() {
        "stationary" => {
            let mut p: StationaryArgs = parse_params(&m)?;
            if let Some(out) = &args.out {
                p.out = out.clone();
            }
            let files = stationary_outputs(&p)?.1;
            finish("stationary", &p, m.seed, &p.out, &files)?;
            (p.out, files)
        }
        "figure1" => {
            let mut p: Figure1Args = parse_params(&m)?;
            if let Some(out) = &args.out {
                p.out_dir = out.clone();
            }
            let files = figure1_outputs()?;
            finish("figure1", &p, m.seed, &p.out_dir, &files)?;
            (p.out_dir, files)
        }
        "propagator" => {
            let mut p: PropagatorArgs = parse_params(&m)?;
            if let Some(out) = &args.out {
                p.out = out.clone();
            }
            let files = propagator_outputs(&p, m.seed)?.1;
            finish("propagator", &p, m.seed, &p.out, &files)?;
            (p.out, files)
        }
        "simulate" => {
            let mut p: SimulateArgs = parse_params(&m)?;
            if let Some(out) = &args.out {
                p.out = out.clone();
            }
            let files = simulate_outputs(&p, m.seed)?;
            finish("simulate", &p, m.seed, &p.out, &files)?;
            (p.out, files)
        }
        other => {
            return Err(Error::Parse {
                what: "manifest",
                detail: format!("command `{other}` cannot be replayed"),
            })
        }
    };
    let mut mismatches = 0;
    for recorded in &m.outputs {
        let recorded = Path::new(recorded);
        let Some(name) = recorded.file_name() else { continue };
        let Some((_, fresh)) = files.iter().find(|(n, _)| name == n.as_str()) else {
            println!("missing {}", name.to_string_lossy());
            mismatches += 1;
            continue;
        };
        match std::fs::read(recorded) {
            Ok(bytes) if bytes == fresh.as_bytes() => println!("identical {}", recorded.display()),
            Ok(_) => {
                println!("differs {} (re-run in {})", recorded.display(), dir.display());
                mismatches += 1;
            }
            Err(_) => println!("unavailable {} (not compared)", recorded.display()),
        }
    }
    Ok(if mismatches == 0 { 0 } else { 1 })
}

pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Stationary(a) => cmd_stationary(a, cli.seed),
        Command::Figure1(a) => cmd_figure1(a, cli.seed),
        Command::Propagator(a) => cmd_propagator(a, cli.seed),
        Command::Simulate(a) => cmd_simulate(a, cli.seed),
        Command::Validate(a) => cmd_validate(a, cli.seed),
        Command::Replay(a) => cmd_replay(a),
    }
}

/// Error text with parameter names spelled as flags (`n_paths` becomes
/// `--n-paths`).
pub fn describe(e: &Error) -> String {
    match e {
        Error::InvalidParameter { name, reason } => format!("invalid value for --{}: {reason}", name.replace('_', "-")),
        other => other.to_string(),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            e.exit_code()
        }
    }
}
