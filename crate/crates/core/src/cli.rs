//! `nsrl` command-line verbs.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::diagnostics::{
    ckn_scan, criterion_profile, decay_scan, energy_residual, g_profile, good_slices, TestFunction, TimeSeries,
    WindowFamily,
};
use crate::error::{Error, Result};
use crate::field::{Ball, Extension, Grid, Region, SampleMode, SpaceTimeSlab};
use crate::io::{self, KeyValues, Manifest};
use crate::pressure::{split_pressure, split_pressure_with, SplitConfig, SplitDomain};
use crate::report::{DiagnosticsReport, GridInfo, RescaleRecord, ZoomRecord, REPORT_SCHEMA};
use crate::rescale::{harmonic_part_vanishing_slab, zoom, ZoomOptions, ZoomParams};
use crate::solver::{run, InitialCondition, SolverConfig};

pub const SIMULATE_KEYS: &[&str] = &["n", "box_length", "dt", "t_end", "output_stride", "init", "seed", "amplitude", "k_max"];

pub const DIAGNOSE_KEYS: &[&str] = &[
    "epsilon",
    "t_top",
    "criterion_center",
    "criterion_radius",
    "window_delta",
    "window_count",
    "slices_m",
    "slices_window",
    "ckn_centers",
    "ckn_radii",
    "ckn_t_top",
    "decay_centers",
    "decay_radius",
    "energy_centers",
    "energy_radius",
    "energy_t0",
    "energy_tau",
    "energy_t",
];

#[derive(Debug, Parser)]
#[command(name = "nsrl", version, about = "Navier-Stokes regularity diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the spectral solver from a key=value config and write a snapshot series.
    Simulate {
        config: PathBuf,
        /// Manifest to write; snapshots go next to it.
        #[arg(short, long, default_value = "manifest.json")]
        out: PathBuf,
    },
    /// Run the diagnostics selected by a key=value config and write a JSON report.
    Diagnose {
        manifest: PathBuf,
        config: PathBuf,
        #[arg(short, long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Split the pressure of every snapshot and append the summaries to a report.
    SplitPressure(SplitArgs),
    /// Write the parabolically rescaled series as a new manifest.
    Zoom(ZoomArgs),
    /// Print a report's summary, or the published report schema.
    Report {
        report: Option<PathBuf>,
        #[arg(long)]
        schema: bool,
    },
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    pub manifest: PathBuf,
    /// Ball center for the Dirichlet split (periodic split if no radius).
    #[arg(long, value_parser = parse_point, default_value = "0,0,0")]
    pub center: [f64; 3],
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub cg_tol: Option<f64>,
    /// Report to append to; created if missing.
    #[arg(short, long, default_value = "report.json")]
    pub report: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtensionArg {
    Periodic,
    Box,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Trilinear,
    Spectral,
}

#[derive(Debug, Args)]
pub struct ZoomArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub scale: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub horizon: f64,
    #[arg(long, value_parser = parse_point, default_value = "0,0,0", allow_hyphen_values = true)]
    pub center: [f64; 3],
    /// Defaults to the last snapshot time.
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    /// Target resolution; defaults to the source's.
    #[arg(long)]
    pub n: Option<usize>,
    /// Target box length; defaults to the source's.
    #[arg(long)]
    pub box_length: Option<f64>,
    #[arg(long, value_enum, default_value = "trilinear")]
    pub mode: ModeArg,
    /// Outside the source box (`box`), or outside `B(x0, 1)` (`ball`), the data is zero.
    #[arg(long, value_enum, default_value = "box")]
    pub extension: ExtensionArg,
    /// Also report the harmonic-pressure window average on `B(a)`.
    #[arg(long)]
    pub harmonic_a: Option<f64>,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(short, long)]
    pub report: Option<PathBuf>,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 3], String> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    xs.try_into().map_err(|_| format!("`{s}` needs three comma-separated numbers"))
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => 2,
        Error::Divergence { .. } | Error::Stability { .. } => 3,
        Error::Checksum { .. } => 4,
        Error::Geometry(_) | Error::Resolution(_) => 5,
        Error::Solver(_) => 6,
        _ => 1,
    }
}

/// Sizes the global worker pool from `NSRL_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("NSRL_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| Error::Config {
        key: "NSRL_THREADS".into(),
        msg: format!("`{raw}` is not a positive integer"),
    })?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config {
            key: "NSRL_THREADS".into(),
            msg: e.to_string(),
        })?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

pub fn run_command(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Diagnose { manifest, config, out } => diagnose(&manifest, &config, &out),
        Command::SplitPressure(args) => split(&args),
        Command::Zoom(args) => zoom_cmd(&args),
        Command::Report { report, schema } => {
            if schema {
                print!("{REPORT_SCHEMA}");
                return Ok(());
            }
            let path = report.ok_or_else(|| Error::Config {
                key: "report".into(),
                msg: "give a report path or --schema".into(),
            })?;
            print_report(&DiagnosticsReport::read(&path)?);
            Ok(())
        }
    }
}

pub fn simulation_config(kv: &KeyValues) -> Result<SolverConfig> {
    kv.check_keys(SIMULATE_KEYS)?;
    let n: usize = kv.required("n")?;
    let box_length: f64 = kv.parse_as("box_length")?.unwrap_or(std::f64::consts::TAU);
    let grid = Grid::new(n, box_length).map_err(|e| Error::Config {
        key: "n".into(),
        msg: e.to_string(),
    })?;
    let dt: f64 = kv.required("dt")?;
    let t_end: f64 = kv.required("t_end")?;
    if !(t_end > 0.0) {
        return Err(Error::Config {
            key: "t_end".into(),
            msg: format!("window [0, {t_end}] is empty"),
        });
    }
    let stride: usize = kv.parse_as("output_stride")?.unwrap_or(1);
    let amplitude: f64 = kv.parse_as("amplitude")?.unwrap_or(1.0);
    let init = match kv.get("init").unwrap_or("taylor_green") {
        "taylor_green" => InitialCondition::TaylorGreen { amplitude },
        "zero" => InitialCondition::Zero,
        "shear" => InitialCondition::Shear { amplitude },
        "random" => InitialCondition::Random {
            seed: kv.parse_as("seed")?.unwrap_or(0),
            amplitude,
            k_max: kv.parse_as("k_max")?.unwrap_or(4),
        },
        other => {
            return Err(Error::Config {
                key: "init".into(),
                msg: format!("unknown initial condition `{other}` (taylor_green, zero, shear, random)"),
            })
        }
    };
    Ok(SolverConfig::new(grid, dt, t_end, stride, init))
}

fn simulate(config: &Path, out: &Path) -> Result<()> {
    let kv = KeyValues::read(config)?;
    let cfg = simulation_config(&kv)?;
    let slab = run(&cfg)?;
    let m = io::write_series(out, slab.snapshots())?;
    println!(
        "wrote {} snapshots (n = {}, t = {} .. {}) to {}",
        m.entries.len(),
        m.n,
        slab.t_start(),
        slab.t_end(),
        out.display()
    );
    Ok(())
}

fn grid_info(m: &Manifest, slab: &SpaceTimeSlab) -> GridInfo {
    GridInfo {
        n: m.n,
        box_length: m.box_length,
        snapshots: slab.len(),
        t_start: slab.t_start(),
        t_end: slab.t_end(),
    }
}

/// Geometry errors carry the config key that produced them.
fn with_key<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Geometry(m) => Error::Geometry(format!("{key}: {m}")),
        Error::Resolution(m) => Error::Resolution(format!("{key}: {m}")),
        other => other,
    })
}

pub fn diagnose_slab(slab: &SpaceTimeSlab, kv: &KeyValues, report: &mut DiagnosticsReport) -> Result<()> {
    kv.check_keys(DIAGNOSE_KEYS)?;
    let epsilon: f64 = kv.required("epsilon")?;
    let t_top: f64 = kv.parse_as("t_top")?.unwrap_or(slab.t_end());
    let center = kv.points("criterion_center")?.and_then(|p| p.first().copied()).unwrap_or([0.0; 3]);
    let ball = kv
        .parse_as::<f64>("criterion_radius")?
        .map(|r| Ball::new(center, r))
        .transpose()?;
    let region = ball.map_or(Region::Everywhere, Region::Ball);

    let span = t_top - slab.t_start();
    let delta: f64 = kv.parse_as("window_delta")?.unwrap_or(span);
    let count: usize = match kv.parse_as("window_count")? {
        Some(c) => c,
        None => {
            let ratio = delta / slab.max_time_step();
            ((ratio.log2().floor() as i64 + 1).clamp(1, 8)) as usize
        }
    };
    report.criterion_profile = Some(with_key(
        "criterion_radius",
        criterion_profile(slab, t_top, &region, &WindowFamily { delta, count }),
    )?);

    if let Some(m) = kv.parse_as::<f64>("slices_m")? {
        let window: f64 = kv.required("slices_window")?;
        let ball = ball.ok_or_else(|| Error::Config {
            key: "criterion_radius".into(),
            msg: "the good-slice step needs a criterion ball".into(),
        })?;
        let g = with_key("criterion_radius", g_profile(slab, &ball))?;
        let shifted = TimeSeries::new(g.times.iter().map(|t| t - t_top).collect(), g.values)?;
        report.good_slices = Some(good_slices(&shifted, -window, m)?);
    }

    if let Some(centers) = kv.points("ckn_centers")? {
        let radii = kv.list("ckn_radii")?.ok_or_else(|| Error::Config {
            key: "ckn_radii".into(),
            msg: "missing".into(),
        })?;
        let top: f64 = kv.parse_as("ckn_t_top")?.unwrap_or(t_top);
        for c in centers {
            report.ckn_scans.push(with_key("ckn_radii", ckn_scan(slab, c, top, &radii, epsilon))?);
        }
    }

    if let Some(centers) = kv.points("decay_centers")? {
        let radius: f64 = kv.parse_as("decay_radius")?.unwrap_or(1.0);
        report.decay_scans.push(with_key("decay_radius", decay_scan(slab, &centers, t_top, radius))?);
    }

    if let Some(centers) = kv.points("energy_centers")? {
        let radius: f64 = kv.required("energy_radius")?;
        let t0: f64 = kv.parse_as("energy_t0")?.unwrap_or(slab.t_start());
        let tau: f64 = kv.required("energy_tau")?;
        let t: f64 = kv.parse_as("energy_t")?.unwrap_or(slab.t_end());
        for (i, c) in centers.into_iter().enumerate() {
            let phi = TestFunction::new(format!("phi{i}"), c, radius, t0, tau);
            report.energy_residuals.push(with_key("energy_radius", energy_residual(slab, &phi, t))?);
        }
    }
    report.config.push(kv.raw.clone());
    Ok(())
}

fn diagnose(manifest: &Path, config: &Path, out: &Path) -> Result<()> {
    let kv = KeyValues::read(config)?;
    let (m, digest, slab) = io::load_slab(manifest)?;
    let mut report = DiagnosticsReport::new(digest, grid_info(&m, &slab));
    diagnose_slab(&slab, &kv, &mut report)?;
    report.write(out)?;
    println!("{}", report.summary_line());
    Ok(())
}

/// Appends to `path` when it already holds a report for the same input.
fn open_report(path: &Path, digest: u64, grid: GridInfo) -> Result<DiagnosticsReport> {
    if path.exists() {
        let r = DiagnosticsReport::read(path)?;
        if r.manifest_digest == io::checksum_hex(digest) {
            return Ok(r);
        }
        return Err(Error::Format(format!(
            "{} describes a different manifest ({}), refusing to append",
            path.display(),
            r.manifest_digest
        )));
    }
    Ok(DiagnosticsReport::new(digest, grid))
}

fn split(args: &SplitArgs) -> Result<()> {
    let (m, digest, slab) = io::load_slab(&args.manifest)?;
    let domain = match args.radius {
        Some(r) => SplitDomain::Ball { ball: Ball::new(args.center, r)? },
        None => SplitDomain::Periodic,
    };
    let mut report = open_report(&args.report, digest, grid_info(&m, &slab))?;
    for s in slab.snapshots() {
        let split = match args.cg_tol {
            Some(tol) => split_pressure_with(s, domain, &SplitConfig { cg_tol: tol, ..SplitConfig::default() })?,
            None => split_pressure(s, domain)?,
        };
        let summary = split.summary(s.time());
        println!(
            "t={} cz_ratio={:.6e} p2_max={:.6e} harmonic_residual={:.3e}",
            s.time(),
            summary.cz_ratio,
            summary.p2_max,
            summary.harmonic_residual
        );
        report.pressure_split.push(summary);
    }
    report.config.push(format!("split-pressure {domain:?}"));
    report.write(&args.report)
}

fn zoom_cmd(args: &ZoomArgs) -> Result<()> {
    let (m, digest, slab) = io::load_slab(&args.manifest)?;
    let params = ZoomParams::new(args.scale, args.horizon)?.at(args.center, args.t0.unwrap_or(slab.t_end()));
    let target = Grid::new(args.n.unwrap_or(m.n), args.box_length.unwrap_or(m.box_length))?;
    let options = ZoomOptions {
        mode: match args.mode {
            ModeArg::Trilinear => SampleMode::Trilinear,
            ModeArg::Spectral => SampleMode::Spectral,
        },
        extension: match args.extension {
            ExtensionArg::Periodic => Extension::Periodic,
            ExtensionArg::Box => Extension::ZeroOutsideBox,
            ExtensionArg::Ball => Extension::ZeroOutsideBall(Ball::new(args.center, 1.0)?),
        },
    };
    let harmonic = match args.harmonic_a {
        Some(a) => {
            let p2_slab = slab.map_pressure(|s| Ok(split_pressure(s, SplitDomain::Periodic)?.p2))?;
            Some(harmonic_part_vanishing_slab(&p2_slab, &params, &[params.scale], a, &target, &options)?)
        }
        None => None,
    };
    let zoomed = zoom(&slab, &params, &target, &options)?;
    let out_manifest = io::write_series(&args.out, zoomed.snapshots())?;
    let (_, out_digest) = io::read_manifest(&args.out)?;
    println!(
        "wrote {} zoomed snapshots (R = {}, T = {}) to {}",
        out_manifest.entries.len(),
        params.scale,
        params.horizon,
        args.out.display()
    );
    if let Some(h) = &harmonic {
        println!("harmonic window average on B({}) = {:.6e}", h.a, h.values[0]);
    }
    if let Some(path) = &args.report {
        let mut report = open_report(path, digest, grid_info(&m, &slab))?;
        report.rescale.push(RescaleRecord::Zoom(ZoomRecord {
            params,
            target_n: target.n(),
            target_box_length: target.box_length(),
            output_manifest: args.out.display().to_string(),
            output_digest: io::checksum_hex(out_digest),
        }));
        if let Some(h) = harmonic {
            report.rescale.push(RescaleRecord::HarmonicVanishing(h));
        }
        report.config.push(format!("zoom {params:?} {options:?}"));
        report.write(path)?;
    }
    Ok(())
}

fn print_report(r: &DiagnosticsReport) {
    println!("{} {} manifest {}", r.tool, r.version, r.manifest_digest);
    println!(
        "grid n={} L={} snapshots={} t=[{}, {}]",
        r.grid.n, r.grid.box_length, r.grid.snapshots, r.grid.t_start, r.grid.t_end
    );
    if let Some(c) = &r.criterion_profile {
        println!("criterion T={} windows={} exponent={:?}", c.t_top, c.windows.len(), c.fitted_exponent);
    }
    if let Some(g) = &r.good_slices {
        println!(
            "good slice s_k={} g={:.6e} |E_k|={} bound={}",
            g.s_k, g.g_at_sk, g.e_k_measure, g.e_k_bound
        );
    }
    for s in &r.ckn_scans {
        println!("ckn {:?} slope={:?} flagged={}", s.center, s.fitted_slope, s.flagged);
    }
    for e in &r.energy_residuals {
        println!("energy {} residual={:.3e}", e.test_function_id, e.residual);
    }
    if !r.pressure_split.is_empty() {
        let worst = r.pressure_split.iter().map(|s| s.harmonic_residual).fold(0.0, f64::max);
        println!("pressure splits={} max harmonic residual={worst:.3e}", r.pressure_split.len());
    }
    if !r.rescale.is_empty() {
        println!("rescale records={}", r.rescale.len());
    }
    println!("{}", r.summary_line());
}
