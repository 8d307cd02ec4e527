//! The `hexcryst` command-line tool.
//!
//! Exit codes: 0 on success, 1 on configuration, input or I/O errors, 2 when
//! the minimizer stops without converging or a certificate check fails.

pub mod config;
pub mod io;
pub mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{lattice_fit, stability_report};
use crate::certify::certificate_report;
use crate::energy::{self, EnergyReport};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::optimize::{self, MinimizerResult, OptState, ScanEntry, TrialOptions};
use crate::tessellation::{tessellate, DomainSpec, WeightedSites};
use crate::transport::{solve_sdot, AtomicMeasure};
use config::{CountArg, InitConfig, RunConfig, ShapeConfig};
use io::{AnalysisRecord, CertificateRecord, OutputFiles, RunRecord, StateFile, Timings, VERSION_TAG};

#[derive(Debug, Parser)]
#[command(name = "hexcryst", version, about = "Crystallization of a nonlocal particle energy via semi-discrete optimal transport")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "HEXCRYST_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the energy for a fixed point count (or a range).
    Minimize(RunArgs),
    /// Minimize for every point count in a range and keep the best.
    Scan(RunArgs),
    /// Re-derive every proof constant and inequality.
    Certify(CertifyArgs),
    /// Transport, energy and stability diagnostics of a given point set.
    Analyze(AnalyzeArgs),
    /// Draw a saved run as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// `V_λ` instead of `λ`.
    #[arg(long)]
    pub volume: Option<f64>,
    /// Named shape or a file of polygon vertices.
    #[arg(long)]
    pub domain: Option<String>,
    /// Point count or inclusive range `A..B`.
    #[arg(long)]
    pub n: Option<CountArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tol_mass: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Continue from a saved `state.json`.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Masses in the convexity scan.
    #[arg(long, default_value_t = 10_000)]
    pub grid: usize,
}

#[derive(Debug, Default, Args)]
pub struct AnalyzeArgs {
    /// CSV of points (`x,y[,mass]`).
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub volume: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub tol_mass: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct RenderArgs {
    /// Run directory holding `state.json`.
    #[arg(long, conflicts_with = "state")]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Output file (default: `render.svg` next to the state).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `std::env::args` and runs.
/// Usage errors exit 1 like every other error; 2 is reserved for runs that
/// stop before converging.
pub fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => ExitCode::from(run(cli)),
        Err(e) => {
            let _ = e.print();
            ExitCode::from(if e.use_stderr() { 1 } else { 0 })
        }
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    if let Some(t) = cli.threads {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let outcome = match cli.command {
        Command::Minimize(a) => cmd_run(a, false),
        Command::Scan(a) => cmd_run(a, true),
        Command::Certify(a) => cmd_certify(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Render(a) => cmd_render(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn domain_from_arg(s: &str) -> Result<ShapeConfig> {
    let path = Path::new(s);
    if path.is_file() {
        ShapeConfig::from_vertex_file(path)
    } else {
        ShapeConfig::parse_name(s)
    }
}

fn apply_scale(cfg: &mut RunConfig, lambda: Option<f64>, volume: Option<f64>) {
    if lambda.is_some() || volume.is_some() {
        cfg.lambda = lambda;
        cfg.volume = volume;
    }
}

/// Config file, then flags on top.
pub fn effective_config(a: &RunArgs, scan: bool) -> Result<RunConfig> {
    let mut cfg = match (&a.config, &a.domain) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(d)) => RunConfig::new(domain_from_arg(d)?),
        (None, None) => return Err(Error::Config("either --config or --domain is required".into())),
    };
    if let (Some(_), Some(d)) = (&a.config, &a.domain) {
        cfg.domain = domain_from_arg(d)?;
    }
    apply_scale(&mut cfg, a.lambda, a.volume);
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    match a.n {
        Some(CountArg::Fixed(n)) => {
            cfg.n = Some(n);
            cfg.scan = None;
        }
        Some(CountArg::Range(lo, hi)) => {
            cfg.scan = Some([lo, hi]);
            cfg.n = None;
        }
        None => {}
    }
    if let Some(out) = &a.out {
        cfg.out = Some(out.clone());
    }
    if let Some(t) = a.tol_mass {
        cfg.minimizer.tol_mass = t;
    }
    if let Some(m) = a.max_iters {
        cfg.minimizer.max_outer_iters = m;
    }
    cfg.minimizer.seed = cfg.seed;
    if scan && cfg.scan.is_none() {
        return Err(Error::Config("scan needs a range: --n A..B or scan = [A, B]".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_dir(cfg: &RunConfig, hash: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(&hash[..12]))
}

/// Lattice start with uniform noise of amplitude `noise·a`; points
/// that would leave a polygonal domain keep their place.
pub fn perturbed_lattice(domain: &DomainSpec, noise: f64, seed: u64) -> Result<AtomicMeasure> {
    let base = optimize::lattice_start(domain, &TrialOptions::default(), 0.25 * energy::lattice_spacing())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = noise * energy::lattice_spacing();
    let pts: Vec<Point> = base
        .points()
        .iter()
        .map(|&p| {
            let q = p + Point::new(rng.random_range(-1.0..=1.0) * amp, rng.random_range(-1.0..=1.0) * amp);
            match domain.scaled_polygon() {
                Some(poly) if poly.depth(q) <= 0.0 => p,
                _ => domain.wrap(q),
            }
        })
        .collect();
    AtomicMeasure::new(domain, pts, base.masses().to_vec())
}

fn solve_run(cfg: &RunConfig, domain: &DomainSpec) -> Result<(MinimizerResult, Option<Vec<ScanEntry>>)> {
    if let Some([lo, hi]) = cfg.scan {
        let s = optimize::scan(domain, lo, hi, &cfg.minimizer)?;
        return Ok((s.best, Some(s.entries)));
    }
    let n = cfg.point_count(domain);
    let result = match cfg.init {
        InitConfig::Halton => optimize::minimize(domain, n, &cfg.minimizer)?,
        InitConfig::Lattice { noise } => {
            let m = perturbed_lattice(domain, noise, cfg.seed)?;
            if cfg.n.is_some_and(|k| k != m.len()) {
                return Err(Error::Config(format!("lattice start has {} points but n = {}", m.len(), n)));
            }
            optimize::minimize_from(domain, m, &cfg.minimizer)?
        }
    };
    Ok((result, None))
}

fn cmd_run(a: RunArgs, scan: bool) -> Result<u8> {
    let t0 = Instant::now();
    let command = if scan { "scan" } else { "minimize" };
    let (cfg, result, entries, jump) = match &a.resume {
        Some(path) => {
            if a.domain.is_some() || a.lambda.is_some() || a.volume.is_some() || a.n.is_some() || a.config.is_some() {
                return Err(Error::Config("--resume takes the problem from the state file".into()));
            }
            let state = StateFile::load(path)?;
            let mut cfg = state.config.clone();
            if let Some(out) = &a.out {
                cfg.out = Some(out.clone());
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
                cfg.minimizer.seed = s;
            }
            if let Some(t) = a.tol_mass {
                cfg.minimizer.tol_mass = t;
            }
            if let Some(m) = a.max_iters {
                cfg.minimizer.max_outer_iters = m;
            }
            let domain = cfg.domain_spec()?;
            let measure = AtomicMeasure::new(&domain, state.points(), state.masses.clone())?;
            let start = OptState::with_weights(&domain, measure, cfg.minimizer.tol_mass, &state.weights)?;
            let jump = (start.energy - state.energy).abs();
            let result = optimize::minimize_from_state(&domain, start, &cfg.minimizer)?;
            (cfg, result, None, Some(jump))
        }
        None => {
            let cfg = effective_config(&a, scan)?;
            let domain = cfg.domain_spec()?;
            let (result, entries) = solve_run(&cfg, &domain)?;
            (cfg, result, entries, None)
        }
    };
    let domain = cfg.domain_spec()?;
    let hash = cfg.hash();
    let dir = run_dir(&cfg, &hash);
    std::fs::create_dir_all(&dir)?;
    let stability = stability_report(&domain, &result.partition, &result.report, cfg.tau);
    let files = OutputFiles {
        config: "config.toml".into(),
        report: "report.json".into(),
        cells: "cells.csv".into(),
        state: "state.json".into(),
        render: "render.svg".into(),
        scan: entries.as_ref().map(|_| "scan.csv".into()),
    };
    std::fs::write(dir.join(&files.config), format!("# config_hash = \"{hash}\"\n{}", cfg.to_toml()))?;
    io::write_cells(&dir.join(&files.cells), &result.partition, &result.report)?;
    let state = StateFile {
        version: VERSION_TAG.into(),
        config_hash: hash.clone(),
        config: cfg.clone(),
        points: result.measure.points().iter().map(|p| [p.x, p.y]).collect(),
        masses: result.measure.masses().to_vec(),
        weights: result.weights.clone(),
        energy: result.report.total,
    };
    io::write_json(&dir.join(&files.state), &state)?;
    let title = format!("hexcryst {command} {hash}");
    std::fs::write(dir.join(&files.render), render::render_svg(&domain, &result.partition, &title))?;
    if let Some(entries) = &entries {
        let mut w = csv::Writer::from_path(dir.join("scan.csv")).map_err(|e| Error::Config(e.to_string()))?;
        for e in entries {
            w.serialize(e).map_err(|e| Error::Config(e.to_string()))?;
        }
        w.flush()?;
    }
    let record = RunRecord {
        version: VERSION_TAG.into(),
        config_hash: hash,
        command: command.into(),
        seed: result.seed,
        points: result.measure.len(),
        converged: result.converged,
        iterations: result.iterations,
        coupling_residual: result.coupling_residual,
        last_displacement: result.last_displacement,
        deleted_points: result.deleted_points,
        timings: Timings { total_seconds: t0.elapsed().as_secs_f64() },
        energy: (&result.report).into(),
        stability: Some(stability),
        history: result.history.clone(),
        scan: entries,
        resume_energy_jump: jump,
        files,
    };
    io::write_json(&dir.join("report.json"), &record)?;
    println!(
        "{command}: n={} E={:.12} defect={:.3e} converged={} iterations={} -> {}",
        record.points,
        record.energy.total,
        record.energy.defect,
        record.converged,
        record.iterations,
        dir.display()
    );
    Ok(if record.converged { 0 } else { 2 })
}

fn cmd_certify(a: CertifyArgs) -> Result<u8> {
    let report = certificate_report(a.grid)?;
    for c in &report.checks {
        println!("[{}] {:<44} {:>14.6e}{}", if c.pass { "pass" } else { "FAIL" }, c.name, c.computed,
            c.reference.map_or(String::new(), |r| format!("  (published {r:e})")));
    }
    let record = CertificateRecord { version: VERSION_TAG.into(), all_passed: report.all_passed(), report };
    let dir = a.out.unwrap_or_else(|| PathBuf::from("runs").join("certify"));
    std::fs::create_dir_all(&dir)?;
    io::write_json(&dir.join("certificate.json"), &record)?;
    println!("certificate: {} -> {}", if record.all_passed { "all checks pass" } else { "FAILED" }, dir.display());
    Ok(if record.all_passed { 0 } else { 2 })
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<u8> {
    let mut cfg = match (&a.config, &a.domain) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(d)) => RunConfig::new(domain_from_arg(d)?),
        (None, None) => return Err(Error::Config("either --config or --domain is required".into())),
    };
    apply_scale(&mut cfg, a.lambda, a.volume);
    if let Some(t) = a.tau {
        cfg.tau = t;
    }
    if let Some(t) = a.tol_mass {
        cfg.minimizer.tol_mass = t;
    }
    cfg.validate()?;
    let domain = cfg.domain_spec()?;
    let (pts, masses) = io::read_points(&a.points)?;
    let pts: Vec<Point> = pts.into_iter().map(|p| domain.wrap(p)).collect();
    let measure = match masses {
        Some(m) => AtomicMeasure::normalized(&domain, pts, m)?,
        None => AtomicMeasure::uniform(&domain, pts)?,
    };
    let sol = solve_sdot(&domain, &measure, cfg.minimizer.tol_mass)?;
    let report: EnergyReport = energy::report_from_solution(&domain, &measure, &sol);
    let stability = stability_report(&domain, &sol.partition, &report, cfg.tau);
    let record = AnalysisRecord {
        version: VERSION_TAG.into(),
        input: a.points.display().to_string(),
        points: measure.len(),
        energy: (&report).into(),
        stability,
        lattice_fit: lattice_fit(measure.points()).ok(),
    };
    let dir = a.out.unwrap_or_else(|| PathBuf::from("runs").join("analyze"));
    std::fs::create_dir_all(&dir)?;
    io::write_json(&dir.join("analysis.json"), &record)?;
    io::write_cells(&dir.join("cells.csv"), &sol.partition, &report)?;
    println!(
        "analyze: n={} E={:.12} defect={:.3e} defective={:.4} interior_defective={:.4} -> {}",
        record.points,
        report.total,
        report.defect,
        record.stability.fraction_defective,
        record.stability.fraction_defective_interior,
        dir.display()
    );
    Ok(0)
}

fn cmd_render(a: RenderArgs) -> Result<u8> {
    let state_path = match (&a.run, &a.state) {
        (Some(dir), _) => dir.join("state.json"),
        (None, Some(p)) => p.clone(),
        (None, None) => return Err(Error::Config("render needs --run DIR or --state FILE".into())),
    };
    let state = StateFile::load(&state_path)?;
    let domain = state.config.domain_spec()?;
    let sites = WeightedSites::new(state.points(), state.weights.clone())?;
    let partition = tessellate(&domain, &sites)?;
    let out = a.out.unwrap_or_else(|| state_path.with_file_name("render.svg"));
    std::fs::write(&out, render::render_svg(&domain, &partition, &format!("hexcryst {}", state.config_hash)))?;
    println!("render: {}", out.display());
    Ok(0)
}
