//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical-validation
//! failure, 3 I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bands::{self, BandError, DispersionSurface, TouchKind, TouchReport};
use crate::floquet::{self, DispersionRoots, FloquetError};
use crate::hill::{self, HillDiscriminant, HillError, PotentialSpec};
use crate::io::{self, IoError, Output, OutputDigest, RunConfig, RunManifest, SpectrumRow, TouchRecord};
use crate::lattice::{Quasimomentum, StackConfig, Variant};
use crate::magnetic::{self, MagneticError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("validation failure: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Config(_) | IoError::Parse { .. } => CliError::Config(e.to_string()),
            IoError::File { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<BandError> for CliError {
    fn from(e: BandError) -> Self {
        match e {
            BandError::Floquet(FloquetError::ResidualCheck { .. }) | BandError::ZeroDerivative(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MagneticError> for CliError {
    fn from(e: MagneticError) -> Self {
        match e {
            MagneticError::Hill(_) | MagneticError::NotACone => CliError::Validation(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<HillError> for CliError {
    fn from(e: HillError) -> Self {
        match e {
            HillError::InvalidPotential(_) | HillError::NotEven { .. } | HillError::BadRange(..) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hexbands", version, about = "Band structures of periodic quantum graphs on hexagonal lattices")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Grid points (per axis for --full and for the magnetic reduced zone).
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Sample the diagonal slice θ₂ = −θ₁.
    #[arg(long, global = true, conflicts_with = "full")]
    diagonal: bool,
    /// Sample the full zone.
    #[arg(long, global = true)]
    full: bool,
    #[arg(long = "tol-touch", global = true, value_name = "TAU")]
    tol_touch: Option<f64>,
    /// Seed for the random quasimomenta of `validate`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Band CSV over the grid.
    Bands,
    /// Touch, crossing and gap report along the diagonal.
    Classify,
    /// Global gap between each pair of adjacent bands.
    Gaps,
    /// λ-bands of the quantum graph through the Hill discriminant.
    Spectrum,
    /// Touch classification and gaps over the magnetic reduced zone.
    Magnetic,
    /// Closed forms against the eigensolver at random quasimomenta.
    Validate,
    /// SVG of the bands along the diagonal.
    Plot,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bands => "bands",
            Command::Classify => "classify",
            Command::Gaps => "gaps",
            Command::Spectrum => "spectrum",
            Command::Magnetic => "magnetic",
            Command::Validate => "validate",
            Command::Plot => "plot",
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("hexbands: {e}");
            e.exit_code()
        }
    }
}

/// Accumulates the files of one run and writes its manifest.
struct Session {
    command: &'static str,
    out: PathBuf,
    started: Instant,
    started_unix: f64,
    outputs: Vec<OutputDigest>,
    diagnostics: Vec<String>,
}

impl Session {
    fn new(command: &'static str, out: &Path) -> Self {
        Self {
            command,
            out: out.to_path_buf(),
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0.0, |d| d.as_secs_f64()),
            outputs: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        io::write_atomic(&self.out.join(name), bytes)?;
        self.outputs.push(OutputDigest {
            path: name.to_string(),
            sha256: io::sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn diagnostic(&mut self, msg: String) {
        eprintln!("hexbands: {msg}");
        self.diagnostics.push(msg);
    }

    fn finish(self, run: &RunConfig) -> Result<(), CliError> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            started_unix_seconds: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            diagnostics: self.diagnostics,
            config: run.echo.clone(),
            output: self.outputs,
        };
        let text = io::to_toml(&manifest)?;
        io::write_atomic(&self.out.join(format!("{}.manifest.toml", self.command)), text.as_bytes())?;
        Ok(())
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <FILE> is required".into()))?;
    let overrides = io::Overrides {
        grid: cli.grid,
        kind: if cli.full {
            Some(io::GridKind::Full)
        } else if cli.diagonal {
            Some(io::GridKind::Diagonal)
        } else {
            None
        },
        tol_touch: cli.tol_touch,
        seed: cli.seed,
    };
    let run = io::load_config(path, &overrides)?;
    let mut session = Session::new(cli.command.name(), &cli.out);
    let outcome = match cli.command {
        Command::Bands => cmd_bands(&run, &mut session),
        Command::Classify => cmd_classify(&run, &mut session),
        Command::Gaps => cmd_gaps(&run, &mut session),
        Command::Spectrum => cmd_spectrum(&run, &mut session),
        Command::Magnetic => cmd_magnetic(&run, &mut session),
        Command::Validate => cmd_validate(&run, &mut session),
        Command::Plot => cmd_plot(&run, &mut session),
    };
    // The manifest records whatever was produced, including on validation failure.
    let finished = session.finish(&run);
    outcome.and(finished)
}

fn title(config: &StackConfig) -> String {
    let v = config.vertex();
    match config.variant() {
        Variant::Monolayer => format!("Monolayer  alpha_a = {}, alpha_b = {}", v.alpha_a, v.alpha_b),
        Variant::MagneticMonolayer => {
            let f = config.flux().expect("validated flux");
            format!("MagneticMonolayer  p/q = {}/{}, alpha_N = {}, alpha_B = {}", f.p(), f.q(), v.alpha_a, v.alpha_b)
        }
        other => format!("{other}  alpha_a = {}, alpha_b = {}, t0 = {}", v.alpha_a, v.alpha_b, config.t0()),
    }
}

fn classify_records(run: &RunConfig, surface: &DispersionSurface) -> Result<io::ClassifyReport, CliError> {
    let touches = bands::classify_touches(surface, &run.tolerances)?;
    let mut record: Vec<TouchRecord> = touches.iter().map(TouchRecord::from).collect();
    if record.is_empty() {
        record.push(global_gap_record(surface));
    }
    Ok(io::ClassifyReport {
        variant: run.config.variant().name().to_string(),
        grid_points: surface.points.len(),
        closed_form_gap: bands::gap_width_closed_form(&run.config).ok(),
        record,
    })
}

/// A Gap record at the smallest separation of the middle pair.
fn global_gap_record(surface: &DispersionSurface) -> TouchRecord {
    let k = bands::middle_pair(surface.dim());
    let (sep, i) = surface.min_separation(k);
    let p = &surface.points[i];
    let lower = p.primary().values[k];
    TouchRecord::from(&TouchReport {
        location: p.theta,
        f_value: p.f,
        band_pair: (k, k + 1),
        kind: TouchKind::Gap,
        eta: lower + sep / 2.0,
        separation: sep,
        gamma: None,
        gap_width: Some(sep),
        curvature: None,
        branches: None,
    })
}

fn cmd_bands(run: &RunConfig, session: &mut Session) -> Result<(), CliError> {
    let surface = bands::sample(&run.config, run.grid)?;
    let rows = io::band_rows(&surface);
    let mut wrote = Vec::new();
    if run.outputs.contains(&Output::Bands) {
        session.write("bands.csv", &io::band_csv(&rows)?)?;
        wrote.push("bands.csv");
    }
    if run.outputs.contains(&Output::Report) {
        let report = classify_records(run, &surface)?;
        session.write("classify.toml", io::to_toml(&report)?.as_bytes())?;
        wrote.push("classify.toml");
    }
    if run.outputs.contains(&Output::Plot) {
        let svg = plot_svg(run, &surface)?;
        session.write("bands.svg", svg.as_bytes())?;
        wrote.push("bands.svg");
    }
    if run.outputs.contains(&Output::Spectrum) {
        let bytes = spectrum_bytes(run, &surface, session)?;
        session.write("spectrum.csv", &bytes)?;
        wrote.push("spectrum.csv");
    }
    println!("{} rows over {} points; wrote {}", rows.len(), surface.points.len(), wrote.join(", "));
    Ok(())
}

fn cmd_classify(run: &RunConfig, session: &mut Session) -> Result<(), CliError> {
    let surface = bands::sample(&run.config, run.grid)?;
    let report = classify_records(run, &surface)?;
    let text = io::to_toml(&report)?;
    session.write("classify.toml", text.as_bytes())?;
    for r in &report.record {
        println!(
            "{:<9} bands ({}, {})  theta1 = {:+.6}  F = {:+.6}{:+.6}i  sep = {:.6e}",
            r.kind, r.band_lower, r.band_upper, r.theta1, r.f_real, r.f_imag, r.separation
        );
    }
    if let Some(g) = report.closed_form_gap {
        println!("closed-form gap {g}");
    }
    Ok(())
}

fn cmd_gaps(run: &RunConfig, session: &mut Session) -> Result<(), CliError> {
    let surface = bands::sample(&run.config, run.grid)?;
    let pair = (0..surface.dim() - 1)
        .map(|k| {
            let (sep, i) = surface.min_separation(k);
            io::GapRecord {
                band_lower: k,
                band_upper: k + 1,
                global_gap: surface.global_gap(k),
                min_separation: sep,
                theta1: surface.points[i].theta.theta1(),
                theta2: surface.points[i].theta.theta2(),
            }
        })
        .collect::<Vec<_>>();
    let report = io::GapsReport {
        variant: run.config.variant().name().to_string(),
        grid_points: surface.points.len(),
        closed_form_gap: bands::gap_width_closed_form(&run.config).ok(),
        pair,
    };
    session.write("gaps.toml", io::to_toml(&report)?.as_bytes())?;
    for g in &report.pair {
        println!(
            "bands ({}, {})  global gap = {:.6e}  min separation = {:.6e}",
            g.band_lower, g.band_upper, g.global_gap, g.min_separation
        );
    }
    Ok(())
}

fn spectrum_bytes(run: &RunConfig, surface: &DispersionSurface, session: &mut Session) -> Result<Vec<u8>, CliError> {
    let potential = run.potential.clone().unwrap_or(PotentialSpec::Zero);
    let (lo, hi) = run.lambda_range;
    let disc = HillDiscriminant::compute(potential, lo, hi)?;
    let mut rows = Vec::new();
    for k in 0..surface.dim() {
        let map = hill::bands_from_root_surface(&disc, &surface.band(k))?;
        for d in map.diagnostics {
            session.diagnostic(format!("eta band {k}: {d}"));
        }
        rows.extend(map.intervals.iter().map(|iv| SpectrumRow {
            eta_band: Some(k),
            hill_band: Some(iv.hill_band),
            eta_min: Some(iv.eta_min),
            eta_max: Some(iv.eta_max),
            lambda_lo: iv.lo,
            lambda_hi: iv.hi,
            pure_point: false,
        }));
    }
    if rows.is_empty() {
        session.diagnostic(format!("no admissible band maps into [{lo}, {hi}]; spectrum file is empty"));
    } else {
        rows.extend(disc.dirichlet_eigs.iter().map(|&e| SpectrumRow {
            eta_band: None,
            hill_band: None,
            eta_min: None,
            eta_max: None,
            lambda_lo: e,
            lambda_hi: e,
            pure_point: true,
        }));
    }
    Ok(io::spectrum_csv(&rows)?)
}

fn cmd_spectrum(run: &RunConfig, session: &mut Session) -> Result<(), CliError> {
    let surface = bands::sample(&run.config, run.grid)?;
    let bytes = spectrum_bytes(run, &surface, session)?;
    let rows = bytes.iter().filter(|&&b| b == b'\n').count().saturating_sub(1);
    session.write("spectrum.csv", &bytes)?;
    println!("{rows} spectrum rows");
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneGap {
    pub band_lower: usize,
    pub band_upper: usize,
    pub global_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagneticReport {
    pub flux_p: u32,
    pub flux_q: u32,
    pub alpha_n: f64,
    pub alpha_b: f64,
    pub zone_points: usize,
    #[serde(default)]
    pub record: Vec<TouchRecord>,
    #[serde(default)]
    pub pair: Vec<ZoneGap>,
}

fn cmd_magnetic(run: &RunConfig, session: &mut Session) -> Result<(), CliError> {
    let flux = match (run.config.variant(), run.config.flux()) {
        (Variant::MagneticMonolayer, Some(f)) => f,
        (other, _) => {
            return Err(CliError::Config(format!(
                "magnetic needs lattice.variant = \"MagneticMonolayer\", got {other}"
            )))
        }
    };
    let v = run.config.vertex();
    let q = flux.q();
    let n = run.zone_points;
    let touches = magnetic::magnetic_classify(q, v.alpha_a, v.alpha_b, n, &run.tolerances)?;
    let pair = (0..run.config.dim() - 1)
        .map(|k| {
            Ok(ZoneGap {
                band_lower: k,
                band_upper: k + 1,
                global_gap: magnetic::reduced_zone_gap(q, v.alpha_a, v.alpha_b, k, n)?,
            })
        })
        .collect::<Result<Vec<_>, MagneticError>>()?;
    let report = MagneticReport {
        flux_p: flux.p(),
        flux_q: q,
        alpha_n: v.alpha_a,
        alpha_b: v.alpha_b,
        zone_points: n,
        record: touches.iter().map(TouchRecord::from).collect(),
        pair,
    };
    session.write("magnetic.toml", io::to_toml(&report)?.as_bytes())?;
    for r in &report.record {
        println!(
            "{:<9} bands ({}, {})  theta = ({:+.6}, {:+.6})  sep = {:.6e}",
            r.kind, r.band_lower, r.band_upper, r.theta1, r.theta2, r.separation
        );
    }
    for g in &report.pair {
        println!("bands ({}, {})  global gap = {:.6e}", g.band_lower, g.band_upper, g.global_gap);
    }
    Ok(())
}

/// Outcome of comparing closed-form roots with the eigensolver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationReport {
    pub variant: String,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// `ok`, `failed` or `no_closed_form`.
    pub status: String,
    pub compared: usize,
    pub max_deviation: f64,
    pub mean_deviation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_theta: Option<[f64; 2]>,
    /// Closed forms that failed their own residual check.
    pub closed_form_errors: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub no_closed_form: Vec<String>,
}

impl ValidationReport {
    pub fn exit_code(&self) -> i32 {
        if self.status == "failed" {
            EXIT_VALIDATION
        } else {
            EXIT_OK
        }
    }
}

/// Closed-form roots at `θ`: `Ok(None)` when the configuration has none.
pub type ClosedFormFn<'a> = &'a dyn Fn(&StackConfig, &Quasimomentum) -> Result<Option<DispersionRoots>, String>;

pub fn default_closed_form(config: &StackConfig, theta: &Quasimomentum) -> Result<Option<DispersionRoots>, String> {
    let r = if config.variant() == Variant::MagneticMonolayer {
        magnetic::robin_closed_form_roots(config, theta)
    } else {
        floquet::closed_form_roots(config, theta)
    };
    match r {
        Ok(r) => Ok(Some(r)),
        Err(FloquetError::NoClosedForm { .. }) => Ok(None),
        Err(e) => Err(e.to_string()),
    }
}

fn numeric_at(config: &StackConfig, theta: &Quasimomentum) -> Result<DispersionRoots, FloquetError> {
    let m = if config.variant() == Variant::MagneticMonolayer {
        magnetic::robin_floquet(config, theta)?
    } else {
        floquet::assemble(config, theta)?
    };
    Ok(floquet::numeric_roots(&m))
}

/// Draws `samples` quasimomenta uniformly from `[-π, π]²` with a seeded
/// ChaCha stream and compares sorted closed-form roots with the eigensolver.
pub fn validate_sweep(
    config: &StackConfig,
    samples: usize,
    seed: u64,
    tolerance: f64,
    closed: ClosedFormFn<'_>,
) -> ValidationReport {
    use std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ValidationReport {
        variant: config.variant().name().to_string(),
        samples,
        seed,
        tolerance,
        status: "ok".into(),
        compared: 0,
        max_deviation: 0.0,
        mean_deviation: 0.0,
        worst_theta: None,
        closed_form_errors: 0,
        no_closed_form: Vec::new(),
    };
    let mut sum = 0.0;
    for _ in 0..samples {
        let theta = Quasimomentum::wrapped(rng.random_range(-PI..=PI), rng.random_range(-PI..=PI));
        let numeric = match numeric_at(config, &theta) {
            Ok(n) => n,
            Err(_) => {
                report.closed_form_errors += 1;
                continue;
            }
        };
        let c = match closed(config, &theta) {
            Ok(Some(c)) => c,
            Ok(None) => {
                if report.no_closed_form.is_empty() {
                    report.no_closed_form = (0..numeric.len()).map(|k| format!("band {k}")).collect();
                }
                continue;
            }
            Err(_) => {
                report.closed_form_errors += 1;
                continue;
            }
        };
        let mut cv = c.values.clone();
        cv.sort_by(f64::total_cmp);
        let dev = if cv.len() == numeric.values.len() {
            cv.iter()
                .zip(&numeric.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        sum += dev;
        report.compared += 1;
        if !(dev <= report.max_deviation) {
            report.max_deviation = dev;
            report.worst_theta = Some([theta.theta1(), theta.theta2()]);
        }
    }
    if report.compared > 0 {
        report.mean_deviation = sum / report.compared as f64;
    }
    report.status = if report.closed_form_errors > 0 || !(report.max_deviation <= tolerance) {
        "failed".into()
    } else if report.compared == 0 {
        "no_closed_form".into()
    } else {
        "ok".into()
    };
    report
}

fn cmd_validate(run: &RunConfig, session: &mut Session) -> Result<(), CliError> {
    let report = validate_sweep(&run.config, run.samples, run.seed, run.eigensolve_tol, &default_closed_form);
    session.write("validate.toml", io::to_toml(&report)?.as_bytes())?;
    println!("variant            {}", report.variant);
    println!("samples            {} (seed {})", report.samples, report.seed);
    println!("compared           {}", report.compared);
    println!("max deviation      {:.3e}", report.max_deviation);
    println!("mean deviation     {:.3e}", report.mean_deviation);
    println!("closed-form errors {}", report.closed_form_errors);
    for b in &report.no_closed_form {
        println!("{b}: no_closed_form");
    }
    println!("status             {}", report.status);
    if report.exit_code() != EXIT_OK {
        return Err(CliError::Validation(format!(
            "max deviation {:.3e} exceeds {:.1e} or closed forms failed ({} errors)",
            report.max_deviation, report.tolerance, report.closed_form_errors
        )));
    }
    Ok(())
}

fn plot_svg(run: &RunConfig, surface: &DispersionSurface) -> Result<String, CliError> {
    let n = match run.grid {
        bands::GridSpec::Diagonal(n) => n,
        bands::GridSpec::Full(_) => return Err(BandError::NotDiagonal.into()),
    };
    let touches = if n >= bands::MIN_CLASSIFY_POINTS {
        bands::classify_touches(surface, &run.tolerances)?
    } else {
        Vec::new()
    };
    Ok(io::band_svg(surface, &touches, &title(&run.config)))
}

fn cmd_plot(run: &RunConfig, session: &mut Session) -> Result<(), CliError> {
    if matches!(run.grid, bands::GridSpec::Full(_)) {
        return Err(BandError::NotDiagonal.into());
    }
    let surface = bands::sample(&run.config, run.grid)?;
    let svg = plot_svg(run, &surface)?;
    session.write("bands.svg", svg.as_bytes())?;
    println!("wrote bands.svg ({} bands, {} points)", surface.dim(), surface.points.len());
    Ok(())
}
