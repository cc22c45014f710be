//! Configuration ingestion and result serialization: TOML run configs, band
//! CSVs, key-value reports, SVG band plots and run manifests.
//!
//! A run configuration is a TOML document with `schema_version = 1`:
//!
//! ```toml
//! schema_version = 1
//! outputs = ["bands", "plot"]
//!
//! [lattice]
//! variant = "HeteroBilayer"
//! alpha_a = -1.0
//! alpha_b = 1.0
//! t0 = 0.3
//!
//! [grid]
//! points = 2001
//! kind = "diagonal"
//!
//! [tolerances]
//! touch = 1e-6
//!
//! [potential]
//! kind = "cosine"
//! epsilon = 0.5
//! ```
//!
//! Unknown keys are rejected at every level.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bands::{DispersionSurface, GridSpec, Tolerances, TouchKind, TouchReport};
use crate::hill::PotentialSpec;
use crate::lattice::{CouplingParams, StackConfig, Variant, VertexParams};
use crate::magnetic::FluxSpec;

pub const SCHEMA_VERSION: u32 = 1;

pub const BAND_CSV_HEADER: [&str; 8] = [
    "theta1",
    "theta2",
    "F_real",
    "F_imag",
    "band_index",
    "eta",
    "admissible",
    "source",
];

pub const SPECTRUM_CSV_HEADER: [&str; 7] = [
    "eta_band",
    "hill_band",
    "eta_min",
    "eta_max",
    "lambda_lo",
    "lambda_hi",
    "spectral_type",
];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl IoError {
    fn file(path: &Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }
}

// ---------------------------------------------------------------------------
// configuration

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Bands,
    Report,
    Spectrum,
    Plot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    #[default]
    Diagonal,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Zero,
    Cosine,
    Sampled,
}

/// The document as written, with defaults filled in on parse.
/// This is also what the manifest echoes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<Output>>,
    pub lattice: RawLattice,
    #[serde(default)]
    pub grid: RawGrid,
    #[serde(default)]
    pub tolerances: RawTolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<RawPotential>,
    #[serde(default)]
    pub validate: RawValidate,
    #[serde(default)]
    pub magnetic: RawMagnetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLattice {
    pub variant: Variant,
    /// `α_N` for the trilayer and magnetic variants.
    #[serde(alias = "alpha_n")]
    pub alpha_a: f64,
    pub alpha_b: f64,
    #[serde(default)]
    pub alpha_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<FluxSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub points: usize,
    #[serde(default)]
    pub kind: GridKind,
}

impl Default for RawGrid {
    fn default() -> Self {
        Self {
            points: 2001,
            kind: GridKind::Diagonal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawTolerances {
    pub touch: f64,
    pub slope: f64,
    /// Largest accepted closed-form versus eigensolver deviation.
    pub eigensolve: f64,
}

impl Default for RawTolerances {
    fn default() -> Self {
        let t = Tolerances::default();
        Self {
            touch: t.touch,
            slope: t.slope,
            eigensolve: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPotential {
    pub kind: PotentialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Two-column `x q(x)` file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default = "default_lambda_min")]
    pub lambda_min: f64,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
}

fn default_lambda_min() -> f64 {
    0.0
}

fn default_lambda_max() -> f64 {
    100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawValidate {
    pub samples: usize,
    pub seed: u64,
}

impl Default for RawValidate {
    fn default() -> Self {
        Self { samples: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawMagnetic {
    /// Grid points per axis of the reduced zone.
    pub zone_points: usize,
}

impl Default for RawMagnetic {
    fn default() -> Self {
        Self { zone_points: 101 }
    }
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub kind: Option<GridKind>,
    pub tol_touch: Option<f64>,
    pub seed: Option<u64>,
}

/// A resolved, validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub config: StackConfig,
    pub grid: GridSpec,
    pub tolerances: Tolerances,
    pub eigensolve_tol: f64,
    pub potential: Option<PotentialSpec>,
    pub lambda_range: (f64, f64),
    pub outputs: BTreeSet<Output>,
    pub samples: usize,
    pub seed: u64,
    pub zone_points: usize,
    /// The normalized document after overrides.
    pub echo: RawConfig,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        toml::from_str(text).map_err(|e| IoError::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.grid {
            self.grid.points = n;
            self.magnetic.zone_points = n;
        }
        if let Some(k) = o.kind {
            self.grid.kind = k;
        }
        if let Some(t) = o.tol_touch {
            self.tolerances.touch = t;
        }
        if let Some(s) = o.seed {
            self.validate.seed = s;
        }
    }

    /// Builds the run configuration. `base` resolves relative potential paths.
    pub fn resolve(&self, base: &Path) -> Result<RunConfig, IoError> {
        let bad = |field: &str, msg: String| IoError::Config(format!("{field}: {msg}"));
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(
                "schema_version",
                format!("unsupported value {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let l = &self.lattice;
        let vertex = VertexParams::new(l.alpha_a, l.alpha_b).with_alpha_c(l.alpha_c);
        let coupling = match (l.t0, l.t_a, l.t_b) {
            (None, None, None) => None,
            (t0, None, None) => t0.map(CouplingParams::new),
            (t0, t_a, t_b) => Some(CouplingParams {
                t0: t0.or(t_a).unwrap_or(f64::NAN),
                t_a,
                t_b,
            }),
        };
        let config = StackConfig::new(l.variant, vertex, coupling, l.flux)
            .map_err(|e| bad("lattice", e.to_string()))?;

        let min = match self.grid.kind {
            GridKind::Diagonal => 2,
            GridKind::Full => 1,
        };
        if self.grid.points < min {
            return Err(bad("grid.points", format!("needs at least {min}, got {}", self.grid.points)));
        }
        let grid = match self.grid.kind {
            GridKind::Diagonal => GridSpec::Diagonal(self.grid.points),
            GridKind::Full => GridSpec::Full(self.grid.points),
        };

        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.touch", t.touch),
            ("tolerances.slope", t.slope),
            ("tolerances.eigensolve", t.eigensolve),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(name, format!("must be a positive number, got {v}")));
            }
        }
        let tolerances = Tolerances {
            touch: t.touch,
            slope: t.slope,
            ..Tolerances::default()
        };

        let (potential, lambda_range) = match &self.potential {
            None => (None, (default_lambda_min(), default_lambda_max())),
            Some(p) => {
                let q0 = match p.kind {
                    PotentialKind::Zero => PotentialSpec::Zero,
                    PotentialKind::Cosine => {
                        let eps = p
                            .epsilon
                            .ok_or_else(|| bad("potential.epsilon", "required for kind = \"cosine\"".into()))?;
                        if !eps.is_finite() {
                            return Err(bad("potential.epsilon", format!("must be finite, got {eps}")));
                        }
                        PotentialSpec::cosine(eps)
                    }
                    PotentialKind::Sampled => {
                        let file = p
                            .file
                            .as_ref()
                            .ok_or_else(|| bad("potential.file", "required for kind = \"sampled\"".into()))?;
                        let path = base.join(file);
                        let text = fs::read_to_string(&path).map_err(|e| IoError::file(&path, e))?;
                        PotentialSpec::parse_two_column(&text).map_err(|e| bad("potential.file", e.to_string()))?
                    }
                };
                q0.check_even().map_err(|e| bad("potential", e.to_string()))?;
                if !(p.lambda_min.is_finite() && p.lambda_max.is_finite() && p.lambda_min < p.lambda_max) {
                    return Err(bad(
                        "potential.lambda_min/lambda_max",
                        format!("need a finite range with min < max, got [{}, {}]", p.lambda_min, p.lambda_max),
                    ));
                }
                (Some(q0), (p.lambda_min, p.lambda_max))
            }
        };

        let outputs: BTreeSet<Output> = match &self.outputs {
            Some(o) => o.iter().copied().collect(),
            None => [Output::Bands].into_iter().collect(),
        };
        if self.validate.samples == 0 {
            return Err(bad("validate.samples", "must be at least 1".into()));
        }
        Ok(RunConfig {
            config,
            grid,
            tolerances,
            eigensolve_tol: t.eigensolve,
            potential,
            lambda_range,
            outputs,
            samples: self.validate.samples,
            seed: self.validate.seed,
            zone_points: self.magnetic.zone_points,
            echo: self.clone(),
        })
    }
}

/// Reads, overrides and resolves a config file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    let mut raw = RawConfig::parse(&text).map_err(|e| match e {
        IoError::Config(m) => IoError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    raw.apply(overrides);
    raw.resolve(path.parent().unwrap_or(Path::new(".")))
}

// ---------------------------------------------------------------------------
// files

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::file(dir, e))?;
    tmp.write_all(bytes).map_err(|e| IoError::file(path, e))?;
    tmp.as_file().sync_all().map_err(|e| IoError::file(path, e))?;
    tmp.persist(path).map_err(|e| IoError::file(path, e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Seventeen significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// band CSV

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandRow {
    pub theta1: f64,
    pub theta2: f64,
    pub f_real: f64,
    pub f_imag: f64,
    pub band_index: usize,
    pub eta: f64,
    pub admissible: bool,
    pub closed_form: bool,
}

/// One row per grid point and band, in grid order then band order.
pub fn band_rows(surface: &DispersionSurface) -> Vec<BandRow> {
    surface
        .points
        .iter()
        .flat_map(|p| {
            let roots = p.primary();
            let closed = roots.source == crate::floquet::RootSource::ClosedForm;
            (0..roots.len()).map(move |k| BandRow {
                theta1: p.theta.theta1(),
                theta2: p.theta.theta2(),
                f_real: p.f.re,
                f_imag: p.f.im,
                band_index: k,
                eta: roots.values[k],
                admissible: roots.admissible[k],
                closed_form: closed,
            })
        })
        .collect()
}

pub fn band_csv(rows: &[BandRow]) -> Result<Vec<u8>, IoError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| IoError::Config(format!("csv: {e}"));
    w.write_record(BAND_CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.theta1),
            fmt_f64(r.theta2),
            fmt_f64(r.f_real),
            fmt_f64(r.f_imag),
            r.band_index.to_string(),
            fmt_f64(r.eta),
            r.admissible.to_string(),
            if r.closed_form { "closed_form" } else { "numeric" }.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| IoError::Config(format!("csv: {e}")))
}

pub fn parse_band_csv(bytes: &[u8], origin: &Path) -> Result<Vec<BandRow>, IoError> {
    let perr = |line: u64, message: String| IoError::Parse {
        path: origin.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| perr(1, e.to_string()))?;
    if header.iter().ne(BAND_CSV_HEADER) {
        return Err(perr(1, format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| perr(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, IoError> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| perr(line, format!("{}: {e}", BAND_CSV_HEADER[i])))
        };
        rows.push(BandRow {
            theta1: num(0)?,
            theta2: num(1)?,
            f_real: num(2)?,
            f_imag: num(3)?,
            band_index: rec[4].parse().map_err(|e| perr(line, format!("band_index: {e}")))?,
            eta: num(5)?,
            admissible: rec[6].parse().map_err(|e| perr(line, format!("admissible: {e}")))?,
            closed_form: match &rec[7] {
                "closed_form" => true,
                "numeric" => false,
                other => return Err(perr(line, format!("source: unknown value {other:?}"))),
            },
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// spectrum CSV

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    /// `None` for Dirichlet rows.
    pub eta_band: Option<usize>,
    pub hill_band: Option<usize>,
    pub eta_min: Option<f64>,
    pub eta_max: Option<f64>,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub pure_point: bool,
}

pub fn spectrum_csv(rows: &[SpectrumRow]) -> Result<Vec<u8>, IoError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| IoError::Config(format!("csv: {e}"));
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    w.write_record(SPECTRUM_CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.eta_band.map(|k| k.to_string()).unwrap_or_default(),
            r.hill_band.map(|k| k.to_string()).unwrap_or_default(),
            opt(r.eta_min),
            opt(r.eta_max),
            fmt_f64(r.lambda_lo),
            fmt_f64(r.lambda_hi),
            if r.pure_point { "pp" } else { "ac" }.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| IoError::Config(format!("csv: {e}")))
}

// ---------------------------------------------------------------------------
// reports

/// One key-value record of a classify report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TouchRecord {
    pub kind: String,
    pub band_lower: usize,
    pub band_upper: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub f_real: f64,
    pub f_imag: f64,
    pub eta: f64,
    pub separation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<[String; 2]>,
}

impl From<&TouchReport> for TouchRecord {
    fn from(t: &TouchReport) -> Self {
        Self {
            kind: t.kind.as_str().to_string(),
            band_lower: t.band_pair.0,
            band_upper: t.band_pair.1,
            theta1: t.location.theta1(),
            theta2: t.location.theta2(),
            f_real: t.f_value.re,
            f_imag: t.f_value.im,
            eta: t.eta,
            separation: t.separation,
            gamma: t.gamma,
            width: t.gap_width,
            curvature: t.curvature,
            branches: t.branches.map(|(a, b)| [a.to_string(), b.to_string()]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyReport {
    pub variant: String,
    pub grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form_gap: Option<f64>,
    #[serde(default)]
    pub record: Vec<TouchRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapRecord {
    pub band_lower: usize,
    pub band_upper: usize,
    /// `min(band_upper) − max(band_lower)`; negative when the bands overlap.
    pub global_gap: f64,
    pub min_separation: f64,
    pub theta1: f64,
    pub theta2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapsReport {
    pub variant: String,
    pub grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form_gap: Option<f64>,
    #[serde(default)]
    pub pair: Vec<GapRecord>,
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String, IoError> {
    toml::to_string(value).map_err(|e| IoError::Config(format!("serialize: {e}")))
}

pub fn from_toml<T: for<'de> Deserialize<'de>>(text: &str, origin: &Path) -> Result<T, IoError> {
    toml::from_str(text).map_err(|e| IoError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// manifest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub started_unix_seconds: f64,
    pub wall_clock_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    pub config: RawConfig,
    #[serde(default)]
    pub output: Vec<OutputDigest>,
}

// ---------------------------------------------------------------------------
// SVG

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// η against θ₁ along the diagonal, one polyline per band, with touch and gap
/// markers. Output depends only on the inputs.
pub fn band_svg(surface: &DispersionSurface, touches: &[TouchReport], title: &str) -> String {
    let bands: Vec<Vec<f64>> = (0..surface.dim()).map(|k| surface.band(k)).collect();
    let xs: Vec<f64> = surface.points.iter().map(|p| p.theta.theta1()).collect();
    let (mut lo, mut hi) = bands
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let (x0, x1) = (-std::f64::consts::PI, std::f64::consts::PI);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (SVG_W - 2.0 * MARGIN);
    let py = |y: f64| SVG_H - MARGIN - (y - lo) / (hi - lo) * (SVG_H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, SVG_W / 2.0, xml_escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        SVG_W - 2.0 * MARGIN,
        SVG_H - 2.0 * MARGIN
    );
    for (label, x) in [("-π", x0), ("-2π/3", -2.0 * x1 / 3.0), ("0", 0.0), ("2π/3", 2.0 * x1 / 3.0), ("π", x1)] {
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="lightgray"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{label}</text>"#,
            px(x),
            MARGIN,
            SVG_H - MARGIN,
            SVG_H - MARGIN + 18.0
        );
    }
    for i in 0..=4 {
        let y = lo + (hi - lo) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            MARGIN - 6.0,
            py(y) + 4.0,
            y
        );
    }
    if lo < 0.0 && hi > 0.0 {
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="lightgray" stroke-dasharray="4 3"/>"#,
            py(0.0),
            SVG_W - MARGIN
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">θ₁ (θ₂ = −θ₁)</text>"#, SVG_W / 2.0, SVG_H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">η</text>"#,
        SVG_H / 2.0,
        SVG_H / 2.0
    );
    for (k, band) in bands.iter().enumerate() {
        let pts: Vec<String> = xs
            .iter()
            .zip(band)
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" data-band="{k}" points="{}"/>"#,
            PALETTE[k % PALETTE.len()],
            pts.join(" ")
        );
    }
    for t in touches {
        let x = px(t.location.theta1());
        match t.kind {
            TouchKind::Gap => {
                let lower = t.eta - t.separation / 2.0;
                let upper = t.eta + t.separation / 2.0;
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black" stroke-width="2"/><text x="{:.2}" y="{:.2}">gap {:.4}</text>"#,
                    py(lower),
                    py(upper),
                    x + 4.0,
                    py(upper) - 4.0,
                    t.separation
                );
            }
            kind => {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{x:.2}" cy="{:.2}" r="4" fill="none" stroke="black"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                    py(t.eta),
                    x + 6.0,
                    py(t.eta) - 6.0,
                    kind.as_str()
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
