//! Dispersion surfaces over the Brillouin zone, band-touch classification
//! along the anti-diagonal slice, gap widths and cone slopes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::floquet::{self, DispersionRoots, FloquetError};
use crate::lattice::{
    diagonal_slice, full_grid, structure_function, wrap_angle, LatticeError, Quasimomentum,
    StackConfig, Variant,
};
use crate::magnetic;

/// Smallest diagonal grid on which touches are classified.
pub const MIN_CLASSIFY_POINTS: usize = 201;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandError {
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("grid of {got} points is too coarse for classification; need at least {min}")]
    Resolution { got: usize, min: usize },
    #[error("touch classification runs on the diagonal slice only")]
    NotDiagonal,
    #[error("no closed-form gap for {0}")]
    NoClosedForm(Variant),
    #[error("d'(lambda) = {0} is zero; lambda sits at a band edge")]
    ZeroDerivative(f64),
}

/// Thresholds used when declaring and classifying touches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Separation at or below which two bands touch (η units).
    pub touch: f64,
    /// One-sided slope above which a touch is linear (η per radian).
    pub slope: f64,
    /// Step for the one-sided slope estimates.
    pub fd_step: f64,
    /// Step for the curvature estimate.
    pub curvature_step: f64,
    /// Bracket width at which golden-section refinement stops (radians).
    pub refine: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            touch: 1e-6,
            slope: 1e-4,
            fd_step: 1e-6,
            curvature_step: 1e-3,
            refine: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpec {
    /// `n` points on `θ₂ = −θ₁`.
    Diagonal(usize),
    /// `n × n` points over the closed zone.
    Full(usize),
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<Quasimomentum>, LatticeError> {
        match *self {
            GridSpec::Diagonal(n) => diagonal_slice(n),
            GridSpec::Full(n) => full_grid(n),
        }
    }
}

/// Roots at one grid point, from both paths when a closed form exists.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub theta: Quasimomentum,
    pub f: Complex64,
    pub closed: Option<DispersionRoots>,
    pub numeric: DispersionRoots,
}

impl SurfacePoint {
    /// Closed-form roots when available, otherwise the oracle.
    pub fn primary(&self) -> &DispersionRoots {
        self.closed.as_ref().unwrap_or(&self.numeric)
    }

    pub fn closed_numeric_deviation(&self) -> Option<f64> {
        self.closed.as_ref().map(|c| {
            c.values
                .iter()
                .zip(&self.numeric.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }
}

/// Roots of any configuration at `θ`.
pub fn evaluate(config: &StackConfig, theta: &Quasimomentum) -> Result<SurfacePoint, BandError> {
    let (closed, matrix) = if config.variant() == Variant::MagneticMonolayer {
        (
            magnetic::robin_closed_form_roots(config, theta).ok(),
            magnetic::robin_floquet(config, theta)?,
        )
    } else {
        let closed = match floquet::closed_form_roots(config, theta) {
            Ok(r) => Some(r),
            Err(FloquetError::NoClosedForm { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        (closed, floquet::assemble(config, theta)?)
    };
    let mut numeric = floquet::numeric_roots(&matrix);
    if let Some(c) = &closed {
        numeric = numeric.with_labels_from(c);
    }
    Ok(SurfacePoint {
        theta: *theta,
        f: structure_function(theta),
        closed,
        numeric,
    })
}

/// Sampled dispersion relation over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSurface {
    pub config: StackConfig,
    pub grid: GridSpec,
    pub points: Vec<SurfacePoint>,
}

impl DispersionSurface {
    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    /// Sorted band values at every grid point.
    pub fn bands(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.primary().values.clone()).collect()
    }

    /// Values of band `k` along the grid.
    pub fn band(&self, k: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.primary().values[k]).collect()
    }

    pub fn admissibility_mask(&self) -> Vec<Vec<bool>> {
        self.points.iter().map(|p| p.primary().admissible.clone()).collect()
    }

    /// `band[k+1] − band[k]` at every grid point.
    pub fn separation(&self, k: usize) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| {
                let v = &p.primary().values;
                v[k + 1] - v[k]
            })
            .collect()
    }

    /// Smallest separation of bands `k`, `k+1` and the grid index where it occurs.
    pub fn min_separation(&self, k: usize) -> (f64, usize) {
        self.separation(k)
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
    }

    /// `min band[k+1] − max band[k]`: the spectral gap between the two bands as sets.
    pub fn global_gap(&self, k: usize) -> f64 {
        let lo = self.band(k).into_iter().fold(f64::NEG_INFINITY, f64::max);
        let hi = self.band(k + 1).into_iter().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    /// Largest |closed form − oracle| over the grid, when closed forms exist.
    pub fn max_closed_numeric_deviation(&self) -> Option<f64> {
        self.points
            .iter()
            .filter_map(|p| p.closed_numeric_deviation())
            .reduce(f64::max)
    }
}

/// Samples a configuration over a grid. Points are evaluated in parallel.
pub fn sample(config: &StackConfig, grid: GridSpec) -> Result<DispersionSurface, BandError> {
    let thetas = grid.points()?;
    let points = thetas
        .par_iter()
        .map(|t| evaluate(config, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DispersionSurface {
        config: *config,
        grid,
        points,
    })
}

/// The two bands straddling the middle of the spectrum.
pub fn middle_pair(dim: usize) -> usize {
    dim / 2 - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TouchKind {
    Cone,
    Parabolic,
    Gap,
    /// Two branches pass through each other transversally.
    Crossing,
}

impl TouchKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TouchKind::Cone => "cone",
            TouchKind::Parabolic => "parabolic",
            TouchKind::Gap => "gap",
            TouchKind::Crossing => "crossing",
        }
    }
}

/// A classified local minimum of the separation between two adjacent bands.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchReport {
    pub location: Quasimomentum,
    pub f_value: Complex64,
    pub band_pair: (usize, usize),
    pub kind: TouchKind,
    /// Mean of the two band values at the location.
    pub eta: f64,
    pub separation: f64,
    /// Cone slope of one band, η per radian along the slice.
    pub gamma: Option<f64>,
    pub gap_width: Option<f64>,
    /// Second difference of the separation (parabolic touches).
    pub curvature: Option<f64>,
    pub branches: Option<(&'static str, &'static str)>,
}

/// Classifies every local minimum of every adjacent-band separation along the
/// diagonal slice. Minima that are mirror images under `θ₁ ↦ −θ₁` are
/// reported once.
pub fn classify_touches(
    surface: &DispersionSurface,
    tol: &Tolerances,
) -> Result<Vec<TouchReport>, BandError> {
    let n = match surface.grid {
        GridSpec::Diagonal(n) => n,
        GridSpec::Full(_) => return Err(BandError::NotDiagonal),
    };
    if n < MIN_CLASSIFY_POINTS {
        return Err(BandError::Resolution {
            got: n,
            min: MIN_CLASSIFY_POINTS,
        });
    }
    let config = surface.config;
    let h = 2.0 * PI / (n - 1) as f64;
    let m = n - 1;
    let mut reports: Vec<TouchReport> = Vec::new();
    for k in 0..surface.dim() - 1 {
        let sep = surface.separation(k);
        let sep_at = |t: f64| -> f64 {
            let p = evaluate(&config, &Quasimomentum::wrapped(t, -t)).expect("validated config");
            let v = &p.primary().values;
            v[k + 1] - v[k]
        };
        let minima = periodic_minima(&sep[..m], PLATEAU_TOL);
        let candidates = if minima.is_empty() {
            let (_, i) = sep[..m]
                .iter()
                .enumerate()
                .fold((f64::INFINITY, 0), |a, (i, &v)| if v < a.0 { (v, i) } else { a });
            vec![i]
        } else {
            minima
        };
        for i in candidates {
            let t0 = surface.points[i].theta.theta1();
            let (t_star, s_star) = golden_min(&sep_at, t0 - h, t0 + h, tol.refine);
            let (t_star, s_star) = if sep[i] < s_star { (t0, sep[i]) } else { (t_star, s_star) };
            let report = classify_point(&config, k, wrap_angle(t_star), s_star, tol, &sep_at);
            if !reports.iter().any(|r| is_mirror_duplicate(r, &report)) {
                reports.push(report);
            }
        }
    }
    Ok(reports)
}

/// Separations closer than this are treated as equal when locating minima.
pub const PLATEAU_TOL: f64 = 1e-11;

/// Indices of the local minima of a periodic sequence. A run of values equal
/// to within `tie` counts as one minimum, reported at its middle, when both
/// neighbours of the run are larger; a constant sequence has none.
pub fn periodic_minima(v: &[f64], tie: f64) -> Vec<usize> {
    let m = v.len();
    let mut out = Vec::new();
    if m < 3 {
        return out;
    }
    for i in 0..m {
        let prev = v[(i + m - 1) % m];
        if (v[i] - prev).abs() <= tie {
            continue;
        }
        let mut len = 1;
        while len < m && (v[(i + len) % m] - v[i]).abs() <= tie {
            len += 1;
        }
        if len == m {
            break;
        }
        let next = v[(i + len) % m];
        if prev > v[i] + tie && next > v[i] + tie {
            out.push((i + len / 2) % m);
        }
    }
    out
}

fn is_mirror_duplicate(a: &TouchReport, b: &TouchReport) -> bool {
    a.band_pair == b.band_pair
        && a.kind == b.kind
        && (a.f_value - b.f_value).norm() < 1e-6
        && (a.eta - b.eta).abs() < 1e-6
        && (a.separation - b.separation).abs() < 1e-6
}

fn classify_point(
    config: &StackConfig,
    k: usize,
    t: f64,
    s: f64,
    tol: &Tolerances,
    sep_at: &dyn Fn(f64) -> f64,
) -> TouchReport {
    let theta = Quasimomentum::wrapped(t, -t);
    let point = evaluate(config, &theta).expect("validated config");
    let roots = point.primary();
    let branches = (roots.branch_labels.len() == roots.len())
        .then(|| (roots.branch_labels[k], roots.branch_labels[k + 1]));
    let mut report = TouchReport {
        location: theta,
        f_value: point.f,
        band_pair: (k, k + 1),
        kind: TouchKind::Gap,
        eta: 0.5 * (roots.values[k] + roots.values[k + 1]),
        separation: s,
        gamma: None,
        gap_width: None,
        curvature: None,
        branches,
    };
    if s > tol.touch {
        report.gap_width = Some(s);
        return report;
    }
    if let Some((la, lb)) = branches {
        if crosses_transversally(config, t, la, lb, tol) {
            report.kind = TouchKind::Crossing;
            return report;
        }
    }
    let hs = tol.fd_step;
    let left = (s - sep_at(t - hs)) / hs;
    let right = (sep_at(t + hs) - s) / hs;
    if left.abs() <= tol.slope && right.abs() <= tol.slope {
        let hc = tol.curvature_step;
        report.kind = TouchKind::Parabolic;
        report.curvature = Some((sep_at(t + hc) - 2.0 * s + sep_at(t - hc)) / (hc * hc));
    } else {
        let ratio = left.abs().max(right.abs()) / left.abs().min(right.abs()).max(f64::MIN_POSITIVE);
        report.kind = if left < 0.0 && right > 0.0 && ratio < 2.0 {
            TouchKind::Cone
        } else {
            TouchKind::Crossing
        };
        report.gamma = Some(0.25 * (left.abs() + right.abs()));
    }
    report
}

/// Whether the labelled branches `la`, `lb` change order across `θ₁ = t`.
fn crosses_transversally(config: &StackConfig, t: f64, la: &str, lb: &str, tol: &Tolerances) -> bool {
    let diff = |x: f64| -> Option<f64> {
        let p = evaluate(config, &Quasimomentum::wrapped(x, -x)).ok()?;
        let r = p.primary();
        Some(r.branch(la)? - r.branch(lb)?)
    };
    let h = tol.curvature_step;
    match (diff(t - h), diff(t + h)) {
        (Some(a), Some(b)) => a * b < 0.0 && a.abs() > tol.touch && b.abs() > tol.touch,
        _ => false,
    }
}

/// Golden-section minimization of `f` on `[a, b]` down to a bracket of `tol`.
pub fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Gap widths with a closed form: `|α_a − α_b|/3` for the monolayer and
/// `g(α_a, t₀)` for the hetero bilayer with `α_b = −α_a`, `α_c = 0`.
pub fn gap_width_closed_form(config: &StackConfig) -> Result<f64, BandError> {
    let v = config.vertex();
    match config.variant() {
        Variant::Monolayer => Ok((v.alpha_a - v.alpha_b).abs() / 3.0),
        Variant::HeteroBilayer
            if (v.alpha_a + v.alpha_b).abs() <= 1e-12 && v.alpha_c.abs() <= 1e-12 =>
        {
            Ok(hetero_gap(v.alpha_a, config.t0()))
        }
        other => Err(BandError::NoClosedForm(other)),
    }
}

/// `g(α, t₀) = √2·√(2t₀⁴ + α² − √(4α²t₀⁴ + α⁴)) / (3 + t₀²)`, evaluated as
/// `√2·2t₀⁴ / √(2t₀⁴ + α² + √(4α²t₀⁴ + α⁴)) / (3 + t₀²)` to avoid cancellation
/// when `t₀⁴ ≪ α²`.
pub fn hetero_gap(alpha: f64, t0: f64) -> f64 {
    let t4 = t0.powi(4);
    let a2 = alpha * alpha;
    let outer = 2.0 * t4 + a2 + (4.0 * a2 * t4 + a2 * a2).sqrt();
    if outer == 0.0 {
        return 0.0;
    }
    2f64.sqrt() * 2.0 * t4 / outer.sqrt() / (3.0 + t0 * t0)
}

/// The `t₀ = 1` specialization `(√2/4)·√(2 + α² − √(α⁴ + 4α²))`.
pub fn hetero_gap_at_unit_coupling(alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    2f64.sqrt() / 4.0 * 2.0 / (2.0 + a2 + (a2 * a2 + 4.0 * a2).sqrt()).sqrt()
}

/// Converts an η-space cone slope into the λ-space constant `2γ_D/d′`.
pub fn cone_slope_lambda(gamma_d: f64, d_prime: f64) -> Result<f64, BandError> {
    if d_prime == 0.0 || !d_prime.is_finite() {
        return Err(BandError::ZeroDerivative(d_prime));
    }
    Ok(2.0 * gamma_d / d_prime)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictSource {
    Lemma,
    Numeric,
}

/// Admissibility `|η| ≤ 1` of one branch (monolayer) or band (others).
#[derive(Debug, Clone, PartialEq)]
pub struct BranchAdmissibility {
    pub label: String,
    /// The sufficient condition from the monolayer lemmas, when it applies.
    pub guaranteed: Option<bool>,
    pub max_abs: f64,
    pub admissible_everywhere: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityVerdict {
    pub source: VerdictSource,
    pub branches: Vec<BranchAdmissibility>,
}

/// Grid size used for the numeric part of [`admissible_region`].
pub const ADMISSIBILITY_GRID: usize = 2001;

/// Evaluates the monolayer admissibility lemmas, with a dense diagonal check
/// alongside; other variants get the numeric check per band.
pub fn admissible_region(config: &StackConfig) -> Result<AdmissibilityVerdict, BandError> {
    let surface = sample(config, GridSpec::Diagonal(ADMISSIBILITY_GRID))?;
    let numeric = |k: usize| {
        let max_abs = surface.band(k).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (max_abs, max_abs <= 1.0 + floquet::ADMISSIBLE_SLACK)
    };
    if config.variant() != Variant::Monolayer {
        let branches = (0..config.dim())
            .map(|k| {
                let (max_abs, ok) = numeric(k);
                BranchAdmissibility {
                    label: format!("band{k}"),
                    guaranteed: None,
                    max_abs,
                    admissible_everywhere: ok,
                }
            })
            .collect();
        return Ok(AdmissibilityVerdict {
            source: VerdictSource::Numeric,
            branches,
        });
    }
    let v = config.vertex();
    let (a, b) = (v.alpha_a, v.alpha_b);
    let (plus, minus) = if a == b {
        ((0.0..=3.0).contains(&a), (-3.0..=0.0).contains(&a))
    } else {
        (
            b >= -3.0 && -3.0 * b / (3.0 + b) <= a && a <= 3.0,
            b <= 3.0 && -3.0 <= a && a <= -3.0 * b / (3.0 - b),
        )
    };
    let branch_max = |label: &str| {
        surface
            .points
            .iter()
            .map(|p| p.primary().branch(label).expect("monolayer labels").abs())
            .fold(0.0f64, f64::max)
    };
    let branches = [("r+", plus), ("r-", minus)]
        .into_iter()
        .map(|(label, guaranteed)| {
            let max_abs = branch_max(label);
            BranchAdmissibility {
                label: label.to_string(),
                guaranteed: Some(guaranteed),
                max_abs,
                admissible_everywhere: max_abs <= 1.0 + floquet::ADMISSIBLE_SLACK,
            }
        })
        .collect();
    Ok(AdmissibilityVerdict {
        source: VerdictSource::Lemma,
        branches,
    })
}
