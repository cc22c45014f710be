//! The 1D Hill problem on a single edge: monodromy, discriminant, Dirichlet
//! spectrum and the η ↔ λ correspondence.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::floquet::is_admissible;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HillError {
    #[error("spectral parameter must be finite, got {0}")]
    NonFiniteLambda(f64),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("potential is not even about x = 1/2: |q(x) - q(1-x)| = {diff:e} at x = {x}")]
    NotEven { x: f64, diff: f64 },
    #[error("integrator step size underflow at x = {0}")]
    StepUnderflow(f64),
    #[error("derivative {derivative:e} vanishes at z = {z}; the point is a band edge")]
    BandEdge { z: f64, derivative: f64 },
    #[error("no preimage of {0} in the searched range")]
    NoPreimage(f64),
    #[error("search range [{0}, {1}] is empty or unbounded")]
    BadRange(f64, f64),
}

/// Tolerance for the evenness check on the potential.
pub const EVEN_TOL: f64 = 1e-10;
/// Half-width of the window around a Dirichlet eigenvalue excluded from inversion.
pub const DIRICHLET_EXCLUSION: f64 = 1e-8;

/// An edge potential `q₀` on `[0, 1]`.
#[derive(Clone)]
pub enum PotentialSpec {
    Zero,
    /// Samples `(x, q₀(x))`, linearly interpolated.
    Sampled { xs: Vec<f64>, ys: Vec<f64> },
    Closure(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Zero => write!(f, "Zero"),
            PotentialSpec::Sampled { xs, .. } => write!(f, "Sampled({} points)", xs.len()),
            PotentialSpec::Closure(_) => write!(f, "Closure"),
        }
    }
}

impl PotentialSpec {
    /// `q₀(x) = ε cos(2πx)`.
    pub fn cosine(eps: f64) -> Self {
        PotentialSpec::Closure(Arc::new(move |x| eps * (2.0 * std::f64::consts::PI * x).cos()))
    }

    pub fn closure(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PotentialSpec::Closure(Arc::new(f))
    }

    pub fn sampled(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, HillError> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(HillError::InvalidPotential(
                "need at least two (x, q) samples".into(),
            ));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(HillError::InvalidPotential("non-finite sample".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HillError::InvalidPotential(
                "x must be strictly increasing".into(),
            ));
        }
        if xs[0].abs() > 1e-12 || (xs[xs.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(HillError::InvalidPotential("samples must span [0, 1]".into()));
        }
        Ok(PotentialSpec::Sampled { xs, ys })
    }

    /// Parses whitespace- or comma-separated `x q` lines; `#` starts a comment.
    pub fn parse_two_column(text: &str) -> Result<Self, HillError> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    HillError::InvalidPotential(format!("line {}: cannot parse {s:?}", no + 1))
                })
            };
            match fields.as_slice() {
                [x, y] => {
                    xs.push(parse(x)?);
                    ys.push(parse(y)?);
                }
                _ => {
                    return Err(HillError::InvalidPotential(format!(
                        "line {}: expected two columns",
                        no + 1
                    )))
                }
            }
        }
        Self::sampled(xs, ys)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Closure(f) => f(x),
            PotentialSpec::Sampled { xs, ys } => {
                let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let w = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                ys[i - 1] * (1.0 - w) + ys[i] * w
            }
        }
    }

    /// Checks `q₀(x) = q₀(1 − x)` on 101 points and at every sample abscissa.
    pub fn check_even(&self) -> Result<(), HillError> {
        let mut points: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        if let PotentialSpec::Sampled { xs, .. } = self {
            points.extend(xs);
        }
        for x in points {
            let diff = (self.eval(x) - self.eval(1.0 - x)).abs();
            if !diff.is_finite() || diff > EVEN_TOL {
                return Err(HillError::NotEven { x, diff });
            }
        }
        Ok(())
    }
}

/// `[[c, s], [c′, s′]]` at `x = 1`, together with the λ-derivatives of each entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monodromy {
    pub lambda: f64,
    pub c: f64,
    pub s: f64,
    pub c_prime: f64,
    pub s_prime: f64,
    /// `∂/∂λ` of `(c, s, c′, s′)`.
    pub d_lambda: [f64; 4],
}

impl Monodromy {
    pub fn entries(&self) -> [[f64; 2]; 2] {
        [[self.c, self.s], [self.c_prime, self.s_prime]]
    }

    pub fn det(&self) -> f64 {
        self.c * self.s_prime - self.s * self.c_prime
    }

    pub fn trace(&self) -> f64 {
        self.c + self.s_prime
    }

    pub fn trace_derivative(&self) -> f64 {
        self.d_lambda[0] + self.d_lambda[3]
    }
}

/// Absolute and relative local error tolerances for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-10,
            max_steps: 1_000_000,
        }
    }
}

/// Monodromy of `−y″ + q₀y = λy` over `[0, 1]`.
pub fn integrate_monodromy(q0: &PotentialSpec, lambda: f64) -> Result<Monodromy, HillError> {
    integrate_monodromy_with(q0, lambda, &IntegratorOptions::default())
}

pub fn integrate_monodromy_with(
    q0: &PotentialSpec,
    lambda: f64,
    opts: &IntegratorOptions,
) -> Result<Monodromy, HillError> {
    if !lambda.is_finite() {
        return Err(HillError::NonFiniteLambda(lambda));
    }
    if let PotentialSpec::Zero = q0 {
        return Ok(zero_potential_monodromy(lambda));
    }
    // [c, c′, s, s′, ∂c, ∂c′, ∂s, ∂s′]
    let rhs = |x: f64, y: &[f64; 8]| -> [f64; 8] {
        let w = q0.eval(x) - lambda;
        [
            y[1],
            w * y[0],
            y[3],
            w * y[2],
            y[5],
            w * y[4] - y[0],
            y[7],
            w * y[6] - y[2],
        ]
    };
    let mut y = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    // Sampled potentials are only piecewise smooth, so every knot ends a step.
    let knots: Vec<f64> = match q0 {
        PotentialSpec::Sampled { xs, .. } => xs.clone(),
        _ => vec![0.0, 1.0],
    };
    for w in knots.windows(2) {
        y = dormand_prince(rhs, y, w[0], w[1], opts)?;
    }
    Ok(Monodromy {
        lambda,
        c: y[0],
        s: y[2],
        c_prime: y[1],
        s_prime: y[3],
        d_lambda: [y[4], y[6], y[5], y[7]],
    })
}

fn zero_potential_monodromy(lambda: f64) -> Monodromy {
    let (c, s, ds) = if lambda.abs() < 1e-3 {
        let l = lambda;
        (
            1.0 - l / 2.0 + l * l / 24.0 - l.powi(3) / 720.0 + l.powi(4) / 40320.0,
            1.0 - l / 6.0 + l * l / 120.0 - l.powi(3) / 5040.0 + l.powi(4) / 362880.0,
            -1.0 / 6.0 + l / 60.0 - l * l / 1680.0 + l.powi(3) / 90720.0,
        )
    } else {
        let (c, s) = if lambda > 0.0 {
            let k = lambda.sqrt();
            (k.cos(), k.sin() / k)
        } else {
            let k = (-lambda).sqrt();
            (k.cosh(), k.sinh() / k)
        };
        (c, s, (c - s) / (2.0 * lambda))
    };
    Monodromy {
        lambda,
        c,
        s,
        c_prime: -lambda * s,
        s_prime: c,
        d_lambda: [-s / 2.0, ds, -s - lambda * ds, -s / 2.0],
    }
}

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B_STAR: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Dormand–Prince 5(4) with standard step-size control.
fn dormand_prince<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    mut y: [f64; N],
    mut x: f64,
    x_end: f64,
    opts: &IntegratorOptions,
) -> Result<[f64; N], HillError> {
    let mut h = 1e-2_f64.min(x_end - x);
    let mut steps = 0;
    while x < x_end {
        if steps >= opts.max_steps || h < 1e-14 {
            return Err(HillError::StepUnderflow(x));
        }
        steps += 1;
        h = h.min(x_end - x);
        let mut k = [[0.0; N]; 7];
        for i in 0..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(i) {
                let a = DP_A[i][j];
                if a != 0.0 {
                    for n in 0..N {
                        yi[n] += h * a * kj[n];
                    }
                }
            }
            k[i] = f(x + DP_C[i] * h, &yi);
        }
        let mut y_new = y;
        let mut err: f64 = 0.0;
        for n in 0..N {
            let mut incr = 0.0;
            let mut e = 0.0;
            for i in 0..7 {
                incr += DP_B[i] * k[i][n];
                e += (DP_B[i] - DP_B_STAR[i]) * k[i][n];
            }
            y_new[n] += h * incr;
            let scale = opts.atol + opts.rtol * y[n].abs().max(y_new[n].abs());
            err = err.max((h * e).abs() / scale);
        }
        if err <= 1.0 {
            x += h;
            y = y_new;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok(y)
}

/// Which normalization of `s(1; z)` enters `μ_α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MuConvention {
    /// `μ_α(z) = c(1; z) + (α/2)·s(1; z)`.
    #[default]
    HalfAlpha,
    /// `μ_α(z) = c(1; z) + α·s(1; z)`.
    FullAlpha,
}

impl MuConvention {
    fn weight(&self, alpha: f64) -> f64 {
        match self {
            MuConvention::HalfAlpha => alpha / 2.0,
            MuConvention::FullAlpha => alpha,
        }
    }
}

pub fn mu_alpha(q0: &PotentialSpec, alpha: f64, z: f64) -> Result<f64, HillError> {
    mu_alpha_with(q0, alpha, z, MuConvention::default())
}

pub fn mu_alpha_with(
    q0: &PotentialSpec,
    alpha: f64,
    z: f64,
    convention: MuConvention,
) -> Result<f64, HillError> {
    let m = integrate_monodromy(q0, z)?;
    Ok(m.c + convention.weight(alpha) * m.s)
}

/// `∂μ_α/∂z`.
pub fn mu_alpha_derivative(
    q0: &PotentialSpec,
    alpha: f64,
    z: f64,
    convention: MuConvention,
) -> Result<f64, HillError> {
    let m = integrate_monodromy(q0, z)?;
    Ok(m.d_lambda[0] + convention.weight(alpha) * m.d_lambda[1])
}

/// A maximal interval on which `d` is monotone and `|d| ≤ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillBand {
    pub lo: f64,
    pub hi: f64,
    pub d_lo: f64,
    pub d_hi: f64,
}

/// `d(λ) = tr M(λ)` over a bounded search range, with its bands and
/// Dirichlet eigenvalues.
#[derive(Debug, Clone)]
pub struct HillDiscriminant {
    pub potential: PotentialSpec,
    pub range: (f64, f64),
    pub band_intervals: Vec<HillBand>,
    pub dirichlet_eigs: Vec<f64>,
}

/// Number of scan points per unit of `√λ` used to bracket roots.
const SCAN_DENSITY: f64 = 200.0;
const ROOT_TOL: f64 = 1e-12;

fn scan_grid(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi.max(0.0).sqrt() - lo.max(0.0).sqrt() + (hi - lo).min(1.0);
    let n = ((span * SCAN_DENSITY).ceil() as usize).max(200);
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub fn bisect(f: &dyn Fn(f64) -> Result<f64, HillError>, mut a: f64, mut b: f64, tol: f64) -> Result<f64, HillError> {
    let mut fa = f(a)?;
    if fa == 0.0 {
        return Ok(a);
    }
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa.signum() == fm.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

impl HillDiscriminant {
    pub fn compute(potential: PotentialSpec, lo: f64, hi: f64) -> Result<Self, HillError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(HillError::BadRange(lo, hi));
        }
        potential.check_even()?;
        let grid = scan_grid(lo, hi);
        let mono = grid
            .iter()
            .map(|&l| integrate_monodromy(&potential, l))
            .collect::<Result<Vec<_>, _>>()?;
        let dp = |l: f64| integrate_monodromy(&potential, l).map(|m| m.trace_derivative());
        let s_at = |l: f64| integrate_monodromy(&potential, l).map(|m| m.s);

        let mut breaks = vec![lo];
        let mut dirichlet = Vec::new();
        for (w, m) in grid.windows(2).zip(mono.windows(2)) {
            let (a, b) = (w[0], w[1]);
            if m[0].trace_derivative() * m[1].trace_derivative() < 0.0 {
                breaks.push(bisect(&dp, a, b, ROOT_TOL)?);
            } else if m[1].trace_derivative() == 0.0 && b < hi {
                breaks.push(b);
            }
            if m[0].s * m[1].s < 0.0 {
                dirichlet.push(bisect(&s_at, a, b, ROOT_TOL)?);
            } else if m[1].s == 0.0 && b < hi {
                dirichlet.push(b);
            }
        }
        breaks.push(hi);

        let d = |l: f64| integrate_monodromy(&potential, l).map(|m| m.trace());
        let mut bands = Vec::new();
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 0.0 {
                continue;
            }
            let (da, db) = (d(a)?, d(b)?);
            let lo_edge = band_edge(&d, a, b, da, db, true)?;
            let hi_edge = band_edge(&d, a, b, da, db, false)?;
            if let (Some(x), Some(y)) = (lo_edge, hi_edge) {
                if y >= x {
                    bands.push(HillBand {
                        lo: x,
                        hi: y,
                        d_lo: d(x)?,
                        d_hi: d(y)?,
                    });
                }
            }
        }
        Ok(Self {
            potential,
            range: (lo, hi),
            band_intervals: bands,
            dirichlet_eigs: dirichlet,
        })
    }

    pub fn d(&self, lambda: f64) -> Result<f64, HillError> {
        integrate_monodromy(&self.potential, lambda).map(|m| m.trace())
    }

    pub fn d_prime(&self, lambda: f64) -> Result<f64, HillError> {
        integrate_monodromy(&self.potential, lambda).map(|m| m.trace_derivative())
    }

    pub fn is_dirichlet(&self, lambda: f64) -> bool {
        self.dirichlet_eigs
            .iter()
            .any(|&e| (e - lambda).abs() <= DIRICHLET_EXCLUSION)
    }

    /// The `λ` in `band` with `d(λ) = target`, if any.
    pub fn invert_in_band(&self, band: &HillBand, target: f64) -> Result<Option<f64>, HillError> {
        let (dmin, dmax) = (band.d_lo.min(band.d_hi), band.d_lo.max(band.d_hi));
        if target < dmin - 1e-12 || target > dmax + 1e-12 {
            return Ok(None);
        }
        let target = target.clamp(dmin, dmax);
        if (band.d_lo - target).abs() == 0.0 {
            return Ok(Some(band.lo));
        }
        if (band.d_hi - target).abs() == 0.0 {
            return Ok(Some(band.hi));
        }
        let f = |l: f64| self.d(l).map(|v| v - target);
        bisect(&f, band.lo, band.hi, ROOT_TOL).map(Some)
    }
}

/// Edge of `{|d| ≤ 2}` on a monotone piece `[a, b]`: the lower end when
/// `lower`, else the upper end.
fn band_edge(
    d: &dyn Fn(f64) -> Result<f64, HillError>,
    a: f64,
    b: f64,
    da: f64,
    db: f64,
    lower: bool,
) -> Result<Option<f64>, HillError> {
    let inside = |v: f64| v.abs() <= 2.0;
    let (x, dx, y, dy) = if lower { (a, da, b, db) } else { (b, db, a, da) };
    if inside(dx) {
        return Ok(Some(x));
    }
    let bound = 2.0 * dx.signum();
    if (dy - bound) * (dx - bound) > 0.0 && !inside(dy) {
        return Ok(None);
    }
    let f = |l: f64| d(l).map(|v| v - bound);
    bisect(&f, x.min(y), x.max(y), ROOT_TOL).map(Some)
}

/// Dirichlet eigenvalues (zeros of `s(1; λ)`) in `[lo, hi]`.
pub fn dirichlet_spectrum(q0: &PotentialSpec, lo: f64, hi: f64) -> Result<Vec<f64>, HillError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(HillError::BadRange(lo, hi));
    }
    let grid = scan_grid(lo, hi);
    let s_at = |l: f64| integrate_monodromy(q0, l).map(|m| m.s);
    let values = grid.iter().map(|&l| s_at(l)).collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for (w, v) in grid.windows(2).zip(values.windows(2)) {
        if v[0] * v[1] < 0.0 {
            out.push(bisect(&s_at, w[0], w[1], ROOT_TOL)?);
        } else if v[1] == 0.0 {
            out.push(w[1]);
        }
    }
    Ok(out)
}

/// The λ-image of one η-band inside one Hill band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaInterval {
    pub hill_band: usize,
    pub eta_min: f64,
    pub eta_max: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BandMap {
    pub intervals: Vec<LambdaInterval>,
    /// Dirichlet eigenvalues lying inside some returned interval.
    pub dirichlet_inside: Vec<f64>,
    pub skipped: usize,
    pub diagnostics: Vec<String>,
}

/// Maps the η-range swept by one band through `η = d(λ)/2` into every Hill band.
pub fn bands_from_root_surface(disc: &HillDiscriminant, root_values: &[f64]) -> Result<BandMap, HillError> {
    let mut map = BandMap::default();
    let admissible: Vec<f64> = root_values
        .iter()
        .copied()
        .filter(|v| v.is_finite() && is_admissible(*v))
        .collect();
    map.skipped = root_values.len() - admissible.len();
    if map.skipped > 0 {
        map.diagnostics
            .push(format!("skipped {} inadmissible root value(s) with |eta| > 1", map.skipped));
    }
    if admissible.is_empty() {
        map.diagnostics.push("no admissible root values".into());
        return Ok(map);
    }
    let eta_min = admissible.iter().copied().fold(f64::INFINITY, f64::min).clamp(-1.0, 1.0);
    let eta_max = admissible.iter().copied().fold(f64::NEG_INFINITY, f64::max).clamp(-1.0, 1.0);
    for (k, band) in disc.band_intervals.iter().enumerate() {
        let a = disc.invert_in_band(band, 2.0 * eta_min)?;
        let b = disc.invert_in_band(band, 2.0 * eta_max)?;
        let (lo, hi) = match (a, b) {
            (Some(x), Some(y)) => (x.min(y), x.max(y)),
            _ => continue,
        };
        map.intervals.push(LambdaInterval {
            hill_band: k,
            eta_min,
            eta_max,
            lo,
            hi,
        });
        map.dirichlet_inside.extend(
            disc.dirichlet_eigs
                .iter()
                .filter(|&&e| e >= lo - DIRICHLET_EXCLUSION && e <= hi + DIRICHLET_EXCLUSION),
        );
    }
    map.dirichlet_inside.sort_by(f64::total_cmp);
    map.dirichlet_inside.dedup();
    Ok(map)
}
