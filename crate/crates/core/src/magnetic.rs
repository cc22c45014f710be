//! Discrete magnetic Laplacian on the hexagonal lattice with rational flux
//! `φ = 2πp/q`, its Floquet matrices, and the Robin-parameter variants for
//! `q ∈ {1, 2}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bands::{golden_min, Tolerances, TouchKind, TouchReport};
use crate::floquet::{self, DispersionRoots, FloquetError, FloquetMatrix, RootSource};
use crate::hill::{self, HillDiscriminant, HillError, MuConvention};
use crate::lattice::{structure_function, Quasimomentum, StackConfig, Variant};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagneticError {
    #[error("flux needs p >= 1 and q >= 1, got p = {p}, q = {q}")]
    InvalidFlux { p: u32, q: u32 },
    #[error("Robin-parameter matrices exist only for p = 1 and q in {{1, 2}}, got p/q = {p}/{q}")]
    NoRobinConstruction { p: u32, q: u32 },
    #[error("reduced-zone grid needs at least {min} points per axis, got {got}")]
    Resolution { got: usize, min: usize },
    #[error("touch report is not a cone")]
    NotACone,
    #[error(transparent)]
    Hill(#[from] HillError),
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Rational flux `φ = 2πp/q` with `(p, q)` reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFlux", into = "RawFlux")]
pub struct FluxSpec {
    p: u32,
    q: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlux {
    p: u32,
    q: u32,
}

impl TryFrom<RawFlux> for FluxSpec {
    type Error = MagneticError;
    fn try_from(raw: RawFlux) -> Result<Self, Self::Error> {
        FluxSpec::new(raw.p, raw.q)
    }
}

impl From<FluxSpec> for RawFlux {
    fn from(f: FluxSpec) -> Self {
        RawFlux { p: f.p, q: f.q }
    }
}

impl FluxSpec {
    pub fn new(p: u32, q: u32) -> Result<Self, MagneticError> {
        if p == 0 || q == 0 {
            return Err(MagneticError::InvalidFlux { p, q });
        }
        let g = gcd(p, q);
        Ok(Self { p: p / g, q: q / g })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn phi(&self) -> f64 {
        2.0 * PI * self.p as f64 / self.q as f64
    }

    /// Right-open reduced zone `[0, π/q) × [−π/q, π/q)`.
    pub fn reduced_zone(&self) -> ((f64, f64), (f64, f64)) {
        let w = PI / self.q as f64;
        ((0.0, w), (-w, w))
    }
}

/// Floquet matrix of the magnetic operator. Without Robin parameters this is
/// the normalized discrete matrix `M_F(θ)` whose eigenvalues are the band
/// values; with Robin parameters it is the affine part `A` of `A − 3ηI`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticFloquet {
    pub theta: Quasimomentum,
    pub flux: FluxSpec,
    pub robin: Option<(f64, f64)>,
    pub matrix: DMatrix<Complex64>,
}

impl MagneticFloquet {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.matrix - self.matrix.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    /// Sorted band values: eigenvalues of `M_F`, or `η` with `det(A − 3ηI) = 0`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let scale = if self.robin.is_some() { 3.0 } else { 1.0 };
        let mut v: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .map(|x| x / scale)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `A − ηD` form with `D = 3I` (Robin variants only).
    pub fn to_floquet(&self) -> Option<FloquetMatrix> {
        self.robin
            .map(|_| FloquetMatrix::new(self.theta, vec![3.0; self.dim()], self.matrix.clone()))
    }
}

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

/// `(1/3)[[0, B], [B*, 0]]` with `B = I + e^{iθ₁}J + e^{iθ₂}K`.
pub fn assemble_discrete(flux: FluxSpec, theta: &Quasimomentum) -> MagneticFloquet {
    let q = flux.q() as usize;
    let phi = flux.phi();
    let b = DMatrix::from_fn(q, q, |j, k| {
        let mut z = Complex64::new(0.0, 0.0);
        if j == k {
            z += 1.0 + cis(theta.theta1() + j as f64 * phi);
        }
        if k == (j + 1) % q {
            z += cis(theta.theta2());
        }
        z
    });
    let mut m = DMatrix::zeros(2 * q, 2 * q);
    m.view_mut((0, q), (q, q)).copy_from(&b.map(|z| z / 3.0));
    m.view_mut((q, 0), (q, q)).copy_from(&b.adjoint().map(|z| z / 3.0));
    MagneticFloquet {
        theta: *theta,
        flux,
        robin: None,
        matrix: m,
    }
}

/// `[[−α_N, F̄], [F, −α_B]]`, the affine part at `φ = 2π`.
pub fn assemble_robin_q1(alpha_n: f64, alpha_b: f64, theta: &Quasimomentum) -> MagneticFloquet {
    let f = structure_function(theta);
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(-alpha_n, 0.0), f.conj(), f, Complex64::new(-alpha_b, 0.0)],
    );
    MagneticFloquet {
        theta: *theta,
        flux: FluxSpec { p: 1, q: 1 },
        robin: Some((alpha_n, alpha_b)),
        matrix: m,
    }
}

/// The 4×4 affine part at `φ = π`.
pub fn assemble_robin_q2(alpha_n: f64, alpha_b: f64, theta: &Quasimomentum) -> MagneticFloquet {
    let (t1, t2) = (theta.theta1(), theta.theta2());
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let an = Complex64::new(-alpha_n, 0.0);
    let ab = Complex64::new(-alpha_b, 0.0);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        an,               one + cis(-t2), zero,           cis(-t1),
        one + cis(t2),    ab,             one,            zero,
        zero,             one,            an,             one - cis(-t2),
        cis(t1),          zero,           one - cis(t2),  ab,
    ]);
    MagneticFloquet {
        theta: *theta,
        flux: FluxSpec { p: 1, q: 2 },
        robin: Some((alpha_n, alpha_b)),
        matrix: m,
    }
}

fn robin_params(config: &StackConfig) -> Result<(f64, f64, FluxSpec), FloquetError> {
    let flux = match (config.variant(), config.flux()) {
        (Variant::MagneticMonolayer, Some(f)) => f,
        (v, _) => return Err(FloquetError::WrongModule(v)),
    };
    let v = config.vertex();
    Ok((v.alpha_a, v.alpha_b, flux))
}

fn robin_matrix(config: &StackConfig, theta: &Quasimomentum) -> Result<MagneticFloquet, FloquetError> {
    let (an, ab, flux) = robin_params(config)?;
    match (flux.p(), flux.q()) {
        (1, 1) => Ok(assemble_robin_q1(an, ab, theta)),
        (1, 2) => Ok(assemble_robin_q2(an, ab, theta)),
        _ => Err(FloquetError::NoClosedForm {
            variant: Variant::MagneticMonolayer,
            reason: "Robin matrices exist only for p = 1, q in {1, 2}",
        }),
    }
}

/// The Robin-parameter Floquet matrix of a magnetic configuration in `A − ηD` form.
pub fn robin_floquet(config: &StackConfig, theta: &Quasimomentum) -> Result<FloquetMatrix, FloquetError> {
    Ok(robin_matrix(config, theta)?
        .to_floquet()
        .expect("Robin matrix"))
}

/// `G(θ) = 3 + cos θ₁ + cos 2θ₂ − cos(θ₁ − 2θ₂)`, which lies in `[0, 9/2]`.
pub fn q2_g(theta: &Quasimomentum) -> f64 {
    let (t1, t2) = (theta.theta1(), theta.theta2());
    3.0 + t1.cos() + (2.0 * t2).cos() - (t1 - 2.0 * t2).cos()
}

/// Closed-form roots for `q = 1` (`r±`) and `q = 2` (`η^s_m`, `s` the outer
/// sign, `m` the sign in front of `4√2·√G`), checked against the determinant.
pub fn robin_closed_form_roots(
    config: &StackConfig,
    theta: &Quasimomentum,
) -> Result<DispersionRoots, FloquetError> {
    let matrix = robin_matrix(config, theta)?;
    let (an, ab) = matrix.robin.expect("Robin matrix");
    let pairs: Vec<(f64, &'static str)> = match matrix.flux.q() {
        1 => {
            let f2 = structure_function(theta).norm_sqr();
            let s = ((ab - an).powi(2) + 4.0 * f2).sqrt();
            vec![((-(an + ab) + s) / 6.0, "r+"), ((-(an + ab) - s) / 6.0, "r-")]
        }
        _ => {
            let g = q2_g(theta).max(0.0);
            let inner = 4.0 * 2f64.sqrt() * g.sqrt();
            let base = (an - ab).powi(2) + 12.0;
            let c = -(an + ab) / 6.0;
            let sm = (base - inner).max(0.0).sqrt() / 6.0;
            let sp = (base + inner).sqrt() / 6.0;
            vec![
                (c + sp, "eta^+_+"),
                (c + sm, "eta^+_-"),
                (c - sm, "eta^-_-"),
                (c - sp, "eta^-_+"),
            ]
        }
    };
    let fm = matrix.to_floquet().expect("Robin matrix");
    let poly = floquet::char_poly(&fm);
    for &(root, _) in &pairs {
        let residual = floquet::det_residual(&fm, &poly, root);
        if residual > floquet::RESIDUAL_TOL {
            return Err(FloquetError::ResidualCheck {
                variant: Variant::MagneticMonolayer,
                root,
                residual,
            });
        }
    }
    Ok(DispersionRoots::from_labelled(pairs, RootSource::ClosedForm))
}

/// The `q = 1` characteristic polynomial as printed, ascending:
/// `9η² + 3(α_N+α_B)η + α_Nα_B − 3 − 2cos θ₁ − 2cos θ₂ − 2cos(θ₁−θ₂)`.
pub fn q1_poly_printed(alpha_n: f64, alpha_b: f64, theta: &Quasimomentum) -> [f64; 3] {
    let (t1, t2) = (theta.theta1(), theta.theta2());
    [
        alpha_n * alpha_b - 3.0 - 2.0 * t1.cos() - 2.0 * t2.cos() - 2.0 * (t1 - t2).cos(),
        3.0 * (alpha_n + alpha_b),
        9.0,
    ]
}

/// The `q = 2` quartic as printed, ascending.
pub fn q2_quartic_printed(alpha_n: f64, alpha_b: f64, theta: &Quasimomentum) -> [f64; 5] {
    let (t1, t2) = (theta.theta1(), theta.theta2());
    let (s, p) = (alpha_n + alpha_b, alpha_n * alpha_b);
    [
        p * p - 6.0 * p + 3.0 + 2.0 * (t1 - 2.0 * t2).cos() - 2.0 * t1.cos() - 2.0 * (2.0 * t2).cos(),
        -6.0 * s * (3.0 - p),
        9.0 * (alpha_n * alpha_n + alpha_b * alpha_b + 4.0 * p - 6.0),
        54.0 * s,
        81.0,
    ]
}

/// Smallest grid per axis for [`magnetic_classify`].
pub const MIN_ZONE_POINTS: usize = 21;

/// Band values of the Robin variant at `θ`, closed form first.
fn robin_bands(q: u32, alpha_n: f64, alpha_b: f64, t1: f64, t2: f64) -> Vec<f64> {
    let theta = Quasimomentum::wrapped(t1, t2);
    let m = if q == 1 {
        assemble_robin_q1(alpha_n, alpha_b, &theta)
    } else {
        assemble_robin_q2(alpha_n, alpha_b, &theta)
    };
    m.eigenvalues()
}

/// Touch classification over the reduced zone for the Robin variants, on an
/// `n × n` right-open grid. Every grid local minimum of each adjacent-band
/// separation is refined by coordinate-wise golden-section search and then
/// classified from one-sided slopes in eight directions.
pub fn magnetic_classify(
    q: u32,
    alpha_n: f64,
    alpha_b: f64,
    n: usize,
    tol: &Tolerances,
) -> Result<Vec<TouchReport>, MagneticError> {
    if q != 1 && q != 2 {
        return Err(MagneticError::NoRobinConstruction { p: 1, q });
    }
    if n < MIN_ZONE_POINTS {
        return Err(MagneticError::Resolution {
            got: n,
            min: MIN_ZONE_POINTS,
        });
    }
    let flux = FluxSpec::new(1, q)?;
    let ((a1, b1), (a2, b2)) = flux.reduced_zone();
    let (h1, h2) = ((b1 - a1) / n as f64, (b2 - a2) / n as f64);
    let coords: Vec<(f64, f64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (a1 + i as f64 * h1, a2 + j as f64 * h2)))
        .collect();
    let values: Vec<Vec<f64>> = coords
        .par_iter()
        .map(|&(x, y)| robin_bands(q, alpha_n, alpha_b, x, y))
        .collect();
    let dim = 2 * q as usize;
    let mut reports: Vec<TouchReport> = Vec::new();
    for k in 0..dim - 1 {
        let sep_grid = |i: usize, j: usize| {
            let v = &values[i * n + j];
            v[k + 1] - v[k]
        };
        let sep_at = |x: f64, y: f64| {
            let v = robin_bands(q, alpha_n, alpha_b, x, y);
            v[k + 1] - v[k]
        };
        for i in 0..n {
            for j in 0..n {
                let s = sep_grid(i, j);
                let mut is_min = true;
                for (di, dj) in NEIGHBOURS {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= n as i64 || jj >= n as i64 {
                        continue;
                    }
                    let t = sep_grid(ii as usize, jj as usize);
                    let earlier = (di, dj) < (0, 0);
                    if t < s || (t == s && !earlier) {
                        is_min = false;
                        break;
                    }
                }
                if !is_min {
                    continue;
                }
                let (x, y) = refine_2d(&sep_at, coords[i * n + j], (h1, h2), flux.reduced_zone(), tol.refine);
                let report = classify_2d(q, alpha_n, alpha_b, k, x, y, tol, &sep_at);
                if !reports.iter().any(|r| {
                    r.band_pair == report.band_pair
                        && r.kind == report.kind
                        && (r.separation - report.separation).abs() < 1e-8
                        && (r.eta - report.eta).abs() < 1e-8
                }) {
                    reports.push(report);
                }
            }
        }
    }
    Ok(reports)
}

const NEIGHBOURS: [(i64, i64); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

type Zone = ((f64, f64), (f64, f64));

/// Coordinate-wise golden-section descent inside `zone`.
fn refine_2d(f: &dyn Fn(f64, f64) -> f64, start: (f64, f64), width: (f64, f64), zone: Zone, tol: f64) -> (f64, f64) {
    let ((a1, b1), (a2, b2)) = zone;
    let (mut x, mut y) = start;
    let mut best = f(x, y);
    for _ in 0..200 {
        let (nx, _) = golden_min(&|t| f(t, y), (x - width.0).max(a1), (x + width.0).min(b1), tol);
        let (ny, fy) = golden_min(&|t| f(nx, t), (y - width.1).max(a2), (y + width.1).min(b2), tol);
        if fy >= best {
            break;
        }
        let moved = (nx - x).abs() + (ny - y).abs();
        x = nx;
        y = ny;
        best = fy;
        if moved < tol {
            break;
        }
    }
    (x, y)
}

#[allow(clippy::too_many_arguments)]
fn classify_2d(
    q: u32,
    alpha_n: f64,
    alpha_b: f64,
    k: usize,
    x: f64,
    y: f64,
    tol: &Tolerances,
    sep_at: &dyn Fn(f64, f64) -> f64,
) -> TouchReport {
    let theta = Quasimomentum::wrapped(x, y);
    let v = robin_bands(q, alpha_n, alpha_b, x, y);
    let s = v[k + 1] - v[k];
    let mut report = TouchReport {
        location: theta,
        f_value: structure_function(&theta),
        band_pair: (k, k + 1),
        kind: TouchKind::Gap,
        eta: 0.5 * (v[k] + v[k + 1]),
        separation: s,
        gamma: None,
        gap_width: None,
        curvature: None,
        branches: None,
    };
    if s > tol.touch {
        report.gap_width = Some(s);
        return report;
    }
    let h = tol.fd_step;
    let slopes: Vec<f64> = (0..8)
        .map(|m| {
            let a = m as f64 * PI / 4.0;
            (sep_at(x + h * a.cos(), y + h * a.sin()) - s) / h
        })
        .collect();
    let (lo, hi) = slopes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if lo > tol.slope {
        report.kind = TouchKind::Cone;
        report.gamma = Some(0.5 * slopes.iter().sum::<f64>() / 8.0);
    } else if hi.abs() <= tol.slope {
        let hc = tol.curvature_step;
        report.kind = TouchKind::Parabolic;
        report.curvature = Some((sep_at(x + hc, y) - 2.0 * s + sep_at(x - hc, y)) / (hc * hc));
    } else {
        report.kind = TouchKind::Crossing;
    }
    report
}

/// Global gap `min band[k+1] − max band[k]` over an `n × n` reduced-zone grid,
/// with both extrema refined.
pub fn reduced_zone_gap(q: u32, alpha_n: f64, alpha_b: f64, k: usize, n: usize) -> Result<f64, MagneticError> {
    let flux = FluxSpec::new(1, q)?;
    if q > 2 {
        return Err(MagneticError::NoRobinConstruction { p: 1, q });
    }
    let ((a1, b1), (a2, b2)) = flux.reduced_zone();
    let (h1, h2) = ((b1 - a1) / n as f64, (b2 - a2) / n as f64);
    let coords: Vec<(f64, f64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (a1 + i as f64 * h1, a2 + j as f64 * h2)))
        .collect();
    let values: Vec<Vec<f64>> = coords
        .par_iter()
        .map(|&(x, y)| robin_bands(q, alpha_n, alpha_b, x, y))
        .collect();
    let argbest = |sign: f64, band: usize| {
        (0..coords.len())
            .max_by(|&a, &b| (sign * values[a][band]).total_cmp(&(sign * values[b][band])))
            .expect("nonempty grid")
    };
    let lower = |x: f64, y: f64| -robin_bands(q, alpha_n, alpha_b, x, y)[k];
    let upper = |x: f64, y: f64| robin_bands(q, alpha_n, alpha_b, x, y)[k + 1];
    let (lx, ly) = refine_2d(&lower, coords[argbest(1.0, k)], (h1, h2), flux.reduced_zone(), 1e-10);
    let (ux, uy) = refine_2d(&upper, coords[argbest(-1.0, k + 1)], (h1, h2), flux.reduced_zone(), 1e-10);
    Ok(upper(ux, uy) + lower(lx, ly))
}

/// Outcome of pulling a discrete cone back through `μ_α⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackVerdict {
    /// `z₀` with `μ_α(z₀)` equal to the cone value.
    pub z0: f64,
    pub mu_prime: f64,
    /// Slope of the upper band in η along the direction `(1, −1)`.
    pub gamma_eta: f64,
    /// `γ_η / μ_α′(z₀)`.
    pub gamma_lambda_predicted: f64,
    /// Finite-difference slope of `μ_α⁻¹(band(θ))`.
    pub gamma_lambda_measured: f64,
    pub conical: bool,
}

/// Step along `(1, −1)` used by [`mu_pullback_check`].
pub const PULLBACK_STEP: f64 = 1e-5;

/// Composes the upper band of a constant-α discrete cone with `μ_α⁻¹` on the
/// first monotone piece of `μ_α` inside the discriminant's range and checks
/// that the slope stays nonzero.
pub fn mu_pullback_check(
    disc: &HillDiscriminant,
    alpha: f64,
    convention: MuConvention,
    config: &StackConfig,
    cone: &TouchReport,
) -> Result<PullbackVerdict, MagneticError> {
    if cone.kind != TouchKind::Cone {
        return Err(MagneticError::NotACone);
    }
    let q0 = &disc.potential;
    let mu = |z: f64| hill::mu_alpha_with(q0, alpha, z, convention);
    let target = cone.eta;
    let (lo, hi) = disc.range;
    let n = 4000;
    let mut prev = (lo, mu(lo)? - target);
    let mut bracket = None;
    for i in 1..=n {
        let z = lo + (hi - lo) * i as f64 / n as f64;
        let v = mu(z)? - target;
        if prev.1 == 0.0 || prev.1 * v < 0.0 {
            bracket = Some((prev.0, z));
            break;
        }
        prev = (z, v);
    }
    let (za, zb) = bracket.ok_or(MagneticError::Hill(HillError::NoPreimage(target)))?;
    let solve = |t: f64, a: f64, b: f64| hill::bisect(&|z| mu(z).map(|m| m - t), a, b, 1e-14);
    let z0 = solve(target, za, zb)?;
    let mu_prime = hill::mu_alpha_derivative(q0, alpha, z0, convention)?;
    if mu_prime.abs() < 1e-8 {
        return Err(HillError::BandEdge {
            z: z0,
            derivative: mu_prime,
        }
        .into());
    }
    let upper = |t: f64| -> f64 {
        let th = Quasimomentum::wrapped(cone.location.theta1() + t, cone.location.theta2() - t);
        crate::bands::evaluate(config, &th)
            .expect("validated config")
            .primary()
            .values[cone.band_pair.1]
    };
    let h = PULLBACK_STEP;
    let u0 = upper(0.0);
    let u1 = upper(h);
    let gamma_eta = (u1 - u0) / h;
    let width = (zb - za).max(1e-3);
    let z_of = |u: f64| solve(u, z0 - width, z0 + width);
    let gamma_lambda_measured = (z_of(u1)? - z_of(u0)?) / h;
    let gamma_lambda_predicted = gamma_eta / mu_prime;
    Ok(PullbackVerdict {
        z0,
        mu_prime,
        gamma_eta,
        gamma_lambda_predicted,
        gamma_lambda_measured,
        conical: gamma_lambda_measured.abs() > 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flux_is_reduced() {
        let f = FluxSpec::new(2, 4).unwrap();
        assert_eq!((f.p(), f.q()), (1, 2));
        assert!(FluxSpec::new(0, 1).is_err());
        assert!(FluxSpec::new(1, 0).is_err());
    }

    #[test]
    fn trivial_flux_at_origin() {
        let m = assemble_discrete(FluxSpec::new(1, 1).unwrap(), &Quasimomentum::new(0.0, 0.0).unwrap());
        assert_abs_diff_eq!(m.matrix[(0, 1)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.matrix[(1, 0)].re, 1.0, epsilon = 1e-15);
        let e = m.eigenvalues();
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn half_flux_general_formula_block() {
        let th = Quasimomentum::new(0.4, -1.1).unwrap();
        let m = assemble_discrete(FluxSpec::new(1, 2).unwrap(), &th);
        let b = |j: usize, k: usize| m.matrix[(j, 2 + k)] * 3.0;
        assert!((b(0, 0) - (1.0 + cis(0.4))).norm() < 1e-14);
        assert!((b(0, 1) - cis(-1.1)).norm() < 1e-14);
        assert!((b(1, 0) - cis(-1.1)).norm() < 1e-14);
        assert!((b(1, 1) - (1.0 - cis(0.4))).norm() < 1e-14);
        assert!(m.is_hermitian(1e-14));
    }

    #[test]
    fn q1_example_double_root() {
        let th = Quasimomentum::new(2.0 * PI / 3.0, -2.0 * PI / 3.0).unwrap();
        let cfg = StackConfig::magnetic(-1.0, -1.0, 1, 1).unwrap();
        let r = robin_closed_form_roots(&cfg, &th).unwrap();
        assert_abs_diff_eq!(r.values[0], 1.0 / 3.0, epsilon = 1e-7);
        assert_abs_diff_eq!(r.values[1], 1.0 / 3.0, epsilon = 1e-7);
        let cfg = StackConfig::magnetic(0.0, 0.0, 1, 1).unwrap();
        let r = robin_closed_form_roots(&cfg, &Quasimomentum::new(0.0, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(r.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn q2_g_zero_set_and_maximum() {
        assert_abs_diff_eq!(q2_g(&Quasimomentum::new(PI, -PI / 2.0).unwrap()), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q2_g(&Quasimomentum::new(PI / 3.0, -PI / 6.0).unwrap()), 4.5, epsilon = 1e-14);
    }

    #[test]
    fn q2_roots_match_eigenvalues() {
        for (an, ab) in [(-1.0, -1.0), (-1.0, 1.0), (0.3, -2.0)] {
            let cfg = StackConfig::magnetic(an, ab, 1, 2).unwrap();
            let th = Quasimomentum::new(0.7, -0.2).unwrap();
            let r = robin_closed_form_roots(&cfg, &th).unwrap();
            let e = assemble_robin_q2(an, ab, &th).eigenvalues();
            for (x, y) in r.values.iter().zip(&e) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn classify_rejects_large_q() {
        assert!(magnetic_classify(3, 0.0, 0.0, 41, &Tolerances::default()).is_err());
    }
}
