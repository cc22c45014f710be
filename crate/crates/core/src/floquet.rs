//! Floquet matrices `M(η, θ) = A(θ) − η·D` for the non-magnetic stackings,
//! their characteristic polynomials, and dispersion roots from closed forms
//! and from the Hermitian eigenvalue oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::{structure_function, Quasimomentum, StackConfig, Variant};
use crate::poly;

/// `|η| ≤ 1 + ADMISSIBLE_SLACK` counts as admissible.
pub const ADMISSIBLE_SLACK: f64 = 1e-12;
/// Normalized char-poly residual every closed-form root must satisfy.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Roots closer than this are treated as one root with multiplicity.
pub const DEGENERACY_TOL: f64 = 1e-8;

const ANTISYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloquetError {
    #[error("{0} is assembled by the magnetic module")]
    WrongModule(Variant),
    #[error("no closed form for {variant}: {reason}")]
    NoClosedForm { variant: Variant, reason: &'static str },
    #[error("closed-form root {root} of {variant} leaves char-poly residual {residual:e}")]
    ResidualCheck { variant: Variant, root: f64, residual: f64 },
}

/// Where a set of dispersion roots came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RootSource {
    ClosedForm,
    Numeric,
}

impl RootSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            RootSource::ClosedForm => "closed_form",
            RootSource::Numeric => "numeric",
        }
    }
}

/// `M(η, θ) = A(θ) − η·diag(T₁, …, T_dim)` with Hermitian `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetMatrix {
    pub theta: Quasimomentum,
    pub diag_scale: Vec<f64>,
    pub affine_part: DMatrix<Complex64>,
}

impl FloquetMatrix {
    pub fn new(theta: Quasimomentum, diag_scale: Vec<f64>, affine_part: DMatrix<Complex64>) -> Self {
        assert_eq!(diag_scale.len(), affine_part.nrows());
        assert!(affine_part.is_square());
        Self {
            theta,
            diag_scale,
            affine_part,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag_scale.len()
    }

    /// The full matrix at a given `η`.
    pub fn at(&self, eta: f64) -> DMatrix<Complex64> {
        let mut m = self.affine_part.clone();
        for (i, t) in self.diag_scale.iter().enumerate() {
            m[(i, i)] -= t * eta;
        }
        m
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let a = &self.affine_part;
        let n = a.nrows();
        (0..n).all(|i| (0..n).all(|j| (a[(i, j)] - a[(j, i)].conj()).norm() <= tol))
    }

    /// `D^{-1/2} A D^{-1/2}`, whose eigenvalues are the roots of `det M`.
    pub fn reduced(&self) -> DMatrix<Complex64> {
        let s: Vec<f64> = self.diag_scale.iter().map(|t| 1.0 / t.sqrt()).collect();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.affine_part[(i, j)] * (s[i] * s[j]))
    }
}

/// `det M(η, θ)` as a real polynomial in `η`, ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPoly {
    pub coeffs: Vec<f64>,
    pub theta: Quasimomentum,
}

impl CharPoly {
    pub fn eval(&self, eta: f64) -> f64 {
        poly::eval(&self.coeffs, eta)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    /// `|p(η)| / Σ|cₖ||η|ᵏ`, a scale-free residual.
    pub fn normalized_residual(&self, eta: f64) -> f64 {
        let scale = poly::eval(&self.coeffs.iter().map(|c| c.abs()).collect::<Vec<_>>(), eta.abs());
        if scale == 0.0 {
            0.0
        } else {
            self.eval(eta).abs() / scale
        }
    }
}

/// Sorted dispersion roots at one quasimomentum.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionRoots {
    pub values: Vec<f64>,
    pub branch_labels: Vec<&'static str>,
    pub admissible: Vec<bool>,
    pub source: RootSource,
}

impl DispersionRoots {
    pub(crate) fn from_labelled(mut pairs: Vec<(f64, &'static str)>, source: RootSource) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let branch_labels = if pairs.iter().all(|p| p.1.is_empty()) {
            Vec::new()
        } else {
            pairs.iter().map(|p| p.1).collect()
        };
        let admissible = values.iter().map(|v| is_admissible(*v)).collect();
        Self {
            values,
            branch_labels,
            admissible,
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of the branch with the given label, if labelled.
    pub fn branch(&self, label: &str) -> Option<f64> {
        self.branch_labels
            .iter()
            .position(|l| *l == label)
            .map(|i| self.values[i])
    }

    /// Copies the closed-form labels onto numeric roots by sorted position,
    /// which is nearest-value pairing for two sorted lists of equal length.
    pub fn with_labels_from(mut self, closed: &DispersionRoots) -> Self {
        if closed.branch_labels.len() == self.values.len() {
            self.branch_labels = closed.branch_labels.clone();
        }
        self
    }
}

/// `|det(A − ηD)|`, evaluated by LU factorization, over `Σ|cₖ||η|ᵏ`.
/// Evaluating the determinant directly avoids the cancellation in the
/// expanded coefficients when several roots cluster near zero.
pub fn det_residual(matrix: &FloquetMatrix, poly: &CharPoly, eta: f64) -> f64 {
    let scale = poly::eval(&poly.coeffs.iter().map(|c| c.abs()).collect::<Vec<_>>(), eta.abs().max(1.0));
    let det = matrix.at(eta).lu().determinant().norm();
    if scale == 0.0 {
        det
    } else {
        det / scale
    }
}

pub fn is_admissible(eta: f64) -> bool {
    eta.abs() <= 1.0 + ADMISSIBLE_SLACK
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Builds the Floquet matrix of a non-magnetic stacking at `θ`.
pub fn assemble(config: &StackConfig, theta: &Quasimomentum) -> Result<FloquetMatrix, FloquetError> {
    let f = structure_function(theta);
    let fb = f.conj();
    let v = config.vertex();
    let t2 = config.t0().powi(2);
    let zero = c(0.0);
    let (diag_scale, a): (Vec<f64>, Vec<Vec<Complex64>>) = match config.variant() {
        Variant::MagneticMonolayer => return Err(FloquetError::WrongModule(config.variant())),
        Variant::Monolayer => (
            vec![3.0, 3.0],
            vec![vec![c(-v.alpha_a), fb], vec![f, c(-v.alpha_b)]],
        ),
        Variant::BilayerAA => {
            let t = 3.0 + t2;
            (
                vec![t; 4],
                vec![
                    vec![c(-v.alpha_a), fb, c(t2), zero],
                    vec![f, c(-v.alpha_b), zero, c(t2)],
                    vec![c(t2), zero, c(-v.alpha_a), fb],
                    vec![zero, c(t2), f, c(-v.alpha_b)],
                ],
            )
        }
        Variant::BilayerAaTwoParam => {
            let cp = config.coupling().expect("validated coupling");
            let ta2 = cp.t_a.expect("validated t_a").powi(2);
            let tb2 = cp.t_b.expect("validated t_b").powi(2);
            let (ta, tb) = (3.0 + ta2, 3.0 + tb2);
            (
                vec![ta, tb, ta, tb],
                vec![
                    vec![c(-v.alpha_a), fb, c(ta2), zero],
                    vec![f, c(-v.alpha_b), zero, c(tb2)],
                    vec![c(ta2), zero, c(-v.alpha_a), fb],
                    vec![zero, c(tb2), f, c(-v.alpha_b)],
                ],
            )
        }
        Variant::BilayerAAPrime => {
            let t = 3.0 + t2;
            (
                vec![t; 4],
                vec![
                    vec![c(-v.alpha_a), fb, zero, c(t2)],
                    vec![f, c(-v.alpha_b), c(t2), zero],
                    vec![zero, c(t2), c(-v.alpha_a), fb],
                    vec![c(t2), zero, f, c(-v.alpha_b)],
                ],
            )
        }
        Variant::HeteroBilayer => {
            let t = 3.0 + t2;
            (
                vec![t; 4],
                vec![
                    vec![c(-v.alpha_a), fb, zero, c(t2)],
                    vec![f, c(-v.alpha_b), c(t2), zero],
                    vec![zero, c(t2), c(-v.alpha_c), fb],
                    vec![c(t2), zero, f, c(-v.alpha_c)],
                ],
            )
        }
        Variant::TrilayerHbnGHbn | Variant::TrilayerGHbnG => {
            let (t1, tt2) = (3.0 + t2, 3.0 + 2.0 * t2);
            let (n, b, cc) = (v.alpha_a, v.alpha_b, v.alpha_c);
            let alphas = if config.variant() == Variant::TrilayerHbnGHbn {
                [n, b, cc, cc, n, b]
            } else {
                [cc, cc, n, b, cc, cc]
            };
            let mut rows = vec![vec![zero; 6]; 6];
            for (i, al) in alphas.iter().enumerate() {
                rows[i][i] = c(-al);
            }
            for (i, j) in [(0, 1), (2, 3), (4, 5)] {
                rows[i][j] = fb;
                rows[j][i] = f;
            }
            for (i, j) in [(0, 3), (1, 2), (2, 5), (3, 4)] {
                rows[i][j] = c(t2);
                rows[j][i] = c(t2);
            }
            (vec![t1, t1, tt2, tt2, t1, t1], rows)
        }
    };
    let n = diag_scale.len();
    let affine = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    Ok(FloquetMatrix::new(*theta, diag_scale, affine))
}

/// Coefficients of `det(A − ηD)`, computed as `det(−D)·det(ηI − D⁻¹A)`.
pub fn char_poly(matrix: &FloquetMatrix) -> CharPoly {
    let n = matrix.dim();
    let dinv_a = DMatrix::from_fn(n, n, |i, j| matrix.affine_part[(i, j)] / matrix.diag_scale[i]);
    let monic = poly::charpoly_complex(&dinv_a);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let lead = sign * matrix.diag_scale.iter().product::<f64>();
    CharPoly {
        coeffs: monic.iter().map(|z| z.re * lead).collect(),
        theta: matrix.theta,
    }
}

/// Roots from the Hermitian eigenproblem of `D^{-1/2} A D^{-1/2}`.
pub fn numeric_roots(matrix: &FloquetMatrix) -> DispersionRoots {
    let eig = matrix.reduced().symmetric_eigenvalues();
    let pairs = eig.iter().map(|&x| (x, "")).collect();
    DispersionRoots::from_labelled(pairs, RootSource::Numeric)
}

fn antisymmetric_alphas(config: &StackConfig) -> bool {
    let v = config.vertex();
    (v.alpha_a + v.alpha_b).abs() <= ANTISYMMETRY_TOL && v.alpha_c.abs() <= ANTISYMMETRY_TOL
}

/// Roots of `x² + (B/A)x + C/A` with `B ≤ 0 ≤ C`, larger first, without
/// cancellation in the smaller one.
fn biquadratic_squares(a: f64, b: f64, c: f64, disc: f64) -> (f64, f64) {
    let s = -b + disc.max(0.0).sqrt();
    let big = s / (2.0 * a);
    let small = if s > 0.0 { 2.0 * c / s } else { 0.0 };
    (big.max(0.0), small.max(0.0))
}

/// Closed-form dispersion roots, checked against the characteristic
/// polynomial.
pub fn closed_form_roots(
    config: &StackConfig,
    theta: &Quasimomentum,
) -> Result<DispersionRoots, FloquetError> {
    let variant = config.variant();
    let f = structure_function(theta);
    let f2 = f.norm_sqr();
    let v = config.vertex();
    let (aa, ab) = (v.alpha_a, v.alpha_b);
    let t2 = config.t0().powi(2);
    let t4 = t2 * t2;
    let pairs: Vec<(f64, &'static str)> = match variant {
        Variant::MagneticMonolayer => return Err(FloquetError::WrongModule(variant)),
        Variant::Monolayer => {
            let s = ((ab - aa).powi(2) + 4.0 * f2).sqrt();
            vec![((-(aa + ab) + s) / 6.0, "r+"), ((-(aa + ab) - s) / 6.0, "r-")]
        }
        Variant::BilayerAA => {
            let t = 3.0 + t2;
            let s = ((aa - ab).powi(2) + 4.0 * f2).sqrt();
            let r = |e1: f64, e2: f64| -(aa + ab + e1 * 2.0 * t2 + e2 * s) / (2.0 * t);
            vec![
                (r(1.0, 1.0), "r^+_+"),
                (r(1.0, -1.0), "r^+_-"),
                (r(-1.0, 1.0), "r^-_+"),
                (r(-1.0, -1.0), "r^-_-"),
            ]
        }
        Variant::BilayerAaTwoParam => {
            let cp = config.coupling().expect("validated coupling");
            let ta2 = cp.t_a.expect("validated t_a").powi(2);
            let tb2 = cp.t_b.expect("validated t_b").powi(2);
            let (ta, tb) = (3.0 + ta2, 3.0 + tb2);
            // (Ta·η + a)(Tb·η + b) = |F|² for shifted parameters a, b.
            let roots = |a: f64, b: f64| {
                let lin = a * tb + b * ta;
                let s = ((a * tb - b * ta).powi(2) + 4.0 * ta * tb * f2).sqrt();
                ((-lin + s) / (2.0 * ta * tb), (-lin - s) / (2.0 * ta * tb))
            };
            let (u1, u2) = roots(aa - ta2, ab - tb2);
            let (l1, l2) = roots(aa + ta2, ab + tb2);
            vec![(u1, "r^+"), (u2, "r^-"), (l1, "r_+"), (l2, "r_-")]
        }
        Variant::BilayerAAPrime => {
            let t = 3.0 + t2;
            let minus = (f - t2).norm_sqr();
            let plus = (f + t2).norm_sqr();
            let r = |sign: f64, m: f64| (-(aa + ab) + sign * (4.0 * m + (aa - ab).powi(2)).sqrt()) / (2.0 * t);
            vec![
                (r(1.0, minus), "r^+_-"),
                (r(-1.0, minus), "r^-_-"),
                (r(1.0, plus), "r^+_+"),
                (r(-1.0, plus), "r^-_+"),
            ]
        }
        Variant::HeteroBilayer => {
            if !antisymmetric_alphas(config) {
                return Err(FloquetError::NoClosedForm {
                    variant,
                    reason: "requires alpha_b = -alpha_a and alpha_c = 0",
                });
            }
            let t = 3.0 + t2;
            let a2 = aa * aa;
            let b = a2 + 2.0 * t4 + 2.0 * f2;
            let cc = a2 * f2 + (f * f - t4).norm_sqr();
            let disc = a2 * a2 + 4.0 * a2 * t4 + 16.0 * t4 * f.re * f.re;
            let (big, small) = biquadratic_squares(1.0, -b, cc, disc);
            let (rb, rs) = (big.sqrt() / t, small.sqrt() / t);
            vec![(rb, "r^+"), (-rb, "r^-"), (rs, "r_+"), (-rs, "r_-")]
        }
        Variant::TrilayerHbnGHbn | Variant::TrilayerGHbnG => {
            if !antisymmetric_alphas(config) {
                return Err(FloquetError::NoClosedForm {
                    variant,
                    reason: "requires alpha_B = -alpha_N and alpha_C = 0",
                });
            }
            let mut out: Vec<(f64, &'static str)> = trilayer_p2_roots(config, theta)
                .into_iter()
                .zip(["r_+", "r_-"])
                .collect();
            let (a, b, cc) = trilayer_pn_coefficients(config, theta);
            let disc = b * b - 4.0 * a * cc;
            let (big, small) = biquadratic_squares(a, b, cc, disc);
            let (rb, rs) = (big.sqrt(), small.sqrt());
            out.extend([(rb, "r^+_+"), (-rb, "r^-_+"), (rs, "r^+_-"), (-rs, "r^-_-")]);
            out
        }
    };
    let roots = DispersionRoots::from_labelled(pairs, RootSource::ClosedForm);
    let matrix = assemble(config, theta)?;
    let cp = char_poly(&matrix);
    for &r in &roots.values {
        let residual = det_residual(&matrix, &cp, r);
        if !(residual < RESIDUAL_TOL) {
            return Err(FloquetError::ResidualCheck { variant, root: r, residual });
        }
    }
    Ok(roots)
}

/// The two factors of the AA quartic, `[T²η² + (αa+αb ∓ 2t²)Tη − |F|² + t⁴ ∓ (αa+αb)t² + αaαb]`,
/// ascending coefficients.
pub fn aa_factors(config: &StackConfig, theta: &Quasimomentum) -> Option<[Vec<f64>; 2]> {
    if config.variant() != Variant::BilayerAA {
        return None;
    }
    let v = config.vertex();
    let s = v.alpha_a + v.alpha_b;
    let p = v.alpha_a * v.alpha_b;
    let t2 = config.t0().powi(2);
    let t = 3.0 + t2;
    let f2 = structure_function(theta).norm_sqr();
    let factor = |e: f64| vec![-f2 + t2 * t2 + e * s * t2 + p, (s + e * 2.0 * t2) * t, t * t];
    Some([factor(-1.0), factor(1.0)])
}

/// Factors of the two-parameter AA quartic with shifts `∓t_a²`, `∓t_b²`.
pub fn aa_two_param_factors(config: &StackConfig, theta: &Quasimomentum) -> Option<[Vec<f64>; 2]> {
    if config.variant() != Variant::BilayerAaTwoParam {
        return None;
    }
    let cp = config.coupling()?;
    let (ta2, tb2) = (cp.t_a?.powi(2), cp.t_b?.powi(2));
    let (ta, tb) = (3.0 + ta2, 3.0 + tb2);
    let v = config.vertex();
    let f2 = structure_function(theta).norm_sqr();
    let factor = |e: f64| {
        let (a, b) = (v.alpha_a + e * ta2, v.alpha_b + e * tb2);
        vec![a * b - f2, a * tb + b * ta, ta * tb]
    };
    Some([factor(-1.0), factor(1.0)])
}

/// Factors of the AA′ quartic in `Re(F)` form.
pub fn aa_prime_factors(config: &StackConfig, theta: &Quasimomentum) -> Option<[Vec<f64>; 2]> {
    if config.variant() != Variant::BilayerAAPrime {
        return None;
    }
    let v = config.vertex();
    let t2 = config.t0().powi(2);
    let t = 3.0 + t2;
    let f = structure_function(theta);
    let factor = |e: f64| {
        vec![
            v.alpha_a * v.alpha_b - f.norm_sqr() + e * 2.0 * t2 * f.re - t2 * t2,
            (v.alpha_a + v.alpha_b) * t,
            t * t,
        ]
    };
    Some([factor(-1.0), factor(1.0)])
}

/// The quadratic factor `P₂` of a trilayer determinant, normalized so that
/// its roots are the printed `r_±`: `T₁²η² + (α_N+α_B)T₁η + α_Nα_B − |F|²`
/// for hBN-G-hBN and `(T₁η + α_C)² − |F|²` for G-hBN-G. Valid for any `α`.
pub fn trilayer_p2(config: &StackConfig, theta: &Quasimomentum) -> Option<Vec<f64>> {
    let v = config.vertex();
    let t1 = 3.0 + config.t0().powi(2);
    let f2 = structure_function(theta).norm_sqr();
    match config.variant() {
        Variant::TrilayerHbnGHbn => Some(vec![
            v.alpha_a * v.alpha_b - f2,
            (v.alpha_a + v.alpha_b) * t1,
            t1 * t1,
        ]),
        Variant::TrilayerGHbnG => Some(vec![v.alpha_c * v.alpha_c - f2, 2.0 * v.alpha_c * t1, t1 * t1]),
        _ => None,
    }
}

/// `P₂` with its leading coefficient as typeset, `(3+t₀²)` rather than
/// `(3+t₀²)²`. Kept for comparison; it does not divide the determinant.
pub fn trilayer_p2_as_printed(config: &StackConfig, theta: &Quasimomentum) -> Option<Vec<f64>> {
    let mut p = trilayer_p2(config, theta)?;
    p[2] = 3.0 + config.t0().powi(2);
    if config.variant() == Variant::TrilayerGHbnG {
        p[1] = 0.0;
    }
    Some(p)
}

fn trilayer_p2_roots(config: &StackConfig, theta: &Quasimomentum) -> [f64; 2] {
    let v = config.vertex();
    let t1 = 3.0 + config.t0().powi(2);
    let f = structure_function(theta).norm();
    match config.variant() {
        Variant::TrilayerHbnGHbn => {
            let s = ((v.alpha_b - v.alpha_a).powi(2) + 4.0 * f * f).sqrt();
            let lin = -(v.alpha_a + v.alpha_b);
            [(lin + s) / (2.0 * t1), (lin - s) / (2.0 * t1)]
        }
        _ => [(f - v.alpha_c) / t1, (-f - v.alpha_c) / t1],
    }
}

/// `(A, B, C)` of the biquadratic quotient `P_N = Aη⁴ + Bη² + C` for
/// `α_B = −α_N`, `α_C = 0`, valid at any `θ`.
pub fn trilayer_pn_coefficients(config: &StackConfig, theta: &Quasimomentum) -> (f64, f64, f64) {
    let an = config.vertex().alpha_a;
    let t2 = config.t0().powi(2);
    let t4 = t2 * t2;
    let (t1, tt2) = (3.0 + t2, 3.0 + 2.0 * t2);
    let f = structure_function(theta);
    let f2 = f.norm_sqr();
    let alpha_weight = if config.variant() == Variant::TrilayerHbnGHbn {
        tt2 * tt2
    } else {
        t1 * t1
    };
    let a = (t1 * tt2).powi(2);
    let b = -(alpha_weight * an * an
        + 8.0 * t4 * t4
        + 36.0 * t4 * t2
        + 36.0 * t4
        + (5.0 * t4 + 18.0 * t2 + 18.0) * f2);
    let c = (f * f - 2.0 * t4).norm_sqr() + an * an * f2;
    (a, b, c)
}

/// `(A, B, C)` exactly as typeset for real `F`, with `α_N` entering `B` and
/// `C` as printed. Used only for regression comparison.
pub fn trilayer_pn_as_printed(variant: Variant, alpha_n: f64, t0: f64, f: f64) -> Option<(f64, f64, f64)> {
    let t2 = t0 * t0;
    let t4 = t2 * t2;
    let a = ((3.0 + t2) * (3.0 + 2.0 * t2)).powi(2);
    let common = (5.0 * t4 + 18.0 * t2 + 18.0) * f * f + 8.0 * t4 * t4 + 36.0 * t4 * t2;
    let an2 = alpha_n * alpha_n;
    let quad = (f * f - 2.0 * t4).powi(2) + an2 * f * f;
    match variant {
        Variant::TrilayerHbnGHbn => Some((
            a,
            -(common + (4.0 * alpha_n + 36.0) * t4 + 12.0 * an2 * t2 + 9.0 * an2),
            -quad,
        )),
        Variant::TrilayerGHbnG => Some((
            a,
            -(common + (alpha_n + 36.0) * t4 + 6.0 * an2 * t2 + 9.0 * an2),
            quad,
        )),
        _ => None,
    }
}
