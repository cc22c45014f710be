//! Hexagonal lattice configuration space.
//!
//! Brillouin-zone points, vertex and interlayer coupling parameters, the
//! stacking variants, and the structure function `F(θ) = 1 + e^{iθ₁} + e^{iθ₂}`
//! that every dispersion relation is written in.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::magnetic::FluxSpec;

/// Slack allowed when checking that a quasimomentum lies in `[-π, π]`.
const ZONE_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("quasimomentum component {name} = {value} is not a finite value in [-pi, pi]")]
    OutOfZone { name: &'static str, value: f64 },
    #[error("grid needs at least {min} points, got {got}")]
    InvalidGrid { min: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parameter {name} = {value} must be finite")]
    NonFinite { name: &'static str, value: f64 },
    #[error("coupling {name} = {value} must lie in (0, 1]")]
    CouplingOutOfRange { name: &'static str, value: f64 },
    #[error("variant {variant} requires {what}")]
    Missing { variant: &'static str, what: &'static str },
    #[error("variant {variant} does not accept {what}")]
    Forbidden { variant: &'static str, what: &'static str },
    #[error("flux q = {q} is not supported for stacked configurations; only q in {{1, 2}}")]
    UnsupportedFlux { q: u32 },
    #[error("invalid flux: {0}")]
    Flux(String),
}

/// A point `θ = (θ₁, θ₂)` of the closed Brillouin zone `[-π, π]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quasimomentum {
    theta1: f64,
    theta2: f64,
}

impl Quasimomentum {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self, LatticeError> {
        for (name, value) in [("theta1", theta1), ("theta2", theta2)] {
            if !value.is_finite() || value.abs() > PI + ZONE_SLACK {
                return Err(LatticeError::OutOfZone { name, value });
            }
        }
        Ok(Self {
            theta1: theta1.clamp(-PI, PI),
            theta2: theta2.clamp(-PI, PI),
        })
    }

    /// Wraps arbitrary finite angles into `[-π, π]`.
    pub fn wrapped(theta1: f64, theta2: f64) -> Self {
        Self {
            theta1: wrap_angle(theta1),
            theta2: wrap_angle(theta2),
        }
    }

    /// The point `(θ₁, -θ₁)` of the anti-diagonal slice.
    pub fn diagonal(theta1: f64) -> Result<Self, LatticeError> {
        Self::new(theta1, -theta1)
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn neg(&self) -> Self {
        Self {
            theta1: -self.theta1,
            theta2: -self.theta2,
        }
    }
}

/// Maps an angle into `[-π, π]`, keeping `π` itself fixed.
pub fn wrap_angle(x: f64) -> f64 {
    if (-PI..=PI).contains(&x) {
        return x;
    }
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI && x > 0.0 {
        PI
    } else {
        y
    }
}

/// Robin parameters at the A, B and carbon-layer vertices, already divided by
/// `φ′₁(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VertexParams {
    pub alpha_a: f64,
    pub alpha_b: f64,
    #[serde(default)]
    pub alpha_c: f64,
}

impl VertexParams {
    pub fn new(alpha_a: f64, alpha_b: f64) -> Self {
        Self {
            alpha_a,
            alpha_b,
            alpha_c: 0.0,
        }
    }

    pub fn with_alpha_c(mut self, alpha_c: f64) -> Self {
        self.alpha_c = alpha_c;
        self
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("alpha_a", self.alpha_a),
            ("alpha_b", self.alpha_b),
            ("alpha_c", self.alpha_c),
        ] {
            if !value.is_finite() {
                return Err(ConfigError::NonFinite { name, value });
            }
        }
        Ok(())
    }
}

/// Weak interlayer coupling. `t_a`/`t_b` are only used by the two-parameter
/// AA model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingParams {
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_b: Option<f64>,
}

impl CouplingParams {
    pub fn new(t0: f64) -> Self {
        Self {
            t0,
            t_a: None,
            t_b: None,
        }
    }

    pub fn two_param(t_a: f64, t_b: f64) -> Self {
        Self {
            t0: t_a,
            t_a: Some(t_a),
            t_b: Some(t_b),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        check_coupling("t0", self.t0)?;
        if let Some(t) = self.t_a {
            check_coupling("t_a", t)?;
        }
        if let Some(t) = self.t_b {
            check_coupling("t_b", t)?;
        }
        Ok(())
    }
}

fn check_coupling(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if !value.is_finite() {
        return Err(ConfigError::NonFinite { name, value });
    }
    if !(value > 0.0 && value <= 1.0) {
        return Err(ConfigError::CouplingOutOfRange { name, value });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Monolayer,
    BilayerAA,
    #[serde(rename = "BilayerAA_TwoParam")]
    BilayerAaTwoParam,
    BilayerAAPrime,
    HeteroBilayer,
    #[serde(rename = "TrilayerHBN_G_HBN")]
    TrilayerHbnGHbn,
    #[serde(rename = "TrilayerG_HBN_G")]
    TrilayerGHbnG,
    MagneticMonolayer,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Monolayer => "Monolayer",
            Variant::BilayerAA => "BilayerAA",
            Variant::BilayerAaTwoParam => "BilayerAA_TwoParam",
            Variant::BilayerAAPrime => "BilayerAAPrime",
            Variant::HeteroBilayer => "HeteroBilayer",
            Variant::TrilayerHbnGHbn => "TrilayerHBN_G_HBN",
            Variant::TrilayerGHbnG => "TrilayerG_HBN_G",
            Variant::MagneticMonolayer => "MagneticMonolayer",
        }
    }

    pub fn is_trilayer(&self) -> bool {
        matches!(self, Variant::TrilayerHbnGHbn | Variant::TrilayerGHbnG)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A validated stacking configuration. Fields are private so that every value
/// in circulation has passed [`StackConfig::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackConfig {
    variant: Variant,
    vertex: VertexParams,
    coupling: Option<CouplingParams>,
    flux: Option<FluxSpec>,
}

impl StackConfig {
    pub fn new(
        variant: Variant,
        vertex: VertexParams,
        coupling: Option<CouplingParams>,
        flux: Option<FluxSpec>,
    ) -> Result<Self, ConfigError> {
        vertex.validate()?;
        let name = variant.name();
        match variant {
            Variant::Monolayer => {
                if coupling.is_some() {
                    return Err(ConfigError::Forbidden { variant: name, what: "coupling" });
                }
            }
            Variant::MagneticMonolayer => {
                if coupling.is_some() {
                    return Err(ConfigError::Forbidden { variant: name, what: "coupling" });
                }
                let f = flux.ok_or(ConfigError::Missing { variant: name, what: "flux" })?;
                if f.q() > 2 {
                    return Err(ConfigError::UnsupportedFlux { q: f.q() });
                }
            }
            Variant::BilayerAaTwoParam => {
                let c = coupling.ok_or(ConfigError::Missing {
                    variant: name,
                    what: "coupling with t_a and t_b",
                })?;
                if c.t_a.is_none() || c.t_b.is_none() {
                    return Err(ConfigError::Missing { variant: name, what: "t_a and t_b" });
                }
                c.validate()?;
            }
            _ => {
                let c = coupling.ok_or(ConfigError::Missing { variant: name, what: "coupling t0" })?;
                if c.t_a.is_some() || c.t_b.is_some() {
                    return Err(ConfigError::Forbidden { variant: name, what: "t_a/t_b" });
                }
                c.validate()?;
            }
        }
        if variant != Variant::MagneticMonolayer && flux.is_some() {
            return Err(ConfigError::Forbidden { variant: name, what: "flux" });
        }
        Ok(Self {
            variant,
            vertex,
            coupling,
            flux,
        })
    }

    pub fn monolayer(alpha_a: f64, alpha_b: f64) -> Result<Self, ConfigError> {
        Self::new(Variant::Monolayer, VertexParams::new(alpha_a, alpha_b), None, None)
    }

    pub fn bilayer_aa(alpha_a: f64, alpha_b: f64, t0: f64) -> Result<Self, ConfigError> {
        Self::layered(Variant::BilayerAA, alpha_a, alpha_b, t0)
    }

    pub fn bilayer_aa_two_param(
        alpha_a: f64,
        alpha_b: f64,
        t_a: f64,
        t_b: f64,
    ) -> Result<Self, ConfigError> {
        Self::new(
            Variant::BilayerAaTwoParam,
            VertexParams::new(alpha_a, alpha_b),
            Some(CouplingParams::two_param(t_a, t_b)),
            None,
        )
    }

    pub fn bilayer_aa_prime(alpha_a: f64, alpha_b: f64, t0: f64) -> Result<Self, ConfigError> {
        Self::layered(Variant::BilayerAAPrime, alpha_a, alpha_b, t0)
    }

    /// Hetero bilayer with the carbon-layer parameter `α_c = 0`.
    pub fn hetero_bilayer(alpha_a: f64, alpha_b: f64, t0: f64) -> Result<Self, ConfigError> {
        Self::layered(Variant::HeteroBilayer, alpha_a, alpha_b, t0)
    }

    /// hBN/graphene/hBN with `α_N = alpha_a`, `α_B = alpha_b`, `α_C = 0`.
    pub fn trilayer_hbn_g_hbn(alpha_n: f64, alpha_b: f64, t0: f64) -> Result<Self, ConfigError> {
        Self::layered(Variant::TrilayerHbnGHbn, alpha_n, alpha_b, t0)
    }

    /// graphene/hBN/graphene with `α_N = alpha_a`, `α_B = alpha_b`, `α_C = 0`.
    pub fn trilayer_g_hbn_g(alpha_n: f64, alpha_b: f64, t0: f64) -> Result<Self, ConfigError> {
        Self::layered(Variant::TrilayerGHbnG, alpha_n, alpha_b, t0)
    }

    /// Magnetic monolayer with `α_N = alpha_n`, `α_B = alpha_b` and flux `2π·p/q`.
    pub fn magnetic(alpha_n: f64, alpha_b: f64, p: u32, q: u32) -> Result<Self, ConfigError> {
        let flux = FluxSpec::new(p, q).map_err(|e| ConfigError::Flux(e.to_string()))?;
        Self::new(
            Variant::MagneticMonolayer,
            VertexParams::new(alpha_n, alpha_b),
            None,
            Some(flux),
        )
    }

    fn layered(variant: Variant, alpha_a: f64, alpha_b: f64, t0: f64) -> Result<Self, ConfigError> {
        Self::new(
            variant,
            VertexParams::new(alpha_a, alpha_b),
            Some(CouplingParams::new(t0)),
            None,
        )
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn vertex(&self) -> VertexParams {
        self.vertex
    }

    pub fn coupling(&self) -> Option<CouplingParams> {
        self.coupling
    }

    pub fn flux(&self) -> Option<FluxSpec> {
        self.flux
    }

    /// `t0`, or 0 for the uncoupled variants.
    pub fn t0(&self) -> f64 {
        self.coupling.map_or(0.0, |c| c.t0)
    }

    pub fn dim(&self) -> usize {
        match self.variant {
            Variant::Monolayer => 2,
            Variant::MagneticMonolayer => 2 * self.flux.map_or(1, |f| f.q() as usize),
            Variant::TrilayerHbnGHbn | Variant::TrilayerGHbnG => 6,
            _ => 4,
        }
    }
}

/// `F(θ) = 1 + e^{iθ₁} + e^{iθ₂}`.
pub fn structure_function(theta: &Quasimomentum) -> Complex64 {
    Complex64::new(1.0, 0.0)
        + Complex64::from_polar(1.0, theta.theta1)
        + Complex64::from_polar(1.0, theta.theta2)
}

/// `|F(θ)|²` through the product-of-cosines identity.
pub fn structure_abs2_cosines(theta: &Quasimomentum) -> f64 {
    let (a, b) = (theta.theta1, theta.theta2);
    1.0 + 8.0 * ((a - b) / 2.0).cos() * (a / 2.0).cos() * (b / 2.0).cos()
}

/// `n` evenly spaced points `(θ₁, -θ₁)` with `θ₁` running from `-π` to `π`.
pub fn diagonal_slice(n: usize) -> Result<Vec<Quasimomentum>, LatticeError> {
    if n < 2 {
        return Err(LatticeError::InvalidGrid { min: 2, got: n });
    }
    Ok(linspace(-PI, PI, n)
        .into_iter()
        .map(|t| Quasimomentum { theta1: t, theta2: -t })
        .collect())
}

/// Row-major `n × n` grid over the closed zone; `θ₁` varies slowest.
pub fn full_grid(n: usize) -> Result<Vec<Quasimomentum>, LatticeError> {
    if n < 2 {
        return Err(LatticeError::InvalidGrid { min: 2, got: n });
    }
    let axis = linspace(-PI, PI, n);
    Ok(axis
        .iter()
        .flat_map(|&a| axis.iter().map(move |&b| Quasimomentum { theta1: a, theta2: b }))
        .collect())
}

/// `n` points from `a` to `b` inclusive, with exact endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn structure_function_examples() {
        let f = structure_function(&Quasimomentum::new(0.0, 0.0).unwrap());
        assert_abs_diff_eq!(f.re, 3.0);
        assert_abs_diff_eq!(f.im, 0.0);
        let f = structure_function(&Quasimomentum::new(2.0 * PI / 3.0, -2.0 * PI / 3.0).unwrap());
        assert!(f.norm() < 1e-15);
        let f = structure_function(&Quasimomentum::new(PI, PI).unwrap());
        assert_abs_diff_eq!(f.re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn slice_examples() {
        let s = diagonal_slice(3).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].theta1(), s[0].theta2()), (-PI, PI));
        assert_eq!((s[1].theta1(), s[1].theta2()), (0.0, 0.0));
        assert_eq!((s[2].theta1(), s[2].theta2()), (PI, -PI));
        assert_eq!(diagonal_slice(2).unwrap().len(), 2);
        assert_eq!(diagonal_slice(1), Err(LatticeError::InvalidGrid { min: 2, got: 1 }));
        for p in diagonal_slice(101).unwrap() {
            assert!(structure_function(&p).im.abs() < 1e-15);
        }
    }

    #[test]
    fn quasimomentum_rejects_out_of_zone() {
        assert!(Quasimomentum::new(3.5, 0.0).is_err());
        assert!(Quasimomentum::new(0.0, f64::NAN).is_err());
        assert!(Quasimomentum::new(PI, -PI).is_ok());
    }

    #[test]
    fn wrap_angle_keeps_zone() {
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(-3.0 * PI / 2.0), PI / 2.0, epsilon = 1e-15);
        assert_eq!(wrap_angle(PI), PI);
    }

    #[test]
    fn config_validation() {
        assert!(StackConfig::bilayer_aa(-1.0, 1.0, 0.0).is_err());
        assert!(StackConfig::bilayer_aa(-1.0, 1.0, 1.5).is_err());
        assert!(StackConfig::bilayer_aa(-1.0, 1.0, 1.0).is_ok());
        assert!(StackConfig::monolayer(f64::INFINITY, 0.0).is_err());
        assert!(StackConfig::new(
            Variant::Monolayer,
            VertexParams::default(),
            Some(CouplingParams::new(0.3)),
            None
        )
        .is_err());
        assert!(StackConfig::new(Variant::MagneticMonolayer, VertexParams::default(), None, None)
            .is_err());
        assert!(StackConfig::magnetic(0.0, 0.0, 1, 3).is_err());
        assert_eq!(StackConfig::magnetic(0.0, 0.0, 1, 2).unwrap().dim(), 4);
        assert_eq!(StackConfig::trilayer_g_hbn_g(1.0, -1.0, 0.3).unwrap().dim(), 6);
        let two = StackConfig::new(
            Variant::BilayerAaTwoParam,
            VertexParams::default(),
            Some(CouplingParams::new(0.3)),
            None,
        );
        assert!(two.is_err());
    }
}
