//! Classification and gap invariants of sampled dispersion surfaces.

use std::f64::consts::PI;

use hexbands::bands::{self, classify_touches, sample, GridSpec, Tolerances, TouchKind, TouchReport};
use hexbands::lattice::{diagonal_slice, Quasimomentum, StackConfig};
use hexbands::floquet::closed_form_roots;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `√(2√5 − 2)`.
const HETERO_THRESHOLD: f64 = 1.5723027555148466;

fn reports(config: StackConfig) -> Vec<TouchReport> {
    let surface = sample(&config, GridSpec::Diagonal(2001)).unwrap();
    classify_touches(&surface, &Tolerances::default()).unwrap()
}

fn has_kind_at_origin(r: &[TouchReport], kind: TouchKind) -> bool {
    r.iter().any(|t| t.kind == kind && t.f_value.norm() < 1e-3)
}

fn only_gaps(r: &[TouchReport]) -> bool {
    r.iter().all(|t| t.kind == TouchKind::Gap && t.separation > 1e-6)
}

#[test]
fn aa_band_images_equal_printed_intervals() {
    let (alpha, t0) = (-0.4, 0.3);
    let config = StackConfig::bilayer_aa(alpha, alpha, t0).unwrap();
    let t2 = t0 * t0;
    let t = 3.0 + t2;
    // 3001 points put θ₁ = 0 and θ₁ = ±2π/3 on the grid.
    let grid = diagonal_slice(3001).unwrap();
    for (label, shift, sign) in [
        ("r^+_+", 1.0, 1.0),
        ("r^+_-", 1.0, -1.0),
        ("r^-_+", -1.0, 1.0),
        ("r^-_-", -1.0, -1.0),
    ] {
        let values: Vec<f64> = grid
            .iter()
            .map(|th| closed_form_roots(&config, th).unwrap().branch(label).unwrap())
            .collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let at_dirac = (-alpha - shift * t2) / t;
        let at_origin = (-alpha - shift * t2 - sign * 3.0) / t;
        assert!((lo - at_dirac.min(at_origin)).abs() < 1e-6, "{label}");
        assert!((hi - at_dirac.max(at_origin)).abs() < 1e-6, "{label}");
        let origin = closed_form_roots(&config, &Quasimomentum::new(0.0, 0.0).unwrap()).unwrap();
        assert!((origin.branch(label).unwrap() - at_origin).abs() < 1e-12);
        for th in [Quasimomentum::new(2.0 * PI / 3.0, -2.0 * PI / 3.0).unwrap(), Quasimomentum::new(-2.0 * PI / 3.0, 2.0 * PI / 3.0).unwrap()] {
            let d = closed_form_roots(&config, &th).unwrap();
            assert!((d.branch(label).unwrap() - at_dirac).abs() < 1e-12);
        }
    }
}

#[test]
fn aa_prime_cones_sit_at_f_equal_plus_minus_t0_squared() {
    for (alpha, t0) in [(-1.0, 0.3), (0.5, 0.5)] {
        let r = reports(StackConfig::bilayer_aa_prime(alpha, alpha, t0).unwrap());
        let cones: Vec<f64> = r.iter().filter(|t| t.kind == TouchKind::Cone).map(|t| t.f_value.re).collect();
        let t2: f64 = t0 * t0;
        for target in [t2, -t2] {
            assert!(
                cones.iter().any(|f| (f - target).abs() < 1e-4),
                "no cone at F = {target}: {cones:?}"
            );
        }
    }
}

#[test]
fn aa_trichotomy_scan() {
    let (t0, alpha_b) = (0.3, -1.0);
    let t2 = t0 * t0;
    for (u, expect) in [
        (0.0, TouchKind::Parabolic),
        (0.25, TouchKind::Crossing),
        (0.5, TouchKind::Cone),
        (0.75, TouchKind::Crossing),
        (1.0, TouchKind::Parabolic),
    ] {
        let alpha_a = (1.0 - u) * (-2.0 * t2 + alpha_b) + u * (2.0 * t2 + alpha_b);
        let r = reports(StackConfig::bilayer_aa(alpha_a, alpha_b, t0).unwrap());
        assert!(r.iter().any(|t| t.kind == expect), "u = {u}: {r:?}");
        if expect == TouchKind::Crossing {
            assert!(!r.iter().any(|t| matches!(t.kind, TouchKind::Cone | TouchKind::Parabolic)));
        }
    }
    assert!(only_gaps(&reports(StackConfig::bilayer_aa(alpha_b + 3.0 * t2, alpha_b, t0).unwrap())));
}

#[test]
fn two_parameter_model_cases() {
    let (ta, tb): (f64, f64) = (0.5, 0.3);
    let (ta2, tb2) = (ta * ta, tb * tb);
    let cone = reports(StackConfig::bilayer_aa_two_param(ta2, tb2, ta, tb).unwrap());
    assert!(has_kind_at_origin(&cone, TouchKind::Cone), "{cone:?}");
    let parabolic = reports(StackConfig::bilayer_aa_two_param(ta2, -tb2, ta, tb).unwrap());
    assert!(has_kind_at_origin(&parabolic, TouchKind::Parabolic), "{parabolic:?}");
    for (a, b) in [(0.5, tb2), (0.5, -0.5)] {
        let r = reports(StackConfig::bilayer_aa_two_param(a, b, ta, tb).unwrap());
        assert!(only_gaps(&r), "({a}, {b}): {r:?}");
    }
    // Off the |α| = t² lines, branches may still cross transversally.
    let r = reports(StackConfig::bilayer_aa_two_param(-0.1, tb2, ta, tb).unwrap());
    assert!(!r.iter().any(|t| matches!(t.kind, TouchKind::Cone | TouchKind::Parabolic)));
    assert!(r.iter().any(|t| t.kind == TouchKind::Crossing));
}

#[test]
fn g_hbn_g_keeps_its_central_cone() {
    let t0: f64 = 0.3;
    let gamma = 3f64.sqrt() / (3.0 + t0 * t0);
    for alpha_n in [-1.0, -0.1, -0.01, 0.5, 1.0] {
        let r = reports(StackConfig::trilayer_g_hbn_g(alpha_n, -alpha_n, t0).unwrap());
        let cone = r
            .iter()
            .find(|t| t.kind == TouchKind::Cone && t.f_value.norm() < 1e-3 && t.eta.abs() < 1e-9)
            .unwrap_or_else(|| panic!("alpha_N = {alpha_n}: {r:?}"));
        assert!((cone.gamma.unwrap() - gamma).abs() < 1e-3);
    }
}

#[test]
fn monolayer_cone_only_for_equal_alphas() {
    for a in [0.0, 0.2, -1.0] {
        let r = reports(StackConfig::monolayer(a, a).unwrap());
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kind, TouchKind::Cone);
        assert!((r[0].gamma.unwrap() - 3f64.sqrt() / 3.0).abs() < 1e-3);
    }
    assert!(only_gaps(&reports(StackConfig::monolayer(0.3, 0.1).unwrap())));
}

/// Grid minimum minus closed-form gap is bounded by `2·Δθ²·K`, with `K` the
/// second derivative of the separation at its minimum.
#[test]
fn gap_formula_consistency_on_random_draws() {
    let n = 2001;
    let h = 2.0 * PI / (n - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..50 {
        let config = if i % 2 == 0 {
            let a = rng.random_range(-3.0..3.0);
            let b = a + rng.random_range(0.2..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            StackConfig::monolayer(a, b).unwrap()
        } else {
            let t0: f64 = rng.random_range(0.1..1.0);
            let lo = 1.1 * HETERO_THRESHOLD * t0 * t0;
            let a = rng.random_range(lo.max(0.05)..3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            StackConfig::hetero_bilayer(a, -a, t0).unwrap()
        };
        let g = bands::gap_width_closed_form(&config).unwrap();
        let surface = sample(&config, GridSpec::Diagonal(n)).unwrap();
        let k = bands::middle_pair(surface.dim());
        let (grid_min, _) = surface.min_separation(k);
        let sep = |t: f64| {
            let p = bands::evaluate(&config, &Quasimomentum::wrapped(t, -t)).unwrap();
            p.primary().values[k + 1] - p.primary().values[k]
        };
        let (t_star, s_star) = bands::golden_min(&sep, 2.0 * PI / 3.0 - h, 2.0 * PI / 3.0 + h, 1e-10);
        assert!((s_star - g).abs() < 1e-9, "{config:?}: refined {s_star} vs closed {g}");
        let d = 1e-3;
        let curvature = (sep(t_star + d) - 2.0 * s_star + sep(t_star - d)) / (d * d);
        let err = grid_min - g;
        assert!(err >= -1e-12, "{config:?}: grid minimum {grid_min} below closed form {g}");
        assert!(err <= 2.0 * h * h * curvature.abs() + 1e-12, "{config:?}: {err} vs {curvature}");
    }
}

/// `F = 0` stops being the minimum of the hetero middle separation once
/// `|α| < √(2√5 − 2)·t₀²`; there the closed form overstates the gap.
#[test]
fn hetero_gap_formula_overstates_below_threshold() {
    for (alpha, t0) in [(0.1, 0.3), (0.2, 0.5), (0.7, 0.7), (1.0, 1.0)] {
        assert!(alpha < HETERO_THRESHOLD * t0 * t0);
        let config = StackConfig::hetero_bilayer(-alpha, alpha, t0).unwrap();
        let g = bands::gap_width_closed_form(&config).unwrap();
        let surface = sample(&config, GridSpec::Diagonal(2001)).unwrap();
        let (m, i) = surface.min_separation(1);
        assert!(m < g * 0.99, "({alpha}, {t0}): {m} vs {g}");
        assert!(surface.points[i].f.norm() > 0.05);
    }
}

#[test]
fn admissibility_lemma_cases() {
    use bands::{admissible_region, VerdictSource};
    let v = admissible_region(&StackConfig::monolayer(2.0, 2.0).unwrap()).unwrap();
    assert_eq!(v.source, VerdictSource::Lemma);
    let plus = v.branches.iter().find(|b| b.label == "r+").unwrap();
    assert_eq!(plus.guaranteed, Some(true));
    assert!(plus.admissible_everywhere);
    let both = admissible_region(&StackConfig::monolayer(0.0, 0.0).unwrap()).unwrap();
    assert!(both.branches.iter().all(|b| b.admissible_everywhere));
    let edge = admissible_region(&StackConfig::monolayer(-2.0, 6.0).unwrap()).unwrap();
    let plus = edge.branches.iter().find(|b| b.label == "r+").unwrap();
    assert_eq!(plus.guaranteed, Some(true));
    assert!(plus.max_abs <= 1.0 + 1e-9);
}
