//! End-to-end runs of the `hexbands` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use hexbands::cli::{default_closed_form, validate_sweep, ClosedFormFn, MagneticReport, EXIT_VALIDATION};
use hexbands::floquet::{self, DispersionRoots};
use hexbands::io::{self, ClassifyReport, GapsReport, RunManifest};
use hexbands::lattice::{Quasimomentum, StackConfig};
use tempfile::TempDir;

const MONO_ZERO: &str = r#"
schema_version = 1
[lattice]
variant = "Monolayer"
alpha_a = 0.0
alpha_b = 0.0
[grid]
points = 5
"#;

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn hexbands(args: &[&str], cfg: &Path, out: &Path) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_hexbands"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    (
        o.status.code().unwrap(),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn lattice(variant: &str, a: f64, b: f64, extra: &str) -> String {
    format!("schema_version = 1\n[lattice]\nvariant = \"{variant}\"\nalpha_a = {a:?}\nalpha_b = {b:?}\n{extra}\n")
}

#[test]
fn monolayer_band_csv_has_ten_rows() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", MONO_ZERO);
    let (code, _, err) = hexbands(&["bands"], &cfg, d.path());
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(d.path().join("bands.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "theta1,theta2,F_real,F_imag,band_index,eta,admissible,source");
    assert_eq!(lines.count(), 10);
    let rows = io::parse_band_csv(text.as_bytes(), Path::new("bands.csv")).unwrap();
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.band_index, i % 2);
        assert!(r.closed_form);
    }
    assert!(rows.windows(2).all(|w| w[0].theta1 <= w[1].theta1));
}

#[test]
fn every_csv_eta_is_a_root() {
    let d = TempDir::new().unwrap();
    let cfg = config(
        d.path(),
        "c.toml",
        &lattice("TrilayerG_HBN_G", -0.3, 0.7, "t0 = 0.4\n[grid]\npoints = 7\nkind = \"full\""),
    );
    let (code, _, err) = hexbands(&["bands"], &cfg, d.path());
    assert_eq!(code, 0, "{err}");
    let rows = io::parse_band_csv(&fs::read(d.path().join("bands.csv")).unwrap(), Path::new("x")).unwrap();
    assert_eq!(rows.len(), 7 * 7 * 6);
    let c = StackConfig::trilayer_g_hbn_g(-0.3, 0.7, 0.4).unwrap();
    for r in rows {
        assert!(!r.closed_form);
        let m = floquet::assemble(&c, &Quasimomentum::new(r.theta1, r.theta2).unwrap()).unwrap();
        let cp = floquet::char_poly(&m);
        assert!(floquet::det_residual(&m, &cp, r.eta) < 1e-9);
    }
}

#[test]
fn bilayer_has_four_bands_per_point() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", &lattice("BilayerAA", -1.0, -1.0, "t0 = 0.3\n[grid]\npoints = 11"));
    assert_eq!(hexbands(&["bands"], &cfg, d.path()).0, 0);
    let rows = io::parse_band_csv(&fs::read(d.path().join("bands.csv")).unwrap(), Path::new("x")).unwrap();
    assert_eq!(rows.len(), 44);
    assert_eq!(rows.iter().map(|r| r.band_index).max(), Some(3));
}

#[test]
fn identical_configs_reproduce_identical_outputs() {
    let d = TempDir::new().unwrap();
    let cfg = config(
        d.path(),
        "c.toml",
        &lattice("HeteroBilayer", -1.0, 1.0, "t0 = 0.3\noutputs = []\n[grid]\npoints = 301").replace(
            "schema_version = 1\n",
            "schema_version = 1\noutputs = [\"bands\", \"plot\", \"report\"]\n",
        )
        .replace("outputs = []\n", ""),
    );
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(hexbands(&["bands"], &cfg, &a).0, 0);
    assert_eq!(hexbands(&["bands"], &cfg, &b).0, 0);
    for f in ["bands.csv", "bands.svg", "classify.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let ma: RunManifest = io::from_toml(&fs::read_to_string(a.join("bands.manifest.toml")).unwrap(), Path::new("a")).unwrap();
    let mb: RunManifest = io::from_toml(&fs::read_to_string(b.join("bands.manifest.toml")).unwrap(), Path::new("b")).unwrap();
    assert_eq!(ma.output, mb.output);
    assert_eq!(ma.output.len(), 3);
    assert_eq!(ma.config, mb.config);
    assert_eq!(ma.version, env!("CARGO_PKG_VERSION"));
    let csv = fs::read(a.join("bands.csv")).unwrap();
    assert_eq!(ma.output[0].sha256, io::sha256_hex(&csv));
}

#[test]
fn plot_is_deterministic_and_draws_each_band() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", &lattice("Monolayer", 0.2, 0.2, "[grid]\npoints = 401"));
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(hexbands(&["plot"], &cfg, &a).0, 0);
    assert_eq!(hexbands(&["plot"], &cfg, &b).0, 0);
    let svg = fs::read_to_string(a.join("bands.svg")).unwrap();
    assert_eq!(svg.as_bytes(), fs::read(b.join("bands.svg")).unwrap().as_slice());
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(svg.matches(">cone</text>").count(), 1);
}

#[test]
fn plot_needs_the_diagonal() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", MONO_ZERO);
    assert_eq!(hexbands(&["plot", "--full"], &cfg, d.path()).0, 1);
}

#[test]
fn classify_monolayer_gap_record() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", &lattice("Monolayer", 1.0, -1.0, ""));
    let (code, _, err) = hexbands(&["classify"], &cfg, d.path());
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(d.path().join("classify.toml")).unwrap();
    assert!(text.contains("width = 0.6666666666666666"), "{text}");
    let r: ClassifyReport = io::from_toml(&text, Path::new("classify.toml")).unwrap();
    assert_eq!(r.record.len(), 1);
    assert_eq!(r.record[0].kind, "gap");
    assert_eq!(r.closed_form_gap, Some(2.0 / 3.0));
}

#[test]
fn classify_aa_prime_cones() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", &lattice("BilayerAAPrime", -1.0, -1.0, "t0 = 0.3"));
    assert_eq!(hexbands(&["classify"], &cfg, d.path()).0, 0);
    let r: ClassifyReport =
        io::from_toml(&fs::read_to_string(d.path().join("classify.toml")).unwrap(), Path::new("x")).unwrap();
    let mut cones: Vec<f64> = r.record.iter().filter(|t| t.kind == "cone").map(|t| t.f_real).collect();
    cones.sort_by(f64::total_cmp);
    assert_eq!(cones.len(), 2, "{r:?}");
    assert!((cones[0] + 0.09).abs() < 1e-4 && (cones[1] - 0.09).abs() < 1e-4);
}

#[test]
fn coarse_classify_is_a_config_error() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", MONO_ZERO);
    let (code, _, err) = hexbands(&["classify"], &cfg, d.path());
    assert_eq!(code, 1);
    assert!(err.contains("too coarse"), "{err}");
}

#[test]
fn gaps_report() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", &lattice("Monolayer", 1.0, -1.0, "[grid]\npoints = 3001"));
    assert_eq!(hexbands(&["gaps"], &cfg, d.path()).0, 0);
    let r: GapsReport = io::from_toml(&fs::read_to_string(d.path().join("gaps.toml")).unwrap(), Path::new("x")).unwrap();
    assert_eq!(r.pair.len(), 1);
    assert!((r.pair[0].global_gap - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn spectrum_zero_potential() {
    let d = TempDir::new().unwrap();
    let cfg = config(
        d.path(),
        "c.toml",
        &lattice("Monolayer", 0.0, 0.0, "[grid]\npoints = 201\n[potential]\nkind = \"zero\"\nlambda_max = 100.0"),
    );
    let (code, _, err) = hexbands(&["spectrum"], &cfg, d.path());
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(d.path().join("spectrum.csv")).unwrap();
    assert!(text.starts_with("eta_band,hill_band,eta_min,eta_max,lambda_lo,lambda_hi,spectral_type\n"));
    let pp: Vec<f64> = text
        .lines()
        .filter(|l| l.ends_with(",pp"))
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(pp.len(), 3);
    for (n, e) in pp.iter().enumerate() {
        let expect = ((n + 1) as f64 * std::f64::consts::PI).powi(2);
        assert!((e - expect).abs() < 1e-8, "{e} vs {expect}");
    }
    // α = 0 sweeps η over [−1, 1]; the λ-bands cover [0, 100] up to grid resolution.
    let ac: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| l.ends_with(",ac"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[4].parse().unwrap(), f[5].parse().unwrap())
        })
        .collect();
    assert!(ac.iter().any(|&(lo, _)| lo < 1e-3));
    assert!(ac.iter().all(|&(lo, hi)| lo <= hi && hi <= 100.0));
}

#[test]
fn inadmissible_spectrum_is_empty_with_diagnostic() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", &lattice("Monolayer", -10.0, -10.0, "[grid]\npoints = 51\n[potential]\nkind = \"zero\""));
    let (code, _, err) = hexbands(&["spectrum"], &cfg, d.path());
    assert_eq!(code, 0);
    assert!(err.contains("no admissible"), "{err}");
    let text = fs::read_to_string(d.path().join("spectrum.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    let m: RunManifest =
        io::from_toml(&fs::read_to_string(d.path().join("spectrum.manifest.toml")).unwrap(), Path::new("x")).unwrap();
    assert!(!m.diagnostics.is_empty());
}

#[test]
fn sampled_potential_file_is_resolved_relative_to_config() {
    let d = TempDir::new().unwrap();
    let rows: String = (0..=20)
        .map(|i| {
            let x = i as f64 / 20.0;
            format!("{x} {}\n", (2.0 * std::f64::consts::PI * x).cos())
        })
        .collect();
    fs::write(d.path().join("q.txt"), rows).unwrap();
    let cfg = config(
        d.path(),
        "c.toml",
        &lattice("Monolayer", 0.0, 0.0, "[grid]\npoints = 51\n[potential]\nkind = \"sampled\"\nfile = \"q.txt\"\nlambda_max = 50.0"),
    );
    let (code, _, err) = hexbands(&["spectrum"], &cfg, &d.path().join("out"));
    assert_eq!(code, 0, "{err}");
    let odd = config(
        d.path(),
        "odd.toml",
        &lattice("Monolayer", 0.0, 0.0, "[potential]\nkind = \"sampled\"\nfile = \"q2.txt\""),
    );
    fs::write(d.path().join("q2.txt"), "0 0\n1 1\n").unwrap();
    assert_eq!(hexbands(&["spectrum"], &odd, d.path()).0, 1);
}

#[test]
fn magnetic_half_flux_cone() {
    let d = TempDir::new().unwrap();
    let cfg = config(
        d.path(),
        "c.toml",
        &lattice("MagneticMonolayer", -1.0, -1.0, "flux = { p = 1, q = 2 }"),
    );
    let (code, out, err) = hexbands(&["magnetic", "--grid", "41"], &cfg, d.path());
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("cone"));
    let r: MagneticReport =
        io::from_toml(&fs::read_to_string(d.path().join("magnetic.toml")).unwrap(), Path::new("x")).unwrap();
    assert_eq!(r.zone_points, 41);
    assert!(r
        .record
        .iter()
        .any(|t| t.kind == "cone" && (t.theta1 + 2.0 * t.theta2).abs() < 1e-6));
    assert_eq!(r.pair.len(), 3);
}

#[test]
fn magnetic_needs_a_magnetic_lattice() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", MONO_ZERO);
    assert_eq!(hexbands(&["magnetic"], &cfg, d.path()).0, 1);
}

#[test]
fn validate_monolayer_passes() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", MONO_ZERO);
    let (code, out, _) = hexbands(&["validate", "--seed", "11"], &cfg, d.path());
    assert_eq!(code, 0);
    assert!(out.contains("status             ok"), "{out}");
    let text = fs::read_to_string(d.path().join("validate.toml")).unwrap();
    let r: hexbands::cli::ValidationReport = io::from_toml(&text, Path::new("x")).unwrap();
    assert_eq!(r.seed, 11);
    assert_eq!(r.compared, 1000);
    assert!(r.max_deviation < 1e-9);
}

#[test]
fn validate_reports_missing_closed_forms() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", &lattice("TrilayerHBN_G_HBN", -0.5, 0.2, "t0 = 0.3"));
    let (code, out, _) = hexbands(&["validate"], &cfg, d.path());
    assert_eq!(code, 0);
    assert!(out.contains("no_closed_form"), "{out}");
}

#[test]
fn corrupted_closed_form_fails_validation() {
    let config = StackConfig::bilayer_aa(-1.0, 0.5, 0.3).unwrap();
    let corrupted = |c: &StackConfig, th: &Quasimomentum| -> Result<Option<DispersionRoots>, String> {
        let mut r = default_closed_form(c, th)?.unwrap();
        r.values[0] += 1e-6;
        Ok(Some(r))
    };
    let f: ClosedFormFn<'_> = &corrupted;
    let report = validate_sweep(&config, 50, 3, 1e-8, f);
    assert_eq!(report.status, "failed");
    assert_eq!(report.exit_code(), EXIT_VALIDATION);
    let clean = validate_sweep(&config, 50, 3, 1e-8, &default_closed_form);
    assert_eq!(clean.exit_code(), 0);
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    let unknown = config(d.path(), "u.toml", &MONO_ZERO.replace("[grid]", "colour = 3\n[grid]"));
    let (code, _, err) = hexbands(&["bands"], &unknown, d.path());
    assert_eq!(code, 1);
    assert!(err.contains("colour") && err.contains("line"), "{err}");

    let bad_coupling = config(d.path(), "b.toml", &lattice("BilayerAA", 0.0, 0.0, "t0 = 1.5"));
    let (code, _, err) = hexbands(&["bands"], &bad_coupling, d.path());
    assert_eq!(code, 1);
    assert!(err.contains("lattice") && err.contains("t0"), "{err}");

    let version = config(d.path(), "v.toml", &MONO_ZERO.replace("schema_version = 1", "schema_version = 2"));
    assert_eq!(hexbands(&["bands"], &version, d.path()).0, 1);

    assert_eq!(hexbands(&["bands"], &d.path().join("missing.toml"), d.path()).0, 3);

    let ok = config(d.path(), "ok.toml", MONO_ZERO);
    let blocker = d.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    assert_eq!(hexbands(&["bands"], &ok, &blocker.join("sub")).0, 3);

    let o = Command::new(env!("CARGO_BIN_EXE_hexbands")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_hexbands")).arg("--version").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn grid_flags_override_the_document() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "c.toml", MONO_ZERO);
    assert_eq!(hexbands(&["bands", "--full", "--grid", "4"], &cfg, d.path()).0, 0);
    let rows = io::parse_band_csv(&fs::read(d.path().join("bands.csv")).unwrap(), Path::new("x")).unwrap();
    assert_eq!(rows.len(), 32);
    let m: RunManifest =
        io::from_toml(&fs::read_to_string(d.path().join("bands.manifest.toml")).unwrap(), Path::new("x")).unwrap();
    assert_eq!(m.config.grid.points, 4);
    assert_eq!(m.config.grid.kind, io::GridKind::Full);
}
