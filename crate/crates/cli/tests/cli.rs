use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const HEATING: &str = r#"
experiment = "ground_state_heating"

[system]
qubit_ghz = 6.0
resonator_ghz = 6.0

[baths.kappa]
kind = "white"
rate_mhz = 0.1

[baths.gamma]
kind = "white"
rate_mhz = 0.1

[numerics]
n_max = 8
n_levels = 5
samples = 11

[sweep]
values = [0.5, 1.0]
"#;

fn usc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_usc")).args(args).output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    usc(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Header and numeric rows of a CSV written by the runner.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn heating_dressed_column_vanishes_and_standard_heats() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "h.toml", HEATING);
    let o = run(&cfg, &dir.path().join("out"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = dir.path().join("out/ground_state_heating.csv");
    let (header, _) = read_csv(&csv);
    assert_eq!(&header[..4], ["g_ghz", "excess_photons_std", "one_minus_fidelity", "excess_photons_dressed"]);
    let std = column(&csv, "excess_photons_std");
    let fid = column(&csv, "one_minus_fidelity");
    let dressed = column(&csv, "excess_photons_dressed");
    assert!(std[0] > 0.0 && std[1] > std[0], "{std:?}");
    for (s, f) in std.iter().zip(&fid) {
        assert!(((s - f) / f).abs() < 0.3, "{s} vs {f}");
    }
    assert!(dressed.iter().all(|d| d.abs() < 1e-10), "{dressed:?}");
}

#[test]
fn reruns_are_bit_identical_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "h.toml", HEATING);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a, &["--workers", "1"]).status.success());
    assert!(run(&cfg, &b, &["--workers", "3"]).status.success());
    for f in ["ground_state_heating.csv", "ground_state_heating_manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn manifest_records_hash_truncation_and_outputs() {
    let dir = TempDir::new().unwrap();
    let text = HEATING.replace("values = [0.5, 1.0]", "values = [0.5]");
    let cfg = write_config(&dir, "h.toml", &text);
    let out = dir.path().join("out");
    assert!(run(&cfg, &out, &["--nmax", "9"]).status.success());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("ground_state_heating_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["schema"], 1);
    assert_eq!(m["n_max"], 9);
    assert_eq!(m["n_levels"], 5);
    assert_eq!(m["experiment"], "ground_state_heating");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["outputs"][0]["file"], "ground_state_heating.csv");
    assert_eq!(m["outputs"][0]["rows"], 1);
    assert!(m.get("workers").is_none());
}

#[test]
fn malformed_config_exits_2_with_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.toml", &HEATING.replace("rate_mhz = 0.1\n\n[baths.gamma]", "rate_mhz = = 0.1\n\n[baths.gamma]"));
    let o = run(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 10"), "{}", stderr(&o));
}

#[test]
fn semantic_error_exits_2_naming_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.toml", &HEATING.replace("n_levels = 5", "n_levels = 40"));
    let o = run(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("numerics.n_levels"), "{}", stderr(&o));

    let cfg = write_config(&dir, "bad2.toml", &HEATING.replace("ground_state_heating", "ground_state_freezing"));
    let o = run(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ground_state_freezing"), "{}", stderr(&o));
}

#[test]
fn missing_config_exits_2() {
    let o = usc(&["run", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn guard_failure_exits_3_naming_guard() {
    // Parametric growth outruns a four-photon truncation.
    let text = r#"
experiment = "sidebands"
[system]
qubit_ghz = 8.0
resonator_ghz = 5.0
coupling_ghz = 0.3
[numerics]
n_max = 4
[sideband]
mode = "parametric"
eps_z_ghz = 0.2
samples = 5
"#;
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "p.toml", text);
    let o = run(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("guard `truncation`"), "{}", stderr(&o));
    assert!(!dir.path().join("out/sidebands_trajectory.csv").exists());
}

#[test]
fn validate_clean_config_has_no_warnings() {
    let dir = TempDir::new().unwrap();
    let text = HEATING
        .replace("n_max = 8", "n_max = 12")
        .replace("values = [0.5, 1.0]", "start = 0.1\nstop = 2.0\npoints = 20");
    let cfg = write_config(&dir, "clean.toml", &text);
    let o = usc(&["validate", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0 warning(s)"), "{}", stdout(&o));
}

#[test]
fn validate_flags_lambda_levels_and_truncation() {
    let dir = TempDir::new().unwrap();
    let text = HEATING.replace("values = [0.5, 1.0]", "values = [4.0]").replace("n_levels = 5", "n_levels = 9");
    let cfg = write_config(&dir, "v.toml", &text);
    let o = usc(&["validate", cfg.to_str().unwrap(), "--nmax", "6"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("warning[perturbative]"), "{s}");
    assert!(s.contains("warning[resolution]") && s.contains("critical number"), "{s}");
    assert!(s.contains("warning[truncation]"), "{s}");
}

#[test]
fn photon_generation_tracks_closed_form() {
    let text = r#"
experiment = "photon_generation"
[system]
qubit_ghz = 6.0
resonator_ghz = 6.0
[baths.gamma_phi]
kind = "white"
rate_mhz = 1.0
closure = "classical"
[numerics]
n_max = 10
n_levels = 9
[sweep]
values = [0.25, 0.5, 1.0]
"#;
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "p.toml", text);
    let o = run(&cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = dir.path().join("photon_generation.csv");
    let num = column(&csv, "beta_numeric_mhz");
    let ana = column(&csv, "beta_closed_form_mhz");
    for (n, a) in num.iter().zip(&ana) {
        assert!(((n - a) / a).abs() < 0.1, "{n} vs {a}");
    }
}

#[test]
fn ncrit_report_gives_nine_at_one_ghz() {
    let text = r#"
experiment = "ncrit_report"
[system]
qubit_ghz = 6.0
resonator_ghz = 6.0
[baths.kappa]
kind = "white"
rate_mhz = 0.1
[sweep]
values = [0.0, 1.0]
"#;
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "n.toml", text);
    assert!(run(&cfg, dir.path(), &[]).status.success());
    let even = column(&dir.path().join("ncrit_report.csv"), "n_crit_even");
    assert!(even[0].is_infinite());
    assert!((even[1] - 9.0).abs() < 1e-12);
}

#[test]
fn audit_derived_beats_printed() {
    let text = r#"
experiment = "matrix_element_audit"
[system]
qubit_ghz = 6.0
resonator_ghz = 6.0
coupling_ghz = 0.2
[audit]
exact_n_max = 16
max_doublet = 1
"#;
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "a.toml", text);
    let o = run(&cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = dir.path().join("matrix_element_audit.csv");
    let worst = |c: &str| column(&csv, c).into_iter().map(f64::abs).fold(0.0, f64::max);
    assert!(worst("error_derived") < 0.1 * worst("error_printed"));
}

#[test]
fn red_sideband_swaps_population() {
    let text = r#"
experiment = "sidebands"
[system]
qubit_ghz = 7.0
resonator_ghz = 6.0
coupling_ghz = 0.1
[numerics]
n_max = 3
[sideband]
mode = "red"
eps_z_ghz = 0.05
samples = 101
"#;
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "r.toml", text);
    let o = run(&cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = dir.path().join("sidebands_trajectory.csv");
    let p = column(&csv, "p_g1");
    let oracle = column(&csv, "p_g1_oracle");
    let worst = p.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 0.05, "{worst}");
    assert!(p.iter().cloned().fold(0.0, f64::max) > 0.95);
}
