//! End-to-end checks of the runner: strict config rejection, exit codes, and
//! report determinism.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_moyal")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("moyal-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &PathBuf, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

const BASE: &str = r#"
theta0 = 1.0
n = 64
m = 64
t_max = 8.0
seed = 11
"#;

#[test]
fn rejects_nonpositive_theta_naming_the_field() {
    let dir = tmp_dir("theta");
    let cfg = write_config(&dir, &BASE.replace("theta0 = 1.0", "theta0 = -0.5"));
    let out = Command::new(binary())
        .args(["verify", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("theta0"), "stderr should name the field: {err}");
}

#[test]
fn rejects_unknown_keys() {
    let dir = tmp_dir("unknown");
    let cfg = write_config(&dir, &format!("{BASE}\nmystery_knob = 3\n"));
    let out = Command::new(binary())
        .args(["verify", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rejects_unknown_suite_names() {
    let dir = tmp_dir("suite");
    let cfg = write_config(&dir, &format!("{BASE}\nsuites = [\"nonexistent\"]\n"));
    let out = Command::new(binary())
        .args(["verify", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_suite_list_exits_zero_with_empty_report() {
    let dir = tmp_dir("empty");
    let cfg = write_config(&dir, &format!("{BASE}\nsuites = []\n"));
    let out_dir = dir.join("out");
    let out = Command::new(binary())
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["suites"].as_array().unwrap().len(), 0);
}

#[test]
fn evolve_requires_equation_section() {
    let dir = tmp_dir("noeq");
    let cfg = write_config(&dir, BASE);
    let out = Command::new(binary())
        .args(["evolve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn allen_cahn_with_zero_reaction_matches_heat_decay() {
    let dir = tmp_dir("acheat");
    let cfg = write_config(
        &dir,
        &format!(
            r#"{BASE}
[evolve]
equation = "allen_cahn"
horizon = 0.2
dt = 0.01
record_every = 1

[evolve.params]
f_name = "zero"
amplitude = 0.5
"#
        ),
    );
    let out_dir = dir.join("out");
    let out = Command::new(binary())
        .args(["evolve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["persistence_verdict"], "GLOBAL_OK");
    assert_eq!(summary["energy_monotone"], true);
    // pure heat: the l2 series must be strictly decreasing
    let csv = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let l2: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(l2.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

#[test]
fn nls_summary_reports_tiny_conservation_drift() {
    let dir = tmp_dir("nls");
    let cfg = write_config(
        &dir,
        &format!(
            r#"{BASE}
[evolve]
equation = "nls"
horizon = 0.5
dt = 0.005
record_every = 10

[evolve.params]
mu = 1.0
p = 3
amplitude = 0.6
"#
        ),
    );
    let out_dir = dir.join("out");
    let out = Command::new(binary())
        .args(["evolve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert!(summary["conservation_drift"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn navier_stokes_summary_reports_monotone_energy() {
    let dir = tmp_dir("ns");
    let cfg = write_config(
        &dir,
        &format!(
            r#"{BASE}
[evolve]
equation = "navier_stokes"
horizon = 0.1
dt = 0.005
record_every = 2

[evolve.params]
amplitude = 0.25
"#
        ),
    );
    let out_dir = dir.join("out");
    let out = Command::new(binary())
        .args(["evolve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["energy_monotone"], true);
    assert_eq!(summary["persistence_verdict"], "GLOBAL_OK");
}

#[test]
fn calibrate_writes_epsilon_table() {
    let dir = tmp_dir("calib");
    let cfg = write_config(&dir, BASE);
    let out_dir = dir.join("out");
    let out = Command::new(binary())
        .args(["calibrate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("calibration.json")).unwrap())
            .unwrap();
    let eps = report["epsilon"].as_array().unwrap();
    assert_eq!(eps.len(), 4);
    // the table must decrease down to the rounding floor
    let e32 = eps[1][1].as_f64().unwrap();
    let e64 = eps[2][1].as_f64().unwrap();
    assert!(e64 <= e32.max(1e-12));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tmp_dir("seed");
    let cfg = write_config(&dir, &format!("{BASE}\nsuites = [\"norms\"]\n"));
    let (o1, o2, o3) = (dir.join("o1"), dir.join("o2"), dir.join("o3"));
    for (out_dir, seed) in [(&o1, "5"), (&o2, "5"), (&o3, "6")] {
        let out = Command::new(binary())
            .args(["verify", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out_dir)
            .args(["--seed", seed])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    let r1 = fs::read(o1.join("report.json")).unwrap();
    let r2 = fs::read(o2.join("report.json")).unwrap();
    let r3 = fs::read(o3.join("report.json")).unwrap();
    assert_eq!(r1, r2);
    assert_ne!(r1, r3, "different seeds should alter the random-draw residuals");
}
