use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_trapmass");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN).args(args).arg("--out").arg(out).env_remove("TRAPMASS_OUT_DIR").output().unwrap()
}

fn run_config(experiment: &str, cfg: &Path, out: &Path) -> Output {
    let o = run(&[experiment, "--config", cfg.to_str().unwrap(), "--no-timestamp", "--verify"], out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Csv {
    fn read(path: &Path) -> Self {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
        let header = r.headers().unwrap().iter().map(String::from).collect();
        let rows = r.records().map(|rec| rec.unwrap().iter().map(|f| f.parse().unwrap()).collect()).collect();
        Self { header, rows }
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let j = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[j]).collect()
    }
}

fn summary(path: &Path) -> Value {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["summary"].clone()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn fock_revival_at_half_period() {
    let out = tempfile::tempdir().unwrap();
    run_config("ramsey", &config("revival_fock.json"), out.path());
    let csv = Csv::read(&out.path().join("revival_fock.csv"));
    assert_eq!(csv.header, ["t", "P", "V", "phase"]);
    let s = summary(&out.path().join("revival_fock.summary.json"));
    let t_rev = s["t_rev"].as_f64().unwrap();
    let t = csv.col("t");
    let v = csv.col("V");
    // 801 points over two periods put π/ω₁ on row 200.
    assert!((t[200] - t_rev).abs() < 1e-12 * t_rev);
    assert!((v[200] - 1.0).abs() < 1e-8, "V(pi/w1) = {}", v[200]);
    assert!((s["V_rev"].as_f64().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn fock_revival_with_gravity_needs_full_period() {
    let out = tempfile::tempdir().unwrap();
    run_config("ramsey", &config("revival_fock_gravity.json"), out.path());
    let s = summary(&out.path().join("revival_fock_gravity.summary.json"));
    assert!(s["V_rev"].as_f64().unwrap() < 0.99);
    assert!((s["V_two_rev"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    let ratio = s["t_min"].as_f64().unwrap() / (s["t_rev"].as_f64().unwrap() / 2.0);
    assert!((ratio - 1.0).abs() < 0.1, "t_min ratio {ratio}");
}

#[test]
fn vacuum_revival_visibility() {
    let out = tempfile::tempdir().unwrap();
    run_config("ramsey", &config("revival_vacuum.json"), out.path());
    let expect = (-25.0f64).exp();
    let csv = Csv::read(&out.path().join("revival_vacuum.csv"));
    let va = csv.col("V_analytic");
    assert!(((va[200] - expect) / expect).abs() < 1e-9, "{}", va[200]);
    let s = summary(&out.path().join("revival_vacuum.summary.json"));
    assert!(((s["V_rev_analytic"].as_f64().unwrap() - expect) / expect).abs() < 1e-12);
    assert!((s["V_rev"].as_f64().unwrap() - expect).abs() < 1e-6);
    assert_eq!(s["oracle"]["pass"], Value::Bool(true));
}

#[test]
fn malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "{ not json",
        r#"{"experiment": "warp", "output": {"path": "x.csv"}}"#,
        r#"{"experiment": "drive", "system": {"unit_system": "natural", "M0": 1, "k": 1,
            "delta_m_ratios": [0, 0.001], "c": 10}, "cycles": 3, "extra": 1, "output": {"path": "x.csv"}}"#,
        r#"{"experiment": "drive", "system": {"unit_system": "natural", "M0": -1, "k": 1,
            "delta_m_ratios": [0, 0.001], "c": 10}, "cycles": 3, "output": {"path": "x.csv"}}"#,
        r#"{"experiment": "shift", "system": {"M0": 1e-26, "omega0": 1e6, "levels": [0, 1e-19]},
            "omega0": {"start": 1e2, "stop": 1e7, "points": 5, "scale": "log"}, "output": {"path": "x.csv"}}"#,
    ];
    for text in cases {
        let cfg = write_config(dir.path(), text);
        let o = run(&["drive", "--config", cfg.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(2), "{text}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let o = run(&["drive", "--config", dir.path().join("missing.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["drive"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_3() {
    // An auto-sized grid outgrows a small truncation.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment": "qfunc", "system": {"unit_system": "natural", "M0": 1, "k": 1,
            "delta_m_ratios": [0, 0.01], "c": 10}, "dim": 24, "grid": {"spacing": 0.5},
            "output": {"path": "q.csv"}}"#,
    );
    let o = run(&["qfunc", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn shift_minimum_near_4khz() {
    let out = tempfile::tempdir().unwrap();
    run_config("shift", &config("shift_minimum.json"), out.path());
    let csv = Csv::read(&out.path().join("shift_minimum.csv"));
    let (w, n, marks, delta) = (csv.col("omega0"), csv.col("n"), csv.col("is_min"), csv.col("delta_exact"));
    let temp = csv.col("temperature");
    let i = (0..w.len()).find(|&i| n[i] == 0.0 && temp[i] == 0.0 && marks[i] == 1.0).unwrap();
    assert!((3.5e3..5.0e3).contains(&w[i]), "grid minimum at {}", w[i]);
    let best = (0..w.len())
        .filter(|&i| n[i] == 0.0 && temp[i] == 0.0)
        .map(|i| delta[i].abs())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(delta[i].abs(), best);
    let s = summary(&out.path().join("shift_minimum.summary.json"));
    let m = &s["minima"][0];
    let (wc, wn) = (m["omega_min"].as_f64().unwrap(), m["numeric_omega_min"].as_f64().unwrap());
    assert!(((wc - wn) / wc).abs() < 1e-9);
    assert!((1e-22..3e-22).contains(&m["delta_min"].as_f64().unwrap().abs()));
}

#[test]
fn drive_deviation_is_small() {
    let out = tempfile::tempdir().unwrap();
    run_config("drive", &config("drive.json"), out.path());
    let csv = Csv::read(&out.path().join("drive.csv"));
    assert_eq!(csv.rows.len(), 100);
    assert_eq!(csv.col("k")[99], 100.0);
    let s = summary(&out.path().join("drive.summary.json"));
    // O((ΔM/M₀)²)·N with ΔM/M₀ = 10⁻³, N = 100
    let dev = s["max_deviation"].as_f64().unwrap();
    assert!(dev < 1e-4, "{dev}");
    assert!(s["two_n_r"].as_f64().unwrap() < 0.0);
}

#[test]
fn qfunc_vacuum_peak() {
    let out = tempfile::tempdir().unwrap();
    run_config("qfunc", &config("qfunc_vacuum.json"), out.path());
    let csv = Csv::read(&out.path().join("qfunc_vacuum.csv"));
    let row = csv.rows.iter().find(|r| r[0] == 0.0 && r[1] == 0.0).unwrap();
    assert!((row[2] - 1.0).abs() < 1e-14);
    assert!((row[3] - 1.0).abs() < 1e-14 && row[4].abs() < 1e-14);
    let s = summary(&out.path().join("qfunc_vacuum.summary.json"));
    assert!((s["normalization"].as_f64().unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn sweep_rows_follow_axis_order() {
    let out = tempfile::tempdir().unwrap();
    run_config("sweep", &config("sweep_thermal.json"), out.path());
    let csv = Csv::read(&out.path().join("sweep_thermal.csv"));
    assert_eq!(csv.header, ["omega0", "temperature", "thermal_shift"]);
    assert_eq!(csv.rows.len(), 27);
    let w = csv.col("omega0");
    let t = csv.col("temperature");
    assert_eq!((w[0], w[8], w[9]), (1e5, 1e5, 1e6));
    assert!(t[1] > t[0] && t[9] == t[0]);
    assert!(csv.col("thermal_shift").iter().all(|d| *d < 0.0));
}

#[test]
fn identical_configs_give_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        run_config("shift", &config("shift_minimum.json"), d.path());
    }
    for f in ["shift_minimum.csv", "shift_minimum.summary.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let text = std::fs::read_to_string(a.path().join("shift_minimum.csv")).unwrap();
    assert!(text.contains("# config_sha256: ") && text.contains("# constants: CODATA2018-v1"));
    assert!(!text.contains("# generated"));

    let c = tempfile::tempdir().unwrap();
    let o = run(&["shift", "--config", config("shift_minimum.json").to_str().unwrap()], c.path());
    assert!(o.status.success());
    let stamped = std::fs::read_to_string(c.path().join("shift_minimum.csv")).unwrap();
    assert!(stamped.contains("# generated: "));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["sweep", "--config", config("sweep_thermal.json").to_str().unwrap(), "--no-timestamp"])
        .env("TRAPMASS_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("sweep_thermal.csv").exists());
}

#[test]
fn json_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("drive.json")).unwrap().replace(
        r#""output": { "path": "drive.csv" }"#,
        r#""output": { "path": "drive.json", "format": "json" }"#,
    );
    let cfg = write_config(dir.path(), &text);
    run_config("drive", &cfg, dir.path());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("drive.json")).unwrap()).unwrap();
    assert_eq!(v["columns"], serde_json::json!(["k", "P_exact", "P_approx"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 100);
}

#[test]
fn wrong_experiment_for_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["ramsey", "--config", config("drive.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_all_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--all", "--no-timestamp"], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["summary"]["all_pass"], Value::Bool(true));
    assert!(report["summary"]["missing"].as_array().unwrap().is_empty());
    assert!(!stdout.contains("FAIL"));
}
