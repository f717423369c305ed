use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn geneflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geneflow")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn empty_experiment_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"domain": {"kind": "interval", "L": 1.0}}"#);
    let out = geneflow(&["run", "--scenario", &s, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment"));
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", "{\n  \"experiment\": \"eigen\",\n  \"grid\": ,\n}");
    let out = geneflow(&["run", "--scenario", &s]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn out_of_range_and_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let bad_theta = write(dir.path(), "a.json", r#"{"experiment": "eigen", "f": {"kind": "cubic", "theta": 0.7}}"#);
    assert_eq!(geneflow(&["run", "--scenario", &bad_theta]).status.code(), Some(2));
    let unknown = write(dir.path(), "b.json", r#"{"experiment": "eigen", "colour": 3}"#);
    assert_eq!(geneflow(&["run", "--scenario", &unknown]).status.code(), Some(2));
    let missing = write(dir.path(), "c.json", r#"{"experiment": "simulate", "runs": [{"name": "r", "initial": {"kind": "file", "path": "nope.csv"}, "control": {"kind": "static", "u": 0}}]}"#);
    assert_eq!(geneflow(&["run", "--scenario", &missing]).status.code(), Some(2));
    assert_eq!(geneflow(&["preset", "fig99"]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"experiment": "simulate", "dt": 5.0, "runs": [{"name": "r", "initial": {"kind": "const", "c": 1}, "control": {"kind": "static", "u": 0}}]}"#,
    );
    let out = geneflow(&["simulate", "--scenario", &s, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn eigen_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"domain": {"kind": "interval", "L": 1.0}, "grid": 513}"#);
    let o = dir.path().join("o");
    let out = geneflow(&["eigen", "--scenario", &s, "--out", o.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&o.join("eigen.json"));
    let lambda = v["lambda"].as_f64().unwrap();
    assert!((lambda - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-4);
    assert_eq!(v["n"], 513);
    let csv = fs::read_to_string(o.join("eigen.csv")).unwrap();
    assert!(csv.starts_with("# scenario_hash="));
    assert!(csv.lines().nth(1).unwrap().starts_with("x,eigenprofile"));
}

#[test]
fn simulation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"experiment": "simulate", "grid": 41, "t_end": 2.0, "seed": 7,
            "runs": [{"name": "noise", "initial": {"kind": "random", "lo": 0.0, "hi": 1.0}, "control": {"kind": "static", "u": 0}, "target": "0"}]}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for o in [&a, &b] {
        assert!(geneflow(&["run", "--scenario", &s, "--out", o.to_str().unwrap()]).status.success());
    }
    let fa = fs::read(a.join("snapshots_noise.csv")).unwrap();
    let fb = fs::read(b.join("snapshots_noise.csv")).unwrap();
    assert_eq!(fa, fb);
    let c = dir.path().join("c");
    assert!(geneflow(&["run", "--scenario", &s, "--seed", "8", "--out", c.to_str().unwrap()]).status.success());
    assert_ne!(fa, fs::read(c.join("snapshots_noise.csv")).unwrap());
}

#[test]
fn profile_file_initial_datum() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p0.csv", "x,p\n-1,0\n0,0.9\n1,0\n");
    let s = write(
        dir.path(),
        "s.json",
        r#"{"experiment": "simulate", "grid": 41, "t_end": 1.0,
            "runs": [{"name": "tent", "initial": {"kind": "file", "path": "p0.csv"}, "control": {"kind": "static", "u": 0}}]}"#,
    );
    let o = dir.path().join("o");
    let out = geneflow(&["run", "--scenario", &s, "--out", o.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(o.join("snapshots_tent.csv")).unwrap();
    let first: Vec<f64> = rdr.records().take(41).map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert!((first[20] - 0.9).abs() < 1e-12);
}

#[test]
fn transform_check_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"grid": 101, "t_end": 1.0, "density": {"kind": "affine", "a": 1, "b": 1}}"#);
    let o = dir.path().join("o");
    let out = geneflow(&["transform-check", "--scenario", &s, "--out", o.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&o.join("transform.json"));
    assert!((v["theta_image"].as_f64().unwrap() - (1.33f64.powi(3) - 1.0) / 7.0).abs() < 1e-10);
    assert_eq!(v["validation"], "ok");
    assert!(v["discrepancy"].as_f64().unwrap() < 1e-2);
}

#[test]
fn phase_portrait_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("fig4");
    let out = geneflow(&["preset", "fig4", "--out", o.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(o.join("phase_portrait_one.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("E = F(1)") && svg.contains("stroke=\"red\""));
    let summary = json(&o.join("summary.json"));
    assert_eq!(summary["experiment"], "phase-portrait");
}

#[test]
fn barriers_on_wide_interval() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"preset": "fig4", "boundary": "both", "domain": {"kind": "interval", "L": 10.0}}"#,
    );
    let o = dir.path().join("o");
    let out = geneflow(&["barriers", "--scenario", &s, "--out", o.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["barrier_one.csv", "barrier_zero.csv", "trajectory_one.csv", "trajectory_one.events.json", "phase_portrait_zero.svg"] {
        assert!(o.join(name).exists(), "{name}");
    }
    let traj = fs::read_to_string(o.join("trajectory_one.csv")).unwrap();
    assert!(traj.lines().nth(1).unwrap().starts_with("r,p,v"));
}

#[test]
fn control_mintime_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"domain": {"kind": "interval", "L": 1.0}, "grid": 61, "horizons": [1, 2, 4, 8, 16, 32]}"#,
    );
    let o = dir.path().join("o");
    let out = geneflow(&["control", "mintime", "--family", "gauss-in", "--sigmas", "40,4", "--scenario", &s, "--out", o.to_str().unwrap(), "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(o.join("mintime_gauss_in.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["parameter", "T_min"]);
    assert_eq!(rdr.records().count(), 2);
}

#[test]
fn report_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"domain": {"kind": "interval", "L": 1.0}, "grid": 61, "t_end": 100}"#);
    let o = dir.path().join("o");
    let out = geneflow(&["control", "report", "--scenario", &s, "--out", o.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&o.join("report.json"));
    assert_eq!(v["verdicts"].as_array().unwrap().len(), 6);
}
