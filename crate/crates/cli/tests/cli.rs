use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_tworay");

fn s1() -> Value {
    json!({"extension": {"dim": 1, "a": 0.0, "b": 1.0, "a1": [0, 0], "a2": [0, 0], "w": [0, 1]}})
}

fn s2() -> Value {
    json!({"extension": {"dim": 2, "a": 0.0, "b": 1.0,
        "a1": [0, 0, 0, 0, 0, 0, -1, 0],
        "a2": [0, 0, 0, 0, 0, 0, 2, 0],
        "w": [1, 0, 0, 0, 0, 0, 1, 0]}})
}

/// `W` swaps the kernel of `A1` onto the non-kernel of `A2`, so no boundary data is admissible.
fn s2_swapped() -> Value {
    let mut m = s2();
    m["extension"]["w"] = json!([0, 0, 1, 0, 1, 0, 0, 0]);
    m
}

fn heat() -> Value {
    json!({"heat": {"modes": 8, "phi": std::f64::consts::FRAC_PI_3}})
}

struct Run {
    dir: TempDir,
    output: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("exit code")
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn report(&self) -> Value {
        let text = fs::read_to_string(self.out().join("report.json")).expect("report.json written");
        serde_json::from_str(&text).unwrap()
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }
}

fn run_raw(command: &str, config_text: &str, extra: &[&str]) -> Run {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("scenario.json");
    fs::write(&path, config_text).unwrap();
    let output = Command::new(BIN)
        .arg(command)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .args(extra)
        .output()
        .unwrap();
    Run { dir, output }
}

fn run(command: &str, config: Value) -> Run {
    run_raw(command, &config.to_string(), &[])
}

fn scenario(command: &str, model: Value, params: Value) -> Value {
    json!({"name": format!("test-{command}"), "command": command, "model": model, "params": params})
}

fn assertion<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|a| a["name"] == name)
        .unwrap_or_else(|| panic!("no assertion {name} in {report}"))
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

#[test]
fn list_has_six_commands() {
    let output = Command::new(BIN).arg("list").output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains("check-normality → Theorem 2.5"));
    assert!(text.contains("counterexample → Theorem 3.2"));
    for name in ["verify-green", "probe-point-spectrum", "resolvent-sweep", "heat-demo"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn verify_green_exit_codes() {
    let ok = run("verify-green", scenario("verify-green", s2(), json!({"pairs": 200})));
    assert_eq!(ok.code(), 0, "{}", ok.stderr());
    let report = ok.report();
    assert_eq!(report["passed"], true);
    assert!(report["results"]["max_green_residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(report["sign_convention"]["convention"], "exchanged");

    let mut strict = scenario("verify-green", s2(), json!({"pairs": 10}));
    strict["numerics"] = json!({"quad_tol": 1e-14});
    let failed = run("verify-green", strict);
    assert_eq!(failed.code(), 1);
    assert_eq!(failed.report()["passed"], false);
    assert_eq!(assertion(&failed.report(), "green_residual")["passed"], false);

    let mut bad = scenario("verify-green", s2(), json!({}));
    bad["numerics"] = json!({"T": -1.0});
    let rejected = run("verify-green", bad);
    assert_eq!(rejected.code(), 2);
    assert!(!rejected.out().join("report.json").exists());
}

#[test]
fn check_normality_exit_codes() {
    let ok = run("check-normality", scenario("check-normality", s2(), json!({"samples": 40})));
    assert_eq!(ok.code(), 0, "{}", ok.stderr());
    let report = ok.report();
    assert_eq!(report["results"]["factor"], 2.0);
    assert_eq!(report["results"]["coupling_misclassified"], 0);

    let mut strict = scenario("check-normality", s2(), json!({"samples": 10, "coupling_pairs": 10}));
    strict["numerics"] = json!({"quad_tol": 1e-14});
    let failed = run("check-normality", strict);
    assert_eq!(failed.code(), 1);
    assert_eq!(assertion(&failed.report(), "domain_norm_difference")["passed"], false);

    // Non-Hermitian coefficient.
    let mut model = s2();
    model["extension"]["a1"] = json!([0, 0, 1, 0, 0, 0, -1, 0]);
    assert_eq!(run("check-normality", scenario("check-normality", model, json!({}))).code(), 2);
}

#[test]
fn probe_point_spectrum_exit_codes() {
    let grid = json!({"grid": {"re_min": -2, "re_max": 2, "im_min": -2, "im_max": 2, "n_re": 41, "n_im": 41}});
    let ok = run("probe-point-spectrum", scenario("probe-point-spectrum", s1(), grid.clone()));
    assert_eq!(ok.code(), 0, "{}", ok.stderr());
    assert_eq!(ok.report()["results"]["eigenfunctions_found"], 0);
    let (header, rows) = csv_rows(&ok.out().join("point_spectrum.csv"));
    assert!(header.starts_with("re_lambda,im_lambda,eigenfunction_exists"));
    assert_eq!(rows.len(), 41 * 41);

    let failed = run("probe-point-spectrum", scenario("probe-point-spectrum", s2_swapped(), grid));
    assert_eq!(failed.code(), 1);
    assert_eq!(assertion(&failed.report(), "admissible_dim")["passed"], false);

    let bad_grid = json!({"grid": {"re_min": -2, "re_max": 2, "im_min": -2, "im_max": 2, "n_re": 41}});
    assert_eq!(run("probe-point-spectrum", scenario("probe-point-spectrum", s1(), bad_grid)).code(), 2);
}

#[test]
fn resolvent_sweep_exit_codes() {
    let params = json!({"lambdas": [[1, 0], [-0.5, 0], [1, 3]], "inverse_distance_tol": 0.25});
    let ok = run("resolvent-sweep", scenario("resolvent-sweep", s1(), params));
    assert_eq!(ok.code(), 0, "{}", ok.stderr());
    let (header, rows) = csv_rows(&ok.out().join("resolvent_sweep.csv"));
    assert_eq!(header, "re_lambda,im_lambda,norm_estimate,obstructed_count");
    assert_eq!(rows.len(), 3);
    let estimate: f64 = rows[1][2].parse().unwrap();
    assert!((estimate - 2.0).abs() <= 0.5, "{estimate}");

    // Beyond the positive eigenvalue of A2 that mode is forced and its trace cannot be absorbed.
    let obstructed = run("resolvent-sweep", scenario("resolvent-sweep", s2(), json!({"lambdas": [[3, 0]]})));
    assert_eq!(obstructed.code(), 1);
    let report = obstructed.report();
    assert!(report["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("obstructed")));

    let on_axis = run("resolvent-sweep", scenario("resolvent-sweep", s1(), json!({"lambdas": [[0, 1]]})));
    assert_eq!(on_axis.code(), 2);
}

#[test]
fn counterexample_exit_codes() {
    let params = json!({"lambda_i": 0.7, "T_list": [10, 100]});
    let ok = run("counterexample", scenario("counterexample", heat(), params));
    assert_eq!(ok.code(), 0, "{}", ok.stderr());
    let (header, rows) = csv_rows(&ok.out().join("divergence.csv"));
    assert_eq!(header, "T,norm_sq");
    let values: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    assert_eq!(values[0].0, 10.0);
    assert!((values[0].1 - 8.500091).abs() <= 1e-5);
    assert_eq!(values[1].0, 100.0);
    assert!((values[1].1 - 98.5).abs() <= 1e-4);
    assert!(ok.report()["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("e^{t-a}")));

    let short = run("counterexample", scenario("counterexample", s1(), json!({"slope_T": [1, 2, 3]})));
    assert_eq!(short.code(), 1);
    assert_eq!(assertion(&short.report(), "slope_deviation")["passed"], false);

    // The direction must lie in the kernel of A1.
    let outside = run("counterexample", scenario("counterexample", s2(), json!({"fstar": [0, 0, 1, 0]})));
    assert_eq!(outside.code(), 2);
}

#[test]
fn heat_demo_exit_codes() {
    let ok = run("heat-demo", scenario("heat-demo", heat(), json!({})));
    assert_eq!(ok.code(), 0, "{}", ok.stderr());
    let report = ok.report();
    assert_eq!(report["model"]["modes"], 8);
    assert!(report["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("Neumann")));
    assert!(ok.out().join("resolvent_sweep.csv").exists());
    assert!(ok.out().join("divergence.csv").exists());

    let failed = run("heat-demo", scenario("heat-demo", heat(), json!({"slope_T": [1, 2, 3]})));
    assert_eq!(failed.code(), 1);
    assert_eq!(failed.report()["passed"], false);

    assert_eq!(run("heat-demo", scenario("heat-demo", s1(), json!({}))).code(), 2);
}

#[test]
fn config_errors_exit_two() {
    let body = scenario("verify-green", s1(), json!({}));
    assert_eq!(run("check-normality", body.clone()).code(), 2, "command mismatch");
    assert_eq!(run_raw("verify-green", "{not json", &[]).code(), 2);
    let mut unknown = body.clone();
    unknown["colour"] = json!("blue");
    assert_eq!(run("verify-green", unknown).code(), 2);
    let mut short = body.clone();
    short["model"]["extension"]["w"] = json!([1]);
    assert_eq!(run("verify-green", short).code(), 2);
    let bad_heat = scenario("heat-demo", json!({"heat": {"modes": 0, "phi": 1.0}}), json!({}));
    assert_eq!(run("heat-demo", bad_heat).code(), 2);
    assert_eq!(run("no-such-command", body).code(), 2);
    let missing = Command::new(BIN).arg("verify-green").output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

fn without_timestamp(mut report: Value) -> Value {
    assert!(report["generated_at"].is_string());
    report.as_object_mut().unwrap().remove("generated_at");
    report
}

#[test]
fn reruns_are_identical_apart_from_timestamp() {
    let config = scenario("resolvent-sweep", s2(), json!({"lambdas": [[-0.5, 0.2], [1.2, -1]], "probe_count": 4}));
    let first = run("resolvent-sweep", config.clone());
    let second = run("resolvent-sweep", config.clone());
    assert_eq!(first.code(), 0, "{}", first.stderr());
    assert_eq!(without_timestamp(first.report()), without_timestamp(second.report()));
    let csv = |r: &Run| fs::read(r.out().join("resolvent_sweep.csv")).unwrap();
    assert_eq!(csv(&first), csv(&second));
    assert_eq!(first.report()["seed"], 42);

    let reseeded = run_raw("resolvent-sweep", &config.to_string(), &["--seed", "7"]);
    assert_eq!(reseeded.report()["seed"], 7);
    assert_ne!(csv(&first), csv(&reseeded));
}

#[test]
fn shipped_scenarios_pass() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let command = serde_json::from_str::<Value>(&text).unwrap()["command"].as_str().unwrap().to_string();
        let result = run_raw(&command, &text, &[]);
        assert_eq!(result.code(), 0, "{}: {}", path.display(), result.stderr());
        count += 1;
    }
    assert_eq!(count, 6);
}
