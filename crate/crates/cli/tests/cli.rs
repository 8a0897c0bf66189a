use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use graphon::measures::FlatnessWitness;
use graphon::multiway::MultiwayMatrixSet;
use graphon::order::{EnvelopeSample, OrderVerdict};
use graphon::reproduce::Report;
use graphon::StepGraphon;
use serde_json::Value;
use tempfile::TempDir;

fn graphon(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphon")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

/// Field-wise comparison of two JSON documents with numeric slack.
fn json_close(a: &Value, b: &Value, tol: f64) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => (x.as_f64().unwrap() - y.as_f64().unwrap()).abs() <= tol,
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| json_close(p, q, tol)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| json_close(v, w, tol)))
        }
        _ => a == b,
    }
}

fn round_trips<T: serde::de::DeserializeOwned + serde::Serialize>(text: &str) {
    let emitted: Value = serde_json::from_str(text).unwrap();
    let parsed: T = serde_json::from_str(text).unwrap();
    let again = serde_json::to_value(&parsed).unwrap();
    assert!(json_close(&emitted, &again, 1e-12), "{emitted} vs {again}");
}

fn setup() -> TempDir {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(code(&graphon(p, &["build", "--name", "bipartite", "--out", "b.json"])), 0);
    assert_eq!(code(&graphon(p, &["build", "--name", "constant", "--c", "0.5", "--out", "h.json"])), 0);
    write(p, "dirac.json", r#"{"atoms":[0.5],"masses":[1.0]}"#);
    write(p, "two.json", r#"{"atoms":[0.0,1.0],"masses":[0.5,0.5]}"#);
    dir
}

#[test]
fn named_graphons_round_trip() {
    let dir = TempDir::new().unwrap();
    for args in [
        vec!["build", "--name", "constant", "--c", "0.3"],
        vec!["build", "--name", "bipartite"],
        vec!["build", "--name", "w1", "--eps", "0.125"],
        vec!["build", "--name", "w2", "--eps", "0.125"],
        vec!["build", "--name", "u1", "--eps", "0.0625"],
        vec!["build", "--name", "u2", "--eps", "0.125"],
    ] {
        let mut args = args.clone();
        args.extend(["--json", "--out", "g.json"]);
        let o = graphon(dir.path(), &args);
        assert_eq!(code(&o), 0, "{args:?}");
        let text = stdout(&o);
        round_trips::<StepGraphon>(&text);
        let file = fs::read_to_string(dir.path().join("g.json")).unwrap();
        assert_eq!(file, text);
    }
}

#[test]
fn scalar_commands_report_known_values() {
    let dir = setup();
    let p = dir.path();
    let o = graphon(p, &["build", "--name", "u1", "--eps", "0.125", "--out", "u1.json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&graphon(p, &["density", "--w", "u1.json", "--json"]))).unwrap();
    assert!((v["edge_density"].as_f64().unwrap() - 0.71875).abs() < 1e-12);
    let v: Value =
        serde_json::from_str(&stdout(&graphon(p, &["intf", "--w", "b.json", "--f", "x2", "--json"]))).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    for mode in ["--exact", "--heuristic"] {
        let o = graphon(p, &["cutnorm", "--u", "b.json", "--w", "h.json", mode, "--json"]);
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert!((v["value"].as_f64().unwrap() - 0.125).abs() < 1e-12);
    }
    let o = graphon(p, &["wstar", "--u", "h.json", "--w", "h.json", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["distance"].as_f64().unwrap(), 0.0);
}

#[test]
fn flatness_exit_codes() {
    let dir = setup();
    let p = dir.path();
    let o = graphon(p, &["flatness", "--l1", "dirac.json", "--l2", "two.json", "--json"]);
    assert_eq!(code(&o), 0);
    round_trips::<FlatnessWitness>(&stdout(&o));
    let o = graphon(p, &["flatness", "--l1", "two.json", "--l2", "dirac.json", "--exact-rational", "--json"]);
    assert_eq!(code(&o), 3);
    let w: FlatnessWitness = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!w.feasible);
}

#[test]
fn order_check_exit_codes() {
    let dir = setup();
    let p = dir.path();
    let o = graphon(p, &["order", "check", "--u", "h.json", "--w", "b.json", "--json"]);
    assert_eq!(code(&o), 0);
    round_trips::<OrderVerdict>(&stdout(&o));
    let o = graphon(p, &["order", "check", "--u", "b.json", "--w", "h.json"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).starts_with("status refuted"));
}

#[test]
fn usage_and_input_errors_exit_one() {
    let dir = setup();
    let p = dir.path();
    assert_eq!(code(&graphon(p, &["frobnicate"])), 1);
    assert_eq!(code(&graphon(p, &["build", "--name", "w1", "--eps", "0.1"])), 1);
    assert_eq!(code(&graphon(p, &["density", "--w", "missing.json"])), 1);
    write(p, "bad.json", r#"{"weights":[0.5,0.4],"values":[[0,1],[1,0]]}"#);
    assert_eq!(code(&graphon(p, &["density", "--w", "bad.json"])), 1);
    assert_eq!(code(&graphon(p, &["--help"])), 0);
}

#[test]
fn seeded_commands_are_byte_identical() {
    let dir = setup();
    let p = dir.path();
    let runs: [&[&str]; 4] = [
        &["order", "envelope", "--w", "b.json", "--n", "8", "--count", "20", "--depth", "3", "--seed", "7", "--json"],
        &["multiway", "sample", "--w", "b.json", "--a", "0.25,0.75", "--count", "30", "--seed", "1", "--json"],
        &["cutdist", "--u", "b.json", "--w", "h.json", "--budget", "4", "--seed", "3", "--json"],
        &["reproduce", "--which", "multiway", "--seed", "2", "--json"],
    ];
    for args in runs {
        let first = graphon(p, args);
        let second = graphon(p, args);
        assert_eq!(code(&first), 0, "{args:?}");
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

#[test]
fn multiway_and_envelope_round_trip() {
    let dir = setup();
    let p = dir.path();
    let o = graphon(p, &["order", "envelope", "--w", "b.json", "--n", "8", "--count", "5", "--depth", "2", "--json"]);
    round_trips::<EnvelopeSample>(&stdout(&o));
    let o = graphon(p, &["multiway", "sample", "--w", "b.json", "--a", "0.5,0.5", "--count", "10", "--out", "sb.json"]);
    assert_eq!(code(&o), 0);
    let o =
        graphon(p, &["multiway", "sample", "--w", "h.json", "--a", "0.5,0.5", "--deterministic", "--out", "sh.json"]);
    assert_eq!(code(&o), 0);
    round_trips::<MultiwayMatrixSet>(&fs::read_to_string(p.join("sb.json")).unwrap());
    let o = graphon(p, &["multiway", "hausdorff", "--su", "sb.json", "--sw", "sb.json", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["distance"].as_f64().unwrap(), 0.0);
    let o = graphon(p, &["multiway", "hausdorff", "--su", "sb.json", "--sw", "sh.json", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["distance"].as_f64().unwrap() > 0.0);
}

#[test]
fn reproduce_reports_parse_and_pass() {
    let dir = TempDir::new().unwrap();
    for which in ["chessboard", "flatness"] {
        let o = graphon(dir.path(), &["reproduce", "--which", which, "--json"]);
        assert_eq!(code(&o), 0, "{which}");
        round_trips::<Report>(&stdout(&o));
    }
    let o = graphon(dir.path(), &["reproduce", "--which", "counterexample", "--eps", "0.015625"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("U2 strip integral"));
}

#[test]
fn graphon_can_come_from_stdin() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_graphon"))
        .args(["density", "--w", "-", "--json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(br#"{"weights":[0.5,0.5],"values":[[0.0,1.0],[1.0,0.0]]}"#).unwrap();
    let o = child.wait_with_output().unwrap();
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["edge_density"].as_f64().unwrap(), 0.5);
}
