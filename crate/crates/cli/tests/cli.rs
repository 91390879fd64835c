use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn tck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tck")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn solve_car_wash() {
    let dir = tempfile::tempdir().unwrap();
    let result = dir.path().join("result.json");
    let out = tck(&["solve", scenario("car_wash.json").to_str().unwrap(), "-o", result.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert_eq!(doc["runs"].as_array().unwrap().len(), 28);
    assert_eq!(doc["verdict"]["solvable"], true);
    assert_eq!(doc["runs"][0]["responses"]["D"], 8);
    assert_eq!(doc["runs"][27]["run"], "never");
    assert_eq!(doc["runs"][27]["responses"]["D"], Value::Null);

    let out = tck(&[
        "verify",
        scenario("car_wash.json").to_str().unwrap(),
        "--result",
        result.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn unsolvable_exit_status() {
    let out = tck(&["solve", scenario("unsat.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(json(&out)["solvable"], false);
}

#[test]
fn tampered_result_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let result = dir.path().join("r.json");
    let s = scenario("ordered2.json");
    assert!(tck(&["solve", s.to_str().unwrap(), "-o", result.to_str().unwrap()]).status.success());
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    let last = doc["runs"].as_array().unwrap().len() - 1;
    doc["runs"][last]["responses"]["a"] = Value::from(3);
    std::fs::write(&result, doc.to_string()).unwrap();
    let out = tck(&["verify", s.to_str().unwrap(), "--result", result.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(6));
    let report = json(&out);
    let failed: Vec<&str> = report["checks"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"after-trigger"), "{failed:?}");
}

#[test]
fn delayed_result_is_not_optimal() {
    let dir = tempfile::tempdir().unwrap();
    let result = dir.path().join("r.json");
    let s = scenario("simultaneous2.json");
    assert!(tck(&["solve", s.to_str().unwrap(), "-o", result.to_str().unwrap()]).status.success());
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    // both agents one step later everywhere stays a solution but is dominated
    for run in doc["runs"].as_array_mut().unwrap() {
        for a in ["a", "b"] {
            if let Some(t) = run["responses"][a].as_u64() {
                run["responses"][a] = Value::from(t + 1);
            }
        }
    }
    std::fs::write(&result, doc.to_string()).unwrap();
    let out = tck(&["verify", s.to_str().unwrap(), "--result", result.to_str().unwrap(), "--optimal"]);
    assert_eq!(out.status.code(), Some(6));
    let report = json(&out);
    assert_eq!(report["checks"]["checks"][1]["passed"], true);
    assert_eq!(report["optimality"]["optimal"], false);
}

#[test]
fn parse_and_io_errors() {
    assert_eq!(tck(&["solve", "/nonexistent/scenario.json"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"agents": ["a"], "trigger_times": [0]}"#).unwrap();
    assert_eq!(tck(&["solve", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&bad, r#"{"agents":["a","b"],"trigger_times":[0],"obs_delay":{"a":[0,0],"b":[0,0]},"delta":{"a->b":0}}"#).unwrap();
    assert_eq!(tck(&["generate", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(tck(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn oracle_guard_breach() {
    let out = tck(&["oracle", scenario("car_wash.json").to_str().unwrap(), "--format", "table"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("fixed-point  skipped"), "{text}");
}

#[test]
fn flags_change_the_system() {
    let s = scenario("ordered2.json");
    let with = json(&tck(&["generate", s.to_str().unwrap()]));
    let without = json(&tck(&["generate", s.to_str().unwrap(), "--no-never-run"]));
    let n = with["runs"].as_array().unwrap().len();
    assert_eq!(without["runs"].as_array().unwrap().len(), n - 1);
    let asynchronous = json(&tck(&["generate", s.to_str().unwrap(), "--async-mode"]));
    assert_eq!(asynchronous["sync_mode"], "asynchronous");
    assert_eq!(with["sync_mode"], "synchronous");
}

#[test]
fn gfp_diagnostics() {
    let out = json(&tck(&["gfp", scenario("car_wash.json").to_str().unwrap(), "--psi", "trigger"]));
    assert_eq!(out["psi"], "trigger");
    assert!(out["iterations"].as_u64().unwrap() >= 1);
    assert_eq!(out["eventually_attained"]["L"], false);
    let out = json(&tck(&["gfp", scenario("car_wash.json").to_str().unwrap()]));
    assert_eq!(out["eventually_attained"]["D"], true);
    assert_eq!(out["delta"]["D->R"], -6);
}

#[test]
fn explicit_paths_in_oracle() {
    let out = tck(&["oracle", scenario("ordered2.json").to_str().unwrap(), "--explicit-paths"]);
    assert!(out.status.success());
    let doc = json(&out);
    let nested = &doc["checks"][2];
    assert_eq!(nested["status"], "passed");
    assert!(nested["detail"]["depths"].as_array().unwrap().iter().all(|d| d["explicit"] == true));
}

#[test]
fn props_suite() {
    let out = tck(&["props", "--seed", "0", "--cases", "60"]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["seed"], 0);
    assert!(doc["groups"].as_array().unwrap().iter().all(|g| g["failures"] == 0 || g["asserted"] == false));
}

#[test]
fn report_table() {
    let out = tck(&["report", scenario("joint.json").to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("joint (horizon "));
    assert!(text.lines().any(|l| l.starts_with("never")));
}
