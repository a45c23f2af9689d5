use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn nashflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nashflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_parallel_arcs_writes_two_phases() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("profile.json");
    let o = nashflow(&[
        "solve",
        "--instance",
        path_str(&data("parallel_arcs.json")),
        "--phi-max",
        "inf",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let profile: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let phases = profile["phases"].as_array().unwrap();
    assert_eq!(phases.len(), 2);
    assert_eq!(phases[0]["end"], "3/2");
    assert_eq!(phases[1]["end"], "inf");

    let o = nashflow(&["check", "--profile", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS"));
}

#[test]
fn corrupted_profile_fails_check() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    let o = nashflow(&[
        "solve",
        "--instance",
        path_str(&data("parallel_arcs.json")),
        "--out",
        path_str(&good),
    ]);
    assert_eq!(o.status.code(), Some(0));

    // Move the second phase's flow split from (1/2, 1/2) to (3/4, 1/4).
    let mut profile: Value =
        serde_json::from_str(&std::fs::read_to_string(&good).unwrap()).unwrap();
    let flows = profile["phases"][1]["thin_flow"]["arc_flows"]
        .as_array_mut()
        .unwrap();
    flows[0]["value"] = "3/4".into();
    flows[1]["value"] = "1/4".into();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, profile.to_string()).unwrap();

    let o = nashflow(&["check", "--profile", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("FAIL"), "{err}");
    assert!(err.contains("arc balance"), "{err}");
}

#[test]
fn csv_export_of_single_arc_has_unit_slope_labels() {
    let o = nashflow(&[
        "export",
        "--instance",
        path_str(&data("single_arc.json")),
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    for node in ["s", "t"] {
        let f = format!("label[{node}]");
        let slope = rows
            .iter()
            .find(|r| r[col("function")] == f && r[col("kind")] == *"final_slope")
            .unwrap_or_else(|| panic!("no slope row for {f}"));
        assert_eq!(&slope[col("value")], "1");
        assert_eq!(&slope[col("value_approx")], "1");
    }
    assert!(rows.iter().all(|r| !r[col("function")].contains("_super")));
}

#[test]
fn keep_super_sink_and_subflows_add_rows() {
    let base = nashflow(&[
        "export",
        "--instance",
        path_str(&data("crossing_sinks.json")),
    ]);
    let full = nashflow(&[
        "export",
        "--instance",
        path_str(&data("crossing_sinks.json")),
        "--keep-super-sink",
        "--subflows",
    ]);
    let base: Vec<Value> = serde_json::from_slice(&base.stdout).unwrap();
    let full: Vec<Value> = serde_json::from_slice(&full.stdout).unwrap();
    assert!(full.len() > base.len());
    assert!(full.iter().any(|r| r["sink"] == 1));
    assert!(full
        .iter()
        .any(|r| r["function"].as_str().unwrap().contains("_super")));
}

#[test]
fn decompose_splits_demand_evenly() {
    let o = nashflow(&[
        "decompose",
        "--instance",
        path_str(&data("crossing_sinks.json")),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let d: Value = serde_json::from_slice(&o.stdout).unwrap();
    for phase in d["phases"].as_array().unwrap() {
        for sink in phase["sinks"].as_array().unwrap() {
            let shares: Vec<&str> = sink["source_flows"]
                .as_array()
                .unwrap()
                .iter()
                .map(|g| g["value"].as_str().unwrap())
                .collect();
            assert!(shares.contains(&"1/2"), "{shares:?}");
        }
    }
}

#[test]
fn thin_flow_solves_a_problem_file() {
    let o = nashflow(&[
        "thin-flow",
        "--instance",
        path_str(&data("parallel_second_phase.json")),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let tf: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(tf["labels"][0]["value"], "1/3");
    assert_eq!(tf["labels"][1]["value"], "1/2");
    assert_eq!(tf["arc_flows"][0]["value"], "1/2");
}

#[test]
fn input_errors_exit_with_two() {
    let o = nashflow(&["validate", "--instance", path_str(&data("bad_demand.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("5/6"));

    let o = nashflow(&["solve", "--instance", "/nonexistent/instance.json"]);
    assert_eq!(o.status.code(), Some(2));

    let o = nashflow(&[
        "solve",
        "--instance",
        path_str(&data("single_arc.json")),
        "--phi-max",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = nashflow(&[
        "solve",
        "--instance",
        path_str(&data("single_arc.json")),
        "--phase-cap",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = nashflow(&["generate", "--nodes", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_instance_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("profile.json");
    let o = nashflow(&[
        "solve",
        "--instance",
        path_str(&data("bad_demand.json")),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn phase_cap_exceeded_is_a_failure() {
    let o = nashflow(&[
        "solve",
        "--instance",
        path_str(&data("parallel_arcs.json")),
        "--phi-max",
        "inf",
        "--phase-cap",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
}

#[test]
fn generate_is_deterministic_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inst.json");
    let a = nashflow(&[
        "generate",
        "--seed",
        "7",
        "--nodes",
        "4",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(a.status.code(), Some(0));
    let b = nashflow(&["generate", "--seed", "7", "--nodes", "4"]);
    assert_eq!(std::fs::read(&out).unwrap(), b.stdout);
    let v = nashflow(&["validate", "--instance", path_str(&out)]);
    assert_eq!(v.status.code(), Some(0));
}
