use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const WORKED: &str = "qubits 2\ncbits 2\nprepz q0\nprepz q1\nrx(0.3) q0\nh q1\ncnot q1 q0\nrx(0.5) q0\ncnot q0 q1\nrx(0.7) q0\nmeasz q0 -> c0\nmeasz q1 -> c1\n";

fn pcoast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcoast"))
        .args(args)
        .output()
        .unwrap()
}

fn write_input(dir: &Path, text: &str) -> String {
    let p = dir.join("in.pq");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn without_timings(stdout: &[u8]) -> Value {
    let mut v: Value = serde_json::from_slice(stdout).unwrap();
    v.as_object_mut().unwrap().remove("timings_ms");
    v
}

#[test]
fn opt_hold_writes_circuit_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), WORKED);
    let out = dir.path().join("out.pq");
    let o = pcoast(&[
        "opt",
        "--in",
        &input,
        "--out",
        out.to_str().unwrap(),
        "--outcome",
        "hold",
        "--verify",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["verified"], Value::Bool(true));
    assert_eq!(report["config"]["outcome"], "hold");
    assert!(std::fs::read_to_string(out)
        .unwrap()
        .starts_with("qubits 2"));
}

#[test]
fn release_output_carries_classical_map() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), WORKED);
    let out = dir.path().join("out.pq");
    let o = pcoast(&[
        "opt",
        "--in",
        &input,
        "--out",
        out.to_str().unwrap(),
        "--outcome",
        "release",
        "--verify",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    let comments: Vec<&str> = text.lines().filter(|l| l.starts_with("# c")).collect();
    assert_eq!(comments.len(), 2, "{text}");
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["output"]["two_qubit_gates"], 0);
    assert_eq!(report["output"]["depth"], 3);
    assert_eq!(report["mu"].as_array().unwrap().len(), 2);
}

#[test]
fn injected_fault_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), WORKED);
    for outcome in ["hold", "release"] {
        let o = pcoast(&[
            "opt",
            "--in",
            &input,
            "--outcome",
            outcome,
            "--verify",
            "--inject-fault",
        ]);
        assert_eq!(o.status.code(), Some(3), "{outcome}");
    }
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), "qubits 1\nfrobnicate q0\n");
    assert_eq!(pcoast(&["opt", "--in", &input]).status.code(), Some(2));
    assert_eq!(
        pcoast(&["opt", "--in", "/nonexistent/x.pq"]).status.code(),
        Some(1)
    );
    assert_eq!(pcoast(&["opt"]).status.code(), Some(1));
    assert_eq!(
        pcoast(&["opt", "--in", &input, "--outcome", "maybe"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        pcoast(&["bench", "qft", "--n", "9", "--verify"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bench_emits_a_csv_row() {
    let o = pcoast(&["bench", "qft", "--n", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("qft,5,hold,generic,"));
}

#[test]
fn bench_random_verifies() {
    for gateset in ["generic", "native"] {
        let o = pcoast(&[
            "bench",
            "random",
            "--n",
            "4",
            "--gates",
            "30",
            "--seed",
            "7",
            "--verify",
            "--gateset",
            gateset,
            "--format",
            "json",
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["verified"], Value::Bool(true));
    }
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(
        dir.path(),
        "qubits 3\ncbits 1\nh q0\ncnot q0 q1\nt q1\ncz q1 q2\nrx(0.4) q2\nmeasz q2 -> c0\n",
    );
    let run = |tag: &str| {
        let out = dir.path().join(format!("{tag}.pq"));
        let o = pcoast(&[
            "opt",
            "--in",
            &input,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "3",
            "--free-node-weighting",
        ]);
        assert_eq!(o.status.code(), Some(0));
        (std::fs::read(out).unwrap(), without_timings(&o.stdout))
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn stats_and_graph_dump_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), WORKED);
    let stats = dir.path().join("stats.json");
    let graph = dir.path().join("graph.txt");
    let o = pcoast(&[
        "opt",
        "--in",
        &input,
        "--stats",
        stats.to_str().unwrap(),
        "--dump-graph",
        graph.to_str().unwrap(),
        "--emit-swaps",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(stats).unwrap()).unwrap();
    assert_eq!(v["config"]["emit_swaps"], Value::Bool(true));
    assert!(std::fs::read_to_string(graph).unwrap().contains("node 0:"));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("qubits 2"));
}

#[test]
fn metrics_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), WORKED);
    let o = pcoast(&["metrics", "--in", &input]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["two_qubit_gates"], 2);
    assert_eq!(v["measurements"], 2);
}
