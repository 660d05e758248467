//! End-to-end tests of the binary: output shapes and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name);
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solve_bounded_examples() {
    for (file, value) in [("fig1-c.json", 2), ("fig1-d.json", 2), ("fig1-e.json", 1)] {
        let out = run(&["solve", &fixture(file)]);
        let json = stdout_json(&out);
        assert_eq!(json["status"], "bounded", "{file}");
        assert_eq!(json["value"], value, "{file}");
    }
}

#[test]
fn solve_unbounded_with_witness() {
    let out = run(&["solve", &fixture("intro.json")]);
    let json = stdout_json(&out);
    assert_eq!(json["status"], "unbounded");
    assert_eq!(json["witness"], "(a.(b)#.a)");
}

#[test]
fn unbounded_subcommand_controls_witness_output() {
    let out = run(&["unbounded", &fixture("intro.json")]);
    let json = stdout_json(&out);
    assert_eq!(json["status"], "unbounded");
    assert!(json.get("witness").is_none());

    let out = run(&["unbounded", &fixture("intro.json"), "--witness"]);
    let json = stdout_json(&out);
    assert_eq!(json["witness"], "(a.(b)#.a)");

    let out = run(&["unbounded", &fixture("fig1-c.json"), "--strategy", "bounded"]);
    assert_eq!(stdout_json(&out)["status"], "bounded");
}

#[test]
fn maxflow_values_and_cut() {
    let out = run(&["maxflow", &fixture("fig1.json"), "--word", "c,c,c,c"]);
    assert_eq!(stdout_json(&out)["value"], 2);

    let out = run(&["maxflow", &fixture("fig1.json"), "--word", "e,c"]);
    assert_eq!(stdout_json(&out)["value"], "omega");

    let out = run(&["maxflow", &fixture("fig1.json"), "--word", "c,c,c,c", "--cut", "--tokens", "2"]);
    let json = stdout_json(&out);
    assert_eq!(json["cut"]["cost"], 2);
    assert_eq!(json["tokens"].as_array().unwrap().len(), 2);

    let out = run(&["maxflow", &fixture("fig1.json"), "--word", "c,zz"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_table() {
    let out = run(&["oracle", &fixture("fig1-c.json"), "--max-len", "5"]);
    let json = stdout_json(&out);
    assert_eq!(json["best"], 2);
    assert_eq!(json["table"], serde_json::json!([0, 0, 1, 2, 2]));

    let out = run(&["oracle", &fixture("fig1-ce.json"), "--max-len", "2"]);
    let json = stdout_json(&out);
    assert_eq!(json["best"], "omega");
    assert_eq!(json["word"], serde_json::json!(["e", "c"]));
}

#[test]
fn fair_edges_flag() {
    let out = run(&["unbounded", &fixture("intro.json"), "--edges", "v1,v4;v3,v4"]);
    assert_eq!(stdout_json(&out)["status"], "unbounded");

    let out = run(&["unbounded", &fixture("intro.json"), "--edges", "v1,v4;v2,v1"]);
    assert_eq!(stdout_json(&out)["status"], "bounded");
}

#[test]
fn nfa_constraints() {
    // Embedded automaton (a b* a): still unbounded.
    let out = run(&["solve", &fixture("intro-abstara.json")]);
    assert_eq!(stdout_json(&out)["status"], "unbounded");

    // External automaton accepting only {a, aba}: bounded with value 1.
    let nfa = r#"{
        "states": 4,
        "initial": ["q0"],
        "final": ["q1", "q3"],
        "delta": [["q0", "a", "q1"], ["q1", "b", "q2"], ["q2", "a", "q3"]]
    }"#;
    let dir = std::env::temp_dir().join("seqflow-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("finite.json");
    std::fs::write(&path, nfa).unwrap();
    let out = run(&[
        "solve",
        &fixture("intro.json"),
        "--nfa",
        path.to_str().unwrap(),
    ]);
    let json = stdout_json(&out);
    assert_eq!(json["status"], "bounded");
    assert_eq!(json["value"], 1);
}

#[test]
fn strict_space_mode() {
    let dir = std::env::temp_dir().join("seqflow-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("tiny.json");
    std::fs::write(
        &path,
        r#"{
            "vertices": ["s", "t"],
            "source": "s",
            "target": "t",
            "capacities": {"p": {"s->t": "omega"}}
        }"#,
    )
    .unwrap();
    let out = run(&["unbounded", path.to_str().unwrap(), "--strict-space", "--height", "1"]);
    assert_eq!(stdout_json(&out)["status"], "unbounded");

    let bounded = dir.join("tiny-bounded.json");
    std::fs::write(
        &bounded,
        r#"{
            "vertices": ["s", "t"],
            "source": "s",
            "target": "t",
            "capacities": {"p": {"s->t": 1}}
        }"#,
    )
    .unwrap();
    let out = run(&["unbounded", bounded.to_str().unwrap(), "--strict-space", "--height", "2"]);
    assert_eq!(stdout_json(&out)["status"], "unknown");
}

#[test]
fn analyze_prints_the_tree() {
    let out = run(&[
        "analyze",
        &fixture("intro.json"),
        "--word",
        "a,b,b,b,b,b,b,b,b,b,b,a",
        "--sharp",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("result (a.(b)#.a)"));
    assert!(text.contains("idempotent (iterated) (b)#"));
    assert!(text.contains("leaf a [0, 1)"));
}

#[test]
fn exit_codes() {
    // Parse error.
    let dir = std::env::temp_dir().join("seqflow-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.json");
    std::fs::write(&path, "{\"broken\":").unwrap();
    let out = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // Validation error.
    let invalid = dir.join("invalid.json");
    std::fs::write(
        &invalid,
        r#"{"vertices": ["a", "b"], "source": "a", "target": "b",
            "capacities": {"x": {"b->a": 1}}}"#,
    )
    .unwrap();
    let out = run(&["solve", invalid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Usage error.
    let out = run(&["solve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(64));

    // Resource limit.
    let out = Command::new(env!("CARGO_BIN_EXE_seqflow"))
        .args(["solve", &fixture("intro.json")])
        .env("SEQFLOW_MAX_CLOSURE", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(70));
}
