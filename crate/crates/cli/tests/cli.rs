use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use ndf_core::frontend::CANONICAL_PROGRAM;
use tempfile::TempDir;

fn ndf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ndf")).args(args).output().expect("binary runs")
}

fn ndf_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ndf"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn setup() -> (TempDir, String) {
    let dir = TempDir::new().unwrap();
    let prog = dir.path().join("canonical.alg");
    std::fs::write(&prog, CANONICAL_PROGRAM).unwrap();
    (dir, prog.to_str().unwrap().to_string())
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn lower_piped_into_stats() {
    let (_dir, prog) = setup();
    let lowered = ndf(&["lower", &prog, "--model", "ndf"]);
    assert!(lowered.status.success());
    let stats = ndf_stdin(&["stats"], &lowered.stdout);
    assert_eq!(stats.status.code(), Some(0));
    let text = stdout(&stats);
    for line in ["WhereCount=3", "WhenCount=2", "StaticWhere=1", "DynamicWhere=2", "total_actors_excluding_copies=8"] {
        assert!(text.lines().any(|l| l == line), "missing {line} in\n{text}");
    }
}

#[test]
fn conventional_stats_report_gates_and_merges() {
    let (dir, prog) = setup();
    let g = path(&dir, "conv.json");
    assert!(ndf(&["lower", &prog, "--model", "conv", "-o", &g]).status.success());
    let text = stdout(&ndf(&["stats", &g]));
    assert!(text.lines().any(|l| l == "gate_plus_merge=13"), "{text}");
}

#[test]
fn run_matches_oracle_under_every_schedule() {
    let (dir, prog) = setup();
    let g = path(&dir, "g.json");
    assert!(ndf(&["lower", &prog, "-o", &g]).status.success());
    let oracle = stdout(&ndf(&["oracle", &prog, "--inputs", "x=2,y=-5"]));
    assert_eq!(oracle.trim(), "y=2 n=4");
    assert_eq!(stdout(&ndf(&["run", &g, "--inputs", "x=5,y=1"])).trim(), "y=6 n=1");
    for seed in 0..5 {
        let s = seed.to_string();
        let out = ndf(&["run", &g, "--inputs", "x=2,y=-5", "--schedule", "random", "--seed", &s]);
        assert_eq!(stdout(&out), oracle);
    }
}

#[test]
fn run_json_and_trace() {
    let (dir, prog) = setup();
    let g = path(&dir, "g.json");
    assert!(ndf(&["lower", &prog, "-o", &g]).status.success());
    let out = ndf(&["--json", "run", &g, "--inputs", "x=5,y=1", "--trace"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["outputs"]["y"], 6.0);
    assert!(!v["trace"].as_array().unwrap().is_empty());
    assert!(v["trace"][0].as_str().unwrap().contains("consumed=["));
}

#[test]
fn exit_codes() {
    let (dir, prog) = setup();
    assert_eq!(ndf(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ndf(&["lower", &prog, "--model", "neither"]).status.code(), Some(1));
    assert_eq!(ndf(&["parse", &path(&dir, "missing.alg")]).status.code(), Some(1));
    assert_eq!(ndf(&["--help"]).status.code(), Some(0));

    let bad = path(&dir, "bad.alg");
    std::fs::write(&bad, "input x; y := ;").unwrap();
    let out = ndf(&["parse", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let g = path(&dir, "g.json");
    assert!(ndf(&["lower", &prog, "-o", &g]).status.success());
    assert_eq!(ndf(&["run", &g, "--inputs", "x=five"]).status.code(), Some(1));
    assert_eq!(ndf(&["run", &g, "--inputs", "x=1"]).status.code(), Some(2));
    assert_eq!(ndf(&["map", &g, "--mesh", "2by2"]).status.code(), Some(1));
    assert_eq!(ndf(&["map", &g, "--mesh", "1x1", "--capacity", "2"]).status.code(), Some(2));

    let garbage = path(&dir, "garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    assert_eq!(ndf(&["stats", &garbage]).status.code(), Some(2));
}

#[test]
fn step_limit_from_environment() {
    let (dir, prog) = setup();
    let g = path(&dir, "g.json");
    assert!(ndf(&["lower", &prog, "-o", &g]).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_ndf"))
        .args(["run", &g, "--inputs", "x=2,y=-5"])
        .env("NDF_STEP_LIMIT", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step limit"));
}

#[test]
fn empty_program_parses() {
    let dir = TempDir::new().unwrap();
    let empty = path(&dir, "empty.alg");
    std::fs::write(&empty, "").unwrap();
    let out = ndf(&["parse", &empty]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "");
}

#[test]
fn fuse_map_and_dot() {
    let (dir, prog) = setup();
    let g = path(&dir, "g.json");
    let fused = path(&dir, "fused.json");
    assert!(ndf(&["lower", &prog, "-o", &g]).status.success());
    assert!(ndf(&["fuse", &g, "-g", "64", "-o", &fused]).status.success());
    let before = stdout(&ndf(&["run", &g, "--inputs", "x=2,y=-5"]));
    assert_eq!(stdout(&ndf(&["run", &fused, "--inputs", "x=2,y=-5"])), before);
    let where_count = |p: &str| {
        stdout(&ndf(&["stats", p])).lines().find_map(|l| l.strip_prefix("WhereCount=").map(|n| n.parse::<usize>().unwrap()))
    };
    assert!(where_count(&fused) < where_count(&g));

    let placed = path(&dir, "placed.dot");
    let out = ndf(&["map", &g, "--mesh", "2x2", "--capacity", "4", "--dot", &placed]);
    assert!(out.status.success());
    let text = stdout(&out);
    let get = |k: &str| text.lines().find_map(|l| l.strip_prefix(k)).unwrap().parse::<f64>().unwrap();
    assert!(get("objective=") <= get("initial_objective="));
    assert!(std::fs::read_to_string(&placed).unwrap().contains("cluster_0_0"));

    let dot = path(&dir, "g.dot");
    assert!(ndf(&["dot", &g, "-o", &dot]).status.success());
    assert!(std::fs::read_to_string(Path::new(&dot)).unwrap().starts_with("digraph"));
}

#[test]
fn train_emits_csv_and_is_deterministic() {
    let args = ["train", "--hidden", "4", "--mode", "end2end", "--seeds", "2", "--epochs", "20", "--points", "32"];
    let a = ndf(&args);
    assert!(a.status.success());
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("mode,hidden,seed,mse"));
    assert_eq!(text.lines().count(), 3);
    assert_eq!(stdout(&ndf(&args)), text);
    assert_eq!(ndf(&["train", "--hidden", "0"]).status.code(), Some(1));
}
