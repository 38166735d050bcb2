use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cdsolve"));
    c.env_remove("CDSOLVE_JOBS").env_remove("CDSOLVE_BUDGET_SEC").env_remove("CDSOLVE_MAX_PAIRS");
    c
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = bin().args(args).output().expect("binary runs");
    let text = String::from_utf8(out.stdout).unwrap();
    let value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {text}"));
    (out.status.code().unwrap(), value)
}

fn majority2() -> Value {
    // majority on {0,1}, entries in lexicographic argument order
    let maj: Vec<usize> = (0..8).map(|i| usize::from((i >> 2) + ((i >> 1) & 1) + (i & 1) >= 2)).collect();
    json!({ "size": 2, "ops": { "p1": maj, "p2": maj, "p3": maj } })
}

fn edge_structure(universe: usize, edges: &[[usize; 2]]) -> Value {
    json!({ "universe": universe, "relations": { "E": { "arity": 2, "tuples": edges } } })
}

fn put(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

struct Problem {
    _dir: TempDir,
    algebra: PathBuf,
    template: PathBuf,
    instance: PathBuf,
}

impl Problem {
    fn new(instance: Value) -> Self {
        let dir = TempDir::new().unwrap();
        let algebra = put(dir.path(), "alg.json", &majority2());
        let template = put(dir.path(), "k2.json", &edge_structure(2, &[[0, 1], [1, 0]]));
        let instance = put(dir.path(), "a.json", &instance);
        Self { _dir: dir, algebra, template, instance }
    }

    fn args<'a>(&'a self, cmd: &[&'a str]) -> Vec<&'a str> {
        let mut v = cmd.to_vec();
        v.extend([
            "--algebra",
            self.algebra.to_str().unwrap(),
            "--template",
            self.template.to_str().unwrap(),
            "--instance",
            self.instance.to_str().unwrap(),
        ]);
        v
    }
}

fn cycle(n: usize) -> Value {
    let edges: Vec<[usize; 2]> = (0..n).map(|i| [i, (i + 1) % n]).collect();
    edge_structure(n, &edges)
}

#[test]
fn check_jonsson_accepts_majority() {
    let dir = TempDir::new().unwrap();
    let p = put(dir.path(), "m.json", &majority2());
    let (code, v) = run(&["check-jonsson", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["cd4"]["ok"], true);
}

#[test]
fn check_jonsson_rejects_projection() {
    let dir = TempDir::new().unwrap();
    let proj: Vec<usize> = (0..8).map(|i| i >> 2).collect();
    let p = put(dir.path(), "p.json", &json!({ "size": 2, "ops": { "p1": proj, "p2": proj, "p3": proj } }));
    let (code, v) = run(&["check-jonsson", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(v["cd4"]["ok"], false);
}

#[test]
fn triangle_to_edge_is_unsat() {
    let prob = Problem::new(cycle(3));
    let (code, v) = run(&prob.args(&["solve"]));
    assert_eq!(code, 1);
    assert_eq!(v["status"], "unsat");
}

#[test]
fn even_cycle_is_sat_and_trace_is_written() {
    let prob = Problem::new(cycle(6));
    let trace = prob._dir.path().join("trace.json");
    let mut args = prob.args(&["solve"]);
    args.extend(["--trace", trace.to_str().unwrap()]);
    let (code, v) = run(&args);
    assert_eq!(code, 0);
    let map: Vec<usize> = serde_json::from_value(v["assignment"].clone()).unwrap();
    for i in 0..6 {
        assert_ne!(map[i], map[(i + 1) % 6]);
    }
    let t: Value = serde_json::from_str(&std::fs::read_to_string(trace).unwrap()).unwrap();
    assert_eq!(t["k"], 3);
    assert_eq!(t["steps"].as_array().unwrap().last().unwrap()["step"], "solved");
}

#[test]
fn oracle_mirrors_solve() {
    for n in 3..=6 {
        let prob = Problem::new(cycle(n));
        let (solver, _) = run(&prob.args(&["solve"]));
        let (oracle, v) = run(&prob.args(&["oracle", "solve"]));
        assert_eq!(solver, oracle, "cycle {n}");
        if oracle == 0 {
            assert_eq!(v["status"], "sat");
        }
    }
}

#[test]
fn consistency_reports_sizes_or_unsat() {
    let prob = Problem::new(cycle(5));
    let args = ["consistency", "--instance", prob.instance.to_str().unwrap(), "--template", prob.template.to_str().unwrap()];
    let (code, v) = run(&args);
    assert_eq!(code, 1);
    assert_eq!(v["status"], "unsat");

    let even = Problem::new(cycle(4));
    let args = ["consistency", "--instance", even.instance.to_str().unwrap(), "--template", even.template.to_str().unwrap(), "--k", "2"];
    let (code, v) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(v["k"], 2);
    assert_eq!(v["strategy"]["potential"], 8);
}

#[test]
fn preprocess_writes_an_algebra() {
    let dir = TempDir::new().unwrap();
    let src = put(dir.path(), "m.json", &majority2());
    let out = dir.path().join("pre.json");
    let (code, v) = run(&["preprocess", src.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["n1"], "1");
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written, majority2());
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{ not json").unwrap();
    let (code, v) = run(&["check-jonsson", p.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "input");
}

#[test]
fn missing_file_is_an_input_error() {
    let (code, v) = run(&["check-jonsson", "/definitely/not/here.json"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "input");
}

#[test]
fn template_not_preserved_is_rejected_unless_unchecked() {
    // Majority of the three one-in-three tuples is (0,0,0).
    let dir = TempDir::new().unwrap();
    let algebra = put(dir.path(), "alg.json", &majority2());
    let one_in_three = json!({ "universe": 2, "relations": { "T": { "arity": 3, "tuples": [[1,0,0],[0,1,0],[0,0,1]] } } });
    let template = put(dir.path(), "t.json", &one_in_three);
    let instance = put(dir.path(), "a.json", &json!({ "universe": 3, "relations": { "T": { "arity": 3, "tuples": [[0,1,2]] } } }));
    let base = [
        "--algebra",
        algebra.to_str().unwrap(),
        "--template",
        template.to_str().unwrap(),
        "--instance",
        instance.to_str().unwrap(),
    ];
    let mut args = vec!["solve"];
    args.extend(base);
    let (code, v) = run(&args);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "input");
    let mut args = vec!["oracle", "solve", "--unchecked"];
    args.extend(base);
    let (code, _) = run(&args);
    assert_eq!(code, 0);
}

#[test]
fn unknown_subcommand_exits_two() {
    let (code, v) = run(&["frobnicate"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "usage");
}

#[test]
fn version_reports_schema() {
    let (code, v) = run(&["--version"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], 1);
}

#[test]
fn gen_is_deterministic_and_solvable() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let (code, _) = run(&["gen", "--seed", "11", "--planted", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    for name in ["algebra.json", "template.json", "instance.json", "planted.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let p = a.path();
    let (code, v) = run(&[
        "solve",
        "--algebra",
        p.join("algebra.json").to_str().unwrap(),
        "--template",
        p.join("template.json").to_str().unwrap(),
        "--instance",
        p.join("instance.json").to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{v}");
}

#[test]
fn identical_inputs_give_identical_output() {
    let prob = Problem::new(cycle(8));
    let first = bin().args(prob.args(&["solve"])).output().unwrap();
    let second = bin().args(prob.args(&["solve", "--jobs", "1"])).output().unwrap();
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn lemma_suite_small_run_passes() {
    let (code, v) = run(&["lemmas", "--max-size", "2", "--jobs", "1"]);
    assert_eq!(code, 0);
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 6);
    assert!(reports.iter().all(|r| r["counterexample_count"] == 0));
}

#[test]
fn lemma_budget_from_environment() {
    let out = bin()
        .args(["lemmas", "--max-size", "3"])
        .env("CDSOLVE_MAX_PAIRS", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    // 11 x 11 small pairs plus at most 10 sampled ones
    assert!(v["pairs_planned"].as_u64().unwrap() <= 131);
}
