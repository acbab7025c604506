// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use tempfile::TempDir;

const FEG: &str = "(or (not (= x y)) (= (h (g x) (g (g x))) (h (g y) (g (g x)))))";
const UNGUARDED: &str = "(= (h (g x) (g (g x))) (h (g y) (g (g y))))";
const CHAIN: &str = "(or (not (= x y)) (or (not (= y z)) (= x z)))";

fn peuf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peuf"))
        .args(args)
        .output()
        .expect("run peuf")
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn decide_running_example_with_each_method() {
    let dir = TempDir::new().unwrap();
    let feg = file(&dir, "feg.euf", FEG);
    let b = peuf(&["decide", "--method", "bitvec", s(&feg)]);
    assert_eq!(b.status.code(), Some(0));
    let b = json(&b);
    assert_eq!(b["verdict"], "Valid");
    assert_eq!(b["varCounts"]["propositional"], 1);

    let p = json(&peuf(&["decide", "--method", "pairwise", s(&feg)]));
    assert_eq!(p["varCounts"]["eVars"], 1);

    let o = peuf(&["decide", "--method", "oracle", s(&feg)]);
    assert_eq!(o.status.code(), Some(0));
    let o = json(&o);
    assert_eq!(o["oracle"]["rawPartitions"], "877");
    assert_eq!(o["oracle"]["consistent"], 384);
    assert_eq!(o["oracle"]["maximallyDiverse"], 2);
}

#[test]
fn exit_codes_agree_across_methods() {
    let dir = TempDir::new().unwrap();
    let valid = file(&dir, "v.euf", FEG);
    let invalid = file(&dir, "i.euf", UNGUARDED);
    for m in ["bitvec", "pairwise", "oracle"] {
        assert_eq!(
            peuf(&["decide", "--method", m, s(&valid)]).status.code(),
            Some(0),
            "{m}"
        );
        let out = peuf(&["decide", "--method", m, s(&invalid)]);
        assert_eq!(out.status.code(), Some(1), "{m}");
        let v = json(&out);
        assert_eq!(v["verdict"], "Invalid");
        assert_eq!(v["countermodel"]["confirmed"], true, "{m}");
    }
}

#[test]
fn several_inputs_give_one_line_each_and_the_worst_code() {
    let dir = TempDir::new().unwrap();
    let a = file(&dir, "a.euf", FEG);
    let b = file(&dir, "b.euf", UNGUARDED);
    let out = peuf(&["decide", "--method", "pairwise", s(&a), s(&b)]);
    assert_eq!(out.status.code(), Some(1));
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["verdict"], "Valid");
    assert_eq!(lines[1]["verdict"], "Invalid");
}

#[test]
fn errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = file(&dir, "bad.euf", "(and x");
    let out = peuf(&["decide", "--method", "bitvec", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("syntax error"));
    let missing = dir.path().join("nope.euf");
    assert_eq!(
        peuf(&["decide", "--method", "bitvec", s(&missing)]).status.code(),
        Some(2)
    );
    let term = file(&dir, "term.euf", "(declare f order 1)\n(ite (= x y) x y)");
    assert_eq!(peuf(&["decide", "--method", "bitvec", s(&term)]).status.code(), Some(2));
    let big = file(&dir, "big.euf", CHAIN);
    let out = peuf(&["decide", "--method", "oracle", "--guard", "1", s(&big)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("size guard"));
}

#[test]
fn method_is_required() {
    let dir = TempDir::new().unwrap();
    let feg = file(&dir, "feg.euf", FEG);
    assert_eq!(peuf(&["decide", s(&feg)]).status.code(), Some(2));
}

#[test]
fn standard_input() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_peuf"))
        .args(["decide", "--method", "bitvec", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(FEG.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["input"], "-");
}

#[test]
fn transitivity_switch() {
    let dir = TempDir::new().unwrap();
    let chain = file(&dir, "chain.euf", CHAIN);
    let off = peuf(&["decide", "--method", "pairwise", "--no-transitivity", s(&chain)]);
    assert_eq!(off.status.code(), Some(1));
    let on = peuf(&["decide", "--method", "pairwise", s(&chain)]);
    assert_eq!(on.status.code(), Some(0));
    assert_eq!(json(&on)["constraintCount"], 3);
}

#[test]
fn classify_reports_symbol_split() {
    let dir = TempDir::new().unwrap();
    let feg = file(&dir, "feg.euf", FEG);
    let v = json(&peuf(&["classify", s(&feg)]));
    assert_eq!(v["gFuncs"], serde_json::json!(["x", "y"]));
    assert_eq!(v["pFuncs"], serde_json::json!(["g", "h"]));
    assert!(v["negTerms"].as_array().unwrap().len() == 2);
}

#[test]
fn eliminate_both_schemes() {
    let dir = TempDir::new().unwrap();
    let feg = file(&dir, "feg.euf", FEG);
    let v = json(&peuf(&["eliminate", s(&feg)]));
    assert_eq!(v["sigmaP"], serde_json::json!(["vg_1", "vg_2", "vg_3", "vh_1", "vh_2"]));
    assert_eq!(v["trace"][0]["replacements"][1]["application"], "(g y)");
    let text = v["formula"].as_str().unwrap();
    assert!(text.contains("(ite (= y x) vg_1 vg_2)"), "{text}");

    let out_path = dir.path().join("fstar.euf");
    let a = json(&peuf(&["eliminate", "--ackermann", "-o", s(&out_path), s(&feg)]));
    assert_eq!(a["equations"], 8);
    assert_eq!(a["constraints"].as_array().unwrap().len(), 4);
    // The written formula is valid by itself.
    assert_eq!(
        peuf(&["decide", "--method", "pairwise", s(&out_path)]).status.code(),
        Some(0)
    );
}

#[test]
fn encode_reports_and_dimacs_round_trip() {
    let dir = TempDir::new().unwrap();
    let feg = file(&dir, "feg.euf", FEG);
    let b = json(&peuf(&["encode", "--encode", "bitvec", s(&feg)]));
    let rows = b["patterns"].as_array().unwrap();
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[1]["pattern"], "<0,0,a_1_0>");
    assert_eq!(rows[6]["pattern"], "<1,1,0>");

    let cnf = dir.path().join("feg.cnf");
    let p = json(&peuf(&["encode", "--encode", "pairwise", "--dimacs", s(&cnf), s(&feg)]));
    assert_eq!(
        (p["n"].as_u64(), p["m"].as_u64(), p["eVars"].as_u64()),
        (Some(2), Some(5), Some(1))
    );
    let text = std::fs::read_to_string(&cnf).unwrap();
    assert!(text.contains("c var 1 e_1_2"), "{text}");
    let solved = peuf(&["solve", s(&cnf)]);
    assert_eq!(String::from_utf8_lossy(&solved.stdout).trim(), "s UNSATISFIABLE");
}

#[test]
fn decide_writes_dimacs_and_dot() {
    let dir = TempDir::new().unwrap();
    let f = file(&dir, "u.euf", UNGUARDED);
    let cnf = dir.path().join("u.cnf");
    let dot = dir.path().join("u.dot");
    let out = peuf(&[
        "decide",
        "--method",
        "bitvec",
        "--dimacs",
        s(&cnf),
        "--dot",
        s(&dot),
        s(&f),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let solved = peuf(&["solve", "--solver", "backtracking", s(&cnf)]);
    assert!(String::from_utf8_lossy(&solved.stdout).starts_with("s SATISFIABLE"));
    let dot = std::fs::read_to_string(&dot).unwrap();
    assert!(dot.starts_with("digraph"));
}

#[test]
fn oracle_command() {
    let dir = TempDir::new().unwrap();
    let feg = file(&dir, "feg.euf", FEG);
    let v = json(&peuf(&["oracle", s(&feg)]));
    assert_eq!(v["terms"], 7);
    assert_eq!(v["maximallyDiverse"], 2);
    assert_eq!(v["verdict"], "Valid");
}

#[test]
fn generated_pipelines_decide_as_expected() {
    let dir = TempDir::new().unwrap();
    let good = dir.path().join("good.euf");
    let out = peuf(&[
        "gen-pipeline",
        "--stages",
        "3",
        "--classes",
        "alu",
        "-n",
        "1",
        "-o",
        s(&good),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(peuf(&["decide", "--method", "bitvec", s(&good)]).status.code(), Some(0));

    let bad = dir.path().join("bad.euf");
    let out = peuf(&[
        "gen-pipeline",
        "--stages",
        "5",
        "--classes",
        "alu,branch",
        "--bug",
        "wrong-mux-polarity",
        "-o",
        s(&bad),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let d = peuf(&["decide", "--method", "pairwise", s(&bad)]);
    assert_eq!(d.status.code(), Some(1));
    assert_eq!(json(&d)["countermodel"]["confirmed"], true);

    let out = peuf(&["gen-pipeline", "--classes", "alu", "--bug", "stale-pc-on-branch"]);
    assert_eq!(out.status.code(), Some(2));
    let out = peuf(&["gen-pipeline", "--classes", "alu,mul"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_runs() {
    let out = peuf(&["bench", "--count", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1);

    let out = peuf(&["bench", "--count", "40", "--seed", "11", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 40);

    let dir = TempDir::new().unwrap();
    let feg = file(&dir, "feg.euf", FEG);
    let out = peuf(&["bench", "--json", s(&feg)]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ackermannEquations"], 8);
    assert_eq!(v["rows"][1]["eVars"], 1);
    assert_eq!(v["agreed"], true);

    let bad = file(&dir, "bad.euf", "(or x");
    assert_eq!(peuf(&["bench", s(&bad)]).status.code(), Some(1));
}
