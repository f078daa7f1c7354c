use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn nmlogic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmlogic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn files() -> (TempDir, String, String) {
    let dir = TempDir::new().unwrap();
    let ranked = write(
        dir.path(),
        "ranked3.json",
        r#"{"carrier": ["a","b","c"], "edges": [["a","b"],["a","c"]]}"#,
    );
    let nonranked = write(
        dir.path(),
        "smooth_nonranked.json",
        r#"{"carrier": ["a","b","c"], "edges": [["a","b"]]}"#,
    );
    (dir, ranked, nonranked)
}

#[test]
fn check_exit_codes() {
    let (_d, ranked, nonranked) = files();
    assert_eq!(code(&nmlogic(&["check", "--rule", "RatM", "--structure", &ranked])), 0);
    let o = nmlogic(&["check", "--rule", "RatM", "--structure", &nonranked]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("witness: "));
    assert_eq!(code(&nmlogic(&["check", "--rule", "NoSuchRule", "--structure", &ranked])), 2);
    assert_eq!(code(&nmlogic(&["check", "--rule", "RatM", "--structure", "/no/such/file.json"])), 2);
    assert_eq!(code(&nmlogic(&["check", "--structure", &ranked])), 2);
}

#[test]
fn check_json_is_stable_and_carries_the_schema() {
    let (_d, _, nonranked) = files();
    let args = ["--json", "check", "--rule", "RatM", "--structure", &nonranked];
    let a = nmlogic(&args);
    let b = nmlogic(&args);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["rule"], "RatM");
    assert_eq!(v["holds"], false);
    assert!(v["schema"].as_str().unwrap().contains("|~"));
    assert!(v["witness"]["alpha"].is_string());
}

#[test]
fn size_rules_on_relations_and_size_systems() {
    let (d, ranked, nonranked) = files();
    assert_eq!(code(&nmlogic(&["check", "--rule", "M++(3)", "--structure", &ranked])), 0);
    assert_eq!(code(&nmlogic(&["check", "--rule", "M++(3)", "--structure", &nonranked])), 1);
    // One base {a, b} whose only small subset is ∅.
    let sys = write(
        d.path(),
        "sizes.json",
        r#"{"points": ["a","b"], "bases": [3], "small": {"0": [0]}}"#,
    );
    assert_eq!(code(&nmlogic(&["check", "--rule", "Iomega", "--structure", &sys])), 0);
    assert_eq!(code(&nmlogic(&["check", "--rule", "RatM", "--structure", &sys])), 2);
}

#[test]
fn fixtures_confirm_their_claims() {
    for name in ["mulmu1", "mulmu2", "mulmu3", "ranked-suite", "ghd-suite"] {
        let o = nmlogic(&["fixtures", name]);
        assert_eq!(code(&o), 0, "{name}: {}", stdout(&o));
        assert!(!stdout(&o).contains("NOT confirmed"));
    }
    let o = nmlogic(&["fixtures", "mulmu3"]);
    let out = stdout(&o);
    assert!(out.contains("[confirmed] interpolation over J = {p}, J′ = {q}, J″ = {r} holds"));
    assert!(out.contains("[confirmed] (μ*1) ⊇ fails"));
    let o = nmlogic(&["--json", "fixtures", "mulmu1"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(code(&nmlogic(&["fixtures", "nosuch"])), 2);
}

#[test]
fn oracle_streams_and_guards() {
    let o = nmlogic(&["oracle", "gh-rep", "--bound", "2"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines.last().unwrap().starts_with("0 divergences / "));
    for l in &lines[..lines.len() - 1] {
        let v: Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["diverges"], false);
    }
    let o = nmlogic(&["--json", "oracle", "big-small", "--bound", "2"]);
    let tail: Value = serde_json::from_str(stdout(&o).lines().last().unwrap()).unwrap();
    assert_eq!(tail["divergences"], 0);
    let o = nmlogic(&["oracle", "gh-rep", "--bound", "99"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bound 99"));
}

#[test]
fn ghd_oracle_is_seeded() {
    let a = nmlogic(&["--json", "--seed", "3", "oracle", "ghd", "--bound", "1"]);
    let b = nmlogic(&["--json", "--seed", "3", "oracle", "ghd", "--bound", "1"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let tail: Value = serde_json::from_str(stdout(&a).lines().last().unwrap()).unwrap();
    assert_eq!(tail["divergences"], 0);
    assert_eq!(tail["not_ghd"], 1);
    assert_eq!(code(&nmlogic(&["oracle", "ghd", "--bound", "3"])), 2);
}

#[test]
fn mu_revise_parse() {
    let d = TempDir::new().unwrap();
    let edge = write(
        d.path(),
        "edge.json",
        r#"{"carrier": ["0","1","2","3","4","5","6","7"], "edges": [[0,4]], "vars": ["p","q","r"]}"#,
    );
    let o = nmlogic(&["--json", "mu", "--structure", &edge, "--set", "!q & !r"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["formula"], "!p & !q & !r");

    let kb = write(d.path(), "kb.json", r#"{"vars": ["a","b"], "models": [[0,0],[1,0]]}"#);
    let dist = write(d.path(), "d.json", r#"{"kind": "hamming"}"#);
    let o = nmlogic(&["revise", "--kb", &kb, "--phi", "a", "--distance", &dist]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("models: {a !b}"));
    let o = nmlogic(&["revise", "--kb", &kb, "--phi", "a & !a", "--distance", &dist]);
    assert_eq!(code(&o), 2);

    let o = nmlogic(&["--json", "parse", "!q & !r", "--vars", "p,q,r"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["formula"], "!q & !r");
    assert_eq!(v["models"]["models"].as_array().unwrap().len(), 2);
    assert_eq!(code(&nmlogic(&["parse", "p & s", "--vars", "p"])), 2);
}

#[test]
fn interpolate_both_kinds() {
    let d = TempDir::new().unwrap();
    write(d.path(), "comp.json", r#"{"carrier": ["0","1"], "edges": [[0,1]]}"#);
    write(
        d.path(),
        "prod.json",
        r#"{"blocks": [{"vars":["p"]},{"vars":["q"]},{"vars":["r"]}], "combinator": "set",
            "components": ["comp.json","comp.json","comp.json"]}"#,
    );
    let nm = write(
        d.path(),
        "nm.json",
        r#"{"structure": "prod.json", "blocks": {"j": ["p"], "j1": ["q"], "j2": ["r"]},
            "phi": "!q & !r", "psi": "!p & !q"}"#,
    );
    let o = nmlogic(&["--json", "interpolate", &nm, "--search"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["interpolant"]["formula"], "!q");

    let mono = write(
        d.path(),
        "mono.json",
        r#"{"vars": ["a","b","c"], "blocks": {"j": ["a"], "j1": ["b"], "j2": ["c"]},
            "f": "b & c", "g": "a | b", "h": "false"}"#,
    );
    let o = nmlogic(&["interpolate", &mono]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("not an interpolant"));
}

#[test]
fn output_flag_writes_the_report() {
    let (d, ranked, _) = files();
    let out = d.path().join("report.json");
    let o = nmlogic(&["--json", "-o", out.to_str().unwrap(), "check", "--rule", "CUM", "--structure", &ranked]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["holds"], true);
}
