use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn program(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../programs")
        .join(name)
}

fn glc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glc"))
        .args(args)
        .env("GLC_COLOR", "0")
        .output()
        .expect("spawn glc")
}

fn glc_on(cmd: &str, file: &str, extra: &[&str]) -> Output {
    let path = program(file);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    glc(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).expect("stdout is one JSON document")
}

#[test]
fn check_accepts_countdown() {
    let o = glc_on("check", "countdown.gml", &[]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn check_reports_guarded_raise() {
    let o = glc_on("check", "guess_unguarded.gml", &["--json"]);
    assert_eq!(o.status.code(), Some(1));
    let diags = json(&o);
    assert_eq!(diags[0]["code"], "GuardedRaise");
    assert!(diags[0]["line"].as_u64().unwrap() > 0);
}

#[test]
fn check_accepts_guessing_game() {
    assert_eq!(glc_on("check", "guess.gml", &[]).status.code(), Some(0));
}

#[test]
fn run_streams_loop_until_pending() {
    let o = glc_on("run", "loop.gml", &["--fuel", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "put 0\nput 0\nput 0\npending\n");
}

#[test]
fn run_and_denote_agree_on_countdown() {
    let run = glc_on("run", "countdown.gml", &["--json"]);
    let denote = glc_on("denote", "countdown.gml", &["--json"]);
    assert_eq!(run.status.code(), Some(0));
    let doc = json(&run);
    assert_eq!(doc, json(&denote));
    assert_eq!(
        doc,
        serde_json::json!([{"out": 2}, {"out": 1}, {"out": 0}, {"done": "*"}])
    );
}

#[test]
fn run_human_mode_prints_terminal() {
    let o = glc_on("run", "countdown.gml", &[]);
    assert_eq!(stdout(&o), "put 2\nput 1\nput 0\nret *\n");
}

#[test]
fn adequacy_on_file() {
    let o = glc_on("adequacy", "countdown.gml", &["--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["total"], 1);
    assert_eq!(r["agreed"], 1);
}

#[test]
fn adequacy_on_generated_corpus() {
    let o = glc(&[
        "adequacy", "--gen", "--count", "40", "--depth", "6", "--seed", "42", "--fuel", "64",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["total"], 40);
    assert_eq!(r["disagreed"].as_array().unwrap().len(), 0);
}

#[test]
fn adequacy_reports_mutation() {
    let o = glc_on(
        "adequacy",
        "countdown.gml",
        &["--mutation", "drop-put-event", "--json"],
    );
    assert_eq!(o.status.code(), Some(1));
    let r = json(&o);
    let d = &r["disagreed"][0];
    assert!(d["program"].as_str().unwrap().contains("handleit"));
    assert_eq!(d["denotational"]["events"], serde_json::json!([2, 1, 0]));
}

#[test]
fn laws_pass_on_each_instance() {
    for instance in ["powerset", "powerset-nonempty", "trace"] {
        let o = glc(&[
            "laws",
            "--instance",
            instance,
            "--count",
            "50",
            "--seed",
            "7",
            "--exhaustive",
            "1",
            "--json",
        ]);
        assert_eq!(o.status.code(), Some(0), "{instance}");
        let r = json(&o);
        assert!(!r["results"].as_array().unwrap().is_empty());
    }
}

#[test]
fn usage_and_io_errors_exit_two() {
    assert_eq!(glc(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        glc(&["check", "/nonexistent/file.gml"]).status.code(),
        Some(2)
    );
    assert_eq!(glc(&["adequacy"]).status.code(), Some(2));
    let o = glc_on("check", "countdown.gml", &["--lax-app-delta"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    assert_eq!(glc(&["--help"]).status.code(), Some(0));
}
