use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn viewlens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viewlens"))
        .args(args)
        .current_dir(fixtures())
        .env_remove("VIEWLENS_BUDGET")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8")
}

#[test]
fn invertible_split_reports_yes() {
    let out = viewlens(&["check-invertibility", "split.vl"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["command"], "check-invertibility");
    assert_eq!(r["outcome"], "yes");
    assert_eq!(r["inputs"][0]["role"], "spec");
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(r["options"]["budget"], 10_000);
    assert!(r["timing"].is_null());
}

#[test]
fn report_fields_come_in_a_fixed_order() {
    let text = stdout(&viewlens(&["check-invertibility", "split.vl"]));
    let keys = ["\"command\"", "\"inputs\"", "\"options\"", "\"outcome\"", "\"verdicts\"", "\"certificates\"", "\"timing\""];
    let positions: Vec<usize> = keys.iter().map(|k| text.find(k).expect(k)).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
}

#[test]
fn missing_fd_gives_a_counterexample() {
    let out = viewlens(&["check-invertibility", "split_nofd.vl"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["outcome"], "no");
    let cx = &r["certificates"][0];
    assert_eq!(cx["kind"], "counterexample");
    assert_eq!(cx["target"], "R");
    assert_ne!(cx["first"], cx["second"]);
}

#[test]
fn rewrite_prints_the_join() {
    let out = viewlens(&["--format", "text", "rewrite", "split.vl"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("R(x, y, z) :- V1(x, y), V2(y, z)"));
}

#[test]
fn exhausted_budget_exits_with_unknown() {
    let out = viewlens(&["--budget", "1", "check-invertibility", "split.vl"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["outcome"], "unknown");
}

#[test]
fn budget_can_come_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_viewlens"))
        .args(["rewrite", "split.vl"])
        .current_dir(fixtures())
        .env("VIEWLENS_BUDGET", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["options"]["budget"], 1);
}

#[test]
fn timing_is_opt_in() {
    let r = json(&viewlens(&["--timing", "check-invertibility", "split.vl"]));
    assert!(r["timing"]["elapsed_ms"].is_u64());
}

#[test]
fn translate_reuses_the_join_value() {
    let out = viewlens(&["translate", "split.vl", "--facts", "abc.facts", "--update", "insert_db.upd"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["outcome"], "yes");
    assert_eq!(r["certificates"][0]["kind"], "delta");
    assert_eq!(r["certificates"][0]["insertions"][0], "R(d, b, c)");
    assert_eq!(r["certificates"][0]["deletions"].as_array().unwrap().len(), 0);
}

#[test]
fn translate_needs_an_invertible_view() {
    let out = viewlens(&["translate", "split_nofd.vl", "--facts", "abc.facts", "--update", "insert_db.upd"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn guarded_insert_is_translatable_everywhere() {
    let r = json(&viewlens(&["check-update", "copy_fd.vl", "--update", "guarded_v.upd"]));
    assert_eq!(r["outcome"], "yes");
    let r = json(&viewlens(&["check-update", "copy_fd.vl", "--update", "insert_v.upd"]));
    assert_eq!(r["outcome"], "no");
    assert_eq!(r["certificates"][0]["kind"], "failing-state");
}

#[test]
fn check_update_at_one_instance() {
    let out = viewlens(&["check-update", "copy.vl", "--update", "insert_v.upd", "--facts", "ab.facts"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["outcome"], "yes");
}

#[test]
fn everywhere_conflicts_with_facts() {
    let out = viewlens(&["check-update", "copy.vl", "--update", "insert_v.upd", "--everywhere", "--facts", "ab.facts"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot be used with"));
}

#[test]
fn complement_pair() {
    let r = json(&viewlens(&["check-complement", "proj_ab.vl", "proj_bc.vl"]));
    assert_eq!(r["outcome"], "yes");
    let reuse = json(&viewlens(&[
        "check-complement",
        "proj_ab.vl",
        "proj_bc.vl",
        "--facts",
        "abc.facts",
        "--update",
        "insert_db.upd",
    ]));
    assert_eq!(reuse["outcome"], "yes");
    let fresh = json(&viewlens(&[
        "check-complement",
        "proj_ab.vl",
        "proj_bc.vl",
        "--facts",
        "abc.facts",
        "--update",
        "insert_de.upd",
    ]));
    assert_eq!(fresh["outcome"], "no");
}

#[test]
fn implication_goals() {
    let r = json(&viewlens(&["implies", "split.vl", "--goal", "fd_goal.goal"]));
    assert_eq!(r["outcome"], "yes");
    let r = json(&viewlens(&["implies", "split_nofd.vl", "--goal", "fd_goal.goal"]));
    assert_eq!(r["outcome"], "no");
    assert_eq!(r["certificates"][0]["kind"], "countermodel");
}

#[test]
fn oracle_counts_instances() {
    let out = viewlens(&["--format", "text", "oracle", "split.vl", "--domain", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("consistent-instances: 49"), "{}", stdout(&out));
    let out = viewlens(&["oracle", "split.vl", "--domain", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn diagnostics_name_the_file_and_position() {
    for (file, at, kind) in [
        ("bad_arity.vl", "bad_arity.vl:3:13:", "arity-mismatch"),
        ("bad_unsafe.vl", "bad_unsafe.vl:3:7:", "unsafe-rule"),
        ("bad_syntax.vl", "bad_syntax.vl:2:1:", "syntax"),
    ] {
        let out = viewlens(&["check-invertibility", file]);
        assert_eq!(out.status.code(), Some(1));
        assert!(out.stdout.is_empty());
        let err = stderr(&out);
        assert!(err.contains(at) && err.contains(&format!("error[{kind}]")), "{err}");
    }
}

#[test]
fn unreadable_input_is_an_error() {
    let out = viewlens(&["check-invertibility", "no-such-file.vl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cannot read no-such-file.vl"));
}

#[test]
fn generate_is_deterministic_per_seed() {
    let a = stdout(&viewlens(&["--seed", "7", "generate"]));
    let b = stdout(&viewlens(&["--seed", "7", "generate"]));
    assert_eq!(a, b);
    let others: Vec<String> = (8..12).map(|s| stdout(&viewlens(&["--seed", &s.to_string(), "generate"]))).collect();
    assert!(others.iter().any(|o| o != &a));
}

#[test]
fn fmt_is_idempotent_on_generated_specs() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let text = stdout(&viewlens(&["--seed", &seed.to_string(), "generate"]));
        let first = dir.path().join("first.vl");
        std::fs::write(&first, &text).unwrap();
        let once = stdout(&viewlens(&["fmt", first.to_str().unwrap()]));
        let second = dir.path().join("second.vl");
        std::fs::write(&second, &once).unwrap();
        let twice = stdout(&viewlens(&["fmt", second.to_str().unwrap()]));
        assert_eq!(once, twice);
        assert_eq!(text.lines().skip(1).collect::<Vec<_>>(), once.lines().collect::<Vec<_>>());
    }
}
