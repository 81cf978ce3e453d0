use std::process::{Command, Output};

use serde_json::Value;

fn ranktwo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ranktwo")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn swiss_file(dir: &tempfile::TempDir) -> String {
    let path = dir.path().join("swiss.json");
    std::fs::write(&path, r#"{"kind":"full","n":4,"w":[[4,2,2,2],[2,4,2,2],[2,2,4,2],[2,2,2,4]]}"#).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_reports_p2_loglik() {
    let out = ranktwo(&["solve", "--s", "2", "--t", "1", "--n", "4", "--starts", "200", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let best = json(&out)["best"]["loglik"].as_f64().unwrap();
    let target = 12.0 * 1.2f64.ln() + 8.0 * 0.8f64.ln();
    assert!((best - target).abs() < 1e-8, "{best}");
}

#[test]
fn em_on_counts_file() {
    let dir = tempfile::tempdir().unwrap();
    let counts = swiss_file(&dir);
    let out = ranktwo(&["solve", "--counts", &counts, "--method", "em", "--classes", "2", "--starts", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let best = json(&out)["best"]["loglik"].as_f64().unwrap();
    let target = 24.0 * (3.0f64 / 40.0).ln() + 16.0 * (1.0f64 / 20.0).ln();
    assert!((best - target).abs() < 1e-6, "{best}");
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let counts = swiss_file(&dir);
    assert_eq!(ranktwo(&["solve", "--counts", &counts, "--method", "em", "--classes", "0"]).status.code(), Some(2));
    assert_eq!(ranktwo(&["candidates", "--s", "1", "--t", "1"]).status.code(), Some(2));
    assert_eq!(ranktwo(&["solve", "--counts", "/nonexistent/table.json"]).status.code(), Some(2));
    let bad = Command::new(env!("CARGO_BIN_EXE_ranktwo"))
        .args(["candidates"])
        .env("RANKTWO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn candidates_print_exact_winner_entries() {
    let out = ranktwo(&["candidates", "--s", "2", "--t", "1", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("P2 PPNN: alpha^2 = 1/5  <- winner"));
    assert!(text.contains("[3/40, 3/40, 1/20, 1/20]"));
    let exact = ranktwo(&["candidates", "--s", "3", "--t", "1", "--exact", "--format", "text"]);
    let text = String::from_utf8(exact.stdout).unwrap();
    assert!(text.contains("[1/12, 1/12, 1/24, 1/24]"), "{text}");
}

#[test]
fn json_is_deterministic_and_out_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let p = path.to_str().unwrap();
    let a = ranktwo(&["verify", "--n", "4", "--s", "3", "--t", "1", "--starts", "50", "--seed", "9"]);
    let b = ranktwo(&["verify", "--n", "4", "--s", "3", "--t", "1", "--starts", "50", "--seed", "9", "--out", p]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert!(b.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), a.stdout);
    assert_eq!(json(&a)["verdict"], "CERTIFIED_CANDIDATE_MAX");
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);
}

#[test]
fn text_and_json_agree_on_loglik() {
    let args = ["solve", "--s", "2", "--t", "1", "--starts", "30"];
    let best = json(&ranktwo(&args))["best"]["loglik"].as_f64().unwrap();
    let mut text_args = args.to_vec();
    text_args.extend(["--format", "text"]);
    let text = String::from_utf8(ranktwo(&text_args).stdout).unwrap();
    assert!(text.contains(&format!("{best:.16e}")), "{text}");
}

#[test]
fn lemma_checks_and_csv() {
    let f3 = ranktwo(&["verify", "--lemma", "f3", "--resolution", "20", "--format", "csv"]);
    assert_eq!(f3.status.code(), Some(0));
    let csv = String::from_utf8(f3.stdout).unwrap();
    assert_eq!(csv.lines().count(), 1 + 20 * 20 * 20);
    for lemma in ["bounds", "order", "f1", "factor", "tailpair"] {
        let out = ranktwo(&["verify", "--lemma", lemma, "--starts", "20"]);
        assert_eq!(out.status.code(), Some(0), "{lemma}");
        assert_eq!(json(&out)["passed"], true, "{lemma}");
    }
    let t = ranktwo(&["verify", "--lemma", "tailpair", "--a1", "1", "--a2", "1", "--format", "csv"]);
    assert!(String::from_utf8(t.stdout).unwrap().contains("1,1,1,1,true,true,true"));
}

#[test]
fn conjectured_instances_exit_0_as_supported() {
    let out = ranktwo(&["verify", "--n", "6", "--s", "2", "--t", "1", "--starts", "40", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("verdict: SUPPORTED"));
}

#[test]
fn thread_cap_does_not_change_results() {
    let args = ["solve", "--s", "2", "--t", "1", "--starts", "40", "--seed", "3"];
    let one = Command::new(env!("CARGO_BIN_EXE_ranktwo")).args(args).env("RANKTWO_THREADS", "1").output().unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_ranktwo")).args(args).env("RANKTWO_THREADS", "4").output().unwrap();
    assert_eq!(one.stdout, many.stdout);
}
