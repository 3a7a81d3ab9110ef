use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn omega(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omega")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_into(dir: &Path, seed: &str) -> Output {
    omega(&[
        "run", "--n", "3", "--crash", "p3@100", "--t-stab", "300", "--seed", seed, "--budget", "60000",
        "--tail-window", "2000", "--out", dir.to_str().unwrap(),
    ])
}

#[test]
fn run_writes_artifacts_and_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let first = run_into(&a, "7");
    let second = run_into(&b, "7");
    assert_eq!(stdout(&first), stdout(&second));
    assert!(stdout(&first).contains("leader") || stdout(&first).starts_with("FAIL"));
    for name in ["trace.jsonl", "probes.jsonl", "streams.jsonl", "verdict.json"] {
        let x = fs::read(a.join(name)).unwrap();
        assert!(!x.is_empty(), "{name} is empty");
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let verdict: serde_json::Value = serde_json::from_slice(&fs::read(a.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["steps"], 60000);
    let first_step: serde_json::Value =
        serde_json::from_str(fs::read_to_string(a.join("trace.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first_step["t"], 0);
}

#[test]
fn replay_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("r");
    run_into(&dir, "3");
    let ok = omega(&["replay", dir.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).starts_with("PASS replay reproduced all 60000 steps"));

    let trace = dir.join("trace.jsonl");
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(10, 11);
    fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let bad = omega(&["replay", dir.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("differs at line 11"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(omega(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(omega(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(omega(&["run", "--n", "1"]).status.code(), Some(2));
    assert_eq!(omega(&["run", "--crash", "p3"]).status.code(), Some(2));
    assert_eq!(omega(&["suite", "nope"]).status.code(), Some(2));
    assert_eq!(omega(&["--help"]).status.code(), Some(0));
}

#[test]
fn suite_sa_passes() {
    let o = omega(&["suite", "sa"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS sa:"));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.txt");
    fs::write(&cfg, "n = 3\ncrash = p3@100\nseed = 1\nbudget = 999\n").unwrap();
    let out = tmp.path().join("o");
    let o = omega(&[
        "run", "--config", cfg.to_str().unwrap(), "--budget", "5000", "--tail-window", "100", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.code().is_some_and(|c| c <= 1));
    let written = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(written.contains("budget = 5000"));
    assert!(written.contains("crash = p3@100"));
    assert!(written.contains("seed = 1"));
}

#[test]
fn batch_prints_machine_readable_summary() {
    let o = omega(&[
        "batch", "--seeds", "3", "--crash", "p3@100", "--budget", "40000", "--tail-window", "2000",
    ]);
    assert!(o.status.code().is_some_and(|c| c <= 1));
    let out = stdout(&o);
    let json_line = out.lines().nth(1).expect("summary line then JSON");
    let v: serde_json::Value = serde_json::from_str(json_line).unwrap();
    assert_eq!(v["seeds"], 3);
    assert!(v["pass_rate"].as_f64().unwrap() <= 1.0);
}
