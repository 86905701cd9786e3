use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use perm_lll::apps::validate;
use perm_lll::apps::ColorMatrix;
use perm_lll::perm::Permutation;
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perm-lll"))
        .args(args)
        .env("PERM_LLL_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn distinct_csv(dir: &TempDir, n: usize) -> PathBuf {
    let body: String = (0..n)
        .map(|i| {
            let row: Vec<String> = (0..n).map(|j| (i * n + j + 1).to_string()).collect();
            row.join(",") + "\n"
        })
        .collect();
    write(dir, &format!("distinct{n}.csv"), &body)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("elapsed_ms");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[test]
fn criterion_failure_exits_3_without_force() {
    let dir = TempDir::new().unwrap();
    let ones = write(&dir, "ones2x2.csv", "1,1\n1,1\n");
    let out = run(&["latin", "--input", s(&ones)]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["status"], "criterion-failed");
    assert_eq!(v["criterion"]["satisfied"], false);
}

#[test]
fn forced_unsolvable_instance_hits_iteration_limit() {
    let dir = TempDir::new().unwrap();
    let ones = write(&dir, "ones2x2.csv", "1,1\n1,1\n");
    let out = run(&[
        "latin",
        "--input",
        s(&ones),
        "--force",
        "--max-resamples",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["status"], "iteration-limit");
    assert_eq!(v["resamplings"]["total"], 100);
    assert!(v["result"].is_null());
}

#[test]
fn latin_on_distinct_matrix_returns_valid_permutation() {
    let dir = TempDir::new().unwrap();
    let path = distinct_csv(&dir, 100);
    let out = run(&["latin", "--input", s(&path), "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "success");
    assert_eq!(v["valid"], true);
    let perm: Vec<usize> = serde_json::from_value(v["result"]["permutation"].clone()).unwrap();
    let mut sorted = perm.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (1..=100).collect::<Vec<_>>());
}

#[test]
fn runs_are_deterministic_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    let body: String = (0..12)
        .map(|i| {
            let row: Vec<String> = (0..12)
                .map(|j| ((i * 12 + j) % 48 + 1).to_string())
                .collect();
            row.join(",") + "\n"
        })
        .collect();
    let path = write(&dir, "m.csv", &body);
    let args = [
        "latin",
        "--input",
        s(&path),
        "--seed",
        "11",
        "--runs",
        "5",
        "--force",
    ];
    let mut a = json(&run(&args));
    let mut b = json(&run(&args));
    strip_timing(&mut a);
    strip_timing(&mut b);
    assert_eq!(a, b);
}

#[test]
fn reported_solutions_pass_library_validators() {
    let dir = TempDir::new().unwrap();
    let mut body = String::new();
    for i in 0..30 {
        let row: Vec<String> = (0..30)
            .map(|j| ((i * 30 + j) / 3 + 1).to_string())
            .collect();
        body.push_str(&(row.join(",") + "\n"));
    }
    let path = write(&dir, "m.csv", &body);
    let matrix = ColorMatrix::from_csv(body.as_bytes()).unwrap();
    let out = run(&["latin", "--input", s(&path), "--seed", "3", "--runs", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for r in v["reports"].as_array().unwrap() {
        let perm: Vec<usize> = serde_json::from_value(r["result"]["permutation"].clone()).unwrap();
        let pi = Permutation::from_one_based(&perm).unwrap();
        assert!(validate::is_latin_transversal(&matrix, &pi));
    }
}

#[test]
fn s_transversal_respects_color_cap() {
    let dir = TempDir::new().unwrap();
    let mut body = String::new();
    for i in 0..20 {
        let row: Vec<String> = (0..20)
            .map(|j| ((i * 20 + j) / 10 + 1).to_string())
            .collect();
        body.push_str(&(row.join(",") + "\n"));
    }
    let path = write(&dir, "m.csv", &body);
    let out = run(&["s-transversal", "--s", "3", "--input", s(&path), "--force"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let v = json(&out);
    assert_eq!(v["valid"], true);
    assert!(v["result"]["max_color_count"].as_u64().unwrap() <= 3);
}

#[test]
fn malformed_input_reports_line_number() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "bad.csv", "1,2,3\n4,5\n7,8,9\n");
    let out = run(&["latin", "--input", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["status"], "invalid-input");
    assert!(
        v["error"].as_str().unwrap().contains("line 2"),
        "{}",
        v["error"]
    );

    let events = write(&dir, "bad.txt", "perms 1 4\nevent 1 1 1 1\nevent 1 1 9 1\n");
    let out = run(&["solve", "--input", s(&events)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["error"].as_str().unwrap().contains("line 3"));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["latin", "--seed", "x"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_constraint_bound_check_passes() {
    let out = run(&["verify", "--check", "prop51"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out), serde_json::json!({"prop51": "pass"}));
}

#[test]
fn event_list_solves_sequentially_and_in_parallel() {
    let dir = TempDir::new().unwrap();
    let path = write(
        &dir,
        "events.txt",
        "perms 1 4\nevent 1 1 1 1\nevent 2 1 2 2 1 3 3\nevent 2 1 1 2 1 4 4\n",
    );
    for extra in [
        &["--mode", "seq"][..],
        &["--mode", "par", "--deps", "lopsided"][..],
    ] {
        let mut args = vec!["solve", "--input", s(&path), "--runs", "8"];
        args.extend_from_slice(extra);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0));
        let v = json(&out);
        assert_eq!(v["aggregate"]["successes"], 8);
        for r in v["reports"].as_array().unwrap() {
            let p = &r["result"]["permutations"][0];
            assert_ne!(p[0], 1);
            assert!(!(p[1] == 2 && p[2] == 3));
            assert!(!(p[0] == 2 && p[3] == 4));
        }
    }
}

#[test]
fn batch_aggregate_summarizes_runs() {
    let out = run(&["bench", "--n", "64", "--runs", "10", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let agg = &v["aggregate"];
    assert_eq!(agg["runs"], 10);
    assert_eq!(agg["successes"], 10);
    assert_eq!(agg["success_rate"], 1.0);
    let totals: Vec<u64> = v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["resamplings"]["total"].as_u64().unwrap())
        .collect();
    assert_eq!(
        agg["resamplings"]["max"].as_u64().unwrap(),
        *totals.iter().max().unwrap()
    );
    let seeds: Vec<u64> = v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, (5..15).collect::<Vec<_>>());
}

#[test]
fn log_is_written_for_single_runs_only() {
    let dir = TempDir::new().unwrap();
    let ones = write(&dir, "ones.csv", "1,1\n1,1\n");
    let log = dir.path().join("run.log");
    let out = run(&[
        "latin",
        "--input",
        s(&ones),
        "--force",
        "--max-resamples",
        "5",
        "--log",
        s(&log),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(fs::read_to_string(&log).unwrap().lines().count(), 5);
    let out = run(&[
        "latin",
        "--input",
        s(&ones),
        "--runs",
        "2",
        "--log",
        s(&log),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn criterion_subcommand_reports_verdict() {
    let dir = TempDir::new().unwrap();
    let good = distinct_csv(&dir, 10);
    let out = run(&["criterion", "--problem", "latin", "--input", s(&good)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["criterion"]["satisfied"], true);
    let ones = write(&dir, "ones.csv", "1,1\n1,1\n");
    let out = run(&["criterion", "--problem", "latin", "--input", s(&ones)]);
    assert_eq!(out.status.code(), Some(3));
}
