//! End-to-end checks of the `qot` binary.

use std::io::{BufRead, BufReader};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn qot() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qot"));
    c.env_remove("QOT_SEED");
    c
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("elapsed_seconds");
    v
}

#[test]
fn usage_errors_exit_two() {
    for args in [&["frobnicate"][..], &["bench"], &["run", "--role", "alice"], &["calc-params", "--format", "xml"]] {
        let out = qot().args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn simulation_requires_toy_flag() {
    let out = qot().args(["loopback", "--trials", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--toy"));
}

#[test]
fn calc_params_emits_row() {
    let v = json(&qot().args(["calc-params"]).output().unwrap());
    assert_eq!(v["protocol"], "ours-ideal");
    let n = v["n_bb84"].as_f64().unwrap();
    assert!((3.0e7..3.6e7).contains(&n), "{n}");
    assert_eq!(v["params"]["q_ot"], 0);
}

#[test]
fn bench_all_lists_five_columns() {
    let out = qot().args(["bench", "--all"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    for name in ["bckm21", "abkk23-3round", "abkk23-4round", "ours-ideal", "ours-noisy"] {
        assert!(header.contains(name), "{header}");
    }
}

#[test]
fn seed_from_environment_is_deterministic() {
    let run = |seed: &str| {
        let out = qot()
            .env("QOT_SEED", seed)
            .args(["loopback", "--toy", "--trials", "2", "--lambda-ot", "128"])
            .output()
            .unwrap();
        without_timing(json(&out))
    };
    let a = run("17");
    assert_eq!(a, run("17"));
    assert_eq!(a["delivered"], 2);
    assert_ne!(a["seed"], run("18")["seed"]);
}

#[test]
fn attack_reports_interval() {
    let v = json(&qot().args(["attack", "--strategy", "equivocate-eq", "--t", "1", "--trials", "400", "--seed", "2"]).output().unwrap());
    assert_eq!(v["expected"], 0.5);
    assert_eq!(v["within_3sigma"], true);
}

#[test]
fn tcp_run_delivers_chosen_message() {
    let (m0, m1) = ("00".repeat(32), "ff".repeat(32));
    let mut alice = qot()
        .args(["run", "--role", "alice", "--listen", "127.0.0.1:0", "--toy", "--lambda-ot", "128", "--seed", "5"])
        .args(["--m0", &m0, "--m1", &m1])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(alice.stderr.take().unwrap()).lines();
    let addr = lines
        .by_ref()
        .map_while(Result::ok)
        .find_map(|l| l.split_whitespace().last().filter(|a| a.contains(':')).map(str::to_owned))
        .expect("listening address");
    let bob = qot()
        .args(["run", "--role", "bob", "--connect", &addr, "--toy", "--lambda-ot", "128", "--choice", "1", "--seed", "6"])
        .output()
        .unwrap();
    let b = json(&bob);
    let a: Value = serde_json::from_slice(&alice.wait_with_output().unwrap().stdout).unwrap();
    assert_eq!(b["message"], m1.as_str());
    assert_eq!(a["transcript"], b["transcript"]);
}
