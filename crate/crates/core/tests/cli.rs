use std::process::{Command, Output};

use catalytic_tree::stats::StatsRecord;
use catalytic_tree::tree_eval::{expected_oracle_calls, ValueSlotMode};

fn cattree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cattree")).args(args).env_remove("CATTREE_SEED").output().expect("spawn cattree")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn record(out: &Output) -> StatsRecord {
    let text = stdout(out);
    let line = text.lines().find(|l| l.starts_with("instance=")).expect("stats line");
    line.parse().unwrap()
}

#[test]
fn gen_is_deterministic_and_seed_sensitive() {
    let a = cattree(&["gen", "--h", "2", "--ell", "2", "--seed", "9"]);
    let b = cattree(&["gen", "--h", "2", "--ell", "2", "--seed", "9"]);
    let c = cattree(&["gen", "--h", "2", "--ell", "2", "--seed", "10"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn seed_from_environment() {
    let flag = cattree(&["gen", "--h", "1", "--ell", "2", "--seed", "4"]);
    let env = Command::new(env!("CARGO_BIN_EXE_cattree"))
        .args(["gen", "--h", "1", "--ell", "2"])
        .env("CATTREE_SEED", "4")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
}

#[test]
fn solve_modes_agree_on_generated_files() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20 {
        let path = dir.path().join(format!("inst{seed}.txt"));
        let p = path.to_str().unwrap();
        let seed = seed.to_string();
        assert!(cattree(&["gen", "--h", "2", "--ell", "1", "--seed", &seed, "--out", p]).status.success());
        let brute = cattree(&["solve", p, "--mode", "brute"]);
        let cat = cattree(&["solve", p, "--primes", "3", "--seed", &seed, "--verify"]);
        assert!(brute.status.success() && cat.status.success(), "{}", String::from_utf8_lossy(&cat.stderr));
        let (b, c) = (record(&brute), record(&cat));
        assert_eq!(b.value, c.value, "seed {seed}");
        assert!(c.restored);
        assert!(stdout(&cat).contains("verify ok"));
    }
}

#[test]
fn stats_lines_follow_the_recurrence() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.txt");
    let s = stats.to_str().unwrap();
    for (h, slot) in [("1", "copy"), ("2", "copy"), ("2", "free")] {
        let out = cattree(&["solve", "--h", h, "--ell", "2", "--tape", "max", "--value-slot", slot, "--stats", s]);
        assert!(out.status.success());
    }
    let lines: Vec<StatsRecord> =
        std::fs::read_to_string(&stats).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(lines.len(), 3);
    let modes = [ValueSlotMode::CatalyticCopy, ValueSlotMode::CatalyticCopy, ValueSlotMode::FreeSpace];
    for (rec, slot) in lines.iter().zip(modes) {
        assert_eq!((rec.t, rec.m, rec.tape.as_str()), (2, 15, "max"));
        assert!(rec.restored);
        assert_eq!(u128::from(rec.oracle_calls), expected_oracle_calls(rec.h, rec.t, slot));
    }
}

#[test]
fn fanin_above_two_is_reduced() {
    let out = cattree(&["solve", "--h", "1", "--ell", "1", "--fanin", "3", "--primes", "3", "--verify"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("verify ok"));
}

#[test]
fn checks_pass() {
    for args in [
        &["mvcheck", "--ell", "1", "--primes", "3,5"][..],
        &["mv-check", "--ell", "2", "--primes", "3"],
        &["cirtest", "--scheme", "mv", "--ell", "1", "--primes", "3"],
        &["cir-check", "--scheme", "cm", "--ell", "2"],
        &["pirdemo"],
        &["pir-demo", "--q", "7", "--trials", "3"],
    ] {
        let out = cattree(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stdout(&out));
    }
}

#[test]
fn bad_input_exits_with_four() {
    assert_eq!(cattree(&["frobnicate"]).status.code(), Some(4));
    assert_eq!(cattree(&["solve", "/no/such/instance"]).status.code(), Some(4));
    assert_eq!(cattree(&["solve", "--h", "1"]).status.code(), Some(4));
    assert_eq!(cattree(&["solve", "--h", "1", "--ell", "1", "--primes", "4"]).status.code(), Some(4));
    assert_eq!(cattree(&["solve", "--h", "1", "--ell", "1", "--tape", "striped"]).status.code(), Some(4));
    assert_eq!(cattree(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_instance_reports_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "this is not an instance\n").unwrap();
    let out = cattree(&["solve", path.to_str().unwrap(), "--mode", "brute"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(!out.stderr.is_empty());
}
