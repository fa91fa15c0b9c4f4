use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crowdship::format::load_instance;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowdship"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crowdship-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--variant", "x-yz", "--instance", "a", "--out", "b"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--variant", "e-dd", "--instance", "a", "--out", "b", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn missing_files_are_runtime_errors() {
    let dir = scratch("missing");
    let out = run(&["solve", "--variant", "H-DD", "--instance", s(&dir.join("nope.txt")), "--out", s(&dir.join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.txt"));
}

#[test]
fn generate_solve_and_tables() {
    let dir = scratch("pipeline");
    let lib = dir.join("lib");
    let out = run(&[
        "generate", "--out-dir", s(&lib), "--master-seed", "3", "--n-full-instances", "1", "--task-sizes", "30",
        "--driver-ratios", "0.1,0.2", "--patterns", "c1,m2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> = fs::read_dir(&lib).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["inst00_c1_30_0.1.txt", "inst00_c1_30_0.2.txt", "inst00_m2_30_0.1.txt", "inst00_m2_30_0.2.txt"]);

    let instance = lib.join("inst00_m2_30_0.1.txt");
    let mut reports = Vec::new();
    for v in ["e-ddc", "h-ddc", "seq"] {
        let sol = dir.join(format!("{v}.sol"));
        let rep = dir.join(format!("{v}.json"));
        let out = run(&["solve", "--variant", v, "--instance", s(&instance), "--out", s(&sol), "--report", s(&rep), "--workers", "2"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(fs::read_to_string(&sol).unwrap().starts_with("CROWDSHIP-SOLUTION v1\n"));
        reports.push(rep);
    }
    let table = dir.join("gaps.tsv");
    let mut args = vec!["gaps", "--out", s(&table), "--reports"];
    args.extend(reports.iter().map(|p| s(p)));
    assert_eq!(run(&args).status.code(), Some(0));
    let text = fs::read_to_string(&table).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("instance\tvariant\t"));
    let seq: Vec<&str> = rows[3].split('\t').collect();
    assert_eq!(seq[1], "SEQ");
    assert!(seq[6].parse::<f64>().unwrap() >= 0.0);

    let mut args = vec!["sensitivity", "--group-by", "class", "--instance-dir", s(&lib), "--reports"];
    args.extend(reports.iter().map(|p| s(p)));
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("group\toffers\t"));
}

#[test]
fn oracle_subcommand_and_guard() {
    let dir = scratch("oracle");
    assert_eq!(run(&["generate", "--out-dir", s(&dir), "--tiny", "2"]).status.code(), Some(0));
    let tiny = dir.join("tiny000.txt");
    let out = run(&["oracle", "--instance", s(&tiny)]);
    assert_eq!(out.status.code(), Some(0));
    let printed: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    let expected = crowdship_core::oracle::solve(&load_instance(&tiny).unwrap()).unwrap().objective;
    assert_eq!(printed, expected);

    let big = dir.join("big");
    run(&["generate", "--out-dir", s(&big), "--n-full-instances", "1", "--task-sizes", "30", "--driver-ratios", "0.1", "--patterns", "c1"]);
    let out = run(&["oracle", "--instance", s(&big.join("inst00_c1_30_0.1.txt"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too large"));
}

#[test]
fn time_limit_exit_code() {
    let dir = scratch("limit");
    run(&["generate", "--out-dir", s(&dir), "--n-full-instances", "1", "--task-sizes", "60", "--driver-ratios", "0.5", "--patterns", "m1"]);
    let sol = dir.join("s.txt");
    let out = run(&[
        "solve", "--variant", "e-dd", "--instance", s(&dir.join("inst00_m1_60_0.5.txt")), "--out", s(&sol),
        "--time-limit", "0.01",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(fs::read_to_string(&sol).unwrap().contains("STATUS time_limit"));
}
