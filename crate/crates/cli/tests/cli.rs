use std::fs;
use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["hubforge"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = hubforge_cli::run_with(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let mut with = args.to_vec();
    with.push("--json");
    let (code, out, err) = run(&with);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn criteria_square_rule() {
    let r = json(&["criteria", "--spec", "power:p=2,c=1"]);
    assert_eq!(r["verdict"], "UniquePersistentHub");
    assert_eq!(r["theorem"], "controlled-superlinear");
    assert_eq!(r["witnesses"]["kappa"], 1.0);
}

#[test]
fn killed_size_mean() {
    let r = json(&["killed-size", "--spec", "constant:c=1", "--alpha", "2", "--replicates", "10000", "--seed", "7"]);
    let (mean, se) = (r["mean"].as_f64().unwrap(), r["std_error"].as_f64().unwrap());
    assert!((mean - 2.0).abs() <= 3.0 * se, "{mean} +- {se}");
}

#[test]
fn grow_zero_steps() {
    let r = json(&["grow", "--spec", "linear:a=1,b=1", "--steps", "0"]);
    assert_eq!(r["nodes"], 1);
    assert_eq!(r["trace"]["switches"].as_array().unwrap().len(), 0);
}

#[test]
fn summary_line_and_csv_to_stdout() {
    let (code, out, _) = run(&["catchup", "--spec", "power:p=2,c=1", "--nodes", "50", "--replicates", "4"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("catchup: median") && out.lines().count() == 1, "{out}");
    let (code, out, _) = run(&["catchup", "--spec", "power:p=2,c=1", "--nodes", "50", "--replicates", "4", "--out", "-"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "replicate,catch_up_size");
    assert_eq!(lines.len(), 5);
}

#[test]
fn writes_csv_and_report_files() {
    let (csv, report) = (scratch("grow.csv"), scratch("grow.json"));
    let (code, _, err) = run(&[
        "grow",
        "--spec",
        "linear:a=1,b=1",
        "--steps",
        "20",
        "--out",
        csv.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 21);
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["nodes"], 21);
}

#[test]
fn same_seed_same_bytes() {
    let args = ["persistence", "--spec", "constant:c=1", "--checkpoints", "10,100", "--n-max", "300", "--replicates", "8", "--out", "-"];
    assert_eq!(run(&args).1, run(&args).1);
    let mut other = args.to_vec();
    other.extend(["--seed", "9"]);
    assert_ne!(run(&args).1, run(&other).1);
}

#[test]
fn config_file_supplies_flags() {
    let path = scratch("killed.toml");
    fs::write(&path, "spec = \"constant:c=1\"\nalpha = 3\nreplicates = 500\njson = true\n").unwrap();
    let (code, out, err) = run(&["killed-size", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["alpha"], 3.0);
    assert_eq!(r["replicates"], 500);

    // the command line wins over the file
    let (code, out, _) = run(&["killed-size", "--config", path.to_str().unwrap(), "--replicates", "200"]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["replicates"], 200);
}

#[test]
fn config_errors_name_the_line() {
    let path = scratch("bad.toml");
    fs::write(&path, "spec = \"constant:c=1\"\n\nwobble = 4\n").unwrap();
    let (code, _, err) = run(&["killed-size", "--alpha", "2", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3") && err.contains("wobble"), "{err}");

    fs::write(&path, "spec = \n").unwrap();
    let (code, _, err) = run(&["killed-size", "--alpha", "2", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 1"), "{err}");

    let (code, _, _) = run(&["killed-size", "--alpha", "2", "--config", "/nonexistent/x.toml"]);
    assert_eq!(code, 2);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["grow", "--help"]).0, 0);
    assert_eq!(run(&[]).0, 2);
    assert_eq!(run(&["teleport"]).0, 2);
    assert_eq!(run(&["grow", "--spec", "nope:x=1"]).0, 2);
    assert_eq!(run(&["grow", "--spec", "linear:a=1,b=1", "--steps", "-3"]).0, 2);
    assert_eq!(run(&["overtake", "--spec", "linear:a=1,b=1", "--k", "0", "--lambda", "1"]).0, 2);
    // numeric preconditions
    assert_eq!(run(&["killed-size", "--spec", "constant:c=1", "--alpha", "1"]).0, 3);
    assert_eq!(run(&["overtake", "--spec", "constant:c=1", "--k", "3", "--lambda", "1"]).0, 3);
}

#[test]
fn embed_check_degenerate_and_recursive() {
    let (code, out, _) = run(&["embed-check", "--spec", "linear:a=1,b=1", "--nodes", "2", "--replicates", "50", "--out", "-"]);
    assert_eq!(code, 0);
    assert!(out.contains("skipped"), "{out}");
    let r = json(&["embed-check", "--spec", "constant:c=1", "--nodes", "50", "--replicates", "5000"]);
    assert_eq!(r["pass"], true);
}

#[test]
fn env_overrides_threads() {
    let bin = env!("CARGO_BIN_EXE_hubforge");
    let args = ["overtake", "--spec", "linear:a=1,b=1", "--k", "2", "--lambda", "0.5", "--replicates", "3000", "--out", "-"];
    let plain = Command::new(bin).args(args).arg("--threads").arg("1").output().unwrap();
    let env = Command::new(bin).args(args).arg("--threads").arg("1").env("HUBFORGE_THREADS", "4").output().unwrap();
    assert!(plain.status.success() && env.status.success());
    assert_eq!(plain.stdout, env.stdout);
    let bad = Command::new(bin).args(args).env("HUBFORGE_THREADS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
