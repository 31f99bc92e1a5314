//! End-to-end runs of the `gprior-mix` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gprior_mix::io::report_body;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gprior-mix"));
    c.env_remove("GPRIOR_MIX_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

/// y depends on x1 only; x2 and x3 are unrelated patterns.
fn toy_csv() -> String {
    let mut s = String::from("y,x1,x2,x3\n");
    for i in 0..40 {
        let x1 = (i % 9) as f64 - 4.0;
        let x2 = ((i * 7) % 5) as f64;
        let x3 = ((i * 3) % 11) as f64 / 3.0;
        let noise = (((i * 37) % 13) as f64 - 6.0) / 12.0;
        s += &format!("{},{x1},{x2},{x3}\n", 2.0 + 1.3 * x1 + noise);
    }
    s
}

#[test]
fn select_finds_the_active_regressor() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", &toy_csv());
    let o = run(&["select", "--data", &data]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8_lossy(&o.stdout);
    let first = out.lines().find(|l| l.contains('{')).expect("ranking row");
    assert!(first.contains("{1}"), "{out}");
}

#[test]
fn constant_response_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "c.csv", "y,x1\n3,1\n3,2\n3,4\n3,0\n3,5\n");
    assert_eq!(code(&run(&["select", "--data", &data])), 3);
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let square = write(dir.path(), "sq.csv", "y,x1,x2,x3\n1,2,3,1\n2,1,0,4\n3,5,1,1\n");
    assert_eq!(code(&run(&["select", "--data", &square])), 2);

    let missing = write(dir.path(), "m.csv", "y,x1\n1,2\n2,\n3,1\n4,5\n");
    assert_eq!(code(&run(&["select", "--data", &missing])), 2);

    let data = write(dir.path(), "toy.csv", &toy_csv());
    assert_eq!(code(&run(&["select", "--data", &data, "--prior", "no-such-prior"])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);

    let zero = write(dir.path(), "zero.toml", "scheme = \"table1\"\nreplicates = 0\n");
    let out = dir.path().join("out");
    let o = run(&["--config", &zero, "--out-dir", out.to_str().unwrap(), "table1"]);
    assert_eq!(code(&o), 2);

    let unknown = write(dir.path(), "u.toml", "scheme = \"table1\"\nreplicatez = 3\nfoo = 1\n");
    let o = run(&["--config", &unknown, "--out-dir", out.to_str().unwrap(), "table1"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("replicatez") && err.contains("foo"), "{err}");
}

const SMALL_TABLE1: &str = r#"
scheme = "table1"
n_list = [30, 40]
p_plus_1_list = [6]
error_dist = "normal"
replicates = 3
search = "enumerate"
"#;

#[test]
fn table1_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t.toml", SMALL_TABLE1);
    let bodies: Vec<(String, String)> = [("a", "1"), ("b", "3")]
        .iter()
        .map(|(name, threads)| {
            let out = dir.path().join(name);
            let o = run(&["--config", &cfg, "--out-dir", out.to_str().unwrap(), "--threads", threads, "table1"]);
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
            let summary = fs::read_to_string(out.join("table1_summary.csv")).unwrap();
            assert!(summary.starts_with("# command: table1\n"));
            let raw = fs::read_to_string(out.join("table1_raw.csv")).unwrap();
            (report_body(&summary), report_body(&raw))
        })
        .collect();
    assert_eq!(bodies[0], bodies[1]);
    // Six priors times two sample sizes, one target each.
    assert_eq!(bodies[0].0.lines().count(), 1 + 6 * 2);
    assert_eq!(bodies[0].1.lines().count(), 1 + 6 * 2 * 3);
}

#[test]
fn seed_flag_changes_the_draws() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t.toml", SMALL_TABLE1);
    let raw: Vec<String> = ["11", "12"]
        .iter()
        .map(|seed| {
            let out = dir.path().join(seed);
            let o = run(&["--config", &cfg, "--out-dir", out.to_str().unwrap(), "--seed", seed, "table1"]);
            assert_eq!(code(&o), 0);
            report_body(&fs::read_to_string(out.join("table1_raw.csv")).unwrap())
        })
        .collect();
    assert_ne!(raw[0], raw[1]);
}

#[test]
fn priors_list_and_info_check_run() {
    let o = run(&["priors-list"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout);
    for label in ["proposed-I", "proposed-II", "zellner-siow", "robust"] {
        assert!(out.contains(label), "{label} missing from\n{out}");
    }
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out-dir", dir.path().to_str().unwrap(), "info-check", "--p", "3"]);
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("info_profiles.csv").exists());
    assert!(dir.path().join("info_thresholds.csv").exists());
}
