use std::process::Command;

fn campanato() -> Command {
    Command::new(env!("CARGO_BIN_EXE_campanato"))
}

#[test]
fn empty_suite_list_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = campanato().args(["--suite", ""]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn mobius_suite_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = campanato().args(["--suite", "mobius", "--seed", "7"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(dir.path().join("mobius.csv")).unwrap();
    assert!(csv.contains("# seed = 7"));
    assert!(csv.contains("criterion,check_name,n,s,value,probes,tolerance,pass"));
    assert!(!csv.contains(",false"));
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("overall: pass"));
}

#[test]
fn out_of_range_smoothness_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("never");
    let out = campanato().args(["--suite", "gradients", "--n", "1", "--s", "0.9"]).arg("--out").arg(&target).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("s < n/2"), "{err}");
    assert!(!target.exists());
}

#[test]
fn unknown_suites_list_the_known_ones() {
    let out = campanato().args(["--suite", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("riemann_stieltjes"));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 1\nsuites = [\"gleason\"]\n").unwrap();
    let out = campanato().arg("--config").arg(&cfg).args(["--seed", "5", "--suite", "mobius"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("mobius.csv")).unwrap();
    assert!(csv.contains("# seed = 5"));
    assert!(!dir.path().join("gleason.csv").exists());
}

#[test]
fn negative_smoothness_values_parse() {
    let dir = tempfile::tempdir().unwrap();
    let out = campanato().args(["--suite", "mobius", "--s", "-0.25"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn print_defaults_shows_the_reference_page() {
    let out = campanato().arg("--print-defaults").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("seed = 20240917"));
    assert!(text.contains("[grid]"));
}
