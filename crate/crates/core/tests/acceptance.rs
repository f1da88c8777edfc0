//! Runs every acceptance criterion at the default configuration and prints
//! one pass/fail line per criterion.

use campanato_core::experiment::{criteria, ExperimentConfig};
use std::io::Write;
use std::time::Instant;

/// Writes straight to stderr, past the test harness's output capture, so the
/// lines appear in ordinary `cargo test` logs.
fn report(line: &str) {
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

#[test]
fn all_criteria_pass_at_defaults() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let config = ExperimentConfig { out: dir.path().to_path_buf(), ..ExperimentConfig::default() };

    let mut failed = Vec::new();
    for id in 1..=15 {
        let t = Instant::now();
        let outcome = criteria::run(id, &config);
        report(&format!("{} ({:.1} s)", outcome.summary_line(), t.elapsed().as_secs_f64()));
        if !outcome.pass() {
            for c in outcome.checks.iter().filter(|c| !c.is_info() && !c.pass) {
                report(&format!("    failed: {} n={} s={:?} value {:.6e} tolerance {:?}", c.name, c.n, c.s, c.value, c.tolerance));
            }
            for e in &outcome.errors {
                report(&format!("    error: {e}"));
            }
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
