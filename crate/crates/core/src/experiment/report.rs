//! Running suites and writing their reports.

use super::config::suite_criteria;
use super::criteria;
use super::{Check, CriterionOutcome, ExperimentConfig};
use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: &str = "criterion,check_name,n,s,value,probes,tolerance,pass";

/// Suites rerun by the determinism check: randomized and cheap.
pub const DETERMINISM_SUITES: [&str; 5] = ["mobius", "quadrature", "fractional", "gleason", "riemann_stieltjes"];

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub criteria: Vec<CriterionOutcome>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config: String,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn csv_row(id: u32, c: &Check) -> String {
    let s = c.s.map(|v| v.to_string()).unwrap_or_default();
    let tol = c.tolerance.map(fmt_f).unwrap_or_default();
    let pass = if c.is_info() { "info" } else if c.pass { "true" } else { "false" };
    format!("{id},{},{},{s},{},{},{tol},{pass}", c.name, c.n, fmt_f(c.value), c.probes)
}

fn header_echo(config: &str) -> String {
    config.lines().map(|l| format!("# {l}\n")).collect()
}

/// The CSV text of one suite: the config echo as `#` comments, the column
/// header, one row per check and one `error` row per failure.
pub fn suite_csv(config_echo: &str, report: &SuiteReport) -> String {
    let mut out = header_echo(config_echo);
    out.push_str(&format!("# suite = {}\n", report.suite));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for o in &report.criteria {
        for c in &o.checks {
            out.push_str(&csv_row(o.id, c));
            out.push('\n');
        }
        for e in &o.errors {
            let _ = writeln!(out, "{},error: {},,,,,,false", o.id, e.replace(',', ";"));
        }
    }
    out
}

fn summary_text(config_echo: &str, suites: &[SuiteReport], pass: bool) -> String {
    let mut out = header_echo(config_echo);
    for s in suites {
        let _ = writeln!(out, "suite {}: {}", s.suite, if s.pass() { "pass" } else { "FAIL" });
        for c in &s.criteria {
            let _ = writeln!(out, "  {}", c.summary_line());
        }
    }
    let _ = writeln!(out, "overall: {}", if pass { "pass" } else { "FAIL" });
    out
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(path, e))
}

/// Runs the selected suites in order and writes `<suite>.csv`, `summary.txt`
/// and `summary.json` into `config.out`. A failing suite never stops the
/// ones after it.
pub fn run_suites(config: &ExperimentConfig) -> Result<RunSummary> {
    run_suites_with(config, |_| {})
}

/// As [`run_suites`], calling `progress` after each criterion.
pub fn run_suites_with(config: &ExperimentConfig, mut progress: impl FnMut(&CriterionOutcome)) -> Result<RunSummary> {
    config.validate()?;
    let dir = &config.out;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.clone(), e))?;
    let echo = config.echo();
    let mut suites = Vec::new();
    let mut files = Vec::new();
    for name in &config.suites {
        let criteria: Vec<CriterionOutcome> = suite_criteria(name)
            .iter()
            .map(|&id| {
                let o = criteria::run(id, config);
                progress(&o);
                o
            })
            .collect();
        let report = SuiteReport { suite: name.clone(), criteria };
        let file = format!("{name}.csv");
        write(dir, &file, &suite_csv(&echo, &report))?;
        files.push(file);
        suites.push(report);
    }
    let pass = suites.iter().all(|s| s.pass());
    write(dir, "summary.txt", &summary_text(&echo, &suites, pass))?;
    files.push("summary.txt".into());
    let mut summary = RunSummary { config: echo, suites, pass, files };
    summary.files.push("summary.json".into());
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(format!("json: {e}")))?;
    write(dir, "summary.json", &json)?;
    Ok(summary)
}

/// Criterion 15: two runs of the same configuration into different
/// directories produce byte-identical CSV files.
pub fn determinism(config: &ExperimentConfig) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(15, criteria::title(15));
    let root: PathBuf = config.out.join("determinism");
    let mut runs = Vec::new();
    for tag in ["run_a", "run_b"] {
        let mut c = config.clone();
        c.suites = DETERMINISM_SUITES.iter().map(|s| s.to_string()).collect();
        c.out = root.join(tag);
        if let Some(r) = out.attempt("run", run_suites(&c)) {
            runs.push((c.out, r));
        }
    }
    if runs.len() != 2 {
        return out;
    }
    for suite in DETERMINISM_SUITES {
        let file = format!("{suite}.csv");
        let read = |d: &Path| std::fs::read(d.join(&file)).map_err(|e| Error::io(d.join(&file), e));
        let (Some(a), Some(b)) = (out.attempt("read", read(&runs[0].0)), out.attempt("read", read(&runs[1].0))) else { continue };
        let differ = if a == b { 0.0 } else { 1.0 };
        out.push(Check::at_most(format!("identical[{file}]"), 0, None, differ, a.len(), 0.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_selection_writes_an_empty_passing_report() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::default();
        c.suites.clear();
        c.out = dir.path().to_path_buf();
        let r = run_suites(&c).unwrap();
        assert!(r.pass);
        assert_eq!(r.exit_code(), 0);
        assert!(r.suites.is_empty());
        assert!(dir.path().join("summary.json").exists());
    }

    #[test]
    fn mobius_suite_passes_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::default();
        c.suites = vec!["mobius".into()];
        c.out = dir.path().to_path_buf();
        let r = run_suites(&c).unwrap();
        assert!(r.pass);
        let csv = std::fs::read_to_string(dir.path().join("mobius.csv")).unwrap();
        assert!(csv.starts_with("# seed = "));
        assert!(csv.contains(CSV_HEADER));
    }

    #[test]
    fn invalid_configs_are_rejected_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::default();
        c.suites = vec!["gradients".into()];
        c.params.n = Some(1);
        c.params.s = Some(vec![0.9]);
        c.out = dir.path().join("out");
        assert!(matches!(run_suites(&c), Err(Error::Hypothesis(_))));
        assert!(!c.out.exists());
    }

    #[test]
    fn suite_order_does_not_change_results() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::default();
        c.suites = vec!["gleason".into(), "mobius".into()];
        c.out = dir.path().join("a");
        run_suites(&c).unwrap();
        c.suites = vec!["mobius".into()];
        c.out = dir.path().join("b");
        run_suites(&c).unwrap();
        let a = std::fs::read(dir.path().join("a/mobius.csv")).unwrap();
        let b = std::fs::read(dir.path().join("b/mobius.csv")).unwrap();
        // Only the echoed suite list differs.
        let strip = |v: &[u8]| String::from_utf8_lossy(v).lines().filter(|l| !l.starts_with("# suites")).collect::<Vec<_>>().join("\n");
        assert_eq!(strip(&a), strip(&b));
    }
}
