//! Check suites: every acceptance criterion as a runnable function, the
//! configuration that selects them and the report files they produce.

pub mod config;
pub mod criteria;
pub mod report;

pub use config::{ExperimentConfig, GridConfig, ParamConfig, SUITES};
pub use report::{run_suites, RunSummary, SuiteReport};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// One measured quantity of a criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub n: usize,
    pub s: Option<f64>,
    pub value: f64,
    pub probes: usize,
    /// `None` marks an informational row that does not gate the criterion.
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, n: usize, s: Option<f64>, value: f64, probes: usize, tolerance: f64) -> Self {
        let pass = value.is_finite() && value <= tolerance;
        Check { name: name.into(), n, s, value, probes, tolerance: Some(tolerance), pass }
    }

    /// Passes when `value ≥ tolerance`.
    pub fn at_least(name: impl Into<String>, n: usize, s: Option<f64>, value: f64, probes: usize, tolerance: f64) -> Self {
        let pass = value.is_finite() && value >= tolerance;
        Check { name: name.into(), n, s, value, probes, tolerance: Some(tolerance), pass }
    }

    pub fn info(name: impl Into<String>, n: usize, s: Option<f64>, value: f64, probes: usize) -> Self {
        Check { name: name.into(), n, s, value, probes, tolerance: None, pass: true }
    }

    pub fn is_info(&self) -> bool {
        self.tolerance.is_none()
    }
}

/// Everything one criterion measured.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: String,
    pub checks: Vec<Check>,
    /// Failures that prevented a measurement.
    pub errors: Vec<String>,
}

impl CriterionOutcome {
    pub fn new(id: u32, title: impl Into<String>) -> Self {
        CriterionOutcome { id, title: title.into(), checks: Vec::new(), errors: Vec::new() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Records an error from a fallible step and returns its value.
    pub fn attempt<T>(&mut self, what: &str, r: crate::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("{what}: {e}"));
                None
            }
        }
    }

    pub fn pass(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().any(|c| !c.is_info()) && self.checks.iter().all(|c| c.pass)
    }

    /// The gating check that is furthest past its tolerance, for summaries.
    pub fn worst(&self) -> Option<&Check> {
        self.checks.iter().filter(|c| !c.is_info() && !c.pass).chain(self.checks.iter().filter(|c| !c.is_info())).next()
    }

    pub fn summary_line(&self) -> String {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        let gating = self.checks.iter().filter(|c| !c.is_info()).count();
        let failed = self.checks.iter().filter(|c| !c.is_info() && !c.pass).count();
        let mut line = format!("[{status}] criterion {:>2} {}: {}/{} checks pass", self.id, self.title, gating - failed, gating);
        if let Some(c) = self.checks.iter().find(|c| !c.is_info() && !c.pass) {
            line.push_str(&format!("; first failure {} (n={}) value {:.4e} vs {:.4e}", c.name, c.n, c.value, c.tolerance.unwrap_or(f64::NAN)));
        }
        if let Some(e) = self.errors.first() {
            line.push_str(&format!("; error: {e}"));
        }
        line
    }
}

/// FNV-1a, used only to turn a stream label into a seed offset that is
/// stable across platforms and compiler versions.
fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// The random stream owned by `label` under the run seed.
pub fn stream_rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label));
    rng
}

/// Seed for library routines that take a `u64` rather than an RNG.
pub fn stream_seed(seed: u64, label: &str) -> u64 {
    seed ^ fnv1a(label).rotate_left(17)
}

/// `[min, max]` of a set of positive ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut b: Option<Bracket> = None;
        for v in values {
            b = Some(match b {
                None => Bracket { lo: v, hi: v },
                Some(b) => Bracket { lo: b.lo.min(v), hi: b.hi.max(v) },
            });
        }
        b
    }

    /// Largest relative change of either endpoint.
    pub fn drift(&self, refined: &Bracket) -> f64 {
        ((refined.lo - self.lo).abs() / self.lo.abs()).max((refined.hi - self.hi).abs() / self.hi.abs())
    }

    /// Smallest `C` with the bracket inside `[1/C, C]`.
    pub fn spread(&self) -> f64 {
        self.hi.max(1.0 / self.lo)
    }
}

/// Relative change of a constant under refinement.
pub fn rel_drift(base: f64, refined: f64) -> f64 {
    (refined - base).abs() / base.abs()
}
