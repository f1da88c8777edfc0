//! Experiment configuration: a TOML file of `key = value` sections, command
//! line overrides, and range checks against each suite's hypotheses.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Every suite name, in the order suites run.
pub const SUITES: [&str; 11] = [
    "mobius",
    "quadrature",
    "gradients",
    "fractional",
    "gleason",
    "riemann_stieltjes",
    "carleson",
    "equivalence",
    "atoms",
    "tent",
    "determinism",
];

/// Criteria run by a suite.
pub fn suite_criteria(suite: &str) -> &'static [u32] {
    match suite {
        "mobius" => &[1],
        "quadrature" => &[2],
        "gradients" => &[3, 9],
        "fractional" => &[4],
        "gleason" => &[5],
        "riemann_stieltjes" => &[6],
        "carleson" => &[7, 13, 14],
        "equivalence" => &[8],
        "atoms" => &[10, 11],
        "tent" => &[12],
        "determinism" => &[15],
        _ => &[],
    }
}

/// The suite a criterion belongs to.
pub fn criterion_suite(id: u32) -> Option<&'static str> {
    SUITES.iter().copied().find(|s| suite_criteria(s).contains(&id))
}

/// Overrides of the dimension and smoothness index used by the suites.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamConfig {
    /// Run every suite in this dimension only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Replace each suite's smoothness indices with this list.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
}

/// Grid resolution shared by the supremum-based suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct GridConfig {
    /// Times each suite's base grid is doubled before use.
    pub doublings: u32,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Base quadrature level; stability checks compare against `level + 1`.
    pub level: u32,
    pub suites: Vec<String>,
    /// Output directory. Not echoed into reports, so runs into different
    /// directories produce identical files.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub params: ParamConfig,
    pub grid: GridConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 20_240_917,
            level: 1,
            suites: SUITES.iter().map(|s| s.to_string()).collect(),
            out: PathBuf::from("results"),
            params: ParamConfig::default(),
            grid: GridConfig::default(),
        }
    }
}

const REFERENCE: &str = r#"# Experiment configuration reference.
#
# Every key is optional; the values below are the defaults.

# Seed of every random stream. Each suite derives its own stream from
# (seed, suite name), so suites give the same results alone or together.
seed = 20240917

# Base quadrature level (1..=6). Stability checks rerun at level + 1 on a
# doubled grid and compare.
level = 1

# Suites to run, in this order. An empty list runs nothing and exits 0.
#   mobius             involution, origin swap and defect identity
#   quadrature         sphere rules against exact monomial integrals
#   gradients          tangential identity; gradient-measure Carleson ratios
#   fractional         fractional kernel identity, composition, inversion
#   gleason            Gleason decompositions of monomials and atoms
#   riemann_stieltjes  T_g / S_g symmetry, multiplier and radial identities
#   carleson           point-mass and dual-form constants, T_{a,b}, two-kernel bound
#   equivalence        oscillation / Mobius / Green norm ratios
#   atoms              canonical atoms; lattice synthesis bound
#   tent               tent-space embedding ratios
#   determinism        reruns the cheap suites twice and compares bytes
suites = ["mobius", "quadrature", "gradients", "fractional", "gleason", "riemann_stieltjes", "carleson", "equivalence", "atoms", "tent", "determinism"]

# Output directory for <suite>.csv, summary.txt and summary.json.
out = "results"

[params]
# Uncomment to run every suite in one dimension (1..=3).
# n = 2
# Uncomment to replace the smoothness indices of the s-dependent suites.
# s = [0.25]

[grid]
# Number of times each suite's base grid is doubled.
doublings = 0
"#;

impl ExperimentConfig {
    /// Commented listing of every key with its default.
    pub fn reference() -> &'static str {
        REFERENCE
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0);
            Error::Parse { line, msg: e.message().to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// The configuration as written into report headers (without `out`).
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Dimensions a criterion runs in: the override if set, else `default`.
    pub fn dims(&self, default: &[usize]) -> Vec<usize> {
        match self.params.n {
            Some(n) => vec![n],
            None => default.to_vec(),
        }
    }

    pub fn s_values(&self, default: &[f64]) -> Vec<f64> {
        match &self.params.s {
            Some(s) => s.clone(),
            None => default.to_vec(),
        }
    }

    /// Checks names and ranges, then every selected suite's hypotheses.
    pub fn validate(&self) -> Result<()> {
        for s in &self.suites {
            if !SUITES.contains(&s.as_str()) {
                return Err(Error::Config(format!("unknown suite {s:?}; known suites: {}", SUITES.join(", "))));
            }
        }
        if !(1..=6).contains(&self.level) {
            return Err(Error::Config(format!("level {} outside 1..=6", self.level)));
        }
        if self.grid.doublings > 3 {
            return Err(Error::Config(format!("grid doublings {} exceed 3", self.grid.doublings)));
        }
        if let Some(n) = self.params.n {
            if !(1..=3).contains(&n) {
                return Err(Error::Config(format!("dimension n = {n} outside 1..=3")));
            }
        }
        if let Some(s) = &self.params.s {
            if s.is_empty() {
                return Err(Error::Config("s list is empty".into()));
            }
            if let Some(x) = s.iter().find(|x| !x.is_finite()) {
                return Err(Error::Config(format!("s = {x} is not finite")));
            }
        }
        for suite in &self.suites {
            self.check_suite(suite)?;
        }
        Ok(())
    }

    fn check_suite(&self, suite: &str) -> Result<()> {
        let fail = |what: String| Err(Error::Hypothesis(format!("suite {suite}: {what}")));
        let open_half = |n: usize, s: f64| s > -0.5 && s < n as f64 / 2.0;
        let closed_half = |n: usize, s: f64| s > -0.5 && s <= n as f64 / 2.0;
        match suite {
            "gradients" => {
                for n in self.dims(&[2, 3]) {
                    for s in self.s_values(&[0.25]) {
                        if !(s > -0.5) {
                            return fail(format!("gradient characterizations need s > -1/2 (s = {s}, n = {n})"));
                        }
                        if !(s < n as f64 / 2.0) {
                            return fail(format!("gradient characterizations need s < n/2 (s = {s}, n = {n})"));
                        }
                    }
                    if n < 2 {
                        return fail("tangential derivatives need n >= 2".into());
                    }
                }
            }
            "equivalence" => {
                for n in self.dims(&[1, 2]) {
                    for s in self.s_values(&[-0.25, 0.0, 0.25]) {
                        if !closed_half(n, s) {
                            return fail(format!("norm equivalences need -1/2 < s <= n/2 (s = {s}, n = {n})"));
                        }
                    }
                }
            }
            "atoms" => {
                for n in self.dims(&[1, 2]) {
                    for s in self.s_values(&[-0.25, 0.0, 0.25]) {
                        if !closed_half(n, s) {
                            return fail(format!("canonical atoms need -1/2 < s <= n/2 (s = {s}, n = {n})"));
                        }
                        if !(s > -0.5 && s < 0.5) {
                            return fail(format!("lattice synthesis needs -1/2 < s < 1/2 (s = {s})"));
                        }
                    }
                }
            }
            "tent" => {
                for n in self.dims(&[1]) {
                    for s in self.s_values(&[0.25]) {
                        if !open_half(n, s) {
                            return fail(format!("tent embedding needs -1/2 < s < n/2 (s = {s}, n = {n})"));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_page_parses_to_the_defaults() {
        let c = ExperimentConfig::from_toml(ExperimentConfig::reference()).unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn echo_round_trips_without_the_output_path() {
        let mut c = ExperimentConfig::default();
        c.params.s = Some(vec![0.25, -0.25]);
        c.out = PathBuf::from("elsewhere");
        let back = ExperimentConfig::from_toml(&c.echo()).unwrap();
        assert_eq!(back.params, c.params);
        assert_eq!(back.out, PathBuf::from("results"));
        assert!(!c.echo().contains("elsewhere"));
    }

    #[test]
    fn gradient_range_violation_names_the_hypothesis() {
        let mut c = ExperimentConfig::default();
        c.suites = vec!["gradients".into()];
        c.params.n = Some(1);
        c.params.s = Some(vec![0.9]);
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("s < n/2"), "{e}");
        assert!(e.contains("gradients"), "{e}");
    }

    #[test]
    fn unknown_keys_and_suites_are_rejected() {
        assert!(ExperimentConfig::from_toml("sed = 3").is_err());
        let c = ExperimentConfig::from_toml("suites = [\"nope\"]").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn parse_errors_carry_a_line() {
        match ExperimentConfig::from_toml("seed = 1\nlevel = \"x\"\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_criterion_has_one_suite() {
        for id in 1..=15 {
            assert!(criterion_suite(id).is_some(), "{id}");
        }
    }
}
