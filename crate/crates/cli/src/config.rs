//! Run configuration: a single JSON tree validated strictly against the
//! schema below (unknown keys are rejected). Coefficient expressions use the
//! grammar documented in `ellq_core::expr`.
//!
//! ```json
//! {
//!   "problem": "1d-basic",
//!   "resolution": 129,
//!   "seed": 42,
//!   "output": { "write_fields": true },
//!   "solve": { "lambda": 0.0, "newton_tol": 1e-10, "max_iter": 50,
//!              "damping": 0.5, "variable": "direct-u", "multistart": 8 },
//!   "continuation": { "lambda_min": -2.0, "sup_norm_cap": 1000.0,
//!                     "initial_step": 0.05, "min_step": 1e-6,
//!                     "max_step": 1.0, "max_points": 3000 },
//!   "harnack": { "samples": 200, "p": 2.0, "epsilon": 0.5, "radius": 0.2,
//!                "x0": [0.5, 0.0], "s": 1.0, "resolutions": [65, 129],
//!                "a_const": 0.0, "inequalities": ["boundary"] },
//!   "certify": { "lambda1": 0.5, "lambda2": 5.0, "witnesses": 5 }
//! }
//! ```
//!
//! `problem` is either a catalog name or an inline object:
//!
//! ```json
//! { "name": "custom", "domain": { "interval": [0.0, 1.0] },
//!   "c_plus": "bump(x,0.4,0.6)", "c_minus": "0.8*bump(x,0,0.15)",
//!   "mu": "1", "h": "0.5*bump(x,0.42,0.58)",
//!   "mu1": 1.0, "buffer_epsilon": 0.1, "default_resolution": 129 }
//! ```

use anyhow::{bail, Context};
use serde::Deserialize;

use ellq_core::{builtin, Domain, ProblemSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub harnack: HarnackConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ProblemConfig {
    Builtin(String),
    Inline(InlineProblem),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineProblem {
    pub name: String,
    pub domain: DomainConfig,
    pub c_plus: String,
    pub c_minus: String,
    pub mu: String,
    pub h: String,
    pub mu1: f64,
    pub buffer_epsilon: f64,
    #[serde(default = "default_resolution")]
    pub default_resolution: usize,
}

fn default_resolution() -> usize {
    129
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum DomainConfig {
    Interval([f64; 2]),
    Rectangle([[f64; 2]; 2]),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_true")]
    pub write_fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { write_fields: true }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default)]
    pub variable: VariableConfig,
    #[serde(default = "default_multistart")]
    pub multistart: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

fn default_newton_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    50
}

fn default_damping() -> f64 {
    0.5
}

fn default_multistart() -> usize {
    8
}

#[derive(Debug, Default, Clone, Copy, Deserialize, PartialEq, Eq)]
pub enum VariableConfig {
    #[default]
    #[serde(rename = "direct-u")]
    DirectU,
    #[serde(rename = "cole-hopf")]
    ColeHopf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationConfig {
    #[serde(default = "default_lambda_min")]
    pub lambda_min: f64,
    #[serde(default = "default_cap")]
    pub sup_norm_cap: f64,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    #[serde(default = "default_min_step")]
    pub min_step: f64,
    #[serde(default = "default_max_step")]
    pub max_step: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

fn default_lambda_min() -> f64 {
    -2.0
}

fn default_cap() -> f64 {
    1e3
}

fn default_initial_step() -> f64 {
    0.05
}

fn default_min_step() -> f64 {
    1e-6
}

fn default_max_step() -> f64 {
    1.0
}

fn default_max_points() -> usize {
    3000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_x0")]
    pub x0: [f64; 2],
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default)]
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub a_const: f64,
    #[serde(default = "default_inequalities")]
    pub inequalities: Vec<String>,
}

impl Default for HarnackConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

fn default_samples() -> usize {
    200
}

fn default_p() -> f64 {
    2.0
}

fn default_epsilon() -> f64 {
    0.5
}

fn default_radius() -> f64 {
    0.2
}

fn default_x0() -> [f64; 2] {
    [0.5, 0.0]
}

fn default_s() -> f64 {
    1.0
}

fn default_inequalities() -> Vec<String> {
    vec!["boundary".into()]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default)]
    pub lambda1: Option<f64>,
    #[serde(default)]
    pub lambda2: Option<f64>,
    #[serde(default = "default_witnesses")]
    pub witnesses: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

fn default_witnesses() -> usize {
    5
}

impl RunConfig {
    /// Parses and validates the config; any schema violation is a config error.
    pub fn parse(text: &str) -> anyhow::Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).context("config does not match the schema")?;
        if !(cfg.solve.newton_tol > 0.0) {
            bail!("solve.newton_tol must be positive");
        }
        if !(cfg.solve.damping > 0.0 && cfg.solve.damping < 1.0) {
            bail!("solve.damping must lie in (0, 1)");
        }
        if !(cfg.harnack.epsilon > 0.0) {
            bail!("harnack.epsilon must be positive");
        }
        if !(cfg.harnack.radius > 0.0) {
            bail!("harnack.radius must be positive");
        }
        if !(cfg.harnack.p > 1.0) {
            bail!("harnack.p must exceed 1");
        }
        if let Some(r) = cfg.resolution {
            if r < 3 {
                bail!("resolution must be at least 3");
            }
        }
        Ok(cfg)
    }

    /// Resolves the problem definition (catalog lookup or inline expressions).
    pub fn problem_spec(&self) -> anyhow::Result<ProblemSpec> {
        match &self.problem {
            ProblemConfig::Builtin(name) => {
                builtin(name).with_context(|| format!("unknown builtin problem '{name}'"))
            }
            ProblemConfig::Inline(p) => {
                let domain = match p.domain {
                    DomainConfig::Interval([a, b]) => Domain::Interval { a, b },
                    DomainConfig::Rectangle([c0, c1]) => {
                        Domain::Rectangle { corner0: c0, corner1: c1 }
                    }
                };
                ProblemSpec::from_expressions(
                    &p.name,
                    domain,
                    &p.c_plus,
                    &p.c_minus,
                    &p.mu,
                    &p.h,
                    p.mu1,
                    p.buffer_epsilon,
                    p.default_resolution,
                )
                .context("invalid coefficient expression")
            }
        }
    }
}

/// FNV-1a hash of the raw config text, printed in every output header so a
/// file can be traced back to the exact configuration that produced it.
pub fn config_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let cfg = RunConfig::parse(r#"{ "problem": "1d-basic" }"#).unwrap();
        assert!(matches!(cfg.problem, ProblemConfig::Builtin(_)));
        assert_eq!(cfg.solve.newton_tol, 1e-10);
        assert_eq!(cfg.harnack.samples, 200);
        cfg.problem_spec().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse(r#"{ "problem": "1d-basic", "bogus": 1 }"#).is_err());
        assert!(
            RunConfig::parse(r#"{ "problem": "1d-basic", "solve": { "lambdaa": 1.0 } }"#).is_err()
        );
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(RunConfig::parse(
            r#"{ "problem": "1d-basic", "harnack": { "epsilon": -0.5 } }"#
        )
        .is_err());
        assert!(RunConfig::parse(
            r#"{ "problem": "1d-basic", "solve": { "damping": 1.5 } }"#
        )
        .is_err());
    }

    #[test]
    fn inline_problem_builds() {
        let cfg = RunConfig::parse(
            r#"{ "problem": { "name": "inline", "domain": { "interval": [0.0, 1.0] },
                 "c_plus": "bump(x,0.4,0.6)", "c_minus": "0", "mu": "1",
                 "h": "0.5*bump(x,0.42,0.58)", "mu1": 1.0, "buffer_epsilon": 0.1 } }"#,
        )
        .unwrap();
        let spec = cfg.problem_spec().unwrap();
        assert_eq!(spec.default_resolution, 129);
        let mesh = spec.mesh(33).unwrap();
        let coeffs = spec.coefficients(&mesh).unwrap();
        assert!(coeffs.c_plus.max() > 0.9);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash("abc");
        assert_eq!(a, config_hash("abc"));
        assert_ne!(a, config_hash("abd"));
        assert_eq!(a.len(), 16);
    }
}
