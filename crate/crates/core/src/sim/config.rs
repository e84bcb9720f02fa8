use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::graph::GraphSpec;
use crate::problem::{bandwidth_col_sizes, check_partition, even_sizes, BSplitRule};

use super::generate::Conditioning;
use super::metrics::Algorithm;
use super::signal::SignalSpec;
use super::SimError;

/// Where the problem instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSource {
    /// A directory written by `write_bundle`.
    Bundle { path: PathBuf },
    Generate(GeneratorSpec),
}

/// A random instance plus its partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub m: usize,
    pub n: usize,
    /// Problem seed; the run seed is used when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub conditioning: Conditioning,
    pub agents: usize,
    pub bandwidth: usize,
    /// Defaults to an even split of the `m` rows over the agents.
    #[serde(default)]
    pub row_sizes: Option<Vec<usize>>,
    /// Defaults to the fewest even portions that fit the bandwidth.
    #[serde(default)]
    pub col_sizes: Option<Vec<usize>>,
    #[serde(default)]
    pub b_split_rule: BSplitRule,
}

impl GeneratorSpec {
    pub fn row_sizes(&self) -> Vec<usize> {
        self.row_sizes.clone().unwrap_or_else(|| even_sizes(self.m, self.agents.max(1)))
    }

    pub fn col_sizes(&self) -> Vec<usize> {
        self.col_sizes.clone().unwrap_or_else(|| bandwidth_col_sizes(self.n, self.bandwidth))
    }
}

/// `"auto"` or an explicit step size.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "AlphaRaw", into = "AlphaRaw")]
pub enum AlphaChoice {
    /// `min(0.01, 0.5·α_max)` for the scheduled law, 0.01 otherwise.
    #[default]
    Auto,
    Value(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AlphaRaw {
    Number(f64),
    Word(String),
}

impl TryFrom<AlphaRaw> for AlphaChoice {
    type Error = String;

    fn try_from(raw: AlphaRaw) -> Result<Self, String> {
        match raw {
            AlphaRaw::Number(v) => Ok(AlphaChoice::Value(v)),
            AlphaRaw::Word(w) if w == "auto" => Ok(AlphaChoice::Auto),
            AlphaRaw::Word(w) => Err(format!("alpha must be a number or \"auto\", got \"{w}\"")),
        }
    }
}

impl From<AlphaChoice> for AlphaRaw {
    fn from(a: AlphaChoice) -> Self {
        match a {
            AlphaChoice::Auto => AlphaRaw::Word("auto".into()),
            AlphaChoice::Value(v) => AlphaRaw::Number(v),
        }
    }
}

impl std::str::FromStr for AlphaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(AlphaChoice::Auto);
        }
        s.parse::<f64>()
            .map(AlphaChoice::Value)
            .map_err(|_| format!("alpha must be a number or \"auto\", got \"{s}\""))
    }
}

fn default_k_p() -> f64 {
    25.0
}

fn default_k_i() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSpec {
    #[serde(default = "default_k_p")]
    pub k_p: f64,
    #[serde(default = "default_k_i")]
    pub k_i: f64,
    #[serde(default)]
    pub alpha: AlphaChoice,
}

impl Default for GainSpec {
    fn default() -> Self {
        Self {
            k_p: default_k_p(),
            k_i: default_k_i(),
            alpha: AlphaChoice::Auto,
        }
    }
}

/// When a run ends early.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopRule {
    /// Stop once `e₂` and the largest per-step state change both stay below
    /// these tolerances for `patience` consecutive iterations.
    pub e2_tol: f64,
    pub delta_tol: f64,
    pub patience: usize,
    /// Abort when `e₁` exceeds this value or stops being finite.
    pub divergence: f64,
    /// Stop as soon as `e₁` reaches this value, if set.
    pub e1_threshold: Option<f64>,
    /// Set to false to always run to `k_max`.
    pub converge: bool,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            e2_tol: 1e-10,
            delta_tol: 1e-10,
            patience: 10,
            divergence: 1e12,
            e1_threshold: None,
            converge: true,
        }
    }
}

fn default_k_max() -> usize {
    50_000
}

fn one() -> usize {
    1
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub gains: GainSpec,
    /// Accept an explicit step size above the admissible bound.
    #[serde(default)]
    pub force_alpha: bool,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub seed: u64,
    /// Agent graph; a ring over the agents when absent (or the bundle's graph).
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    /// Portion graph; a ring over the portions when absent (or the bundle's graph).
    #[serde(default)]
    pub graph_c: Option<GraphSpec>,
    #[serde(default)]
    pub signal: SignalSpec,
    #[serde(default)]
    pub stop: StopRule,
    /// Record every `record_stride`-th iteration (the last one always).
    #[serde(default = "one")]
    pub record_stride: usize,
    /// Update agents concurrently within each round.
    #[serde(default)]
    pub parallel: bool,
}

impl RunConfig {
    /// A config with every optional field at its default.
    pub fn new(problem: ProblemSource, algorithm: Algorithm) -> Self {
        Self {
            problem,
            algorithm,
            gains: GainSpec::default(),
            force_alpha: false,
            k_max: default_k_max(),
            seed: 0,
            graph: None,
            graph_c: None,
            signal: SignalSpec::Static,
            stop: StopRule::default(),
            record_stride: 1,
            parallel: false,
        }
    }

    /// Checks everything that can be checked without loading the problem.
    pub fn validate(&self) -> Result<(), SimError> {
        let cfg = |msg: String| Err(SimError::Config(msg));
        if self.k_max == 0 {
            return cfg("k_max must be at least 1".into());
        }
        if self.record_stride == 0 {
            return cfg("record_stride must be at least 1".into());
        }
        for (name, v) in [("gains.k_p", self.gains.k_p), ("gains.k_i", self.gains.k_i)] {
            if !(v.is_finite() && v > 0.0) {
                return cfg(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if let AlphaChoice::Value(a) = self.gains.alpha {
            if !(a.is_finite() && a > 0.0) {
                return cfg(format!("gains.alpha must be positive and finite, got {a}"));
            }
        }
        let s = &self.stop;
        if !(s.e2_tol >= 0.0 && s.delta_tol >= 0.0 && s.divergence > 0.0) {
            return cfg("stop tolerances must be nonnegative and the divergence level positive".into());
        }
        self.signal.validate()?;
        if !self.signal.is_static() && self.algorithm.baseline().is_some() {
            return cfg(format!("algorithm {} only supports a static signal", self.algorithm.name()));
        }
        if let ProblemSource::Generate(g) = &self.problem {
            if g.agents == 0 || g.bandwidth == 0 {
                return cfg("generate.agents and generate.bandwidth must be positive".into());
            }
            if g.m == 0 || g.n == 0 {
                return cfg("generate.m and generate.n must be positive".into());
            }
            check_partition(g.m, g.n, &g.row_sizes(), &g.col_sizes(), g.bandwidth)?;
            if g.row_sizes().len() != g.agents {
                return cfg(format!(
                    "generate.row_sizes has {} blocks but there are {} agents",
                    g.row_sizes().len(),
                    g.agents
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c: RunConfig =
            serde_json::from_str(r#"{"problem": {"bundle": {"path": "prob"}}, "algorithm": "sdls"}"#).unwrap();
        assert_eq!(c.gains, GainSpec { k_p: 25.0, k_i: 5.0, alpha: AlphaChoice::Auto });
        assert_eq!(c.k_max, 50_000);
        assert_eq!(c.stop, StopRule::default());
        c.validate().unwrap();
    }

    #[test]
    fn alpha_forms() {
        let g: GainSpec = serde_json::from_str(r#"{"alpha": 0.02}"#).unwrap();
        assert_eq!(g.alpha, AlphaChoice::Value(0.02));
        let g: GainSpec = serde_json::from_str(r#"{"alpha": "auto"}"#).unwrap();
        assert_eq!(g.alpha, AlphaChoice::Auto);
        assert!(serde_json::from_str::<GainSpec>(r#"{"alpha": "fast"}"#).is_err());
        assert_eq!(serde_json::to_string(&AlphaChoice::Auto).unwrap(), r#""auto""#);
    }

    #[test]
    fn bandwidth_rule_checked_before_loading() {
        let c: RunConfig = serde_json::from_str(
            r#"{"problem": {"generate": {"m": 4, "n": 9, "agents": 2, "bandwidth": 8, "col_sizes": [9]}},
                "algorithm": "sdls"}"#,
        )
        .unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("bandwidth"), "{err}");
    }

    #[test]
    fn unknown_algorithm_rejected() {
        let r = serde_json::from_str::<RunConfig>(r#"{"problem": {"bundle": {"path": "p"}}, "algorithm": "magic"}"#);
        assert!(r.is_err());
    }
}
