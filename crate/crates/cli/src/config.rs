//! Experiment configuration: a strict TOML schema with `model`, `analysis`
//! and `run` sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The resolved configuration as embedded in output headers.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Internal(format!("cannot serialize config: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub nodes: usize,
    pub utility: UtilityConfig,
    #[serde(default)]
    pub shock: ShockConfig,
    #[serde(default)]
    pub meeting: MeetingConfig,
    #[serde(default)]
    pub rule: RuleConfig,
}

/// Utility families. Distances are type-by-type matrices and `sizes` gives
/// the number of nodes of each type, assigned in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityConfig {
    /// `V_i = a · outdeg_i`.
    OutDegree { a: f64 },
    /// `V_i = Σ_{j ∈ N_i} a_ij` with an explicit `N×N` matrix.
    Linear { weights: Vec<Vec<f64>> },
    /// `a_ij = v0 − γ D̃(θ_i, θ_j)`.
    Homophily { v0: f64, gamma: f64, distances: Vec<Vec<f64>>, sizes: Vec<usize> },
    /// Homophily link values minus `(c/N) outdeg_i²`.
    Congestion { v0: f64, gamma: f64, c: f64, distances: Vec<Vec<f64>>, sizes: Vec<usize> },
    /// A seeded random isolated utility table with entries in `[-scale, scale]`.
    IsolatedRandom { scale: f64, seed: u64 },
    /// Network-independent utilities, one per agent.
    Constant { values: Vec<f64> },
    /// Every agent receives the welfare `W(g) = links·|g| + reciprocity·(mutual pairs)`.
    Shared { links: f64, reciprocity: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShockConfig {
    #[default]
    Logit,
    Cauchy { scale: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeConfig {
    #[default]
    Continuous,
    Discrete,
}

/// Uniform meetings with total rate (or probability) `total`, unless
/// explicit per-dyad `rates` are given in dyad-index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeetingConfig {
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default = "default_total")]
    pub total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
}

fn default_total() -> f64 {
    1.0
}

impl Default for MeetingConfig {
    fn default() -> Self {
        Self { time: TimeConfig::default(), total: default_total(), rates: None }
    }
}

/// How a met dyad is switched.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleConfig {
    /// Myopic discrete choice on the utility with the configured shock.
    #[default]
    Choice,
    /// Discrete choice with a cost `cost` for changing the dyad.
    SwitchingCost { cost: f64 },
    /// Follow a pure strategy, deviating with probability `epsilon`. The
    /// utility section is validated but does not enter the rule.
    Epsilon { epsilon: f64, strategy: StrategyConfig },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyConfig {
    /// Always hold the link.
    Always,
    /// Never hold the link.
    Never,
    /// Hold `ij` exactly when `ji` is present.
    Reciprocate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<ZetaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trade: Option<TradeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mpe: Option<MpeConfig>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckModeConfig {
    /// Stop at the first violated condition.
    #[default]
    First,
    /// Report every violated condition.
    Exhaustive,
    /// Random draws, seeded from the run seed.
    Sampled,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default)]
    pub mode: CheckModeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Steps (discrete time) or horizon (continuous time) per chain.
    pub length: f64,
    #[serde(default = "default_chains")]
    pub chains: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
}

fn default_chains() -> u64 {
    1
}

fn default_burn_in() -> f64 {
    netform_core::dynamics::DEFAULT_BURN_IN
}

/// Type structure of a large-population homophily model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceConfig {
    /// Finitely many types with weights `w` and distance matrix `D̃`.
    Discrete { distances: Vec<Vec<f64>>, weights: Vec<f64> },
    /// Uniform types on a circle.
    Circle { circumference: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaConfig {
    pub v0: f64,
    pub gamma: f64,
    pub surface: SurfaceConfig,
}

/// Inclusive grid `from, …, to` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl RangeConfig {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if self.steps == 0 || !self.from.is_finite() || !self.to.is_finite() {
            return Err(CliError::Config(format!("bad range {self:?}")));
        }
        if self.steps == 1 {
            return Ok(vec![self.from]);
        }
        let h = (self.to - self.from) / (self.steps - 1) as f64;
        Ok((0..self.steps).map(|k| if k + 1 == self.steps { self.to } else { self.from + h * k as f64 }).collect())
    }
}

/// A `(v0, γ)` grid over a discrete-type model and a circle continuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub v0: RangeConfig,
    pub gamma: RangeConfig,
    pub distances: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub circumference: f64,
    /// Type sizes of an optional finite population whose exact link
    /// density is reported alongside the limits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeConfig {
    pub v0: f64,
    pub gamma: f64,
    pub c: f64,
    pub distances: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Type sizes of an optional finite population whose exact shares are
    /// reported alongside the limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpeConfig {
    /// Discount rate, any positive value.
    pub rho: f64,
    /// Step towards the new iterate; 1 is undamped.
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl MpeConfig {
    /// Solver defaults at discount rate `rho`.
    pub fn with_rho(rho: f64) -> Self {
        Self { rho, damping: default_damping(), max_iters: default_max_iters(), tol: default_tol() }
    }
}

fn default_damping() -> f64 {
    netform_core::extensions::MpeOptions::default().damping
}

fn default_max_iters() -> usize {
    netform_core::extensions::MpeOptions::default().max_iters
}

fn default_tol() -> f64 {
    netform_core::extensions::MpeOptions::default().tol
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 or absent uses the environment or all cores.
    /// Not part of the experiment, so not embedded in outputs.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
    /// Output directory; not embedded in outputs.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    /// log2 of the largest exhaustively enumerated state space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u32>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
nodes = 3
utility = { family = "out_degree", a = 1.0 }
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.model.shock, ShockConfig::Logit);
        assert_eq!(c.model.rule, RuleConfig::Choice);
        assert_eq!(c.model.meeting, MeetingConfig::default());
        assert_eq!(c.run.seed, 0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for extra in ["[run]\nsead = 1", "[model.meeting]\ntotl = 2.0", "[analysis]\nfoo = 1"] {
            assert!(ExperimentConfig::from_toml(&format!("{MINIMAL}\n{extra}\n")).is_err(), "{extra}");
        }
        let bad_variant = MINIMAL.replace("a = 1.0", "a = 1.0, b = 2.0");
        assert!(ExperimentConfig::from_toml(&bad_variant).is_err());
        let bad_family = MINIMAL.replace("out_degree", "quadratic");
        assert!(ExperimentConfig::from_toml(&bad_family).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.model.rule = RuleConfig::Epsilon { epsilon: 0.25, strategy: StrategyConfig::Reciprocate };
        c.analysis.sweep = Some(SweepConfig {
            v0: RangeConfig { from: -2.0, to: 2.0, steps: 5 },
            gamma: RangeConfig { from: 0.1, to: 4.0, steps: 3 },
            distances: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            weights: vec![0.5, 0.5],
            circumference: 2.0,
            finite_sizes: None,
        });
        c.run.seed = 42;
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn machine_settings_are_not_embedded() {
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let plain = c.to_toml().unwrap();
        c.run.out = Some("/tmp/x".into());
        c.run.threads = Some(3);
        assert_eq!(c.to_toml().unwrap(), plain);
    }

    #[test]
    fn ranges_are_inclusive() {
        let r = RangeConfig { from: -2.0, to: 2.0, steps: 5 }.points().unwrap();
        assert_eq!(r, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(RangeConfig { from: 0.5, to: 9.0, steps: 1 }.points().unwrap(), vec![0.5]);
        assert!(RangeConfig { from: 0.0, to: 1.0, steps: 0 }.points().is_err());
    }
}
