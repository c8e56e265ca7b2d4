//! Experiment configurations.
//!
//! A config is a JSON object
//!
//! ```json
//! {"experiment": "dice", "gamma": 1.0, "seed": 0, "mode": "literal", "params": {"mean": 4.5}}
//! ```
//!
//! `params` is validated against the schema of the named experiment; unknown
//! fields are rejected and missing ones take the template defaults. Complex
//! matrices use `{"n": 2, "entries": [[re, im], ...]}` (row-major).

use std::path::PathBuf;

use infodyn::io::MatrixJson;
use infodyn::qstate::PETZ_STEPS;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Trajectory semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every step projects the initial state.
    #[default]
    Literal,
    /// Every step projects the previous step's output.
    Chained,
}

impl From<Mode> for infodyn::entproj::TrajectoryMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Literal => infodyn::entproj::TrajectoryMode::Literal,
            Mode::Chained => infodyn::entproj::TrajectoryMode::Chained,
        }
    }
}

fn default_gamma() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Canned experiments: stable name and one-line description.
pub const CATALOG: &[(&str, &str)] = &[
    ("divergence-sweep", "γ-deviation values, duality and family identities over a γ grid plus a seeded random-pair sweep"),
    ("metric-extract", "Eguchi metric and connections of D_γ at a base point versus Fisher–Rao and flat charts"),
    ("dice", "maximum-entropy die with a prescribed mean face value"),
    ("bayes-recovery", "posterior by entropic projection of a joint prior versus Bayes' rule"),
    ("gibbs-qubit", "quantum projection onto a prescribed expectation value (Gibbs state)"),
    ("luders", "entropic updates under a support projector compared with the Lüders state"),
    ("trajectory-classical", "time-dependent moment constraints on weights, literal or chained"),
    ("trajectory-quantum", "time-dependent expectation constraints on a density operator"),
    ("cocycle-limit", "Connes-cocycle entropy limit versus the closed-form relative entropy"),
    ("project", "general classical projection: prior mixture, moments, support, trace, penalty"),
    ("qproject", "general quantum projection: prior mixture, moments, support, trace, penalty"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivergenceSweep {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub gammas: Vec<f64>,
    pub random_pairs: usize,
    pub max_dim: usize,
}

impl Default for DivergenceSweep {
    fn default() -> Self {
        Self {
            mu: vec![0.5, 0.3, 0.2],
            nu: vec![0.2, 0.5, 0.3],
            gammas: (0..=10).map(|k| k as f64 / 10.0).collect(),
            random_pairs: 200,
            max_dim: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricExtract {
    pub mu: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Relative finite-difference step.
    pub step: f64,
}

impl Default for MetricExtract {
    fn default() -> Self {
        Self { mu: vec![0.2, 0.3, 0.5], gammas: vec![0.0, 0.25, 0.5, 0.75, 1.0], step: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dice {
    pub faces: Vec<f64>,
    /// Prior weights; uniform when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    pub mean: f64,
}

impl Default for Dice {
    fn default() -> Self {
        Self { faces: (1..=6).map(f64::from).collect(), prior: None, mean: 4.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BayesRecovery {
    /// Joint prior on X × Θ, row-major with `n_x` rows.
    pub joint: Vec<f64>,
    pub n_x: usize,
    pub observed: usize,
    pub random_joints: usize,
    pub max_dim: usize,
}

impl Default for BayesRecovery {
    fn default() -> Self {
        Self { joint: vec![0.10, 0.20, 0.05, 0.25, 0.15, 0.25], n_x: 2, observed: 1, random_joints: 200, max_dim: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsQubit {
    pub prior: MatrixJson,
    pub observable: MatrixJson,
    pub target: f64,
}

impl Default for GibbsQubit {
    fn default() -> Self {
        Self { prior: MatrixJson::diagonal(&[0.5, 0.5]), observable: MatrixJson::diagonal(&[1.0, -1.0]), target: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Luders {
    pub rho: MatrixJson,
    pub projector: MatrixJson,
}

impl Default for Luders {
    fn default() -> Self {
        Self {
            rho: MatrixJson {
                n: 3,
                entries: vec![
                    [0.4, 0.0], [0.1, -0.05], [0.05, 0.0],
                    [0.1, 0.05], [0.35, 0.0], [0.0, 0.1],
                    [0.05, 0.0], [0.0, -0.1], [0.25, 0.0],
                ],
            },
            projector: MatrixJson::diagonal(&[1.0, 1.0, 0.0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetStep {
    pub t: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryClassical {
    pub prior: Vec<f64>,
    pub statistic: Vec<f64>,
    pub t0: f64,
    pub schedule: Vec<TargetStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
}

impl Default for TrajectoryClassical {
    fn default() -> Self {
        Self {
            prior: vec![1.0 / 6.0; 6],
            statistic: (1..=6).map(f64::from).collect(),
            t0: 0.0,
            schedule: [3.5, 4.0, 4.5, 5.0]
                .iter()
                .enumerate()
                .map(|(k, m)| TargetStep { t: k as f64 + 1.0, target: *m })
                .collect(),
            normalization: Some(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryQuantum {
    pub prior: MatrixJson,
    pub observable: MatrixJson,
    pub t0: f64,
    pub schedule: Vec<TargetStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
}

impl Default for TrajectoryQuantum {
    fn default() -> Self {
        Self {
            prior: MatrixJson::diagonal(&[0.5, 0.5]),
            observable: MatrixJson::diagonal(&[1.0, -1.0]),
            t0: 0.0,
            schedule: (1..=8).map(|k| TargetStep { t: k as f64, target: 0.1 * k as f64 }).collect(),
            normalization: Some(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CocycleLimit {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<MatrixJson>,
    pub t_steps: Vec<f64>,
    pub random_pairs: usize,
    pub dims: Vec<usize>,
}

impl Default for CocycleLimit {
    fn default() -> Self {
        Self {
            omega: Some(MatrixJson { n: 2, entries: vec![[0.7, 0.0], [0.1, 0.2], [0.1, -0.2], [0.3, 0.0]] }),
            phi: Some(MatrixJson::diagonal(&[0.4, 0.6])),
            t_steps: PETZ_STEPS.to_vec(),
            random_pairs: 100,
            dims: vec![2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalAtom {
    pub weight: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalMoment {
    pub values: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClassicalPenalty {
    #[default]
    None,
    Linear { slope: Vec<f64> },
    /// `weight` is a row-major n×n positive semi-definite matrix.
    Quadratic { weight: Vec<f64>, center: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    #[default]
    Auto,
    Dual,
    Primal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Project {
    pub prior: Vec<ClassicalAtom>,
    pub moments: Vec<ClassicalMoment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
    pub penalty: ClassicalPenalty,
    pub solver: SolverChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

impl Default for Project {
    fn default() -> Self {
        Self {
            prior: vec![ClassicalAtom { weight: 1.0, weights: vec![0.1, 0.2, 0.3, 0.4] }],
            moments: vec![ClassicalMoment { values: vec![1.0, 2.0, 3.0, 4.0], target: 2.5 }],
            support: None,
            normalization: Some(1.0),
            penalty: ClassicalPenalty::None,
            solver: SolverChoice::Auto,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumAtom {
    pub weight: f64,
    pub state: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumMoment {
    pub observable: MatrixJson,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum QuantumPenaltyConfig {
    #[default]
    None,
    Linear { slope: MatrixJson },
    Quadratic { weight: f64, center: MatrixJson },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QProject {
    pub prior: Vec<QuantumAtom>,
    pub moments: Vec<QuantumMoment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
    pub penalty: QuantumPenaltyConfig,
    pub solver: SolverChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

impl Default for QProject {
    fn default() -> Self {
        Self {
            prior: vec![QuantumAtom {
                weight: 1.0,
                state: MatrixJson { n: 2, entries: vec![[0.6, 0.0], [0.15, 0.1], [0.15, -0.1], [0.4, 0.0]] },
            }],
            moments: vec![QuantumMoment {
                observable: MatrixJson { n: 2, entries: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 0.0]] },
                target: 0.2,
            }],
            support: None,
            normalization: Some(1.0),
            penalty: QuantumPenaltyConfig::None,
            solver: SolverChoice::Auto,
            max_iterations: None,
        }
    }
}

/// A config with its `params` resolved to the experiment's schema.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    DivergenceSweep(DivergenceSweep),
    MetricExtract(MetricExtract),
    Dice(Dice),
    BayesRecovery(BayesRecovery),
    GibbsQubit(GibbsQubit),
    Luders(Luders),
    TrajectoryClassical(TrajectoryClassical),
    TrajectoryQuantum(TrajectoryQuantum),
    CocycleLimit(CocycleLimit),
    Project(Project),
    QProject(QProject),
}

fn params<T: for<'de> Deserialize<'de> + Default>(v: &serde_json::Value) -> CliResult<T> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(v.clone()).map_err(|e| CliError::Config(format!("params: {e}")))
}

impl Experiment {
    pub fn resolve(name: &str, p: &serde_json::Value) -> CliResult<Self> {
        Ok(match name {
            "divergence-sweep" => Experiment::DivergenceSweep(params(p)?),
            "metric-extract" => Experiment::MetricExtract(params(p)?),
            "dice" => Experiment::Dice(params(p)?),
            "bayes-recovery" => Experiment::BayesRecovery(params(p)?),
            "gibbs-qubit" => Experiment::GibbsQubit(params(p)?),
            "luders" => Experiment::Luders(params(p)?),
            "trajectory-classical" => Experiment::TrajectoryClassical(params(p)?),
            "trajectory-quantum" => Experiment::TrajectoryQuantum(params(p)?),
            "cocycle-limit" => Experiment::CocycleLimit(params(p)?),
            "project" => Experiment::Project(params(p)?),
            "qproject" => Experiment::QProject(params(p)?),
            other => return Err(CliError::Config(format!("unknown experiment {other:?}; see `infodyn list`"))),
        })
    }

    fn default_params(name: &str) -> CliResult<serde_json::Value> {
        let v = match Experiment::resolve(name, &serde_json::Value::Null)? {
            Experiment::DivergenceSweep(p) => serde_json::to_value(p),
            Experiment::MetricExtract(p) => serde_json::to_value(p),
            Experiment::Dice(p) => serde_json::to_value(p),
            Experiment::BayesRecovery(p) => serde_json::to_value(p),
            Experiment::GibbsQubit(p) => serde_json::to_value(p),
            Experiment::Luders(p) => serde_json::to_value(p),
            Experiment::TrajectoryClassical(p) => serde_json::to_value(p),
            Experiment::TrajectoryQuantum(p) => serde_json::to_value(p),
            Experiment::CocycleLimit(p) => serde_json::to_value(p),
            Experiment::Project(p) => serde_json::to_value(p),
            Experiment::QProject(p) => serde_json::to_value(p),
        };
        Ok(v?)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<Experiment> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(CliError::Config(format!("gamma = {} outside [0, 1]", self.gamma)));
        }
        Experiment::resolve(&self.experiment, &self.params)
    }

    /// The canonical config for a canned experiment.
    pub fn template(name: &str) -> CliResult<Self> {
        let gamma = match name {
            "luders" => 0.3,
            "divergence-sweep" | "metric-extract" => 0.5,
            _ => 1.0,
        };
        Ok(Self {
            experiment: name.to_string(),
            gamma,
            seed: 0,
            mode: Mode::Literal,
            out: None,
            params: Experiment::default_params(name)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_template_round_trips() {
        for (name, _) in CATALOG {
            let cfg = ExperimentConfig::template(name).unwrap();
            let text = serde_json::to_string_pretty(&cfg).unwrap();
            let back = ExperimentConfig::parse(&text).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn unknown_fields_and_names_are_rejected() {
        assert!(ExperimentConfig::parse(r#"{"experiment": "dice", "params": {"mean": 4.5, "bogus": 1}}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"experiment": "nope"}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"experiment": "dice", "gamma": 2}"#).is_err());
        let cfg = ExperimentConfig::parse(r#"{"experiment": "dice", "params": {"mean": 3}}"#).unwrap();
        assert_eq!(cfg.validate().unwrap(), Experiment::Dice(Dice { mean: 3.0, ..Default::default() }));
    }
}
