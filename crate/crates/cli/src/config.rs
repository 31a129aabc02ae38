//! JSON run configuration: one flat document, field-precise validation,
//! CLI flags override file fields.

use serde::{Deserialize, Deserializer, Serialize};

use byzkl::descent::{SolverConfig, StepSchedule};
use byzkl::distributions::Gaussian;
use byzkl::divergence::AttackScenario;
use byzkl::inner::OuterPoint;
use byzkl::model::NominalModel;
use byzkl::quadrature::{GridSpan, GridSpec};

/// Error carrying the offending config field in its message.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn field_err(field: &str, err: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {err}"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub mu0: f64,
    /// Variance of the hypothesis-0 Gaussian.
    pub sigma0: f64,
    pub mu1: f64,
    /// Variance of the hypothesis-1 Gaussian.
    pub sigma1: f64,
    /// Injection energy budget.
    pub delta: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            mu0: 2.0,
            sigma0: 2.8,
            mu1: 10.0,
            sigma1: 3.1,
            delta: 80.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub initial: f64,
    pub decay: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub nu0: f64,
    pub nu1: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub max_iters: usize,
    pub step_nu0: StepSection,
    pub step_nu1: StepSection,
    pub step_alpha: StepSection,
    /// Starting point; omit for the mean-swap default.
    pub init: Option<InitSection>,
    pub convergence_tol: f64,
    pub alpha_bounds: [f64; 2],
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            max_iters: 200,
            step_nu0: StepSection {
                initial: 0.5,
                decay: 0.99,
            },
            step_nu1: StepSection {
                initial: 0.5,
                decay: 0.99,
            },
            step_alpha: StepSection {
                initial: 0.02,
                decay: 0.99,
            },
            init: None,
            convergence_tol: 1e-8,
            alpha_bounds: [0.01, 0.99],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    MonteCarlo,
    UpperBound,
    GaussianApprox,
    QuadratureOracle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DivergenceSection {
    /// Preferred approximation tag; `evaluate` reports all of them.
    pub method: MethodName,
    /// Monte Carlo sample count.
    pub k: usize,
    pub quadrature_nodes: usize,
    pub span_sigmas: f64,
}

impl Default for DivergenceSection {
    fn default() -> Self {
        DivergenceSection {
            method: MethodName::MonteCarlo,
            k: 100_000,
            quadrature_nodes: 20_001,
            span_sigmas: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// Quantile of the unattacked hypothesis-0 statistic.
    NominalCalibrated,
    /// Quantile of the attacked hypothesis-0 mixture statistic.
    AttackedCalibrated,
    /// Use `explicit_threshold` as given.
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionSection {
    pub sensor_count: usize,
    pub trials: usize,
    pub target_pfa: f64,
    pub threshold_rule: ThresholdRule,
    /// Threshold when `threshold_rule` is `explicit`; accepts a number or
    /// the strings "inf" / "-inf".
    #[serde(deserialize_with = "deserialize_threshold")]
    pub explicit_threshold: Option<f64>,
}

impl Default for DetectionSection {
    fn default() -> Self {
        DetectionSection {
            sensor_count: 10,
            trials: 1_000_000,
            target_pfa: 0.0004,
            threshold_rule: ThresholdRule::NominalCalibrated,
            explicit_threshold: None,
        }
    }
}

fn deserialize_threshold<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
        Null,
    }
    match Raw::deserialize(d)? {
        Raw::Number(x) => Ok(Some(x)),
        Raw::Null => Ok(None),
        Raw::Text(s) => match s.as_str() {
            "inf" | "+inf" => Ok(Some(f64::INFINITY)),
            "-inf" => Ok(Some(f64::NEG_INFINITY)),
            other => Err(serde::de::Error::custom(format!(
                "expected a number, \"inf\" or \"-inf\", got \"{other}\""
            ))),
        },
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub nu0: f64,
    pub gamma0: f64,
    pub nu1: f64,
    pub gamma1: f64,
    pub alpha: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            nu0: 11.9985,
            gamma0: 2.8218,
            nu1: 0.3385,
            gamma1: 6.3137,
            alpha: 0.4069,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub alphas: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            alphas: (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
#[clap(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: OutputFormat,
    /// Artifact path prefix; standard output when omitted.
    pub path: Option<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            format: OutputFormat::Json,
            path: None,
        }
    }
}

/// The whole run configuration. Every field has a default, so `{}` is a
/// valid document describing the reference experiment.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub solver: SolverSection,
    pub divergence: DivergenceSection,
    pub detection: DetectionSection,
    pub scenario: ScenarioSection,
    pub sweep: SweepSection,
    pub seed: u64,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Validate and build the typed model.
    pub fn model(&self) -> Result<NominalModel, ConfigError> {
        let h0 = Gaussian::new(self.model.mu0, self.model.sigma0)
            .map_err(|e| field_err("model.mu0/model.sigma0", e))?;
        let h1 = Gaussian::new(self.model.mu1, self.model.sigma1)
            .map_err(|e| field_err("model.mu1/model.sigma1", e))?;
        NominalModel::new(h0, h1, self.model.delta).map_err(|e| field_err("model.delta", e))
    }

    /// Validate and build the solver configuration.
    pub fn solver(&self) -> Result<SolverConfig, ConfigError> {
        let s = &self.solver;
        let config = SolverConfig {
            max_iters: s.max_iters,
            step_nu0: StepSchedule::new(s.step_nu0.initial, s.step_nu0.decay),
            step_nu1: StepSchedule::new(s.step_nu1.initial, s.step_nu1.decay),
            step_alpha: StepSchedule::new(s.step_alpha.initial, s.step_alpha.decay),
            init: s.init.map(|i| OuterPoint::new(i.nu0, i.nu1, i.alpha)),
            convergence_tol: s.convergence_tol,
            alpha_bounds: (s.alpha_bounds[0], s.alpha_bounds[1]),
        };
        config.validate().map_err(|e| field_err("solver", e))?;
        Ok(config)
    }

    /// Validate and build the explicit attack scenario over the model.
    pub fn scenario(&self, model: &NominalModel) -> Result<AttackScenario, ConfigError> {
        AttackScenario::new(
            *model.hypothesis0(),
            *model.hypothesis1(),
            Gaussian::new(self.scenario.nu0, self.scenario.gamma0)
                .map_err(|e| field_err("scenario.nu0/scenario.gamma0", e))?,
            Gaussian::new(self.scenario.nu1, self.scenario.gamma1)
                .map_err(|e| field_err("scenario.nu1/scenario.gamma1", e))?,
            self.scenario.alpha,
        )
        .map_err(|e| field_err("scenario", e))
    }

    pub fn grid_spec(&self) -> Result<GridSpec, ConfigError> {
        if self.divergence.k == 0 {
            return Err(ConfigError("divergence.k: must be >= 1".into()));
        }
        Ok(GridSpec {
            nodes: self.divergence.quadrature_nodes,
            span: GridSpan::StdDevs(self.divergence.span_sigmas),
        })
    }

    pub fn validate_detection(&self) -> Result<(), ConfigError> {
        let d = &self.detection;
        if d.sensor_count == 0 {
            return Err(ConfigError("detection.sensor_count: must be >= 1".into()));
        }
        if d.trials == 0 {
            return Err(ConfigError("detection.trials: must be >= 1".into()));
        }
        if !(d.target_pfa > 0.0 && d.target_pfa < 1.0) {
            return Err(ConfigError(format!(
                "detection.target_pfa: must lie in (0, 1), got {}",
                d.target_pfa
            )));
        }
        if d.threshold_rule == ThresholdRule::Explicit && d.explicit_threshold.is_none() {
            return Err(ConfigError(
                "detection.explicit_threshold: required when threshold_rule is \"explicit\"".into(),
            ));
        }
        Ok(())
    }
}
