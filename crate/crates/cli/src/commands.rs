//! The five batch subcommands and their artifact formats.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use byzkl::descent::{alpha_sweep, coordinate_descent, SweepPoint};
use byzkl::detection::{
    calibrate_threshold, is_underpowered, simulate_error_probs, DetectorSpec, ErrorEstimate,
};
use byzkl::divergence::DivergenceMethod;
use byzkl::rng::SampleStream;
use byzkl::validation::{self, PropertyReport};

use crate::config::{OutputFormat, RunConfig, ThresholdRule};

/// Failure with the process exit code it maps to: 2 for configuration
/// problems, 1 for validation/property failures.
#[derive(Debug)]
pub struct CommandError {
    pub exit_code: u8,
    pub message: String,
}

impl CommandError {
    fn config(message: impl Into<String>) -> Self {
        CommandError {
            exit_code: 2,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<crate::config::ConfigError> for CommandError {
    fn from(e: crate::config::ConfigError) -> Self {
        CommandError::config(e.to_string())
    }
}

impl From<byzkl::Error> for CommandError {
    fn from(e: byzkl::Error) -> Self {
        CommandError::config(e.to_string())
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        CommandError::config(format!("io error: {e}"))
    }
}

/// Reproducibility header embedded in every artifact.
#[derive(Serialize)]
struct Provenance<'a> {
    schema_version: &'static str,
    resolved_config: &'a RunConfig,
}

fn provenance(config: &RunConfig) -> Provenance<'_> {
    Provenance {
        schema_version: "1",
        resolved_config: config,
    }
}

fn csv_comment(config: &RunConfig) -> String {
    format!(
        "# {}",
        serde_json::to_string(&provenance(config)).expect("config serializes")
    )
}

fn to_json(report: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

/// Write `content` to `<prefix>.<suffix>` when an output prefix is set,
/// otherwise print it.
fn emit(prefix: &Option<String>, suffix: &str, content: &str) -> Result<(), CommandError> {
    match prefix {
        Some(p) => {
            let path = PathBuf::from(format!("{p}.{suffix}"));
            fs::write(&path, content)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FinalPoint {
    nu0: f64,
    nu1: f64,
    alpha: f64,
    gamma0: f64,
    gamma1: f64,
    f_star: f64,
}

#[derive(Serialize)]
struct OptimizeSummary<'a> {
    schema_version: &'static str,
    resolved_config: &'a RunConfig,
    #[serde(rename = "final")]
    final_point: FinalPoint,
    energy_used: f64,
    converged: bool,
    stop_reason: byzkl::descent::StopReason,
    iterations: usize,
}

pub fn cmd_optimize(config: &RunConfig) -> Result<(), CommandError> {
    let model = config.model()?;
    let solver = config.solver()?;
    let trace =
        coordinate_descent(&model, &solver).map_err(|e| CommandError::config(e.to_string()))?;

    let mut csv = String::new();
    let _ = writeln!(csv, "{}", csv_comment(config));
    let _ = writeln!(csv, "k,nu0,nu1,alpha,gamma0,gamma1,f_star");
    for step in &trace.steps {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            step.iteration,
            step.psi.nu0,
            step.psi.nu1,
            step.psi.alpha,
            step.inner.gamma0,
            step.inner.gamma1,
            step.f_star
        );
    }

    let last = trace.final_step();
    let scenario = model.scenario(&last.psi, last.inner.gamma0, last.inner.gamma1)?;
    let summary = OptimizeSummary {
        schema_version: "1",
        resolved_config: config,
        final_point: FinalPoint {
            nu0: last.psi.nu0,
            nu1: last.psi.nu1,
            alpha: last.psi.alpha,
            gamma0: last.inner.gamma0,
            gamma1: last.inner.gamma1,
            f_star: last.f_star,
        },
        energy_used: scenario.injection_energy(),
        converged: trace.converged,
        stop_reason: trace.stop_reason,
        iterations: trace.steps.len(),
    };

    match &config.output.path {
        Some(_) => {
            emit(&config.output.path, "trace.csv", &csv)?;
            emit(&config.output.path, "summary.json", &to_json(&summary))
        }
        None => match config.output.format {
            OutputFormat::Csv => emit(&None, "", &csv),
            OutputFormat::Json => emit(&None, "", &to_json(&summary)),
        },
    }
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct MethodRow {
    method: &'static str,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_error: Option<f64>,
}

#[derive(Serialize)]
struct EvaluateReport<'a> {
    schema_version: &'static str,
    resolved_config: &'a RunConfig,
    injection_energy: f64,
    methods: Vec<MethodRow>,
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<(), CommandError> {
    let model = config.model()?;
    let scenario = config.scenario(&model)?;
    let grid = config.grid_spec()?;
    let stream = SampleStream::new(config.seed, 0);
    let mut methods = Vec::new();
    for method in DivergenceMethod::ALL {
        let (value, std_error) = method.evaluate(&scenario, config.divergence.k, &stream, &grid)?;
        methods.push(MethodRow {
            method: method.name(),
            value,
            std_error,
        });
    }
    let report = EvaluateReport {
        schema_version: "1",
        resolved_config: config,
        injection_energy: scenario.injection_energy(),
        methods,
    };

    match config.output.format {
        OutputFormat::Json => emit(&config.output.path, "json", &to_json(&report)),
        OutputFormat::Csv => {
            let mut csv = String::new();
            let _ = writeln!(csv, "{}", csv_comment(config));
            let _ = writeln!(csv, "method,value,std_error");
            for row in &report.methods {
                match row.std_error {
                    Some(se) => {
                        let _ = writeln!(csv, "{},{},{}", row.method, row.value, se);
                    }
                    None => {
                        let _ = writeln!(csv, "{},{},", row.method, row.value);
                    }
                }
            }
            emit(&config.output.path, "csv", &csv)
        }
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SweepReport<'a> {
    schema_version: &'static str,
    resolved_config: &'a RunConfig,
    curve: Vec<SweepPoint>,
}

pub fn cmd_sweep(config: &RunConfig) -> Result<(), CommandError> {
    let model = config.model()?;
    let solver = config.solver()?;
    let curve = alpha_sweep(&model, &config.sweep.alphas, &solver)
        .map_err(|e| CommandError::config(format!("sweep.alphas: {e}")))?;
    match config.output.format {
        OutputFormat::Json => {
            let report = SweepReport {
                schema_version: "1",
                resolved_config: config,
                curve,
            };
            emit(&config.output.path, "json", &to_json(&report))
        }
        OutputFormat::Csv => {
            let mut csv = String::new();
            let _ = writeln!(csv, "{}", csv_comment(config));
            let _ = writeln!(csv, "alpha,f_star");
            for point in &curve {
                let _ = writeln!(csv, "{},{}", point.alpha, point.f_star);
            }
            emit(&config.output.path, "csv", &csv)
        }
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SimulateReport<'a> {
    schema_version: &'static str,
    resolved_config: &'a RunConfig,
    threshold: f64,
    threshold_rule: ThresholdRule,
    target_pfa: f64,
    sensor_count: usize,
    trials: usize,
    /// Set when `trials * target_pfa < 100`: the threshold and the
    /// false-alarm estimates carry wide confidence intervals.
    underpowered_warning: bool,
    no_attack: ErrorEstimate,
    attacked: ErrorEstimate,
}

pub fn cmd_simulate(config: &RunConfig) -> Result<(), CommandError> {
    config.validate_detection()?;
    let model = config.model()?;
    let scenario = config.scenario(&model)?;
    let d = &config.detection;
    let spec = DetectorSpec {
        sensor_count: d.sensor_count,
        threshold: f64::NEG_INFINITY,
        trials: d.trials,
        stream: SampleStream::new(config.seed, 0),
    };
    let threshold = match d.threshold_rule {
        ThresholdRule::Explicit => d.explicit_threshold.expect("validated"),
        ThresholdRule::NominalCalibrated => calibrate_threshold(&model, None, &spec, d.target_pfa)?,
        ThresholdRule::AttackedCalibrated => {
            calibrate_threshold(&model, Some(&scenario), &spec, d.target_pfa)?
        }
    };
    let spec = DetectorSpec { threshold, ..spec };
    let no_attack = simulate_error_probs(&model, None, &spec)?;
    let attacked = simulate_error_probs(&model, Some(&scenario), &spec)?;
    let report = SimulateReport {
        schema_version: "1",
        resolved_config: config,
        threshold,
        threshold_rule: d.threshold_rule,
        target_pfa: d.target_pfa,
        sensor_count: d.sensor_count,
        trials: d.trials,
        underpowered_warning: is_underpowered(d.trials, d.target_pfa),
        no_attack,
        attacked,
    };
    match config.output.format {
        OutputFormat::Json => emit(&config.output.path, "json", &to_json(&report)),
        OutputFormat::Csv => {
            let mut csv = String::new();
            let _ = writeln!(csv, "{}", csv_comment(config));
            let _ = writeln!(
                csv,
                "case,threshold,p_fa,p_m,ci_halfwidth_fa,ci_halfwidth_m"
            );
            for (name, est) in [
                ("no_attack", &report.no_attack),
                ("attacked", &report.attacked),
            ] {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    name, threshold, est.p_fa, est.p_m, est.ci_halfwidth_fa, est.ci_halfwidth_m
                );
            }
            emit(&config.output.path, "csv", &csv)
        }
    }
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ValidateReport<'a> {
    schema_version: &'static str,
    resolved_config: &'a RunConfig,
    passed: bool,
    properties: Vec<PropertyReport>,
}

pub fn cmd_validate(config: &RunConfig) -> Result<(), CommandError> {
    let properties = validation::run_all(config.seed);
    let passed = properties.iter().all(|p| p.passed());
    let report = ValidateReport {
        schema_version: "1",
        resolved_config: config,
        passed,
        properties,
    };
    match config.output.format {
        OutputFormat::Json => emit(&config.output.path, "json", &to_json(&report))?,
        OutputFormat::Csv => {
            let mut csv = String::new();
            let _ = writeln!(csv, "{}", csv_comment(config));
            let _ = writeln!(csv, "property,cases,failures");
            for p in &report.properties {
                let _ = writeln!(csv, "{},{},{}", p.name, p.cases, p.failures);
            }
            emit(&config.output.path, "csv", &csv)?;
        }
    }
    if passed {
        Ok(())
    } else {
        let failing: Vec<&str> = report
            .properties
            .iter()
            .filter(|p| !p.passed())
            .map(|p| p.name)
            .collect();
        let detail = report
            .properties
            .iter()
            .find_map(|p| p.first_counterexample.as_deref())
            .unwrap_or("see report");
        Err(CommandError {
            exit_code: 1,
            message: format!(
                "validation failed: {} (first counterexample: {detail})",
                failing.join(", ")
            ),
        })
    }
}
