//! `byzkl` - batch front end for designing Byzantine noise-injection
//! attacks on Gaussian hypothesis testing and measuring their impact.

mod commands;
mod config;

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{OutputFormat, RunConfig, ThresholdRule};

#[derive(Parser)]
#[command(
    name = "byzkl",
    version,
    about = "Design optimal Byzantine noise-injection attacks on binary Gaussian hypothesis testing and quantify the detection impact",
    after_help = "Configuration comes from --config (JSON; all fields optional), overridden by flags.\n\
                  Exit codes: 0 success, 1 validation/property failure, 2 configuration error."
)]
struct Cli {
    /// JSON configuration file; defaults describe the reference experiment.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Root random seed recorded in every artifact.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Artifact path prefix; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<String>,

    /// Artifact format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOverrides {
    /// Override the injection energy budget.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Search the optimal attack by coordinate descent; writes the
    /// per-iteration trace (CSV) and a summary (JSON).
    Optimize {
        #[command(flatten)]
        common: CommonOverrides,
        /// Override the maximum number of coordinate passes.
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Evaluate all divergence approximations on the configured scenario.
    Evaluate {
        #[command(flatten)]
        common: CommonOverrides,
        /// Override the scenario's attacking power.
        #[arg(long)]
        alpha: Option<f64>,
        /// Override the Monte Carlo sample count.
        #[arg(long = "K")]
        k: Option<usize>,
    },
    /// Minimize the divergence per attacking-power grid point.
    Sweep {
        #[command(flatten)]
        common: CommonOverrides,
        /// Comma-separated attacking-power grid, e.g. "0.1,0.2,0.3".
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
    },
    /// Simulate Neyman-Pearson detection with and without the attack.
    Simulate {
        #[command(flatten)]
        common: CommonOverrides,
        /// Override the scenario's attacking power.
        #[arg(long)]
        alpha: Option<f64>,
        /// Override the Monte Carlo trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the false-alarm target.
        #[arg(long)]
        target_pfa: Option<f64>,
        /// Threshold rule: nominal-calibrated | attacked-calibrated | explicit.
        #[arg(long, value_parser = parse_rule)]
        threshold_rule: Option<ThresholdRule>,
        /// Explicit threshold (number, "inf" or "-inf"); implies
        /// --threshold-rule explicit.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_threshold)]
        threshold: Option<f64>,
    },
    /// Run the randomized cross-check batteries; nonzero exit on failure.
    Validate,
}

fn parse_rule(text: &str) -> Result<ThresholdRule, String> {
    match text {
        "nominal-calibrated" => Ok(ThresholdRule::NominalCalibrated),
        "attacked-calibrated" => Ok(ThresholdRule::AttackedCalibrated),
        "explicit" => Ok(ThresholdRule::Explicit),
        other => Err(format!("unknown rule \"{other}\" (expected nominal-calibrated, attacked-calibrated or explicit)")),
    }
}

fn parse_threshold(text: &str) -> Result<f64, String> {
    match text {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        other => other.parse::<f64>().map_err(|e| e.to_string()),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, commands::CommandError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| commands::CommandError {
                exit_code: 2,
                message: format!("config error: cannot read {path}: {e}"),
            })?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.path = Some(out.clone());
    }
    if let Some(format) = cli.format {
        config.output.format = format;
    }

    match &cli.command {
        Command::Optimize { common, max_iters } => {
            if let Some(delta) = common.delta {
                config.model.delta = delta;
            }
            if let Some(t) = max_iters {
                config.solver.max_iters = *t;
            }
        }
        Command::Evaluate { common, alpha, k } => {
            if let Some(delta) = common.delta {
                config.model.delta = delta;
            }
            if let Some(a) = alpha {
                config.scenario.alpha = *a;
            }
            if let Some(k) = k {
                config.divergence.k = *k;
            }
        }
        Command::Sweep { common, alphas } => {
            if let Some(delta) = common.delta {
                config.model.delta = delta;
            }
            if let Some(alphas) = alphas {
                config.sweep.alphas = alphas.clone();
            }
        }
        Command::Simulate {
            common,
            alpha,
            trials,
            target_pfa,
            threshold_rule,
            threshold,
        } => {
            if let Some(delta) = common.delta {
                config.model.delta = delta;
            }
            if let Some(a) = alpha {
                config.scenario.alpha = *a;
            }
            if let Some(trials) = trials {
                config.detection.trials = *trials;
            }
            if let Some(pfa) = target_pfa {
                config.detection.target_pfa = *pfa;
            }
            if let Some(rule) = threshold_rule {
                config.detection.threshold_rule = *rule;
            }
            if let Some(tau) = threshold {
                config.detection.explicit_threshold = Some(*tau);
                config.detection.threshold_rule = ThresholdRule::Explicit;
            }
        }
        Command::Validate => {}
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code);
        }
    };
    let result = match &cli.command {
        Command::Optimize { .. } => commands::cmd_optimize(&config),
        Command::Evaluate { .. } => commands::cmd_evaluate(&config),
        Command::Sweep { .. } => commands::cmd_sweep(&config),
        Command::Simulate { .. } => commands::cmd_simulate(&config),
        Command::Validate => commands::cmd_validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code)
        }
    }
}
