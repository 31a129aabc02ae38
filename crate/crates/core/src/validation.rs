//! Randomized cross-check batteries pairing each computation with an
//! independent route: the change of variables against its inverse, the
//! convex solver against a brute-force grid, the Monte Carlo estimator
//! against quadrature, and the chain-rule bound against quadrature.
//!
//! All batteries are deterministic given a seed; `run_all` backs the CLI's
//! `validate` subcommand and the same functions are reused by tests.

use serde::Serialize;

use crate::distributions::Gaussian;
use crate::divergence::{kl_monte_carlo, kl_quadrature_oracle, kl_upper_bound, AttackScenario};
use crate::inner::{inner_constants, inner_oracle_grid, solve_inner, OuterPoint};
use crate::model::NominalModel;
use crate::quadrature::GridSpec;
use crate::rng::SampleStream;

/// Outcome of one property battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub first_counterexample: Option<String>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, failed: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if failed {
            self.failures += 1;
            if self.first_counterexample.is_none() {
                self.first_counterexample = Some(detail());
            }
        }
    }
}

/// Deterministic draw helper over a [`SampleStream`].
pub struct Draw {
    stream: SampleStream,
    counter: u64,
}

impl Draw {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Draw {
            stream: SampleStream::new(seed, stream_id),
            counter: 0,
        }
    }

    pub fn uniform(&mut self) -> f64 {
        let u = self.stream.uniform(self.counter);
        self.counter += 1;
        u
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// A random model with moderate variances and budget. Ranges keep
/// `delta / alpha` bounded so a resolution-2000 grid oracle resolves the
/// inner optimum to well below the comparison tolerances.
pub fn random_model(draw: &mut Draw) -> NominalModel {
    NominalModel::new(
        Gaussian::new(draw.range(-10.0, 10.0), draw.range(0.3, 4.0)).unwrap(),
        Gaussian::new(draw.range(-10.0, 10.0), draw.range(0.3, 4.0)).unwrap(),
        draw.range(0.5, 20.0),
    )
    .unwrap()
}

/// A feasible outer point for `model`: mean shifts inside the budget ball,
/// `alpha` away from the open-interval endpoints.
pub fn random_feasible_psi(draw: &mut Draw, model: &NominalModel) -> OuterPoint {
    let alpha = draw.range(0.25, 0.9);
    let radius = (model.energy_budget() / alpha).sqrt();
    let shift0 = draw.range(-1.0, 1.0) * radius * draw.range(0.0, 0.95);
    let remaining = (model.energy_budget() / alpha - shift0 * shift0)
        .max(0.0)
        .sqrt();
    let shift1 = draw.range(-1.0, 1.0) * remaining * draw.range(0.0, 0.95);
    OuterPoint::new(
        model.hypothesis0().mean() + shift0,
        model.hypothesis1().mean() + shift1,
        alpha,
    )
}

/// A valid random attack scenario (attacked variances dominate nominals).
pub fn random_scenario(draw: &mut Draw) -> AttackScenario {
    let nominal0 = Gaussian::new(draw.range(-8.0, 8.0), draw.range(0.3, 4.0)).unwrap();
    let nominal1 = Gaussian::new(draw.range(-8.0, 8.0), draw.range(0.3, 4.0)).unwrap();
    let attacked0 = Gaussian::new(
        draw.range(-12.0, 12.0),
        nominal0.variance() + draw.range(0.0, 8.0),
    )
    .unwrap();
    let attacked1 = Gaussian::new(
        draw.range(-12.0, 12.0),
        nominal1.variance() + draw.range(0.0, 8.0),
    )
    .unwrap();
    AttackScenario::new(
        nominal0,
        nominal1,
        attacked0,
        attacked1,
        draw.range(0.05, 0.95),
    )
    .unwrap()
}

/// Transform then inverse-transform reproduces raw variances to 1e-12
/// relative.
pub fn transform_round_trip_battery(seed: u64, cases: usize) -> PropertyReport {
    let mut draw = Draw::new(seed, 0x5254); // "RT"
    let mut report = PropertyReport {
        name: "transform_round_trip",
        cases: 0,
        failures: 0,
        first_counterexample: None,
    };
    for _ in 0..cases {
        let model = random_model(&mut draw);
        let psi = random_feasible_psi(&mut draw, &model);
        let constants = inner_constants(&model, &psi).unwrap();
        let gamma0 = model.hypothesis0().variance() + draw.range(0.0, 30.0);
        let gamma1 = model.hypothesis1().variance() + draw.range(0.0, 30.0);
        let (r0, r1) = constants.inverse_transform(&constants.transform(gamma0, gamma1));
        let tol = |x: f64| 1e-12 * x.abs().max(1.0) * 100.0;
        report.record(
            (r0 - gamma0).abs() > tol(gamma0) || (r1 - gamma1).abs() > tol(gamma1),
            || format!("model {model:?} psi {psi:?} gamma ({gamma0}, {gamma1}) -> ({r0}, {r1})"),
        );
    }
    report
}

/// The raw and transformed objectives agree to 1e-10 at corresponding
/// points.
pub fn objective_equivalence_battery(seed: u64, cases: usize) -> PropertyReport {
    let mut draw = Draw::new(seed, 0x4f45); // "OE"
    let mut report = PropertyReport {
        name: "objective_equivalence",
        cases: 0,
        failures: 0,
        first_counterexample: None,
    };
    for _ in 0..cases {
        let model = random_model(&mut draw);
        let psi = random_feasible_psi(&mut draw, &model);
        let constants = inner_constants(&model, &psi).unwrap();
        let gamma0 = model.hypothesis0().variance() + draw.range(0.0, 30.0);
        let gamma1 = model.hypothesis1().variance() + draw.range(0.0, 30.0);
        let direct = constants.problem2_objective(gamma0, gamma1);
        let transformed = constants.problem3_objective(&constants.transform(gamma0, gamma1));
        report.record((direct - transformed).abs() > 1e-10 * direct.abs().max(1.0), || {
            format!("model {model:?} psi {psi:?} gamma ({gamma0}, {gamma1}): {direct} vs {transformed}")
        });
    }
    report
}

/// The inner solver agrees with the brute-force grid oracle to 1e-3 and
/// never exceeds it (the oracle is an upper bound on the true minimum).
///
/// `solve` is injectable so a deliberately corrupted solver is detectable;
/// production callers pass [`default_inner_solver`].
pub fn solver_vs_grid_battery(
    seed: u64,
    cases: usize,
    resolution: usize,
    solve: impl Fn(&NominalModel, &OuterPoint) -> f64,
) -> PropertyReport {
    let mut draw = Draw::new(seed, 0x5347); // "SG"
    let mut report = PropertyReport {
        name: "solver_vs_grid_oracle",
        cases: 0,
        failures: 0,
        first_counterexample: None,
    };
    for _ in 0..cases {
        let model = random_model(&mut draw);
        let psi = random_feasible_psi(&mut draw, &model);
        let solver = solve(&model, &psi);
        let oracle = inner_oracle_grid(&model, &psi, resolution).unwrap();
        report.record(
            solver > oracle + 1e-9 || (oracle - solver).abs() > 1e-3,
            || format!("model {model:?} psi {psi:?}: solver {solver} oracle {oracle}"),
        );
    }
    report
}

/// The production inner solver, in the shape `solver_vs_grid_battery`
/// expects.
pub fn default_inner_solver(model: &NominalModel, psi: &OuterPoint) -> f64 {
    solve_inner(model, psi).unwrap().f_star
}

/// Monte Carlo lands within four standard errors of quadrature in at least
/// 99% of (scenario, seed) pairs.
pub fn mc_vs_quadrature_battery(seed: u64, cases: usize, sample_count: usize) -> PropertyReport {
    let mut draw = Draw::new(seed, 0x4d51); // "MQ"
    let mut report = PropertyReport {
        name: "mc_vs_quadrature",
        cases: 0,
        failures: 0,
        first_counterexample: None,
    };
    let mut mismatches = 0usize;
    let mut first: Option<String> = None;
    for case in 0..cases {
        let scenario = random_scenario(&mut draw);
        let truth = kl_quadrature_oracle(&scenario, &GridSpec::default()).unwrap();
        let est = kl_monte_carlo(
            &scenario,
            sample_count,
            &SampleStream::new(seed ^ case as u64, 0x4d43),
        )
        .unwrap();
        if (est.value - truth).abs() > 4.0 * est.std_error.max(1e-12) {
            mismatches += 1;
            if first.is_none() {
                first = Some(format!(
                    "scenario {scenario:?}: mc {} +- {} vs quadrature {truth}",
                    est.value, est.std_error
                ));
            }
        }
        report.cases += 1;
    }
    // statistical battery: tolerate up to 1% of pairs outside four sigma
    if mismatches as f64 > 0.01 * cases as f64 {
        report.failures = mismatches;
        report.first_counterexample = first;
    }
    report
}

/// The chain-rule bound dominates quadrature on every scenario.
pub fn bound_ordering_battery(seed: u64, cases: usize) -> PropertyReport {
    let mut draw = Draw::new(seed, 0x424f); // "BO"
    let mut report = PropertyReport {
        name: "bound_ordering",
        cases: 0,
        failures: 0,
        first_counterexample: None,
    };
    for _ in 0..cases {
        let scenario = random_scenario(&mut draw);
        let bound = kl_upper_bound(&scenario);
        let truth = kl_quadrature_oracle(&scenario, &GridSpec::default()).unwrap();
        report.record(bound < truth - 1e-6, || {
            format!("scenario {scenario:?}: bound {bound} < quadrature {truth}")
        });
    }
    report
}

/// Quadrature is nonnegative on every scenario.
pub fn oracle_nonnegativity_battery(seed: u64, cases: usize) -> PropertyReport {
    let mut draw = Draw::new(seed, 0x4e4e); // "NN"
    let mut report = PropertyReport {
        name: "oracle_nonnegativity",
        cases: 0,
        failures: 0,
        first_counterexample: None,
    };
    for _ in 0..cases {
        let scenario = random_scenario(&mut draw);
        let truth = kl_quadrature_oracle(&scenario, &GridSpec::default()).unwrap();
        report.record(truth < -1e-9, || {
            format!("scenario {scenario:?}: quadrature {truth}")
        });
    }
    report
}

/// Default battery sizes for the CLI `validate` subcommand.
pub fn run_all(seed: u64) -> Vec<PropertyReport> {
    vec![
        transform_round_trip_battery(seed, 1000),
        objective_equivalence_battery(seed, 1000),
        solver_vs_grid_battery(seed, 50, 2000, default_inner_solver),
        mc_vs_quadrature_battery(seed, 100, 20_000),
        bound_ordering_battery(seed, 100),
        oracle_nonnegativity_battery(seed, 100),
    ]
}
