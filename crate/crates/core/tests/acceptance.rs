//! Acceptance suite: one test per reference criterion, each printing a
//! pass/fail line (run with `-- --nocapture` to see the lines for passing
//! criteria).
//!
//! Criterion artifacts are cached so the determinism criterion (c10) can
//! recompute them from scratch and compare bitwise.
//!
//! Known red: `c02c_monte_carlo_matches_recorded_value` asserts the recorded
//! Monte Carlo divergence 0.8792 at the recorded attack point. Independent
//! quadrature (and the estimator itself, on every seed) puts the divergence
//! of that attack point at 0.5211; the recorded value and the recorded
//! coordinates are mutually inconsistent, so this criterion is kept failing
//! deliberately rather than loosened. See README.

use std::sync::OnceLock;

use byzkl::descent::{alpha_sweep, coordinate_descent, SolverConfig};
use byzkl::detection::{calibrate_threshold, simulate_error_probs, DetectorSpec};
use byzkl::distributions::Gaussian;
use byzkl::divergence::{
    kl_gaussian_approx, kl_monte_carlo, kl_quadrature_oracle, kl_upper_bound, AttackScenario,
};
use byzkl::inner::{inner_constants, inner_oracle_grid, solve_inner};
use byzkl::model::NominalModel;
use byzkl::quadrature::GridSpec;
use byzkl::rng::SampleStream;
use byzkl::validation::{random_feasible_psi, random_model, random_scenario, Draw};

const SEED: u64 = 12345;

fn reference_model(delta: f64) -> NominalModel {
    NominalModel::new(
        Gaussian::new(2.0, 2.8).unwrap(),
        Gaussian::new(10.0, 3.1).unwrap(),
        delta,
    )
    .unwrap()
}

fn reference_attack() -> AttackScenario {
    let model = reference_model(80.0);
    AttackScenario::new(
        *model.hypothesis0(),
        *model.hypothesis1(),
        Gaussian::new(11.9985, 2.8218).unwrap(),
        Gaussian::new(0.3385, 6.3137).unwrap(),
        0.4069,
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// criterion artifacts, cached once and recomputable for c10
// ---------------------------------------------------------------------------

fn c2_artifact() -> Vec<f64> {
    let scenario = reference_attack();
    let mut out = vec![scenario.injection_energy(), kl_gaussian_approx(&scenario)];
    out.push(kl_quadrature_oracle(&scenario, &GridSpec::default()).unwrap());
    for seed in 0..10u64 {
        let est = kl_monte_carlo(&scenario, 100_000, &SampleStream::new(SEED + seed, 0)).unwrap();
        out.push(est.value);
        out.push(est.std_error);
    }
    out
}

fn c3_artifact() -> Vec<f64> {
    let trace = coordinate_descent(&reference_model(80.0), &SolverConfig::default()).unwrap();
    let last = trace.final_step();
    vec![
        last.f_star,
        last.psi.nu0,
        last.psi.nu1,
        last.psi.alpha,
        last.inner.gamma0,
        last.inner.gamma1,
    ]
}

fn c4_artifact() -> Vec<f64> {
    let mut draw = Draw::new(SEED, 0xC4);
    let mut out = Vec::with_capacity(400);
    for _ in 0..200 {
        let model = random_model(&mut draw);
        let psi = random_feasible_psi(&mut draw, &model);
        out.push(solve_inner(&model, &psi).unwrap().f_star);
        out.push(inner_oracle_grid(&model, &psi, 2000).unwrap());
    }
    out
}

fn c5_artifact() -> Vec<f64> {
    let mut draw = Draw::new(SEED, 0xC5);
    let mut out = Vec::with_capacity(4000);
    for _ in 0..1000 {
        let model = random_model(&mut draw);
        let psi = random_feasible_psi(&mut draw, &model);
        let constants = inner_constants(&model, &psi).unwrap();
        let gamma0 = model.hypothesis0().variance() + draw.range(0.0, 30.0);
        let gamma1 = model.hypothesis1().variance() + draw.range(0.0, 30.0);
        let transformed = constants.transform(gamma0, gamma1);
        let (r0, r1) = constants.inverse_transform(&transformed);
        out.push((r0 - gamma0) / gamma0.max(1.0));
        out.push((r1 - gamma1) / gamma1.max(1.0));
        let direct = constants.problem2_objective(gamma0, gamma1);
        let through = constants.problem3_objective(&transformed);
        out.push(direct);
        out.push(through);
    }
    out
}

fn c6_artifact() -> Vec<f64> {
    let mut draw = Draw::new(SEED, 0xC6);
    let mut out = Vec::with_capacity(200);
    for _ in 0..100 {
        let scenario = random_scenario(&mut draw);
        out.push(kl_upper_bound(&scenario));
        out.push(kl_quadrature_oracle(&scenario, &GridSpec::default()).unwrap());
    }
    out
}

fn c7_artifact() -> Vec<f64> {
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let curve = alpha_sweep(&reference_model(20.0), &grid, &SolverConfig::default()).unwrap();
    curve.iter().flat_map(|p| [p.alpha, p.f_star]).collect()
}

fn c8_artifact() -> Vec<f64> {
    let model = reference_model(80.0);
    let attack = reference_attack();
    let spec = DetectorSpec {
        sensor_count: 10,
        threshold: f64::NEG_INFINITY,
        trials: 1_000_000,
        stream: SampleStream::new(SEED, 0),
    };
    // threshold fixed on the unattacked detector design at the target
    // false-alarm level; both assertions of the criterion hold only under
    // this calibration (see README on the attacked-calibrated variant)
    let tau = calibrate_threshold(&model, None, &spec, 0.0004).unwrap();
    let spec = DetectorSpec {
        threshold: tau,
        ..spec
    };
    let attacked = simulate_error_probs(&model, Some(&attack), &spec).unwrap();
    let nominal = simulate_error_probs(&model, None, &spec).unwrap();
    vec![tau, attacked.p_fa, attacked.p_m, nominal.p_fa, nominal.p_m]
}

macro_rules! cached {
    ($cell:ident, $compute:ident) => {{
        static $cell: OnceLock<Vec<f64>> = OnceLock::new();
        $cell.get_or_init($compute)
    }};
}

fn c2() -> &'static Vec<f64> {
    cached!(C2, c2_artifact)
}
fn c3() -> &'static Vec<f64> {
    cached!(C3, c3_artifact)
}
fn c4() -> &'static Vec<f64> {
    cached!(C4, c4_artifact)
}
fn c5() -> &'static Vec<f64> {
    cached!(C5, c5_artifact)
}
fn c6() -> &'static Vec<f64> {
    cached!(C6, c6_artifact)
}
fn c7() -> &'static Vec<f64> {
    cached!(C7, c7_artifact)
}
fn c8() -> &'static Vec<f64> {
    cached!(C8, c8_artifact)
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

#[test]
fn c01_baseline_divergence() {
    let v = Gaussian::new(2.0, 2.8)
        .unwrap()
        .kl(&Gaussian::new(10.0, 3.1).unwrap());
    assert!(
        (v - 10.3251).abs() <= 1e-4,
        "baseline KL {v} not within 1e-4 of 10.3251"
    );
    println!(
        "ACCEPTANCE c01 PASS: gaussian_kl(N(2,2.8), N(10,3.1)) = {v:.6} (target 10.3251 +- 1e-4)"
    );
}

#[test]
fn c02a_reference_point_energy() {
    let energy = c2()[0];
    assert!(
        (energy - 79.99).abs() <= 0.05 && energy <= 80.0,
        "energy {energy}"
    );
    println!("ACCEPTANCE c02a PASS: injection energy = {energy:.4} (target 79.99 +- 0.05, <= 80)");
}

#[test]
fn c02b_reference_point_gaussian_approx() {
    let approx = c2()[1];
    assert!(approx <= 1e-4, "gaussian approx {approx}");
    println!("ACCEPTANCE c02b PASS: kl_gaussian_approx = {approx:.3e} (target <= 1e-4)");
}

#[test]
fn c02c_monte_carlo_matches_recorded_value() {
    let artifact = c2();
    let quadrature = artifact[2];
    let values: Vec<f64> = (0..10).map(|i| artifact[3 + 2 * i]).collect();
    let errors: Vec<f64> = (0..10).map(|i| artifact[4 + 2 * i]).collect();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // companion consistency check: the estimator does match independent
    // quadrature on every seed
    for (v, se) in values.iter().zip(&errors) {
        assert!(
            (v - quadrature).abs() <= 4.0 * se,
            "estimator inconsistent with quadrature: {v} vs {quadrature} (se {se})"
        );
    }
    let target = 0.8792;
    let ok = values.iter().all(|v| (v - target).abs() <= 0.05);
    if !ok {
        println!(
            "ACCEPTANCE c02c FAIL: kl_monte_carlo(K=1e5) over 10 seeds lands in [{lo:.4}, {hi:.4}] \
             (std errors ~{:.4}); every seed agrees with the quadrature value {quadrature:.4} of the \
             recorded attack point within 4 standard errors, but sits ~{:.0} standard errors from the \
             recorded target {target} +- 0.05. The recorded value and the recorded coordinates are \
             mutually inconsistent; deliberately left failing.",
            errors[0],
            (target - quadrature).abs() / errors[0],
        );
    } else {
        println!("ACCEPTANCE c02c PASS: kl_monte_carlo(K=1e5) in [{lo:.4}, {hi:.4}] (target {target} +- 0.05)");
    }
    assert!(
        ok,
        "kl_monte_carlo values [{lo:.4}, {hi:.4}] do not match the recorded 0.8792 +- 0.05"
    );
}

#[test]
fn c03_optimizer_reproduction() {
    let artifact = c3();
    let f_star = artifact[0];
    assert!(f_star <= 0.05, "final f_star {f_star}");
    println!(
        "ACCEPTANCE c03 PASS: coordinate descent (delta=80, T=200) reached f* = {f_star:.3e} \
         at psi = ({:.4}, {:.4}, {:.4}) (target <= 0.05)",
        artifact[1], artifact[2], artifact[3]
    );
}

#[test]
fn c04_inner_solver_matches_grid_oracle() {
    let artifact = c4();
    let mut max_gap: f64 = 0.0;
    for pair in artifact.chunks(2) {
        let (solver, oracle) = (pair[0], pair[1]);
        assert!(
            solver <= oracle + 1e-9,
            "solver {solver} above oracle {oracle}"
        );
        assert!(
            (oracle - solver).abs() <= 1e-3,
            "gap {} above 1e-3",
            oracle - solver
        );
        max_gap = max_gap.max(oracle - solver);
    }
    println!("ACCEPTANCE c04 PASS: 200 randomized instances, max |solver - oracle| = {max_gap:.3e} (target <= 1e-3, solver <= oracle)");
}

#[test]
fn c05_transform_equivalence() {
    let artifact = c5();
    let mut max_rt: f64 = 0.0;
    let mut max_obj: f64 = 0.0;
    for chunk in artifact.chunks(4) {
        max_rt = max_rt.max(chunk[0].abs()).max(chunk[1].abs());
        let rel = (chunk[2] - chunk[3]).abs() / chunk[2].abs().max(1.0);
        max_obj = max_obj.max(rel);
    }
    assert!(max_rt <= 1e-12, "round-trip error {max_rt}");
    assert!(max_obj <= 1e-10, "objective mismatch {max_obj}");
    println!("ACCEPTANCE c05 PASS: 1000 randomized points, round-trip <= {max_rt:.2e} (target 1e-12), objective agreement <= {max_obj:.2e} (target 1e-10)");
}

#[test]
fn c06_bound_ordering() {
    let artifact = c6();
    let mut min_slack = f64::INFINITY;
    for pair in artifact.chunks(2) {
        let (bound, truth) = (pair[0], pair[1]);
        assert!(
            bound >= truth - 1e-6,
            "bound {bound} below quadrature {truth}"
        );
        min_slack = min_slack.min(bound - truth);
    }
    println!("ACCEPTANCE c06 PASS: 100 randomized scenarios, upper bound >= quadrature - 1e-6 (min slack {min_slack:.3e})");
}

#[test]
fn c07_alpha_sweep() {
    let artifact = c7();
    let points: Vec<(f64, f64)> = artifact.chunks(2).map(|c| (c[0], c[1])).collect();
    for pair in points.windows(2) {
        assert!(
            pair[1].1 <= pair[0].1 + 1e-3,
            "sweep increases at alpha {}: {} -> {}",
            pair[1].0,
            pair[0].1,
            pair[1].1
        );
    }
    for (alpha, f_star) in &points {
        assert!(
            *f_star > 0.0,
            "sweep value at alpha {alpha} not positive: {f_star}"
        );
    }
    let summary: Vec<String> = points
        .iter()
        .map(|(a, f)| format!("{a:.1}:{f:.4}"))
        .collect();
    println!(
        "ACCEPTANCE c07 PASS: delta=20 sweep non-increasing and positive [{}]",
        summary.join(" ")
    );
}

#[test]
fn c08_detection_degradation() {
    let artifact = c8();
    let (tau, attacked_pfa, attacked_pm, nominal_pfa, nominal_pm) = (
        artifact[0],
        artifact[1],
        artifact[2],
        artifact[3],
        artifact[4],
    );
    assert!(
        (0.05..=0.20).contains(&attacked_pm),
        "attacked p_m {attacked_pm} outside [0.05, 0.20] (threshold {tau})"
    );
    assert!(nominal_pm <= 1e-3, "no-attack p_m {nominal_pm} above 1e-3");
    println!(
        "ACCEPTANCE c08 PASS: m=10, 1e6 trials, threshold {tau:.3} at p_fa=4e-4 -> attacked p_m = {attacked_pm:.4} \
         (target [0.05, 0.20]), no-attack p_m = {nominal_pm:.1e} (target <= 1e-3); \
         no-attack p_fa = {nominal_pfa:.1e}, attacked p_fa = {attacked_pfa:.4}"
    );
}

#[test]
fn c09_continuity_probe() {
    let mut draw = Draw::new(SEED, 0xC9);
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    while checked < 100 {
        let model = random_model(&mut draw);
        let psi = random_feasible_psi(&mut draw, &model);
        let scale = 1e-5 / 3.0f64.sqrt();
        let mut perturbed = psi;
        perturbed.nu0 += draw.range(-1.0, 1.0) * scale;
        perturbed.nu1 += draw.range(-1.0, 1.0) * scale;
        perturbed.alpha += draw.range(-1.0, 1.0) * scale;
        if perturbed.mean_shift_energy(&model) > model.energy_budget()
            || !(perturbed.alpha > 0.0 && perturbed.alpha < 1.0)
        {
            continue;
        }
        let base = solve_inner(&model, &psi).unwrap().f_star;
        let moved = solve_inner(&model, &perturbed).unwrap().f_star;
        worst = worst.max((moved - base).abs());
        checked += 1;
    }
    assert!(worst <= 1e-2, "continuity violation: |df*| = {worst}");
    println!("ACCEPTANCE c09 PASS: 100 randomized psi, |f*(psi + dpsi) - f*(psi)| <= {worst:.3e} for |dpsi| <= 1e-5 (target 1e-2)");
}

type Rerun = (&'static str, &'static Vec<f64>, fn() -> Vec<f64>);

#[test]
fn c10_determinism() {
    let reruns: [Rerun; 7] = [
        ("c2", c2(), c2_artifact),
        ("c3", c3(), c3_artifact),
        ("c4", c4(), c4_artifact),
        ("c5", c5(), c5_artifact),
        ("c6", c6(), c6_artifact),
        ("c7", c7(), c7_artifact),
        ("c8", c8(), c8_artifact),
    ];
    for (name, first, recompute) in reruns {
        let second = recompute();
        assert_eq!(first.len(), second.len(), "{name}: artifact length changed");
        for (i, (a, b)) in first.iter().zip(&second).enumerate() {
            assert_eq!(
                a.to_bits(),
                b.to_bits(),
                "{name}: artifact[{i}] differs: {a} vs {b}"
            );
        }
    }
    println!("ACCEPTANCE c10 PASS: criteria 2-8 artifacts are bitwise identical across re-runs");
}
