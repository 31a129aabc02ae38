//! Python bindings: exposes the nominal model, attack scenarios and the
//! main operations (inner solve, coordinate descent, sweeps, divergence
//! estimators, detection simulation) as the `byzkl_py` module.
//!
//! Build as an importable module with
//! `cargo build -p byzkl-py --release --features extension-module`
//! and rename `libbyzkl_py.so` to `byzkl_py.so` (python/smoke_test.py does
//! this automatically).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use byzkl::descent::{alpha_sweep, coordinate_descent, SolverConfig};
use byzkl::detection::{calibrate_threshold, simulate_error_probs, DetectorSpec};
use byzkl::distributions::Gaussian;
use byzkl::divergence::{
    kl_gaussian_approx, kl_monte_carlo, kl_quadrature_oracle, kl_upper_bound, AttackScenario,
};
use byzkl::inner::{solve_inner, OuterPoint};
use byzkl::model::NominalModel;
use byzkl::quadrature::GridSpec;
use byzkl::rng::SampleStream;

fn value_err(e: byzkl::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Gaussian KL divergence D(N(mean_p, var_p) || N(mean_q, var_q)) in nats.
#[pyfunction]
fn gaussian_kl(mean_p: f64, var_p: f64, mean_q: f64, var_q: f64) -> PyResult<f64> {
    let p = Gaussian::new(mean_p, var_p).map_err(value_err)?;
    let q = Gaussian::new(mean_q, var_q).map_err(value_err)?;
    Ok(p.kl(&q))
}

/// Solution of the inner variance problem at a fixed outer point.
#[pyclass(frozen)]
struct InnerResult {
    #[pyo3(get)]
    f_star: f64,
    #[pyo3(get)]
    gamma0: f64,
    #[pyo3(get)]
    gamma1: f64,
}

#[pymethods]
impl InnerResult {
    fn __repr__(&self) -> String {
        format!(
            "InnerResult(f_star={}, gamma0={}, gamma1={})",
            self.f_star, self.gamma0, self.gamma1
        )
    }
}

/// Result of a coordinate-descent attack search.
#[pyclass(frozen)]
struct OptimizeResult {
    #[pyo3(get)]
    nu0: f64,
    #[pyo3(get)]
    nu1: f64,
    #[pyo3(get)]
    alpha: f64,
    #[pyo3(get)]
    gamma0: f64,
    #[pyo3(get)]
    gamma1: f64,
    #[pyo3(get)]
    f_star: f64,
    #[pyo3(get)]
    energy_used: f64,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    iterations: usize,
    /// Per-pass `(k, f_star)` pairs.
    #[pyo3(get)]
    trace: Vec<(usize, f64)>,
}

#[pymethods]
impl OptimizeResult {
    fn __repr__(&self) -> String {
        format!(
            "OptimizeResult(f_star={}, nu0={}, nu1={}, alpha={}, iterations={})",
            self.f_star, self.nu0, self.nu1, self.alpha, self.iterations
        )
    }
}

/// Detection error probabilities with and without the attack.
#[pyclass(frozen)]
struct DetectionResult {
    #[pyo3(get)]
    threshold: f64,
    #[pyo3(get)]
    no_attack_p_fa: f64,
    #[pyo3(get)]
    no_attack_p_m: f64,
    #[pyo3(get)]
    attacked_p_fa: f64,
    #[pyo3(get)]
    attacked_p_m: f64,
}

#[pymethods]
impl DetectionResult {
    fn __repr__(&self) -> String {
        format!(
            "DetectionResult(threshold={}, attacked_p_m={}, attacked_p_fa={}, no_attack_p_m={}, no_attack_p_fa={})",
            self.threshold, self.attacked_p_m, self.attacked_p_fa, self.no_attack_p_m, self.no_attack_p_fa
        )
    }
}

/// A fully specified attack over a model's nominal hypotheses.
#[pyclass(frozen)]
struct Scenario {
    model: NominalModel,
    inner: AttackScenario,
}

#[pymethods]
impl Scenario {
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    /// Energy drawn from the injection budget.
    fn injection_energy(&self) -> f64 {
        self.inner.injection_energy()
    }

    /// Moment-matching Gaussian approximation of the mixture divergence.
    fn kl_gaussian_approx(&self) -> f64 {
        kl_gaussian_approx(&self.inner)
    }

    /// Chain-rule upper bound on the mixture divergence.
    fn kl_upper_bound(&self) -> f64 {
        kl_upper_bound(&self.inner)
    }

    /// Monte Carlo estimate; returns `(value, std_error)`.
    #[pyo3(signature = (k = 100_000, seed = 0))]
    fn kl_monte_carlo(&self, k: usize, seed: u64) -> PyResult<(f64, f64)> {
        let est = kl_monte_carlo(&self.inner, k, &SampleStream::new(seed, 0)).map_err(value_err)?;
        Ok((est.value, est.std_error))
    }

    /// Composite-Simpson quadrature ground truth of the mixture divergence.
    fn kl_quadrature(&self) -> PyResult<f64> {
        kl_quadrature_oracle(&self.inner, &GridSpec::default()).map_err(value_err)
    }

    /// Neyman-Pearson detection with the threshold calibrated on the
    /// unattacked design at `target_pfa`.
    #[pyo3(signature = (sensor_count = 10, trials = 100_000, target_pfa = 0.001, seed = 0))]
    fn simulate_detection(
        &self,
        sensor_count: usize,
        trials: usize,
        target_pfa: f64,
        seed: u64,
    ) -> PyResult<DetectionResult> {
        let spec = DetectorSpec {
            sensor_count,
            threshold: f64::NEG_INFINITY,
            trials,
            stream: SampleStream::new(seed, 0),
        };
        let threshold =
            calibrate_threshold(&self.model, None, &spec, target_pfa).map_err(value_err)?;
        let spec = DetectorSpec { threshold, ..spec };
        let nominal = simulate_error_probs(&self.model, None, &spec).map_err(value_err)?;
        let attacked =
            simulate_error_probs(&self.model, Some(&self.inner), &spec).map_err(value_err)?;
        Ok(DetectionResult {
            threshold,
            no_attack_p_fa: nominal.p_fa,
            no_attack_p_m: nominal.p_m,
            attacked_p_fa: attacked.p_fa,
            attacked_p_m: attacked.p_m,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(nu0={}, gamma0={}, nu1={}, gamma1={}, alpha={})",
            self.inner.attacked0().mean(),
            self.inner.attacked0().variance(),
            self.inner.attacked1().mean(),
            self.inner.attacked1().variance(),
            self.inner.alpha()
        )
    }
}

/// The two nominal hypothesis Gaussians plus the injection energy budget.
/// `sigma0`/`sigma1` are variances.
#[pyclass(frozen)]
struct Model {
    inner: NominalModel,
}

#[pymethods]
impl Model {
    #[new]
    fn new(mu0: f64, sigma0: f64, mu1: f64, sigma1: f64, delta: f64) -> PyResult<Self> {
        let h0 = Gaussian::new(mu0, sigma0).map_err(value_err)?;
        let h1 = Gaussian::new(mu1, sigma1).map_err(value_err)?;
        Ok(Model {
            inner: NominalModel::new(h0, h1, delta).map_err(value_err)?,
        })
    }

    /// KL divergence between the unattacked hypotheses.
    fn nominal_kl(&self) -> f64 {
        self.inner.nominal_kl()
    }

    /// Exactly solve the inner variance problem at `(nu0, nu1, alpha)`.
    fn solve_inner(&self, nu0: f64, nu1: f64, alpha: f64) -> PyResult<InnerResult> {
        let sol = solve_inner(&self.inner, &OuterPoint::new(nu0, nu1, alpha)).map_err(value_err)?;
        Ok(InnerResult {
            f_star: sol.f_star,
            gamma0: sol.gamma0,
            gamma1: sol.gamma1,
        })
    }

    /// Coordinate-descent attack search with the default step schedules.
    #[pyo3(signature = (max_iters = 200))]
    fn optimize(&self, max_iters: usize) -> PyResult<OptimizeResult> {
        let config = SolverConfig {
            max_iters,
            ..SolverConfig::default()
        };
        let trace = coordinate_descent(&self.inner, &config).map_err(value_err)?;
        let last = trace.final_step();
        let scenario = self
            .inner
            .scenario(&last.psi, last.inner.gamma0, last.inner.gamma1)
            .map_err(value_err)?;
        Ok(OptimizeResult {
            nu0: last.psi.nu0,
            nu1: last.psi.nu1,
            alpha: last.psi.alpha,
            gamma0: last.inner.gamma0,
            gamma1: last.inner.gamma1,
            f_star: last.f_star,
            energy_used: scenario.injection_energy(),
            converged: trace.converged,
            iterations: trace.steps.len(),
            trace: trace
                .steps
                .iter()
                .map(|s| (s.iteration, s.f_star))
                .collect(),
        })
    }

    /// Minimize over `(nu0, nu1)` for each fixed attacking power; returns
    /// `(alpha, f_star)` pairs.
    fn alpha_sweep(&self, alphas: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
        let curve =
            alpha_sweep(&self.inner, &alphas, &SolverConfig::default()).map_err(value_err)?;
        Ok(curve.into_iter().map(|p| (p.alpha, p.f_star)).collect())
    }

    /// Build an attack scenario over this model's nominals.
    fn scenario(
        &self,
        nu0: f64,
        gamma0: f64,
        nu1: f64,
        gamma1: f64,
        alpha: f64,
    ) -> PyResult<Scenario> {
        let attacked0 = Gaussian::new(nu0, gamma0).map_err(value_err)?;
        let attacked1 = Gaussian::new(nu1, gamma1).map_err(value_err)?;
        let inner = AttackScenario::new(
            *self.inner.hypothesis0(),
            *self.inner.hypothesis1(),
            attacked0,
            attacked1,
            alpha,
        )
        .map_err(value_err)?;
        Ok(Scenario {
            model: self.inner,
            inner,
        })
    }

    /// The identity attack: received distributions equal the nominals.
    fn no_attack_scenario(&self, alpha: f64) -> PyResult<Scenario> {
        let inner = self.inner.no_attack_scenario(alpha).map_err(value_err)?;
        Ok(Scenario {
            model: self.inner,
            inner,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(mu0={}, sigma0={}, mu1={}, sigma1={}, delta={})",
            self.inner.hypothesis0().mean(),
            self.inner.hypothesis0().variance(),
            self.inner.hypothesis1().mean(),
            self.inner.hypothesis1().variance(),
            self.inner.energy_budget()
        )
    }
}

#[pymodule]
fn byzkl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Scenario>()?;
    m.add_class::<InnerResult>()?;
    m.add_class::<OptimizeResult>()?;
    m.add_class::<DetectionResult>()?;
    m.add_function(wrap_pyfunction!(gaussian_kl, m)?)?;
    Ok(())
}
