//! Derivative-free coordinate descent over the outer point
//! `psi = (nu0, nu1, alpha)`.
//!
//! Each pass probes one coordinate at a time: evaluate `f_star` one step
//! either side, move to the better side (ties go to the minus side), then
//! keep stepping in that direction while the objective strictly descends.
//! Only continuity of `f_star` is guaranteed, so nothing here assumes
//! gradients exist. A probe can end on a point worse than where it started
//! (stepping is unconditional inside a probe); the driver accepts a probe
//! result only when it does not increase `f_star`, which keeps the recorded
//! trace monotone.

use serde::Serialize;

use crate::inner::{solve_inner, InnerSolution, OuterPoint};
use crate::model::NominalModel;
use crate::{Error, Result};

/// Geometric step schedule: step at pass `k` (1-based) is
/// `initial * decay^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSchedule {
    pub initial: f64,
    pub decay: f64,
}

impl StepSchedule {
    pub fn new(initial: f64, decay: f64) -> Self {
        StepSchedule { initial, decay }
    }

    pub fn value(&self, pass: usize) -> f64 {
        self.initial * self.decay.powi(pass as i32)
    }

    fn validate(&self, field: &'static str) -> Result<()> {
        let bad_initial = self.initial.is_nan() || self.initial <= 0.0;
        let bad_decay = self.decay.is_nan() || self.decay <= 0.0 || self.decay > 1.0;
        if bad_initial || bad_decay {
            return Err(Error::invalid(
                field,
                format!("step schedule needs initial > 0 and decay in (0, 1], got {self:?}"),
            ));
        }
        Ok(())
    }
}

/// Configuration of the outer search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Maximum number of coordinate passes (`T`).
    pub max_iters: usize,
    pub step_nu0: StepSchedule,
    pub step_nu1: StepSchedule,
    pub step_alpha: StepSchedule,
    /// Starting point; `None` selects [`default_init`].
    pub init: Option<OuterPoint>,
    /// Stop once a full pass decreases `f_star` by less than this.
    pub convergence_tol: f64,
    /// Probes leaving `[alpha_min, alpha_max]` are infeasible, never clamped.
    pub alpha_bounds: (f64, f64),
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 200,
            step_nu0: StepSchedule::new(0.5, 0.99),
            step_nu1: StepSchedule::new(0.5, 0.99),
            step_alpha: StepSchedule::new(0.02, 0.99),
            init: None,
            convergence_tol: 1e-8,
            alpha_bounds: (0.01, 0.99),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be >= 1"));
        }
        self.step_nu0.validate("step_nu0")?;
        self.step_nu1.validate("step_nu1")?;
        self.step_alpha.validate("step_alpha")?;
        let (lo, hi) = self.alpha_bounds;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::invalid(
                "alpha_bounds",
                format!("need 0 < min < max < 1, got [{lo}, {hi}]"),
            ));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol < 0.0 {
            return Err(Error::invalid("convergence_tol", "must be >= 0"));
        }
        Ok(())
    }
}

/// One probed coordinate of the outer point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coord {
    Nu0,
    Nu1,
    Alpha,
}

/// Why a descent run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIters,
}

/// Per-pass record of the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    /// 1-based pass index.
    pub iteration: usize,
    pub psi: OuterPoint,
    pub f_star: f64,
    pub inner: InnerSolution,
}

/// Full record of a descent run. `f_star` is non-increasing across steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationTrace {
    pub steps: Vec<TraceStep>,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl OptimizationTrace {
    pub fn final_step(&self) -> &TraceStep {
        self.steps
            .last()
            .expect("descent records at least one pass")
    }
}

/// Outer feasibility: the mean-shift energy fits the budget and `alpha`
/// lies inside the configured bounds.
pub fn is_feasible_psi(psi: &OuterPoint, model: &NominalModel, alpha_bounds: (f64, f64)) -> bool {
    psi.alpha >= alpha_bounds.0
        && psi.alpha <= alpha_bounds.1
        && psi.mean_shift_energy(model) <= model.energy_budget()
}

/// `f_star(psi)`, scoring infeasible points as `+inf`.
fn score(model: &NominalModel, psi: &OuterPoint, alpha_bounds: (f64, f64)) -> f64 {
    if !is_feasible_psi(psi, model, alpha_bounds) {
        return f64::INFINITY;
    }
    match solve_inner(model, psi) {
        Ok(sol) => sol.f_star,
        Err(_) => f64::INFINITY,
    }
}

fn shifted(psi: &OuterPoint, coord: Coord, delta: f64) -> OuterPoint {
    let mut p = *psi;
    match coord {
        Coord::Nu0 => p.nu0 += delta,
        Coord::Nu1 => p.nu1 += delta,
        Coord::Alpha => p.alpha += delta,
    }
    p
}

/// Probe one coordinate: evaluate both neighbours, move to the better one
/// (minus wins ties), then keep advancing while `f_star` strictly descends.
/// Returns the last strictly-descending point of that walk and its value,
/// or `None` when both neighbours are infeasible. Infeasible candidates are
/// scored `+inf` and never returned; a step leaving the feasible set ends
/// the walk as "does not descend".
pub fn coordinate_probe(
    model: &NominalModel,
    psi: &OuterPoint,
    coord: Coord,
    step: f64,
    alpha_bounds: (f64, f64),
) -> Option<(OuterPoint, f64)> {
    let minus = shifted(psi, coord, -step);
    let plus = shifted(psi, coord, step);
    let v_minus = score(model, &minus, alpha_bounds);
    let v_plus = score(model, &plus, alpha_bounds);
    if v_minus.is_infinite() && v_plus.is_infinite() {
        return None;
    }
    let (direction, mut current, mut current_value) = if v_minus <= v_plus {
        (-step, minus, v_minus)
    } else {
        (step, plus, v_plus)
    };
    loop {
        let next = shifted(&current, coord, direction);
        let next_value = score(model, &next, alpha_bounds);
        if next_value < current_value {
            current = next;
            current_value = next_value;
        } else {
            return Some((current, current_value));
        }
    }
}

/// Default initialization: swap the hypotheses' means (`nu0 = mu1`,
/// `nu1 = mu0`), scaled toward the nominal means until the mean shifts fit
/// the budget at the given `alpha`.
pub fn default_init(model: &NominalModel, alpha: f64) -> OuterPoint {
    let mu0 = model.hypothesis0().mean();
    let mu1 = model.hypothesis1().mean();
    let swap_energy = 2.0 * (mu1 - mu0) * (mu1 - mu0);
    let t = if swap_energy == 0.0 {
        1.0
    } else {
        // the margin keeps the scaled point strictly inside the budget when
        // the square root binds
        ((model.energy_budget() / (alpha * swap_energy)).sqrt() * (1.0 - 1e-12)).min(1.0)
    };
    OuterPoint::new(mu0 + t * (mu1 - mu0), mu1 + t * (mu0 - mu1), alpha)
}

fn descend(
    model: &NominalModel,
    config: &SolverConfig,
    coords: &[Coord],
) -> Result<OptimizationTrace> {
    config.validate()?;
    let mut psi = config.init.unwrap_or_else(|| {
        default_init(
            model,
            0.5f64.clamp(config.alpha_bounds.0, config.alpha_bounds.1),
        )
    });
    if !is_feasible_psi(&psi, model, config.alpha_bounds) {
        let (lo, hi) = config.alpha_bounds;
        return Err(Error::infeasible(format!(
            "initial point (nu0={}, nu1={}, alpha={}) violates alpha in [{lo}, {hi}] or the mean-shift budget {}",
            psi.nu0,
            psi.nu1,
            psi.alpha,
            model.energy_budget(),
        )));
    }
    let mut current = solve_inner(model, &psi)?.f_star;
    let mut steps = Vec::with_capacity(config.max_iters);
    let mut stop_reason = StopReason::MaxIters;
    for pass in 1..=config.max_iters {
        let before = current;
        for &coord in coords {
            let step = match coord {
                Coord::Nu0 => config.step_nu0.value(pass),
                Coord::Nu1 => config.step_nu1.value(pass),
                Coord::Alpha => config.step_alpha.value(pass),
            };
            if let Some((candidate, value)) =
                coordinate_probe(model, &psi, coord, step, config.alpha_bounds)
            {
                if value <= current {
                    psi = candidate;
                    current = value;
                }
            }
        }
        let inner = solve_inner(model, &psi)?;
        steps.push(TraceStep {
            iteration: pass,
            psi,
            f_star: current,
            inner,
        });
        if before - current < config.convergence_tol {
            stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok(OptimizationTrace {
        steps,
        converged: stop_reason == StopReason::Converged,
        stop_reason,
    })
}

/// Full outer search over `(nu0, nu1, alpha)`.
pub fn coordinate_descent(
    model: &NominalModel,
    config: &SolverConfig,
) -> Result<OptimizationTrace> {
    descend(model, config, &[Coord::Nu0, Coord::Nu1, Coord::Alpha])
}

/// One point of an attacking-power sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub f_star: f64,
}

/// For each `alpha` in the grid, minimize `f_star` over `(nu0, nu1)` with
/// `alpha` held fixed, and return the resulting curve.
pub fn alpha_sweep(
    model: &NominalModel,
    alpha_grid: &[f64],
    config: &SolverConfig,
) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let (lo, hi) = config.alpha_bounds;
    let mut curve = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(
                "alpha_grid",
                format!("grid values must lie in (0, 1), got {alpha}"),
            ));
        }
        if alpha < lo || alpha > hi {
            return Err(Error::invalid(
                "alpha_grid",
                format!("grid value {alpha} lies outside alpha_bounds [{lo}, {hi}]"),
            ));
        }
        let init = match config.init {
            Some(point)
                if is_feasible_psi(
                    &OuterPoint::new(point.nu0, point.nu1, alpha),
                    model,
                    config.alpha_bounds,
                ) =>
            {
                OuterPoint::new(point.nu0, point.nu1, alpha)
            }
            _ => default_init(model, alpha),
        };
        let per_alpha = SolverConfig {
            init: Some(init),
            ..*config
        };
        let trace = descend(model, &per_alpha, &[Coord::Nu0, Coord::Nu1])?;
        curve.push(SweepPoint {
            alpha,
            f_star: trace.final_step().f_star,
        });
    }
    Ok(curve)
}
