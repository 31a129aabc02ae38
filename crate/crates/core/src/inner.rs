//! Exact solver for the inner convex problem: for a fixed outer point
//! `psi = (nu0, nu1, alpha)`, minimize the Gaussian-approximated divergence
//! over the injection variances `(gamma0, gamma1)`.
//!
//! The raw problem in `(gamma0, gamma1)` ("problem 2") becomes convex under
//! the change of variables
//!
//! ```text
//! gt0 = (gamma0 + c0) / (gamma1 + c1),    gt1 = 1 / (gamma1 + c1),
//! ```
//!
//! giving objective `1/2 (gt0 - ln gt0 + c2 gt1 - 1)` over a triangle cut by
//! two lines through the origin-shifted cone and a cap on `gt1` ("problem
//! 3"). For fixed `gt1` the objective is minimized by clamping `gt0 = 1`
//! between the two lines, and the partially minimized objective is convex in
//! `gt1`, so a golden-section search over one variable solves the problem to
//! machine precision. No general-purpose convex-programming dependency is
//! needed at this scale.

use serde::Serialize;

use crate::model::NominalModel;
use crate::{Error, Result};

/// Relative interval width at which the golden-section search stops.
pub const TOL_GT1: f64 = 1e-12;

/// Tolerance for reporting a constraint as active at the solution.
pub const TOL_ACTIVE: f64 = 1e-8;

/// The outer decision vector `(nu0, nu1, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterPoint {
    pub nu0: f64,
    pub nu1: f64,
    pub alpha: f64,
}

impl OuterPoint {
    pub fn new(nu0: f64, nu1: f64, alpha: f64) -> Self {
        OuterPoint { nu0, nu1, alpha }
    }

    /// Energy consumed by the mean shifts alone:
    /// `alpha [ (nu0 - mu0)^2 + (nu1 - mu1)^2 ]`.
    pub fn mean_shift_energy(&self, model: &NominalModel) -> f64 {
        let d0 = self.nu0 - model.hypothesis0().mean();
        let d1 = self.nu1 - model.hypothesis1().mean();
        self.alpha * (d0 * d0 + d1 * d1)
    }
}

/// Constants of the inner problem at a fixed outer point.
///
/// `budget` is the total variance available to `gamma0 + gamma1` after the
/// mean shifts are paid for: `delta/alpha - (nu0-mu0)^2 - (nu1-mu1)^2 +
/// sigma0 + sigma1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub budget: f64,
}

impl InnerConstants {
    /// Objective of problem 2 at raw variances `(gamma0, gamma1)`.
    pub fn problem2_objective(&self, gamma0: f64, gamma1: f64) -> f64 {
        let ratio = (gamma0 + self.c0) / (gamma1 + self.c1);
        0.5 * (ratio + self.c2 / (gamma1 + self.c1) - 1.0 - ratio.ln())
    }

    /// Objective of problem 3 at a transformed point.
    pub fn problem3_objective(&self, p: &TransformedPoint) -> f64 {
        0.5 * (p.gt0 - p.gt0.ln() + self.c2 * p.gt1 - 1.0)
    }

    /// Change of variables from raw variances to `(gt0, gt1)`.
    pub fn transform(&self, gamma0: f64, gamma1: f64) -> TransformedPoint {
        TransformedPoint {
            gt0: (gamma0 + self.c0) / (gamma1 + self.c1),
            gt1: 1.0 / (gamma1 + self.c1),
        }
    }

    /// Inverse change of variables, returning `(gamma0, gamma1)`.
    pub fn inverse_transform(&self, p: &TransformedPoint) -> (f64, f64) {
        (p.gt0 / p.gt1 - self.c0, 1.0 / p.gt1 - self.c1)
    }
}

/// A point in the transformed coordinates of problem 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformedPoint {
    pub gt0: f64,
    pub gt1: f64,
}

/// Which of problem 3's constraints hold with equality at the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ActiveConstraints {
    /// `gt0 = (sigma0 + c0) gt1`, i.e. `gamma0 = sigma0`.
    pub lower_line: bool,
    /// `gt0 = (budget + c0 + c1) gt1 - 1`, i.e. the energy budget is spent.
    pub upper_line: bool,
    /// `gt1 = 1 / (sigma1 + c1)`, i.e. `gamma1 = sigma1`.
    pub gt1_cap: bool,
}

/// Solution of the inner problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerSolution {
    /// The minimal Gaussian-approximated divergence at this outer point.
    pub f_star: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub transformed: TransformedPoint,
    pub active_constraints: ActiveConstraints,
}

/// Reject `psi` unless it satisfies the outer feasibility assumption
/// `alpha [ (nu0-mu0)^2 + (nu1-mu1)^2 ] <= delta`, `0 < alpha < 1`.
fn check_feasible(model: &NominalModel, psi: &OuterPoint) -> Result<()> {
    if !(psi.alpha > 0.0 && psi.alpha < 1.0) {
        return Err(Error::infeasible(format!(
            "alpha must lie in (0, 1), got {}",
            psi.alpha
        )));
    }
    let shift = psi.mean_shift_energy(model);
    let delta = model.energy_budget();
    if shift > delta {
        return Err(Error::infeasible(format!(
            "mean-shift energy alpha[(nu0-mu0)^2 + (nu1-mu1)^2] = {shift} exceeds the budget delta = {delta}"
        )));
    }
    Ok(())
}

/// The constants `c0, c1, c2` and the variance budget at `psi`.
pub fn inner_constants(model: &NominalModel, psi: &OuterPoint) -> Result<InnerConstants> {
    check_feasible(model, psi)?;
    let (mu0, sigma0) = (model.hypothesis0().mean(), model.hypothesis0().variance());
    let (mu1, sigma1) = (model.hypothesis1().mean(), model.hypothesis1().variance());
    let a = psi.alpha;
    let d0 = mu0 - psi.nu0;
    let d1 = mu1 - psi.nu1;
    let c0 = ((1.0 - a) * sigma0 + a * (1.0 - a) * d0 * d0) / a;
    let c1 = ((1.0 - a) * sigma1 + a * (1.0 - a) * d1 * d1) / a;
    let gap = (1.0 - a) * mu1 + a * psi.nu1 - (1.0 - a) * mu0 - a * psi.nu0;
    let c2 = gap * gap / a;
    let budget = model.energy_budget() / a - d0 * d0 - d1 * d1 + sigma0 + sigma1;
    Ok(InnerConstants { c0, c1, c2, budget })
}

/// The interval of `gt1` values for which problem 3's constraint set is
/// nonempty: `[1 / (budget + c1 - sigma0), 1 / (sigma1 + c1)]`.
///
/// Nonempty exactly when `budget >= sigma0 + sigma1`, which outer-point
/// feasibility guarantees.
pub fn feasible_gt1_interval(
    constants: &InnerConstants,
    model: &NominalModel,
) -> Result<(f64, f64)> {
    let sigma0 = model.hypothesis0().variance();
    let sigma1 = model.hypothesis1().variance();
    let lo = 1.0 / (constants.budget + constants.c1 - sigma0);
    let hi = 1.0 / (sigma1 + constants.c1);
    // reachable only through float drift at the feasibility boundary
    if lo > hi * (1.0 + 16.0 * f64::EPSILON) {
        return Err(Error::infeasible(format!(
            "variance budget {} is below sigma0 + sigma1 = {}",
            constants.budget,
            sigma0 + sigma1
        )));
    }
    Ok((lo.min(hi), hi))
}

/// Solve the inner problem exactly.
///
/// Returns the optimum of problem 3 mapped back to raw variances, along
/// with the constraints active at the solution. Among equal-objective
/// optima (possible only when `c2 == 0` flattens the objective in `gt1`)
/// the largest feasible `gt1` is returned, i.e. the least injected variance.
pub fn solve_inner(model: &NominalModel, psi: &OuterPoint) -> Result<InnerSolution> {
    let constants = inner_constants(model, psi)?;
    let (lo, hi) = feasible_gt1_interval(&constants, model)?;
    let sigma0 = model.hypothesis0().variance();
    let lower_slope = sigma0 + constants.c0;
    let upper_slope = constants.budget + constants.c0 + constants.c1;

    let gt0_star = |gt1: f64| -> f64 {
        let lower = lower_slope * gt1;
        let upper = upper_slope * gt1 - 1.0;
        1.0f64.max(lower).min(upper)
    };
    let h = |gt1: f64| -> f64 {
        let g = gt0_star(gt1);
        0.5 * (g - g.ln() + constants.c2 * gt1 - 1.0)
    };

    let gt1 = if hi - lo <= 4.0 * f64::EPSILON * hi {
        // budget exhausted by the mean shifts: the feasible set is the
        // single point gamma = sigma
        hi
    } else if constants.c2 == 0.0 {
        // objective is flat in gt1 wherever gt0 = 1 is between the lines;
        // documented tie-break: largest feasible gt1
        let flat_lo = (2.0 / upper_slope).max(lo);
        let flat_hi = (1.0 / lower_slope).min(hi);
        if flat_lo <= flat_hi {
            flat_hi
        } else {
            golden_section_min(&h, lo, hi)
        }
    } else {
        golden_section_min(&h, lo, hi)
    };

    let gt0 = gt0_star(gt1);
    let transformed = TransformedPoint { gt0, gt1 };
    let f_star = constants.problem3_objective(&transformed).max(0.0);
    let (mut gamma0, mut gamma1) = constants.inverse_transform(&transformed);
    // snap float drift onto the variance bounds
    let sigma1 = model.hypothesis1().variance();
    if (gamma0 - sigma0).abs() <= 1e-9 {
        gamma0 = sigma0;
    }
    if (gamma1 - sigma1).abs() <= 1e-9 {
        gamma1 = sigma1;
    }

    let near = |a: f64, b: f64| (a - b).abs() <= TOL_ACTIVE * a.abs().max(b.abs()).max(1.0);
    let active_constraints = ActiveConstraints {
        lower_line: near(gt0, lower_slope * gt1),
        upper_line: near(gt0, upper_slope * gt1 - 1.0),
        gt1_cap: near(gt1, hi),
    };

    Ok(InnerSolution {
        f_star,
        gamma0,
        gamma1,
        transformed,
        active_constraints,
    })
}

/// Golden-section minimization of a convex function on `[lo, hi]`, to a
/// final bracket of `TOL_GT1` times the initial width. Endpoints compete
/// with the interior result, so boundary minima are returned exactly.
fn golden_section_min(h: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let tol = TOL_GT1 * (hi - lo);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = h(x1);
    let mut f2 = h(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = h(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = h(x2);
        }
    }
    let mid = 0.5 * (a + b);
    [lo, hi, mid]
        .into_iter()
        .min_by(|&x, &y| h(x).partial_cmp(&h(y)).unwrap())
        .unwrap()
}

/// Brute-force oracle: minimum of problem 2's objective over a uniform
/// `resolution x resolution` grid on `[sigma0, sigma0 + budget] x
/// [sigma1, sigma1 + budget]` intersected with the constraints, plus the
/// same-resolution sampling of the energy-budget line `gamma0 + gamma1 =
/// budget` and the constraint corners (grid cells straddle that line, so
/// line samples keep the oracle's own discretization error below the
/// comparison tolerances). Always an upper bound on the true minimum.
pub fn inner_oracle_grid(model: &NominalModel, psi: &OuterPoint, resolution: usize) -> Result<f64> {
    if resolution < 500 {
        return Err(Error::invalid(
            "resolution",
            format!("must be >= 500 per axis, got {resolution}"),
        ));
    }
    let constants = inner_constants(model, psi)?;
    let sigma0 = model.hypothesis0().variance();
    let sigma1 = model.hypothesis1().variance();
    let b = constants.budget;
    let step = b / (resolution - 1) as f64;
    let mut best = f64::INFINITY;
    for i in 0..resolution {
        let gamma0 = sigma0 + step * i as f64;
        let room = b - gamma0 - sigma1;
        if room < 0.0 {
            break;
        }
        // grid rows satisfying gamma0 + gamma1 <= budget
        let j_max = ((room / step).floor() as usize).min(resolution - 1);
        for j in 0..=j_max {
            let v = constants.problem2_objective(gamma0, sigma1 + step * j as f64);
            if v < best {
                best = v;
            }
        }
        // budget-line sample at this gamma0
        let v = constants.problem2_objective(gamma0, b - gamma0);
        if v < best {
            best = v;
        }
    }
    for (g0, g1) in [(sigma0, sigma1), (sigma0, b - sigma0), (b - sigma1, sigma1)] {
        if g0 >= sigma0 && g1 >= sigma1 && g0 + g1 <= b {
            let v = constants.problem2_objective(g0, g1);
            if v < best {
                best = v;
            }
        }
    }
    Ok(best)
}
