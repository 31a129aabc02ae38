//! KL divergence between the attacked mixtures: Monte Carlo estimation, the
//! chain-rule upper bound, the moment-matching Gaussian approximation, and a
//! composite-Simpson quadrature oracle used as desk-scale ground truth.
//!
//! The three approximations trade accuracy for tractability. Monte Carlo
//! converges to the true divergence; the upper bound is loose but closed
//! form; the Gaussian approximation is closed form and smooth, and is the
//! objective the optimizer minimizes.

use serde::Serialize;

use crate::distributions::{Gaussian, GaussianMixture};
use crate::quadrature::{self, GridSpan, GridSpec};
use crate::rng::SampleStream;
use crate::{Error, Result};

/// A fully specified attack: nominal and attacked component per hypothesis,
/// plus the attacking power `alpha`.
///
/// Attacked variances must dominate the nominal ones so the injected noise
/// has nonnegative variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackScenario {
    nominal0: Gaussian,
    nominal1: Gaussian,
    attacked0: Gaussian,
    attacked1: Gaussian,
    alpha: f64,
}

impl AttackScenario {
    pub fn new(
        nominal0: Gaussian,
        nominal1: Gaussian,
        attacked0: Gaussian,
        attacked1: Gaussian,
        alpha: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(
                "alpha",
                format!("must lie in (0, 1), got {alpha}"),
            ));
        }
        if attacked0.variance() < nominal0.variance() {
            return Err(Error::invalid(
                "attacked0.variance",
                format!(
                    "must be >= nominal0.variance ({} < {})",
                    attacked0.variance(),
                    nominal0.variance()
                ),
            ));
        }
        if attacked1.variance() < nominal1.variance() {
            return Err(Error::invalid(
                "attacked1.variance",
                format!(
                    "must be >= nominal1.variance ({} < {})",
                    attacked1.variance(),
                    nominal1.variance()
                ),
            ));
        }
        Ok(AttackScenario {
            nominal0,
            nominal1,
            attacked0,
            attacked1,
            alpha,
        })
    }

    pub fn nominal0(&self) -> &Gaussian {
        &self.nominal0
    }

    pub fn nominal1(&self) -> &Gaussian {
        &self.nominal1
    }

    pub fn attacked0(&self) -> &Gaussian {
        &self.attacked0
    }

    pub fn attacked1(&self) -> &Gaussian {
        &self.attacked1
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The received distribution under hypothesis 0.
    pub fn mix0(&self) -> GaussianMixture {
        GaussianMixture::new(self.alpha, self.nominal0, self.attacked0).expect("alpha validated")
    }

    /// The received distribution under hypothesis 1.
    pub fn mix1(&self) -> GaussianMixture {
        GaussianMixture::new(self.alpha, self.nominal1, self.attacked1).expect("alpha validated")
    }

    /// Injection energy drawn from the budget:
    /// `alpha [ gamma0 + gamma1 - sigma0 - sigma1 + (nu0-mu0)^2 + (nu1-mu1)^2 ]`.
    pub fn injection_energy(&self) -> f64 {
        let d0 = self.attacked0.mean() - self.nominal0.mean();
        let d1 = self.attacked1.mean() - self.nominal1.mean();
        self.alpha
            * (self.attacked0.variance() + self.attacked1.variance()
                - self.nominal0.variance()
                - self.nominal1.variance()
                + d0 * d0
                + d1 * d1)
    }
}

/// A Monte Carlo divergence estimate with its statistical uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    /// Estimated divergence in nats.
    pub value: f64,
    /// Sample standard deviation of the summands divided by sqrt(K).
    pub std_error: f64,
    pub sample_count: usize,
    pub seed: u64,
}

/// Plain Monte Carlo estimator: draw `k` samples from the hypothesis-0
/// mixture and average the log ratio of the two mixture densities.
pub fn kl_monte_carlo(
    scenario: &AttackScenario,
    k: usize,
    stream: &SampleStream,
) -> Result<MCEstimate> {
    if k == 0 {
        return Err(Error::invalid("sample_count", "must be >= 1"));
    }
    let mix0 = scenario.mix0();
    let mix1 = scenario.mix1();
    // Welford accumulation keeps a single pass and a stable variance.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..k as u64 {
        let z = mix0.sample_at(stream, i);
        let summand = mix0.log_pdf(z) - mix1.log_pdf(z);
        let delta = summand - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (summand - mean);
    }
    let std_error = if k > 1 {
        (m2 / (k - 1) as f64).sqrt() / (k as f64).sqrt()
    } else {
        0.0
    };
    Ok(MCEstimate {
        value: mean,
        std_error,
        sample_count: k,
        seed: stream.seed,
    })
}

/// Chain-rule upper bound:
/// `(1 - alpha) D(f0 || f1) + alpha D(g0 || g1)`.
pub fn kl_upper_bound(scenario: &AttackScenario) -> f64 {
    (1.0 - scenario.alpha) * scenario.nominal0.kl(&scenario.nominal1)
        + scenario.alpha * scenario.attacked0.kl(&scenario.attacked1)
}

/// Replace the mixture under each hypothesis by the Gaussian with its exact
/// first two moments.
pub fn moment_match(alpha: f64, nominal: &Gaussian, attacked: &Gaussian) -> Result<Gaussian> {
    Ok(GaussianMixture::new(alpha, *nominal, *attacked)?.moment_matched())
}

/// Moment-matching Gaussian approximation of the mixture divergence:
/// the Gaussian KL between the two moment-matched distributions.
pub fn kl_gaussian_approx(scenario: &AttackScenario) -> f64 {
    scenario
        .mix0()
        .moment_matched()
        .kl(&scenario.mix1().moment_matched())
}

/// Quadrature ground truth for `D(mix0 || mix1)`: the integral of
/// `mix0(x) ln(mix0(x) / mix1(x))` by composite Simpson on a uniform grid.
///
/// Errors with [`Error::Precision`] when the hypothesis-0 mixture carries
/// more than 1e-10 probability mass outside the grid.
pub fn kl_quadrature_oracle(scenario: &AttackScenario, grid: &GridSpec) -> Result<f64> {
    grid.validate()?;
    let mix0 = scenario.mix0();
    let mix1 = scenario.mix1();
    let (lo, hi) = match grid.span {
        GridSpan::StdDevs(s) => {
            let comps = [
                scenario.nominal0,
                scenario.nominal1,
                scenario.attacked0,
                scenario.attacked1,
            ];
            let lo = comps
                .iter()
                .map(|g| g.mean() - s * g.std_dev())
                .fold(f64::INFINITY, f64::min);
            let hi = comps
                .iter()
                .map(|g| g.mean() + s * g.std_dev())
                .fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
        GridSpan::Explicit { lo, hi } => (lo, hi),
    };
    let outside = mixture_tail_mass(&mix0, lo, hi);
    if outside > 1e-10 {
        return Err(Error::Precision {
            reason: format!(
                "grid [{lo}, {hi}] too narrow: boundary density mass {outside:.3e} > 1e-10"
            ),
        });
    }
    Ok(quadrature::simpson(
        |x| {
            let l0 = mix0.log_pdf(x);
            let p0 = l0.exp();
            if p0 == 0.0 {
                0.0
            } else {
                p0 * (l0 - mix1.log_pdf(x))
            }
        },
        lo,
        hi,
        grid.nodes,
    ))
}

/// Upper bound on the mixture probability mass outside `[lo, hi]`, from the
/// Mills-ratio bound Q(z) <= pdf(z) / z per component tail.
fn mixture_tail_mass(mix: &GaussianMixture, lo: f64, hi: f64) -> f64 {
    let tail = |z: f64| -> f64 {
        if z <= 0.5 {
            // grid barely covers (or misses) this component's bulk
            return 0.5;
        }
        (-0.5 * z * z).exp() / (z * (2.0 * std::f64::consts::PI).sqrt())
    };
    let mass = |g: &Gaussian| -> f64 {
        let sd = g.std_dev();
        tail((g.mean() - lo) / sd) + tail((hi - g.mean()) / sd)
    };
    (1.0 - mix.weight()) * mass(mix.nominal()) + mix.weight() * mass(mix.attacked())
}

/// Selector tag under which the CLI and reports address the approximations
/// uniformly. Only [`DivergenceMethod::GaussianApprox`] is smooth enough to
/// serve as the optimizer objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceMethod {
    MonteCarlo,
    UpperBound,
    GaussianApprox,
    QuadratureOracle,
}

impl DivergenceMethod {
    pub const ALL: [DivergenceMethod; 4] = [
        DivergenceMethod::GaussianApprox,
        DivergenceMethod::UpperBound,
        DivergenceMethod::MonteCarlo,
        DivergenceMethod::QuadratureOracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DivergenceMethod::MonteCarlo => "monte_carlo",
            DivergenceMethod::UpperBound => "upper_bound",
            DivergenceMethod::GaussianApprox => "gaussian_approx",
            DivergenceMethod::QuadratureOracle => "quadrature_oracle",
        }
    }

    /// Evaluate this method on a scenario; the standard error is present
    /// only for Monte Carlo.
    pub fn evaluate(
        &self,
        scenario: &AttackScenario,
        k: usize,
        stream: &SampleStream,
        grid: &GridSpec,
    ) -> Result<(f64, Option<f64>)> {
        Ok(match self {
            DivergenceMethod::MonteCarlo => {
                let est = kl_monte_carlo(scenario, k, stream)?;
                (est.value, Some(est.std_error))
            }
            DivergenceMethod::UpperBound => (kl_upper_bound(scenario), None),
            DivergenceMethod::GaussianApprox => (kl_gaussian_approx(scenario), None),
            DivergenceMethod::QuadratureOracle => (kl_quadrature_oracle(scenario, grid)?, None),
        })
    }
}
