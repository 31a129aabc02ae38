//! Scalar Gaussians and two-component Gaussian mixtures: densities,
//! closed-form Gaussian KL divergence, and reproducible sampling.

use serde::Serialize;

use crate::rng::SampleStream;
use crate::{Error, Result};

/// Variances below this bound are rejected as invalid rather than clamped.
pub const MIN_VARIANCE: f64 = 1e-12;

const LN_TAU: f64 = 1.837_877_066_409_345_5; // ln(2*pi)

/// A scalar Gaussian distribution with strictly positive variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gaussian {
    mean: f64,
    variance: f64,
}

impl Gaussian {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid(
                "mean",
                format!("must be finite, got {mean}"),
            ));
        }
        if !variance.is_finite() || variance < MIN_VARIANCE {
            return Err(Error::invalid(
                "variance",
                format!("must be finite and >= {MIN_VARIANCE}, got {variance}"),
            ));
        }
        Ok(Gaussian { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// ln N(x; mean, variance) = -1/2 ln(2 pi variance) - (x - mean)^2 / (2 variance).
    #[inline]
    pub fn log_pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (LN_TAU + self.variance.ln()) - d * d / (2.0 * self.variance)
    }

    /// KL divergence D(self || other) in nats:
    /// 1/2 [ v_p/v_q + (m_q - m_p)^2 / v_q - 1 - ln(v_p/v_q) ].
    ///
    /// Nonnegative, and zero exactly when the two distributions coincide.
    pub fn kl(&self, other: &Gaussian) -> f64 {
        let ratio = self.variance / other.variance;
        let dm = other.mean - self.mean;
        0.5 * (ratio + dm * dm / other.variance - 1.0 - ratio.ln())
    }

    /// The `index`-th draw of this distribution on `stream`.
    ///
    /// Counter layout: draw `index` consumes counters `2 index` and
    /// `2 index + 1`.
    #[inline]
    pub fn sample_at(&self, stream: &SampleStream, index: u64) -> f64 {
        self.mean + self.std_dev() * stream.standard_normal(2 * index)
    }

    /// `n` i.i.d. draws, deterministic given `(seed, stream_id)`.
    pub fn sample(&self, stream: &SampleStream, n: usize) -> Vec<f64> {
        (0..n as u64).map(|i| self.sample_at(stream, i)).collect()
    }
}

/// Two-component mixture `(1 - weight) * nominal + weight * attacked`.
///
/// `weight` is the probability that a report was compromised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianMixture {
    weight: f64,
    nominal: Gaussian,
    attacked: Gaussian,
}

impl GaussianMixture {
    pub fn new(weight: f64, nominal: Gaussian, attacked: Gaussian) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::invalid(
                "weight",
                format!("must lie in [0, 1], got {weight}"),
            ));
        }
        Ok(GaussianMixture {
            weight,
            nominal,
            attacked,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn nominal(&self) -> &Gaussian {
        &self.nominal
    }

    pub fn attacked(&self) -> &Gaussian {
        &self.attacked
    }

    pub fn mean(&self) -> f64 {
        (1.0 - self.weight) * self.nominal.mean + self.weight * self.attacked.mean
    }

    pub fn variance(&self) -> f64 {
        let dm = self.nominal.mean - self.attacked.mean;
        (1.0 - self.weight) * self.nominal.variance
            + self.weight * self.attacked.variance
            + self.weight * (1.0 - self.weight) * dm * dm
    }

    /// The single Gaussian with this mixture's exact mean and variance.
    pub fn moment_matched(&self) -> Gaussian {
        // mixture variance >= min component variance, so this cannot fail
        Gaussian::new(self.mean(), self.variance()).expect("mixture moments are valid")
    }

    /// Mixture log-density, evaluated in log-sum-exp form. Naive summation
    /// underflows in the far tails where the Monte Carlo estimator evaluates
    /// log ratios.
    pub fn log_pdf(&self, x: f64) -> f64 {
        if self.weight == 0.0 {
            return self.nominal.log_pdf(x);
        }
        if self.weight == 1.0 {
            return self.attacked.log_pdf(x);
        }
        let a = (-self.weight).ln_1p() + self.nominal.log_pdf(x);
        let b = self.weight.ln() + self.attacked.log_pdf(x);
        let m = a.max(b);
        m + ((a - m).exp() + (b - m).exp()).ln()
    }

    /// The `index`-th mixture draw: one uniform selects the component
    /// (attacked with probability `weight`), then one normal draw samples it.
    ///
    /// Counter layout: draw `index` consumes counters `3 index .. 3 index + 3`.
    #[inline]
    pub fn sample_at(&self, stream: &SampleStream, index: u64) -> f64 {
        let base = 3 * index;
        let component = if stream.uniform(base) <= self.weight {
            &self.attacked
        } else {
            &self.nominal
        };
        component.mean + component.std_dev() * stream.standard_normal(base + 1)
    }

    /// `n` i.i.d. mixture draws, deterministic given `(seed, stream_id)`.
    pub fn sample(&self, stream: &SampleStream, n: usize) -> Vec<f64> {
        (0..n as u64).map(|i| self.sample_at(stream, i)).collect()
    }
}
