//! Composite Simpson quadrature on a uniform grid.
//!
//! Error decreases as O(h^4) for smooth integrands; at the default
//! 20_001-node grid over the spans used in this crate the observed error on
//! Gaussian-mixture integrands is below 1e-9 (checked in tests by comparing
//! resolutions).

use serde::Serialize;

use crate::{Error, Result};

/// Minimum node count accepted for density integrals.
pub const MIN_NODES: usize = 10_000;

/// Minimum span, in per-component standard deviations, accepted for
/// [`GridSpan::StdDevs`].
pub const MIN_SPAN_SIGMAS: f64 = 10.0;

/// How a quadrature grid chooses its interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GridSpan {
    /// Span `s` standard deviations either side of every component mean.
    StdDevs(f64),
    /// An explicit interval. Not validated against the integrand; the
    /// boundary-mass check in the oracle still applies.
    Explicit { lo: f64, hi: f64 },
}

/// Quadrature descriptor for the density integrals in [`crate::divergence`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub nodes: usize,
    pub span: GridSpan,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nodes: 20_001,
            span: GridSpan::StdDevs(10.0),
        }
    }
}

impl GridSpec {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.nodes < MIN_NODES {
            return Err(Error::invalid(
                "nodes",
                format!("must be >= {MIN_NODES}, got {}", self.nodes),
            ));
        }
        match self.span {
            GridSpan::StdDevs(s) if s.is_nan() || s < MIN_SPAN_SIGMAS => Err(Error::invalid(
                "span",
                format!("must cover >= {MIN_SPAN_SIGMAS} standard deviations, got {s}"),
            )),
            GridSpan::Explicit { lo, hi } if lo.is_nan() || hi.is_nan() || lo >= hi => Err(
                Error::invalid("span", format!("explicit interval [{lo}, {hi}] is empty")),
            ),
            _ => Ok(()),
        }
    }
}

/// Integrate `f` over `[lo, hi]` with the composite Simpson rule.
///
/// `nodes` is rounded up to the next odd count so the interval splits into
/// an even number of panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, nodes: usize) -> f64 {
    let n = (if nodes.is_multiple_of(2) {
        nodes + 1
    } else {
        nodes
    })
    .max(3);
    let h = (hi - lo) / (n - 1) as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n - 1 {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + h * i as f64);
    }
    acc * h / 3.0
}
