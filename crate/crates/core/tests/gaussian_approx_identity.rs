//! The moment-matching divergence approximation has two algebraic routes:
//! the implementation composes moment matching with the closed-form Gaussian
//! KL; this test evaluates the fully expanded formula directly and checks
//! the two agree to floating-point accuracy on randomized scenarios.

use byzkl::divergence::kl_gaussian_approx;
use byzkl::validation::{random_scenario, Draw};

/// Per-hypothesis parameters `(mu, sigma, nu, gamma)`.
type Hypothesis = (f64, f64, f64, f64);

/// The expanded closed form, written out term by term:
///
/// ```text
/// 1/2 [ V0/V1 + (M1 - M0)^2 / V1 - 1 - ln(V0/V1) ]
/// M_t = (1-a) mu_t + a nu_t
/// V_t = (1-a) sigma_t + a gamma_t + a (1-a) (mu_t - nu_t)^2
/// ```
fn expanded_display_formula(h0: Hypothesis, h1: Hypothesis, a: f64) -> f64 {
    let (mu0, sigma0, nu0, gamma0) = h0;
    let (mu1, sigma1, nu1, gamma1) = h1;
    let v0 = (1.0 - a) * sigma0 + a * gamma0 + a * (1.0 - a) * (mu0 - nu0) * (mu0 - nu0);
    let v1 = (1.0 - a) * sigma1 + a * gamma1 + a * (1.0 - a) * (mu1 - nu1) * (mu1 - nu1);
    let m0 = (1.0 - a) * mu0 + a * nu0;
    let m1 = (1.0 - a) * mu1 + a * nu1;
    0.5 * (v0 / v1 + (m1 - m0) * (m1 - m0) / v1 - 1.0 - (v0 / v1).ln())
}

#[test]
fn gaussian_approx_equals_expanded_formula_on_randomized_scenarios() {
    let mut draw = Draw::new(424_242, 0);
    for _ in 0..1000 {
        let s = random_scenario(&mut draw);
        let implementation = kl_gaussian_approx(&s);
        let direct = expanded_display_formula(
            (
                s.nominal0().mean(),
                s.nominal0().variance(),
                s.attacked0().mean(),
                s.attacked0().variance(),
            ),
            (
                s.nominal1().mean(),
                s.nominal1().variance(),
                s.attacked1().mean(),
                s.attacked1().variance(),
            ),
            s.alpha(),
        );
        let tol = 1e-12 * direct.abs().max(1.0);
        assert!(
            (implementation - direct).abs() <= tol,
            "scenario {s:?}: moment-match route {implementation} vs expanded formula {direct}"
        );
    }
}
