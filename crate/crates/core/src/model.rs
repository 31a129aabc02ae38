//! The nominal detection model the attacker works against.

use serde::Serialize;

use crate::distributions::Gaussian;
use crate::divergence::AttackScenario;
use crate::inner::OuterPoint;
use crate::{Error, Result};

/// The two hypothesis Gaussians plus the attacker's injection energy budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NominalModel {
    hypothesis0: Gaussian,
    hypothesis1: Gaussian,
    energy_budget: f64,
}

impl NominalModel {
    pub fn new(hypothesis0: Gaussian, hypothesis1: Gaussian, energy_budget: f64) -> Result<Self> {
        if !energy_budget.is_finite() || energy_budget <= 0.0 {
            return Err(Error::invalid(
                "energy_budget",
                format!("must be finite and > 0, got {energy_budget}"),
            ));
        }
        Ok(NominalModel {
            hypothesis0,
            hypothesis1,
            energy_budget,
        })
    }

    pub fn hypothesis0(&self) -> &Gaussian {
        &self.hypothesis0
    }

    pub fn hypothesis1(&self) -> &Gaussian {
        &self.hypothesis1
    }

    pub fn energy_budget(&self) -> f64 {
        self.energy_budget
    }

    /// KL divergence between the unattacked hypotheses, D(f0 || f1).
    pub fn nominal_kl(&self) -> f64 {
        self.hypothesis0.kl(&self.hypothesis1)
    }

    /// Build the attack scenario for outer point `psi` and injection
    /// variances `(gamma0, gamma1)` over this model's nominals.
    pub fn scenario(&self, psi: &OuterPoint, gamma0: f64, gamma1: f64) -> Result<AttackScenario> {
        AttackScenario::new(
            self.hypothesis0,
            self.hypothesis1,
            Gaussian::new(psi.nu0, gamma0)?,
            Gaussian::new(psi.nu1, gamma1)?,
            psi.alpha,
        )
    }

    /// The scenario with no injected perturbation: both attacked components
    /// equal the nominals, so the received mixtures collapse to them.
    pub fn no_attack_scenario(&self, alpha: f64) -> Result<AttackScenario> {
        AttackScenario::new(
            self.hypothesis0,
            self.hypothesis1,
            self.hypothesis0,
            self.hypothesis1,
            alpha,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_budget() {
        let g0 = Gaussian::new(2.0, 2.8).unwrap();
        let g1 = Gaussian::new(10.0, 3.1).unwrap();
        assert!(NominalModel::new(g0, g1, 0.0).is_err());
        assert!(NominalModel::new(g0, g1, -5.0).is_err());
        assert!(NominalModel::new(g0, g1, f64::INFINITY).is_err());
        assert!(NominalModel::new(g0, g1, 80.0).is_ok());
    }

    #[test]
    fn nominal_kl_matches_closed_form() {
        let m = NominalModel::new(
            Gaussian::new(2.0, 2.8).unwrap(),
            Gaussian::new(10.0, 3.1).unwrap(),
            80.0,
        )
        .unwrap();
        assert!((m.nominal_kl() - 10.3251).abs() < 1e-4);
    }
}
