use serde::{Deserialize, Serialize};

use super::check_positive;
use crate::Result;

/// Permeabilities and permittivities of every region of the scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSet {
    pub mu_plus: f64,
    pub eps_plus: f64,
    pub mu_cl: f64,
    pub eps_cl: f64,
    pub mu_host: f64,
    pub eps_host: f64,
    #[serde(rename = "mu_B")]
    pub mu_b: f64,
    #[serde(rename = "eps_B")]
    pub eps_b: f64,
    #[serde(rename = "mu_D")]
    pub mu_d: f64,
    #[serde(rename = "eps_D")]
    pub eps_d: f64,
}

impl MaterialSet {
    /// Every region filled with the unit medium.
    pub fn uniform() -> Self {
        MaterialSet {
            mu_plus: 1.0,
            eps_plus: 1.0,
            mu_cl: 1.0,
            eps_cl: 1.0,
            mu_host: 1.0,
            eps_host: 1.0,
            mu_b: 1.0,
            eps_b: 1.0,
            mu_d: 1.0,
            eps_d: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu_plus", self.mu_plus),
            ("eps_plus", self.eps_plus),
            ("mu_cl", self.mu_cl),
            ("eps_cl", self.eps_cl),
            ("mu_host", self.mu_host),
            ("eps_host", self.eps_host),
            ("mu_B", self.mu_b),
            ("eps_B", self.eps_b),
            ("mu_D", self.mu_d),
            ("eps_D", self.eps_d),
        ] {
            check_positive(name, v)?;
        }
        Ok(())
    }

    pub fn k_plus(&self, omega: f64) -> f64 {
        omega * (self.eps_plus * self.mu_plus).sqrt()
    }

    pub fn k_d(&self, omega: f64) -> f64 {
        omega * (self.eps_d * self.mu_d).sqrt()
    }
}
