use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{check_positive, MaterialSet};
use crate::{Error, Result};

/// Incident plane wave `exp(i k+ theta . x)` coming down from the upper medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidentWave {
    pub omega: f64,
    pub theta: [f64; 2],
}

impl IncidentWave {
    /// Direction at `angle` radians from the downward normal, tilted towards +x1.
    pub fn from_angle(omega: f64, angle: f64) -> Self {
        IncidentWave {
            omega,
            theta: [angle.sin(), -angle.cos()],
        }
    }

    pub fn k_plus(&self, m: &MaterialSet) -> f64 {
        m.k_plus(self.omega)
    }

    pub fn lambda_plus(&self, m: &MaterialSet) -> f64 {
        TAU / self.k_plus(m)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("wave.omega", self.omega)?;
        let norm = self.theta[0].hypot(self.theta[1]);
        if !((norm - 1.0).abs() <= 1e-12) {
            return Err(Error::value(format!("wave.theta must be a unit vector, |theta| = {norm}")));
        }
        if !(self.theta[1] < 0.0) {
            return Err(Error::value("wave.theta must point downwards (theta2 < 0)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_and_direction_checks() {
        let w = IncidentWave::from_angle(TAU, 0.3);
        assert!(w.validate().is_ok());
        assert!((w.k_plus(&MaterialSet::uniform()) - TAU).abs() < 1e-15);
        assert!((w.lambda_plus(&MaterialSet::uniform()) - 1.0).abs() < 1e-15);
        let up = IncidentWave { omega: 1.0, theta: [0.0, 1.0] };
        assert!(up.validate().is_err());
        let long = IncidentWave { omega: 1.0, theta: [0.0, -1.0 - 1e-9] };
        assert!(long.validate().is_err());
    }
}
