use num_complex::Complex64;

use super::dispersion::{beta_plus, LowerDispersion, LowerRoots};
use crate::boundary_layer::TransmissionCoefficients;
use crate::homogenization::EffectiveMedium;
use crate::model::MaterialSet;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The effective problem: upper medium, homogenized lower medium and the
/// transmission conditions on `x2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveProblem {
    pub medium: EffectiveMedium,
    pub coeffs: TransmissionCoefficients,
    pub mu_plus: f64,
    pub eps_plus: f64,
    pub omega: f64,
    pub k_plus: f64,
    pub(crate) lower: LowerDispersion,
}

/// The two transmission conditions on a tangential Fourier mode, as linear
/// forms in the traces `(U+, d2 U+, U-, d2 U-)` at `x2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceRows {
    pub c1: [Complex64; 4],
    pub c2: [Complex64; 4],
}

impl EffectiveProblem {
    pub fn new(
        materials: &MaterialSet,
        medium: &EffectiveMedium,
        coeffs: &TransmissionCoefficients,
        omega: f64,
    ) -> Result<Self> {
        materials.validate()?;
        medium.validate()?;
        let layered = coeffs.psi != [0.0; 2] || coeffs.phi1 != [0.0; 2] || coeffs.phi2 != [0.0; 2] || coeffs.phi3 != 0.0;
        if layered && coeffs.omega != omega {
            return Err(Error::value(format!(
                "transmission coefficients were built at omega = {}, not {omega}",
                coeffs.omega
            )));
        }
        Ok(EffectiveProblem {
            medium: *medium,
            coeffs: *coeffs,
            mu_plus: materials.mu_plus,
            eps_plus: materials.eps_plus,
            omega,
            k_plus: materials.k_plus(omega),
            lower: LowerDispersion::new(medium, omega)?,
        })
    }

    pub fn beta_plus(&self, k1: Complex64) -> Complex64 {
        beta_plus(k1, self.k_plus)
    }

    pub fn lower_roots(&self, k1: Complex64) -> LowerRoots {
        self.lower.roots(k1)
    }

    /// Lower-medium branch point.
    pub fn kappa(&self) -> f64 {
        self.lower.kappa
    }

    /// Largest propagating tangential wavenumber of either medium.
    pub fn k_max(&self) -> f64 {
        self.k_plus.max(self.lower.kappa)
    }

    /// Symbols of the conditions with `d1 -> i k1`:
    /// `[U] = psi . grad U+` and
    /// `(1/mu+) d2 U+ - (0,1) A grad U- = phi1 . d1 grad U+
    ///  + phi2 . (d21 U+, (-k+^2 - d11) U+) + phi3 U+`.
    pub fn rows(&self, k1: Complex64) -> InterfaceRows {
        let c = &self.coeffs;
        let a = &self.medium.a;
        let k1sq = k1 * k1;
        let gamma = 1.0 / self.mu_plus - I * (c.phi1[1] + c.phi2[0]) * k1;
        let delta = c.phi1[0] * k1sq - c.phi2[1] * (k1sq - self.k_plus * self.k_plus) - c.phi3;
        InterfaceRows {
            c1: [1.0 - I * c.psi[0] * k1, Complex64::new(-c.psi[1], 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0)],
            c2: [delta, gamma, -I * a[1][0] * k1, Complex64::new(-a[1][1], 0.0)],
        }
    }
}

fn dot4(r: &[Complex64; 4], t: &[Complex64; 4]) -> Complex64 {
    r.iter().zip(t).map(|(a, b)| a * b).sum()
}

impl InterfaceRows {
    pub fn residual(&self, traces: &[Complex64; 4]) -> [Complex64; 2] {
        [dot4(&self.c1, traces), dot4(&self.c2, traces)]
    }

    /// Finds `(p, q)` such that `known + p u0 + q u1` satisfies both
    /// conditions.
    pub fn solve(
        &self,
        k1: Complex64,
        known: &[Complex64; 4],
        unknown: &[[Complex64; 4]; 2],
    ) -> Result<[Complex64; 2]> {
        let m = [
            [dot4(&self.c1, &unknown[0]), dot4(&self.c1, &unknown[1])],
            [dot4(&self.c2, &unknown[0]), dot4(&self.c2, &unknown[1])],
        ];
        let r = self.residual(known);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let scale = (m[0][0].norm() + m[0][1].norm()) * (m[1][0].norm() + m[1][1].norm());
        if !(det.norm() > 1e-14 * scale) {
            return Err(Error::SingularInterfaceSystem { k1 });
        }
        Ok([
            (-r[0] * m[1][1] + r[1] * m[0][1]) / det,
            (-r[1] * m[0][0] + r[0] * m[1][0]) / det,
        ])
    }

    /// Determinant of the outgoing-mode system divided by its row scales.
    pub fn normalized_det(&self, unknown: &[[Complex64; 4]; 2]) -> f64 {
        let m = [
            [dot4(&self.c1, &unknown[0]), dot4(&self.c1, &unknown[1])],
            [dot4(&self.c2, &unknown[0]), dot4(&self.c2, &unknown[1])],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        det.norm() / ((m[0][0].norm() + m[0][1].norm()) * (m[1][0].norm() + m[1][1].norm()))
    }
}
