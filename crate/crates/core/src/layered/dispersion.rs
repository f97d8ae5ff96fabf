use num_complex::Complex64;

use crate::homogenization::EffectiveMedium;
use crate::{Error, Result};

/// Principal square root with the negative real axis mapped to `+i`,
/// whatever the sign of a zero imaginary part.
pub fn csqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        if z.re >= 0.0 {
            Complex64::new(z.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-z.re).sqrt())
        }
    } else {
        z.sqrt()
    }
}

/// Vertical wavenumber of the upper medium, `sqrt(k - k1) sqrt(k + k1)`;
/// `Im >= 0` on the real axis and analytic off the cuts `|Re k1| >= k`.
pub fn beta_plus(k1: Complex64, k: f64) -> Complex64 {
    csqrt(k - k1) * csqrt(k + k1)
}

/// Both vertical wavenumbers of the lower medium at one tangential
/// wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerRoots {
    /// Downgoing or decaying towards `x2 -> -inf`.
    pub down: Complex64,
    /// Upgoing or decaying towards `x2 -> +inf`.
    pub up: Complex64,
    /// `A22 (up - down)`.
    pub s: Complex64,
}

/// Coefficients of `A22 b^2 + (A12 + A21) k1 b + A11 k1^2 - omega^2 eps = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LowerDispersion {
    a22: f64,
    b: f64,
    sqrt_c2: f64,
    /// Branch point: the discriminant vanishes at `k1 = +-kappa`.
    pub kappa: f64,
}

impl LowerDispersion {
    pub fn new(medium: &EffectiveMedium, omega: f64) -> Result<Self> {
        let a = &medium.a;
        if !(a[1][1] > 0.0) {
            return Err(Error::DegenerateDispersion { a22: a[1][1] });
        }
        let b = a[0][1] + a[1][0];
        let c2 = 4.0 * a[0][0] * a[1][1] - b * b;
        let c0 = 4.0 * a[1][1] * omega * omega * medium.eps_minus;
        if !(c2 > 0.0) {
            return Err(Error::value("effective tensor is not positive definite"));
        }
        Ok(LowerDispersion {
            a22: a[1][1],
            b,
            sqrt_c2: c2.sqrt(),
            kappa: (c0 / c2).sqrt(),
        })
    }

    /// Discriminant root `s = sqrt(c2) sqrt(kappa - k1) sqrt(kappa + k1)`
    /// and the two roots `(-b k1 -+ s) / (2 A22)`.
    pub fn roots(&self, k1: Complex64) -> LowerRoots {
        let s = self.sqrt_c2 * csqrt(self.kappa - k1) * csqrt(self.kappa + k1);
        let two = 2.0 * self.a22;
        LowerRoots {
            down: (-self.b * k1 - s) / two,
            up: (-self.b * k1 + s) / two,
            s,
        }
    }
}

/// Downgoing root `beta` of the lower dispersion relation.
///
/// For real `k1` inside the propagating band the root carries energy
/// downwards (`Re(A21 k1 + A22 beta) < 0`); outside it `Im beta < 0`, so the
/// mode decays as `x2 -> -inf`.
pub fn dispersion_root(k1: Complex64, medium: &EffectiveMedium, omega: f64) -> Result<Complex64> {
    Ok(LowerDispersion::new(medium, omega)?.roots(k1).down)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn isotropic_normal_incidence() {
        let m = EffectiveMedium::isotropic(2.0, 3.0);
        let b = dispersion_root(c(0.0), &m, 1.5).unwrap();
        assert!((b - c(-1.5 * 6f64.sqrt())).norm() < 1e-14);
    }

    #[test]
    fn evanescent_beyond_cutoff() {
        let m = EffectiveMedium::isotropic(1.0, 1.0);
        let b = dispersion_root(c(2.0), &m, 1.0).unwrap();
        assert!(b.re.abs() < 1e-15 && (b.im + 3f64.sqrt()).abs() < 1e-14);
        let b = dispersion_root(c(-2.0), &m, 1.0).unwrap();
        assert!(b.im < 0.0);
    }

    #[test]
    fn diagonal_tensor_matches_quadratic_formula() {
        let (a1, a2, eps, w) = (0.7, 0.3, 2.0, 2.0);
        let m = EffectiveMedium {
            a: [[a1, 0.0], [0.0, a2]],
            eps_minus: eps,
        };
        for k1 in [0.0, 0.5, 1.9] {
            let b = dispersion_root(c(k1), &m, w).unwrap();
            let expected = -((w * w * eps - a1 * k1 * k1) / a2).sqrt();
            assert!((b - c(expected)).norm() < 1e-13);
        }
    }

    #[test]
    fn downward_flux_for_sheared_tensor() {
        let m = EffectiveMedium {
            a: [[0.8, 0.2], [0.2, 0.5]],
            eps_minus: 1.5,
        };
        let d = LowerDispersion::new(&m, 2.0).unwrap();
        for k1 in [-2.0, -0.5, 0.0, 0.7, 2.1] {
            let r = d.roots(c(k1));
            let residual = |b: Complex64| 0.5 * b * b + 0.4 * k1 * b + 0.8 * k1 * k1 - 4.0 * 1.5;
            assert!(residual(r.down).norm() < 1e-12 && residual(r.up).norm() < 1e-12);
            let flux = 0.2 * k1 + 0.5 * r.down;
            assert!(flux.re < 0.0);
        }
        assert!((d.roots(c(d.kappa + 0.5)).down.im) < 0.0);
    }

    #[test]
    fn degenerate_tensor_rejected() {
        let m = EffectiveMedium {
            a: [[1.0, 0.0], [0.0, 0.0]],
            eps_minus: 1.0,
        };
        assert!(matches!(dispersion_root(c(0.0), &m, 1.0), Err(Error::DegenerateDispersion { .. })));
    }

    #[test]
    fn upper_branch() {
        let b = beta_plus(c(0.5), 1.0);
        assert!((b - c(0.75f64.sqrt())).norm() < 1e-15);
        let b = beta_plus(c(-2.0), 1.0);
        assert!(b.re.abs() < 1e-15 && b.im > 0.0);
        let b = beta_plus(Complex64::new(2.0, -0.1), 1.0);
        assert!(b.im > 0.0);
    }
}
