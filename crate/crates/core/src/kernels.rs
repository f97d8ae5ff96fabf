//! Closed-form whole-space Green's functions under the `-delta` normalization.

use num_complex::Complex64;

use crate::homogenization::EffectiveMedium;
use crate::model::MaterialSet;
use crate::special::{hankel0, hankel1};

/// Green's function of `div(A grad G) + k_e^2 G = -delta` for a constant
/// symmetric positive definite `A`, where `k_e = omega sqrt(eps)`:
/// `G = c (i/4) H0(k_e r)`, `c = det(A)^{-1/2}`, `r = |x - y|` in the metric
/// of `A^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSpaceKernel {
    pub a: [[f64; 2]; 2],
    pub a_inv: [[f64; 2]; 2],
    pub scale: f64,
    pub k: f64,
}

/// Value and `x`-gradient of a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub grad: [Complex64; 2],
}

impl FreeSpaceKernel {
    pub fn anisotropic(medium: &EffectiveMedium, omega: f64) -> Self {
        let s = 0.5 * (medium.a[0][1] + medium.a[1][0]);
        let a = [[medium.a[0][0], s], [s, medium.a[1][1]]];
        let det = a[0][0] * a[1][1] - s * s;
        FreeSpaceKernel {
            a,
            a_inv: medium.inverse(),
            scale: 1.0 / det.sqrt(),
            k: omega * medium.eps_minus.sqrt(),
        }
    }

    /// `(1/mu) Laplace + omega^2 eps`.
    pub fn isotropic(mu: f64, eps: f64, omega: f64) -> Self {
        FreeSpaceKernel::anisotropic(&EffectiveMedium::isotropic(mu, eps), omega)
    }

    /// Kernel of the buried inclusion.
    pub fn anomaly(materials: &MaterialSet, omega: f64) -> Self {
        FreeSpaceKernel::isotropic(materials.mu_d, materials.eps_d, omega)
    }

    pub fn upper(materials: &MaterialSet, omega: f64) -> Self {
        FreeSpaceKernel::isotropic(materials.mu_plus, materials.eps_plus, omega)
    }

    /// Distance in the metric of `A^{-1}`.
    pub fn metric_distance(&self, d: [f64; 2]) -> f64 {
        let q = self.a_inv[0][0] * d[0] * d[0] + 2.0 * self.a_inv[0][1] * d[0] * d[1] + self.a_inv[1][1] * d[1] * d[1];
        q.sqrt()
    }

    pub fn value(&self, x: [f64; 2], y: [f64; 2]) -> Complex64 {
        let r = self.metric_distance([x[0] - y[0], x[1] - y[1]]);
        Complex64::new(0.0, 0.25 * self.scale) * hankel0(self.k * r)
    }

    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> KernelValue {
        let d = [x[0] - y[0], x[1] - y[1]];
        let r = self.metric_distance(d);
        let kr = self.k * r;
        let i4 = Complex64::new(0.0, 0.25 * self.scale);
        let value = i4 * hankel0(kr);
        // d/dx H0(k r) = -k H1(k r) A^{-1} d / r
        let g = -i4 * self.k * hankel1(kr) / r;
        let m = [
            self.a_inv[0][0] * d[0] + self.a_inv[0][1] * d[1],
            self.a_inv[1][0] * d[0] + self.a_inv[1][1] * d[1],
        ];
        KernelValue {
            value,
            grad: [g * m[0], g * m[1]],
        }
    }

    /// `nu . A grad_x G(x, y)`.
    pub fn conormal(&self, x: [f64; 2], y: [f64; 2], nu: [f64; 2]) -> Complex64 {
        let d = [x[0] - y[0], x[1] - y[1]];
        let r = self.metric_distance(d);
        -Complex64::new(0.0, 0.25 * self.scale * self.k) * hankel1(self.k * r) * (nu[0] * d[0] + nu[1] * d[1]) / r
    }

    /// Flux `A grad u` of a gradient.
    pub fn flux(&self, grad: [Complex64; 2]) -> [Complex64; 2] {
        [
            grad[0] * self.a[0][0] + grad[1] * self.a[0][1],
            grad[0] * self.a[1][0] + grad[1] * self.a[1][1],
        ]
    }
}

/// Whole-space Green's function of the inclusion, `(i mu_D / 4) H0(k_D |x - y|)`.
pub fn anomaly_green(x: [f64; 2], y: [f64; 2], materials: &MaterialSet, omega: f64) -> Complex64 {
    FreeSpaceKernel::anomaly(materials, omega).value(x, y)
}

/// Whole-space Green's function of the effective lower medium.
pub fn anisotropic_freespace_green(x: [f64; 2], y: [f64; 2], medium: &EffectiveMedium, omega: f64) -> Complex64 {
    FreeSpaceKernel::anisotropic(medium, omega).value(x, y)
}
