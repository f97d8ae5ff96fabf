use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::mesh::BoundaryMesh;
use crate::kernels::FreeSpaceKernel;
use crate::special::{j0, j1, EULER_GAMMA};

/// A kernel with a logarithmic singularity, in the form needed by the
/// log-splitting quadrature: on the curve `G(x(t), x(s)) = a ln|t - s| + smooth`.
pub trait BoundaryKernel: Sync {
    fn value(&self, x: [f64; 2], y: [f64; 2]) -> Complex64;
    /// `x`-gradient.
    fn gradient(&self, x: [f64; 2], y: [f64; 2]) -> [Complex64; 2];
    /// Flux `A g` of a gradient.
    fn flux(&self, g: [Complex64; 2]) -> [Complex64; 2];
    /// Coefficient `a(x, y)` of the logarithm in the value.
    fn value_log(&self, x: [f64; 2], y: [f64; 2]) -> Complex64;
    /// `lim_{s -> t} G - a ln|t - s|` given the tangent `x'(t)`.
    fn value_diagonal(&self, tangent: [f64; 2]) -> Complex64;
    /// Coefficient of the logarithm in `nu . A grad_x G`.
    fn conormal_log(&self, x: [f64; 2], y: [f64; 2], nu: [f64; 2]) -> Complex64;
    /// Diagonal limit of `nu . A grad_x G` on the curve.
    fn conormal_diagonal(&self, tangent: [f64; 2], second: [f64; 2], nu: [f64; 2]) -> Complex64;

    fn conormal(&self, x: [f64; 2], y: [f64; 2], nu: [f64; 2]) -> Complex64 {
        let f = self.flux(self.gradient(x, y));
        nu[0] * f[0] + nu[1] * f[1]
    }
}

fn quad_a_inv(k: &FreeSpaceKernel, v: [f64; 2]) -> f64 {
    let m = k.metric_distance(v);
    m * m
}

impl BoundaryKernel for FreeSpaceKernel {
    fn value(&self, x: [f64; 2], y: [f64; 2]) -> Complex64 {
        FreeSpaceKernel::value(self, x, y)
    }

    fn gradient(&self, x: [f64; 2], y: [f64; 2]) -> [Complex64; 2] {
        self.eval(x, y).grad
    }

    fn flux(&self, g: [Complex64; 2]) -> [Complex64; 2] {
        FreeSpaceKernel::flux(self, g)
    }

    fn value_log(&self, x: [f64; 2], y: [f64; 2]) -> Complex64 {
        let r = self.metric_distance([x[0] - y[0], x[1] - y[1]]);
        Complex64::new(-self.scale / (2.0 * PI) * j0(self.k * r), 0.0)
    }

    fn value_diagonal(&self, tangent: [f64; 2]) -> Complex64 {
        let ja = self.metric_distance(tangent);
        let c = self.scale;
        Complex64::new(-c / (2.0 * PI) * ((0.5 * self.k * ja).ln() + EULER_GAMMA), 0.25 * c)
    }

    fn conormal_log(&self, x: [f64; 2], y: [f64; 2], nu: [f64; 2]) -> Complex64 {
        let d = [x[0] - y[0], x[1] - y[1]];
        let r = self.metric_distance(d);
        let q = (nu[0] * d[0] + nu[1] * d[1]) / r;
        Complex64::new(self.scale * self.k / (2.0 * PI) * j1(self.k * r) * q, 0.0)
    }

    fn conormal_diagonal(&self, tangent: [f64; 2], second: [f64; 2], nu: [f64; 2]) -> Complex64 {
        let num = nu[0] * second[0] + nu[1] * second[1];
        Complex64::new(self.scale / (4.0 * PI) * num / quad_a_inv(self, tangent), 0.0)
    }

    fn conormal(&self, x: [f64; 2], y: [f64; 2], nu: [f64; 2]) -> Complex64 {
        FreeSpaceKernel::conormal(self, x, y, nu)
    }
}

/// The two-dimensional Laplace kernel `-(1/2pi) ln|x - y|`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LaplaceKernel;

impl BoundaryKernel for LaplaceKernel {
    fn value(&self, x: [f64; 2], y: [f64; 2]) -> Complex64 {
        Complex64::new(-((x[0] - y[0]).hypot(x[1] - y[1])).ln() / (2.0 * PI), 0.0)
    }

    fn gradient(&self, x: [f64; 2], y: [f64; 2]) -> [Complex64; 2] {
        let d = [x[0] - y[0], x[1] - y[1]];
        let r2 = d[0] * d[0] + d[1] * d[1];
        [
            Complex64::new(-d[0] / (2.0 * PI * r2), 0.0),
            Complex64::new(-d[1] / (2.0 * PI * r2), 0.0),
        ]
    }

    fn flux(&self, g: [Complex64; 2]) -> [Complex64; 2] {
        g
    }

    fn value_log(&self, _x: [f64; 2], _y: [f64; 2]) -> Complex64 {
        Complex64::new(-1.0 / (2.0 * PI), 0.0)
    }

    fn value_diagonal(&self, tangent: [f64; 2]) -> Complex64 {
        Complex64::new(-tangent[0].hypot(tangent[1]).ln() / (2.0 * PI), 0.0)
    }

    fn conormal_log(&self, _x: [f64; 2], _y: [f64; 2], _nu: [f64; 2]) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    fn conormal_diagonal(&self, tangent: [f64; 2], second: [f64; 2], nu: [f64; 2]) -> Complex64 {
        let num = nu[0] * second[0] + nu[1] * second[1];
        Complex64::new(num / (4.0 * PI * (tangent[0] * tangent[0] + tangent[1] * tangent[1])), 0.0)
    }
}

/// Weights `R_j(t_0)` of the product quadrature for `ln(4 sin^2((t - s)/2))`
/// against trigonometric interpolants, indexed by `(i - j) mod N`.
pub fn log_weights(n_nodes: usize) -> Vec<f64> {
    let n = n_nodes / 2;
    let nf = n as f64;
    (0..n_nodes)
        .map(|d| {
            let t = PI * d as f64 / nf;
            let mut s = 0.0;
            for m in 1..n {
                s += (m as f64 * t).cos() / m as f64;
            }
            -2.0 * PI / nf * s - PI / (nf * nf) * (nf * t).cos()
        })
        .collect()
}

/// Row-major `N x N` Nyström matrices of the boundary traces of the single
/// layer `S` and the principal-value conormal derivative `K'`.
#[derive(Debug, Clone)]
pub struct BoundaryOperators {
    pub n: usize,
    pub single: Vec<Complex64>,
    pub conormal: Vec<Complex64>,
}

impl BoundaryOperators {
    pub fn apply_single(&self, density: &[Complex64]) -> Vec<Complex64> {
        matvec(&self.single, density)
    }

    pub fn apply_conormal(&self, density: &[Complex64]) -> Vec<Complex64> {
        matvec(&self.conormal, density)
    }
}

fn matvec(m: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| m[i * n + j] * v[j]).sum()).collect()
}

/// Log-split Nyström discretization of a singular kernel on `mesh`.
pub fn boundary_operators<K: BoundaryKernel>(kernel: &K, mesh: &BoundaryMesh) -> BoundaryOperators {
    let n = mesh.len();
    let r = log_weights(n);
    let h = 2.0 * PI / n as f64;
    let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = mesh.points[i];
            let nu = mesh.normals[i];
            let mut s_row = vec![Complex64::new(0.0, 0.0); n];
            let mut k_row = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                let jac = mesh.jacobian[j];
                let rw = r[(i + n - j) % n];
                if i == j {
                    let a = kernel.value_log(x, x);
                    let m1 = 0.5 * a;
                    let m2 = kernel.value_diagonal(mesh.tangents[i]);
                    s_row[j] = (rw * m1 + h * m2) * jac;
                    let m2 = kernel.conormal_diagonal(mesh.tangents[i], mesh.second[i], nu);
                    k_row[j] = h * m2 * jac;
                } else {
                    let y = mesh.points[j];
                    let dt = mesh.t[i] - mesh.t[j];
                    let l = (4.0 * (0.5 * dt).sin().powi(2)).ln();
                    let m1 = 0.5 * kernel.value_log(x, y);
                    let m2 = kernel.value(x, y) - m1 * l;
                    s_row[j] = (rw * m1 + h * m2) * jac;
                    let m1 = 0.5 * kernel.conormal_log(x, y, nu);
                    let m2 = kernel.conormal(x, y, nu) - m1 * l;
                    k_row[j] = (rw * m1 + h * m2) * jac;
                }
            }
            (s_row, k_row)
        })
        .collect();
    let mut ops = BoundaryOperators {
        n,
        single: Vec::with_capacity(n * n),
        conormal: Vec::with_capacity(n * n),
    };
    for (s, k) in rows {
        ops.single.extend(s);
        ops.conormal.extend(k);
    }
    ops
}
