use faer::prelude::*;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::mesh::BoundaryMesh;
use super::nystrom::{boundary_operators, BoundaryOperators};
use crate::kernels::{FreeSpaceKernel, KernelValue};
use crate::layered::{BackgroundField, LayeredGreen, SommerfeldOptions};
use crate::{Error, Result};

/// Condition estimates above this are reported as a singular assembly.
pub const MAX_CONDITION: f64 = 1e13;
/// Relative residual required of the dense solve.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

/// Green's function outside the inclusion.
#[derive(Debug, Clone)]
pub enum ExteriorKernel {
    WholeSpace(FreeSpaceKernel),
    /// Layered kernel of the effective problem; the inclusion lies in the
    /// lower medium.
    Layered {
        green: LayeredGreen,
        options: SommerfeldOptions,
    },
}

impl ExteriorKernel {
    /// Closed-form singular part in the medium containing the inclusion.
    pub fn free(&self) -> &FreeSpaceKernel {
        match self {
            ExteriorKernel::WholeSpace(k) => k,
            ExteriorKernel::Layered { green, .. } => green.lower_free(),
        }
    }
}

/// Field in the absence of the inclusion, evaluated near its boundary.
pub trait IncidentField: Sync {
    fn eval(&self, x: [f64; 2]) -> KernelValue;
}

impl IncidentField for BackgroundField {
    fn eval(&self, x: [f64; 2]) -> KernelValue {
        BackgroundField::eval(self, x)
    }
}

/// `amplitude * exp(i k d . x)` in a homogeneous whole space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub k: f64,
    pub direction: [f64; 2],
    pub amplitude: Complex64,
}

impl IncidentField for PlaneWave {
    fn eval(&self, x: [f64; 2]) -> KernelValue {
        let (d, k) = (self.direction, self.k);
        let value = self.amplitude * Complex64::new(0.0, k * (d[0] * x[0] + d[1] * x[1])).exp();
        let ik = Complex64::new(0.0, k);
        KernelValue {
            value,
            grad: [ik * d[0] * value, ik * d[1] * value],
        }
    }
}

/// Nyström operators of the exterior kernel: log-split quadrature of the
/// closed-form part plus the trapezoid rule on the smooth layered correction.
pub fn exterior_operators(kernel: &ExteriorKernel, mesh: &BoundaryMesh) -> Result<BoundaryOperators> {
    let mut ops = boundary_operators(kernel.free(), mesh);
    if let ExteriorKernel::Layered { green, options } = kernel {
        let n = mesh.len();
        let free = green.lower_free();
        let rows: Vec<Vec<(Complex64, Complex64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let (x, nu) = (mesh.points[i], mesh.normals[i]);
                (0..n)
                    .map(|j| {
                        let g = green.correction(x, mesh.points[j], options)?;
                        let f = free.flux(g.grad);
                        let w = mesh.weights[j];
                        Ok((w * g.value, w * (nu[0] * f[0] + nu[1] * f[1])))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, row) in rows.iter().enumerate() {
            for (j, (s, k)) in row.iter().enumerate() {
                ops.single[i * n + j] += s;
                ops.conormal[i * n + j] += k;
            }
        }
    }
    Ok(ops)
}

/// Dense transmission system for `(phi, psi_D)`:
/// `-S phi + S_D psi_D = U` and
/// `(1/2) phi - K' phi + (1/2) psi_D + K'_D psi_D = nu . A grad U` on the boundary.
#[derive(Debug, Clone)]
pub struct BemSystem {
    pub n: usize,
    /// Row-major `2N x 2N`.
    pub matrix: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
}

impl BemSystem {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let m = self.dim();
        (0..m).map(|i| (0..m).map(|j| self.matrix[i * m + j] * x[j]).sum()).collect()
    }
}

pub fn assemble_system(
    mesh: &BoundaryMesh,
    exterior: &ExteriorKernel,
    interior: &FreeSpaceKernel,
    incident: &dyn IncidentField,
) -> Result<BemSystem> {
    let ext = exterior_operators(exterior, mesh)?;
    let int = boundary_operators(interior, mesh);
    Ok(system_from_operators(mesh, &ext, &int, exterior.free(), incident))
}

pub(crate) fn system_from_operators(
    mesh: &BoundaryMesh,
    ext: &BoundaryOperators,
    int: &BoundaryOperators,
    free: &FreeSpaceKernel,
    incident: &dyn IncidentField,
) -> BemSystem {
    let n = mesh.len();
    let m = 2 * n;
    let mut matrix = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..n {
        for j in 0..n {
            matrix[i * m + j] = -ext.single[i * n + j];
            matrix[i * m + n + j] = int.single[i * n + j];
            matrix[(n + i) * m + j] = -ext.conormal[i * n + j];
            matrix[(n + i) * m + n + j] = int.conormal[i * n + j];
        }
        matrix[(n + i) * m + i] += 0.5;
        matrix[(n + i) * m + n + i] += 0.5;
    }
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..n {
        let u = incident.eval(mesh.points[i]);
        let f = free.flux(u.grad);
        let nu = mesh.normals[i];
        rhs[i] = u.value;
        rhs[n + i] = nu[0] * f[0] + nu[1] * f[1];
    }
    BemSystem { n, matrix, rhs }
}

/// Solved boundary densities.
#[derive(Debug, Clone, Serialize)]
pub struct LayerDensities {
    #[serde(skip)]
    pub phi: Vec<Complex64>,
    #[serde(skip)]
    pub psi_d: Vec<Complex64>,
    /// `|M x - b| / |b|` in the max norm.
    pub residual: f64,
    /// `|M|_1 |M^{-1}|_1`.
    pub condition: f64,
}

/// Dense LU solve with partial pivoting.
pub fn solve_densities(system: &BemSystem) -> Result<LayerDensities> {
    let m = system.dim();
    let a = Mat::<Complex64>::from_fn(m, m, |i, j| system.matrix[i * m + j]);
    let lu = a.partial_piv_lu();
    let b = Mat::<Complex64>::from_fn(m, 1, |i, _| system.rhs[i]);
    let x = lu.solve(&b);
    let inv = lu.solve(&Mat::<Complex64>::identity(m, m));
    let norm1 = |f: &dyn Fn(usize, usize) -> Complex64| {
        (0..m)
            .map(|j| (0..m).map(|i| f(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let condition = norm1(&|i, j| system.matrix[i * m + j]) * norm1(&|i, j| inv[(i, j)]);
    if !(condition.is_finite() && condition < MAX_CONDITION) {
        return Err(Error::AssemblySingular { condition });
    }
    let sol: Vec<Complex64> = (0..m).map(|i| x[(i, 0)]).collect();
    let ax = system.apply(&sol);
    let scale = system.rhs.iter().fold(0.0f64, |s, v| s.max(v.norm()));
    let residual = if scale == 0.0 {
        0.0
    } else {
        ax.iter()
            .zip(&system.rhs)
            .fold(0.0f64, |s, (p, q)| s.max((p - q).norm()))
            / scale
    };
    if !(residual < RESIDUAL_LIMIT) {
        return Err(Error::ResidualTooHigh {
            residual,
            limit: RESIDUAL_LIMIT,
        });
    }
    let n = system.n;
    Ok(LayerDensities {
        phi: sol[..n].to_vec(),
        psi_d: sol[n..].to_vec(),
        residual,
        condition,
    })
}
