use num_complex::Complex64;
use rayon::prelude::*;

use super::mesh::{trig_interpolate, BoundaryMesh};
use super::nystrom::{boundary_operators, BoundaryKernel};
use super::system::{ExteriorKernel, IncidentField, LayerDensities};
use crate::field::{FieldGrid, GridSpec};
use crate::kernels::{FreeSpaceKernel, KernelValue};
use crate::{Error, Result};

/// Points closer to the boundary than this many node spacings are refused.
pub const EXCLUSION_SPACINGS: f64 = 2.0;
/// Points closer than this many spacings use the upsampled density.
pub const UPSAMPLE_SPACINGS: f64 = 6.0;
pub const UPSAMPLE_FACTOR: usize = 8;

/// Off-boundary evaluator of `S phi` for one density. Near the boundary the
/// density is trigonometrically interpolated onto a finer copy of the mesh
/// so the trapezoid rule stays accurate.
pub struct SingleLayerPotential<'a, K: BoundaryKernel> {
    kernel: &'a K,
    mesh: &'a BoundaryMesh,
    density: &'a [Complex64],
    fine: BoundaryMesh,
    fine_density: Vec<Complex64>,
}

impl<'a, K: BoundaryKernel> SingleLayerPotential<'a, K> {
    pub fn new(kernel: &'a K, mesh: &'a BoundaryMesh, density: &'a [Complex64]) -> Self {
        SingleLayerPotential {
            kernel,
            mesh,
            density,
            fine: mesh.refined(UPSAMPLE_FACTOR),
            fine_density: trig_interpolate(density, UPSAMPLE_FACTOR),
        }
    }

    /// Value and gradient at `x`; `NearBoundary` within the exclusion zone.
    pub fn eval(&self, x: [f64; 2]) -> Result<KernelValue> {
        let d = self.mesh.distance(x);
        let h = self.mesh.spacing();
        // Offsets of exactly two spacings are admitted despite rounding.
        if d < EXCLUSION_SPACINGS * h * (1.0 - 1e-9) {
            return Err(Error::NearBoundary);
        }
        let (mesh, density) = if d < UPSAMPLE_SPACINGS * h {
            (&self.fine, self.fine_density.as_slice())
        } else {
            (self.mesh, self.density)
        };
        let mut out = KernelValue {
            value: Complex64::new(0.0, 0.0),
            grad: [Complex64::new(0.0, 0.0); 2],
        };
        for ((y, w), p) in mesh.points.iter().zip(&mesh.weights).zip(density) {
            let c = p * *w;
            out.value += c * self.kernel.value(x, *y);
            let g = self.kernel.gradient(x, *y);
            out.grad[0] += c * g[0];
            out.grad[1] += c * g[1];
        }
        Ok(out)
    }
}

/// `S phi (x)` off the boundary.
pub fn single_layer<K: BoundaryKernel>(
    kernel: &K,
    mesh: &BoundaryMesh,
    density: &[Complex64],
    x: [f64; 2],
) -> Result<Complex64> {
    Ok(SingleLayerPotential::new(kernel, mesh, density).eval(x)?.value)
}

/// Boundary trace of `S phi` at the nodes.
pub fn single_layer_trace<K: BoundaryKernel>(kernel: &K, mesh: &BoundaryMesh, density: &[Complex64]) -> Vec<Complex64> {
    boundary_operators(kernel, mesh).apply_single(density)
}

/// Evaluates `u = U + S phi` outside the inclusion and `u = S_D psi_D`
/// inside. With `include_incident = false` the exterior value is `S phi`
/// alone and interior points hold `S_D psi_D - U`.
pub fn field_on_grid(
    densities: &LayerDensities,
    mesh: &BoundaryMesh,
    exterior: &ExteriorKernel,
    interior: &FreeSpaceKernel,
    incident: &dyn IncidentField,
    grid: &GridSpec,
    include_incident: bool,
) -> Result<FieldGrid> {
    grid.validate()?;
    let ext = SingleLayerPotential::new(exterior.free(), mesh, &densities.phi);
    let int = SingleLayerPotential::new(interior, mesh, &densities.psi_d);
    let sources: Vec<([f64; 2], Complex64)> = mesh
        .points
        .iter()
        .zip(&mesh.weights)
        .zip(&densities.phi)
        .map(|((y, w), p)| (*y, p * *w))
        .collect();
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let values: Vec<Option<Complex64>> = grid
        .points()
        .par_iter()
        .map(|&x| -> Result<Option<Complex64>> {
            let u = if include_incident {
                incident.eval(x).value
            } else {
                Complex64::new(0.0, 0.0)
            };
            if mesh.curve.contains(x) {
                return match int.eval(x) {
                    Ok(v) if include_incident => Ok(Some(v.value)),
                    Ok(v) => Ok(Some(v.value - incident.eval(x).value)),
                    Err(Error::NearBoundary) => Ok(None),
                    Err(e) => Err(e),
                };
            }
            let s = match exterior {
                ExteriorKernel::WholeSpace(_) => match ext.eval(x) {
                    Ok(v) => v.value,
                    Err(Error::NearBoundary) => return Ok(None),
                    Err(e) => return Err(e),
                },
                ExteriorKernel::Layered { green, options } => {
                    if x[1] >= 0.0 {
                        green.upper_potential(x, &sources, options)?
                    } else {
                        let free = match ext.eval(x) {
                            Ok(v) => v.value,
                            Err(Error::NearBoundary) => return Ok(None),
                            Err(e) => return Err(e),
                        };
                        let mut corr = Complex64::new(0.0, 0.0);
                        for (y, c) in &sources {
                            corr += c * green.correction(x, *y, options)?.value;
                        }
                        free + corr
                    }
                }
            };
            Ok(Some(u + s))
        })
        .collect::<Result<Vec<_>>>()?;
    let excluded = values.iter().filter(|v| v.is_none()).count();
    Ok(FieldGrid {
        spec: *grid,
        values: values.into_iter().map(|v| v.unwrap_or(nan)).collect(),
        excluded,
    })
}

/// Total field `u` on a grid; near-boundary points are NaN.
pub fn total_field(
    densities: &LayerDensities,
    mesh: &BoundaryMesh,
    exterior: &ExteriorKernel,
    interior: &FreeSpaceKernel,
    incident: &dyn IncidentField,
    grid: &GridSpec,
) -> Result<FieldGrid> {
    field_on_grid(densities, mesh, exterior, interior, incident, grid, true)
}

/// Scattered part `u - U` on a grid.
pub fn scattered_field(
    densities: &LayerDensities,
    mesh: &BoundaryMesh,
    exterior: &ExteriorKernel,
    interior: &FreeSpaceKernel,
    incident: &dyn IncidentField,
    grid: &GridSpec,
) -> Result<FieldGrid> {
    field_on_grid(densities, mesh, exterior, interior, incident, grid, false)
}
