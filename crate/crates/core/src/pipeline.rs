//! The effective-model pipeline: homogenize the microstructure, reduce the
//! thin layer to transmission conditions, build the layered background and
//! Green's function and solve the boundary integral problem for the buried
//! inclusion.

use serde::Serialize;

use crate::bem::{assemble_system, solve_densities, total_field, BoundaryMesh, ExteriorKernel, LayerDensities};
use crate::boundary_layer::{transmission_coefficients, TransmissionCoefficients, DEFAULT_STRIP_GRID};
use crate::field::{FieldGrid, GridSpec};
use crate::homogenization::{homogenize, Homogenized};
use crate::kernels::FreeSpaceKernel;
use crate::layered::{background_field, BackgroundField, EffectiveProblem, LayeredGreen, SommerfeldOptions};
use crate::model::{IncidentWave, LayerProfile, MaterialSet, UnitCell, ValidatedScene, DEFAULT_CELL_GRID};
use crate::{Error, Result};

/// Default Nyström node count on the inclusion boundary.
pub const DEFAULT_NODES: usize = 128;
/// Default Sommerfeld quadrature tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineOptions {
    pub cell_grid: [usize; 2],
    pub strip_grid: [usize; 2],
    /// Strip half-height; `None` picks `max f + 5`.
    pub strip_l: Option<f64>,
    pub nodes: usize,
    pub tol: f64,
    /// Use the permittivity average of the cell raster instead of the exact
    /// volume fraction, matching a finite-difference model sampled on the
    /// same raster.
    pub raster_permittivity: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            cell_grid: DEFAULT_CELL_GRID,
            strip_grid: DEFAULT_STRIP_GRID,
            strip_l: None,
            nodes: DEFAULT_NODES,
            tol: DEFAULT_TOL,
            raster_permittivity: false,
        }
    }
}

/// Everything the effective model needs before the inclusion enters.
#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub homogenized: Homogenized,
    pub coeffs: TransmissionCoefficients,
    pub problem: EffectiveProblem,
    pub background: BackgroundField,
}

/// Permittivity average over the cell-centre raster.
pub fn raster_permittivity(cell: &UnitCell, materials: &MaterialSet, n: [usize; 2]) -> f64 {
    let raster = cell.rasterize(n);
    let inside = raster.iter().filter(|b| **b).count() as f64 / raster.len() as f64;
    materials.eps_host + inside * (materials.eps_b - materials.eps_host)
}

pub fn effective_model(scene: &ValidatedScene, opts: &PipelineOptions) -> Result<EffectiveModel> {
    effective_model_from_parts(scene.materials(), scene.layer(), scene.cell(), scene.wave(), opts)
}

/// Same as [`effective_model`] without the scene-level checks, for studies
/// that deliberately sit on the edge of scale separation.
pub fn effective_model_from_parts(
    m: &MaterialSet,
    layer: &LayerProfile,
    cell: &UnitCell,
    wave: &IncidentWave,
    opts: &PipelineOptions,
) -> Result<EffectiveModel> {
    let omega = wave.omega;
    let mut homogenized = homogenize(cell, m, opts.cell_grid)?;
    if opts.raster_permittivity {
        homogenized.medium.eps_minus = raster_permittivity(cell, m, opts.cell_grid);
    }
    let (_, coeffs) = transmission_coefficients(layer, m, &homogenized.medium, omega, opts.strip_l, opts.strip_grid)?;
    let problem = EffectiveProblem::new(m, &homogenized.medium, &coeffs, omega)?;
    let background = background_field(wave, &problem)?;
    Ok(EffectiveModel {
        homogenized,
        coeffs,
        problem,
        background,
    })
}

impl EffectiveModel {
    /// The background field `U` on a grid.
    pub fn background_on(&self, grid: &GridSpec) -> FieldGrid {
        FieldGrid {
            spec: *grid,
            values: grid.points().into_iter().map(|x| self.background.value(x)).collect(),
            excluded: 0,
        }
    }
}

/// Solved boundary integral problem for the buried inclusion.
#[derive(Debug, Clone)]
pub struct ScatterSolution {
    pub model: EffectiveModel,
    pub mesh: BoundaryMesh,
    pub exterior: ExteriorKernel,
    pub interior: FreeSpaceKernel,
    pub densities: LayerDensities,
}

pub fn scatter(scene: &ValidatedScene, opts: &PipelineOptions) -> Result<ScatterSolution> {
    let d = scene
        .inclusion()
        .ok_or_else(|| Error::value("scatter needs an inclusion in the scene"))?;
    let model = effective_model(scene, opts)?;
    scatter_with_model(model, d, scene.materials(), opts)
}

/// Boundary integral solve on a precomputed effective model.
pub fn scatter_with_model(
    model: EffectiveModel,
    d: &crate::model::InclusionD,
    materials: &MaterialSet,
    opts: &PipelineOptions,
) -> Result<ScatterSolution> {
    let mesh = BoundaryMesh::new(d, opts.nodes)?;
    let exterior = ExteriorKernel::Layered {
        green: LayeredGreen::new(&model.problem)?,
        options: SommerfeldOptions {
            tol: opts.tol,
            ..Default::default()
        },
    };
    let interior = FreeSpaceKernel::anomaly(materials, model.problem.omega);
    let system = assemble_system(&mesh, &exterior, &interior, &model.background)?;
    let densities = solve_densities(&system)?;
    Ok(ScatterSolution {
        model,
        mesh,
        exterior,
        interior,
        densities,
    })
}

impl ScatterSolution {
    /// `U + S phi` outside the inclusion, `S_D psi_D` inside; points too
    /// close to the boundary are NaN.
    pub fn total_field(&self, grid: &GridSpec) -> Result<FieldGrid> {
        total_field(
            &self.densities,
            &self.mesh,
            &self.exterior,
            &self.interior,
            &self.model.background,
            grid,
        )
    }
}
