//! Nyström boundary integral solver for the buried inclusion.
//!
//! Outside the inclusion the field is `U + S phi` with the layered kernel,
//! inside it is `S_D psi_D` with the whole-space kernel of the inclusion.
//! Traces use a product quadrature for the logarithmic part of the Hankel
//! kernels and the trapezoid rule for everything smooth, including the
//! layered correction `G - G_free`.

mod mesh;
mod nystrom;
mod potential;
mod system;

pub use mesh::{trig_interpolate, BoundaryMesh};
pub use nystrom::{boundary_operators, log_weights, BoundaryKernel, BoundaryOperators, LaplaceKernel};
pub use potential::{
    field_on_grid, scattered_field, single_layer, single_layer_trace, total_field, SingleLayerPotential,
    EXCLUSION_SPACINGS, UPSAMPLE_FACTOR, UPSAMPLE_SPACINGS,
};
pub use system::{
    assemble_system, exterior_operators, solve_densities, BemSystem, ExteriorKernel, IncidentField, LayerDensities,
    PlaneWave, MAX_CONDITION, RESIDUAL_LIMIT,
};
