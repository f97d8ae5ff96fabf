//! Scene description: materials, layer profile, unit cell, incident wave and
//! the buried inclusion, together with their validation.

mod cell;
mod inclusion;
mod materials;
mod profile;
mod scene;
mod wave;

pub use cell::{point_in_inclusion, CellInclusion, UnitCell, DEFAULT_CELL_GRID};
pub use inclusion::{InclusionD, InclusionShape};
pub use materials::MaterialSet;
pub use profile::LayerProfile;
pub use scene::{validate_scene, Scene, Units, ValidatedScene};
pub use wave::IncidentWave;

pub(crate) fn check_positive(name: &str, v: f64) -> crate::Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(crate::Error::value(format!(
            "{name} must be finite and positive, got {v}"
        )));
    }
    Ok(())
}
