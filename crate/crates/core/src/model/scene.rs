use serde::{Deserialize, Serialize};

use super::{IncidentWave, InclusionD, LayerProfile, MaterialSet, UnitCell, DEFAULT_CELL_GRID};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Absolute,
    /// `layer.xi` and the inclusion geometry are given in multiples of the
    /// upper-medium wavelength.
    Wavelength,
}

/// Scene document as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub units: Units,
    pub materials: MaterialSet,
    pub layer: LayerProfile,
    pub cell: UnitCell,
    pub wave: IncidentWave,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusion: Option<InclusionD>,
}

impl Scene {
    pub fn from_json(s: &str) -> Result<Scene> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Scene> {
        Scene::from_json(&std::fs::read_to_string(path)?)
    }

    /// Copy with all lengths in absolute units.
    pub fn resolved(&self) -> Result<Scene> {
        match self.units {
            Units::Absolute => Ok(self.clone()),
            Units::Wavelength => {
                self.wave.validate()?;
                self.materials.validate()?;
                let lambda = self.wave.lambda_plus(&self.materials);
                Ok(Scene {
                    units: Units::Absolute,
                    layer: self.layer.with_xi(self.layer.xi * lambda),
                    inclusion: self.inclusion.as_ref().map(|d| d.scaled(lambda)),
                    ..self.clone()
                })
            }
        }
    }

    pub fn validate(&self) -> Result<ValidatedScene> {
        let s = self.resolved()?;
        validate_scene(&s.materials, &s.layer, &s.cell, &s.wave, s.inclusion.as_ref())
    }
}

/// A scene that passed every check, with its derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedScene {
    scene: Scene,
    k_plus: f64,
    lambda_plus: f64,
    area_fraction: f64,
    layer_mean: f64,
    size_ratio: Option<f64>,
}

impl ValidatedScene {
    pub fn scene(&self) -> &Scene {
        &self.scene
    }
    pub fn materials(&self) -> &MaterialSet {
        &self.scene.materials
    }
    pub fn layer(&self) -> &LayerProfile {
        &self.scene.layer
    }
    pub fn cell(&self) -> &UnitCell {
        &self.scene.cell
    }
    pub fn wave(&self) -> &IncidentWave {
        &self.scene.wave
    }
    pub fn inclusion(&self) -> Option<&InclusionD> {
        self.scene.inclusion.as_ref()
    }
    pub fn k_plus(&self) -> f64 {
        self.k_plus
    }
    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }
    pub fn area_fraction(&self) -> f64 {
        self.area_fraction
    }
    pub fn layer_mean(&self) -> f64 {
        self.layer_mean
    }
    /// Diameter of D over the physical microstructure period; reported only.
    pub fn inclusion_size_ratio(&self) -> Option<f64> {
        self.size_ratio
    }
}

pub fn validate_scene(
    materials: &MaterialSet,
    profile: &LayerProfile,
    cell: &UnitCell,
    wave: &IncidentWave,
    inclusion: Option<&InclusionD>,
) -> Result<ValidatedScene> {
    materials.validate()?;
    wave.validate()?;
    profile.validate()?;
    cell.validate(DEFAULT_CELL_GRID)?;
    let lambda_plus = wave.lambda_plus(materials);
    if profile.xi >= lambda_plus / 10.0 {
        return Err(Error::ScaleSeparationViolated {
            xi: profile.xi,
            limit: lambda_plus / 10.0,
        });
    }
    if let Some(d) = inclusion {
        d.validate(profile)?;
    }
    let size_ratio = inclusion.map(|d| d.diameter() / (profile.xi * cell.ell1.max(cell.ell2)));
    Ok(ValidatedScene {
        scene: Scene {
            units: Units::Absolute,
            materials: *materials,
            layer: profile.clone(),
            cell: cell.clone(),
            wave: *wave,
            inclusion: inclusion.cloned(),
        },
        k_plus: wave.k_plus(materials),
        lambda_plus,
        area_fraction: cell.area_fraction(),
        layer_mean: profile.integral(),
        size_ratio,
    })
}
