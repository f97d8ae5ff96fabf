//! Named end-to-end comparisons between the effective pipeline and the
//! finite-difference solution of the full problem.

use std::f64::consts::TAU;
use std::time::Instant;

use serde::Serialize;

use crate::field::{compare_fields, FieldComparison, FieldGrid, Window};
use crate::model::{IncidentWave, InclusionD, LayerProfile, MaterialSet, UnitCell};
use crate::pipeline::{effective_model_from_parts, scatter_with_model, EffectiveModel, PipelineOptions, ScatterSolution};
use crate::reference::{direct_solve, richardson, Absorber, DirectProblem, FdGrid, FdMedium, FdSource, Lateral, Substrate};
use crate::{Error, Result, C64};

/// Finite-difference points per period of the microstructure.
pub const POINTS_PER_PERIOD: usize = 32;
/// Required log-log slope of the error against `xi`.
pub const MIN_SLOPE: f64 = 0.8;

/// Validation scene: unit upper wavelength, sinusoidal layer over a disc
/// microstructure, oblique incidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationScene {
    pub materials: MaterialSet,
    pub layer: LayerProfile,
    pub cell: UnitCell,
    pub wave: IncidentWave,
}

impl ValidationScene {
    pub fn new(xi: f64) -> Self {
        ValidationScene {
            materials: MaterialSet {
                mu_plus: 1.0,
                eps_plus: 1.0,
                mu_cl: 2.0,
                eps_cl: 3.0,
                mu_host: 1.0,
                eps_host: 2.0,
                mu_b: 3.0,
                eps_b: 4.0,
                mu_d: 1.0,
                eps_d: 1.0,
            },
            layer: LayerProfile::cosine(0.5, 0.2, xi),
            cell: UnitCell::disc(1.0, 0.3),
            wave: IncidentWave::from_angle(TAU, 30f64.to_radians()),
        }
    }

    pub fn lambda_plus(&self) -> f64 {
        self.wave.lambda_plus(&self.materials)
    }

    /// Effective model homogenized on the raster the finite-difference grid
    /// sees, so the comparison isolates the asymptotic model error.
    pub fn effective_model(&self, opts: &PipelineOptions) -> Result<EffectiveModel> {
        let opts = PipelineOptions {
            cell_grid: [POINTS_PER_PERIOD; 2],
            raster_permittivity: true,
            ..*opts
        };
        effective_model_from_parts(&self.materials, &self.layer, &self.cell, &self.wave, &opts)
    }
}

/// Vertical layout of the Bloch strip, in upper wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StripLayout {
    /// Depth of resolved microstructure below the interface.
    pub micro_depth: f64,
    pub absorber: f64,
    /// Observation window above the interface.
    pub window: [f64; 2],
    /// Height of the injection line.
    pub line: f64,
    pub top: f64,
}

impl Default for StripLayout {
    fn default() -> Self {
        StripLayout {
            micro_depth: 1.0,
            absorber: 1.0,
            window: [1.0, 1.5],
            line: 1.75,
            top: 2.0,
        }
    }
}

/// One-period Bloch strip resolving the microstructure with
/// [`POINTS_PER_PERIOD`] nodes per period. Nodes sit at raster cell centres
/// so `x2 = 0` is a cell face.
pub fn strip_problem(scene: &ValidationScene, model: &EffectiveModel, layout: &StripLayout) -> DirectProblem {
    let xi = scene.layer.xi;
    let lambda = scene.lambda_plus();
    let h = xi / POINTS_PER_PERIOD as f64;
    let bottom = -(layout.micro_depth + layout.absorber) * lambda;
    let top = (layout.top + layout.absorber) * lambda;
    let rows_below = (-bottom / h).round() as usize;
    let rows_above = (top / h).round() as usize;
    let grid = FdGrid {
        origin: [0.5 * h, -(rows_below as f64 - 0.5) * h],
        h,
        n: [POINTS_PER_PERIOD, rows_below + rows_above],
    };
    let j_line = ((layout.line * lambda - grid.origin[1]) / h).round() as usize;
    let k_plus = scene.wave.k_plus(&scene.materials);
    DirectProblem {
        grid,
        omega: scene.wave.omega,
        medium: FdMedium::Multiscale {
            materials: scene.materials,
            layer: scene.layer.clone(),
            cell: scene.cell.clone(),
            inclusion: None,
            substrate: Some(Substrate {
                depth: layout.micro_depth * lambda,
                medium: model.homogenized.medium,
            }),
            cell_averaging: false,
        },
        lateral: Lateral::Bloch {
            k1: k_plus * scene.wave.theta[0],
        },
        absorber: Absorber {
            thickness: [0.0, 0.0, layout.absorber * lambda, layout.absorber * lambda],
            strength: 5.0,
        },
        source: FdSource::PlaneWave {
            wave: scene.wave,
            line: grid.point(0, j_line)[1],
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct XiPoint {
    pub xi: f64,
    pub h: f64,
    pub unknowns: usize,
    pub error: FieldComparison,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct XiConvergence {
    pub points: Vec<XiPoint>,
    /// Least-squares slope of `log error` against `log xi`.
    pub slope: f64,
    pub monotone: bool,
    pub min_slope: f64,
    pub pass: bool,
}

/// Error of the effective background against the resolved solution for one
/// scale.
pub fn xi_point(xi: f64, layout: &StripLayout, opts: &PipelineOptions) -> Result<XiPoint> {
    let start = Instant::now();
    let scene = ValidationScene::new(xi);
    let model = scene.effective_model(opts)?;
    let problem = strip_problem(&scene, &model, layout);
    let sol = direct_solve(&problem)?;
    let lambda = scene.lambda_plus();
    let window = Window {
        x1: [sol.field.spec.x1[0], sol.field.spec.x1[1]],
        x2: [layout.window[0] * lambda, layout.window[1] * lambda],
    };
    let effective = model.background_on(&sol.field.spec);
    let error = compare_fields(&sol.field, &effective, &window)?;
    Ok(XiPoint {
        xi,
        h: problem.grid.h,
        unknowns: sol.stats.unknowns,
        error,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn xi_convergence(xis: &[f64], opts: &PipelineOptions) -> Result<XiConvergence> {
    let layout = StripLayout::default();
    let points = xis
        .iter()
        .map(|&xi| xi_point(xi, &layout, opts))
        .collect::<Result<Vec<_>>>()?;
    let slope = loglog_slope(
        &points.iter().map(|p| p.xi).collect::<Vec<_>>(),
        &points.iter().map(|p| p.error.relative_l2).collect::<Vec<_>>(),
    );
    let mut order: Vec<&XiPoint> = points.iter().collect();
    order.sort_by(|a, b| b.xi.total_cmp(&a.xi));
    let monotone = order.windows(2).all(|w| w[1].error.relative_l2 < w[0].error.relative_l2);
    Ok(XiConvergence {
        pass: monotone && slope >= MIN_SLOPE,
        points,
        slope,
        monotone,
        min_slope: MIN_SLOPE,
    })
}

/// Least-squares slope through `(log x, log y)`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Scale of the with-inclusion scenarios, in upper wavelengths.
pub const INCLUSION_XI: f64 = 1.0 / 20.0;
/// Required agreement of the boundary integral field with the resolved
/// effective-medium solve.
pub const EFFECTIVE_INCLUSION_LIMIT: f64 = 1e-3;

/// Box layout for the inclusion scenarios, in upper wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxLayout {
    /// Half-width of the physical region.
    pub half_width: f64,
    pub bottom: f64,
    pub top: f64,
    pub absorber: f64,
    pub window: Window,
}

impl Default for BoxLayout {
    fn default() -> Self {
        BoxLayout {
            half_width: 1.5,
            bottom: -3.6,
            top: 1.6,
            absorber: 1.0,
            window: Window {
                x1: [-1.0, 1.0],
                x2: [1.0, 1.5],
            },
        }
    }
}

impl BoxLayout {
    /// Grid with spacing `h`, a node row on `x2 = 0` and a node column on
    /// `x1 = 0`.
    pub fn grid(&self, h: f64, lambda: f64) -> FdGrid {
        let half = ((self.half_width + self.absorber) * lambda / h).ceil() as usize;
        let below = ((-self.bottom + self.absorber) * lambda / h).ceil() as usize;
        let above = ((self.top + self.absorber) * lambda / h).ceil() as usize;
        FdGrid {
            origin: [-(half as f64) * h, -(below as f64) * h],
            h,
            n: [2 * half + 1, below + above + 1],
        }
    }
}

/// Validation scene with a buried disc whose contrast is set against the
/// effective medium: `mu_D = 1/A11`, `eps_D = 2 eps_minus`.
#[derive(Debug, Clone)]
pub struct InclusionSetup {
    pub scene: ValidationScene,
    pub model: EffectiveModel,
    pub inclusion: InclusionD,
}

impl InclusionSetup {
    pub fn new(opts: &PipelineOptions) -> Result<Self> {
        let mut scene = ValidationScene::new(INCLUSION_XI);
        let model = scene.effective_model(opts)?;
        let lambda = scene.lambda_plus();
        scene.materials.mu_d = 1.0 / model.homogenized.medium.a[0][0];
        scene.materials.eps_d = 2.0 * model.homogenized.medium.eps_minus;
        Ok(InclusionSetup {
            inclusion: InclusionD::disc([0.0, -3.0 * lambda], 0.3 * lambda),
            scene,
            model,
        })
    }

    pub fn scatter(&self, opts: &PipelineOptions) -> Result<ScatterSolution> {
        scatter_with_model(self.model.clone(), &self.inclusion, &self.scene.materials, opts)
    }

    fn effective_medium(&self, inclusion: Option<InclusionD>) -> FdMedium {
        FdMedium::Effective {
            materials: self.scene.materials,
            medium: self.model.homogenized.medium,
            coeffs: self.model.coeffs,
            inclusion,
        }
    }

    /// Effective medium with the inclusion, driven by the analytic
    /// background through the contrast source on the inclusion.
    pub fn effective_problem(&self, grid: FdGrid, layout: &BoxLayout) -> DirectProblem {
        let lambda = self.scene.lambda_plus();
        DirectProblem {
            grid,
            omega: self.scene.wave.omega,
            medium: self.effective_medium(Some(self.inclusion.clone())),
            lateral: Lateral::Absorbing,
            absorber: Absorber::uniform(layout.absorber * lambda),
            source: FdSource::Background {
                field: self.model.background_on(&grid.spec()).values,
                reference: Box::new(self.effective_medium(None)),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveInclusionReport {
    pub h: [f64; 2],
    pub unknowns: [usize; 2],
    /// Boundary integral field against the extrapolated finite differences.
    pub error: FieldComparison,
    /// Same comparison for the two grids separately.
    pub coarse_error: FieldComparison,
    pub fine_error: FieldComparison,
    pub limit: f64,
    pub seconds: f64,
    pub pass: bool,
}

/// Boundary integral solution against a Richardson-extrapolated
/// finite-difference solve of the same effective problem.
pub fn effective_inclusion(h: f64, opts: &PipelineOptions) -> Result<EffectiveInclusionReport> {
    let start = Instant::now();
    let setup = InclusionSetup::new(opts)?;
    let layout = BoxLayout::default();
    let lambda = setup.scene.lambda_plus();
    let window = Window {
        x1: [layout.window.x1[0] * lambda, layout.window.x1[1] * lambda],
        x2: [layout.window.x2[0] * lambda, layout.window.x2[1] * lambda],
    };
    let coarse_grid = layout.grid(h * lambda, lambda);
    let coarse = direct_solve(&setup.effective_problem(coarse_grid, &layout))?;
    let fine = direct_solve(&setup.effective_problem(coarse_grid.refined(false), &layout))?;
    let extrapolated = richardson(&coarse, &fine)?;
    let restricted = extrapolated.restrict(&window).ok_or(Error::WindowOutsideGrid)?;
    let window = Window {
        x1: restricted.spec.x1,
        x2: restricted.spec.x2,
    };
    let bem = setup.scatter(opts)?.total_field(&restricted.spec)?;
    let error = compare_fields(&restricted, &bem, &window)?;
    let coarse_error = compare_fields(&coarse.field.restrict(&window).ok_or(Error::WindowOutsideGrid)?, &bem, &window)?;
    let fine_error = compare_fields(&fine.field.restrict(&window).ok_or(Error::WindowOutsideGrid)?, &bem, &window)?;
    Ok(EffectiveInclusionReport {
        h: [coarse.grid.h, fine.grid.h],
        unknowns: [coarse.stats.unknowns, fine.stats.unknowns],
        pass: error.relative_l2 < EFFECTIVE_INCLUSION_LIMIT,
        error,
        coarse_error,
        fine_error,
        limit: EFFECTIVE_INCLUSION_LIMIT,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Box nodes per microstructure period in the multiscale inclusion solve;
/// the resolution floor of the direct solver.
pub const BOX_POINTS_PER_PERIOD: usize = 8;
/// Agreement required of the multiscale inclusion solve, as a multiple of
/// the no-inclusion model error at the same scale.
pub const MULTISCALE_LEVEL_FACTOR: f64 = 2.0;

/// Layout of the multiscale inclusion solve, in upper wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiscaleLayout {
    /// Depth below which the strip and the box switch to the homogenized
    /// medium.
    pub substrate_depth: f64,
    pub half_width: f64,
    pub bottom: f64,
    pub top: f64,
    pub absorber: f64,
    pub window: Window,
    /// Area-fraction sampling of the microstructure in the box.
    pub cell_averaging: bool,
}

impl Default for MultiscaleLayout {
    fn default() -> Self {
        MultiscaleLayout {
            substrate_depth: 3.4,
            half_width: 0.5,
            bottom: -3.35,
            top: 1.55,
            absorber: 1.0,
            window: Window {
                x1: [-0.4, 0.4],
                x2: [1.0, 1.5],
            },
            cell_averaging: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiscaleInclusionReport {
    pub xi: f64,
    pub h: [f64; 2],
    pub unknowns: [usize; 2],
    /// Multiscale solve with the inclusion against the boundary integral
    /// field.
    pub error: FieldComparison,
    /// Multiscale solve without the inclusion against the effective
    /// background on the same window.
    pub background_error: FieldComparison,
    /// `|u - U| / |U|` of the boundary integral field on the window.
    pub scattered_fraction: f64,
    /// Same ratio for the direct solve against its own background.
    pub direct_scattered_fraction: f64,
    /// No-inclusion model error at this scale.
    pub level: f64,
    pub limit: f64,
    pub seconds: f64,
    pub pass: bool,
}

/// Full microstructure plus inclusion against the boundary integral field.
/// The incident response of the microstructure comes from a Bloch strip at
/// [`POINTS_PER_PERIOD`]; the inclusion's response is a scattered-field solve
/// in a box at [`BOX_POINTS_PER_PERIOD`] whose nodes are a subset of the
/// strip's.
pub fn multiscale_inclusion(opts: &PipelineOptions) -> Result<MultiscaleInclusionReport> {
    let start = Instant::now();
    let setup = InclusionSetup::new(opts)?;
    let scene = &setup.scene;
    let lambda = scene.lambda_plus();
    let xi = scene.layer.xi;
    let level = xi_point(xi, &StripLayout::default(), opts)?.error.relative_l2;
    let layout = MultiscaleLayout::default();
    let strip_layout = StripLayout {
        micro_depth: layout.substrate_depth,
        ..StripLayout::default()
    };
    let strip = direct_solve(&strip_problem(scene, &setup.model, &strip_layout))?;
    let medium = |inclusion: Option<InclusionD>| FdMedium::Multiscale {
        materials: scene.materials,
        layer: scene.layer.clone(),
        cell: scene.cell.clone(),
        inclusion,
        substrate: Some(Substrate {
            depth: layout.substrate_depth * lambda,
            medium: setup.model.homogenized.medium,
        }),
        cell_averaging: layout.cell_averaging,
    };

    let stride = POINTS_PER_PERIOD / BOX_POINTS_PER_PERIOD;
    let sg = strip.grid;
    let h = sg.h * stride as f64;
    let half = ((layout.half_width + layout.absorber) * lambda / h).ceil() as i64;
    let row = |x2: f64| ((x2 - sg.origin[1]) / sg.h).round() as i64;
    let j_bottom = row((layout.bottom - layout.absorber) * lambda);
    let j_top = row((layout.top + layout.absorber) * lambda);
    if j_bottom < 0 || j_top >= sg.n[1] as i64 {
        return Err(Error::value("inclusion box exceeds the background strip"));
    }
    let rows = ((j_top - j_bottom) / stride as i64 + 1) as usize;
    let grid = FdGrid {
        origin: [sg.origin[0] - (half * stride as i64) as f64 * sg.h, sg.origin[1] + j_bottom as f64 * sg.h],
        h,
        n: [2 * half as usize + 1, rows],
    };
    let k1 = scene.wave.k_plus(&scene.materials) * scene.wave.theta[0];
    let period = sg.n[0] as i64;
    let mut background = Vec::with_capacity(grid.len());
    for j in 0..grid.n[1] {
        let js = j_bottom as usize + j * stride;
        for i in 0..grid.n[0] {
            let c = (i as i64 - half) * stride as i64;
            let shift = c.div_euclid(period);
            let phase = C64::from_polar(1.0, k1 * shift as f64 * xi);
            background.push(phase * strip.field.value(c.rem_euclid(period) as usize, js));
        }
    }
    let problem = DirectProblem {
        grid,
        omega: scene.wave.omega,
        medium: medium(Some(setup.inclusion.clone())),
        lateral: Lateral::Absorbing,
        absorber: Absorber::uniform(layout.absorber * lambda),
        source: FdSource::Background {
            field: background.clone(),
            reference: Box::new(medium(None)),
        },
    };
    let sol = direct_solve(&problem)?;

    let window = Window {
        x1: [layout.window.x1[0] * lambda, layout.window.x1[1] * lambda],
        x2: [layout.window.x2[0] * lambda, layout.window.x2[1] * lambda],
    };
    let restricted = sol.field.restrict(&window).ok_or(Error::WindowOutsideGrid)?;
    let window = Window {
        x1: restricted.spec.x1,
        x2: restricted.spec.x2,
    };
    let bem = setup.scatter(opts)?.total_field(&restricted.spec)?;
    let effective = setup.model.background_on(&restricted.spec);
    let error = compare_fields(&restricted, &bem, &window)?;
    let incident = FieldGrid {
        spec: sol.field.spec,
        values: background,
        excluded: 0,
    };
    let incident = incident.restrict(&window).ok_or(Error::WindowOutsideGrid)?;
    let background_error = compare_fields(&incident, &effective, &window)?;
    let direct_scattered_fraction = compare_fields(&restricted, &incident, &window)?.relative_l2;
    let scattered_fraction = compare_fields(&bem, &effective, &window)?.relative_l2;
    let limit = MULTISCALE_LEVEL_FACTOR * level;
    Ok(MultiscaleInclusionReport {
        xi,
        h: [sg.h, h],
        unknowns: [strip.stats.unknowns, sol.stats.unknowns],
        pass: error.relative_l2 <= limit,
        error,
        background_error,
        scattered_fraction,
        direct_scattered_fraction,
        level,
        limit,
        seconds: start.elapsed().as_secs_f64(),
    })
}
