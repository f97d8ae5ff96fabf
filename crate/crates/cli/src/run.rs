use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use camoscat::boundary_layer::transmission_coefficients;
use camoscat::field::{FieldGrid, GridSpec};
use camoscat::homogenization::homogenize;
use camoscat::layered::{LayeredGreen, SommerfeldOptions};
use camoscat::model::{Scene, ValidatedScene};
use camoscat::pipeline::{effective_model, scatter_with_model, EffectiveModel, PipelineOptions};
use camoscat::scenarios::{
    effective_inclusion, multiscale_inclusion, xi_convergence, EFFECTIVE_INCLUSION_LIMIT, MIN_SLOPE,
    MULTISCALE_LEVEL_FACTOR,
};
use camoscat::{Error, C64};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{Command, Common, FieldArgs, GridArg, Scenario};

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_IO: u8 = 4;

/// Scale ladder of the convergence scenario, in upper wavelengths.
pub const XI_LADDER: [f64; 3] = [1.0 / 10.0, 1.0 / 20.0, 1.0 / 40.0];
/// Coarse spacing of the effective-inclusion scenario, in upper wavelengths.
pub const EFFECTIVE_INCLUSION_H: f64 = 0.019;
/// Relative deviation below which a zero-contrast inclusion counts as
/// invisible.
pub const INVISIBILITY_LIMIT: f64 = 1e-8;
const DEFAULT_FIELD_POINTS: usize = 41;
/// Each scattered-field point costs one layered kernel sweep over the
/// boundary, so the default scatter grid is coarser.
const DEFAULT_SCATTER_POINTS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Validation,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError {
            kind: Kind::Io,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn code(&self) -> u8 {
        match self.kind {
            Kind::Validation => EXIT_VALIDATION,
            Kind::Numerical => EXIT_NUMERICAL,
            Kind::Io => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Io(_) => Kind::Io,
            e if e.is_numerical() => Kind::Numerical,
            _ => Kind::Validation,
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub struct Outcome {
    pub summary: String,
    pub pass: bool,
}

/// Sizes the global pool from `CAMOSCAT_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("CAMOSCAT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::validation(format!("CAMOSCAT_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::validation(e.to_string()))
}

pub fn run(command: &Command) -> Result<Outcome> {
    match command {
        Command::Homogenize(c) => run_homogenize(c),
        Command::LayerCoeffs(c) => run_layer_coeffs(c),
        Command::Background(f) => run_background(f),
        Command::Green { field, source } => run_green(field, *source),
        Command::Scatter(f) => run_scatter(f),
        Command::Validate { common, scenario } => run_validate(common, *scenario),
    }
}

fn options(c: &Common, n_grid_is_strip: bool) -> Result<PipelineOptions> {
    let mut o = PipelineOptions::default();
    if let Some(n) = c.n_grid {
        if n_grid_is_strip {
            o.strip_grid = n;
        } else {
            o.cell_grid = n;
        }
    }
    if let Some(n) = c.nodes {
        if !(16..=1024).contains(&n) {
            return Err(CliError::validation("--nodes must lie in 16..=1024"));
        }
        o.nodes = n;
    }
    if let Some(t) = c.tol {
        if !(1e-14..=1e-2).contains(&t) {
            return Err(CliError::validation("--tol must lie in [1e-14, 1e-2]"));
        }
        o.tol = t;
    }
    if let Some(l) = c.strip_l {
        if !(l > 0.0 && l.is_finite()) {
            return Err(CliError::validation("--strip-L must be positive"));
        }
        o.strip_l = Some(l);
    }
    Ok(o)
}

fn load_scene(c: &Common) -> Result<(Scene, ValidatedScene)> {
    let path = c
        .scene
        .as_ref()
        .ok_or_else(|| CliError::validation("--scene is required"))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let scene = Scene::from_json(&text)?;
    let validated = scene.validate()?;
    Ok((scene.resolved()?, validated))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).expect("json values serialize");
    text.push('\n');
    write_text(dir, name, &text)
}

fn write_field(dir: &Path, name: &str, field: &FieldGrid) -> Result<()> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    field.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))
}

fn c64(z: C64) -> Value {
    json!([z.re, z.im])
}

fn report(
    dir: &Path,
    subcommand: &str,
    config: Value,
    results: Value,
    tolerances: Value,
    timings: Value,
) -> Result<()> {
    write_json(
        dir,
        "report.json",
        &json!({
            "camoscat": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "threads": rayon::current_num_threads(),
            "config": config,
            "results": results,
            "tolerances": tolerances,
            "timings": timings,
        }),
    )
}

fn config(scene: Option<&Scene>, opts: &PipelineOptions, extra: Value) -> Value {
    let mut v = json!({
        "scene": scene.map(|s| serde_json::to_value(s).expect("scene serializes")),
        "options": serde_json::to_value(opts).expect("options serialize"),
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    v
}

fn grid_spec(arg: Option<GridArg>, default: GridArg) -> Result<GridSpec> {
    let g = arg.unwrap_or(default);
    Ok(GridSpec::new(g.x1, g.x2, g.n)?)
}

fn run_homogenize(c: &Common) -> Result<Outcome> {
    let (scene, v) = load_scene(c)?;
    let opts = options(c, false)?;
    prepare_out(&c.out)?;
    let start = Instant::now();
    let h = homogenize(v.cell(), v.materials(), opts.cell_grid)?;
    let seconds = start.elapsed().as_secs_f64();
    let result = serde_json::to_value(&h).expect("homogenized serializes");
    write_json(&c.out, "homogenized.json", &result)?;
    report(
        &c.out,
        "homogenize",
        config(Some(&scene), &opts, json!({})),
        result,
        json!({ "cg_tolerance": camoscat::homogenization::CG_TOLERANCE, "residual": h.residual }),
        json!({ "homogenize_seconds": seconds }),
    )?;
    Ok(Outcome {
        summary: format!(
            "homogenize: A = {:?}, eps_minus = {}",
            h.medium.a, h.medium.eps_minus
        ),
        pass: true,
    })
}

fn run_layer_coeffs(c: &Common) -> Result<Outcome> {
    let (scene, v) = load_scene(c)?;
    let opts = options(c, true)?;
    prepare_out(&c.out)?;
    let start = Instant::now();
    let h = homogenize(v.cell(), v.materials(), opts.cell_grid)?;
    let t_hom = start.elapsed().as_secs_f64();
    let (strip, coeffs) =
        transmission_coefficients(v.layer(), v.materials(), &h.medium, v.wave().omega, opts.strip_l, opts.strip_grid)?;
    let t_strip = start.elapsed().as_secs_f64() - t_hom;
    write_text(&c.out, "coefficients.json", &(coeffs.to_json() + "\n"))?;
    report(
        &c.out,
        "layer-coeffs",
        config(Some(&scene), &opts, json!({})),
        json!({
            "coefficients": serde_json::to_value(coeffs).expect("coefficients serialize"),
            "medium": serde_json::to_value(h.medium).expect("medium serializes"),
            "psi0": strip.psi0,
            "truncation_L": strip.truncation_l,
        }),
        json!({ "strip_decay_defect": strip.decay_defect, "strip_residual": strip.residual }),
        json!({ "homogenize_seconds": t_hom, "strip_seconds": t_strip }),
    )?;
    Ok(Outcome {
        summary: format!(
            "layer-coeffs: s = {}, psi = {:?}, phi1 = {:?}, phi2 = {:?}, phi3 = {}",
            coeffs.s, coeffs.psi, coeffs.phi1, coeffs.phi2, coeffs.phi3
        ),
        pass: true,
    })
}

fn model_results(model: &EffectiveModel) -> Value {
    let b = &model.background;
    let [inc, refl, trans] = b.vertical_fluxes();
    json!({
        "medium": serde_json::to_value(model.homogenized.medium).expect("medium serializes"),
        "coefficients": serde_json::to_value(model.coeffs).expect("coefficients serialize"),
        "R": c64(b.r),
        "T": c64(b.t),
        "beta_plus": c64(b.beta_plus),
        "beta_minus": c64(b.beta_minus),
        "interface_residuals": b.residuals,
        "fluxes": { "incident": inc, "reflected": refl, "transmitted": trans },
        "flux_defect": if inc != 0.0 { (inc - refl - trans) / inc } else { 0.0 },
    })
}

fn run_background(f: &FieldArgs) -> Result<Outcome> {
    let c = &f.common;
    let (scene, v) = load_scene(c)?;
    let opts = options(c, false)?;
    let lambda = v.lambda_plus();
    let spec = grid_spec(
        f.grid,
        GridArg {
            x1: [-lambda, lambda],
            x2: [-lambda, lambda],
            n: [DEFAULT_FIELD_POINTS; 2],
        },
    )?;
    prepare_out(&c.out)?;
    let start = Instant::now();
    let model = effective_model(&v, &opts)?;
    let t_model = start.elapsed().as_secs_f64();
    let field = model.background_on(&spec);
    write_field(&c.out, "background.csv", &field)?;
    report(
        &c.out,
        "background",
        config(Some(&scene), &opts, json!({ "grid": spec_json(&spec) })),
        model_results(&model),
        json!({}),
        json!({ "model_seconds": t_model, "total_seconds": start.elapsed().as_secs_f64() }),
    )?;
    Ok(Outcome {
        summary: format!(
            "background: R = {}, T = {}, wrote {} points",
            model.background.r,
            model.background.t,
            spec.len()
        ),
        pass: true,
    })
}

fn spec_json(s: &GridSpec) -> Value {
    json!({ "x1": s.x1, "x2": s.x2, "n": s.n })
}

fn run_green(f: &FieldArgs, source: [f64; 2]) -> Result<Outcome> {
    let c = &f.common;
    let (scene, v) = load_scene(c)?;
    let opts = options(c, false)?;
    let lambda = v.lambda_plus();
    let spec = grid_spec(
        f.grid,
        GridArg {
            x1: [source[0] - lambda, source[0] + lambda],
            x2: [source[1] - lambda, source[1] + lambda],
            n: [DEFAULT_FIELD_POINTS; 2],
        },
    )?;
    prepare_out(&c.out)?;
    let start = Instant::now();
    let model = effective_model(&v, &opts)?;
    let t_model = start.elapsed().as_secs_f64();
    let green = LayeredGreen::new(&model.problem)?;
    let sopts = SommerfeldOptions {
        tol: opts.tol,
        ..Default::default()
    };
    let values = spec
        .points()
        .par_iter()
        .map(|x| {
            if *x == source {
                Ok((C64::new(f64::NAN, f64::NAN), f64::NAN))
            } else {
                green.eval(*x, source, &sopts).map(|g| (g.value, g.error))
            }
        })
        .collect::<camoscat::Result<Vec<_>>>()?;
    let t_green = start.elapsed().as_secs_f64() - t_model;
    let path = c.out.join("green.csv");
    let mut text = String::from("x1,x2,re,im,abs,err\n");
    for (p, (g, e)) in spec.points().iter().zip(&values) {
        text.push_str(&format!(
            "{:.12e},{:.12e},{:.15e},{:.15e},{:.15e},{:.3e}\n",
            p[0],
            p[1],
            g.re,
            g.im,
            g.norm(),
            e
        ));
    }
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    let max_err = values.iter().map(|v| v.1).filter(|e| e.is_finite()).fold(0.0, f64::max);
    report(
        &c.out,
        "green",
        config(Some(&scene), &opts, json!({ "grid": spec_json(&spec), "source": source })),
        json!({
            "model": model_results(&model),
            "max_error_estimate": max_err,
            "contour": { "half_width": green.t_contour, "depth": green.h_contour, "real_poles": green.real_poles },
        }),
        json!({ "sommerfeld_tol": opts.tol, "achieved": max_err }),
        json!({ "model_seconds": t_model, "green_seconds": t_green }),
    )?;
    Ok(Outcome {
        summary: format!("green: wrote {} points, max error estimate {max_err:.3e}", spec.len()),
        pass: true,
    })
}

/// The inclusion matches the effective medium exactly.
fn zero_contrast(model: &EffectiveModel, v: &ValidatedScene) -> bool {
    let m = v.materials();
    let e = &model.homogenized.medium;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    e.is_isotropic() && close(e.a[0][0], 1.0 / m.mu_d) && close(e.eps_minus, m.eps_d)
}

fn run_scatter(f: &FieldArgs) -> Result<Outcome> {
    let c = &f.common;
    let (scene, v) = load_scene(c)?;
    let opts = options(c, false)?;
    let d = v
        .inclusion()
        .ok_or_else(|| CliError::validation("scatter needs an inclusion in the scene"))?;
    let lambda = v.lambda_plus();
    let centre = d.center();
    let spec = grid_spec(
        f.grid,
        GridArg {
            x1: [centre[0] - lambda, centre[0] + lambda],
            x2: [centre[1] - lambda, lambda],
            n: [DEFAULT_SCATTER_POINTS; 2],
        },
    )?;
    prepare_out(&c.out)?;
    let start = Instant::now();
    let model = effective_model(&v, &opts)?;
    let t_model = start.elapsed().as_secs_f64();
    let invisible = zero_contrast(&model, &v);
    let model_json = model_results(&model);
    let sol = scatter_with_model(model, d, v.materials(), &opts)?;
    let t_bem = start.elapsed().as_secs_f64() - t_model;
    let field = sol.total_field(&spec)?;
    let t_field = start.elapsed().as_secs_f64() - t_model - t_bem;
    let background = sol.model.background_on(&spec);
    let (mut dev, mut umax) = (0.0f64, 0.0f64);
    for (u, b) in field.values.iter().zip(&background.values) {
        if u.re.is_finite() {
            dev = dev.max((u - b).norm());
            umax = umax.max(b.norm());
        }
    }
    let deviation = if umax > 0.0 { dev / umax } else { dev };
    write_field(&c.out, "field.csv", &field)?;
    let pass = !invisible || deviation < INVISIBILITY_LIMIT;
    report(
        &c.out,
        "scatter",
        config(Some(&scene), &opts, json!({ "grid": spec_json(&spec) })),
        json!({
            "model": model_json,
            "N": sol.mesh.len(),
            "residual": sol.densities.residual,
            "condition": sol.densities.condition,
            "excluded_points": field.excluded,
            "max_deviation_from_background": deviation,
            "zero_contrast": invisible,
            "pass": pass,
        }),
        json!({
            "sommerfeld_tol": opts.tol,
            "bem_residual_limit": camoscat::bem::RESIDUAL_LIMIT,
            "invisibility_limit": INVISIBILITY_LIMIT,
        }),
        json!({ "model_seconds": t_model, "bem_seconds": t_bem, "field_seconds": t_field }),
    )?;
    Ok(Outcome {
        summary: format!(
            "scatter: N = {}, residual {:.2e}, max |u - U| / max |U| = {deviation:.3e}{}",
            sol.mesh.len(),
            sol.densities.residual,
            if invisible {
                if pass {
                    " (zero contrast: pass)"
                } else {
                    " (zero contrast: FAIL)"
                }
            } else {
                ""
            }
        ),
        pass,
    })
}

fn run_validate(c: &Common, scenario: Scenario) -> Result<Outcome> {
    let opts = options(c, false)?;
    prepare_out(&c.out)?;
    let start = Instant::now();
    let (errors, thresholds, pass, details) = match scenario {
        Scenario::XiConvergence => {
            let r = xi_convergence(&XI_LADDER, &opts)?;
            (
                json!({
                    "relative_l2": r.points.iter().map(|p| p.error.relative_l2).collect::<Vec<_>>(),
                    "slope": r.slope,
                    "monotone": r.monotone,
                }),
                json!({ "min_slope": MIN_SLOPE }),
                r.pass,
                serde_json::to_value(&r).expect("report serializes"),
            )
        }
        Scenario::EffectiveInclusion => {
            let r = effective_inclusion(EFFECTIVE_INCLUSION_H, &opts)?;
            (
                json!({ "relative_l2": r.error.relative_l2 }),
                json!({ "relative_l2": EFFECTIVE_INCLUSION_LIMIT }),
                r.pass,
                serde_json::to_value(&r).expect("report serializes"),
            )
        }
        Scenario::MultiscaleInclusion => {
            let r = multiscale_inclusion(&opts)?;
            (
                json!({ "relative_l2": r.error.relative_l2, "level": r.level }),
                json!({ "relative_l2": r.limit, "level_factor": MULTISCALE_LEVEL_FACTOR }),
                r.pass,
                serde_json::to_value(&r).expect("report serializes"),
            )
        }
    };
    let verdict = json!({
        "scenario": scenario.name(),
        "errors": errors,
        "thresholds": thresholds,
        "pass": pass,
    });
    write_json(&c.out, "verdict.json", &verdict)?;
    report(
        &c.out,
        "validate",
        config(None, &opts, json!({ "scenario": scenario.name() })),
        json!({ "verdict": verdict, "details": details }),
        thresholds,
        json!({ "total_seconds": start.elapsed().as_secs_f64() }),
    )?;
    Ok(Outcome {
        summary: format!(
            "validate {}: {} {}",
            scenario.name(),
            if pass { "pass" } else { "FAIL" },
            errors
        ),
        pass,
    })
}
