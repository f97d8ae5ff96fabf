use std::f64::consts::TAU;

use camoscat::boundary_layer::TransmissionCoefficients;
use camoscat::field::{compare_fields, FieldGrid, Window};
use camoscat::homogenization::EffectiveMedium;
use camoscat::kernels::anisotropic_freespace_green;
use camoscat::layered::{background_field, EffectiveProblem};
use camoscat::model::{IncidentWave, InclusionD, LayerProfile, MaterialSet, UnitCell};
use camoscat::reference::{
    check_memory, direct_solve, plane_wave_on_grid, richardson, Absorber, DirectProblem, FdGrid, FdMedium, FdSource, Lateral,
};
use camoscat::special::hankel0;
use camoscat::Error;
use num_complex::Complex64;

const OMEGA: f64 = TAU;

fn centered_grid(half: f64, h: f64) -> FdGrid {
    let n = (2.0 * half / h).round() as usize + 1;
    FdGrid {
        origin: [-half, -half],
        h,
        n: [n, n],
    }
}

fn point_problem(medium: FdMedium, h: f64) -> DirectProblem {
    DirectProblem {
        grid: centered_grid(2.25, h),
        omega: OMEGA,
        medium,
        lateral: Lateral::Absorbing,
        absorber: Absorber::uniform(1.0),
        source: FdSource::Point { position: [0.0, 0.0] },
    }
}

fn ring_points() -> Vec<[f64; 2]> {
    (0..24)
        .map(|m| {
            let t = TAU * m as f64 / 24.0 + 0.1;
            let r = 0.5 + 0.5 * (m % 5) as f64 / 4.0;
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

fn relative_error(field: &FieldGrid, exact: impl Fn([f64; 2]) -> Complex64, pts: &[[f64; 2]]) -> f64 {
    pts.iter()
        .map(|&x| {
            let e = exact(x);
            (field.sample(x).unwrap() - e).norm() / e.norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn point_source_matches_hankel() {
    let h = 1.0 / 60.0;
    let sol = direct_solve(&point_problem(FdMedium::Uniform { mu: 1.0, eps: 1.0 }, h)).unwrap();
    // Samples on nodes avoid interpolation error.
    let pts: Vec<[f64; 2]> = ring_points()
        .into_iter()
        .map(|x| [(x[0] / h).round() * h, (x[1] / h).round() * h])
        .collect();
    let exact = |x: [f64; 2]| Complex64::new(0.0, 0.25) * hankel0(OMEGA * x[0].hypot(x[1]));
    let err = relative_error(&sol.field, exact, &pts);
    assert!(err < 1e-2, "relative error {err:e}");
    assert!(sol.stats.residual < 1e-8);
}

#[test]
fn anisotropic_point_source_matches_free_kernel() {
    let medium = EffectiveMedium {
        a: [[0.8, 0.15], [0.15, 0.6]],
        eps_minus: 1.2,
    };
    let h = 1.0 / 60.0;
    let sol = direct_solve(&point_problem(
        FdMedium::Anisotropic {
            a: medium.a,
            eps: medium.eps_minus,
        },
        h,
    ))
    .unwrap();
    let pts: Vec<[f64; 2]> = ring_points()
        .into_iter()
        .map(|x| [(x[0] / h).round() * h, (x[1] / h).round() * h])
        .collect();
    let exact = |x: [f64; 2]| anisotropic_freespace_green(x, [0.0, 0.0], &medium, OMEGA);
    let err = relative_error(&sol.field, exact, &pts);
    assert!(err < 2e-2, "relative error {err:e}");
}

fn scene_materials() -> MaterialSet {
    MaterialSet {
        mu_plus: 1.0,
        eps_plus: 1.0,
        mu_cl: 2.0,
        eps_cl: 3.0,
        mu_host: 1.0,
        eps_host: 2.0,
        mu_b: 3.0,
        eps_b: 4.0,
        mu_d: 1.5,
        eps_d: 5.0,
    }
}

#[test]
fn multiscale_operator_is_reciprocal() {
    let xi = 0.25;
    let medium = FdMedium::Multiscale {
        materials: scene_materials(),
        layer: LayerProfile::cosine(0.5, 0.2, xi),
        cell: UnitCell::disc(1.0, 0.3),
        inclusion: Some(InclusionD::disc([0.1, -0.8], 0.3)),
        substrate: None,
        cell_averaging: false,
    };
    let grid = FdGrid {
        origin: [-2.0, -2.5],
        h: 1.0 / 70.0,
        n: [281, 316],
    };
    // Node positions outside the absorbers, so sampling involves no
    // interpolation and the point sources carry no stretching factor.
    let (a, b) = ([-28.0 / 70.0, 42.0 / 70.0], [35.0 / 70.0, -84.0 / 70.0]);
    let solve = |p: [f64; 2]| {
        direct_solve(&DirectProblem {
            grid,
            omega: OMEGA,
            medium: medium.clone(),
            lateral: Lateral::Absorbing,
            absorber: Absorber::uniform(1.0),
            source: FdSource::Point { position: p },
        })
        .unwrap()
    };
    let (ua, ub) = (solve(a), solve(b));
    let (x, y) = (ua.field.sample(b).unwrap(), ub.field.sample(a).unwrap());
    assert!((x - y).norm() < 1e-10 * x.norm(), "{x} vs {y}");
}

fn strip(h: f64, width: f64, bottom: f64, top: f64) -> FdGrid {
    FdGrid {
        origin: [0.0, bottom],
        h,
        n: [(width / h).round() as usize, ((top - bottom) / h).round() as usize + 1],
    }
}

#[test]
fn empty_domain_plane_wave_leaves_no_scattered_field() {
    let wave = IncidentWave::from_angle(OMEGA, 30f64.to_radians());
    let k1 = OMEGA * wave.theta[0];
    let h = 1.0 / 40.0;
    let grid = strip(h, 0.5, -2.0, 2.0);
    let sol = direct_solve(&DirectProblem {
        grid,
        omega: OMEGA,
        medium: FdMedium::Uniform { mu: 1.0, eps: 1.0 },
        lateral: Lateral::Bloch { k1 },
        absorber: Absorber {
            thickness: [0.0, 0.0, 1.0, 1.0],
            strength: 5.0,
        },
        source: FdSource::PlaneWave { wave, line: 0.5 },
    })
    .unwrap();
    // Outside the absorbers the field is the unit plane wave on both sides
    // of the injection line; what remains is the discrete absorber reflection.
    for j in (1.0 / h) as usize..(3.0 / h) as usize {
        for i in 0..grid.n[0] {
            assert!((sol.field.value(i, j).norm() - 1.0).abs() < 1e-5, "node {i} {j}");
        }
    }
    let k1_phase = sol.field.value(1, 60) / sol.field.value(0, 60);
    assert!((k1_phase - Complex64::from_polar(1.0, k1 * h)).norm() < 1e-5);
}

fn effective_fixture() -> (MaterialSet, EffectiveMedium, TransmissionCoefficients) {
    let medium = EffectiveMedium {
        a: [[0.8, 0.12], [0.12, 0.55]],
        eps_minus: 1.9,
    };
    let coeffs = TransmissionCoefficients {
        s: 0.12,
        psi: [0.01, 0.02],
        phi1: [0.004, 0.003],
        phi2: [0.002, -0.02],
        phi3: -0.3,
        xi: 0.05,
        omega: OMEGA,
    };
    (scene_materials(), medium, coeffs)
}

fn effective_strip(h: f64) -> DirectProblem {
    let (materials, medium, coeffs) = effective_fixture();
    let wave = IncidentWave::from_angle(OMEGA, 30f64.to_radians());
    DirectProblem {
        grid: strip(h, 0.5, -2.0, 2.0),
        omega: OMEGA,
        medium: FdMedium::Effective {
            materials,
            medium,
            coeffs,
            inclusion: None,
        },
        lateral: Lateral::Bloch {
            k1: OMEGA * wave.theta[0],
        },
        absorber: Absorber {
            thickness: [0.0, 0.0, 1.0, 1.0],
            strength: 5.0,
        },
        source: FdSource::PlaneWave { wave, line: 0.5 },
    }
}

fn background_on(grid: &FieldGrid) -> FieldGrid {
    let (materials, medium, coeffs) = effective_fixture();
    let problem = EffectiveProblem::new(&materials, &medium, &coeffs, OMEGA).unwrap();
    let wave = IncidentWave::from_angle(OMEGA, 30f64.to_radians());
    let bg = background_field(&wave, &problem).unwrap();
    FieldGrid {
        spec: grid.spec,
        values: grid.spec.points().into_iter().map(|x| bg.value(x)).collect(),
        excluded: 0,
    }
}

#[test]
fn effective_interface_rows_converge_to_layered_background() {
    let window = Window {
        x1: [0.0, 0.45],
        x2: [-0.9, 0.4],
    };
    let mut errors = Vec::new();
    let mut sols = Vec::new();
    for h in [1.0 / 40.0, 1.0 / 80.0] {
        let sol = direct_solve(&effective_strip(h)).unwrap();
        let exact = background_on(&sol.field);
        errors.push(compare_fields(&sol.field, &exact, &window).unwrap().relative_l2);
        sols.push(sol);
    }
    assert!(errors[1] < 1e-2, "errors {errors:?}");
    assert!(errors[0] / errors[1] > 3.0, "errors {errors:?}");
    // Lower trace continues the field below the interface.
    let sol = &sols[1];
    let lower = sol.lower_trace.as_ref().unwrap();
    let (materials, medium, coeffs) = effective_fixture();
    let problem = EffectiveProblem::new(&materials, &medium, &coeffs, OMEGA).unwrap();
    let wave = IncidentWave::from_angle(OMEGA, 30f64.to_radians());
    let bg = background_field(&wave, &problem).unwrap();
    let below = bg.value([0.0, -1e-12]);
    assert!((lower[0] - below).norm() < 2e-2 * below.norm());
}

#[test]
fn richardson_improves_the_effective_solution() {
    let coarse = direct_solve(&effective_strip(1.0 / 40.0)).unwrap();
    let fine_problem = DirectProblem {
        grid: coarse.grid.refined(true),
        ..effective_strip(1.0 / 80.0)
    };
    let fine = direct_solve(&fine_problem).unwrap();
    let extrapolated = richardson(&coarse, &fine).unwrap();
    let window = Window {
        x1: [0.0, 0.45],
        x2: [-0.9, 0.4],
    };
    let exact = background_on(&coarse.field);
    let e_fine = compare_fields(&fine.field, &background_on(&fine.field), &window).unwrap().relative_l2;
    let e_rich = compare_fields(&extrapolated, &exact, &window).unwrap().relative_l2;
    assert!(e_rich < 0.5 * e_fine, "fine {e_fine:e} extrapolated {e_rich:e}");
}

#[test]
fn background_source_reproduces_the_direct_solution() {
    // Solving for the inclusion relative to the no-inclusion solution must
    // give the same total field as solving with the inclusion directly.
    let base = effective_strip(1.0 / 60.0);
    let FdMedium::Effective {
        materials,
        medium,
        coeffs,
        ..
    } = base.medium.clone()
    else {
        unreachable!()
    };
    let with_d = FdMedium::Effective {
        materials,
        medium,
        coeffs,
        inclusion: Some(InclusionD::disc([0.25, -0.8], 0.15)),
    };
    let u0 = direct_solve(&base).unwrap();
    let direct = direct_solve(&DirectProblem {
        medium: with_d.clone(),
        ..base.clone()
    })
    .unwrap();
    let relative = direct_solve(&DirectProblem {
        medium: with_d,
        source: FdSource::Background {
            field: u0.field.values.clone(),
            reference: Box::new(base.medium.clone()),
        },
        ..base.clone()
    })
    .unwrap();
    let window = Window {
        x1: [0.0, 0.45],
        x2: [-1.0, 0.45],
    };
    let c = compare_fields(&relative.field, &direct.field, &window).unwrap();
    assert!(c.relative_linf < 1e-9, "{c:?}");
    let change = compare_fields(&u0.field, &direct.field, &window).unwrap();
    assert!(change.relative_linf > 1e-3, "inclusion had no effect");
}

#[test]
fn memory_guard_reports_estimate() {
    assert!(check_memory(1000, 4_000_000_000).is_ok());
    match check_memory(10_000_000, 1_000_000) {
        Err(Error::OutOfMemory {
            estimated_bytes,
            budget_bytes,
        }) => assert!(estimated_bytes > budget_bytes),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn validation_rejects_inconsistent_problems() {
    let mut p = effective_strip(1.0 / 40.0);
    p.lateral = Lateral::Bloch { k1: 0.1 };
    assert!(direct_solve(&p).is_err());
    let mut p = effective_strip(1.0 / 40.0);
    p.grid.origin[1] += 0.01;
    assert!(direct_solve(&p).is_err());
}

fn plane_wave_strip(medium: FdMedium, h: f64) -> (DirectProblem, IncidentWave) {
    let wave = IncidentWave::from_angle(OMEGA, 30f64.to_radians());
    let p = DirectProblem {
        grid: strip(h, 0.5, -2.5, 2.0),
        omega: OMEGA,
        medium,
        lateral: Lateral::Bloch {
            k1: OMEGA * wave.theta[0],
        },
        absorber: Absorber {
            thickness: [0.0, 0.0, 1.0, 1.0],
            strength: 5.0,
        },
        source: FdSource::PlaneWave { wave, line: 0.5 },
    };
    (p, wave)
}

#[test]
fn empty_domain_scattered_formulation_is_exact() {
    let uniform = FdMedium::Uniform { mu: 1.0, eps: 1.0 };
    let (mut p, wave) = plane_wave_strip(uniform.clone(), 1.0 / 40.0);
    let inc = plane_wave_on_grid(&p.grid, &wave, 1.0, 1.0);
    p.source = FdSource::Background {
        field: inc.clone(),
        reference: Box::new(uniform),
    };
    let sol = direct_solve(&p).unwrap();
    let scattered = sol.field.values.iter().zip(&inc).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
    assert!(scattered < 1e-8, "scattered {scattered:e}");
}

#[test]
fn matched_flat_layer_equals_empty_domain() {
    let matched = MaterialSet {
        mu_plus: 1.0,
        eps_plus: 1.0,
        mu_cl: 1.0,
        eps_cl: 1.0,
        mu_host: 1.0,
        eps_host: 1.0,
        mu_b: 1.0,
        eps_b: 1.0,
        mu_d: 1.0,
        eps_d: 1.0,
    };
    let layered = FdMedium::Multiscale {
        materials: matched,
        layer: LayerProfile::flat(0.5, 0.1),
        cell: UnitCell::disc(1.0, 0.3),
        inclusion: None,
        substrate: None,
        cell_averaging: false,
    };
    let h = 1.0 / 80.0;
    let a = direct_solve(&plane_wave_strip(layered, h).0).unwrap();
    let b = direct_solve(&plane_wave_strip(FdMedium::Uniform { mu: 1.0, eps: 1.0 }, h).0).unwrap();
    let d = a.field.values.iter().zip(&b.field.values).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
    assert!(d < 1e-8, "difference {d:e}");
}

#[test]
fn compare_fields_reports_constructed_perturbation() {
    let (p, _) = plane_wave_strip(FdMedium::Uniform { mu: 1.0, eps: 1.0 }, 1.0 / 40.0);
    let a = direct_solve(&p).unwrap().field;
    let window = Window {
        x1: [0.05, 0.4],
        x2: [-1.0, 0.9],
    };
    let inside: Vec<bool> = a.spec.points().iter().map(|x| window.contains(*x)).collect();
    let norm: f64 = a
        .values
        .iter()
        .zip(&inside)
        .filter(|(_, w)| **w)
        .map(|(v, _)| v.norm_sqr())
        .sum::<f64>()
        .sqrt();
    // Perturbation with unit window norm, scaled to 1% of the field norm.
    let raw: Vec<Complex64> = a
        .spec
        .points()
        .iter()
        .map(|x| Complex64::from_polar(1.0, 3.0 * x[0] - 2.0 * x[1]) * (1.0 + x[1] * x[1]))
        .collect();
    let raw_norm: f64 = raw
        .iter()
        .zip(&inside)
        .filter(|(_, w)| **w)
        .map(|(v, _)| v.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let b = FieldGrid {
        values: a
            .values
            .iter()
            .zip(&raw)
            .map(|(u, d)| u + d * (0.01 * norm / raw_norm))
            .collect(),
        ..a.clone()
    };
    let c = compare_fields(&b, &a, &window).unwrap();
    assert!((c.relative_l2 - 0.01).abs() < 1e-12, "{c:?}");
    assert!(compare_fields(&a, &a, &window).unwrap().relative_l2 < 1e-14);
}

/// Imaginary part of the discrete flux `sum a_f conj(u_p) (u_q - u_p) / h`
/// through the node row pair `(j, j + 1)`, over one period.
fn vertical_flux(sol: &camoscat::reference::DirectSolution, a: impl Fn([f64; 2]) -> f64, j: usize) -> f64 {
    let g = sol.grid;
    (0..g.n[0])
        .map(|i| {
            let (p, q) = (g.point(i, j), g.point(i, j + 1));
            let (ap, aq) = (a(p), a(q));
            let af = 2.0 * ap * aq / (ap + aq);
            let (up, uq) = (sol.field.value(i, j), sol.field.value(i, j + 1));
            af * (up.conj() * (uq - up)).im
        })
        .sum()
}

#[test]
fn lossless_scatterer_conserves_flux() {
    let xi = 0.125;
    let materials = scene_materials();
    let layer = LayerProfile::cosine(0.5, 0.2, xi);
    let cell = UnitCell::disc(1.0, 0.3);
    let medium = FdMedium::Multiscale {
        materials: materials.clone(),
        layer: layer.clone(),
        cell: cell.clone(),
        inclusion: None,
        substrate: None,
        cell_averaging: false,
    };
    let h = 1.0 / 80.0;
    let sol = direct_solve(&plane_wave_strip(medium, h).0).unwrap();
    let inv_mu = |x: [f64; 2]| {
        let m = &materials;
        let mu = if x[1] >= 0.0 {
            if x[1] < xi * layer.value(x[0] / xi) {
                m.mu_cl
            } else {
                m.mu_plus
            }
        } else if cell.contains([x[0] / xi, x[1] / xi]) {
            m.mu_b
        } else {
            m.mu_host
        };
        1.0 / mu
    };
    let row = |x2: f64| ((x2 + 2.5) / h).round() as usize;
    let top = vertical_flux(&sol, inv_mu, row(0.4));
    let bottom = vertical_flux(&sol, inv_mu, row(-1.2));
    // Incident flux of the unit plane wave through one period.
    let incident = 0.5 / 40.0 * 80.0 * (OMEGA * 30f64.to_radians().cos()) * h;
    assert!(top.abs() > 0.0 && bottom.abs() > 0.1 * incident);
    assert!((top - bottom).abs() < 1e-6 * incident, "top {top} bottom {bottom}");
}
