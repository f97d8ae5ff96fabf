use std::f64::consts::{PI, TAU};

use camoscat::bem::{
    assemble_system, boundary_operators, exterior_operators, scattered_field, single_layer_trace, solve_densities,
    total_field, BemSystem, BoundaryMesh, ExteriorKernel, LaplaceKernel, PlaneWave, SingleLayerPotential,
};
use camoscat::boundary_layer::TransmissionCoefficients;
use camoscat::field::GridSpec;
use camoscat::homogenization::EffectiveMedium;
use camoscat::kernels::FreeSpaceKernel;
use camoscat::layered::{background_field, EffectiveProblem, LayeredGreen, SommerfeldOptions};
use camoscat::model::{InclusionD, InclusionShape, IncidentWave, MaterialSet};
use camoscat::special::{hankel_n, hankel_n_prime, jn, jn_prime};
use num_complex::Complex64;

const OMEGA: f64 = TAU;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Series solution for plane-wave scattering by a penetrable circular
/// cylinder of radius `a` centred at the origin in a homogeneous medium.
struct Cylinder {
    k: f64,
    kd: f64,
    a: f64,
    alpha: f64,
    b: Vec<Complex64>,
    cn: Vec<Complex64>,
    nmax: i32,
}

impl Cylinder {
    fn new(mu: f64, eps: f64, mu_d: f64, eps_d: f64, a: f64, alpha: f64) -> Self {
        let k = OMEGA * (mu * eps).sqrt();
        let kd = OMEGA * (mu_d * eps_d).sqrt();
        let nmax = 50;
        let (mut b, mut cn) = (Vec::new(), Vec::new());
        for n in -nmax..=nmax {
            let i_n = c(0.0, 1.0).powi(n);
            let (j, jp) = (jn(n, k * a), jn_prime(n, k * a));
            let (h, hp) = (hankel_n(n, k * a), hankel_n_prime(n, k * a));
            let (jd, jdp) = (jn(n, kd * a), jn_prime(n, kd * a));
            let (p, q) = (k / mu, kd / mu_d);
            let bn = i_n * (q * jdp * j - p * jp * jd) / (p * hp * jd - q * jdp * h);
            // Continuity of the field fixes the interior coefficient; use
            // whichever Bessel value is larger for stability.
            let cnv = if jd.abs() > jdp.abs() {
                (i_n * j + bn * h) / jd
            } else {
                p * (i_n * jp + bn * hp) / (q * jdp)
            };
            b.push(bn);
            cn.push(cnv);
        }
        Cylinder { k, kd, a, alpha, b, cn, nmax }
    }

    fn total(&self, x: [f64; 2]) -> Complex64 {
        let r = x[0].hypot(x[1]);
        let th = x[1].atan2(x[0]);
        let mut u = c(0.0, 0.0);
        for n in -self.nmax..=self.nmax {
            let e = c(0.0, n as f64 * (th - self.alpha)).exp();
            let idx = (n + self.nmax) as usize;
            if r < self.a {
                u += self.cn[idx] * jn(n, self.kd * r) * e;
            } else {
                u += self.b[idx] * hankel_n(n, self.k * r) * e;
            }
        }
        if r >= self.a {
            u += c(0.0, self.k * r * (th - self.alpha).cos()).exp();
        }
        u
    }
}

struct WholeSpace {
    mesh: BoundaryMesh,
    ext: ExteriorKernel,
    int: FreeSpaceKernel,
    wave: PlaneWave,
}

fn whole_space(n: usize, eps_d: f64, amplitude: Complex64) -> WholeSpace {
    whole_space_at(OMEGA, n, eps_d, amplitude)
}

fn whole_space_at(omega: f64, n: usize, eps_d: f64, amplitude: Complex64) -> WholeSpace {
    let alpha = 0.3f64;
    WholeSpace {
        mesh: BoundaryMesh::new(&InclusionD::disc([0.0, 0.0], 0.5), n).unwrap(),
        ext: ExteriorKernel::WholeSpace(FreeSpaceKernel::isotropic(1.0, 1.0, omega)),
        int: FreeSpaceKernel::isotropic(1.0, eps_d, omega),
        wave: PlaneWave {
            k: omega,
            direction: [alpha.cos(), alpha.sin()],
            amplitude,
        },
    }
}

fn observation_points() -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    for (r, m) in [(0.05, 3), (1.0, 9), (1.6, 13)] {
        for j in 0..m {
            let t = TAU * j as f64 / m as f64 + 0.1;
            pts.push([r * t.cos(), r * t.sin()]);
        }
    }
    pts
}

fn max_error_against_series(n: usize) -> f64 {
    let ws = whole_space(n, 2.0, c(1.0, 0.0));
    let sys = assemble_system(&ws.mesh, &ws.ext, &ws.int, &ws.wave).unwrap();
    let dens = solve_densities(&sys).unwrap();
    let series = Cylinder::new(1.0, 1.0, 1.0, 2.0, 0.5, 0.3);
    let ext = SingleLayerPotential::new(ws.ext.free(), &ws.mesh, &dens.phi);
    let int = SingleLayerPotential::new(&ws.int, &ws.mesh, &dens.psi_d);
    observation_points()
        .into_iter()
        .map(|x| {
            let u = if x[0].hypot(x[1]) < 0.5 {
                int.eval(x).unwrap().value
            } else {
                ext.eval(x).unwrap().value + c(0.0, OMEGA * (x[0] * 0.3f64.cos() + x[1] * 0.3f64.sin())).exp()
            };
            (u - series.total(x)).norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn penetrable_cylinder_matches_series() {
    let err = max_error_against_series(256);
    assert!(err < 1e-6, "error {err:e}");
}

#[test]
fn nystrom_converges_spectrally() {
    let errs: Vec<f64> = [16, 32, 64].iter().map(|&n| max_error_against_series(n)).collect();
    assert!(errs[0] / errs[1] > 10.0 && errs[1] / errs[2] > 10.0, "errors {errs:?}");
}

#[test]
fn total_field_grid_matches_series_and_marks_excluded_points() {
    let ws = whole_space(128, 2.0, c(1.0, 0.0));
    let sys = assemble_system(&ws.mesh, &ws.ext, &ws.int, &ws.wave).unwrap();
    let dens = solve_densities(&sys).unwrap();
    let grid = GridSpec::new([-1.0, 1.0], [-1.0, 1.0], [21, 21]).unwrap();
    let u = total_field(&dens, &ws.mesh, &ws.ext, &ws.int, &ws.wave, &grid).unwrap();
    let series = Cylinder::new(1.0, 1.0, 1.0, 2.0, 0.5, 0.3);
    let h = ws.mesh.spacing();
    let mut excluded = 0;
    for (p, v) in grid.points().iter().zip(&u.values) {
        let d = (p[0].hypot(p[1]) - 0.5).abs();
        if v.re.is_nan() {
            excluded += 1;
            assert!(d < 2.0 * h + 1e-12);
        } else {
            assert!((v - series.total(*p)).norm() < 1e-6, "at {p:?}");
        }
    }
    assert_eq!(excluded, u.excluded);
    assert!(excluded > 0);
}

#[test]
fn laplace_trace_of_constant_density_on_circle() {
    for r in [0.7, 2.0] {
        let mesh = BoundaryMesh::new(&InclusionD::disc([0.3, -1.0], r), 128).unwrap();
        let ones = vec![c(1.0, 0.0); 128];
        for v in single_layer_trace(&LaplaceKernel, &mesh, &ones) {
            assert!((v - c(-r * f64::ln(r), 0.0)).norm() < 1e-10);
        }
    }
}

fn star() -> InclusionD {
    InclusionD {
        boundary: InclusionShape::Star {
            center: [0.1, -2.0],
            radius: 0.5,
            cos: vec![0.0, 0.0, 0.06],
            sin: vec![0.04],
        },
    }
}

#[test]
fn trace_quadrature_self_converges() {
    let k = FreeSpaceKernel::anisotropic(
        &EffectiveMedium {
            a: [[0.8, 0.1], [0.1, 0.6]],
            eps_minus: 1.7,
        },
        OMEGA,
    );
    let density = |t: f64| c(t.cos().exp(), (2.0 * t).sin());
    let trace = |n: usize| {
        let mesh = BoundaryMesh::new(&star(), n).unwrap();
        let d: Vec<Complex64> = mesh.t.iter().map(|&t| density(t)).collect();
        single_layer_trace(&k, &mesh, &d)
    };
    let (coarse, fine) = (trace(128), trace(256));
    for (i, v) in coarse.iter().enumerate() {
        assert!((v - fine[2 * i]).norm() < 1e-10, "node {i}");
    }
}

#[test]
fn conormal_jump_relation() {
    let k = FreeSpaceKernel::anisotropic(
        &EffectiveMedium {
            a: [[0.9, 0.15], [0.15, 0.6]],
            eps_minus: 1.5,
        },
        OMEGA,
    );
    let mesh = BoundaryMesh::new(&star(), 512).unwrap();
    let h = mesh.spacing();
    let densities: [Box<dyn Fn(f64) -> Complex64>; 3] = [
        Box::new(|t: f64| c(t.cos(), 0.0)),
        Box::new(|t: f64| c(0.3, 0.0) + c(0.0, 2.0 * t).exp()),
        Box::new(|t: f64| c(t.cos().exp(), -t.sin())),
    ];
    let t0 = 0.7;
    let [p, d1, _] = star().eval(t0);
    let jac = d1[0].hypot(d1[1]);
    let nu = [d1[1] / jac, -d1[0] / jac];
    for f in &densities {
        let d: Vec<Complex64> = mesh.t.iter().map(|&t| f(t)).collect();
        let pot = SingleLayerPotential::new(&k, &mesh, &d);
        let jump = |delta: f64| {
            let flux = |s: f64| {
                let g = pot.eval([p[0] + s * nu[0], p[1] + s * nu[1]]).unwrap().grad;
                let a = k.flux(g);
                nu[0] * a[0] + nu[1] * a[1]
            };
            flux(delta) - flux(-delta)
        };
        let jumps: Vec<Complex64> = [8.0, 4.0, 2.0].iter().map(|m| jump(m * h)).collect();
        let errs: Vec<f64> = jumps.iter().map(|j| (j + f(t0)).norm()).collect();
        for w in errs.windows(2) {
            assert!(w[1] < 0.65 * w[0], "jump errors {errs:?}");
        }
        // Removing the first-order term leaves a much smaller defect.
        let extrapolated = 2.0 * jumps[2] - jumps[1];
        assert!((extrapolated + f(t0)).norm() < 0.2 * errs[2], "jump errors {errs:?}");
    }
}

#[test]
fn field_is_continuous_across_the_boundary() {
    // Offsets of a few spacings must be small against the wavelength for the
    // one-sided extrapolation to resolve 1e-4.
    let ws = whole_space_at(0.5 * PI, 512, 2.0, c(1.0, 0.0));
    let sys = assemble_system(&ws.mesh, &ws.ext, &ws.int, &ws.wave).unwrap();
    let dens = solve_densities(&sys).unwrap();
    let ext = SingleLayerPotential::new(ws.ext.free(), &ws.mesh, &dens.phi);
    let int = SingleLayerPotential::new(&ws.int, &ws.mesh, &dens.psi_d);
    let h = ws.mesh.spacing();
    for t in [0.2, 1.9, 4.0] {
        let (p, nu) = ([0.5 * f64::cos(t), 0.5 * f64::sin(t)], [f64::cos(t), f64::sin(t)]);
        let side = |sign: f64| {
            let v: Vec<Complex64> = [8.0, 4.0, 2.0]
                .iter()
                .map(|m| {
                    let x = [p[0] + sign * m * h * nu[0], p[1] + sign * m * h * nu[1]];
                    if sign > 0.0 {
                        ext.eval(x).unwrap().value + ws.wave.eval_value(x)
                    } else {
                        int.eval(x).unwrap().value
                    }
                })
                .collect();
            // Quadratic extrapolation to zero offset from offsets 8, 4, 2.
            v[0] / 3.0 - 2.0 * v[1] + 8.0 / 3.0 * v[2]
        };
        let (outer, inner) = (side(1.0), side(-1.0));
        assert!((outer - inner).norm() < 1e-4, "t = {t}: {outer} vs {inner}");
    }
}

trait Value {
    fn eval_value(&self, x: [f64; 2]) -> Complex64;
}

impl Value for PlaneWave {
    fn eval_value(&self, x: [f64; 2]) -> Complex64 {
        camoscat::bem::IncidentField::eval(self, x).value
    }
}

#[test]
fn linearity_and_conjugation() {
    let one = whole_space(64, 2.0, c(1.0, 0.0));
    let two = whole_space(64, 2.0, c(2.0, 0.0));
    let s1 = solve_densities(&assemble_system(&one.mesh, &one.ext, &one.int, &one.wave).unwrap()).unwrap();
    let s2 = solve_densities(&assemble_system(&two.mesh, &two.ext, &two.int, &two.wave).unwrap()).unwrap();
    for (a, b) in s1.phi.iter().chain(&s1.psi_d).zip(s2.phi.iter().chain(&s2.psi_d)) {
        assert!((2.0 * a - b).norm() < 1e-12 * b.norm().max(1.0));
    }
    let sys = assemble_system(&one.mesh, &one.ext, &one.int, &one.wave).unwrap();
    let conj = BemSystem {
        n: sys.n,
        matrix: sys.matrix.iter().map(|v| v.conj()).collect(),
        rhs: sys.rhs.iter().map(|v| v.conj()).collect(),
    };
    let sc = solve_densities(&conj).unwrap();
    for (a, b) in s1.phi.iter().zip(&sc.phi) {
        assert!((a.conj() - b).norm() < 1e-12 * a.norm().max(1.0));
    }
}

#[test]
fn densities_converge_under_refinement() {
    let solve = |n: usize| {
        let ws = whole_space(n, 2.0, c(1.0, 0.0));
        solve_densities(&assemble_system(&ws.mesh, &ws.ext, &ws.int, &ws.wave).unwrap()).unwrap()
    };
    let (coarse, fine) = (solve(128), solve(256));
    for i in 0..128 {
        assert!((coarse.phi[i] - fine.phi[2 * i]).norm() < 1e-8);
        assert!((coarse.psi_d[i] - fine.psi_d[2 * i]).norm() < 1e-8);
    }
}

#[test]
fn whole_space_without_contrast_is_invisible() {
    let ws = whole_space(64, 1.0, c(1.0, 0.0));
    let dens = solve_densities(&assemble_system(&ws.mesh, &ws.ext, &ws.int, &ws.wave).unwrap()).unwrap();
    let grid = GridSpec::new([-1.5, 1.5], [-1.5, 1.5], [13, 13]).unwrap();
    let s = scattered_field(&dens, &ws.mesh, &ws.ext, &ws.int, &ws.wave, &grid).unwrap();
    assert!(s.sup_norm() < 1e-8, "scattered {}", s.sup_norm());
}

/// Effective problem with an isotropic lower medium and a reciprocal layer.
fn layered(medium: EffectiveMedium) -> (EffectiveProblem, MaterialSet) {
    let m = MaterialSet {
        mu_d: 1.0 / medium.a[0][0],
        eps_d: medium.eps_minus,
        ..MaterialSet::uniform()
    };
    let coeffs = TransmissionCoefficients {
        s: 0.1,
        psi: [0.0, 0.0],
        phi1: [0.003, 0.0],
        phi2: [0.0, -0.02],
        phi3: -0.25,
        xi: 0.05,
        omega: OMEGA,
    };
    (EffectiveProblem::new(&m, &medium, &coeffs, OMEGA).unwrap(), m)
}

fn layered_kernel(problem: &EffectiveProblem) -> ExteriorKernel {
    ExteriorKernel::Layered {
        green: LayeredGreen::new(problem).unwrap(),
        options: SommerfeldOptions::default(),
    }
}

#[test]
fn layered_inclusion_without_contrast_is_invisible() {
    let (problem, m) = layered(EffectiveMedium::isotropic(1.0, 2.0));
    let ext = layered_kernel(&problem);
    let int = FreeSpaceKernel::anomaly(&m, OMEGA);
    let wave = IncidentWave::from_angle(OMEGA, PI / 6.0);
    let bg = background_field(&wave, &problem).unwrap();
    let mesh = BoundaryMesh::new(&InclusionD::disc([0.0, -1.5], 0.3), 32).unwrap();
    let dens = solve_densities(&assemble_system(&mesh, &ext, &int, &bg).unwrap()).unwrap();
    let grid = GridSpec::new([-1.0, 1.0], [-2.0, 1.0], [5, 7]).unwrap();
    let s = scattered_field(&dens, &mesh, &ext, &int, &bg, &grid).unwrap();
    let u = total_field(&dens, &mesh, &ext, &int, &bg, &grid).unwrap();
    assert!(s.sup_norm() < 1e-8 * u.sup_norm(), "scattered {}", s.sup_norm());
}

#[test]
fn layered_exterior_block_is_reciprocal() {
    let (problem, _) = layered(EffectiveMedium {
        a: [[0.7, 0.1], [0.1, 0.5]],
        eps_minus: 1.8,
    });
    let mesh = BoundaryMesh::new(&InclusionD::disc([0.2, -0.8], 0.3), 24).unwrap();
    let ops = exterior_operators(&layered_kernel(&problem), &mesh).unwrap();
    let n = mesh.len();
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = ops.single[i * n + j] / mesh.weights[j];
            let b = ops.single[j * n + i] / mesh.weights[i];
            if i != j {
                defect = defect.max((a - b).norm());
            }
            scale = scale.max(a.norm());
        }
    }
    assert!(defect < 1e-8 * scale.max(1.0), "defect {defect:e}");
}

#[test]
fn layered_correction_is_smooth_on_the_boundary() {
    let (problem, _) = layered(EffectiveMedium {
        a: [[0.7, 0.1], [0.1, 0.5]],
        eps_minus: 1.8,
    });
    let g = LayeredGreen::new(&problem).unwrap();
    let opts = SommerfeldOptions::default();
    let x = [0.1, -0.9];
    let curve = InclusionD::disc([0.0, -1.0], 0.4);
    let integral = |n: usize| {
        let mesh = BoundaryMesh::new(&curve, n).unwrap();
        mesh.points
            .iter()
            .zip(&mesh.weights)
            .zip(&mesh.t)
            .map(|((y, w), t)| g.correction(x, *y, &opts).unwrap().value * *w * t.cos().exp())
            .sum::<Complex64>()
    };
    let v: Vec<Complex64> = [8, 16, 32, 64].iter().map(|&n| integral(n)).collect();
    let d: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    assert!(d[0] / d[1] > 4.0 && (d[1] / d[2] > 4.0 || d[2] < 1e-10), "differences {d:?}");
}

#[test]
fn scattered_field_decays_upwards() {
    let (problem, m) = layered(EffectiveMedium::isotropic(1.0, 2.0));
    let ext = layered_kernel(&problem);
    let m = MaterialSet { eps_d: 4.0, ..m };
    let int = FreeSpaceKernel::anomaly(&m, OMEGA);
    let wave = IncidentWave::from_angle(OMEGA, PI / 6.0);
    let bg = background_field(&wave, &problem).unwrap();
    let mesh = BoundaryMesh::new(&InclusionD::disc([0.0, -1.0], 0.3), 32).unwrap();
    let dens = solve_densities(&assemble_system(&mesh, &ext, &int, &bg).unwrap()).unwrap();
    let ring = |r: f64| {
        let grid = GridSpec::new([-r, r], [0.5 * r, r], [9, 2]).unwrap();
        scattered_field(&dens, &mesh, &ext, &int, &bg, &grid).unwrap().sup_norm()
    };
    let (near, far) = (ring(1.5), ring(6.0));
    assert!(far <= near && near > 0.0, "near {near} far {far}");
}

#[test]
fn laplace_operators_are_available_for_any_curve() {
    let mesh = BoundaryMesh::new(&star(), 64).unwrap();
    let ops = boundary_operators(&LaplaceKernel, &mesh);
    // Constant density: the interior limit of the Laplace double-layer
    // adjoint integrates to 1/2 of the flux identity; K' 1 summed against
    // arc length equals -1/2 times the perimeter.
    let ones = vec![c(1.0, 0.0); 64];
    let k1 = ops.apply_conormal(&ones);
    let total: Complex64 = k1.iter().zip(&mesh.weights).map(|(v, w)| v * *w).sum();
    let perimeter: f64 = mesh.weights.iter().sum();
    assert!((total + 0.5 * perimeter).norm() < 1e-8, "{total}");
}
