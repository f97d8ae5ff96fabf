use camoscat::homogenization::{effective_permittivity, homogenize, solve_corrector, effective_tensor};
use camoscat::model::{CellInclusion, MaterialSet, UnitCell};
use proptest::prelude::*;

fn mats(mu_host: f64, mu_b: f64) -> MaterialSet {
    MaterialSet {
        mu_host,
        mu_b,
        ..MaterialSet::uniform()
    }
}

fn skewed_cell() -> UnitCell {
    UnitCell {
        ell1: 1.0,
        ell2: 1.0,
        inclusion: CellInclusion::Polygon {
            vertices: vec![[0.2, 0.2], [0.8, 0.4], [0.6, 0.85], [0.3, 0.6]],
        },
    }
}

#[test]
fn permittivity_mixture() {
    let cell = UnitCell::laminate(1.0, 1.0, 0.25);
    let m = MaterialSet {
        eps_b: 2.0,
        eps_host: 1.0,
        ..MaterialSet::uniform()
    };
    assert!((effective_permittivity(&cell, &m) - 1.25).abs() < 1e-15);
    let same = MaterialSet {
        eps_b: 3.0,
        eps_host: 3.0,
        ..m
    };
    assert_eq!(effective_permittivity(&UnitCell::disc(1.0, 0.3), &same), 3.0);
    let tiny = UnitCell::disc(1.0, 1e-5);
    assert!((effective_permittivity(&tiny, &m) - 1.0).abs() < 1e-9);
}

#[test]
fn reflection_flips_off_diagonal() {
    let m = mats(1.0, 4.0);
    let a = homogenize(&skewed_cell(), &m, [64, 64]).unwrap().medium.a;
    let r = homogenize(&skewed_cell().reflected(), &m, [64, 64]).unwrap().medium.a;
    assert!((a[0][0] - r[0][0]).abs() < 1e-9);
    assert!((a[1][1] - r[1][1]).abs() < 1e-9);
    assert!((a[0][1] + r[0][1]).abs() < 1e-9);
}

#[test]
fn disc_self_convergence() {
    let cell = UnitCell::disc(1.0, 0.3);
    let m = mats(1.0, 5.0);
    let a128 = homogenize(&cell, &m, [128, 128]).unwrap();
    let a256 = homogenize(&cell, &m, [256, 256]).unwrap();
    for k in 0..2 {
        for j in 0..2 {
            let diff = (a128.medium.a[k][j] - a256.medium.a[k][j]).abs();
            assert!(diff <= 4.0 * a128.richardson[k][j] + 1e-12, "entry {k}{j}: {diff}");
        }
    }
    let chi = solve_corrector(&cell, &m, [256, 256]).unwrap();
    // centre of the cell is the corner shared by the four middle cells
    let c: f64 = [(127, 127), (128, 127), (127, 128), (128, 128)]
        .iter()
        .map(|&(i, j)| chi.at(0, i, j))
        .sum();
    assert!(c.abs() < 1e-10);
    assert!(chi.residual[0] < 1e-10 && chi.residual[1] < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scaling_equivariance(scale in 0.2f64..5.0, mu_b in 0.2f64..10.0) {
        let cell = skewed_cell();
        let m = mats(1.0, mu_b);
        let ms = mats(scale, mu_b * scale);
        let chi = solve_corrector(&cell, &m, [32, 32]).unwrap();
        let a = effective_tensor(&chi, &cell, &m);
        let chis = solve_corrector(&cell, &ms, [32, 32]).unwrap();
        let b = effective_tensor(&chis, &cell, &ms);
        for k in 0..2 {
            for j in 0..2 {
                prop_assert!((a[k][j] / scale - b[k][j]).abs() < 1e-9 * a[0][0].abs());
            }
        }
    }

    #[test]
    fn voigt_reuss_bracket(mu_b in 0.1f64..20.0, r in 0.05f64..0.45, host in 0.5f64..2.0) {
        let cell = UnitCell::disc(1.0, r);
        let m = mats(host, mu_b);
        let h = homogenize(&cell, &m, [32, 32]).unwrap();
        let n = 32 * 32;
        let inside = cell.rasterize([32, 32]).iter().filter(|b| **b).count() as f64 / n as f64;
        let arith = inside / mu_b + (1.0 - inside) / host;
        let harm = 1.0 / (inside * mu_b + (1.0 - inside) * host);
        let e = h.medium.eigenvalues();
        prop_assert!(e[0] >= harm * (1.0 - 1e-9) && e[1] <= arith * (1.0 + 1e-9));
        prop_assert!(h.symmetry_defect < 1e-9 * e[1]);
    }
}
