//! Periodic cell problem for the corrector and the effective coefficients of
//! the micro-structured half-space.
//!
//! The cell problem is discretized by cell-centred finite differences on an
//! `n1 x n2` periodic grid with harmonic means of `1/mu` on faces. Writing
//! `G` for the face gradient and `a` for the face coefficients, the corrector
//! for direction `j` solves `G^T a G chi = G^T a e_j` and the tensor is the
//! face average of `a (e_j - G chi)`. That form is symmetric in exact
//! arithmetic and reproduces laminates exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::model::{MaterialSet, UnitCell};
use crate::{Error, Result};

pub const MAX_CG_ITERATIONS: usize = 10_000;
pub const CG_TOLERANCE: f64 = 1e-12;

/// Homogenized coefficients of the lower half-space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveMedium {
    #[serde(rename = "A")]
    pub a: [[f64; 2]; 2],
    pub eps_minus: f64,
}

impl EffectiveMedium {
    pub fn isotropic(mu: f64, eps: f64) -> Self {
        EffectiveMedium {
            a: [[1.0 / mu, 0.0], [0.0, 1.0 / mu]],
            eps_minus: eps,
        }
    }

    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    /// Inverse of the symmetric part of A.
    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let s = 0.5 * (self.a[0][1] + self.a[1][0]);
        let d = self.a[0][0] * self.a[1][1] - s * s;
        [[self.a[1][1] / d, -s / d], [-s / d, self.a[0][0] / d]]
    }

    pub fn is_isotropic(&self) -> bool {
        self.a[0][1] == 0.0 && self.a[1][0] == 0.0 && self.a[0][0] == self.a[1][1]
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let s = 0.5 * (self.a[0][1] + self.a[1][0]);
        let m = 0.5 * (self.a[0][0] + self.a[1][1]);
        let r = (0.25 * (self.a[0][0] - self.a[1][1]).powi(2) + s * s).sqrt();
        [m - r, m + r]
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.eigenvalues();
        let finite = self.a.iter().flatten().all(|v| v.is_finite()) && self.eps_minus.is_finite();
        if !finite || e[0] <= 0.0 || self.eps_minus <= 0.0 {
            return Err(Error::value("effective medium must have SPD A and positive eps_minus"));
        }
        Ok(())
    }

    /// Largest real tangential wavenumber that still propagates in the
    /// lower medium: `omega sqrt(eps_minus A22 / det A)`.
    pub fn cutoff(&self, omega: f64) -> f64 {
        omega * (self.eps_minus * self.a[1][1] / self.det()).sqrt()
    }
}

/// Corrector components on cell centres, `i1` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorField {
    pub chi: [Vec<f64>; 2],
    pub n: [usize; 2],
    pub h: [f64; 2],
    pub iterations: [usize; 2],
    pub residual: [f64; 2],
}

impl CorrectorField {
    pub fn at(&self, comp: usize, i: isize, j: isize) -> f64 {
        let i = i.rem_euclid(self.n[0] as isize) as usize;
        let j = j.rem_euclid(self.n[1] as isize) as usize;
        self.chi[comp][j * self.n[0] + i]
    }

    pub fn mean(&self, comp: usize) -> f64 {
        self.chi[comp].iter().sum::<f64>() / self.chi[comp].len() as f64
    }
}

/// Result of [`homogenize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Homogenized {
    #[serde(flatten)]
    pub medium: EffectiveMedium,
    /// `|A(n) - A(n/2)|` entrywise.
    pub richardson: [[f64; 2]; 2],
    pub symmetry_defect: f64,
    pub n_grid: [usize; 2],
    pub cg_iterations: [usize; 2],
    pub residual: [f64; 2],
}

/// Face coefficients `a = 1/mu` on the cell grid: `ax[j][i]` sits on the face
/// between cells `i-1` and `i`, `ay` between rows `j-1` and `j`.
struct Faces {
    n: [usize; 2],
    h: [f64; 2],
    ax: Vec<f64>,
    ay: Vec<f64>,
    mean_a: f64,
}

impl Faces {
    fn new(cell: &UnitCell, m: &MaterialSet, n: [usize; 2]) -> Self {
        let raster = cell.rasterize(n);
        let a: Vec<f64> = raster
            .iter()
            .map(|&inb| 1.0 / if inb { m.mu_b } else { m.mu_host })
            .collect();
        let (n1, n2) = (n[0], n[1]);
        let harm = |p: f64, q: f64| 2.0 * p * q / (p + q);
        let mut ax = vec![0.0; n1 * n2];
        let mut ay = vec![0.0; n1 * n2];
        for j in 0..n2 {
            for i in 0..n1 {
                let c = a[j * n1 + i];
                ax[j * n1 + i] = harm(a[j * n1 + (i + n1 - 1) % n1], c);
                ay[j * n1 + i] = harm(a[((j + n2 - 1) % n2) * n1 + i], c);
            }
        }
        let mean_a = a.iter().sum::<f64>() / a.len() as f64;
        Faces {
            n,
            h: [cell.ell1 / n1 as f64, cell.ell2 / n2 as f64],
            ax,
            ay,
            mean_a,
        }
    }

    /// `G^T a G u`.
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let [n1, n2] = self.n;
        let (w1, w2) = (1.0 / (self.h[0] * self.h[0]), 1.0 / (self.h[1] * self.h[1]));
        for j in 0..n2 {
            let jp = (j + 1) % n2;
            let jm = (j + n2 - 1) % n2;
            for i in 0..n1 {
                let ip = (i + 1) % n1;
                let im = (i + n1 - 1) % n1;
                let k = j * n1 + i;
                let c = u[k];
                let fx = self.ax[j * n1 + ip] * (u[j * n1 + ip] - c) - self.ax[k] * (c - u[j * n1 + im]);
                let fy = self.ay[jp * n1 + i] * (u[jp * n1 + i] - c) - self.ay[k] * (c - u[jm * n1 + i]);
                out[k] = -(w1 * fx + w2 * fy);
            }
        }
    }

    /// `G^T a e_dir`.
    fn rhs(&self, dir: usize) -> Vec<f64> {
        let [n1, n2] = self.n;
        let mut b = vec![0.0; n1 * n2];
        for j in 0..n2 {
            for i in 0..n1 {
                let k = j * n1 + i;
                b[k] = if dir == 0 {
                    (self.ax[k] - self.ax[j * n1 + (i + 1) % n1]) / self.h[0]
                } else {
                    (self.ay[k] - self.ay[((j + 1) % n2) * n1 + i]) / self.h[1]
                };
            }
        }
        b
    }
}

/// Inverse of `mean_a` times the periodic 5-point Laplacian, by FFT.
struct FftPreconditioner {
    n: [usize; 2],
    row: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    inv_symbol: Vec<f64>,
}

impl FftPreconditioner {
    fn new(f: &Faces) -> Self {
        let [n1, n2] = f.n;
        let mut planner = FftPlanner::new();
        let mut inv_symbol = vec![0.0; n1 * n2];
        for q in 0..n2 {
            for p in 0..n1 {
                let s1 = (PI * p as f64 / n1 as f64).sin() * 2.0 / f.h[0];
                let s2 = (PI * q as f64 / n2 as f64).sin() * 2.0 / f.h[1];
                let lam = f.mean_a * (s1 * s1 + s2 * s2);
                inv_symbol[q * n1 + p] = if p == 0 && q == 0 { 0.0 } else { 1.0 / (lam * (n1 * n2) as f64) };
            }
        }
        FftPreconditioner {
            n: f.n,
            row: planner.plan_fft_forward(n1),
            row_inv: planner.plan_fft_inverse(n1),
            col: planner.plan_fft_forward(n2),
            col_inv: planner.plan_fft_inverse(n2),
            inv_symbol,
        }
    }

    fn apply(&self, r: &[f64], out: &mut [f64]) {
        let [n1, n2] = self.n;
        let mut buf: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for row in buf.chunks_mut(n1) {
            self.row.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n2];
        for i in 0..n1 {
            for j in 0..n2 {
                col[j] = buf[j * n1 + i];
            }
            self.col.process(&mut col);
            for j in 0..n2 {
                col[j] *= self.inv_symbol[j * n1 + i];
            }
            self.col_inv.process(&mut col);
            for j in 0..n2 {
                buf[j * n1 + i] = col[j];
            }
        }
        for row in buf.chunks_mut(n1) {
            self.row_inv.process(row);
        }
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b.re;
        }
    }
}

fn project_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned CG on the zero-mean subspace. Returns (x, iterations,
/// relative residual).
fn pcg(f: &Faces, pre: &FftPreconditioner, b: &[f64]) -> Result<(Vec<f64>, usize, f64)> {
    let len = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; len];
    if bnorm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.to_vec();
    project_mean(&mut r);
    let mut z = vec![0.0; len];
    pre.apply(&r, &mut z);
    project_mean(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; len];
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    for it in 1..=MAX_CG_ITERATIONS {
        f.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..len {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        project_mean(&mut x);
        project_mean(&mut r);
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel < CG_TOLERANCE {
            // Report the true residual, not the recursively updated one.
            f.apply(&x, &mut ap);
            let true_rel = ap.iter().zip(b).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt() / bnorm;
            return Ok((x, it, true_rel));
        }
        pre.apply(&r, &mut z);
        project_mean(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..len {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_CG_ITERATIONS,
        residual: rel,
    })
}

fn check_grid(n: [usize; 2]) -> Result<()> {
    for v in n {
        if v < 16 || !v.is_power_of_two() {
            return Err(Error::value(format!(
                "cell grid sizes must be powers of two >= 16, got {}x{}",
                n[0], n[1]
            )));
        }
    }
    Ok(())
}

/// Solves the cell problem for both directions.
pub fn solve_corrector(cell: &UnitCell, materials: &MaterialSet, n_grid: [usize; 2]) -> Result<CorrectorField> {
    check_grid(n_grid)?;
    cell.validate(n_grid)?;
    solve_unchecked(cell, materials, n_grid)
}

fn solve_unchecked(cell: &UnitCell, materials: &MaterialSet, n: [usize; 2]) -> Result<CorrectorField> {
    let faces = Faces::new(cell, materials, n);
    let pre = FftPreconditioner::new(&faces);
    let (c1, it1, r1) = pcg(&faces, &pre, &faces.rhs(0))?;
    let (c2, it2, r2) = pcg(&faces, &pre, &faces.rhs(1))?;
    Ok(CorrectorField {
        chi: [c1, c2],
        n,
        h: faces.h,
        iterations: [it1, it2],
        residual: [r1, r2],
    })
}

/// Face average of `a (e_j - G chi^j)`; entry `[k][j]` uses the `k`-faces.
pub fn effective_tensor(chi: &CorrectorField, cell: &UnitCell, materials: &MaterialSet) -> [[f64; 2]; 2] {
    let faces = Faces::new(cell, materials, chi.n);
    let [n1, n2] = chi.n;
    let mut a = [[0.0; 2]; 2];
    for j in 0..n2 {
        for i in 0..n1 {
            let k = j * n1 + i;
            for (dir, c) in chi.chi.iter().enumerate() {
                let gx = (c[k] - c[j * n1 + (i + n1 - 1) % n1]) / chi.h[0];
                let gy = (c[k] - c[((j + n2 - 1) % n2) * n1 + i]) / chi.h[1];
                a[0][dir] += faces.ax[k] * (if dir == 0 { 1.0 } else { 0.0 } - gx);
                a[1][dir] += faces.ay[k] * (if dir == 1 { 1.0 } else { 0.0 } - gy);
            }
        }
    }
    let cells = (n1 * n2) as f64;
    a.iter_mut().flatten().for_each(|v| *v /= cells);
    a
}

/// Volume-weighted mixture of the permittivities.
pub fn effective_permittivity(cell: &UnitCell, materials: &MaterialSet) -> f64 {
    let f = cell.area_fraction();
    materials.eps_host + f * (materials.eps_b - materials.eps_host)
}

pub fn homogenize(cell: &UnitCell, materials: &MaterialSet, n_grid: [usize; 2]) -> Result<Homogenized> {
    let chi = solve_corrector(cell, materials, n_grid)?;
    let a = effective_tensor(&chi, cell, materials);
    let coarse_n = [n_grid[0] / 2, n_grid[1] / 2];
    let coarse = solve_unchecked(cell, materials, coarse_n)?;
    let ac = effective_tensor(&coarse, cell, materials);
    let mut richardson = [[0.0; 2]; 2];
    for k in 0..2 {
        for j in 0..2 {
            richardson[k][j] = (a[k][j] - ac[k][j]).abs();
        }
    }
    Ok(Homogenized {
        medium: EffectiveMedium {
            a,
            eps_minus: effective_permittivity(cell, materials),
        },
        richardson,
        symmetry_defect: (a[0][1] - a[1][0]).abs(),
        n_grid,
        cg_iterations: chi.iterations,
        residual: chi.residual,
    })
}
