//! Boundary-layer strip problem behind the thin-layer transmission conditions,
//! and the transmission coefficients built from it.
//!
//! The strip `(0,1) x (-L, L)` is meshed by a mapped quadrilateral grid, split
//! into triangles, whose rows follow `y2 = 0` and `y2 = f(y1)` exactly. The
//! corrector is the P1 finite-element solution of
//! `div(A~ grad Psi) = c nu (delta_Gamma1 + delta_Gamma0)`,
//! `c = 1/mu_cl - 1/mu_plus`, with `nu` the unit normal pointing out of the
//! layer (up on Gamma1, down on Gamma0), periodic in `y1`, homogeneous
//! Neumann at `y2 = +-L`, normalized to vanish at the bottom.

use serde::{Deserialize, Serialize};

use crate::homogenization::EffectiveMedium;
use crate::model::{LayerProfile, MaterialSet};
use crate::sparse::{solve_spd, Coo};
use crate::{Error, Result};

/// Distance by which the strip must extend beyond the layer on both sides.
pub const DECAY_MARGIN: f64 = 5.0;
pub const DEFAULT_STRIP_GRID: [usize; 2] = [128, 32];
const DECAY_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-9;

/// Nodes of one interface curve of the strip mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct StripCurve {
    pub points: Vec<[f64; 2]>,
    /// Unit normal pointing out of the layer.
    pub normals: Vec<[f64; 2]>,
    /// Arclength weights of the piecewise-linear trace.
    pub weights: Vec<f64>,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripSolution {
    /// Corrector components at the mesh nodes, `node = row * n1 + column`.
    pub psi_field: [Vec<f64>; 2],
    pub psi0: [f64; 2],
    pub truncation_l: f64,
    pub n1: usize,
    /// `y2` coordinate of every node, same indexing as the field.
    pub node_y2: Vec<f64>,
    pub gamma0: StripCurve,
    pub gamma1: StripCurve,
    pub residual: f64,
    /// Largest deviation from the far-field limits at the truncation edges,
    /// relative to the decay tolerance scale.
    pub decay_defect: f64,
}

impl StripSolution {
    pub fn rows(&self) -> usize {
        self.node_y2.len() / self.n1
    }

    pub fn value(&self, comp: usize, row: usize, col: usize) -> f64 {
        self.psi_field[comp][row * self.n1 + col % self.n1]
    }

    pub fn sup_norm(&self) -> f64 {
        self.psi_field
            .iter()
            .flatten()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Coefficients of the generalized transmission conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionCoefficients {
    pub s: f64,
    pub psi: [f64; 2],
    pub phi1: [f64; 2],
    pub phi2: [f64; 2],
    pub phi3: f64,
    pub xi: f64,
    pub omega: f64,
}

impl TransmissionCoefficients {
    /// No layer: only `s` is retained.
    pub fn zero(s: f64, omega: f64) -> Self {
        TransmissionCoefficients {
            s,
            psi: [0.0; 2],
            phi1: [0.0; 2],
            phi2: [0.0; 2],
            phi3: 0.0,
            xi: 0.0,
            omega,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("coefficients serialize")
    }
}

/// `g(s) = (e^{bs} - 1)/(e^b - 1)`, the identity for `b = 0`.
fn stretch(s: f64, b: f64) -> f64 {
    if b == 0.0 {
        s
    } else {
        (b * s).exp_m1() / b.exp_m1()
    }
}

/// Stretch factor whose first step is `h0` on a span `len` split in `n` steps.
fn stretch_factor(len: f64, n: usize, h0: f64) -> f64 {
    let target = h0 / len;
    let step = |b: f64| (b / n as f64).exp_m1() / b.exp_m1();
    if target >= 1.0 / n as f64 {
        return 0.0;
    }
    let (mut lo, mut hi) = (1e-12_f64, 200.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if step(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct Mesh {
    n1: usize,
    /// Rows of Gamma0 and Gamma1.
    r0: usize,
    r1: usize,
    y2: Vec<f64>,
}

impl Mesh {
    fn new(profile: &LayerProfile, l: f64, n: [usize; 2]) -> Mesh {
        let (n1, n2) = (n[0], n[1]);
        let n_out = 2 * n1;
        let h0 = (profile.min_value() / n2 as f64).min(1.0 / n1 as f64);
        let f: Vec<f64> = (0..n1).map(|i| profile.value(i as f64 / n1 as f64)).collect();
        let fmean = profile.integral();
        let b_low = stretch_factor(l, n_out, h0);
        let b_up = stretch_factor(l - fmean, n_out, h0);
        let rows = 2 * n_out + n2 + 1;
        let mut y2 = vec![0.0; rows * n1];
        for r in 0..rows {
            for i in 0..n1 {
                y2[r * n1 + i] = if r <= n_out {
                    -l * stretch((n_out - r) as f64 / n_out as f64, b_low)
                } else if r <= n_out + n2 {
                    f[i] * (r - n_out) as f64 / n2 as f64
                } else {
                    let s = (r - n_out - n2) as f64 / n_out as f64;
                    f[i] + (l - f[i]) * stretch(s, b_up)
                };
            }
        }
        Mesh {
            n1,
            r0: n_out,
            r1: n_out + n2,
            y2,
        }
    }

    fn rows(&self) -> usize {
        self.y2.len() / self.n1
    }

    fn node(&self, r: usize, i: usize) -> usize {
        r * self.n1 + i % self.n1
    }

    /// Coordinates with the periodic column `n1` unwrapped to `y1 = 1`.
    fn point(&self, r: usize, i: usize) -> [f64; 2] {
        [i as f64 / self.n1 as f64, self.y2[self.node(r, i)]]
    }

    fn curve(&self, r: usize, outward_up: bool) -> StripCurve {
        let n1 = self.n1;
        let mut normals = vec![[0.0; 2]; n1];
        let mut weights = vec![0.0; n1];
        for i in 0..n1 {
            let (a, b) = (self.point(r, i), self.point(r, i + 1));
            let d = [b[0] - a[0], b[1] - a[1]];
            let len = d[0].hypot(d[1]);
            let nu = if outward_up { [-d[1], d[0]] } else { [d[1], -d[0]] };
            for k in [i, (i + 1) % n1] {
                weights[k] += 0.5 * len;
                normals[k][0] += 0.5 * nu[0];
                normals[k][1] += 0.5 * nu[1];
            }
        }
        for v in &mut normals {
            let m = v[0].hypot(v[1]);
            v[0] /= m;
            v[1] /= m;
        }
        StripCurve {
            points: (0..n1).map(|i| self.point(r, i)).collect(),
            normals,
            weights,
            nodes: (0..n1).map(|i| self.node(r, i)).collect(),
        }
    }
}

fn symmetric_part(a: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let s = 0.5 * (a[0][1] + a[1][0]);
    [[a[0][0], s], [s, a[1][1]]]
}

/// Solves the strip problem on `(0,1) x (-l, l)`.
///
/// `n_grid = [n1, n2]`: `n1` columns, `n2` rows across the layer; each
/// outer zone gets `2 n1` geometrically graded rows.
pub fn solve_strip(
    profile: &LayerProfile,
    materials: &MaterialSet,
    a: &EffectiveMedium,
    l: f64,
    n_grid: [usize; 2],
) -> Result<StripSolution> {
    profile.validate()?;
    materials.validate()?;
    a.validate()?;
    let fmax = profile.max_value();
    if !(l >= fmax + DECAY_MARGIN) {
        return Err(Error::TruncationTooTight(format!(
            "L = {l} must be at least max f + {DECAY_MARGIN} = {}",
            fmax + DECAY_MARGIN
        )));
    }
    let (n1, n2) = (n_grid[0], n_grid[1]);
    if n1 < 8 * profile.harmonics().max(1) || n2 < 2 {
        return Err(Error::value(format!(
            "strip grid {n1}x{n2} under-resolves a profile with {} harmonics",
            profile.harmonics()
        )));
    }
    let mesh = Mesh::new(profile, l, n_grid);
    let rows = mesh.rows();
    let nodes = rows * n1;
    let c = 1.0 / materials.mu_cl - 1.0 / materials.mu_plus;
    let lower = symmetric_part(&a.a);
    let iso = |v: f64| [[v, 0.0], [0.0, v]];

    // Stiffness with node 0 pinned: unknown index = node - 1.
    let mut k = Coo::<f64>::new(nodes - 1);
    let mut full = Coo::<f64>::new(nodes);
    for r in 0..rows - 1 {
        let coef = if r < mesh.r0 {
            lower
        } else if r < mesh.r1 {
            iso(1.0 / materials.mu_cl)
        } else {
            iso(1.0 / materials.mu_plus)
        };
        for i in 0..n1 {
            let quad = [(r, i), (r, i + 1), (r + 1, i + 1), (r + 1, i)];
            for tri in [[quad[0], quad[1], quad[2]], [quad[0], quad[2], quad[3]]] {
                let p = tri.map(|(rr, ii)| mesh.point(rr, ii));
                let idx = tri.map(|(rr, ii)| mesh.node(rr, ii));
                let local = p1_stiffness(p, &coef);
                for x in 0..3 {
                    for y in 0..3 {
                        full.push(idx[x], idx[y], local[x][y]);
                        if idx[x] > 0 && idx[y] > 0 {
                            k.push(idx[x] - 1, idx[y] - 1, local[x][y]);
                        }
                    }
                }
            }
        }
    }

    // Load: -c * int_Gamma nu_k v for both curves.
    let gamma0 = mesh.curve(mesh.r0, false);
    let gamma1 = mesh.curve(mesh.r1, true);
    let mut load = [vec![0.0; nodes], vec![0.0; nodes]];
    for (row, up) in [(mesh.r0, false), (mesh.r1, true)] {
        for i in 0..n1 {
            let (a, b) = (mesh.point(row, i), mesh.point(row, i + 1));
            let d = [b[0] - a[0], b[1] - a[1]];
            let nu_len = if up { [-d[1], d[0]] } else { [d[1], -d[0]] };
            for node in [mesh.node(row, i), mesh.node(row, i + 1)] {
                for comp in 0..2 {
                    load[comp][node] -= c * 0.5 * nu_len[comp];
                }
            }
        }
    }

    let mut psi_field = [vec![0.0; nodes], vec![0.0; nodes]];
    let mut residual = 0.0;
    if c != 0.0 {
        let rhs: Vec<Vec<f64>> = load.iter().map(|b| b[1..].to_vec()).collect();
        let sol = solve_spd(&k, &rhs)?;
        for comp in 0..2 {
            psi_field[comp][1..].copy_from_slice(&sol[comp]);
            let kx = full.matvec(&psi_field[comp]);
            let num: f64 = kx.iter().zip(&load[comp]).map(|(x, b)| (x - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = load[comp].iter().map(|b| b * b).sum::<f64>().sqrt();
            if den > 0.0 {
                residual = f64::max(residual, num / den);
            }
            let bottom = psi_field[comp][..n1].iter().sum::<f64>() / n1 as f64;
            psi_field[comp].iter_mut().for_each(|v| *v -= bottom);
        }
        if residual > RESIDUAL_TOL {
            return Err(Error::ResidualTooHigh {
                residual,
                limit: RESIDUAL_TOL,
            });
        }
    }

    let top = (rows - 1) * n1;
    let psi0 = [0, 1].map(|comp| psi_field[comp][top..].iter().sum::<f64>() / n1 as f64);
    let sup = psi_field
        .iter()
        .flatten()
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    let mut decay_defect: f64 = 0.0;
    for comp in 0..2 {
        for i in 0..n1 {
            let lo = psi_field[comp][i].abs() / (DECAY_TOL * sup.max(f64::MIN_POSITIVE));
            let hi = (psi_field[comp][top + i] - psi0[comp]).abs() / (DECAY_TOL * (1.0 + psi0[comp].abs()));
            decay_defect = decay_defect.max(lo).max(hi);
        }
    }
    if sup > 0.0 && decay_defect >= 1.0 {
        return Err(Error::TruncationTooTight(format!(
            "corrector has not decayed at y2 = +-{l} (defect {decay_defect:.3e} x tolerance)"
        )));
    }

    Ok(StripSolution {
        psi_field,
        psi0,
        truncation_l: l,
        n1,
        node_y2: mesh.y2,
        gamma0,
        gamma1,
        residual,
        decay_defect,
    })
}

/// Element matrix `area * grad(phi_a) . K grad(phi_b)` of a linear triangle.
fn p1_stiffness(p: [[f64; 2]; 3], k: &[[f64; 2]; 2]) -> [[f64; 3]; 3] {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let area = 0.5 * det.abs();
    // grad(phi_a) = (y_{a+1} - y_{a+2}, x_{a+2} - x_{a+1}) / det
    let g: [[f64; 2]; 3] = std::array::from_fn(|a| {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        [(p[b][1] - p[c][1]) / det, (p[c][0] - p[b][0]) / det]
    });
    let mut m = [[0.0; 3]; 3];
    for a in 0..3 {
        let kg = [
            k[0][0] * g[a][0] + k[0][1] * g[a][1],
            k[1][0] * g[a][0] + k[1][1] * g[a][1],
        ];
        for b in 0..3 {
            m[b][a] = area * (g[b][0] * kg[0] + g[b][1] * kg[1]);
        }
    }
    m
}

/// Assembles `s, psi, phi1, phi2, phi3` at scale `xi` and frequency `omega`.
pub fn layer_coefficients(
    strip: &StripSolution,
    profile: &LayerProfile,
    materials: &MaterialSet,
    a: &EffectiveMedium,
    xi: f64,
    omega: f64,
) -> TransmissionCoefficients {
    let m = materials;
    let mean = profile.integral();
    let s = a.a[1][0];
    let mut phi1 = [0.0; 2];
    for (comp, out) in phi1.iter_mut().enumerate() {
        let field = &strip.psi_field[comp];
        let on_gamma0: f64 = strip
            .gamma0
            .nodes
            .iter()
            .zip(&strip.gamma0.weights)
            .map(|(&n, w)| w * field[n])
            .sum();
        // nu_1 |segment| = -(f_{i+1} - f_i) exactly on each straight segment
        let n1 = strip.n1;
        let pts = &strip.gamma1.points;
        let nodes = &strip.gamma1.nodes;
        let on_gamma1: f64 = (0..n1)
            .map(|i| {
                let j = (i + 1) % n1;
                -(pts[j][1] - pts[i][1]) * 0.5 * (field[nodes[i]] + field[nodes[j]])
            })
            .sum();
        *out = xi * (-s * on_gamma0 + (1.0 / m.mu_plus - 1.0 / m.mu_cl) * on_gamma1);
    }
    TransmissionCoefficients {
        s,
        psi: [xi * strip.psi0[0], xi * strip.psi0[1]],
        phi1,
        phi2: [0.0, xi * (1.0 / m.mu_cl - 1.0 / m.mu_plus) * mean],
        phi3: xi * omega * omega * (m.eps_plus * m.mu_plus / m.mu_cl - m.eps_cl) * mean,
        xi,
        omega,
    }
}

/// Strip solve and coefficient assembly in one call, with `L = max f + 5`
/// unless given.
pub fn transmission_coefficients(
    profile: &LayerProfile,
    materials: &MaterialSet,
    a: &EffectiveMedium,
    omega: f64,
    l: Option<f64>,
    n_grid: [usize; 2],
) -> Result<(StripSolution, TransmissionCoefficients)> {
    let l = l.unwrap_or(profile.max_value() + DECAY_MARGIN);
    let strip = solve_strip(profile, materials, a, l, n_grid)?;
    let coeffs = layer_coefficients(&strip, profile, materials, a, profile.xi, omega);
    Ok((strip, coeffs))
}
