//! Finite-difference frequency-domain solver of the full multiscale problem
//! and of the effective problem, used as the validation oracle.
//!
//! Unknowns sit at the nodes of a uniform grid. The divergence-form operator
//! uses harmonic face means of the nodal coefficients, a nine-point cross term
//! for anisotropic tensors and complex coordinate stretching in the absorbing
//! layers, so the assembled matrix is complex symmetric away from the
//! effective interface.

use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::boundary_layer::TransmissionCoefficients;
use crate::field::{FieldGrid, GridSpec};
use crate::homogenization::EffectiveMedium;
use crate::model::{IncidentWave, InclusionD, LayerProfile, MaterialSet, UnitCell};
use crate::sparse::{solve_complex, Coo};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Discrete residual accepted after the direct solve.
pub const RESIDUAL_LIMIT: f64 = 1e-8;
/// Factorization budget when `CAMOSCAT_MEMORY_BUDGET` is unset.
pub const DEFAULT_MEMORY_BUDGET: u64 = 4_000_000_000;
/// Resolution floors checked before assembly.
pub const MIN_POINTS_PER_WAVELENGTH: f64 = 20.0;
pub const MIN_POINTS_PER_PERIOD: f64 = 8.0;
/// Sub-samples per direction when averaging the inclusion over a node cell.
const AVERAGING_SAMPLES: usize = 8;
/// Boundary samples used to bound the inclusion.
const BOUND_SAMPLES: usize = 1024;

/// Uniform node grid: node `(i, j)` sits at `origin + h (i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdGrid {
    pub origin: [f64; 2],
    pub h: f64,
    pub n: [usize; 2],
}

impl FdGrid {
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + self.h * i as f64, self.origin[1] + self.h * j as f64]
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spec(&self) -> GridSpec {
        let end = self.point(self.n[0] - 1, self.n[1] - 1);
        GridSpec {
            x1: [self.origin[0], end[0]],
            x2: [self.origin[1], end[1]],
            n: self.n,
        }
    }

    /// Extents of the node set.
    pub fn extent(&self) -> [[f64; 2]; 2] {
        let s = self.spec();
        [s.x1, s.x2]
    }

    /// Grid with half the spacing whose even nodes coincide with these nodes.
    /// A Bloch-periodic direction keeps its period.
    pub fn refined(&self, periodic_x1: bool) -> FdGrid {
        FdGrid {
            origin: self.origin,
            h: 0.5 * self.h,
            n: [
                if periodic_x1 { 2 * self.n[0] } else { 2 * self.n[0] - 1 },
                2 * self.n[1] - 1,
            ],
        }
    }

    fn row_of(&self, x2: f64) -> Option<usize> {
        let u = (x2 - self.origin[1]) / self.h;
        let j = u.round();
        ((u - j).abs() < 1e-6 && j >= 0.0 && (j as usize) < self.n[1]).then_some(j as usize)
    }
}

/// Lateral boundary treatment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Lateral {
    /// `u(x1 + W, x2) = e^{i k1 W} u(x1, x2)` with `W = n1 h`.
    Bloch { k1: f64 },
    /// Absorbing layers on both lateral sides.
    Absorbing,
}

/// Complex stretching `s = 1 + i strength (d / L)^2` over the outer
/// `thickness` of the grid; order left, right, bottom, top.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Absorber {
    pub thickness: [f64; 4],
    pub strength: f64,
}

impl Absorber {
    pub fn uniform(thickness: f64) -> Self {
        Absorber {
            thickness: [thickness; 4],
            strength: 5.0,
        }
    }

    fn stretch(&self, x: f64, lo: f64, hi: f64, lo_l: f64, hi_l: f64) -> Complex64 {
        let d = if lo_l > 0.0 && x < lo + lo_l {
            (lo + lo_l - x) / lo_l
        } else if hi_l > 0.0 && x > hi - hi_l {
            (x - (hi - hi_l)) / hi_l
        } else {
            0.0
        };
        Complex64::new(1.0, self.strength * d * d)
    }
}

/// Coefficients of the direct problem.
#[derive(Debug, Clone, PartialEq)]
pub enum FdMedium {
    Uniform {
        mu: f64,
        eps: f64,
    },
    /// Homogeneous medium with a symmetric coefficient tensor.
    Anisotropic {
        a: [[f64; 2]; 2],
        eps: f64,
    },
    /// Upper medium, thin rough layer and micro-structured lower half-space,
    /// optionally with the buried inclusion.
    Multiscale {
        materials: MaterialSet,
        layer: LayerProfile,
        cell: UnitCell,
        inclusion: Option<InclusionD>,
        substrate: Option<Substrate>,
        /// Blend host and B by their area fraction in each node cell instead
        /// of sampling the indicator at the node.
        cell_averaging: bool,
    },
    /// Effective problem: upper medium over the effective lower medium with
    /// the transmission conditions on `x2 = 0`.
    Effective {
        materials: MaterialSet,
        medium: EffectiveMedium,
        coeffs: TransmissionCoefficients,
        inclusion: Option<InclusionD>,
    },
}

/// Homogenized continuation of the microstructure below `x2 = -depth`, so
/// the bottom absorber acts on a homogeneous medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Substrate {
    pub depth: f64,
    pub medium: EffectiveMedium,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct NodeCoefficients {
    a: [[f64; 2]; 2],
    eps: f64,
}

impl NodeCoefficients {
    fn isotropic(mu: f64, eps: f64) -> Self {
        NodeCoefficients {
            a: [[1.0 / mu, 0.0], [0.0, 1.0 / mu]],
            eps,
        }
    }

    fn effective(medium: &EffectiveMedium) -> Self {
        let s = 0.5 * (medium.a[0][1] + medium.a[1][0]);
        NodeCoefficients {
            a: [[medium.a[0][0], s], [s, medium.a[1][1]]],
            eps: medium.eps_minus,
        }
    }

    fn blend(self, other: NodeCoefficients, f: f64) -> Self {
        let mut a = self.a;
        for r in 0..2 {
            for c in 0..2 {
                a[r][c] = (1.0 - f) * self.a[r][c] + f * other.a[r][c];
            }
        }
        NodeCoefficients {
            a,
            eps: (1.0 - f) * self.eps + f * other.eps,
        }
    }
}

impl FdMedium {
    /// Upper-medium `(mu, eps)` seen by incident plane waves.
    pub fn upper(&self) -> (f64, f64) {
        match self {
            FdMedium::Uniform { mu, eps } => (*mu, *eps),
            FdMedium::Anisotropic { a, eps } => (1.0 / a[1][1], *eps),
            FdMedium::Multiscale { materials, .. } | FdMedium::Effective { materials, .. } => {
                (materials.mu_plus, materials.eps_plus)
            }
        }
    }

    /// Largest local wavenumber over all media present.
    pub fn max_wavenumber(&self, omega: f64) -> f64 {
        let iso = |mu: f64, eps: f64| omega * (mu * eps).sqrt();
        let aniso = |a: &[[f64; 2]; 2], eps: f64| {
            let s = 0.5 * (a[0][1] + a[1][0]);
            let tr = 0.5 * (a[0][0] + a[1][1]);
            let disc = (0.25 * (a[0][0] - a[1][1]).powi(2) + s * s).sqrt();
            omega * (eps / (tr - disc)).sqrt()
        };
        let with_d = |k: f64| match self.inclusion() {
            Some((_, m)) => k.max(iso(m.mu_d, m.eps_d)),
            None => k,
        };
        match self {
            FdMedium::Uniform { mu, eps } => iso(*mu, *eps),
            FdMedium::Anisotropic { a, eps } => aniso(a, *eps),
            FdMedium::Multiscale {
                materials: m,
                substrate,
                ..
            } => with_d(
                iso(m.mu_plus, m.eps_plus)
                    .max(iso(m.mu_cl, m.eps_cl))
                    .max(iso(m.mu_host, m.eps_host))
                    .max(iso(m.mu_b, m.eps_b))
                    .max(substrate.map_or(0.0, |s| aniso(&s.medium.a, s.medium.eps_minus))),
            ),
            FdMedium::Effective {
                materials, medium, ..
            } => with_d(iso(materials.mu_plus, materials.eps_plus).max(aniso(&medium.a, medium.eps_minus))),
        }
    }

    fn inclusion(&self) -> Option<(&InclusionD, &MaterialSet)> {
        match self {
            FdMedium::Multiscale {
                inclusion: Some(d),
                materials,
                ..
            }
            | FdMedium::Effective {
                inclusion: Some(d),
                materials,
                ..
            } => Some((d, materials)),
            _ => None,
        }
    }

    /// Coefficients at a node, the lower side for effective interface nodes.
    /// `bound` is the centre and bounding radius of the inclusion.
    fn sample(&self, x: [f64; 2], h: f64, bound: Option<([f64; 2], f64)>) -> NodeCoefficients {
        let background = match self {
            FdMedium::Uniform { mu, eps } => return NodeCoefficients::isotropic(*mu, *eps),
            FdMedium::Anisotropic { a, eps } => return NodeCoefficients { a: *a, eps: *eps },
            FdMedium::Multiscale {
                materials,
                layer,
                cell,
                substrate,
                cell_averaging,
                ..
            } => {
                let m = materials;
                if let Some(sub) = substrate.filter(|s| x[1] < -s.depth) {
                    NodeCoefficients::effective(&sub.medium)
                } else if x[1] >= 0.0 {
                    if x[1] < layer.xi * layer.value(x[0] / layer.xi) {
                        NodeCoefficients::isotropic(m.mu_cl, m.eps_cl)
                    } else {
                        NodeCoefficients::isotropic(m.mu_plus, m.eps_plus)
                    }
                } else if *cell_averaging {
                    let f = cell_fraction(|p| cell.contains([p[0] / layer.xi, p[1] / layer.xi]), x, h);
                    NodeCoefficients::isotropic(m.mu_host, m.eps_host).blend(NodeCoefficients::isotropic(m.mu_b, m.eps_b), f)
                } else if cell.contains([x[0] / layer.xi, x[1] / layer.xi]) {
                    NodeCoefficients::isotropic(m.mu_b, m.eps_b)
                } else {
                    NodeCoefficients::isotropic(m.mu_host, m.eps_host)
                }
            }
            FdMedium::Effective {
                materials, medium, ..
            } => {
                if x[1] > 0.0 {
                    NodeCoefficients::isotropic(materials.mu_plus, materials.eps_plus)
                } else {
                    NodeCoefficients::effective(medium)
                }
            }
        };
        match (self.inclusion(), bound) {
            (Some((d, m)), Some((c, r))) => {
                if (x[0] - c[0]).hypot(x[1] - c[1]) > r + h {
                    return background;
                }
                let f = cell_fraction(|p| d.contains(p), x, h);
                if f > 0.0 {
                    background.blend(NodeCoefficients::isotropic(m.mu_d, m.eps_d), f)
                } else {
                    background
                }
            }
            _ => background,
        }
    }

    fn inclusion_bound(&self) -> Option<([f64; 2], f64)> {
        self.inclusion().map(|(d, _)| {
            let c = d.center();
            let r = d
                .samples(BOUND_SAMPLES)
                .iter()
                .map(|p| (p[0] - c[0]).hypot(p[1] - c[1]))
                .fold(0.0, f64::max);
            // Sampled chords undershoot the curve by O(1/n^2).
            (c, r * (1.0 + 1e-3))
        })
    }
}

/// Area fraction of the set `inside` in the node cell of side `h` around `x`.
fn cell_fraction(inside: impl Fn([f64; 2]) -> bool, x: [f64; 2], h: f64) -> f64 {
    let m = AVERAGING_SAMPLES;
    let mut count = 0;
    for a in 0..m {
        for b in 0..m {
            let p = [
                x[0] + h * ((a as f64 + 0.5) / m as f64 - 0.5),
                x[1] + h * ((b as f64 + 0.5) / m as f64 - 0.5),
            ];
            if inside(p) {
                count += 1;
            }
        }
    }
    count as f64 / (m * m) as f64
}

/// Excitation of the direct problem.
#[derive(Debug, Clone, PartialEq)]
pub enum FdSource {
    /// `L u = -delta(x - position)`, placed at the nearest node.
    Point { position: [f64; 2] },
    /// Plane wave in the upper medium injected across the total-field /
    /// scattered-field line `x2 = line` (a node row). Below the line the
    /// solution is the total field. Requires Bloch-periodic lateral
    /// boundaries with the matching `k1`.
    PlaneWave { wave: IncidentWave, line: f64 },
    /// Scattered field relative to a known `background` solution of the
    /// `reference` medium: the source is `-(L - L_ref) u_bg`, supported where
    /// the two media differ. The solution reported is `u_bg + u_s`.
    Background {
        field: Vec<Complex64>,
        reference: Box<FdMedium>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectProblem {
    pub grid: FdGrid,
    pub omega: f64,
    pub medium: FdMedium,
    pub lateral: Lateral,
    pub absorber: Absorber,
    pub source: FdSource,
}

/// Solution on the grid nodes.
#[derive(Debug, Clone)]
pub struct DirectSolution {
    pub grid: FdGrid,
    /// Total field at the nodes (upper trace on an effective interface row).
    pub field: FieldGrid,
    /// Lower traces on the effective interface row.
    pub lower_trace: Option<Vec<Complex64>>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveStats {
    pub unknowns: usize,
    pub nonzeros: usize,
    pub residual: f64,
    pub estimated_bytes: u64,
    pub seconds: f64,
}

/// Conservative estimate of the sparse LU footprint of a 2D grid problem.
pub fn estimated_factor_bytes(unknowns: usize) -> u64 {
    let n = unknowns.max(2) as f64;
    (300.0 * n * n.log2()) as u64
}

/// Memory budget from `CAMOSCAT_MEMORY_BUDGET` (bytes) or the default.
pub fn memory_budget() -> u64 {
    std::env::var("CAMOSCAT_MEMORY_BUDGET")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MEMORY_BUDGET)
}

/// Refuses factorizations whose estimated footprint exceeds `budget`.
pub fn check_memory(unknowns: usize, budget: u64) -> Result<u64> {
    let estimated_bytes = estimated_factor_bytes(unknowns);
    if estimated_bytes > budget {
        return Err(Error::OutOfMemory {
            estimated_bytes,
            budget_bytes: budget,
        });
    }
    Ok(estimated_bytes)
}

struct Assembly {
    matrix: Coo<Complex64>,
    /// Index of the lower-trace unknown of interface column `i` is `main + i`.
    interface_row: Option<usize>,
}

struct Stretching {
    /// Nodal and half-node stretch factors per direction.
    s1: Vec<Complex64>,
    s1_half: Vec<Complex64>,
    s2: Vec<Complex64>,
    s2_half: Vec<Complex64>,
}

impl DirectProblem {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(g.h > 0.0 && g.h.is_finite()) || g.n[0] < 3 || g.n[1] < 3 {
            return Err(Error::value("direct problem grid needs h > 0 and at least 3x3 nodes"));
        }
        if !(self.omega > 0.0) {
            return Err(Error::value("omega must be positive"));
        }
        let t = self.absorber.thickness;
        let [[x1a, x1b], [x2a, x2b]] = g.extent();
        if t.iter().any(|v| !(*v >= 0.0)) || t[0] + t[1] >= x1b - x1a || t[2] + t[3] >= x2b - x2a {
            return Err(Error::value("absorbing layers do not fit in the grid"));
        }
        if matches!(self.lateral, Lateral::Bloch { .. }) && (t[0] > 0.0 || t[1] > 0.0) {
            return Err(Error::value("Bloch-periodic boundaries exclude lateral absorbing layers"));
        }
        let lambda_min = TAU / self.medium.max_wavenumber(self.omega);
        if g.h > lambda_min / MIN_POINTS_PER_WAVELENGTH * (1.0 + 1e-9) {
            return Err(Error::value(format!(
                "grid spacing {} gives fewer than {MIN_POINTS_PER_WAVELENGTH} points per wavelength {lambda_min}",
                g.h
            )));
        }
        if let FdMedium::Multiscale { layer, .. } = &self.medium {
            if g.h > layer.xi / MIN_POINTS_PER_PERIOD * (1.0 + 1e-9) {
                return Err(Error::value(format!(
                    "grid spacing {} gives fewer than {MIN_POINTS_PER_PERIOD} points per period {}",
                    g.h, layer.xi
                )));
            }
        }
        let (mu, eps) = self.medium.upper();
        let lambda_plus = TAU / (self.omega * (mu * eps).sqrt());
        if t.iter().any(|v| *v > 0.0 && *v < lambda_plus * (1.0 - 1e-9)) {
            return Err(Error::value(format!(
                "absorbing layers must be at least one upper-medium wavelength ({lambda_plus}) thick"
            )));
        }
        if let FdMedium::Effective { .. } = self.medium {
            if g.row_of(0.0).is_none() {
                return Err(Error::value("effective problems need a node row on x2 = 0"));
            }
        }
        match &self.source {
            FdSource::PlaneWave { wave, line } => {
                wave.validate()?;
                let Lateral::Bloch { k1 } = self.lateral else {
                    return Err(Error::value("plane-wave injection requires Bloch-periodic lateral boundaries"));
                };
                let (mu, eps) = self.medium.upper();
                let kp = self.omega * (mu * eps).sqrt();
                if (k1 - kp * wave.theta[0]).abs() > 1e-9 * kp.max(1.0) || (wave.omega - self.omega).abs() > 1e-12 {
                    return Err(Error::value("Bloch wavenumber and frequency must match the incident wave"));
                }
                let j = g.row_of(*line).ok_or_else(|| Error::value("injection line must be a node row"))?;
                if j + 2 >= g.n[1] || *line > x2b - t[3] || !self.in_upper_medium(*line) {
                    return Err(Error::value("injection line must lie in the upper medium below the top absorber"));
                }
            }
            FdSource::Background { field, .. } => {
                if field.len() != g.len() {
                    return Err(Error::value("background field does not match the grid"));
                }
            }
            FdSource::Point { .. } => {}
        }
        Ok(())
    }

    fn in_upper_medium(&self, x2: f64) -> bool {
        match &self.medium {
            FdMedium::Uniform { .. } | FdMedium::Anisotropic { .. } => true,
            FdMedium::Multiscale { layer, .. } => x2 > layer.xi * layer.max_value(),
            FdMedium::Effective { .. } => x2 > 0.0,
        }
    }

    fn stretching(&self) -> Stretching {
        let g = &self.grid;
        let [[x1a, x1b], [x2a, x2b]] = g.extent();
        let t = self.absorber.thickness;
        let a = &self.absorber;
        let s1 = |x: f64| a.stretch(x, x1a, x1b, t[0], t[1]);
        let s2 = |x: f64| a.stretch(x, x2a, x2b, t[2], t[3]);
        Stretching {
            s1: (0..g.n[0]).map(|i| s1(g.point(i, 0)[0])).collect(),
            s1_half: (0..g.n[0]).map(|i| s1(g.point(i, 0)[0] + 0.5 * g.h)).collect(),
            s2: (0..g.n[1]).map(|j| s2(g.point(0, j)[1])).collect(),
            s2_half: (0..g.n[1]).map(|j| s2(g.point(0, j)[1] + 0.5 * g.h)).collect(),
        }
    }

    fn assemble(&self, medium: &FdMedium) -> Assembly {
        let g = &self.grid;
        let (n1, n2) = (g.n[0], g.n[1]);
        let h = g.h;
        let h2 = h * h;
        let w2 = self.omega * self.omega;
        let st = self.stretching();
        let bound = medium.inclusion_bound();
        let coef: Vec<NodeCoefficients> = (0..n2)
            .flat_map(|j| (0..n1).map(move |i| (i, j)))
            .map(|(i, j)| medium.sample(g.point(i, j), h, bound))
            .collect();
        let interface_row = match medium {
            FdMedium::Effective { .. } => g.row_of(0.0),
            _ => None,
        };
        // Upper-side coefficients of the interface row, seen from above.
        let upper = match medium {
            FdMedium::Effective { materials, .. } => {
                NodeCoefficients::isotropic(materials.mu_plus, materials.eps_plus)
            }
            _ => NodeCoefficients::isotropic(1.0, 1.0),
        };
        let at_from = |i: usize, j: usize, from_j: usize| -> &NodeCoefficients {
            match interface_row {
                Some(j0) if j == j0 && from_j > j0 => &upper,
                _ => &coef[j * n1 + i],
            }
        };
        let main = n1 * n2;
        let total = main + if interface_row.is_some() { n1 } else { 0 };
        let mut m = Coo::new(total);
        let (bloch, phase) = match self.lateral {
            Lateral::Bloch { k1 } => (true, (I * k1 * n1 as f64 * h).exp()),
            Lateral::Absorbing => (false, Complex64::new(1.0, 0.0)),
        };
        // Neighbour column with its Bloch factor.
        let east = |i: usize| -> Option<(usize, Complex64)> {
            if i + 1 < n1 {
                Some((i + 1, Complex64::new(1.0, 0.0)))
            } else if bloch {
                Some((0, phase))
            } else {
                None
            }
        };
        let west = |i: usize| -> Option<(usize, Complex64)> {
            if i > 0 {
                Some((i - 1, Complex64::new(1.0, 0.0)))
            } else if bloch {
                Some((n1 - 1, phase.inv()))
            } else {
                None
            }
        };
        // Unknown index of node (i, j) as seen from row `from_j`: below the
        // effective interface the interface row holds the lower trace.
        let idx = |i: usize, j: usize, from_j: usize| -> usize {
            match interface_row {
                Some(j0) if j == j0 && from_j < j0 => main + i,
                _ => j * n1 + i,
            }
        };
        let harmonic = |p: f64, q: f64| if p + q == 0.0 { 0.0 } else { 2.0 * p * q / (p + q) };
        for j in 0..n2 {
            if Some(j) == interface_row {
                continue;
            }
            let at = |i: usize, jj: usize| at_from(i, jj, j);
            for i in 0..n1 {
                let row = j * n1 + i;
                let c = at(i, j);
                let mut diag = st.s1[i] * st.s2[j] * w2 * c.eps;
                if let Some((ie, ph)) = east(i) {
                    let k = st.s2[j] / st.s1_half[i] * harmonic(c.a[0][0], at(ie, j).a[0][0]) / h2;
                    m.push(row, idx(ie, j, j), k * ph);
                    diag -= k;
                }
                if let Some((iw, ph)) = west(i) {
                    let k = st.s2[j] / st.s1_half[if i > 0 { i - 1 } else { n1 - 1 }]
                        * harmonic(c.a[0][0], at(iw, j).a[0][0])
                        / h2;
                    m.push(row, idx(iw, j, j), k * ph);
                    diag -= k;
                }
                if j + 1 < n2 {
                    let k = st.s1[i] / st.s2_half[j] * harmonic(c.a[1][1], at(i, j + 1).a[1][1]) / h2;
                    m.push(row, idx(i, j + 1, j), k);
                    diag -= k;
                }
                if j > 0 {
                    let k = st.s1[i] / st.s2_half[j - 1] * harmonic(c.a[1][1], at(i, j - 1).a[1][1]) / h2;
                    m.push(row, idx(i, j - 1, j), k);
                    diag -= k;
                }
                m.push(row, row, diag);
                // d1(a12 d2 u) + d2(a21 d1 u); the stretch factors cancel.
                let q = 1.0 / (4.0 * h2);
                let mut cross = |ii: Option<(usize, Complex64)>, jj: Option<usize>, w: Complex64| {
                    if let (Some((ii, ph)), Some(jj)) = (ii, jj) {
                        m.push(row, idx(ii, jj, j), w * ph);
                    }
                };
                let up = (j + 1 < n2).then_some(j + 1);
                let down = j.checked_sub(1);
                if let Some((ie, _)) = east(i) {
                    let a12 = at(ie, j).a[0][1];
                    if a12 != 0.0 {
                        cross(east(i), up, Complex64::new(a12 * q, 0.0));
                        cross(east(i), down, Complex64::new(-a12 * q, 0.0));
                    }
                }
                if let Some((iw, _)) = west(i) {
                    let a12 = at(iw, j).a[0][1];
                    if a12 != 0.0 {
                        cross(west(i), up, Complex64::new(-a12 * q, 0.0));
                        cross(west(i), down, Complex64::new(a12 * q, 0.0));
                    }
                }
                if let Some(ju) = up {
                    let a21 = at(i, ju).a[1][0];
                    if a21 != 0.0 {
                        cross(east(i), up, Complex64::new(a21 * q, 0.0));
                        cross(west(i), up, Complex64::new(-a21 * q, 0.0));
                    }
                }
                if let Some(jd) = down {
                    let a21 = at(i, jd).a[1][0];
                    if a21 != 0.0 {
                        cross(east(i), down, Complex64::new(-a21 * q, 0.0));
                        cross(west(i), down, Complex64::new(a21 * q, 0.0));
                    }
                }
            }
        }
        if let (Some(j0), FdMedium::Effective {
            materials,
            medium,
            coeffs,
            ..
        }) = (interface_row, medium)
        {
            self.interface_rows(&mut m, j0, materials, medium, coeffs, &st, &east, &west);
        }
        Assembly {
            matrix: m,
            interface_row,
        }
    }

    /// Transmission conditions on the interface row, with one-sided
    /// second-order normal derivatives:
    /// `U+ - psi . grad U+ - U- = 0` and
    /// `delta U+ + gamma d2 U+ - A21 d1 U- - A22 d2 U- = 0` with the
    /// tangential operators of the effective problem.
    #[allow(clippy::too_many_arguments)]
    fn interface_rows<E, W>(
        &self,
        m: &mut Coo<Complex64>,
        j0: usize,
        materials: &MaterialSet,
        medium: &EffectiveMedium,
        c: &TransmissionCoefficients,
        st: &Stretching,
        east: &E,
        west: &W,
    ) where
        E: Fn(usize) -> Option<(usize, Complex64)>,
        W: Fn(usize) -> Option<(usize, Complex64)>,
    {
        let g = &self.grid;
        let (n1, h) = (g.n[0], g.h);
        let main = n1 * g.n[1];
        let kp2 = self.omega * self.omega * materials.eps_plus * materials.mu_plus;
        let up = |i: usize, j: usize| j * n1 + i;
        let (a21, a22) = (medium.a[1][0], medium.a[1][1]);
        let mixed = c.phi1[1] + c.phi2[0];
        for i in 0..n1 {
            let plus = up(i, j0);
            let minus = main + i;
            // Tangential first and second differences with stretching.
            let s = st.s1[i];
            let mut d1: Vec<(usize, Complex64)> = Vec::new();
            let mut d11: Vec<(usize, Complex64)> = Vec::new();
            let mut d11_center = Complex64::new(0.0, 0.0);
            if let Some((ie, ph)) = east(i) {
                d1.push((ie, ph / (2.0 * h * s)));
                let w = 1.0 / (s * st.s1_half[i] * h * h);
                d11.push((ie, w * ph));
                d11_center -= w;
            }
            if let Some((iw, ph)) = west(i) {
                d1.push((iw, -ph / (2.0 * h * s)));
                let w = 1.0 / (s * st.s1_half[if i > 0 { i - 1 } else { n1 - 1 }] * h * h);
                d11.push((iw, w * ph));
                d11_center -= w;
            }
            // One-sided normal derivatives.
            let d2p = [(0usize, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)];
            // First row: trace jump, scaled by 1/h^2.
            let r = plus;
            let w = 1.0 / (h * h);
            m.push(r, plus, Complex64::new(w, 0.0));
            m.push(r, minus, Complex64::new(-w, 0.0));
            for &(col, v) in &d1 {
                m.push(r, up(col, j0), -c.psi[0] * v * w);
            }
            for &(dj, v) in &d2p {
                m.push(r, up(i, j0 + dj), Complex64::new(-c.psi[1] * v * w, 0.0));
            }
            // Second row: flux jump, scaled by 1/h.
            let r = minus;
            let w = 1.0 / h;
            let t11 = c.phi2[1] - c.phi1[0];
            m.push(r, plus, Complex64::new((c.phi2[1] * kp2 - c.phi3) * w, 0.0) + t11 * d11_center * w);
            for &(col, v) in &d11 {
                m.push(r, up(col, j0), t11 * v * w);
            }
            for &(dj, v) in &d2p {
                m.push(r, up(i, j0 + dj), Complex64::new(v / materials.mu_plus * w, 0.0));
                for &(col, t) in &d1 {
                    m.push(r, up(col, j0 + dj), -mixed * t * v * w);
                }
            }
            for &(col, v) in &d1 {
                m.push(r, main + col, -a21 * v * w);
            }
            // d2 U- = (1.5 U-_0 - 2 U_{-1} + 0.5 U_{-2}) / h.
            m.push(r, minus, Complex64::new(-a22 * 1.5 / h * w, 0.0));
            m.push(r, up(i, j0 - 1), Complex64::new(a22 * 2.0 / h * w, 0.0));
            m.push(r, up(i, j0 - 2), Complex64::new(-a22 * 0.5 / h * w, 0.0));
        }
    }

    /// Assembles, factorizes and solves.
    pub fn solve(&self) -> Result<DirectSolution> {
        self.validate()?;
        let start = Instant::now();
        let g = self.grid;
        let asm = self.assemble(&self.medium);
        let unknowns = asm.matrix.n;
        let estimated_bytes = check_memory(unknowns, memory_budget())?;
        let main = g.len();
        let st = self.stretching();
        let mut rhs = vec![Complex64::new(0.0, 0.0); unknowns];
        // Incident values to add back on scattered-field rows.
        let mut scattered_rows: Option<(usize, Vec<Complex64>)> = None;
        let mut background: Option<&[Complex64]> = None;
        match &self.source {
            FdSource::Point { position } => {
                let i = (((position[0] - g.origin[0]) / g.h).round().max(0.0) as usize).min(g.n[0] - 1);
                let j = (((position[1] - g.origin[1]) / g.h).round().max(0.0) as usize).min(g.n[1] - 1);
                rhs[j * g.n[0] + i] = -st.s1[i] * st.s2[j] / (g.h * g.h);
            }
            FdSource::PlaneWave { wave, line } => {
                let js = g.row_of(*line).expect("validated");
                let k2 = discrete_vertical_wavenumber(self, wave)?;
                let Lateral::Bloch { k1 } = self.lateral else { unreachable!() };
                let inc: Vec<Complex64> = (0..g.n[1])
                    .flat_map(|j| (0..g.n[0]).map(move |i| (i, j)))
                    .map(|(i, j)| {
                        let x = g.point(i, j);
                        (I * (k1 * x[0] + k2 * x[1])).exp()
                    })
                    .collect();
                let total = |idx: usize| idx >= main || idx / g.n[0] <= js;
                for &(r, c, v) in &asm.matrix.entries {
                    if c >= main {
                        continue;
                    }
                    match (total(r), total(c)) {
                        (true, false) => rhs[r] -= v * inc[c],
                        (false, true) => rhs[r] += v * inc[c],
                        _ => {}
                    }
                }
                scattered_rows = Some((js, inc));
            }
            FdSource::Background { field, reference } => {
                let ref_asm = self.assemble(reference);
                if ref_asm.matrix.n != unknowns {
                    return Err(Error::value("reference medium changes the unknown layout"));
                }
                let mut x = field.clone();
                x.resize(unknowns, Complex64::new(0.0, 0.0));
                let lu = asm.matrix.matvec(&x);
                let lr = ref_asm.matrix.matvec(&x);
                for r in 0..unknowns {
                    rhs[r] = lr[r] - lu[r];
                }
                background = Some(field);
            }
        }
        let sol = solve_complex(&asm.matrix, &rhs)?;
        let res = asm.matrix.matvec(&sol);
        let scale = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let err = res.iter().zip(&rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let residual = if scale > 0.0 { err / scale } else { err };
        if !(residual < RESIDUAL_LIMIT) {
            return Err(Error::ResidualTooHigh {
                residual,
                limit: RESIDUAL_LIMIT,
            });
        }
        let mut values: Vec<Complex64> = sol[..main].to_vec();
        if let Some((js, inc)) = scattered_rows {
            for (idx, v) in values.iter_mut().enumerate() {
                if idx / g.n[0] > js {
                    *v += inc[idx];
                }
            }
        }
        let mut lower_trace = asm.interface_row.map(|_| sol[main..].to_vec());
        if let Some(bg) = background {
            for (v, b) in values.iter_mut().zip(bg) {
                *v += b;
            }
            if let (Some(lt), Some(j0)) = (lower_trace.as_mut(), asm.interface_row) {
                for (i, v) in lt.iter_mut().enumerate() {
                    *v += bg[j0 * g.n[0] + i];
                }
            }
        }
        Ok(DirectSolution {
            grid: g,
            field: FieldGrid {
                spec: g.spec(),
                values,
                excluded: 0,
            },
            lower_trace,
            stats: SolveStats {
                unknowns,
                nonzeros: asm.matrix.entries.len(),
                residual,
                estimated_bytes,
                seconds: start.elapsed().as_secs_f64(),
            },
        })
    }
}

/// Vertical wavenumber of the plane wave that solves the discrete
/// homogeneous upper-medium equations exactly, so the injection leaves no
/// spurious field in the scattered-field region.
fn discrete_vertical_wavenumber(p: &DirectProblem, wave: &IncidentWave) -> Result<f64> {
    let Lateral::Bloch { k1 } = p.lateral else {
        return Err(Error::value("plane-wave injection requires Bloch-periodic lateral boundaries"));
    };
    let (mu, eps) = p.medium.upper();
    let h = p.grid.h;
    let k2 = p.omega * p.omega * mu * eps;
    let c = 2.0 - (k1 * h).cos() - 0.5 * k2 * h * h;
    if !(c.abs() < 1.0) {
        return Err(Error::value("grid too coarse for the incident wave"));
    }
    Ok(wave.theta[1].signum() * c.acos() / h)
}

/// Plane wave of the upper medium sampled at the grid nodes, for use as a
/// [`FdSource::Background`] field over the uniform upper medium.
pub fn plane_wave_on_grid(grid: &FdGrid, wave: &IncidentWave, mu: f64, eps: f64) -> Vec<Complex64> {
    let k = wave.omega * (mu * eps).sqrt();
    (0..grid.n[1])
        .flat_map(|j| (0..grid.n[0]).map(move |i| grid.point(i, j)))
        .map(|x| (I * k * (wave.theta[0] * x[0] + wave.theta[1] * x[1])).exp())
        .collect()
}

/// Entry point matching the other modules' free-function style.
pub fn direct_solve(problem: &DirectProblem) -> Result<DirectSolution> {
    problem.solve()
}

/// `(4 u_{h/2} - u_h) / 3` at the coarse nodes, for a fine grid from
/// [`FdGrid::refined`].
pub fn richardson(coarse: &DirectSolution, fine: &DirectSolution) -> Result<FieldGrid> {
    let (c, f) = (&coarse.grid, &fine.grid);
    if (f.h * 2.0 - c.h).abs() > 1e-12 * c.h || f.origin != c.origin || f.n[1] != 2 * c.n[1] - 1 {
        return Err(Error::value("fine grid is not a refinement of the coarse grid"));
    }
    let values = (0..c.n[1])
        .flat_map(|j| (0..c.n[0]).map(move |i| (i, j)))
        .map(|(i, j)| {
            let uf = fine.field.value(2 * i, 2 * j);
            let uc = coarse.field.value(i, j);
            (4.0 * uf - uc) / 3.0
        })
        .collect();
    Ok(FieldGrid {
        spec: c.spec(),
        values,
        excluded: 0,
    })
}
