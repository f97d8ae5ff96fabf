use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::check_positive;
use crate::{Error, Result};

/// Resolution at which scene validation checks the inclusion margin.
pub const DEFAULT_CELL_GRID: [usize; 2] = [128, 128];

/// Shape of the inclusion B inside the reference cell, in cell coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CellInclusion {
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
    },
    /// Simple polygon, vertices in either orientation.
    Polygon { vertices: Vec<[f64; 2]> },
    /// Full-width band `lower <= y2 < upper`; a laminate touches the lateral
    /// cell faces by construction and is exempt from the interior margin.
    Stripe { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCell {
    pub ell1: f64,
    pub ell2: f64,
    pub inclusion: CellInclusion,
}

impl UnitCell {
    pub fn disc(ell: f64, radius: f64) -> Self {
        UnitCell {
            ell1: ell,
            ell2: ell,
            inclusion: CellInclusion::Ellipse {
                center: [ell / 2.0, ell / 2.0],
                semi_axes: [radius, radius],
            },
        }
    }

    /// Horizontal laminate with B occupying `y2 < fraction * ell2`.
    pub fn laminate(ell1: f64, ell2: f64, fraction: f64) -> Self {
        UnitCell {
            ell1,
            ell2,
            inclusion: CellInclusion::Stripe {
                lower: 0.0,
                upper: fraction * ell2,
            },
        }
    }

    pub fn area(&self) -> f64 {
        self.ell1 * self.ell2
    }

    pub fn area_fraction(&self) -> f64 {
        let b = match &self.inclusion {
            CellInclusion::Ellipse { semi_axes, .. } => PI * semi_axes[0] * semi_axes[1],
            CellInclusion::Polygon { vertices } => shoelace(vertices).abs(),
            CellInclusion::Stripe { lower, upper } => (upper - lower) * self.ell1,
        };
        b / self.area()
    }

    /// Membership test after reduction modulo the cell periods.
    pub fn contains(&self, y: [f64; 2]) -> bool {
        let y1 = y[0].rem_euclid(self.ell1);
        let y2 = y[1].rem_euclid(self.ell2);
        match &self.inclusion {
            CellInclusion::Ellipse { center, semi_axes } => {
                let u = (y1 - center[0]) / semi_axes[0];
                let v = (y2 - center[1]) / semi_axes[1];
                u * u + v * v < 1.0
            }
            CellInclusion::Polygon { vertices } => point_in_polygon(vertices, [y1, y2]),
            CellInclusion::Stripe { lower, upper } => *lower <= y2 && y2 < *upper,
        }
    }

    /// Inclusion indicator at the cell centres of an `n[0] x n[1]` grid,
    /// row-major with `i1` fastest.
    pub fn rasterize(&self, n: [usize; 2]) -> Vec<bool> {
        let h = [self.ell1 / n[0] as f64, self.ell2 / n[1] as f64];
        let mut out = Vec::with_capacity(n[0] * n[1]);
        for j in 0..n[1] {
            for i in 0..n[0] {
                out.push(self.contains([(i as f64 + 0.5) * h[0], (j as f64 + 0.5) * h[1]]));
            }
        }
        out
    }

    /// Mirror image under `y1 -> ell1 - y1`.
    pub fn reflected(&self) -> Self {
        let inclusion = match &self.inclusion {
            CellInclusion::Ellipse { center, semi_axes } => CellInclusion::Ellipse {
                center: [self.ell1 - center[0], center[1]],
                semi_axes: *semi_axes,
            },
            CellInclusion::Polygon { vertices } => CellInclusion::Polygon {
                vertices: vertices.iter().map(|v| [self.ell1 - v[0], v[1]]).collect(),
            },
            s @ CellInclusion::Stripe { .. } => s.clone(),
        };
        UnitCell {
            inclusion,
            ..self.clone()
        }
    }

    /// Checks that B stays one grid cell away from the cell boundary at
    /// resolution `n` and that the volume fraction lies strictly in (0, 1).
    pub fn validate(&self, n: [usize; 2]) -> Result<()> {
        check_positive("cell.ell1", self.ell1)?;
        check_positive("cell.ell2", self.ell2)?;
        let h = [self.ell1 / n[0] as f64, self.ell2 / n[1] as f64];
        let inside = |p: [f64; 2]| {
            p[0] >= h[0] && p[0] <= self.ell1 - h[0] && p[1] >= h[1] && p[1] <= self.ell2 - h[1]
        };
        match &self.inclusion {
            CellInclusion::Ellipse { center, semi_axes } => {
                check_positive("ellipse semi-axis", semi_axes[0])?;
                check_positive("ellipse semi-axis", semi_axes[1])?;
                let lo = [center[0] - semi_axes[0], center[1] - semi_axes[1]];
                let hi = [center[0] + semi_axes[0], center[1] + semi_axes[1]];
                if !inside(lo) || !inside(hi) {
                    return Err(Error::geometry("inclusion B touches the cell boundary"));
                }
            }
            CellInclusion::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::geometry("polygon needs at least three vertices"));
                }
                if vertices.iter().any(|v| !inside(*v)) {
                    return Err(Error::geometry("inclusion B touches the cell boundary"));
                }
                if polygon_self_intersects(vertices) {
                    return Err(Error::geometry("polygon B is not simple"));
                }
            }
            CellInclusion::Stripe { lower, upper } => {
                if !(0.0 <= *lower && lower < upper && *upper <= self.ell2) {
                    return Err(Error::geometry("stripe bounds must satisfy 0 <= lower < upper <= ell2"));
                }
            }
        }
        let f = self.area_fraction();
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::geometry(format!("volume fraction {f} outside (0, 1)")));
        }
        Ok(())
    }
}

/// True iff `y` lies in B, with `y` first reduced modulo the cell.
pub fn point_in_inclusion(cell: &UnitCell, y: [f64; 2]) -> bool {
    cell.contains(y)
}

fn shoelace(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn point_in_polygon(v: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let n = v.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub(crate) fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Tests every pair of non-adjacent edges of the closed polyline.
pub(crate) fn polygon_self_intersects(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}
