//! Rectangular field grids and field comparison.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tensor grid with `n[0] x n[1]` points including both ends of each extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub n: [usize; 2],
}

impl GridSpec {
    pub fn new(x1: [f64; 2], x2: [f64; 2], n: [usize; 2]) -> Result<Self> {
        let g = GridSpec { x1, x2, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |e: [f64; 2], n: usize| e[0].is_finite() && e[1].is_finite() && ((n >= 2 && e[1] > e[0]) || (n == 1 && e[1] == e[0]));
        if !(ok(self.x1, self.n[0]) && ok(self.x2, self.n[1])) {
            return Err(Error::value(format!("invalid grid {self:?}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> [f64; 2] {
        let h = |e: [f64; 2], n: usize| if n > 1 { (e[1] - e[0]) / (n - 1) as f64 } else { 0.0 };
        [h(self.x1, self.n[0]), h(self.x2, self.n[1])]
    }

    pub fn point(&self, i1: usize, i2: usize) -> [f64; 2] {
        let h = self.spacing();
        [self.x1[0] + h[0] * i1 as f64, self.x2[0] + h[1] * i2 as f64]
    }

    /// All points, `x1` varying fastest.
    /// Index ranges of the nodes inside `window`, `None` when empty.
    pub fn window_range(&self, window: &Window) -> Option<[[usize; 2]; 2]> {
        let h = self.spacing();
        let axis = |e: [f64; 2], n: usize, h: f64, w: [f64; 2]| -> Option<[usize; 2]> {
            if n == 1 {
                return (w[0] <= e[0] && e[0] <= w[1]).then_some([0, 0]);
            }
            let tol = 1e-9;
            let lo = ((w[0] - e[0]) / h - tol).ceil().max(0.0);
            let hi = ((w[1] - e[0]) / h + tol).floor().min((n - 1) as f64);
            (lo <= hi).then_some([lo as usize, hi as usize])
        };
        Some([axis(self.x1, self.n[0], h[0], window.x1)?, axis(self.x2, self.n[1], h[1], window.x2)?])
    }

    /// Sub-grid of the nodes inside `window`.
    pub fn restrict(&self, window: &Window) -> Option<GridSpec> {
        let [r1, r2] = self.window_range(window)?;
        let a = self.point(r1[0], r2[0]);
        let b = self.point(r1[1], r2[1]);
        Some(GridSpec {
            x1: [a[0], b[0]],
            x2: [a[1], b[1]],
            n: [r1[1] - r1[0] + 1, r2[1] - r2[0] + 1],
        })
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.n[1])
            .flat_map(|i2| (0..self.n[0]).map(move |i1| (i1, i2)))
            .map(|(i1, i2)| self.point(i1, i2))
            .collect()
    }
}

/// Complex field sampled on a grid. Excluded points hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
    pub excluded: usize,
}

impl FieldGrid {
    pub fn value(&self, i1: usize, i2: usize) -> Complex64 {
        self.values[i2 * self.spec.n[0] + i1]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.re.is_finite())
            .fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Values at the nodes inside `window`.
    pub fn restrict(&self, window: &Window) -> Option<FieldGrid> {
        let [r1, r2] = self.spec.window_range(window)?;
        let spec = self.spec.restrict(window)?;
        let mut values = Vec::with_capacity(spec.len());
        for j in r2[0]..=r2[1] {
            for i in r1[0]..=r1[1] {
                values.push(self.value(i, j));
            }
        }
        let excluded = values.iter().filter(|v| !v.re.is_finite()).count();
        Some(FieldGrid { spec, values, excluded })
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn sample(&self, x: [f64; 2]) -> Option<Complex64> {
        let s = &self.spec;
        let h = s.spacing();
        let locate = |v: f64, e: [f64; 2], n: usize, h: f64| -> Option<(usize, f64)> {
            let tol = 1e-9 * (e[1] - e[0]).abs().max(1.0);
            if v < e[0] - tol || v > e[1] + tol {
                return None;
            }
            if n == 1 {
                return Some((0, 0.0));
            }
            let u = ((v - e[0]) / h).clamp(0.0, (n - 1) as f64);
            let i = (u.floor() as usize).min(n - 2);
            Some((i, u - i as f64))
        };
        let (i, a) = locate(x[0], s.x1, s.n[0], h[0])?;
        let (j, b) = locate(x[1], s.x2, s.n[1], h[1])?;
        let at = |di: usize, dj: usize| {
            let (ii, jj) = ((i + di).min(s.n[0] - 1), (j + dj).min(s.n[1] - 1));
            self.value(ii, jj)
        };
        Some(
            at(0, 0) * ((1.0 - a) * (1.0 - b))
                + at(1, 0) * (a * (1.0 - b))
                + at(0, 1) * ((1.0 - a) * b)
                + at(1, 1) * (a * b),
        )
    }

    /// CSV with header `x1,x2,re,im,abs`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x1,x2,re,im,abs")?;
        for (p, v) in self.spec.points().iter().zip(&self.values) {
            writeln!(w, "{:.12e},{:.12e},{:.15e},{:.15e},{:.15e}", p[0], p[1], v.re, v.im, v.norm())?;
        }
        Ok(())
    }
}

/// Axis-aligned comparison window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
}

impl Window {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        x[0] >= self.x1[0] && x[0] <= self.x1[1] && x[1] >= self.x2[0] && x[1] <= self.x2[1]
    }

    fn inside(&self, s: &GridSpec) -> bool {
        let tol = 1e-9;
        self.x1[0] >= s.x1[0] - tol && self.x1[1] <= s.x1[1] + tol && self.x2[0] >= s.x2[0] - tol && self.x2[1] <= s.x2[1] + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldComparison {
    /// `|a - b|_2 / |b|_2` over the window.
    pub relative_l2: f64,
    /// `max |a - b| / max |b|` over the window.
    pub relative_linf: f64,
    pub points: usize,
}

/// Compares `a` against the reference `b` at the points of `a` inside
/// `window`, interpolating `b` bilinearly. Excluded (NaN) points are skipped.
pub fn compare_fields(a: &FieldGrid, b: &FieldGrid, window: &Window) -> Result<FieldComparison> {
    if !(window.inside(&a.spec) && window.inside(&b.spec)) || window.x1[0] > window.x1[1] || window.x2[0] > window.x2[1] {
        return Err(Error::WindowOutsideGrid);
    }
    let (mut num, mut den, mut emax, mut bmax, mut points) = (0.0, 0.0, 0.0f64, 0.0f64, 0);
    for (p, va) in a.spec.points().iter().zip(&a.values) {
        if !window.contains(*p) || !va.re.is_finite() {
            continue;
        }
        let Some(vb) = b.sample(*p) else { continue };
        if !vb.re.is_finite() {
            continue;
        }
        let e = (va - vb).norm();
        num += e * e;
        den += vb.norm_sqr();
        emax = emax.max(e);
        bmax = bmax.max(vb.norm());
        points += 1;
    }
    if points == 0 {
        return Err(Error::WindowOutsideGrid);
    }
    Ok(FieldComparison {
        relative_l2: (num / den).sqrt(),
        relative_linf: emax / bmax,
        points,
    })
}
