use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::cell::polygon_self_intersects;
use super::{check_positive, LayerProfile};
use crate::{Error, Result};

/// Samples used for geometric checks on the buried inclusion.
const CHECK_SAMPLES: usize = 512;

/// Boundary of the buried inclusion as a smooth 2pi-periodic,
/// counterclockwise curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InclusionShape {
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        #[serde(default)]
        rotation: f64,
    },
    /// `r(t) = radius + sum_k cos[k-1] cos(k t) + sin[k-1] sin(k t)` in polar
    /// form around `center`.
    Star {
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionD {
    pub boundary: InclusionShape,
}

impl InclusionD {
    pub fn disc(center: [f64; 2], radius: f64) -> Self {
        InclusionD {
            boundary: InclusionShape::Ellipse {
                center,
                semi_axes: [radius, radius],
                rotation: 0.0,
            },
        }
    }

    pub fn center(&self) -> [f64; 2] {
        match &self.boundary {
            InclusionShape::Ellipse { center, .. } | InclusionShape::Star { center, .. } => *center,
        }
    }

    /// Lengths multiplied by `s` (used for wavelength units).
    pub fn scaled(&self, s: f64) -> Self {
        let boundary = match &self.boundary {
            InclusionShape::Ellipse {
                center,
                semi_axes,
                rotation,
            } => InclusionShape::Ellipse {
                center: [center[0] * s, center[1] * s],
                semi_axes: [semi_axes[0] * s, semi_axes[1] * s],
                rotation: *rotation,
            },
            InclusionShape::Star {
                center,
                radius,
                cos,
                sin,
            } => InclusionShape::Star {
                center: [center[0] * s, center[1] * s],
                radius: radius * s,
                cos: cos.iter().map(|c| c * s).collect(),
                sin: sin.iter().map(|c| c * s).collect(),
            },
        };
        InclusionD { boundary }
    }

    /// Position, first and second derivative at parameter `t`.
    pub fn eval(&self, t: f64) -> [[f64; 2]; 3] {
        match &self.boundary {
            InclusionShape::Ellipse {
                center,
                semi_axes,
                rotation,
            } => {
                let (c, s) = (rotation.cos(), rotation.sin());
                let rot = |p: [f64; 2]| [c * p[0] - s * p[1], s * p[0] + c * p[1]];
                let (a, b) = (semi_axes[0], semi_axes[1]);
                let x = rot([a * t.cos(), b * t.sin()]);
                let d1 = rot([-a * t.sin(), b * t.cos()]);
                let d2 = rot([-a * t.cos(), -b * t.sin()]);
                [[center[0] + x[0], center[1] + x[1]], d1, d2]
            }
            InclusionShape::Star {
                center,
                radius,
                cos,
                sin,
            } => {
                let (mut r, mut r1, mut r2) = (*radius, 0.0, 0.0);
                for (k, a) in cos.iter().enumerate() {
                    let k = (k + 1) as f64;
                    r += a * (k * t).cos();
                    r1 -= a * k * (k * t).sin();
                    r2 -= a * k * k * (k * t).cos();
                }
                for (k, a) in sin.iter().enumerate() {
                    let k = (k + 1) as f64;
                    r += a * (k * t).sin();
                    r1 += a * k * (k * t).cos();
                    r2 -= a * k * k * (k * t).sin();
                }
                let (c, s) = (t.cos(), t.sin());
                [
                    [center[0] + r * c, center[1] + r * s],
                    [r1 * c - r * s, r1 * s + r * c],
                    [r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s],
                ]
            }
        }
    }

    pub fn point(&self, t: f64) -> [f64; 2] {
        self.eval(t)[0]
    }

    /// Exact membership test (both shapes are star-shaped about the centre).
    pub fn contains(&self, x: [f64; 2]) -> bool {
        match &self.boundary {
            InclusionShape::Ellipse {
                center,
                semi_axes,
                rotation,
            } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                let (c, s) = (rotation.cos(), rotation.sin());
                let u = (c * dx + s * dy) / semi_axes[0];
                let v = (-s * dx + c * dy) / semi_axes[1];
                u * u + v * v < 1.0
            }
            InclusionShape::Star { center, .. } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                let t = dy.atan2(dx);
                let p = self.point(t);
                dx.hypot(dy) < (p[0] - center[0]).hypot(p[1] - center[1])
            }
        }
    }

    pub fn samples(&self, n: usize) -> Vec<[f64; 2]> {
        (0..n).map(|i| self.point(TAU * i as f64 / n as f64)).collect()
    }

    pub fn max_x2(&self) -> f64 {
        self.samples(4 * CHECK_SAMPLES)
            .iter()
            .map(|p| p[1])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        let s = self.samples(CHECK_SAMPLES / 2);
        let mut d: f64 = 0.0;
        for (i, a) in s.iter().enumerate() {
            for b in &s[i + 1..] {
                d = d.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        d
    }

    /// Signed area by the shoelace rule on a fine discretization.
    pub fn signed_area(&self) -> f64 {
        let s = self.samples(4 * CHECK_SAMPLES);
        let n = s.len();
        (0..n)
            .map(|i| s[i][0] * s[(i + 1) % n][1] - s[(i + 1) % n][0] * s[i][1])
            .sum::<f64>()
            / 2.0
    }

    /// Shape checks that do not involve the layer.
    pub fn validate_shape(&self) -> Result<()> {
        match &self.boundary {
            InclusionShape::Ellipse { semi_axes, rotation, .. } => {
                check_positive("inclusion semi-axis", semi_axes[0])?;
                check_positive("inclusion semi-axis", semi_axes[1])?;
                if !rotation.is_finite() {
                    return Err(Error::value("inclusion rotation must be finite"));
                }
            }
            InclusionShape::Star { radius, cos, sin, .. } => {
                check_positive("inclusion radius", *radius)?;
                if cos.iter().chain(sin).any(|c| !c.is_finite()) {
                    return Err(Error::value("inclusion coefficients must be finite"));
                }
                let min_r = (0..CHECK_SAMPLES)
                    .map(|i| {
                        let t = TAU * i as f64 / CHECK_SAMPLES as f64;
                        let p = self.point(t);
                        let c = self.center();
                        (p[0] - c[0]) * t.cos() + (p[1] - c[1]) * t.sin()
                    })
                    .fold(f64::INFINITY, f64::min);
                if min_r <= 0.0 {
                    return Err(Error::geometry("star-shaped inclusion radius must stay positive"));
                }
            }
        }
        let jac: Vec<f64> = (0..CHECK_SAMPLES)
            .map(|i| {
                let d = self.eval(TAU * i as f64 / CHECK_SAMPLES as f64)[1];
                d[0].hypot(d[1])
            })
            .collect();
        let max = jac.iter().cloned().fold(0.0, f64::max);
        let min = jac.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 1e-6 * max {
            return Err(Error::geometry("inclusion parametrization degenerates"));
        }
        if polygon_self_intersects(&self.samples(CHECK_SAMPLES / 2)) {
            return Err(Error::geometry("inclusion boundary self-intersects"));
        }
        if self.signed_area() <= 0.0 {
            return Err(Error::geometry("inclusion boundary must be counterclockwise"));
        }
        Ok(())
    }

    /// Full check, including depth below the layer with a `2 xi` margin.
    pub fn validate(&self, layer: &LayerProfile) -> Result<()> {
        self.validate_shape()?;
        let limit = -layer.xi * layer.max_value() - 2.0 * layer.xi;
        let top = self.max_x2();
        if !(top < limit) {
            return Err(Error::geometry(format!(
                "inclusion D reaches x2 = {top}, must stay below {limit}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> InclusionD {
        InclusionD {
            boundary: InclusionShape::Star {
                center: [0.1, -2.0],
                radius: 0.4,
                cos: vec![0.0, 0.0, 0.08],
                sin: vec![0.03],
            },
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for d in [star(), InclusionD {
            boundary: InclusionShape::Ellipse {
                center: [0.0, -1.0],
                semi_axes: [0.5, 0.2],
                rotation: 0.4,
            },
        }] {
            let h = 1e-5;
            for &t in &[0.1, 1.3, 4.0] {
                let e = d.eval(t);
                let (p, m) = (d.eval(t + h), d.eval(t - h));
                for k in 0..2 {
                    assert!(((p[0][k] - m[0][k]) / (2.0 * h) - e[1][k]).abs() < 1e-8);
                    assert!(((p[1][k] - m[1][k]) / (2.0 * h) - e[2][k]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn contains_matches_radius() {
        let d = InclusionD::disc([0.0, -3.0], 0.3);
        assert!(d.contains([0.1, -3.1]));
        assert!(!d.contains([0.3, -3.1]));
        assert!(star().contains([0.1, -2.0]));
        assert!(!star().contains([0.1, -1.0]));
    }

    #[test]
    fn depth_margin_enforced() {
        let layer = LayerProfile::flat(0.5, 0.1);
        // top at -0.2, limit is -0.05 - 0.2 = -0.25
        let shallow = InclusionD::disc([0.0, -0.5], 0.3);
        assert!(matches!(shallow.validate(&layer), Err(Error::GeometryViolated(_))));
        assert!(InclusionD::disc([0.0, -3.0], 0.3).validate(&layer).is_ok());
    }

    #[test]
    fn area_and_orientation() {
        let d = InclusionD::disc([0.0, -3.0], 0.3);
        assert!((d.signed_area() - std::f64::consts::PI * 0.09).abs() < 1e-4);
        assert!((d.diameter() - 0.6).abs() < 1e-9);
    }
}
