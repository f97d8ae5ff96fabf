use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::model::InclusionD;
use crate::{Error, Result};

/// Nyström nodes on the inclusion boundary at `t_j = 2 pi j / N`.
#[derive(Debug, Clone)]
pub struct BoundaryMesh {
    pub curve: InclusionD,
    pub t: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub tangents: Vec<[f64; 2]>,
    pub second: Vec<[f64; 2]>,
    /// Unit outward normals.
    pub normals: Vec<[f64; 2]>,
    /// `|x'(t)|`.
    pub jacobian: Vec<f64>,
    /// Trapezoid weights `2 pi / N |x'(t_j)|`.
    pub weights: Vec<f64>,
}

impl BoundaryMesh {
    pub fn new(curve: &InclusionD, n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::value(format!("boundary mesh needs an even node count >= 8, got {n}")));
        }
        curve.validate_shape()?;
        if curve.signed_area() <= 0.0 {
            return Err(Error::geometry("inclusion boundary must be counterclockwise"));
        }
        let mesh = Self::sample(curve, n);
        let max = mesh.jacobian.iter().cloned().fold(0.0, f64::max);
        let min = mesh.jacobian.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 1e-6 * max) {
            return Err(Error::geometry("inclusion parametrization speed degenerates"));
        }
        Ok(mesh)
    }

    fn sample(curve: &InclusionD, n: usize) -> Self {
        let h = TAU / n as f64;
        let mut m = BoundaryMesh {
            curve: curve.clone(),
            t: Vec::with_capacity(n),
            points: Vec::with_capacity(n),
            tangents: Vec::with_capacity(n),
            second: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            jacobian: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
        };
        for j in 0..n {
            let t = h * j as f64;
            let [p, d1, d2] = curve.eval(t);
            let jac = d1[0].hypot(d1[1]);
            m.t.push(t);
            m.points.push(p);
            m.tangents.push(d1);
            m.second.push(d2);
            m.normals.push([d1[1] / jac, -d1[0] / jac]);
            m.jacobian.push(jac);
            m.weights.push(h * jac);
        }
        m
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest arc length between neighbouring nodes.
    pub fn spacing(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    /// The same curve with `factor` times as many nodes.
    pub fn refined(&self, factor: usize) -> Self {
        Self::sample(&self.curve, self.len() * factor)
    }

    /// Approximate distance from `x` to the boundary, accurate to a small
    /// fraction of the node spacing.
    pub fn distance(&self, x: [f64; 2]) -> f64 {
        let fine = 8 * self.len();
        let mut best = (f64::INFINITY, 0.0);
        for j in 0..fine {
            let t = TAU * j as f64 / fine as f64;
            let p = self.curve.point(t);
            let d = (p[0] - x[0]).hypot(p[1] - x[1]);
            if d < best.0 {
                best = (d, t);
            }
        }
        // Golden-section polish around the best sample.
        let f = |t: f64| {
            let p = self.curve.point(t);
            (p[0] - x[0]).hypot(p[1] - x[1])
        };
        let step = TAU / fine as f64;
        let (mut a, mut b) = (best.1 - step, best.1 + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..40 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        best.0.min(f(0.5 * (a + b)))
    }
}

/// Trigonometric interpolation of nodal values onto `factor` times as many
/// equispaced nodes. The Nyquist mode is split evenly between `+-N/2`.
pub fn trig_interpolate(values: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = values.len();
    let m = n * factor;
    let mut planner = FftPlanner::<f64>::new();
    let fwd: Arc<dyn rustfft::Fft<f64>> = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(m);
    let mut spec = values.to_vec();
    fwd.process(&mut spec);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for k in 0..n {
        let c = spec[k] / n as f64;
        if n % 2 == 0 && k == half {
            out[half] += 0.5 * c;
            out[m - half] += 0.5 * c;
        } else if k < half || (n % 2 == 1 && k == half) {
            out[k] += c;
        } else {
            out[m - (n - k)] += c;
        }
    }
    inv.process(&mut out);
    out
}
