use std::f64::consts::PI;

use num_complex::Complex64;

use super::interface::EffectiveProblem;
use super::spectral::SpectralKernel;
use crate::kernels::{FreeSpaceKernel, KernelValue};
use crate::quadrature::{integrate_polyline, PathIntegral};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SommerfeldOptions {
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for SommerfeldOptions {
    fn default() -> Self {
        SommerfeldOptions {
            tol: 1e-10,
            max_panels: 4000,
        }
    }
}

/// Value, `x`-gradient and quadrature error estimate of `G(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEvaluation {
    pub value: Complex64,
    pub grad: [Complex64; 2],
    pub error: f64,
}

/// Layered Green's function of the effective problem, evaluated as an
/// inverse tangential Fourier integral along a deformed contour.
///
/// The contour follows the real axis to `-T`, rises to `-T + iH`, runs to
/// `iH`, descends through the origin to `-iH`, runs to `T - iH` and returns
/// to the real axis at `T`. It passes above the branch points and poles on
/// the negative side and below those on the positive side, which is where
/// the outgoing solution keeps them when a small loss is added.
#[derive(Debug, Clone)]
pub struct LayeredGreen {
    pub problem: EffectiveProblem,
    kernel: SpectralKernel,
    lower_free: FreeSpaceKernel,
    upper_free: FreeSpaceKernel,
    /// Half-width of the deformed part of the contour.
    pub t_contour: f64,
    /// Largest excursion into the complex plane.
    pub h_contour: f64,
    /// Real wavenumbers where the interface system nearly degenerates.
    pub real_poles: Vec<f64>,
}

impl LayeredGreen {
    pub fn new(problem: &EffectiveProblem) -> Result<Self> {
        let kmax = problem.k_max();
        let kernel = SpectralKernel::new(problem);
        let real_poles = scan_real_poles(problem, kmax);
        let far = real_poles.iter().fold(kmax, |m, p| m.max(p.abs()));
        Ok(LayeredGreen {
            problem: *problem,
            kernel,
            lower_free: FreeSpaceKernel::anisotropic(&problem.medium, problem.omega),
            upper_free: FreeSpaceKernel::isotropic(problem.mu_plus, problem.eps_plus, problem.omega),
            t_contour: 1.2 * far,
            h_contour: 0.4 * problem.k_plus.min(problem.kappa()),
            real_poles,
        })
    }

    /// Whole-space part of `G` when `x` and `y` lie in the same medium.
    pub fn free_part(&self, x: [f64; 2], y: [f64; 2]) -> Option<KernelValue> {
        match (x[1] < 0.0, y[1] < 0.0) {
            (true, true) => Some(self.lower_free.eval(x, y)),
            (false, false) => Some(self.upper_free.eval(x, y)),
            _ => None,
        }
    }

    pub fn lower_free(&self) -> &FreeSpaceKernel {
        &self.lower_free
    }

    /// `G(x, y)` and its `x`-gradient.
    pub fn eval(&self, x: [f64; 2], y: [f64; 2], opts: &SommerfeldOptions) -> Result<GreenEvaluation> {
        if x == y {
            return Err(Error::value("Green's function is singular at x = y"));
        }
        let mut g = self.correction(x, y, opts)?;
        if let Some(f) = self.free_part(x, y) {
            g.value += f.value;
            g.grad[0] += f.grad[0];
            g.grad[1] += f.grad[1];
        }
        Ok(g)
    }

    /// `G - G_free` for points in the same medium, the full `G` otherwise.
    pub fn correction(&self, x: [f64; 2], y: [f64; 2], opts: &SommerfeldOptions) -> Result<GreenEvaluation> {
        if y[1] == 0.0 {
            return Err(Error::value("source point must not lie on the interface"));
        }
        let same = (x[1] < 0.0) == (y[1] < 0.0);
        let dx = x[0] - y[0];
        let (x2, y2) = (x[1], y[1]);
        let kn = self.problem.k_max();
        let f = |k1: Complex64| -> [Complex64; 3] {
            match self.kernel.eval(k1, x2, y2, same) {
                Ok(s) => {
                    let e = (I * k1 * dx).exp();
                    [s.value * e, I * k1 * s.value * e / kn, s.d_x2 * e / kn]
                }
                Err(_) => [Complex64::new(f64::NAN, 0.0); 3],
            }
        };
        let h = if dx == 0.0 {
            self.h_contour
        } else {
            self.h_contour.min(2.0 / dx.abs())
        };
        let t = self.t_contour;
        let path = [
            Complex64::new(-t, 0.0),
            Complex64::new(-t, h),
            Complex64::new(0.0, h),
            Complex64::new(0.0, -h),
            Complex64::new(t, -h),
            Complex64::new(t, 0.0),
        ];
        // Exponential decay rate of the remaining integrand along the real axis.
        let depth = x2.abs() + y2.abs();
        let budget = opts.tol * 2.0 * PI;
        let body = integrate_polyline(&f, &path, 4, 0.5 * budget, opts.max_panels);
        check(&body)?;
        let (right, e_r) = tail(&f, t, 1.0, depth, 0.25 * budget, opts.max_panels)?;
        let (left, e_l) = tail(&f, -t, -1.0, depth, 0.25 * budget, opts.max_panels)?;
        let mut v = [Complex64::new(0.0, 0.0); 3];
        for c in 0..3 {
            v[c] = (body.value[c] + right[c] + left[c]) / (2.0 * PI);
        }
        let error = (body.error + e_r + e_l) / (2.0 * PI);
        if !(error <= opts.tol) {
            return Err(Error::QuadratureFailure {
                value: v[0],
                estimate: error,
                tol: opts.tol,
            });
        }
        Ok(GreenEvaluation {
            value: v[0],
            grad: [v[1] * kn, v[2] * kn],
            error,
        })
    }
}

impl LayeredGreen {
    /// `sum_j c_j G(x, y_j)` for an observation point on or above the
    /// interface and sources below it, as one contour integral.
    pub fn upper_potential(
        &self,
        x: [f64; 2],
        sources: &[([f64; 2], Complex64)],
        opts: &SommerfeldOptions,
    ) -> Result<Complex64> {
        if x[1] < 0.0 || sources.iter().any(|(y, _)| !(y[1] < 0.0)) {
            return Err(Error::value("upper potential needs x2 >= 0 and sources below the interface"));
        }
        let weight: f64 = sources.iter().map(|(_, c)| c.norm()).sum();
        if weight == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let f = |k1: Complex64| -> [Complex64; 1] {
            match self.kernel.upper_transmission(k1) {
                Ok((tau, up, bp)) => {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (y, c) in sources {
                        s += c * (I * (k1 * (x[0] - y[0]) - up * y[1])).exp();
                    }
                    [s * tau * (I * bp * x[1]).exp()]
                }
                Err(_) => [Complex64::new(f64::NAN, 0.0)],
            }
        };
        let spread = sources.iter().fold(0.0f64, |m, (y, _)| m.max((x[0] - y[0]).abs()));
        let h = if spread == 0.0 {
            self.h_contour
        } else {
            self.h_contour.min(2.0 / spread)
        };
        let t = self.t_contour;
        let path = [
            Complex64::new(-t, 0.0),
            Complex64::new(-t, h),
            Complex64::new(0.0, h),
            Complex64::new(0.0, -h),
            Complex64::new(t, -h),
            Complex64::new(t, 0.0),
        ];
        let depth = x[1] + sources.iter().fold(f64::INFINITY, |m, (y, _)| m.min(y[1].abs()));
        let tol = opts.tol * weight;
        let budget = tol * 2.0 * PI;
        let body = integrate_polyline(&f, &path, 4, 0.5 * budget, opts.max_panels);
        check(&body)?;
        let (right, e_r) = tail(&f, t, 1.0, depth, 0.25 * budget, opts.max_panels)?;
        let (left, e_l) = tail(&f, -t, -1.0, depth, 0.25 * budget, opts.max_panels)?;
        let value = (body.value[0] + right[0] + left[0]) / (2.0 * PI);
        let error = (body.error + e_r + e_l) / (2.0 * PI);
        if !(error <= tol) {
            return Err(Error::QuadratureFailure {
                value,
                estimate: error,
                tol,
            });
        }
        Ok(value)
    }
}

fn check<const M: usize>(r: &PathIntegral<M>) -> Result<()> {
    if r.value.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::QuadratureFailure {
            value: r.value[0],
            estimate: f64::INFINITY,
            tol: 0.0,
        });
    }
    Ok(())
}

/// Integrates along the real axis from `start` towards `dir * inf` in
/// geometrically growing segments until the contribution and an
/// exponential-decay bound on the remainder fall below `tol`.
fn tail<F, const M: usize>(
    f: &F,
    start: f64,
    dir: f64,
    depth: f64,
    tol: f64,
    max_panels: usize,
) -> Result<([Complex64; M], f64)>
where
    F: Fn(Complex64) -> [Complex64; M],
{
    let mag = |k: f64| f(Complex64::new(k, 0.0)).iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let mut acc = [Complex64::new(0.0, 0.0); M];
    let mut err = 0.0;
    let mut a = start;
    let mut width = start.abs().max(1.0 / depth.max(1e-3)).min(start.abs() * 4.0 + 50.0);
    for _ in 0..60 {
        let b = a + dir * width;
        let (lo, hi) = if dir > 0.0 { (a, b) } else { (b, a) };
        let seg = integrate_polyline(f, &[Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)], 4, tol / 8.0, max_panels);
        check(&seg)?;
        for c in 0..M {
            acc[c] += seg.value[c];
        }
        err += seg.error;
        let (fa, fb) = (mag(a), mag(b));
        let contribution = seg.value.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if fb == 0.0 {
            return Ok((acc, err));
        }
        if fa > fb {
            let rate = (fa / fb).ln() / width;
            let bound = fb / rate;
            if bound < tol / 4.0 && contribution < tol {
                return Ok((acc, err + bound));
            }
        }
        a = b;
        width *= 2.0;
    }
    Err(Error::QuadratureFailure {
        value: acc[0],
        estimate: f64::INFINITY,
        tol,
    })
}

/// Local minima of the normalized interface determinant beyond `kmax` on
/// the real axis, where guided modes would sit.
fn scan_real_poles(problem: &EffectiveProblem, kmax: f64) -> Vec<f64> {
    let n = 4000;
    let (lo, hi) = (kmax * 1.0001, kmax * 30.0);
    let mut poles = Vec::new();
    for sign in [1.0, -1.0] {
        let det = |k: f64| {
            let k1 = Complex64::new(sign * k, 0.0);
            let bp = problem.beta_plus(k1);
            let bm = problem.lower_roots(k1).down;
            let zero = Complex64::new(0.0, 0.0);
            let one = Complex64::new(1.0, 0.0);
            problem
                .rows(k1)
                .normalized_det(&[[one, I * bp, zero, zero], [zero, zero, one, I * bm]])
        };
        let ks: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let d: Vec<f64> = ks.iter().map(|&k| det(k)).collect();
        for i in 1..n {
            if d[i] < d[i - 1] && d[i] <= d[i + 1] && d[i] < 1e-2 {
                poles.push(sign * ks[i + 1]);
            }
        }
    }
    poles
}

/// `G(x, y)` of the effective problem to absolute tolerance `tol`.
pub fn green(x: [f64; 2], y: [f64; 2], problem: &EffectiveProblem, tol: f64) -> Result<GreenEvaluation> {
    if !(tol >= 1e-12) {
        return Err(Error::value("Green's function tolerance must be at least 1e-12"));
    }
    LayeredGreen::new(problem)?.eval(
        x,
        y,
        &SommerfeldOptions {
            tol,
            ..SommerfeldOptions::default()
        },
    )
}
