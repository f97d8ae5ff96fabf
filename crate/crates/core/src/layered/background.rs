use num_complex::Complex64;

use super::interface::EffectiveProblem;
use crate::kernels::KernelValue;
use crate::model::IncidentWave;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Plane-wave solution of the effective problem:
/// `U = e^{i k1 x1} (e^{i b_inc x2} + R e^{i b+ x2})` above the interface and
/// `U = T e^{i k1 x1 + i b- x2}` below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundField {
    pub problem: EffectiveProblem,
    pub k1: f64,
    pub beta_inc: f64,
    pub beta_plus: Complex64,
    pub beta_minus: Complex64,
    pub r: Complex64,
    pub t: Complex64,
    /// Amplitude of the incident wave.
    pub amplitude: Complex64,
    /// Relative residuals of the two transmission conditions.
    pub residuals: [f64; 2],
}

pub fn background_field(wave: &IncidentWave, problem: &EffectiveProblem) -> Result<BackgroundField> {
    wave.validate()?;
    if wave.omega != problem.omega {
        return Err(Error::value("incident wave and effective problem use different frequencies"));
    }
    let k = problem.k_plus;
    let k1 = k * wave.theta[0];
    let beta_inc = k * wave.theta[1];
    let kc = Complex64::new(k1, 0.0);
    let bp = problem.beta_plus(kc);
    let bm = problem.lower_roots(kc).down;
    let rows = problem.rows(kc);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let known = [one, I * beta_inc, zero, zero];
    let cols = [[one, I * bp, zero, zero], [zero, zero, one, I * bm]];
    let [r, t] = rows.solve(kc, &known, &cols)?;
    let traces = [1.0 + r, I * (beta_inc + bp * r), t, I * bm * t];
    let res = rows.residual(&traces);
    let scale = |row: &[Complex64; 4]| {
        row.iter()
            .zip(&traces)
            .map(|(a, b)| (a * b).norm())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE)
    };
    Ok(BackgroundField {
        problem: *problem,
        k1,
        beta_inc,
        beta_plus: bp,
        beta_minus: bm,
        r,
        t,
        amplitude: one,
        residuals: [res[0].norm() / scale(&rows.c1), res[1].norm() / scale(&rows.c2)],
    })
}

impl BackgroundField {
    /// Same field for an incident wave of amplitude `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        BackgroundField {
            r: self.r * factor,
            t: self.t * factor,
            amplitude: self.amplitude * factor,
            ..*self
        }
    }

    pub fn incident(&self, x: [f64; 2]) -> Complex64 {
        self.amplitude * (I * (self.k1 * x[0] + self.beta_inc * x[1])).exp()
    }

    pub fn value(&self, x: [f64; 2]) -> Complex64 {
        self.eval(x).value
    }

    /// Field and gradient; `x2 >= 0` is the upper side of the interface.
    pub fn eval(&self, x: [f64; 2]) -> KernelValue {
        let ph = (I * self.k1 * x[0]).exp();
        if x[1] >= 0.0 {
            let inc = self.amplitude * (I * self.beta_inc * x[1]).exp();
            let refl = self.r * (I * self.beta_plus * x[1]).exp();
            let v = ph * (inc + refl);
            KernelValue {
                value: v,
                grad: [I * self.k1 * v, ph * I * (self.beta_inc * inc + self.beta_plus * refl)],
            }
        } else {
            let v = ph * self.t * (I * self.beta_minus * x[1]).exp();
            KernelValue {
                value: v,
                grad: [I * self.k1 * v, I * self.beta_minus * v],
            }
        }
    }

    /// Vertical energy flux `Im(conj(u) q2)` of each plane wave, with `q` the
    /// conormal flux: (incident, reflected, transmitted).
    pub fn vertical_fluxes(&self) -> [f64; 3] {
        let p = &self.problem;
        let a = &p.medium.a;
        let inc = self.amplitude.norm_sqr() * self.beta_inc / p.mu_plus;
        let refl = self.r.norm_sqr() * self.beta_plus.re / p.mu_plus;
        let trans = self.t.norm_sqr() * (a[1][0] * self.k1 + a[1][1] * self.beta_minus.re);
        [inc, refl, trans]
    }
}
