use num_complex::Complex64;

use super::interface::EffectiveProblem;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tangential Fourier transform of the layered Green's function and its
/// `x2`-derivative at one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralValue {
    pub value: Complex64,
    pub d_x2: Complex64,
}

/// Spectral kernel evaluator; `subtract_free` drops the whole-space part
/// when source and target lie in the same medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralKernel {
    pub problem: EffectiveProblem,
}

impl SpectralKernel {
    pub fn new(problem: &EffectiveProblem) -> Self {
        SpectralKernel { problem: *problem }
    }

    /// Transmitted amplitude `tau` for a unit lower source at depth zero, with
    /// the lower upgoing root and `beta+`; a source at `y2 < 0` above
    /// `x2 >= 0` contributes `tau e^{-i up y2} e^{i beta+ x2}`.
    pub fn upper_transmission(&self, k1: Complex64) -> Result<(Complex64, Complex64, Complex64)> {
        let p = &self.problem;
        let bp = p.beta_plus(k1);
        let lr = p.lower_roots(k1);
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let alpha = I / lr.s;
        let known = [zero, zero, alpha, I * lr.up * alpha];
        let [tau, _] = p
            .rows(k1)
            .solve(k1, &known, &[[one, I * bp, zero, zero], [zero, zero, one, I * lr.down]])?;
        Ok((tau, lr.up, bp))
    }

    pub fn eval(&self, k1: Complex64, x2: f64, y2: f64, subtract_free: bool) -> Result<SpectralValue> {
        let p = &self.problem;
        let rows = p.rows(k1);
        let bp = p.beta_plus(k1);
        let lr = p.lower_roots(k1);
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let up_col = [one, I * bp, zero, zero];
        let down_col = [zero, zero, one, I * lr.down];
        if y2 < 0.0 {
            let alpha = I / lr.s;
            let src = alpha * (-I * lr.up * y2).exp();
            let known = [zero, zero, src, I * lr.up * src];
            let [tau, rho] = rows.solve(k1, &known, &[up_col, down_col])?;
            if x2 >= 0.0 {
                let v = tau * (I * bp * x2).exp();
                return Ok(SpectralValue { value: v, d_x2: I * bp * v });
            }
            let refl = rho * (I * lr.down * x2).exp();
            let mut out = SpectralValue {
                value: refl,
                d_x2: I * lr.down * refl,
            };
            if !subtract_free {
                let beta = if x2 > y2 { lr.up } else { lr.down };
                let f = alpha * (I * beta * (x2 - y2)).exp();
                out.value += f;
                out.d_x2 += I * beta * f;
            }
            Ok(out)
        } else if y2 > 0.0 {
            let alpha = I * p.mu_plus / (2.0 * bp);
            let src = alpha * (I * bp * y2).exp();
            let known = [src, -I * bp * src, zero, zero];
            let [rho, tau] = rows.solve(k1, &known, &[up_col, down_col])?;
            if x2 < 0.0 {
                let v = tau * (I * lr.down * x2).exp();
                return Ok(SpectralValue {
                    value: v,
                    d_x2: I * lr.down * v,
                });
            }
            let refl = rho * (I * bp * x2).exp();
            let mut out = SpectralValue {
                value: refl,
                d_x2: I * bp * refl,
            };
            if !subtract_free {
                let sign = if x2 >= y2 { 1.0 } else { -1.0 };
                let f = alpha * (I * bp * (x2 - y2).abs()).exp();
                out.value += f;
                out.d_x2 += sign * I * bp * f;
            }
            Ok(out)
        } else {
            Err(Error::value("source point must not lie on the interface"))
        }
    }
}

/// `G^(k1; x2, y2)`, the one-dimensional Green's function of the effective
/// problem at tangential wavenumber `k1`.
pub fn spectral_green(k1: Complex64, x2: f64, y2: f64, problem: &EffectiveProblem) -> Result<Complex64> {
    Ok(SpectralKernel::new(problem).eval(k1, x2, y2, false)?.value)
}
