use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::check_positive;
use crate::{Error, Result};

/// Samples used for pointwise checks on f.
const DENSE_SAMPLES: usize = 4096;

/// Layer thickness profile `f(t) = mean + sum_k cos[k-1] cos(2 pi k t) + sin[k-1] sin(2 pi k t)`,
/// 1-periodic, together with the physical scale `xi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    pub xi: f64,
}

impl LayerProfile {
    pub fn flat(h: f64, xi: f64) -> Self {
        LayerProfile {
            mean: h,
            cos: Vec::new(),
            sin: Vec::new(),
            xi,
        }
    }

    pub fn cosine(h0: f64, amplitude: f64, xi: f64) -> Self {
        LayerProfile {
            mean: h0,
            cos: vec![amplitude],
            sin: Vec::new(),
            xi,
        }
    }

    pub fn with_xi(&self, xi: f64) -> Self {
        LayerProfile {
            xi,
            ..self.clone()
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let mut v = self.mean;
        for (k, c) in self.cos.iter().enumerate() {
            v += c * (TAU * (k + 1) as f64 * t).cos();
        }
        for (k, s) in self.sin.iter().enumerate() {
            v += s * (TAU * (k + 1) as f64 * t).sin();
        }
        v
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let mut v = 0.0;
        for (k, c) in self.cos.iter().enumerate() {
            let w = TAU * (k + 1) as f64;
            v -= c * w * (w * t).sin();
        }
        for (k, s) in self.sin.iter().enumerate() {
            let w = TAU * (k + 1) as f64;
            v += s * w * (w * t).cos();
        }
        v
    }

    /// Exact integral of f over one period.
    pub fn integral(&self) -> f64 {
        self.mean
    }

    pub fn harmonics(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn is_flat(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|c| *c == 0.0)
    }

    /// Rigorous upper bound on f.
    pub fn upper_bound(&self) -> f64 {
        self.mean + self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum::<f64>()
    }

    /// Maximum of f on the dense sample.
    pub fn max_value(&self) -> f64 {
        (0..DENSE_SAMPLES)
            .map(|i| self.value(i as f64 / DENSE_SAMPLES as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        (0..DENSE_SAMPLES)
            .map(|i| self.value(i as f64 / DENSE_SAMPLES as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("layer.xi", self.xi)?;
        if !self.mean.is_finite() || self.cos.iter().chain(&self.sin).any(|c| !c.is_finite()) {
            return Err(Error::value("layer profile coefficients must be finite"));
        }
        let min = self.min_value();
        if min <= 0.0 {
            return Err(Error::geometry(format!(
                "layer profile must stay positive, minimum sample is {min}"
            )));
        }
        Ok(())
    }
}
