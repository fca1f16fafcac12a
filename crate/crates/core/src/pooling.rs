//! Global pooling over a convolution output: proportion of positive values
//! (hard and sigmoid-softened) and max.
//!
//! Means are accumulated left to right in `f32`, so the same input always
//! produces the same bits regardless of which worker evaluates it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default offset subtracted inside the soft step, `sigmoid(lambda * x - shift)`.
pub const DEFAULT_SHIFT: f32 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingMode {
    Hard,
    Soft,
}

/// How each kernel output is reduced to features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingConfig {
    pub mode: PoolingMode,
    /// Steepness of the soft step; ignored in hard mode.
    pub lambda: f32,
    pub shift: f32,
    /// Emit a max-pool feature after each PPV feature.
    pub include_max: bool,
}

impl Default for PoolingConfig {
    fn default() -> Self {
        Self::hard()
    }
}

impl PoolingConfig {
    pub fn hard() -> Self {
        PoolingConfig {
            mode: PoolingMode::Hard,
            lambda: 1.0,
            shift: DEFAULT_SHIFT,
            include_max: true,
        }
    }

    pub fn soft(lambda: f32) -> Self {
        PoolingConfig {
            mode: PoolingMode::Soft,
            lambda,
            shift: DEFAULT_SHIFT,
            include_max: true,
        }
    }

    pub fn with_shift(mut self, shift: f32) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_max(mut self, include_max: bool) -> Self {
        self.include_max = include_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == PoolingMode::Soft && !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::param(format!(
                "soft pooling needs a positive finite lambda, got {}",
                self.lambda
            )));
        }
        if !self.shift.is_finite() {
            return Err(Error::param("shift must be finite"));
        }
        Ok(())
    }

    /// Features emitted per kernel.
    pub fn features_per_kernel(&self) -> usize {
        if self.include_max {
            2
        } else {
            1
        }
    }

    /// Pools one convolution output into `out` (length
    /// [`features_per_kernel`](Self::features_per_kernel)). Inputs are
    /// assumed non-empty and finite.
    #[inline]
    pub(crate) fn pool_into(&self, z: &[f32], out: &mut [f32]) {
        out[0] = match self.mode {
            PoolingMode::Hard => ppv_unchecked(z),
            PoolingMode::Soft => soft_ppv_unchecked(z, self.lambda, self.shift),
        };
        if self.include_max {
            out[1] = max_unchecked(z);
        }
    }
}

/// Heaviside step, zero at the origin.
#[inline]
pub fn heaviside(x: f32) -> f32 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Logistic sigmoid; only ever exponentiates a non-positive argument.
#[inline]
pub fn sigmoid(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn sigmoid_f64(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Proportion of strictly positive values.
pub fn ppv(v: &[f32]) -> Result<f32> {
    if v.is_empty() {
        return Err(Error::param("ppv of an empty vector"));
    }
    Ok(ppv_unchecked(v))
}

/// Mean of `sigmoid(lambda * v_i - shift)`.
pub fn soft_ppv(v: &[f32], lambda: f32, shift: f32) -> Result<f32> {
    check_soft_args(v.len(), lambda, shift)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("soft_ppv input contains non-finite values"));
    }
    Ok(soft_ppv_unchecked(v, lambda, shift))
}

/// Largest element.
pub fn max_pool(v: &[f32]) -> Result<f32> {
    if v.is_empty() {
        return Err(Error::param("max_pool of an empty vector"));
    }
    Ok(max_unchecked(v))
}

/// Double-precision soft PPV, used for derivative checks.
pub fn soft_ppv_f64(v: &[f64], lambda: f64, shift: f64) -> Result<f64> {
    check_soft_args(v.len(), lambda as f32, shift as f32)?;
    let n = v.len() as f64;
    Ok(v.iter().map(|&x| sigmoid_f64(lambda * x - shift)).sum::<f64>() / n)
}

/// Analytic gradient of [`soft_ppv_f64`]:
/// `d/dv_i = (lambda / n) * s * (1 - s)` with `s = sigmoid(lambda * v_i - shift)`.
pub fn soft_ppv_gradient(v: &[f64], lambda: f64, shift: f64) -> Result<Vec<f64>> {
    check_soft_args(v.len(), lambda as f32, shift as f32)?;
    let scale = lambda / v.len() as f64;
    Ok(v
        .iter()
        .map(|&x| {
            let s = sigmoid_f64(lambda * x - shift);
            scale * s * (1.0 - s)
        })
        .collect())
}

fn check_soft_args(len: usize, lambda: f32, shift: f32) -> Result<()> {
    if len == 0 {
        return Err(Error::param("soft_ppv of an empty vector"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param(format!("lambda must be positive and finite, got {lambda}")));
    }
    if !shift.is_finite() {
        return Err(Error::param("shift must be finite"));
    }
    Ok(())
}

#[inline]
fn ppv_unchecked(v: &[f32]) -> f32 {
    let positives = v.iter().filter(|&&x| x > 0.0).count();
    positives as f32 / v.len() as f32
}

#[inline]
fn soft_ppv_unchecked(v: &[f32], lambda: f32, shift: f32) -> f32 {
    let mut sum = 0.0f32;
    for &x in v {
        sum += sigmoid(lambda * x - shift);
    }
    sum / v.len() as f32
}

#[inline]
fn max_unchecked(v: &[f32]) -> f32 {
    v.iter().copied().fold(f32::NEG_INFINITY, f32::max)
}
