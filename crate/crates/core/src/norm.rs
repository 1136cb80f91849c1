//! Layer normalization, RMSNorm and the per-channel derivative of layer
//! normalization with respect to its own input.
//!
//! All statistics use the population variance (divisor `C`).

use crate::error::{Error, Result};

/// Variance at or below this value is treated as degenerate. No epsilon is
/// added to the denominator; callers get [`Error::DegenerateVariance`].
pub const VARIANCE_EPS: f64 = 1e-24;

/// One token representation: `C >= 2` finite activations.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(Vec<f64>);

impl ChannelVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooFewChannels(values.len()));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    pub fn channels(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.0.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.0.len(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for ChannelVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl AsRef<[f64]> for ChannelVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Mean and population variance of a [`ChannelVector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub mean: f64,
    pub variance: f64,
}

impl NormStats {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

pub fn norm_stats(x: &ChannelVector) -> NormStats {
    let c = x.channels() as f64;
    let mean = x.values().iter().sum::<f64>() / c;
    let variance = x.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c;
    NormStats { mean, variance }
}

fn nondegenerate_stats(x: &ChannelVector) -> Result<NormStats> {
    let stats = norm_stats(x);
    if stats.variance <= VARIANCE_EPS {
        return Err(Error::DegenerateVariance(stats.variance));
    }
    Ok(stats)
}

/// `y_i = (x_i - mu) / sqrt(sigma^2)` without an affine head.
pub fn layer_norm(x: &ChannelVector) -> Result<ChannelVector> {
    let stats = nondegenerate_stats(x)?;
    let sd = stats.std_dev();
    Ok(ChannelVector(
        x.values().iter().map(|v| (v - stats.mean) / sd).collect(),
    ))
}

/// `y_i = x_i / sqrt(mean(x^2))`.
pub fn rms_norm(x: &ChannelVector) -> Result<ChannelVector> {
    let c = x.channels() as f64;
    let mean_sq = x.values().iter().map(|v| v * v).sum::<f64>() / c;
    if mean_sq <= VARIANCE_EPS {
        return Err(Error::DegenerateVariance(mean_sq));
    }
    let rms = mean_sq.sqrt();
    Ok(ChannelVector(x.values().iter().map(|v| v / rms).collect()))
}

/// The scalar `F(x) = 1 / (C * sqrt(sigma^2))` that multiplies `C - 1 - y_i^2`
/// in the layer-norm derivative.
pub fn ln_derivative_factor(x: &ChannelVector) -> Result<f64> {
    let stats = nondegenerate_stats(x)?;
    Ok(1.0 / (x.channels() as f64 * stats.std_dev()))
}

/// Diagonal entry `d y_i / d x_i` of the layer-norm Jacobian, evaluated as
/// `F(x) * (C - 1 - y_i^2)`. Channel indices are zero-based.
pub fn ln_derivative_analytic(x: &ChannelVector, i: usize) -> Result<f64> {
    x.check_index(i)?;
    let stats = nondegenerate_stats(x)?;
    let c = x.channels() as f64;
    let sd = stats.std_dev();
    let y = (x.values()[i] - stats.mean) / sd;
    Ok((c - 1.0 - y * y) / (c * sd))
}

pub(crate) fn check_channel_index(x: &ChannelVector, i: usize) -> Result<()> {
    x.check_index(i)
}
