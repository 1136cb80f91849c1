//! Element-wise dynamic activations that stand in for layer normalization.
//!
//! Both [`scaled_dyt`] and [`dyisru`] saturate at `±sqrt(C - 1)`, the
//! extrema a layer-normalized channel can reach.

use crate::error::{Error, Result};
use crate::norm::{check_channel_index, norm_stats, ChannelVector};

/// Smallest β accepted when building [`DyIsruParams`] from an analytic
/// channel-exact value that came out as zero.
pub const BETA_MIN: f64 = 1e-18;

fn check_channels(channels: usize) -> Result<()> {
    if channels < 2 {
        return Err(Error::InvalidParameter(format!(
            "channels must be >= 2, got {channels}"
        )));
    }
    Ok(())
}

fn bound(channels: usize) -> f64 {
    ((channels - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyTParams {
    alpha: f64,
    channels: usize,
}

impl DyTParams {
    pub fn new(alpha: f64, channels: usize) -> Result<Self> {
        check_channels(channels)?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        Ok(Self { alpha, channels })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `sqrt(C - 1)`, the saturation level.
    pub fn bound(&self) -> f64 {
        bound(self.channels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyIsruParams {
    beta: f64,
    channels: usize,
    mu: f64,
}

impl DyIsruParams {
    /// Centered at zero, the form used on outliers.
    pub fn new(beta: f64, channels: usize) -> Result<Self> {
        Self::centered(beta, channels, 0.0)
    }

    pub fn centered(beta: f64, channels: usize, mu: f64) -> Result<Self> {
        check_channels(channels)?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mu must be finite, got {mu}"
            )));
        }
        Ok(Self { beta, channels, mu })
    }

    /// Builds parameters from an analytic β that may be exactly zero (or a
    /// rounding hair below it), clamping to [`BETA_MIN`].
    pub fn from_exact(beta: f64, channels: usize, mu: f64) -> Result<Self> {
        Self::centered(beta.max(BETA_MIN), channels, mu)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn bound(&self) -> f64 {
        bound(self.channels)
    }
}

/// `sqrt(C - 1) * tanh(alpha * x)`.
///
/// The unscaled form `tanh(alpha * x)` is this divided by
/// [`DyTParams::bound`].
pub fn scaled_dyt(x: f64, p: &DyTParams) -> f64 {
    p.bound() * (p.alpha * x).tanh()
}

/// `d/dx scaled_dyt = alpha * sqrt(C - 1) * (1 - tanh^2(alpha * x))`.
pub fn scaled_dyt_derivative(x: f64, p: &DyTParams) -> f64 {
    let t = (p.alpha * x).tanh();
    p.alpha * p.bound() * (1.0 - t * t)
}

/// `sqrt(C - 1) * (x - mu) / sqrt(beta + (x - mu)^2)`.
pub fn dyisru_general(x: f64, p: &DyIsruParams) -> f64 {
    let d = x - p.mu;
    p.bound() * d / (p.beta + d * d).sqrt()
}

/// Derivative of [`dyisru_general`] with respect to `x - mu`:
/// `sqrt(C - 1) * beta / (beta + (x - mu)^2)^(3/2)`.
pub fn dyisru_general_derivative(x: f64, p: &DyIsruParams) -> f64 {
    let d = x - p.mu;
    let s = p.beta + d * d;
    p.bound() * p.beta / (s * s.sqrt())
}

/// `sqrt(C - 1) * x / sqrt(beta + x^2)`; the center stored in `p` is ignored.
pub fn dyisru(x: f64, p: &DyIsruParams) -> f64 {
    p.bound() * x / (p.beta + x * x).sqrt()
}

/// Inverse square root unit `x / sqrt(1 + alpha * x^2)`.
pub fn isru(x: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "isru alpha must be positive and finite, got {alpha}"
        )));
    }
    Ok(x / (1.0 + alpha * x * x).sqrt())
}

/// Channel-specific β that makes [`dyisru_general`] (centered at the vector
/// mean) reproduce `layer_norm(x)_i` exactly:
/// `(C - 1) * var_without_i - var`, where `var_without_i` has divisor `C - 1`.
///
/// Zero-based `i`. Non-negative up to rounding; a zero result must be
/// clamped (see [`DyIsruParams::from_exact`]) before use.
pub fn beta_exact(x: &ChannelVector, i: usize) -> Result<f64> {
    check_channel_index(x, i)?;
    let stats = norm_stats(x);
    let c = x.channels() as f64;
    let var_without_i = x
        .values()
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, v)| (v - stats.mean).powi(2))
        .sum::<f64>()
        / (c - 1.0);
    Ok((c - 1.0) * var_without_i - stats.variance)
}
