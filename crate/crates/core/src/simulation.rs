//! Stepwise outlier experiment: draw a Gaussian token, push its largest
//! channel further out in fixed steps and layer-normalize every frame.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::{layer_norm, ChannelVector};
use crate::rng::GaussianStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub channels: usize,
    pub sigma: f64,
    pub mu: f64,
    pub step: f64,
    pub s_max: usize,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            channels: 100,
            sigma: 2.0,
            mu: 0.0,
            step: 5.0,
            s_max: 9,
            seed: 1,
        }
    }
}

impl SimulationConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels < 2 {
            return Err(Error::InvalidParameter(format!(
                "channels must be >= 2, got {}",
                self.channels
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step must be positive and finite, got {}",
                self.step
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mu must be finite, got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub s: usize,
    pub x: ChannelVector,
    pub y: ChannelVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierScenario {
    pub config: SimulationConfig,
    pub base_sample: ChannelVector,
    /// Zero-based index of the channel that is pushed outward.
    pub outlier_index: usize,
    pub frames: Vec<Frame>,
}

impl OutlierScenario {
    pub fn frame(&self, s: usize) -> Option<&Frame> {
        self.frames.iter().find(|f| f.s == s)
    }

    /// Whether `(s, channel)` is drawn as an outlier: the pushed channel in
    /// every frame after the baseline.
    pub fn is_outlier(&self, s: usize, channel: usize) -> bool {
        s > 0 && channel == self.outlier_index
    }
}

/// `C` draws from `Normal(mu, sigma^2)`; see [`GaussianStream`] for the exact
/// generator.
pub fn sample_base(config: &SimulationConfig) -> Result<ChannelVector> {
    config.validate()?;
    let mut rng = GaussianStream::new(config.seed);
    let values = (0..config.channels)
        .map(|_| rng.normal(config.mu, config.sigma))
        .collect();
    ChannelVector::new(values)
}

/// First index of the maximum.
fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

/// Frames `s = 0..=s_max`, where frame `s` adds `step * s` to the base
/// sample's largest channel (not cumulatively).
pub fn run_scenario(config: &SimulationConfig) -> Result<OutlierScenario> {
    let base_sample = sample_base(config)?;
    let outlier_index = argmax(base_sample.values());
    let frames = (0..=config.s_max)
        .map(|s| {
            let mut values = base_sample.values().to_vec();
            values[outlier_index] += config.step * s as f64;
            let x = ChannelVector::new(values)?;
            let y = layer_norm(&x)?;
            Ok(Frame { s, x, y })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OutlierScenario {
        config: *config,
        base_sample,
        outlier_index,
        frames,
    })
}

/// `(x_o, y_o)` for `s = 1..=s_max`.
pub fn outlier_points(scenario: &OutlierScenario) -> Result<Vec<(f64, f64)>> {
    let o = scenario.outlier_index;
    let points: Vec<(f64, f64)> = scenario
        .frames
        .iter()
        .filter(|f| f.s > 0)
        .map(|f| (f.x.values()[o], f.y.values()[o]))
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyOutliers);
    }
    Ok(points)
}

/// Ordinary least-squares slope, intercept and coefficient of determination.
pub fn linear_regression(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    (slope, intercept, 1.0 - ss_res / syy)
}
