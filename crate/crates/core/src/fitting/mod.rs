//! One-parameter least-squares fits of scaled DyT (α) and DyISRU (β) to
//! `(x, y)` data such as layer-normalized outliers.
//!
//! Both parameters are strictly positive, so the search runs over the log of
//! the parameter.

mod minimize;

pub use minimize::{bracket_minimum, brent, minimize, Bracket, MinimizeOptions, Minimum};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::activations::{dyisru, scaled_dyt, DyIsruParams, DyTParams};
use crate::error::{Error, Result};

/// Search limits for α.
pub const ALPHA_RANGE: (f64, f64) = (1e-12, 1e6);
/// Search limits for β.
pub const BETA_RANGE: (f64, f64) = (1e-9, 1e12);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionKind {
    #[serde(rename = "dyt")]
    DyT,
    #[serde(rename = "dyisru")]
    DyIsru,
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionKind::DyT => write!(f, "dyt"),
            FunctionKind::DyIsru => write!(f, "dyisru"),
        }
    }
}

impl FromStr for FunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dyt" => Ok(FunctionKind::DyT),
            "dyisru" => Ok(FunctionKind::DyIsru),
            other => Err(Error::InvalidParameter(format!(
                "unknown function kind '{other}'"
            ))),
        }
    }
}

impl FunctionKind {
    /// Evaluates the fitted family at `x`.
    pub fn eval(self, x: f64, parameter: f64, channels: usize) -> Result<f64> {
        Ok(match self {
            FunctionKind::DyT => scaled_dyt(x, &DyTParams::new(parameter, channels)?),
            FunctionKind::DyIsru => dyisru(x, &DyIsruParams::new(parameter, channels)?),
        })
    }
}

/// Points to fit. The first `n_original` points are the caller's data; any
/// further points are mirror images added by [`mirror_augment`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitDataset {
    points: Vec<(f64, f64)>,
    channels: usize,
    mirrored: bool,
    n_original: usize,
}

impl FitDataset {
    pub fn new(points: Vec<(f64, f64)>, channels: usize) -> Result<Self> {
        validate(&points, channels)?;
        let n_original = points.len();
        Ok(Self {
            points,
            channels,
            mirrored: false,
            n_original,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn mirrored(&self) -> bool {
        self.mirrored
    }

    pub fn n_original(&self) -> usize {
        self.n_original
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn validate(points: &[(f64, f64)], channels: usize) -> Result<()> {
    if channels < 2 {
        return Err(Error::InvalidParameter(format!(
            "channels must be >= 2, got {channels}"
        )));
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("fit dataset is empty".into()));
    }
    let bound = ((channels - 1) as f64).sqrt();
    for (k, &(x, y)) in points.iter().enumerate() {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite {
                index: k,
                value: if x.is_finite() { y } else { x },
            });
        }
        if y.abs() >= bound {
            return Err(Error::TargetOutOfRange { x, y, bound });
        }
    }
    Ok(())
}

/// Appends `(-x, -y)` for every point whose mirror image is not already in
/// the data (so `(0, 0)` and already odd-symmetric data gain nothing).
pub fn mirror_augment(points: &[(f64, f64)], channels: usize) -> Result<FitDataset> {
    validate(points, channels)?;
    let mut all = points.to_vec();
    for &(x, y) in points {
        let m = (-x, -y);
        if !all.contains(&m) {
            all.push(m);
        }
    }
    Ok(FitDataset {
        points: all,
        channels,
        mirrored: true,
        n_original: points.len(),
    })
}

/// Bracket reported in parameter units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBracket {
    pub lo: f64,
    pub mid: f64,
    pub hi: f64,
    pub sse_lo: f64,
    pub sse_mid: f64,
    pub sse_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub function_kind: FunctionKind,
    pub parameter: f64,
    pub sse: f64,
    /// Mean absolute residual over the unmirrored points.
    pub mae: f64,
    pub n_points: usize,
    #[serde(skip)]
    pub channels: usize,
    /// Residuals `y - f(x)` in dataset order (originals first).
    #[serde(skip)]
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub n_original: usize,
    #[serde(skip)]
    pub bracket: ParamBracket,
    #[serde(skip)]
    pub iterations: usize,
}

/// Sum of squared residuals of `kind` with `parameter` over `data`.
pub fn sse(kind: FunctionKind, parameter: f64, data: &FitDataset) -> f64 {
    let bound = ((data.channels - 1) as f64).sqrt();
    data.points
        .iter()
        .map(|&(x, y)| {
            let f = match kind {
                FunctionKind::DyT => bound * (parameter * x).tanh(),
                FunctionKind::DyIsru => bound * x / (parameter + x * x).sqrt(),
            };
            (y - f).powi(2)
        })
        .sum()
}

fn fit(kind: FunctionKind, data: &FitDataset, start: f64, range: (f64, f64)) -> Result<FitResult> {
    if data.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "fit needs at least 2 points, got {}",
            data.len()
        )));
    }
    let (lower, upper) = (range.0.ln(), range.1.ln());
    let opts = MinimizeOptions {
        initial_step: 1.0,
        lower,
        upper,
        ..MinimizeOptions::default()
    };
    let t0 = start.ln().clamp(lower + 1.0, upper - 1.0);
    let objective = |t: f64| sse(kind, t.exp(), data);
    let min = minimize(objective, t0, &opts, &format!("{kind} parameter"))?;

    let parameter = min.x.exp();
    let residuals: Vec<f64> = data
        .points
        .iter()
        .map(|&(x, y)| kind.eval(x, parameter, data.channels).map(|f| y - f))
        .collect::<Result<_>>()?;
    let n_original = data.n_original;
    let mae = residuals[..n_original].iter().map(|r| r.abs()).sum::<f64>() / n_original as f64;
    let b = min.bracket;
    Ok(FitResult {
        function_kind: kind,
        parameter,
        sse: residuals.iter().map(|r| r * r).sum(),
        mae,
        n_points: data.len(),
        channels: data.channels,
        residuals,
        n_original,
        bracket: ParamBracket {
            lo: b.lo.exp(),
            mid: b.mid.exp(),
            hi: b.hi.exp(),
            sse_lo: b.f_lo,
            sse_mid: b.f_mid,
            sse_hi: b.f_hi,
        },
        iterations: min.iterations,
    })
}

fn max_abs_x(data: &FitDataset) -> f64 {
    data.points.iter().map(|p| p.0.abs()).fold(0.0, f64::max)
}

/// Least-squares α for `sqrt(C - 1) tanh(alpha x)`, started at `1 / max|x|`.
pub fn fit_dyt(data: &FitDataset) -> Result<FitResult> {
    let scale = max_abs_x(data);
    if scale == 0.0 {
        return Err(Error::BracketFailure(
            "dyt parameter: all x are zero".into(),
        ));
    }
    fit(FunctionKind::DyT, data, 1.0 / scale, ALPHA_RANGE)
}

/// Least-squares β for `sqrt(C - 1) x / sqrt(beta + x^2)`, started at the
/// median of `x^2`.
pub fn fit_dyisru(data: &FitDataset) -> Result<FitResult> {
    if max_abs_x(data) == 0.0 {
        return Err(Error::BracketFailure(
            "dyisru parameter: all x are zero".into(),
        ));
    }
    let mut sq: Vec<f64> = data.points.iter().map(|p| p.0 * p.0).collect();
    sq.sort_by(f64::total_cmp);
    let n = sq.len();
    let median = if n % 2 == 1 {
        sq[n / 2]
    } else {
        0.5 * (sq[n / 2 - 1] + sq[n / 2])
    };
    let start = if median > 0.0 { median } else { 1.0 };
    fit(FunctionKind::DyIsru, data, start, BETA_RANGE)
}

pub fn fit_kind(kind: FunctionKind, data: &FitDataset) -> Result<FitResult> {
    match kind {
        FunctionKind::DyT => fit_dyt(data),
        FunctionKind::DyIsru => fit_dyisru(data),
    }
}

/// `(mae, max_abs)` over the unmirrored residuals.
pub fn residual_stats(result: &FitResult) -> (f64, f64) {
    let original = &result.residuals[..result.n_original.min(result.residuals.len())];
    if original.is_empty() {
        return (0.0, 0.0);
    }
    let mae = original.iter().map(|r| r.abs()).sum::<f64>() / original.len() as f64;
    let max_abs = original.iter().map(|r| r.abs()).fold(0.0, f64::max);
    (mae, max_abs)
}
