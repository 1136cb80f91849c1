//! Numerical oracles for the identities linking layer normalization to the
//! dynamic activations. Each check compares two independent evaluation
//! routes and records the largest discrepancy it saw.

use serde::{Deserialize, Serialize};

use crate::activations::{
    beta_exact, dyisru, dyisru_general, dyisru_general_derivative, isru, scaled_dyt,
    scaled_dyt_derivative, DyIsruParams, DyTParams,
};
use crate::error::{Error, Result};
use crate::norm::{layer_norm, ln_derivative_analytic, norm_stats, ChannelVector};
use crate::rng::GaussianStream;

/// Central finite-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Below this derivative magnitude relative errors are measured against this
/// floor instead, so the layer-norm derivative check becomes absolute
/// (`1e-6 * 1e-2 = 1e-8`) near zeros.
pub const DERIVATIVE_ZERO_SCALE: f64 = 1e-2;

pub const THEOREM1_TOL: f64 = 1e-6;
pub const THEOREM2_TOL: f64 = 1e-8;
pub const THEOREM3_TOL: f64 = 1e-10;
pub const THEOREM4_TOL: f64 = 1e-10;
pub const ISRU_TOL: f64 = 1e-12;

/// Draws whose population standard deviation falls below this are redrawn.
/// Keeps the finite-difference step small against the spread (`h / sd <= 1e-4`)
/// and bounds the conditioning `|mu| / sd` of the centered values.
pub const REDRAW_MIN_SD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub trials: u64,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub verdict: bool,
    pub checks: Vec<CheckEntry>,
}

impl VerificationReport {
    pub fn new(seed: u64, checks: Vec<CheckEntry>) -> Self {
        let verdict = checks.iter().all(|c| c.passed);
        Self {
            seed,
            verdict,
            checks,
        }
    }
}

/// Running maxima for one check. `metric` is the quantity compared against
/// the tolerance.
struct ErrorTally {
    trials: u64,
    max_abs: f64,
    max_rel: f64,
    max_metric: f64,
}

impl ErrorTally {
    fn new() -> Self {
        Self {
            trials: 0,
            max_abs: 0.0,
            max_rel: 0.0,
            max_metric: 0.0,
        }
    }

    fn record(&mut self, abs: f64, rel: f64, metric: f64) {
        self.max_abs = self.max_abs.max(abs);
        self.max_rel = self.max_rel.max(rel);
        // NaN must fail the check
        if metric.is_nan() {
            self.max_metric = f64::INFINITY;
        } else {
            self.max_metric = self.max_metric.max(metric);
        }
    }

    fn finish(self, name: &str, tolerance: f64) -> CheckEntry {
        CheckEntry {
            name: name.to_string(),
            trials: self.trials,
            max_abs_error: self.max_abs,
            max_rel_error: self.max_rel,
            tolerance,
            passed: self.max_metric <= tolerance,
        }
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    let abs = (got - want).abs();
    if abs == 0.0 {
        0.0
    } else {
        abs / want.abs().max(f64::MIN_POSITIVE)
    }
}

fn require_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    Ok(())
}

fn require_channels(channels: &[usize]) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::InvalidParameter("channel list is empty".into()));
    }
    if let Some(&c) = channels.iter().find(|&&c| c < 2) {
        return Err(Error::InvalidParameter(format!(
            "channels must be >= 2, got {c}"
        )));
    }
    Ok(())
}

/// Standard normal draws scaled by a random spread in `[0.1, 10]`; redrawn
/// while the population standard deviation is below [`REDRAW_MIN_SD`].
pub fn random_vector(rng: &mut GaussianStream, channels: usize) -> ChannelVector {
    loop {
        let sd = rng.uniform_in(0.1, 10.0);
        let values: Vec<f64> = (0..channels).map(|_| sd * rng.standard_normal()).collect();
        let x = ChannelVector::new(values).expect("finite draws with channels >= 2");
        if norm_stats(&x).std_dev() >= REDRAW_MIN_SD {
            return x;
        }
    }
}

/// `(layer_norm(x + h e_i)_i - layer_norm(x - h e_i)_i) / 2h`.
pub fn fd_ln_derivative(x: &ChannelVector, i: usize, h: f64) -> Result<f64> {
    let mut plus = x.values().to_vec();
    let mut minus = plus.clone();
    plus[i] += h;
    minus[i] -= h;
    let yp = layer_norm(&ChannelVector::new(plus)?)?.values()[i];
    let ym = layer_norm(&ChannelVector::new(minus)?)?.values()[i];
    Ok((yp - ym) / (2.0 * h))
}

/// Analytic layer-norm derivative against central differences on every
/// channel of `trials` random vectors per channel count.
///
/// The compared metric is `|analytic - fd| / max(|analytic|, 1e-2)`, i.e.
/// relative error, falling back to an absolute bound of `1e-8` near zeros.
pub fn check_theorem1(seed: u64, trials: u64, channels: &[usize]) -> Result<CheckEntry> {
    require_trials(trials)?;
    require_channels(channels)?;
    let mut rng = GaussianStream::derived(seed, "theorem1_ln_derivative");
    let mut tally = ErrorTally::new();
    for &c in channels {
        for _ in 0..trials {
            let x = random_vector(&mut rng, c);
            for i in 0..c {
                let analytic = ln_derivative_analytic(&x, i)?;
                let fd = fd_ln_derivative(&x, i, FD_STEP)?;
                let abs = (analytic - fd).abs();
                let rel = abs / analytic.abs().max(DERIVATIVE_ZERO_SCALE);
                tally.record(abs, rel, rel);
            }
            tally.trials += 1;
        }
    }
    Ok(tally.finish("theorem1_ln_derivative", THEOREM1_TOL))
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// The `[-100, 100]` grid with step 0.1 used by the ODE checks.
pub fn default_grid() -> Vec<f64> {
    linspace(-100.0, 100.0, 2001)
}

/// Scaled DyT solves `y' = F (C - 1 - y^2)` with constant `F = alpha / sqrt(C - 1)`.
///
/// The left side is taken both analytically and by central differences; the
/// absolute residual of either route must stay within `1e-8`.
pub fn check_theorem2(alphas: &[f64], channels: &[usize], grid: &[f64]) -> Result<CheckEntry> {
    require_channels(channels)?;
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("grid must be finite".into()));
    }
    let mut tally = ErrorTally::new();
    for &alpha in alphas {
        for &c in channels {
            let p = DyTParams::new(alpha, c)?;
            let f = alpha / p.bound();
            let cm1 = (c - 1) as f64;
            for &x in grid {
                let y = scaled_dyt(x, &p);
                let rhs = f * (cm1 - y * y);
                let analytic = scaled_dyt_derivative(x, &p);
                let fd =
                    (scaled_dyt(x + FD_STEP, &p) - scaled_dyt(x - FD_STEP, &p)) / (2.0 * FD_STEP);
                let abs = (analytic - rhs).abs().max((fd - rhs).abs());
                tally.record(abs, abs / rhs.abs().max(DERIVATIVE_ZERO_SCALE), abs);
                tally.trials += 1;
            }
        }
    }
    Ok(tally.finish("theorem2_scaled_dyt_ode", THEOREM2_TOL))
}

/// General DyISRU solves the layer-norm ODE once `F(x)` is written as
/// `y / (C (x - mu))` and the chain factor `d(x - mu)/dx = (C - 1)/C` is
/// applied:
///
/// `dy/d(x - mu) * (C - 1)/C = (1/C) * y/(x - mu) * (C - 1 - y^2)`.
///
/// Grid points with `x == mu` are skipped.
pub fn check_theorem3(
    betas: &[f64],
    channels: &[usize],
    mu: f64,
    grid: &[f64],
) -> Result<CheckEntry> {
    require_channels(channels)?;
    let mut tally = ErrorTally::new();
    for &beta in betas {
        for &c in channels {
            let p = DyIsruParams::centered(beta, c, mu)?;
            let cf = c as f64;
            let cm1 = (c - 1) as f64;
            for &x in grid {
                let d = x - mu;
                if d == 0.0 {
                    continue;
                }
                let y = dyisru_general(x, &p);
                let lhs = dyisru_general_derivative(x, &p) * (cm1 / cf);
                let rhs = (y / d) * (cm1 - y * y) / cf;
                let rel = rel_err(lhs, rhs);
                tally.record((lhs - rhs).abs(), rel, rel);
                tally.trials += 1;
            }
        }
    }
    Ok(tally.finish("theorem3_dyisru_general_ode", THEOREM3_TOL))
}

/// Channel-exact β: general DyISRU centered at the vector mean reproduces
/// every layer-normalized channel. Each trial draws its channel count from
/// `channels`.
pub fn check_theorem4(seed: u64, trials: u64, channels: &[usize]) -> Result<CheckEntry> {
    require_trials(trials)?;
    require_channels(channels)?;
    let mut rng = GaussianStream::derived(seed, "theorem4_channel_exact_beta");
    let mut tally = ErrorTally::new();
    for _ in 0..trials {
        let c = channels[rng.index_in(0, channels.len() - 1)];
        let x = random_vector(&mut rng, c);
        let mean = norm_stats(&x).mean;
        let y = layer_norm(&x)?;
        for i in 0..c {
            let p = DyIsruParams::from_exact(beta_exact(&x, i)?, c, mean)?;
            let got = dyisru_general(x.values()[i], &p);
            let want = y.values()[i];
            let rel = rel_err(got, want);
            tally.record((got - want).abs(), rel, rel);
        }
        tally.trials += 1;
    }
    Ok(tally.finish("theorem4_channel_exact_beta", THEOREM4_TOL))
}

/// `sqrt(beta) * dyisru(x; beta, C) == sqrt(C - 1) * isru(x; 1/beta)` over
/// random `x`, log-uniform `beta` in `[1e-3, 1e6]` and `C` in `2..=1000`.
pub fn check_isru_equivalence(seed: u64, trials: u64) -> Result<CheckEntry> {
    require_trials(trials)?;
    let mut rng = GaussianStream::derived(seed, "isru_equivalence");
    let mut tally = ErrorTally::new();
    for _ in 0..trials {
        let x = rng.uniform_in(0.1, 100.0) * rng.standard_normal();
        let beta = 10f64.powf(rng.uniform_in(-3.0, 6.0));
        let c = rng.index_in(2, 1000);
        let p = DyIsruParams::new(beta, c)?;
        let lhs = beta.sqrt() * dyisru(x, &p);
        let rhs = p.bound() * isru(x, 1.0 / beta)?;
        let rel = rel_err(lhs, rhs);
        tally.record((lhs - rhs).abs(), rel, rel);
        tally.trials += 1;
    }
    Ok(tally.finish("isru_equivalence", ISRU_TOL))
}

/// The five checks with the default parameter sets. `trials` is the number
/// of random vectors per channel count (theorem 1) or in total (theorem 4,
/// ISRU). Checks run on separate threads; each owns its RNG stream.
pub fn run_suite(seed: u64, trials: u64) -> Result<VerificationReport> {
    require_trials(trials)?;
    let grid = default_grid();
    let ode_channels = [2, 50, 100];
    let theorem4_channels: Vec<usize> = (2..=100).collect();
    let checks = std::thread::scope(|s| {
        let t1 = s.spawn(|| check_theorem1(seed, trials, &[2, 3, 10, 100]));
        let t2 = s.spawn(|| check_theorem2(&[0.049, 0.5, 2.0], &ode_channels, &grid));
        let t3 = s.spawn(|| check_theorem3(&[1.0, 10.0, 301.1], &ode_channels, 0.0, &grid));
        let t4 = s.spawn(|| check_theorem4(seed, trials, &theorem4_channels));
        let t5 = s.spawn(|| check_isru_equivalence(seed, trials));
        [t1, t2, t3, t4, t5]
            .into_iter()
            .map(|h| h.join().expect("verification check panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(VerificationReport::new(seed, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem1_passes_on_reference_seed() {
        let e = check_theorem1(1, 100, &[2, 10, 100]).unwrap();
        assert!(e.passed, "{e:?}");
        assert_eq!(e.trials, 300);
    }

    #[test]
    fn theorem1_stationary_pair() {
        let x = ChannelVector::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(ln_derivative_analytic(&x, 0).unwrap(), 0.0);
        assert!(fd_ln_derivative(&x, 0, FD_STEP).unwrap().abs() <= 1e-8);
    }

    #[test]
    fn random_vectors_have_usable_spread() {
        let mut rng = GaussianStream::new(0);
        for c in [2, 3, 100] {
            for _ in 0..200 {
                assert!(norm_stats(&random_vector(&mut rng, c)).std_dev() >= REDRAW_MIN_SD);
            }
        }
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(check_theorem1(1, 0, &[2]).is_err());
        assert!(check_theorem4(1, 0, &[2]).is_err());
        assert!(check_isru_equivalence(1, 0).is_err());
        assert!(check_theorem1(1, 1, &[1]).is_err());
    }

    #[test]
    fn theorem2_cases() {
        let grid: Vec<f64> = (-1000..=1000).map(|k| k as f64 * 0.1).collect();
        let e = check_theorem2(&[0.5], &[50], &grid).unwrap();
        assert!(e.max_abs_error <= 1e-8, "{e:?}");
        // analytic route alone is exact to rounding
        let p = DyTParams::new(0.5, 50).unwrap();
        let f = 0.5 / p.bound();
        for &x in &grid {
            let y = scaled_dyt(x, &p);
            assert!((scaled_dyt_derivative(x, &p) - f * (49.0 - y * y)).abs() <= 1e-10);
        }
        let e = check_theorem2(&[0.5], &[50], &[0.0]).unwrap();
        assert!(e.max_abs_error <= 1e-10);
        assert!(check_theorem2(&[0.049], &[100], &grid).unwrap().passed);
    }

    #[test]
    fn theorem3_hand_case() {
        // beta = 1, C = 2, x = 1: both sides are 2^-5/2.
        let p = DyIsruParams::new(1.0, 2).unwrap();
        let y = dyisru_general(1.0, &p);
        let lhs = dyisru_general_derivative(1.0, &p) * 0.5;
        let rhs = y * (1.0 - y * y) / 2.0;
        let want = 0.5 * 2f64.powf(-1.5);
        assert!((lhs - want).abs() < 1e-15);
        assert!((rhs - want).abs() < 1e-15);
        assert!((want - 0.17678).abs() < 1e-5);
    }

    #[test]
    fn theorem3_skips_center() {
        let e = check_theorem3(&[301.1], &[100], 0.0, &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(e.trials, 2);
        assert!(e.passed);
    }

    #[test]
    fn theorem4_and_isru_pass() {
        let e = check_theorem4(7, 200, &(2..=100).collect::<Vec<_>>()).unwrap();
        assert!(e.passed, "{e:?}");
        let e = check_isru_equivalence(3, 2000).unwrap();
        assert!(e.passed, "{e:?}");
    }

    #[test]
    fn theorem4_two_channel_case_uses_clamped_beta() {
        let x = ChannelVector::new(vec![1.0, -1.0]).unwrap();
        let b = beta_exact(&x, 0).unwrap();
        assert_eq!(b, 0.0);
        let p = DyIsruParams::from_exact(b, 2, 0.0).unwrap();
        assert!((dyisru_general(1.0, &p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn failing_metric_fails_report() {
        let mut t = ErrorTally::new();
        t.record(1.0, 1.0, 1.0);
        let e = t.finish("x", 0.5);
        assert!(!e.passed);
        let r = VerificationReport::new(0, vec![e]);
        assert!(!r.verdict);
        let mut t = ErrorTally::new();
        t.record(f64::NAN, f64::NAN, f64::NAN);
        assert!(!t.finish("nan", 1.0).passed);
    }

    #[test]
    fn suite_is_deterministic() {
        let a = run_suite(11, 5).unwrap();
        let b = run_suite(11, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.checks.len(), 5);
        assert!(a.verdict, "{a:?}");
    }
}
