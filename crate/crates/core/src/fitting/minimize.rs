//! Derivative-free scalar minimization: geometric bracket expansion followed
//! by Brent's golden-section/parabolic search.

use crate::error::{Error, Result};

/// Golden section ratio `(3 - sqrt(5)) / 2`.
const CGOLD: f64 = 0.381_966_011_250_105_1;
const GOLDEN_GROWTH: f64 = 1.618_033_988_749_895;

/// Three abscissae with `f(mid) < min(f(lo), f(hi))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub mid: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_mid: f64,
    pub f_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub fx: f64,
    pub bracket: Bracket,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    /// Initial half-width of the bracket around the start point.
    pub initial_step: f64,
    /// Hard limits on the abscissa; reaching one while expanding is a failure.
    pub lower: f64,
    pub upper: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
    pub max_expansions: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            rel_tol: 1e-12,
            abs_tol: 1e-15,
            max_iter: 200,
            max_expansions: 200,
        }
    }
}

/// Expands downhill from `start` until the middle point is strictly lower
/// than both ends.
pub fn bracket_minimum<F>(
    mut f: F,
    start: f64,
    opts: &MinimizeOptions,
    what: &str,
) -> Result<Bracket>
where
    F: FnMut(f64) -> f64,
{
    let fail = |why: &str| Error::BracketFailure(format!("{what}: {why}"));
    if !(start > opts.lower && start < opts.upper) {
        return Err(fail("start point outside the search limits"));
    }
    let mut step = opts.initial_step;
    let mut lo = (start - step).max(opts.lower);
    let mut hi = (start + step).min(opts.upper);
    let mut mid = start;
    let (mut f_lo, mut f_mid, mut f_hi) = (f(lo), f(mid), f(hi));
    for _ in 0..opts.max_expansions {
        if [f_lo, f_mid, f_hi].iter().any(|v| v.is_nan()) {
            return Err(fail("objective returned NaN"));
        }
        if f_mid < f_lo && f_mid < f_hi {
            return Ok(Bracket {
                lo,
                mid,
                hi,
                f_lo,
                f_mid,
                f_hi,
            });
        }
        step *= GOLDEN_GROWTH;
        if f_lo <= f_hi {
            if lo <= opts.lower {
                return Err(fail("minimum at or beyond the lower search limit"));
            }
            hi = mid;
            f_hi = f_mid;
            mid = lo;
            f_mid = f_lo;
            lo = (lo - step).max(opts.lower);
            f_lo = f(lo);
        } else {
            if hi >= opts.upper {
                return Err(fail("minimum at or beyond the upper search limit"));
            }
            lo = mid;
            f_lo = f_mid;
            mid = hi;
            f_mid = f_hi;
            hi = (hi + step).min(opts.upper);
            f_hi = f(hi);
        }
    }
    Err(fail("bracket expansion did not terminate"))
}

/// Brent's method inside an established bracket. Stops when the remaining
/// interval is within `rel_tol * |x| + abs_tol` of the best point or after
/// `max_iter` iterations.
pub fn brent<F>(mut f: F, bracket: Bracket, opts: &MinimizeOptions) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut x = bracket.mid;
    let mut fx = bracket.f_mid;
    let (mut w, mut v) = (x, x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = opts.rel_tol * x.abs() + opts.abs_tol;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        iterations += 1;

        let mut golden = true;
        if e.abs() > tol1 {
            // parabola through x, w, v
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }

        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }

    Minimum {
        x,
        fx,
        bracket,
        iterations,
    }
}

pub fn minimize<F>(mut f: F, start: f64, opts: &MinimizeOptions, what: &str) -> Result<Minimum>
where
    F: FnMut(f64) -> f64,
{
    let bracket = bracket_minimum(&mut f, start, opts, what)?;
    Ok(brent(&mut f, bracket, opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let m = minimize(
            |x| (x - 3.0).powi(2) + 1.0,
            0.0,
            &MinimizeOptions::default(),
            "q",
        )
        .unwrap();
        assert!((m.x - 3.0).abs() < 1e-7);
        assert_eq!(m.fx, 1.0);
        let b = m.bracket;
        assert!(b.lo < b.mid && b.mid < b.hi);
        assert!(b.f_mid < b.f_lo && b.f_mid < b.f_hi);
    }

    #[test]
    fn expands_left_and_right() {
        let opts = MinimizeOptions::default();
        let m = minimize(|x| (x + 40.0).powi(2), 0.0, &opts, "left").unwrap();
        assert!((m.x + 40.0).abs() < 1e-6);
        let m = minimize(|x| (x.exp() - 50.0).powi(2), 0.0, &opts, "right").unwrap();
        assert!((m.x - 50f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn sharp_minimum_resolves_to_relative_tolerance() {
        // |x - c| has no rounding plateau
        let c = -2.995_732_273_553_991;
        let m = minimize(|x| (x - c).abs(), 0.0, &MinimizeOptions::default(), "abs").unwrap();
        assert!((m.x - c).abs() < 1e-11);
    }

    #[test]
    fn monotone_hits_limit() {
        let opts = MinimizeOptions {
            lower: -10.0,
            upper: 10.0,
            ..Default::default()
        };
        let err = minimize(|x| x, 0.0, &opts, "mono").unwrap_err();
        assert!(matches!(err, Error::BracketFailure(_)));
        let err = minimize(|_| 1.0, 0.0, &opts, "flat").unwrap_err();
        assert!(matches!(err, Error::BracketFailure(_)));
        let err = minimize(|_| f64::NAN, 0.0, &opts, "nan").unwrap_err();
        assert!(matches!(err, Error::BracketFailure(_)));
    }
}
