//! Bracketed root finding for strictly increasing functions.

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;

/// Solves `g(t) = target` for `t >= lo`, where `g` is continuous and
/// strictly increasing with `g(lo) <= target` and derivative `slope`.
///
/// The bracket is grown by doubling from `lo` with an initial width
/// `first_step`; if `g(limit) < target` the search fails with
/// [`Error::HorizonExceeded`]. Inside the bracket, Newton steps are used
/// while they stay strictly inside it and bisection otherwise. Once
/// `|g(t) - target| <= tol`, a single extra Newton step polishes the root.
pub fn solve_increasing<G, D>(
    mut g: G,
    slope: D,
    lo: f64,
    target: f64,
    first_step: f64,
    limit: f64,
    tol: f64,
) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
    D: Fn(f64) -> f64,
{
    let mut lo = lo;
    let mut f_lo = g(lo)? - target;
    if f_lo >= -tol {
        return Ok(lo);
    }
    let mut step = if first_step.is_finite() && first_step > 0.0 {
        first_step
    } else {
        1.0
    };
    let (mut hi, mut f_hi);
    loop {
        hi = lo + step;
        if hi >= limit {
            hi = limit;
        }
        f_hi = g(hi)? - target;
        if f_hi >= 0.0 {
            break;
        }
        if hi >= limit {
            return Err(Error::HorizonExceeded { target, limit });
        }
        lo = hi;
        f_lo = f_hi;
        step *= 2.0;
    }
    if f_hi <= tol {
        return Ok(hi);
    }

    let mut x = lo + (hi - lo) * (-f_lo / (f_hi - f_lo));
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..MAX_ITERATIONS {
        let fx = g(x)? - target;
        if fx.abs() <= tol {
            let d = slope(x);
            let polished = x - fx / d;
            if polished.is_finite() && polished >= lo && polished <= hi && polished != x {
                let fp = g(polished)? - target;
                if fp.abs() <= fx.abs() {
                    return Ok(polished);
                }
            }
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(x);
        }
        let d = slope(x);
        let newton = x - fx / d;
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            mid
        };
    }
    Err(Error::NumericFailure {
        message: format!("root search for target {target} did not converge in {MAX_ITERATIONS} iterations"),
        achieved: (g(x)? - target).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function() {
        let t = solve_increasing(|t| Ok(2.0 * t), |_| 2.0, 0.0, 3.0, 0.1, 100.0, 1e-12).unwrap();
        assert!((t - 1.5).abs() < 1e-14);
    }

    #[test]
    fn zero_target_returns_start() {
        assert_eq!(solve_increasing(Ok, |_| 1.0, 0.0, 0.0, 1.0, 10.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn nonlinear_with_bad_derivative_falls_back_to_bisection() {
        // Derivative deliberately wrong; bisection must still converge.
        let t = solve_increasing(|t| Ok(t * t * t), |_| 1e-9, 0.0, 8.0, 0.5, 100.0, 1e-12).unwrap();
        assert!((t - 2.0).abs() < 1e-10);
    }

    #[test]
    fn horizon_exceeded() {
        let r = solve_increasing(|t| Ok(1.0 - (-t).exp()), |t| (-t).exp(), 0.0, 2.0, 1.0, 64.0, 1e-10);
        assert!(matches!(r, Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn kinked_function() {
        let g = |t: f64| if t < 1.0 { 0.1 * t } else { 0.1 + 10.0 * (t - 1.0) };
        let d = |t: f64| if t < 1.0 { 0.1 } else { 10.0 };
        let t = solve_increasing(|t| Ok(g(t)), d, 0.0, 5.1, 0.01, 1e6, 1e-12).unwrap();
        assert!((g(t) - 5.1).abs() <= 1e-12);
    }
}
