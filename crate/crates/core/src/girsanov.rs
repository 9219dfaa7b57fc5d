//! Girsanov log-densities against the unit Poisson law, the entropy function
//! `𝔪`, and both sides of the change-of-variable identities along a path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intensity::{Checkpoint, Intensity, TimeChangeEval, Tolerances};
use crate::pointprocess::Configuration;
use crate::quadrature::adaptive_simpson_split;

/// `𝔪(x) = (x + 1) log(x + 1) - x`, extended by `𝔪(-1) = 1`.
pub fn m_function(x: f64) -> Result<f64> {
    if x.is_nan() || x < -1.0 {
        return Err(Error::Domain(format!("𝔪 is defined on [-1, ∞), got {x}")));
    }
    if x == -1.0 {
        return Ok(1.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok((x + 1.0) * x.ln_1p() - x)
}

/// `x - 1 - log x`, the entropy integrand on the original time axis.
fn entropy_density(rate: f64) -> f64 {
    rate - 1.0 - rate.ln()
}

/// `log Λ_y(path, horizon) = Σ_{T_k ≤ horizon} log ẏ(T_k) + ∫_0^horizon (1 - ẏ) ds`.
pub fn log_density<M: Intensity>(model: &M, path: &Configuration, horizon: f64) -> Result<f64> {
    log_density_with(model, path, horizon, Tolerances::default())
}

pub fn log_density_with<M: Intensity>(model: &M, path: &Configuration, horizon: f64, tol: Tolerances) -> Result<f64> {
    check_horizon(horizon)?;
    let stopped = path.stop(horizon)?;
    let eval = TimeChangeEval::new(model, &stopped, tol)?;
    log_density_of(&eval, &stopped, horizon)
}

fn log_density_of<M: Intensity>(eval: &TimeChangeEval<'_, M>, path: &Configuration, horizon: f64) -> Result<f64> {
    let mut jump_term = 0.0;
    for &t in path.iter() {
        let l = eval.rate(t).ln();
        if !l.is_finite() {
            return Err(Error::NonFiniteLog { time: t });
        }
        jump_term += l;
    }
    Ok(jump_term + horizon - eval.compensator(horizon)?)
}

/// `log Λ*(t)`: the density evaluated at the random time `y*(path, t)`.
pub fn log_density_star<M: Intensity>(model: &M, path: &Configuration, t: f64, tol: Tolerances) -> Result<f64> {
    let eval = TimeChangeEval::new(model, path, tol)?;
    let clock = eval.inverse(t)?;
    log_density_with(model, path, clock, tol)
}

/// Path-wise functionals over `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFunctionals {
    pub log_lambda: f64,
    /// `∫_0^H (ẏ - 1 - log ẏ) du`.
    pub entropy_n_side: f64,
    /// `∫_0^{y(H)} 𝔪(ẏ* - 1) ds`, integrated on the original axis after the
    /// substitution `s = y(u)`.
    pub entropy_ystar_side: f64,
    /// The same integral by direct quadrature on the image axis through the
    /// numeric inverse.
    pub entropy_ystar_direct: f64,
    /// `∫_0^{y(H)} |1/ẏ* - 1|^p ẏ* ds`, on the image axis.
    pub pnorm_side_a: f64,
    /// `∫_0^H |ẏ - 1|^p du`.
    pub pnorm_side_b: f64,
    pub p: f64,
    pub horizon: f64,
    /// `∫_0^H |ẏ - 1| du`; the density is well behaved when this stays bounded.
    pub l1_deviation: f64,
}

/// Root tolerance used inside the image-axis integrals, where inversion noise
/// must stay well below the quadrature tolerance.
const INNER_ROOT_TOL: f64 = 1e-13;

pub fn path_functionals<M: Intensity>(model: &M, path: &Configuration, horizon: f64, p: f64) -> Result<PathFunctionals> {
    path_functionals_with(model, path, horizon, p, Tolerances::default())
}

pub fn path_functionals_with<M: Intensity>(
    model: &M,
    path: &Configuration,
    horizon: f64,
    p: f64,
    tol: Tolerances,
) -> Result<PathFunctionals> {
    check_horizon(horizon)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be finite and >= 1, got {p}")));
    }
    let stopped = path.stop(horizon)?;
    let eval = TimeChangeEval::new(model, &stopped, tol)?;
    let log_lambda = log_density_of(&eval, &stopped, horizon)?;

    let entropy_n_side = original_axis(&eval, horizon, entropy_density)?;
    let entropy_ystar_side = original_axis(&eval, horizon, |r| r * m_of_positive(1.0 / r - 1.0))?;
    let entropy_ystar_direct = image_axis(&eval, horizon, |d| m_of_positive(d - 1.0))?;
    let pnorm_side_a = image_axis(&eval, horizon, |d| (1.0 / d - 1.0).abs().powf(p) * d)?;
    let pnorm_side_b = original_axis(&eval, horizon, |r| (r - 1.0).abs().powf(p))?;
    let l1_deviation = original_axis(&eval, horizon, |r| (r - 1.0).abs())?;
    Ok(PathFunctionals {
        log_lambda,
        entropy_n_side,
        entropy_ystar_side,
        entropy_ystar_direct,
        pnorm_side_a,
        pnorm_side_b,
        p,
        horizon,
        l1_deviation,
    })
}

/// `∫_0^H |ẏ - 1| du` compared with a bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityDiagnostic {
    pub l1_deviation: f64,
    pub bound: f64,
    pub flagged: bool,
}

pub fn integrability_diagnostic<M: Intensity>(
    model: &M,
    path: &Configuration,
    horizon: f64,
    bound: f64,
) -> Result<IntegrabilityDiagnostic> {
    check_horizon(horizon)?;
    let stopped = path.stop(horizon)?;
    let eval = TimeChangeEval::new(model, &stopped, Tolerances::default())?;
    let l1_deviation = original_axis(&eval, horizon, |r| (r - 1.0).abs())?;
    Ok(IntegrabilityDiagnostic {
        l1_deviation,
        bound,
        flagged: l1_deviation > bound,
    })
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("horizon must be finite and >= 0, got {horizon}")))
    }
}

/// `𝔪` on arguments known to lie in `(-1, ∞)`.
fn m_of_positive(x: f64) -> f64 {
    (x + 1.0) * x.ln_1p() - x
}

/// `∫_0^H g(ẏ(u)) du`, one quadrature per inter-event segment.
fn original_axis<M: Intensity>(eval: &TimeChangeEval<'_, M>, horizon: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    let model = eval.model();
    let tol = eval.tolerances();
    let mut total = 0.0;
    let mut breaks = Vec::new();
    for (cp, end) in eval.segments(horizon) {
        breaks.clear();
        model.rate_breaks(&cp.state, cp.anchor, cp.anchor, end, &mut breaks);
        let integrand = |u: f64| g(model.rate(&cp.state, cp.anchor, u));
        total += adaptive_simpson_split(integrand, cp.anchor, end, &breaks, tol.quadrature, tol.max_subdivisions)?.value;
    }
    Ok(total)
}

/// `∫_0^{y(H)} g(ẏ*(s)) ds`, evaluating `ẏ*(s) = 1 / ẏ(y*(s))` through a
/// root solve inside each segment.
fn image_axis<M: Intensity>(eval: &TimeChangeEval<'_, M>, horizon: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    let model = eval.model();
    let tol = eval.tolerances();
    let inner = Tolerances {
        root: INNER_ROOT_TOL.min(tol.root),
        quadrature: tol.quadrature.min(1e-12),
        ..*tol
    };
    let mut total = 0.0;
    let mut breaks = Vec::new();
    for (cp, end) in eval.segments(horizon) {
        let lo = cp.value;
        let hi = cp.value_at(model, end, tol)?;
        breaks.clear();
        model.rate_breaks(&cp.state, cp.anchor, cp.anchor, end, &mut breaks);
        let image_breaks = breaks
            .iter()
            .map(|&b| cp.value_at(model, b, tol))
            .collect::<Result<Vec<_>>>()?;
        let failure = std::cell::RefCell::new(None);
        let integrand = |s: f64| match inverse_in_segment(model, cp, s, end, &inner) {
            Ok(u) => g(1.0 / model.rate(&cp.state, cp.anchor, u)),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let r = adaptive_simpson_split(integrand, lo, hi, &image_breaks, tol.quadrature, tol.max_subdivisions);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        total += r?.value;
    }
    Ok(total)
}

fn inverse_in_segment<M: Intensity>(model: &M, cp: &Checkpoint<M::State>, s: f64, end: f64, tol: &Tolerances) -> Result<f64> {
    // Allow a little room past the segment end for values rounded upwards.
    let limit = end + (end - cp.anchor).max(1.0);
    Ok(cp.solve(model, s, limit, tol)?.min(end))
}
