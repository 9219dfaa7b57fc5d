use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointprocess::Configuration;

/// Built-in path functionals `f(ω)` with closed-form moments under the unit
/// Poisson law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathFunctional {
    Constant { value: f64 },
    /// `ω([0, at])`.
    Count { at: f64 },
    /// `1{ω([0, at]) = 0}`.
    Void { at: f64 },
    /// `slope · ω([0, at]) + intercept`.
    CountAffine { at: f64, slope: f64, intercept: f64 },
    /// Log-density of the rate-`rate` Poisson law on `[0, at]`:
    /// `ω([0, at]) log(rate) - (rate - 1) at`.
    PoissonLogDensity { at: f64, rate: f64 },
}

impl PathFunctional {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PathFunctional::Constant { value } => value.is_finite(),
            PathFunctional::Count { at } | PathFunctional::Void { at } => at.is_finite() && at >= 0.0,
            PathFunctional::CountAffine { at, slope, intercept } => {
                at.is_finite() && at >= 0.0 && slope.is_finite() && intercept.is_finite()
            }
            PathFunctional::PoissonLogDensity { at, rate } => at.is_finite() && at >= 0.0 && rate.is_finite() && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid functional parameters {self:?}")))
        }
    }

    /// Time window the functional looks at.
    pub fn window(&self) -> f64 {
        match *self {
            PathFunctional::Constant { .. } => 0.0,
            PathFunctional::Count { at }
            | PathFunctional::Void { at }
            | PathFunctional::CountAffine { at, .. }
            | PathFunctional::PoissonLogDensity { at, .. } => at,
        }
    }

    fn as_affine(&self) -> Option<(f64, f64, f64)> {
        match *self {
            PathFunctional::Constant { value } => Some((0.0, 0.0, value)),
            PathFunctional::Count { at } => Some((at, 1.0, 0.0)),
            PathFunctional::CountAffine { at, slope, intercept } => Some((at, slope, intercept)),
            PathFunctional::PoissonLogDensity { at, rate } => Some((at, rate.ln(), -(rate - 1.0) * at)),
            PathFunctional::Void { .. } => None,
        }
    }

    pub fn eval(&self, omega: &Configuration) -> Result<f64> {
        if let PathFunctional::Void { at } = *self {
            return Ok(if omega.count(at)? == 0 { 1.0 } else { 0.0 });
        }
        let (at, slope, intercept) = self.as_affine().expect("affine in the count");
        if slope == 0.0 {
            return Ok(intercept);
        }
        Ok(slope * omega.count(at)? as f64 + intercept)
    }

    /// `E_π[f]` under the unit Poisson law.
    pub fn poisson_mean(&self) -> f64 {
        match *self {
            PathFunctional::Void { at } => (-at).exp(),
            _ => {
                let (at, slope, intercept) = self.as_affine().expect("affine in the count");
                slope * at + intercept
            }
        }
    }

    /// `log E_π[e^f]` under the unit Poisson law.
    pub fn poisson_log_laplace(&self) -> f64 {
        match *self {
            PathFunctional::Void { at } => (std::f64::consts::E - 1.0).mul_add((-at).exp(), 1.0).ln(),
            _ => {
                let (at, slope, intercept) = self.as_affine().expect("affine in the count");
                at * slope.exp_m1() + intercept
            }
        }
    }
}
