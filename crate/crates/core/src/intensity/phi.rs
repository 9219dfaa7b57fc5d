use serde::{Deserialize, Serialize};

use super::ModelIssue;

/// Link function applied to the excitation `alpha + ∫ h(t - s) dN(s)`.
///
/// All variants are nondecreasing; thinning relies on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    Identity,
    Affine { slope: f64, intercept: f64 },
    /// `max(floor, slope * x)`.
    ClippedLinear { slope: f64, floor: f64 },
    /// `max / (1 + exp(-scale * (x - midpoint)))`.
    Sigmoid { scale: f64, midpoint: f64, max: f64 },
}

impl PhiSpec {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            PhiSpec::Identity => x,
            PhiSpec::Affine { slope, intercept } => slope * x + intercept,
            PhiSpec::ClippedLinear { slope, floor } => (slope * x).max(floor),
            PhiSpec::Sigmoid { scale, midpoint, max } => max / (1.0 + (-scale * (x - midpoint)).exp()),
        }
    }

    /// Exact Lipschitz constant of the link.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            PhiSpec::Identity => 1.0,
            PhiSpec::Affine { slope, .. } => slope.abs(),
            PhiSpec::ClippedLinear { slope, .. } => slope.abs(),
            PhiSpec::Sigmoid { scale, max, .. } => 0.25 * scale.abs() * max,
        }
    }

    /// `(slope, intercept)` when the link is affine.
    pub(crate) fn affine_parts(&self) -> Option<(f64, f64)> {
        match *self {
            PhiSpec::Identity => Some((1.0, 0.0)),
            PhiSpec::Affine { slope, intercept } => Some((slope, intercept)),
            _ => None,
        }
    }

    /// Checks that the link is nondecreasing and positive on `[alpha, ∞)`,
    /// the range of arguments reachable with a nonnegative kernel.
    pub(crate) fn validate(&self, alpha: f64) -> Result<(), ModelIssue> {
        let bad = |field: &str, message: String| Err(ModelIssue::new(format!("model.phi.{field}"), message));
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                bad(field, format!("must be finite, got {v}"))
            }
        };
        match *self {
            PhiSpec::Identity => {
                if alpha <= 0.0 {
                    return Err(ModelIssue::new("model.alpha", "identity link needs alpha > 0"));
                }
            }
            PhiSpec::Affine { slope, intercept } => {
                finite("slope", slope)?;
                finite("intercept", intercept)?;
                if slope < 0.0 {
                    return bad("slope", format!("must be >= 0, got {slope}"));
                }
                if slope * alpha + intercept <= 0.0 {
                    return bad(
                        "intercept",
                        format!("link must be positive at alpha: {slope} * {alpha} + {intercept} <= 0"),
                    );
                }
            }
            PhiSpec::ClippedLinear { slope, floor } => {
                finite("slope", slope)?;
                finite("floor", floor)?;
                if slope < 0.0 {
                    return bad("slope", format!("must be >= 0, got {slope}"));
                }
                if floor <= 0.0 {
                    return bad("floor", format!("must be > 0, got {floor}"));
                }
            }
            PhiSpec::Sigmoid { scale, midpoint, max } => {
                finite("scale", scale)?;
                finite("midpoint", midpoint)?;
                finite("max", max)?;
                if scale < 0.0 {
                    return bad("scale", format!("must be >= 0, got {scale}"));
                }
                if max <= 0.0 {
                    return bad("max", format!("must be > 0, got {max}"));
                }
            }
        }
        Ok(())
    }
}
