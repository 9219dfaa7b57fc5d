use serde::{Deserialize, Serialize};

use super::ModelIssue;

/// Nonnegative excitation kernel `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `h(t) = a * exp(-b t)`.
    Exponential { a: f64, b: f64 },
    /// Linear interpolation of `(times[i], values[i])`, zero outside
    /// `[times[0], times[last]]`.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl KernelSpec {
    pub fn exponential(a: f64, b: f64) -> Self {
        KernelSpec::Exponential { a, b }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            KernelSpec::Exponential { a, b } => {
                if u < 0.0 {
                    0.0
                } else {
                    a * (-b * u).exp()
                }
            }
            KernelSpec::Tabulated { times, values } => tabulated_eval(times, values, u),
        }
    }

    /// `‖h‖₁`: `a / b` for the exponential kernel, trapezoid sum for tables.
    pub fn l1_norm(&self) -> f64 {
        match self {
            KernelSpec::Exponential { a, b } => a / b,
            KernelSpec::Tabulated { times, values } => times
                .windows(2)
                .zip(values.windows(2))
                .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
                .sum(),
        }
    }

    /// Right end of the support; `None` for the exponential kernel.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            KernelSpec::Exponential { .. } => None,
            KernelSpec::Tabulated { times, .. } => times.last().copied(),
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            KernelSpec::Exponential { a, .. } => *a,
            KernelSpec::Tabulated { values, .. } => values.iter().copied().fold(0.0, f64::max),
        }
    }

    pub(crate) fn validate(&self) -> Result<(), ModelIssue> {
        match self {
            KernelSpec::Exponential { a, b } => {
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(ModelIssue::new("model.kernel.a", format!("must be finite and >= 0, got {a}")));
                }
                if !(b.is_finite() && *b > 0.0) {
                    return Err(ModelIssue::new("model.kernel.b", format!("must be finite and > 0, got {b}")));
                }
            }
            KernelSpec::Tabulated { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(ModelIssue::new(
                        "model.kernel.times",
                        format!(
                            "need at least two grid points and equal lengths, got {} times and {} values",
                            times.len(),
                            values.len()
                        ),
                    ));
                }
                if let Some(t) = times.iter().find(|t| !t.is_finite()) {
                    return Err(ModelIssue::new(
                        "model.kernel.times",
                        format!("kernel support must be bounded, got grid time {t}"),
                    ));
                }
                if times[0] < 0.0 {
                    return Err(ModelIssue::new("model.kernel.times", "grid must start at a time >= 0"));
                }
                if let Some(i) = times.windows(2).position(|w| w[0] >= w[1]) {
                    return Err(ModelIssue::new(
                        "model.kernel.times",
                        format!("grid must be strictly increasing (position {})", i + 1),
                    ));
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(ModelIssue::new("model.kernel.values", format!("must be finite and >= 0, got {v}")));
                }
            }
        }
        Ok(())
    }
}

fn tabulated_eval(times: &[f64], values: &[f64], u: f64) -> f64 {
    let (first, last) = (times[0], times[times.len() - 1]);
    if u < first || u > last {
        return 0.0;
    }
    let i = times.partition_point(|&t| t <= u);
    if i == 0 {
        return values[0];
    }
    if i >= times.len() {
        return values[times.len() - 1];
    }
    let (t0, t1) = (times[i - 1], times[i]);
    let w = (u - t0) / (t1 - t0);
    values[i - 1] + w * (values[i] - values[i - 1])
}
