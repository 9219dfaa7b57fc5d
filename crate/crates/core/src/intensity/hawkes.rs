use serde::{Deserialize, Serialize};

use super::{Intensity, KernelSpec, ModelIssue, PhiSpec, Tolerances};
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson_split;

/// Nonlinear Hawkes intensity `φ(alpha + Σ_{T_i < t} h(t - T_i))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalHawkes {
    pub phi: PhiSpec,
    pub alpha: f64,
    pub kernel: KernelSpec,
    /// Require `Lip(φ) ‖h‖₁ < 1` at validation time.
    #[serde(default)]
    pub strong_uniqueness: bool,
}

/// Excitation summary after the events up to the current anchor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HawkesState {
    /// `Σ a exp(-b (anchor - T_i))` for the exponential kernel.
    pub excitation: f64,
    /// Events still inside the support of a tabulated kernel.
    pub recent: Vec<f64>,
}

impl ClassicalHawkes {
    pub fn new(phi: PhiSpec, alpha: f64, kernel: KernelSpec) -> Result<Self, ModelIssue> {
        let m = Self {
            phi,
            alpha,
            kernel,
            strong_uniqueness: false,
        };
        m.validate()?;
        Ok(m)
    }

    /// Linear Hawkes with exponential kernel `a exp(-b t)`.
    pub fn linear_exponential(alpha: f64, a: f64, b: f64) -> Result<Self, ModelIssue> {
        Self::new(PhiSpec::Identity, alpha, KernelSpec::exponential(a, b))
    }

    pub fn with_strong_uniqueness(mut self) -> Result<Self, ModelIssue> {
        self.strong_uniqueness = true;
        self.validate()?;
        Ok(self)
    }

    pub(crate) fn validate(&self) -> Result<(), ModelIssue> {
        if !self.alpha.is_finite() {
            return Err(ModelIssue::new("model.alpha", format!("must be finite, got {}", self.alpha)));
        }
        self.kernel.validate()?;
        self.phi.validate(self.alpha)?;
        if self.strong_uniqueness {
            let c = self.contraction_constant();
            if c >= 1.0 {
                return Err(ModelIssue::new(
                    "model.strong_uniqueness",
                    format!("contraction constant {c} >= 1"),
                ));
            }
        }
        Ok(())
    }

    /// `Lip(φ) ‖h‖₁`.
    pub fn contraction_constant(&self) -> f64 {
        self.phi.lipschitz() * self.kernel.l1_norm()
    }

    /// Long-run event rate `φ(x*)` where `x* = alpha + ‖h‖₁ φ(x*)`, for
    /// affine links with `slope ‖h‖₁ < 1`.
    pub fn stationary_rate(&self) -> Option<f64> {
        let (slope, intercept) = self.phi.affine_parts()?;
        let n = slope * self.kernel.l1_norm();
        (n < 1.0).then(|| (slope * self.alpha + intercept) / (1.0 - n))
    }

    fn excitation_at(&self, state: &HawkesState, anchor: f64, t: f64) -> f64 {
        match &self.kernel {
            KernelSpec::Exponential { b, .. } => state.excitation * (-b * (t - anchor)).exp(),
            kernel @ KernelSpec::Tabulated { .. } => state.recent.iter().map(|&ti| kernel.eval(t - ti)).sum(),
        }
    }
}

impl Intensity for ClassicalHawkes {
    type State = HawkesState;

    fn initial_state(&self) -> HawkesState {
        HawkesState::default()
    }

    fn register_event(&self, state: &mut HawkesState, anchor: f64, t: f64) {
        match &self.kernel {
            KernelSpec::Exponential { a, b } => {
                state.excitation = state.excitation * (-b * (t - anchor)).exp() + a;
            }
            KernelSpec::Tabulated { times, .. } => {
                let end = times[times.len() - 1];
                state.recent.retain(|&ti| t - ti <= end);
                state.recent.push(t);
            }
        }
    }

    #[inline]
    fn rate(&self, state: &HawkesState, anchor: f64, t: f64) -> f64 {
        self.phi.eval(self.alpha + self.excitation_at(state, anchor, t))
    }

    fn integrate(&self, state: &HawkesState, anchor: f64, t: f64, tol: &Tolerances) -> Result<f64> {
        let dt = t - anchor;
        if dt <= 0.0 {
            return Ok(0.0);
        }
        if let KernelSpec::Exponential { b, .. } = self.kernel {
            let e = state.excitation;
            // ∫_0^dt e exp(-b u) du
            let decay = |d: f64| -e * (-b * d).exp_m1() / b;
            match self.phi {
                PhiSpec::Identity => return Ok(self.alpha * dt + decay(dt)),
                PhiSpec::Affine { slope, intercept } => {
                    return Ok(slope * (self.alpha * dt + decay(dt)) + intercept * dt)
                }
                PhiSpec::ClippedLinear { slope, floor } => {
                    let crossing = clipped_crossing(slope, floor, self.alpha, e, b);
                    let linear = |d: f64| slope * (self.alpha * d + decay(d));
                    return Ok(match crossing {
                        Crossing::AlwaysFloor => floor * dt,
                        Crossing::Never => linear(dt),
                        Crossing::At(tc) if tc >= dt => linear(dt),
                        Crossing::At(tc) => linear(tc) + floor * (dt - tc),
                    });
                }
                PhiSpec::Sigmoid { .. } => {}
            }
        }
        let mut breaks = Vec::new();
        self.rate_breaks(state, anchor, anchor, t, &mut breaks);
        let r = adaptive_simpson_split(
            |s| self.rate(state, anchor, s),
            anchor,
            t,
            &breaks,
            tol.quadrature,
            tol.max_subdivisions,
        )
        .map_err(|e| match e {
            Error::NumericFailure { message, achieved } => Error::NumericFailure {
                message: format!("compensator on [{anchor}, {t}]: {message}"),
                achieved,
            },
            other => other,
        })?;
        Ok(r.value)
    }

    fn rate_breaks(&self, state: &HawkesState, anchor: f64, from: f64, to: f64, out: &mut Vec<f64>) {
        match &self.kernel {
            KernelSpec::Exponential { b, .. } => {
                if let PhiSpec::ClippedLinear { slope, floor } = self.phi {
                    if let Crossing::At(tc) = clipped_crossing(slope, floor, self.alpha, state.excitation, *b) {
                        let x = anchor + tc;
                        if x > from && x < to {
                            out.push(x);
                        }
                    }
                }
            }
            KernelSpec::Tabulated { times, .. } => {
                for &ti in &state.recent {
                    out.extend(times.iter().map(|&g| ti + g).filter(|&x| x > from && x < to));
                }
            }
        }
    }

    fn rate_bound(&self, state: &HawkesState, anchor: f64, from: f64) -> Option<(f64, f64)> {
        match &self.kernel {
            // The excitation only decays between events and φ is nondecreasing.
            KernelSpec::Exponential { .. } => Some((self.rate(state, anchor, from), f64::INFINITY)),
            KernelSpec::Tabulated { times, .. } => {
                let support = times[times.len() - 1];
                let window = support.max(f64::MIN_POSITIVE);
                let active = state.recent.iter().filter(|&&ti| from - ti <= support).count();
                let bound = self.phi.eval(self.alpha + active as f64 * self.kernel.sup());
                Some((bound, from + window))
            }
        }
    }
}

enum Crossing {
    AlwaysFloor,
    Never,
    /// Elapsed time after which `slope * x` drops below the floor.
    At(f64),
}

fn clipped_crossing(slope: f64, floor: f64, alpha: f64, excitation: f64, b: f64) -> Crossing {
    if slope * (alpha + excitation) <= floor {
        Crossing::AlwaysFloor
    } else if slope * alpha >= floor {
        Crossing::Never
    } else {
        Crossing::At(-((floor / slope - alpha) / excitation).ln() / b)
    }
}
