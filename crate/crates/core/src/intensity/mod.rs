//! Predictable intensities `ẏ(history, t)`, their compensators `y` and the
//! right inverses `y*`.
//!
//! Every model implements [`Intensity`], a Markov-style description of the
//! intensity between events: a state summarizing the past up to an anchor
//! time (the last event), the rate after the anchor, and its integral.
//! [`TimeChangeEval`] strings these segments together along a fixed path.

mod eval;
mod hawkes;
mod kernel;
mod phi;
mod piecewise;
pub mod spec_file;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use eval::{Checkpoint, TimeChangeEval};
pub use hawkes::{ClassicalHawkes, HawkesState};
pub use kernel::KernelSpec;
pub use phi::PhiSpec;
pub use piecewise::PiecewiseConstant;

use crate::error::{Error, Result};
use crate::pointprocess::Configuration;
use crate::quadrature::DEFAULT_MAX_SUBDIVISIONS;

/// Numerical tolerances shared by compensator evaluation and inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute tolerance of adaptive quadrature.
    pub quadrature: f64,
    /// Absolute tolerance of `|y(t) - s|` when inverting.
    pub root: f64,
    pub max_subdivisions: usize,
    /// Root brackets are abandoned beyond this multiple of the working horizon.
    pub horizon_multiple: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature: 1e-10,
            root: 1e-10,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
            horizon_multiple: 64.0,
        }
    }
}

/// A model validation failure, located by its configuration key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelIssue {
    pub path: String,
    pub message: String,
}

impl ModelIssue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ModelIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl From<ModelIssue> for Error {
    fn from(issue: ModelIssue) -> Self {
        Error::InvalidModel(issue.to_string())
    }
}

/// A strictly positive predictable intensity described segment by segment.
///
/// `State` summarizes every event up to and including an anchor time; the
/// methods below describe the intensity on `(anchor, next event]`, where it
/// depends on the past only through the state.
pub trait Intensity: Send + Sync {
    type State: Clone + Send + Sync + fmt::Debug;

    fn initial_state(&self) -> Self::State;

    /// Registers an event at `t > anchor`; afterwards `t` is the anchor.
    fn register_event(&self, state: &mut Self::State, anchor: f64, t: f64);

    /// `ẏ(t)` for `t > anchor` with no events in `(anchor, t)`.
    fn rate(&self, state: &Self::State, anchor: f64, t: f64) -> f64;

    /// `∫_anchor^t ẏ(s) ds` with no events in `(anchor, t)`.
    fn integrate(&self, state: &Self::State, anchor: f64, t: f64, tol: &Tolerances) -> Result<f64>;

    /// Closed-form solution `t` of `integrate(state, anchor, t) = amount`.
    fn solve_integral(&self, _state: &Self::State, _anchor: f64, _amount: f64) -> Option<f64> {
        None
    }

    /// Appends points in `(from, to)` where the rate has a kink or jump.
    fn rate_breaks(&self, _state: &Self::State, _anchor: f64, _from: f64, _to: f64, _out: &mut Vec<f64>) {}

    /// An upper bound on the rate over `(from, until]` and `until`, assuming no
    /// further events. `None` when no bound is available.
    fn rate_bound(&self, state: &Self::State, anchor: f64, from: f64) -> Option<(f64, f64)>;

    /// True when the intensity does not depend on the path.
    fn is_deterministic(&self) -> bool {
        false
    }
}

/// The concrete model family read from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntensityModel {
    Constant {
        rate: f64,
    },
    PiecewiseConstant(PiecewiseConstant),
    ClassicalHawkes(ClassicalHawkes),
}

/// State of an [`IntensityModel`].
#[derive(Debug, Clone, PartialEq)]
pub enum ModelState {
    Memoryless,
    Hawkes(HawkesState),
}

impl IntensityModel {
    pub fn constant(rate: f64) -> Result<Self, ModelIssue> {
        let m = IntensityModel::Constant { rate };
        m.validate()?;
        Ok(m)
    }

    pub fn piecewise(breakpoints: Vec<f64>, levels: Vec<f64>, tail: f64) -> Result<Self, ModelIssue> {
        PiecewiseConstant::new(breakpoints, levels, tail).map(IntensityModel::PiecewiseConstant)
    }

    pub fn hawkes(phi: PhiSpec, alpha: f64, kernel: KernelSpec) -> Result<Self, ModelIssue> {
        ClassicalHawkes::new(phi, alpha, kernel).map(IntensityModel::ClassicalHawkes)
    }

    pub fn validate(&self) -> Result<(), ModelIssue> {
        match self {
            IntensityModel::Constant { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(ModelIssue::new("model.rate", format!("must be finite and > 0, got {rate}")));
                }
                Ok(())
            }
            IntensityModel::PiecewiseConstant(p) => p.validate(),
            IntensityModel::ClassicalHawkes(h) => h.validate(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            IntensityModel::Constant { .. } => "constant",
            IntensityModel::PiecewiseConstant(_) => "piecewise_constant",
            IntensityModel::ClassicalHawkes(_) => "classical_hawkes",
        }
    }

    /// Deterministic piecewise-constant view: constants become a single tail level.
    pub fn as_piecewise(&self) -> Option<PiecewiseConstant> {
        match self {
            IntensityModel::Constant { rate } => Some(PiecewiseConstant {
                breakpoints: vec![0.0],
                levels: vec![],
                tail: *rate,
            }),
            IntensityModel::PiecewiseConstant(p) => Some(p.clone()),
            IntensityModel::ClassicalHawkes(_) => None,
        }
    }

    /// `Lip(φ) ‖h‖₁` for Hawkes models; zero for models without feedback.
    pub fn feedback_constant(&self) -> Result<f64> {
        match self {
            IntensityModel::ClassicalHawkes(h) => contraction_constant(h),
            _ => Ok(0.0),
        }
    }
}

impl Intensity for IntensityModel {
    type State = ModelState;

    fn initial_state(&self) -> ModelState {
        match self {
            IntensityModel::ClassicalHawkes(h) => ModelState::Hawkes(h.initial_state()),
            _ => ModelState::Memoryless,
        }
    }

    fn register_event(&self, state: &mut ModelState, anchor: f64, t: f64) {
        if let (IntensityModel::ClassicalHawkes(h), ModelState::Hawkes(s)) = (self, state) {
            h.register_event(s, anchor, t);
        }
    }

    #[inline]
    fn rate(&self, state: &ModelState, anchor: f64, t: f64) -> f64 {
        match (self, state) {
            (IntensityModel::Constant { rate }, _) => *rate,
            (IntensityModel::PiecewiseConstant(p), _) => p.rate(&(), anchor, t),
            (IntensityModel::ClassicalHawkes(h), ModelState::Hawkes(s)) => h.rate(s, anchor, t),
            (IntensityModel::ClassicalHawkes(_), ModelState::Memoryless) => unreachable!("state mismatch"),
        }
    }

    fn integrate(&self, state: &ModelState, anchor: f64, t: f64, tol: &Tolerances) -> Result<f64> {
        match (self, state) {
            (IntensityModel::Constant { rate }, _) => Ok(rate * (t - anchor)),
            (IntensityModel::PiecewiseConstant(p), _) => p.integrate(&(), anchor, t, tol),
            (IntensityModel::ClassicalHawkes(h), ModelState::Hawkes(s)) => h.integrate(s, anchor, t, tol),
            (IntensityModel::ClassicalHawkes(_), ModelState::Memoryless) => unreachable!("state mismatch"),
        }
    }

    fn solve_integral(&self, _state: &ModelState, anchor: f64, amount: f64) -> Option<f64> {
        match self {
            IntensityModel::Constant { rate } => Some(anchor + amount / rate),
            IntensityModel::PiecewiseConstant(p) => p.solve_integral(&(), anchor, amount),
            IntensityModel::ClassicalHawkes(_) => None,
        }
    }

    fn rate_breaks(&self, state: &ModelState, anchor: f64, from: f64, to: f64, out: &mut Vec<f64>) {
        match (self, state) {
            (IntensityModel::PiecewiseConstant(p), _) => p.rate_breaks(&(), anchor, from, to, out),
            (IntensityModel::ClassicalHawkes(h), ModelState::Hawkes(s)) => h.rate_breaks(s, anchor, from, to, out),
            _ => {}
        }
    }

    fn rate_bound(&self, state: &ModelState, anchor: f64, from: f64) -> Option<(f64, f64)> {
        match (self, state) {
            (IntensityModel::Constant { rate }, _) => Some((*rate, f64::INFINITY)),
            (IntensityModel::PiecewiseConstant(p), _) => p.rate_bound(&(), anchor, from),
            (IntensityModel::ClassicalHawkes(h), ModelState::Hawkes(s)) => h.rate_bound(s, anchor, from),
            (IntensityModel::ClassicalHawkes(_), ModelState::Memoryless) => None,
        }
    }

    fn is_deterministic(&self) -> bool {
        !matches!(self, IntensityModel::ClassicalHawkes(_))
    }
}

impl From<PiecewiseConstant> for IntensityModel {
    fn from(p: PiecewiseConstant) -> Self {
        IntensityModel::PiecewiseConstant(p)
    }
}

impl From<ClassicalHawkes> for IntensityModel {
    fn from(h: ClassicalHawkes) -> Self {
        IntensityModel::ClassicalHawkes(h)
    }
}

/// `ẏ(history, t)`. Every event in `history` must lie strictly before `t`.
pub fn intensity_at<M: Intensity>(model: &M, history: &Configuration, t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("intensity time must be finite and > 0, got {t}")));
    }
    if let Some(&last) = history.last() {
        if last >= t {
            return Err(Error::PredictabilityViolation { event: last, t });
        }
    }
    let mut state = model.initial_state();
    let mut anchor = 0.0;
    for &ti in history.iter() {
        model.register_event(&mut state, anchor, ti);
        anchor = ti;
    }
    Ok(model.rate(&state, anchor, t))
}

/// `y(history, t) = ∫_0^t ẏ(history_{<s}, s) ds`.
pub fn compensator<M: Intensity>(model: &M, history: &Configuration, t: f64) -> Result<f64> {
    compensator_with(model, history, t, Tolerances::default())
}

pub fn compensator_with<M: Intensity>(model: &M, history: &Configuration, t: f64, tol: Tolerances) -> Result<f64> {
    let before = history.strictly_before(t);
    TimeChangeEval::new(model, &before, tol)?.compensator(t)
}

/// `y*(history, s) = inf{t : y(history, t) > s}`.
pub fn compensator_inverse<M: Intensity>(model: &M, history: &Configuration, s: f64) -> Result<f64> {
    compensator_inverse_with(model, history, s, Tolerances::default())
}

pub fn compensator_inverse_with<M: Intensity>(
    model: &M,
    history: &Configuration,
    s: f64,
    tol: Tolerances,
) -> Result<f64> {
    TimeChangeEval::new(model, history, tol)?.inverse(s)
}

/// `Lip(φ) ‖h‖₁`, validating the kernel first.
pub fn contraction_constant(model: &ClassicalHawkes) -> Result<f64> {
    model.kernel.validate()?;
    Ok(model.contraction_constant())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hawkes() -> IntensityModel {
        IntensityModel::ClassicalHawkes(ClassicalHawkes::linear_exponential(1.0, 0.5, 1.0).unwrap())
    }

    fn cfg(v: &[f64]) -> Configuration {
        Configuration::new(v.to_vec()).unwrap()
    }

    #[test]
    fn intensity_examples() {
        let c = IntensityModel::constant(2.0).unwrap();
        assert_eq!(intensity_at(&c, &Configuration::empty(), 5.0).unwrap(), 2.0);
        assert_eq!(intensity_at(&hawkes(), &Configuration::empty(), 3.0).unwrap(), 1.0);
        // 1 + 0.5 e^{-1.2}, summed directly
        let expected = 1.0 + 0.5 * (-1.2f64).exp();
        let got = intensity_at(&hawkes(), &cfg(&[0.8]), 2.0).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 1.150597105956101).abs() < 1e-12);
    }

    #[test]
    fn predictability_violation() {
        let r = intensity_at(&hawkes(), &cfg(&[0.8, 2.0]), 2.0);
        assert!(matches!(r, Err(Error::PredictabilityViolation { .. })));
        assert!(intensity_at(&hawkes(), &cfg(&[0.8]), 0.0).is_err());
    }

    #[test]
    fn compensator_examples() {
        let c = IntensityModel::constant(2.0).unwrap();
        assert_eq!(compensator(&c, &Configuration::empty(), 3.0).unwrap(), 6.0);
        let p = IntensityModel::piecewise(vec![0.0, 2.0], vec![2.0], 1.0).unwrap();
        assert_eq!(compensator(&p, &Configuration::empty(), 3.0).unwrap(), 5.0);
        // Events at or after t do not enter y(t).
        let y = compensator(&hawkes(), &cfg(&[0.8, 2.0, 3.0]), 2.0).unwrap();
        assert!((y - compensator(&hawkes(), &cfg(&[0.8]), 2.0).unwrap()).abs() == 0.0);
    }

    #[test]
    fn inverse_examples() {
        let c = IntensityModel::constant(2.0).unwrap();
        assert_eq!(compensator_inverse(&c, &Configuration::empty(), 3.0).unwrap(), 1.5);
        assert_eq!(compensator_inverse(&c, &Configuration::empty(), 0.0).unwrap(), 0.0);
        assert_eq!(
            compensator_inverse(&IntensityModel::constant(0.7).unwrap(), &Configuration::empty(), 0.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn contraction_examples() {
        let m = ClassicalHawkes::linear_exponential(1.0, 0.5, 1.0).unwrap();
        assert_eq!(contraction_constant(&m).unwrap(), 0.5);
        let m = ClassicalHawkes::new(
            PhiSpec::Affine { slope: 0.3, intercept: 0.0 },
            1.0,
            KernelSpec::exponential(1.0, 2.0),
        )
        .unwrap();
        assert!((contraction_constant(&m).unwrap() - 0.15).abs() < 1e-15);
        let m = ClassicalHawkes::linear_exponential(1.0, 2.0, 1.0).unwrap();
        let c = contraction_constant(&m).unwrap();
        assert_eq!(c, 2.0);
        assert!(c >= 1.0);
    }

    #[test]
    fn contraction_rejects_unbounded_table() {
        let m = ClassicalHawkes {
            phi: PhiSpec::Identity,
            alpha: 1.0,
            kernel: KernelSpec::Tabulated {
                times: vec![0.0, f64::INFINITY],
                values: vec![1.0, 0.0],
            },
            strong_uniqueness: false,
        };
        assert!(matches!(contraction_constant(&m), Err(Error::InvalidModel(_))));
    }
}
