use serde::{Deserialize, Serialize};

use super::{Intensity, ModelIssue, Tolerances};
use crate::error::Result;

/// Deterministic piecewise-constant intensity: `levels[i]` on
/// `(breakpoints[i], breakpoints[i + 1]]`, `tail` after the last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseConstant {
    pub breakpoints: Vec<f64>,
    pub levels: Vec<f64>,
    pub tail: f64,
}

impl PiecewiseConstant {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>, tail: f64) -> Result<Self, ModelIssue> {
        let p = Self {
            breakpoints,
            levels,
            tail,
        };
        p.validate()?;
        Ok(p)
    }

    /// Intensity `level` on `[0, window / level]`, then 1.
    ///
    /// The image clock covers exactly `[0, window]` at rate `1 / level`.
    pub fn image_window(level: f64, window: f64) -> Result<Self, ModelIssue> {
        if !(window.is_finite() && window > 0.0) {
            return Err(ModelIssue::new("grid.window", format!("must be finite and > 0, got {window}")));
        }
        if !(level.is_finite() && level > 0.0) {
            return Err(ModelIssue::new("grid.levels", format!("must be finite and > 0, got {level}")));
        }
        Self::new(vec![0.0, window / level], vec![level], 1.0)
    }

    pub(crate) fn validate(&self) -> Result<(), ModelIssue> {
        let b = &self.breakpoints;
        if b.first() != Some(&0.0) {
            return Err(ModelIssue::new("model.breakpoints", "must start at 0"));
        }
        if let Some(i) = b.windows(2).position(|w| !(w[1].is_finite() && w[0] < w[1])) {
            return Err(ModelIssue::new(
                "model.breakpoints",
                format!("must be finite and strictly increasing (position {})", i + 1),
            ));
        }
        if self.levels.len() + 1 != b.len() {
            return Err(ModelIssue::new(
                "model.levels",
                format!("expected {} levels for {} breakpoints, got {}", b.len() - 1, b.len(), self.levels.len()),
            ));
        }
        if let Some(l) = self.levels.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(ModelIssue::new("model.levels", format!("must be finite and > 0, got {l}")));
        }
        if !(self.tail.is_finite() && self.tail > 0.0) {
            return Err(ModelIssue::new("model.tail", format!("must be finite and > 0, got {}", self.tail)));
        }
        Ok(())
    }

    pub fn last_breakpoint(&self) -> f64 {
        *self.breakpoints.last().expect("validated")
    }

    /// Index of the piece whose level applies just after `t`.
    fn piece_after(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t) - 1
    }

    /// Index of the piece whose level applies at `t` (left-continuous).
    fn piece_at(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < t).max(1) - 1
    }

    fn level(&self, piece: usize) -> f64 {
        self.levels.get(piece).copied().unwrap_or(self.tail)
    }

    /// `y(t) = ∫_0^t ẏ ds`.
    pub fn cumulative(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (i, w) in self.breakpoints.windows(2).enumerate() {
            if t <= w[1] {
                return acc + self.levels[i] * (t - w[0]);
            }
            acc += self.levels[i] * (w[1] - w[0]);
        }
        acc + self.tail * (t - self.last_breakpoint())
    }

    /// `y*(s)`, the inverse of [`cumulative`](Self::cumulative).
    pub fn cumulative_inverse(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (i, w) in self.breakpoints.windows(2).enumerate() {
            let piece = self.levels[i] * (w[1] - w[0]);
            if s <= acc + piece {
                return w[0] + (s - acc) / self.levels[i];
            }
            acc += piece;
        }
        self.last_breakpoint() + (s - acc) / self.tail
    }

    /// Image-axis pieces `(length, rate of y*)` up to the last breakpoint.
    pub fn image_pieces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.levels)
            .map(|(w, &c)| (c * (w[1] - w[0]), 1.0 / c))
    }

    pub fn max_level(&self) -> f64 {
        self.levels.iter().copied().fold(self.tail, f64::max)
    }

    pub fn min_level(&self) -> f64 {
        self.levels.iter().copied().fold(self.tail, f64::min)
    }
}

impl Intensity for PiecewiseConstant {
    type State = ();

    fn initial_state(&self) {}

    fn register_event(&self, _: &mut (), _: f64, _: f64) {}

    fn rate(&self, _: &(), _: f64, t: f64) -> f64 {
        self.level(self.piece_at(t))
    }

    fn integrate(&self, _: &(), anchor: f64, t: f64, _: &Tolerances) -> Result<f64> {
        Ok(self.cumulative(t) - self.cumulative(anchor))
    }

    fn solve_integral(&self, _: &(), anchor: f64, amount: f64) -> Option<f64> {
        Some(self.cumulative_inverse(self.cumulative(anchor) + amount).max(anchor))
    }

    fn rate_breaks(&self, _: &(), _: f64, from: f64, to: f64, out: &mut Vec<f64>) {
        out.extend(self.breakpoints.iter().copied().filter(|&b| b > from && b < to));
    }

    fn rate_bound(&self, _: &(), _: f64, from: f64) -> Option<(f64, f64)> {
        let piece = self.piece_after(from);
        let until = self.breakpoints.get(piece + 1).copied().unwrap_or(f64::INFINITY);
        Some((self.level(piece), until))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}
