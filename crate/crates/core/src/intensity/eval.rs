use super::{Intensity, Tolerances};
use crate::error::{Error, Result};
use crate::pointprocess::Configuration;
use crate::roots::solve_increasing;

/// Compensator value and intensity state right after an event.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<S> {
    /// Time of the last registered event, or 0.
    pub anchor: f64,
    /// `y(anchor)`.
    pub value: f64,
    pub state: S,
}

impl<S: Clone> Checkpoint<S> {
    pub fn origin<M: Intensity<State = S>>(model: &M) -> Self {
        Self {
            anchor: 0.0,
            value: 0.0,
            state: model.initial_state(),
        }
    }

    /// `y(t)` for `t >= anchor` with no event in `(anchor, t)`.
    pub fn value_at<M: Intensity<State = S>>(&self, model: &M, t: f64, tol: &Tolerances) -> Result<f64> {
        Ok(self.value + model.integrate(&self.state, self.anchor, t, tol)?)
    }

    /// The checkpoint after an event at `t > anchor`.
    pub fn advance<M: Intensity<State = S>>(&self, model: &M, t: f64, tol: &Tolerances) -> Result<Self> {
        let value = self.value_at(model, t, tol)?;
        let mut state = self.state.clone();
        model.register_event(&mut state, self.anchor, t);
        Ok(Self {
            anchor: t,
            value,
            state,
        })
    }

    /// Smallest `t >= anchor` with `y(t) = s`, assuming no event in
    /// `(anchor, t)`; the bracket never extends past `limit`.
    pub fn solve<M: Intensity<State = S>>(&self, model: &M, s: f64, limit: f64, tol: &Tolerances) -> Result<f64> {
        let amount = s - self.value;
        if amount <= 0.0 {
            return Ok(self.anchor);
        }
        if let Some(t) = model.solve_integral(&self.state, self.anchor, amount) {
            if t > limit {
                return Err(Error::HorizonExceeded { target: s, limit });
            }
            return Ok(t);
        }
        let (state, anchor) = (&self.state, self.anchor);
        let first_step = amount / model.rate(state, anchor, anchor);
        solve_increasing(
            |t| model.integrate(state, anchor, t, tol),
            |t| model.rate(state, anchor, t),
            anchor,
            amount,
            first_step,
            limit,
            tol.root,
        )
    }
}

/// Evaluator of `y(ω, ·)`, `ẏ(ω, ·)` and `y*(ω, ·)` along a fixed path.
///
/// Construction walks the path once and stores a [`Checkpoint`] per event;
/// each evaluation then touches a single inter-event segment.
#[derive(Debug, Clone)]
pub struct TimeChangeEval<'a, M: Intensity> {
    model: &'a M,
    tol: Tolerances,
    checkpoints: Vec<Checkpoint<M::State>>,
}

impl<'a, M: Intensity> TimeChangeEval<'a, M> {
    pub fn new(model: &'a M, history: &Configuration, tol: Tolerances) -> Result<Self> {
        let mut checkpoints = Vec::with_capacity(history.len() + 1);
        let mut cp = Checkpoint::origin(model);
        for &t in history.iter() {
            let next = cp.advance(model, t, &tol)?;
            checkpoints.push(std::mem::replace(&mut cp, next));
        }
        checkpoints.push(cp);
        Ok(Self {
            model,
            tol,
            checkpoints,
        })
    }

    pub fn model(&self) -> &M {
        self.model
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn checkpoints(&self) -> &[Checkpoint<M::State>] {
        &self.checkpoints
    }

    /// Checkpoint governing the intensity at `t` (events strictly before `t`).
    fn segment_at(&self, t: f64) -> &Checkpoint<M::State> {
        let j = self.checkpoints[1..].partition_point(|c| c.anchor < t);
        &self.checkpoints[j]
    }

    pub fn compensator(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
        }
        self.segment_at(t).value_at(self.model, t, &self.tol)
    }

    pub fn rate(&self, t: f64) -> f64 {
        let cp = self.segment_at(t);
        self.model.rate(&cp.state, cp.anchor, t)
    }

    /// `y*(s)`; the search past the last event stops at
    /// `horizon_multiple * max(1, s, last event)`.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        let last = self.checkpoints.last().map_or(0.0, |c| c.anchor);
        self.inverse_with_limit(s, self.tol.horizon_multiple * s.max(last).max(1.0))
    }

    pub fn inverse_with_limit(&self, s: f64, limit: f64) -> Result<f64> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidArgument(format!("compensator value must be finite and >= 0, got {s}")));
        }
        let j = self.checkpoints.partition_point(|c| c.value <= s) - 1;
        let cp = &self.checkpoints[j];
        match self.checkpoints.get(j + 1) {
            Some(next) => Ok(cp.solve(self.model, s, next.anchor, &self.tol)?.min(next.anchor)),
            None => cp.solve(self.model, s, limit, &self.tol),
        }
    }

    /// `ẏ*(s) = 1 / ẏ(y*(s))`.
    pub fn inverse_rate(&self, s: f64) -> Result<f64> {
        Ok(1.0 / self.rate(self.inverse(s)?))
    }

    /// `y(T_k)` for every jump of the path.
    pub fn jump_images(&self) -> Vec<f64> {
        self.checkpoints[1..].iter().map(|c| c.value).collect()
    }

    /// Inter-event segments `(checkpoint, end)` covering `[0, horizon]`.
    pub fn segments(&self, horizon: f64) -> impl Iterator<Item = (&Checkpoint<M::State>, f64)> + '_ {
        self.checkpoints
            .iter()
            .enumerate()
            .take_while(move |(_, c)| c.anchor < horizon || (horizon == 0.0 && c.anchor == 0.0))
            .map(move |(j, c)| {
                let end = self.checkpoints.get(j + 1).map_or(horizon, |n| n.anchor.min(horizon));
                (c, end)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::{ClassicalHawkes, IntensityModel, PhiSpec, KernelSpec};
    use proptest::prelude::*;

    fn hawkes() -> IntensityModel {
        ClassicalHawkes::linear_exponential(1.0, 0.5, 1.0).unwrap().into()
    }

    /// Bisection oracle on the closed form t + 0.5 (1 - e^{-(t - 0.8)}) = 2.
    fn bisection_oracle() -> f64 {
        let f = |t: f64| t + 0.5 * (1.0 - (-(t - 0.8)).exp()) - 2.0;
        let (mut lo, mut hi) = (0.8, 2.0);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Composite Simpson on a fine grid of the intensity written out by hand:
    /// 1 on (0, 0.8], then 1 + 0.5 e^{-(s - 0.8)}.
    fn quadrature_oracle(t: f64) -> f64 {
        let excited = |s: f64| 1.0 + 0.5 * (-(s - 0.8)).exp();
        let n = 20_000;
        let h = (t - 0.8) / n as f64;
        let mut acc = excited(0.8) + excited(t);
        for i in 1..n {
            acc += excited(0.8 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        0.8 + acc * h / 3.0
    }

    #[test]
    fn hawkes_compensator_matches_quadrature_oracle() {
        let h = Configuration::new(vec![0.8]).unwrap();
        let m = hawkes();
        let eval = TimeChangeEval::new(&m, &h, Tolerances::default()).unwrap();
        let y = eval.compensator(2.0).unwrap();
        let oracle = quadrature_oracle(2.0);
        assert!((y - oracle).abs() < 1e-10, "{y} vs {oracle}");
        assert!((y - 2.349402894043899).abs() < 1e-12);
    }

    #[test]
    fn hawkes_inverse_matches_bisection_oracle() {
        let h = Configuration::new(vec![0.8]).unwrap();
        let m = hawkes();
        let eval = TimeChangeEval::new(&m, &h, Tolerances::default()).unwrap();
        let t = eval.inverse(2.0).unwrap();
        assert!((t - bisection_oracle()).abs() < 1e-8);
        assert!((t - 1.7027305147675151).abs() < 1e-8);
        assert!((eval.compensator(t).unwrap() - 2.0).abs() <= 1e-10);
    }

    #[test]
    fn inverse_inside_earlier_segment() {
        let h = Configuration::new(vec![0.8, 1.5, 4.0]).unwrap();
        let m = hawkes();
        let eval = TimeChangeEval::new(&m, &h, Tolerances::default()).unwrap();
        for s in [0.1, 0.8, 1.2, 2.0, 3.3, 6.0, 20.0] {
            let t = eval.inverse(s).unwrap();
            assert!((eval.compensator(t).unwrap() - s).abs() <= 1e-10, "s={s}");
        }
    }

    #[test]
    fn horizon_exceeded_with_tiny_limit() {
        let m = hawkes();
        let eval = TimeChangeEval::new(&m, &Configuration::empty(), Tolerances::default()).unwrap();
        assert!(matches!(eval.inverse_with_limit(10.0, 2.0), Err(Error::HorizonExceeded { .. })));
    }

    fn arb_model() -> impl Strategy<Value = IntensityModel> {
        prop_oneof![
            (0.2f64..5.0).prop_map(|c| IntensityModel::constant(c).unwrap()),
            (prop::collection::vec(0.2f64..3.0, 1..4), prop::collection::vec(0.1f64..4.0, 3), 0.3f64..3.0)
                .prop_map(|(widths, levels, tail)| {
                    let mut b = vec![0.0];
                    for w in &widths {
                        b.push(b.last().unwrap() + w);
                    }
                    IntensityModel::piecewise(b, levels[..widths.len()].to_vec(), tail).unwrap()
                }),
            (0.2f64..2.0, 0.0f64..1.5, 0.3f64..3.0)
                .prop_map(|(alpha, a, b)| ClassicalHawkes::linear_exponential(alpha, a, b).unwrap().into()),
            (0.2f64..2.0, 0.0f64..1.5, 0.3f64..3.0, 0.05f64..1.0).prop_map(|(alpha, a, b, floor)| {
                IntensityModel::hawkes(PhiSpec::ClippedLinear { slope: 0.8, floor }, alpha, KernelSpec::exponential(a, b))
                    .unwrap()
            }),
            (0.2f64..2.0, 0.0f64..1.5, 0.3f64..3.0).prop_map(|(alpha, a, b)| {
                IntensityModel::hawkes(
                    PhiSpec::Sigmoid { scale: 1.5, midpoint: 1.0, max: 3.0 },
                    alpha,
                    KernelSpec::exponential(a, b),
                )
                .unwrap()
            }),
        ]
    }

    fn arb_history() -> impl Strategy<Value = Configuration> {
        prop::collection::vec(0.05f64..2.0, 0..12).prop_map(|gaps| {
            let mut t = 0.0;
            Configuration::new(
                gaps.into_iter()
                    .map(|g| {
                        t += g;
                        t
                    })
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn compensator_strictly_increasing(m in arb_model(), h in arb_history(), t in 0.0f64..20.0, dt in 1e-3f64..5.0) {
            let eval = TimeChangeEval::new(&m, &h, Tolerances::default()).unwrap();
            prop_assert!(eval.compensator(t).unwrap() < eval.compensator(t + dt).unwrap());
            prop_assert_eq!(eval.compensator(0.0).unwrap(), 0.0);
        }

        #[test]
        fn inverse_round_trip(m in arb_model(), h in arb_history(), s in 0.0f64..40.0) {
            let eval = TimeChangeEval::new(&m, &h, Tolerances::default()).unwrap();
            let t = eval.inverse(s).unwrap();
            prop_assert!((eval.compensator(t).unwrap() - s).abs() <= 1e-10);
        }

        /// ẏ*(y(t)) ẏ(t) = 1, with ẏ* from a five-point stencil on the inverse.
        #[test]
        fn derivative_identity(m in arb_model(), h in arb_history(), t in 0.05f64..15.0) {
            // Quadrature-backed links need a tighter tolerance than the stencil's 1e-8 target.
            let tol = Tolerances { quadrature: 1e-14, ..Tolerances::default() };
            let eval = TimeChangeEval::new(&m, &h, tol).unwrap();
            let s = eval.compensator(t).unwrap();
            let step = 1e-3;
            let mut kinks: Vec<f64> = eval.jump_images();
            if let IntensityModel::PiecewiseConstant(p) = &m {
                kinks.extend(p.breakpoints.iter().map(|&b| p.cumulative(b)));
            }
            if let IntensityModel::ClassicalHawkes(_) = &m {
                let mut raw = Vec::new();
                for (cp, end) in eval.segments(40.0) {
                    m.rate_breaks(&cp.state, cp.anchor, cp.anchor, end, &mut raw);
                }
                kinks.extend(raw.iter().map(|&b| eval.compensator(b).unwrap()));
            }
            prop_assume!(kinks.iter().all(|&k| (k - s).abs() > 3.0 * step) && s > 3.0 * step);
            let inv = |x: f64| eval.inverse(x).unwrap();
            let d = (-inv(s + 2.0 * step) + 8.0 * inv(s + step) - 8.0 * inv(s - step) + inv(s - 2.0 * step))
                / (12.0 * step);
            prop_assert!((d * eval.rate(t) - 1.0).abs() <= 1e-8, "product {}", d * eval.rate(t));
        }
    }
}
