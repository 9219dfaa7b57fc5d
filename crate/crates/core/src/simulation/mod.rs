//! Unit Poisson paths, g-Hawkes construction by inverting the time change,
//! Ogata thinning, and the forward time change `τ_{y*}`.

mod adapted;
mod runner;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

pub use adapted::AdaptedPiecewiseConstant;
pub use runner::{read_replicates_csv, run_replicates, write_replicates_csv};

use crate::error::{Error, Result};
use crate::intensity::{Checkpoint, Intensity, Tolerances};
use crate::pointprocess::Configuration;

/// A reproducible random stream: one `(seed, stream)` pair per replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Stream `index` inside namespace `space`, so that separate experiment
    /// arms sharing a seed never overlap.
    pub fn in_namespace(seed: u64, space: u16, index: u64) -> Self {
        debug_assert!(index < 1 << 48);
        Self::new(seed, (u64::from(space) << 48) | index)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// When a simulation stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stop {
    /// Keep events in `[0, horizon]`.
    Horizon(f64),
    /// Keep the first `n` events.
    Jumps(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationBudget {
    pub stop: Stop,
    /// Hard cap on the number of events of a single path.
    pub max_events: usize,
    pub tolerances: Tolerances,
}

pub const DEFAULT_MAX_EVENTS: usize = 10_000_000;

impl SimulationBudget {
    pub fn horizon(horizon: f64) -> Self {
        Self {
            stop: Stop::Horizon(horizon),
            max_events: DEFAULT_MAX_EVENTS,
            tolerances: Tolerances::default(),
        }
    }

    pub fn n_jumps(n: usize) -> Self {
        Self {
            stop: Stop::Jumps(n),
            max_events: DEFAULT_MAX_EVENTS,
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_max_events(mut self, cap: usize) -> Self {
        self.max_events = cap;
        self
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Stop::Horizon(h) = self.stop {
            if !(h.is_finite() && h >= 0.0) {
                return Err(Error::InvalidArgument(format!("horizon must be finite and >= 0, got {h}")));
            }
        }
        if self.max_events == 0 {
            return Err(Error::InvalidArgument("max_events must be > 0".into()));
        }
        if let Stop::Jumps(n) = self.stop {
            if n > self.max_events {
                return Err(Error::BudgetExceeded { cap: self.max_events });
            }
        }
        Ok(())
    }

    fn horizon_value(&self) -> f64 {
        match self.stop {
            Stop::Horizon(h) => h,
            Stop::Jumps(_) => f64::INFINITY,
        }
    }

    fn jump_cap(&self) -> usize {
        match self.stop {
            Stop::Horizon(_) => usize::MAX,
            Stop::Jumps(n) => n,
        }
    }
}

/// Jump times of a unit Poisson process, generated lazily.
#[derive(Debug, Clone)]
pub struct UnitPoissonStream {
    rng: ChaCha8Rng,
    t: f64,
}

impl UnitPoissonStream {
    pub fn new(stream: &RngStream) -> Self {
        Self { rng: stream.rng(), t: 0.0 }
    }
}

impl Iterator for UnitPoissonStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let e: f64 = self.rng.sample(Exp1);
        let next = self.t + e;
        // Exp(1) draws of exactly 0 would break simplicity.
        self.t = if next > self.t { next } else { self.t.next_up() };
        Some(self.t)
    }
}

/// Unit Poisson path on the budget's horizon, or its first `n` jumps.
pub fn sample_unit_poisson(stream: &RngStream, budget: &SimulationBudget) -> Result<Configuration> {
    budget.validate()?;
    let horizon = budget.horizon_value();
    let cap = budget.jump_cap();
    let mut jumps = Vec::new();
    for t in UnitPoissonStream::new(stream) {
        if t > horizon || jumps.len() == cap {
            break;
        }
        if jumps.len() == budget.max_events {
            return Err(Error::BudgetExceeded { cap: budget.max_events });
        }
        jumps.push(t);
    }
    Ok(Configuration::from_sorted_unchecked(jumps))
}

/// Solves `Z(t) = N(y(Z, t))` jump by jump: `T_k(Z)` is the root of
/// `y(Z_{<k}, t) = T_k(N)`.
pub fn ghawkes_inversion<M: Intensity>(model: &M, driving: &Configuration, budget: &SimulationBudget) -> Result<Configuration> {
    invert_driving(model, driving.iter().copied(), budget)
}

/// [`ghawkes_inversion`] driven by a fresh unit Poisson stream, drawn for as
/// long as the budget requires.
pub fn ghawkes_inversion_stream<M: Intensity>(model: &M, stream: &RngStream, budget: &SimulationBudget) -> Result<Configuration> {
    invert_driving(model, UnitPoissonStream::new(stream), budget)
}

fn invert_driving<M: Intensity>(model: &M, driving: impl IntoIterator<Item = f64>, budget: &SimulationBudget) -> Result<Configuration> {
    budget.validate()?;
    let tol = &budget.tolerances;
    let horizon = budget.horizon_value();
    let cap = budget.jump_cap();
    let mut cp = Checkpoint::origin(model);
    let mut jumps = Vec::new();
    // y(Z, horizon) given the jumps so far; recomputed after each event.
    let mut value_at_horizon = None;
    for (i, target) in driving.into_iter().enumerate() {
        if jumps.len() == cap {
            break;
        }
        let k = i + 1;
        let limit = if horizon.is_finite() {
            let end = match value_at_horizon {
                Some(v) => v,
                None => *value_at_horizon.insert(cp.value_at(model, horizon, tol)?),
            };
            if target > end {
                break;
            }
            horizon
        } else {
            tol.horizon_multiple * target.max(cp.anchor).max(1.0)
        };
        let mut t = cp.solve(model, target, limit, tol).map_err(|e| match e {
            Error::HorizonExceeded { limit, .. } => Error::Explosion {
                k,
                reason: format!("no root of y(Z, t) = {target} below t = {limit}"),
            },
            other => other,
        })?;
        if t <= cp.anchor {
            t = cp.anchor.next_up();
        }
        if jumps.len() == budget.max_events {
            return Err(Error::BudgetExceeded { cap: budget.max_events });
        }
        jumps.push(t);
        cp = cp.advance(model, t, tol)?;
        value_at_horizon = None;
    }
    Ok(Configuration::from_sorted_unchecked(jumps))
}

/// Ogata thinning: candidates from a dominating rate refreshed after every
/// candidate, accepted with probability `ẏ / bound`.
pub fn ghawkes_thinning<M: Intensity>(model: &M, stream: &RngStream, budget: &SimulationBudget) -> Result<Configuration> {
    budget.validate()?;
    let horizon = budget.horizon_value();
    let cap = budget.jump_cap();
    let mut rng = stream.rng();
    let mut state = model.initial_state();
    let mut anchor = 0.0;
    let mut t = 0.0;
    let mut jumps = Vec::new();
    while jumps.len() < cap {
        let (bound, until) = model
            .rate_bound(&state, anchor, t)
            .ok_or_else(|| Error::Unsupported("thinning needs a local upper bound on the intensity".into()))?;
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::NumericFailure {
                message: format!("intensity bound {bound} at t = {t}"),
                achieved: f64::NAN,
            });
        }
        let e: f64 = rng.sample(Exp1);
        let candidate = t + e / bound;
        if candidate > until {
            if until >= horizon {
                break;
            }
            t = until;
            continue;
        }
        if candidate > horizon {
            break;
        }
        let u: f64 = rng.random();
        let rate = model.rate(&state, anchor, candidate);
        if rate > bound * (1.0 + 1e-12) {
            return Err(Error::NumericFailure {
                message: format!("intensity {rate} exceeds thinning bound {bound} at t = {candidate}"),
                achieved: rate - bound,
            });
        }
        if u * bound <= rate {
            if jumps.len() == budget.max_events {
                return Err(Error::BudgetExceeded { cap: budget.max_events });
            }
            model.register_event(&mut state, anchor, candidate);
            anchor = candidate;
            jumps.push(candidate);
        }
        t = candidate;
    }
    Ok(Configuration::from_sorted_unchecked(jumps))
}

/// `Y = τ_{y*}(N)`: `T_k(Y) = y(N, T_k(N))`, with the compensator built on
/// `n` itself. A horizon budget applies to the image time axis.
pub fn forward_time_change<M: Intensity>(model: &M, n: &Configuration, budget: &SimulationBudget) -> Result<Configuration> {
    budget.validate()?;
    let tol = &budget.tolerances;
    let horizon = budget.horizon_value();
    let cap = budget.jump_cap();
    let mut cp = Checkpoint::origin(model);
    let mut images = Vec::new();
    for &t in n.iter() {
        if images.len() == cap {
            break;
        }
        cp = cp.advance(model, t, tol)?;
        if cp.value > horizon {
            break;
        }
        images.push(cp.value);
    }
    Configuration::new(images)
}

/// A driving path `N` drawn until `y(N, ·)` passes an image-time horizon,
/// together with its image `Y = τ_{y*}(N)` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPath {
    /// `N` restricted to `[0, clock_end]`.
    pub driving: Configuration,
    /// `Y` on `[0, horizon]`.
    pub image: Configuration,
    /// `y*(N, horizon)`.
    pub clock_end: f64,
}

/// Samples `N` from `stream` and applies the forward time change up to image
/// time `horizon`.
pub fn forward_from_stream<M: Intensity>(model: &M, stream: &RngStream, horizon: f64, budget: &SimulationBudget) -> Result<ForwardPath> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let tol = &budget.tolerances;
    let mut cp = Checkpoint::origin(model);
    let mut driving = Vec::new();
    let mut images = Vec::new();
    for t in UnitPoissonStream::new(stream) {
        let next = cp.advance(model, t, tol)?;
        if next.value > horizon {
            break;
        }
        if driving.len() == budget.max_events {
            return Err(Error::BudgetExceeded { cap: budget.max_events });
        }
        driving.push(t);
        images.push(next.value);
        cp = next;
    }
    let limit = tol.horizon_multiple * horizon.max(cp.anchor).max(1.0);
    let clock_end = cp.solve(model, horizon, limit, tol)?;
    Ok(ForwardPath {
        driving: Configuration::from_sorted_unchecked(driving),
        image: Configuration::new(images)?,
        clock_end,
    })
}

/// Which simulator produces g-Hawkes paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Inversion,
    Thinning,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inversion" => Ok(Algorithm::Inversion),
            "thinning" => Ok(Algorithm::Thinning),
            other => Err(Error::InvalidArgument(format!("unknown algorithm `{other}`, expected inversion or thinning"))),
        }
    }
}

/// One path with the chosen algorithm; inversion is driven by a unit
/// Poisson process drawn from `stream`.
pub fn simulate<M: Intensity>(model: &M, algorithm: Algorithm, stream: &RngStream, budget: &SimulationBudget) -> Result<Configuration> {
    match algorithm {
        Algorithm::Inversion => ghawkes_inversion_stream(model, stream, budget),
        Algorithm::Thinning => ghawkes_thinning(model, stream, budget),
    }
}
