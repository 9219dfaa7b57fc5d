use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intensity::{Intensity, Tolerances};

/// Piecewise-constant intensity whose level on `(t_j, t_{j+1}]` depends on
/// the path through `N(t_j)`: it is `levels[j][min(N(t_j), levels[j].len() - 1)]`.
/// After the last grid point the intensity is `tail`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptedPiecewiseConstant {
    pub grid: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
    pub tail: f64,
}

impl AdaptedPiecewiseConstant {
    pub fn new(grid: Vec<f64>, levels: Vec<Vec<f64>>, tail: f64) -> Result<Self> {
        if grid.first() != Some(&0.0) {
            return Err(Error::InvalidModel("grid must start at 0".into()));
        }
        if grid.windows(2).any(|w| !(w[1].is_finite() && w[0] < w[1])) {
            return Err(Error::InvalidModel("grid must be finite and strictly increasing".into()));
        }
        if levels.len() + 1 != grid.len() {
            return Err(Error::InvalidModel(format!(
                "expected {} level rows for {} grid points, got {}",
                grid.len() - 1,
                grid.len(),
                levels.len()
            )));
        }
        let positive = |x: &f64| x.is_finite() && *x > 0.0;
        if levels.iter().any(|row| row.is_empty() || !row.iter().all(positive)) || !positive(&tail) {
            return Err(Error::InvalidModel("levels must be non-empty rows of finite values > 0".into()));
        }
        Ok(Self { grid, levels, tail })
    }

    fn last_grid(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Piece containing `t` under left-continuity; `levels.len()` means the tail.
    fn piece_at(&self, t: f64) -> usize {
        self.grid.partition_point(|&g| g < t).max(1) - 1
    }

    fn level(&self, events: &[f64], piece: usize) -> f64 {
        match self.levels.get(piece) {
            None => self.tail,
            Some(row) => {
                let seen = events.partition_point(|&e| e <= self.grid[piece]);
                row[seen.min(row.len() - 1)]
            }
        }
    }
}

impl Intensity for AdaptedPiecewiseConstant {
    /// Events up to the last grid point; later ones never matter.
    type State = Vec<f64>;

    fn initial_state(&self) -> Vec<f64> {
        Vec::new()
    }

    fn register_event(&self, state: &mut Vec<f64>, _anchor: f64, t: f64) {
        if t <= self.last_grid() {
            state.push(t);
        }
    }

    fn rate(&self, state: &Vec<f64>, _anchor: f64, t: f64) -> f64 {
        self.level(state, self.piece_at(t))
    }

    fn integrate(&self, state: &Vec<f64>, anchor: f64, t: f64, _tol: &Tolerances) -> Result<f64> {
        let mut acc = 0.0;
        let mut from = anchor;
        while from < t {
            let piece = self.piece_at(from.next_up());
            let end = self.grid.get(piece + 1).map_or(t, |&g| g.min(t));
            acc += self.level(state, piece) * (end - from);
            from = end;
        }
        Ok(acc)
    }

    fn solve_integral(&self, state: &Vec<f64>, anchor: f64, amount: f64) -> Option<f64> {
        let mut left = amount;
        let mut from = anchor;
        loop {
            let piece = self.piece_at(from.next_up());
            let level = self.level(state, piece);
            let end = self.grid.get(piece + 1).copied().unwrap_or(f64::INFINITY);
            let mass = level * (end - from);
            if mass >= left {
                return Some(from + left / level);
            }
            left -= mass;
            from = end;
        }
    }

    fn rate_breaks(&self, _state: &Vec<f64>, _anchor: f64, from: f64, to: f64, out: &mut Vec<f64>) {
        out.extend(self.grid.iter().copied().filter(|&g| g > from && g < to));
    }

    fn rate_bound(&self, state: &Vec<f64>, _anchor: f64, from: f64) -> Option<(f64, f64)> {
        let piece = self.piece_at(from.next_up());
        let until = self.grid.get(piece + 1).copied().unwrap_or(f64::INFINITY);
        Some((self.level(state, piece), until))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::{compensator, IntensityModel, TimeChangeEval};
    use crate::pointprocess::Configuration;
    use crate::simulation::{forward_time_change, ghawkes_inversion, SimulationBudget};

    #[test]
    fn reduces_to_deterministic_levels() {
        let adapted = AdaptedPiecewiseConstant::new(vec![0.0, 1.0, 2.5], vec![vec![2.0], vec![0.5]], 1.5).unwrap();
        let fixed = IntensityModel::piecewise(vec![0.0, 1.0, 2.5], vec![2.0, 0.5], 1.5).unwrap();
        let path = Configuration::new(vec![0.3, 1.1, 2.6, 4.0]).unwrap();
        for t in [0.2, 1.0, 1.7, 2.5, 3.3, 6.0] {
            let a = compensator(&adapted, &path, t).unwrap();
            let b = compensator(&fixed, &path, t).unwrap();
            assert!((a - b).abs() < 1e-12, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn levels_follow_past_counts() {
        // Rate on (1, 2] is 1 without events in [0, 1], 3 with one, 5 with more.
        let m = AdaptedPiecewiseConstant::new(vec![0.0, 1.0, 2.0], vec![vec![1.0], vec![1.0, 3.0, 5.0]], 1.0).unwrap();
        let tol = Tolerances::default();
        let none = TimeChangeEval::new(&m, &Configuration::empty(), tol).unwrap();
        let one = TimeChangeEval::new(&m, &Configuration::new(vec![0.5]).unwrap(), tol).unwrap();
        let two = TimeChangeEval::new(&m, &Configuration::new(vec![0.5, 0.9]).unwrap(), tol).unwrap();
        assert_eq!(none.rate(1.5), 1.0);
        assert_eq!(one.rate(1.5), 3.0);
        assert_eq!(two.rate(1.5), 5.0);
        assert!((two.compensator(3.0).unwrap() - (1.0 + 5.0 + 1.0)).abs() < 1e-12);
        // An event at 1.5 does not change the level on (1, 2].
        let late = TimeChangeEval::new(&m, &Configuration::new(vec![0.5, 1.5]).unwrap(), tol).unwrap();
        assert_eq!(late.rate(1.9), 3.0);
    }

    #[test]
    fn inversion_round_trip() {
        let m = AdaptedPiecewiseConstant::new(vec![0.0, 1.0, 2.0], vec![vec![2.0], vec![0.5, 1.0, 4.0]], 1.0).unwrap();
        let n = Configuration::new(vec![0.4, 1.1, 1.9, 2.2, 3.5, 4.0, 7.5]).unwrap();
        let z = ghawkes_inversion(&m, &n, &SimulationBudget::n_jumps(n.len())).unwrap();
        let y = forward_time_change(&m, &z, &SimulationBudget::n_jumps(n.len())).unwrap();
        for (a, b) in y.iter().zip(n.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(AdaptedPiecewiseConstant::new(vec![0.0, 1.0], vec![], 1.0).is_err());
        assert!(AdaptedPiecewiseConstant::new(vec![0.0, 1.0], vec![vec![]], 1.0).is_err());
        assert!(AdaptedPiecewiseConstant::new(vec![0.0, 1.0], vec![vec![0.0]], 1.0).is_err());
        assert!(AdaptedPiecewiseConstant::new(vec![1.0, 2.0], vec![vec![1.0]], 1.0).is_err());
    }
}
