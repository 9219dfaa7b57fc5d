use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ghawkes_core::intensity::spec_file::{parse_toml, ModelFile};
use ghawkes_core::simulation::{Algorithm, SimulationBudget};
use ghawkes_core::verification::{McOptions, PathFunctional, VariationalGrid};
use ghawkes_core::Tolerances;

pub const DEFAULT_REPLICATES: u64 = 1000;
pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_PERMUTATIONS: usize = 1000;
pub const DEFAULT_ESS_FLOOR: f64 = 0.05;

/// Optional `[run]` keys of a model file; command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunKeys {
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub algo: Option<Algorithm>,
    pub horizon: Option<f64>,
    pub n_jumps: Option<usize>,
    pub max_events: Option<usize>,
    pub permutations: Option<usize>,
    pub t: Option<f64>,
    pub ess_floor: Option<f64>,
    pub p: Option<f64>,
    pub functional: Option<PathFunctional>,
}

#[derive(Deserialize)]
struct RunSection {
    #[serde(default)]
    run: RunKeys,
}

/// Model file together with its `[run]` keys.
pub struct LoadedModel {
    pub file: ModelFile,
    pub run: RunKeys,
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let source = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = ModelFile::parse(&source).with_context(|| format!("in {}", path.display()))?;
    let section: RunSection = parse_toml(&source).with_context(|| format!("in {}", path.display()))?;
    Ok(LoadedModel { file, run: section.run })
}

pub fn load_grid(path: &Path) -> Result<VariationalGrid> {
    let source = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let grid: VariationalGrid = parse_toml(&source).with_context(|| format!("in {}", path.display()))?;
    Ok(grid)
}

/// Everything that determines a run. Serialized into every report; the
/// thread count is left out since results do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algo: Option<Algorithm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_jumps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_events: Option<usize>,
    pub replicates: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functional: Option<PathFunctional>,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(subcommand: &'static str) -> Self {
        Self {
            subcommand,
            model_file: None,
            grid_file: None,
            path_file: None,
            algo: None,
            horizon: None,
            n_jumps: None,
            max_events: None,
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            alpha: None,
            permutations: None,
            t: None,
            ess_floor: None,
            p: None,
            functional: None,
            tolerances: Tolerances::default(),
            out: None,
            csv: None,
        }
    }

    pub fn options(&self) -> McOptions {
        let mut opts = McOptions::new(self.replicates, self.seed);
        opts.tolerances = self.tolerances;
        opts
    }

    /// Budget from `horizon` or `n_jumps`; exactly one must be set.
    pub fn budget(&self) -> Result<SimulationBudget> {
        let budget = match (self.horizon, self.n_jumps) {
            (Some(h), None) => SimulationBudget::horizon(h),
            (None, Some(n)) => SimulationBudget::n_jumps(n),
            (Some(_), Some(_)) => bail!("--horizon and --n-jumps are mutually exclusive"),
            (None, None) => bail!("one of --horizon or --n-jumps is required"),
        };
        let budget = match self.max_events {
            Some(cap) => budget.with_max_events(cap),
            None => budget,
        };
        Ok(budget.with_tolerances(self.tolerances))
    }

    pub fn require_horizon(&self) -> Result<f64> {
        self.horizon.context("--horizon is required")
    }
}
