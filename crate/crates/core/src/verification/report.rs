use serde::{Deserialize, Serialize};

/// Version of the JSON layout of [`ExperimentReport`].
pub const SCHEMA_VERSION: u32 = 1;

/// How the point estimate is judged against its target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// `|estimate - target| <= k * standard_error`.
    WithinBand { k: f64 },
    /// `estimate <= target + k * standard_error`.
    AtMost { k: f64 },
    /// `|estimate - target| <= tolerance`.
    WithinTolerance { tolerance: f64 },
    /// `estimate <= target`, e.g. a test statistic against its critical value.
    Below,
    /// `estimate >= target`, e.g. a p-value against the test level.
    AtLeast,
}

impl Criterion {
    pub fn holds(&self, estimate: f64, target: f64, standard_error: Option<f64>) -> bool {
        let se = standard_error.unwrap_or(0.0);
        // Exact agreement passes even with a zero standard error.
        let slack = 1e-12 * target.abs().max(1.0);
        match *self {
            Criterion::WithinBand { k } => (estimate - target).abs() <= k * se + slack,
            Criterion::AtMost { k } => estimate <= target + k * se + slack,
            Criterion::WithinTolerance { tolerance } => (estimate - target).abs() <= tolerance,
            Criterion::Below => estimate <= target,
            Criterion::AtLeast => estimate >= target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(passed: bool) -> Self {
        if passed {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// A secondary comparison that must also hold for the experiment to pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub standard_error: Option<f64>,
    pub target: f64,
    pub criterion: Criterion,
    pub verdict: Verdict,
}

impl Check {
    pub fn new(name: impl Into<String>, estimate: f64, standard_error: Option<f64>, target: f64, criterion: Criterion) -> Self {
        Self {
            name: name.into(),
            estimate,
            standard_error,
            target,
            verdict: Verdict::from_bool(criterion.holds(estimate, target, standard_error)),
            criterion,
        }
    }
}

/// Summary of one seeded Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub estimator: String,
    pub estimate: f64,
    /// Sample standard deviation over `sqrt(replicates)`; absent for
    /// hypothesis tests.
    pub standard_error: Option<f64>,
    pub replicates: u64,
    pub target: f64,
    pub target_note: String,
    pub criterion: Criterion,
    /// Pass only when the main criterion and every check hold.
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub seed: u64,
    pub wall_time_secs: f64,
    /// Experiment-specific values (grids, diagnostics, test statistics).
    pub details: serde_json::Value,
}

impl ExperimentReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        estimator: impl Into<String>,
        estimate: f64,
        standard_error: Option<f64>,
        replicates: u64,
        target: f64,
        target_note: impl Into<String>,
        criterion: Criterion,
        seed: u64,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            estimator: estimator.into(),
            estimate,
            standard_error,
            replicates,
            target,
            target_note: target_note.into(),
            criterion,
            verdict: Verdict::from_bool(criterion.holds(estimate, target, standard_error)),
            checks: Vec::new(),
            seed,
            wall_time_secs: 0.0,
            details: serde_json::Value::Null,
        }
    }

    pub fn main_passed(&self) -> bool {
        self.criterion.holds(self.estimate, self.target, self.standard_error)
    }

    pub fn with_check(mut self, check: Check) -> Self {
        self.checks.push(check);
        self.refresh_verdict();
        self
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = details;
        self
    }

    pub fn with_wall_time(mut self, secs: f64) -> Self {
        self.wall_time_secs = secs;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    fn refresh_verdict(&mut self) {
        let ok = self.main_passed() && self.checks.iter().all(|c| c.verdict.passed());
        self.verdict = Verdict::from_bool(ok);
    }
}

/// Mean, standard deviation and standard error of a sample, accumulated in
/// the given order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: u64,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                n: 0,
                mean: f64::NAN,
                sd: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let sd = var.sqrt();
        Self {
            n: n as u64,
            mean,
            sd,
            se: sd / (n as f64).sqrt(),
        }
    }
}
