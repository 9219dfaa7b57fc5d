//! Seeded Monte Carlo experiments checking the time-change identities:
//! quasi-invariance, the entropic criterion, the variational bound,
//! time-rescaling goodness of fit and agreement of the two simulators.
//!
//! Every experiment returns an [`Outcome`]: an [`ExperimentReport`] plus the
//! replicate-level values behind it. Replicate `r` draws from stream
//! `(seed, namespace << 48 | r)`, and reductions run in replicate order, so
//! results do not depend on the thread pool.

mod functional;
mod ks;
mod report;

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use functional::PathFunctional;
pub use ks::{
    kolmogorov_survival, ks_c_alpha, ks_one_sample, ks_two_sample, permutation_two_sample, Distribution, KsResult,
    MIN_KS_SAMPLES,
};
pub use report::{Check, Criterion, ExperimentReport, Summary, Verdict, SCHEMA_VERSION};

use crate::error::{Error, Result};
use crate::girsanov::{log_density_with, m_function, path_functionals_with};
use crate::intensity::{Intensity, IntensityModel, ModelIssue, PiecewiseConstant, TimeChangeEval, Tolerances};
use crate::pointprocess::Configuration;
use crate::simulation::{
    forward_from_stream, ghawkes_inversion_stream, ghawkes_thinning, run_replicates, sample_unit_poisson, simulate,
    Algorithm, RngStream, SimulationBudget,
};

/// Stream namespaces shared by the experiments.
pub mod streams {
    pub const PRIMARY: u16 = 1;
    pub const SECOND_ARM: u16 = 2;
    pub const PERMUTATION: u16 = 3;
    pub const BOUND: u16 = 4;
}

/// Replicate count, seed and pass band shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub replicates: u64,
    pub seed: u64,
    /// Width of the pass band in standard errors.
    pub band_k: f64,
    pub tolerances: Tolerances,
}

impl McOptions {
    pub fn new(replicates: u64, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            band_k: 3.0,
            tolerances: Tolerances::default(),
        }
    }

    fn stream(&self, space: u16, r: u64) -> RngStream {
        RngStream::in_namespace(self.seed, space, r)
    }

    fn validate(&self, min: u64) -> Result<()> {
        if self.replicates < min {
            return Err(Error::TooFewSamples {
                got: self.replicates as usize,
                need: min as usize,
            });
        }
        if !(self.band_k.is_finite() && self.band_k > 0.0) {
            return Err(Error::InvalidArgument(format!("band width must be > 0, got {}", self.band_k)));
        }
        Ok(())
    }
}

/// Replicate-level values behind a report, one row per replicate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReplicateTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ReplicateTable {
    fn new(columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub table: ReplicateTable,
}

fn finish(report: ExperimentReport, table: ReplicateTable, started: Instant) -> Outcome {
    Outcome {
        report: report.with_wall_time(started.elapsed().as_secs_f64()),
        table,
    }
}

fn column(rows: &[Vec<f64>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i]).collect()
}

fn finite_or_domain(value: f64, what: &str, stream: &RngStream) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain(format!(
            "{what} is {value} on the path of seed {} stream {}",
            stream.seed, stream.stream
        )))
    }
}

/// KS test of the rescaled interarrivals `y(Z, T_k) - y(Z, T_{k-1})`
/// against Exp(1).
pub fn time_rescaling_gof<M: Intensity>(model: &M, z: &Configuration, alpha: f64) -> Result<KsResult> {
    time_rescaling_gof_with(model, z, alpha, Tolerances::default())
}

pub fn time_rescaling_gof_with<M: Intensity>(model: &M, z: &Configuration, alpha: f64, tol: Tolerances) -> Result<KsResult> {
    if z.len() < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples {
            got: z.len(),
            need: MIN_KS_SAMPLES,
        });
    }
    let images = TimeChangeEval::new(model, z, tol)?.jump_images();
    let gaps: Vec<f64> = std::iter::once(images[0]).chain(images.windows(2).map(|w| w[1] - w[0])).collect();
    ks_one_sample(&gaps, &Distribution::Exponential { rate: 1.0 }, alpha)
}

/// Time-rescaling KS test on `replicates` simulated paths. One replicate is
/// judged by its statistic; several by the rejection rate, which must lie
/// within `0.02` of `alpha`.
pub fn gof_experiment<M: Intensity>(
    model: &M,
    algorithm: Algorithm,
    budget: &SimulationBudget,
    alpha: f64,
    opts: &McOptions,
) -> Result<Outcome> {
    opts.validate(1)?;
    let started = Instant::now();
    let budget = budget.with_tolerances(opts.tolerances);
    let rows = run_replicates(opts.replicates, |r| {
        let z = simulate(model, algorithm, &opts.stream(streams::PRIMARY, r), &budget)?;
        let ks = time_rescaling_gof_with(model, &z, alpha, opts.tolerances)?;
        Ok(vec![r as f64, z.len() as f64, ks.statistic, ks.p_value, f64::from(u8::from(ks.reject))])
    })?;
    let table = ReplicateTable::new(&["replicate", "jumps", "statistic", "p_value", "reject"], rows);
    let jumps = Summary::of(&column(&table.rows, 1));
    let report = if opts.replicates == 1 {
        let row = &table.rows[0];
        let critical = ks_c_alpha(alpha) / row[1].sqrt();
        ExperimentReport::new(
            "time_rescaling_ks",
            row[2],
            None,
            1,
            critical,
            format!("asymptotic KS critical value c({alpha})/sqrt(n)"),
            Criterion::Below,
            opts.seed,
        )
    } else {
        let rejections = column(&table.rows, 4);
        let rate = Summary::of(&rejections);
        ExperimentReport::new(
            "time_rescaling_ks_rejection_rate",
            rate.mean,
            Some(rate.se),
            opts.replicates,
            alpha,
            "nominal level of the KS test under the null",
            Criterion::WithinTolerance { tolerance: 0.02 },
            opts.seed,
        )
    };
    let report = report.with_details(json!({
        "algorithm": algorithm,
        "alpha": alpha,
        "mean_jumps": jumps.mean,
        "min_jumps": table.rows.iter().map(|r| r[1]).fold(f64::INFINITY, f64::min),
    }));
    Ok(finish(report, table, started))
}

/// Null calibration of the one-sample KS test: the rejection rate over
/// `trials` samples of `n` draws from the reference law itself.
pub fn ks_calibration(dist: &Distribution, n: usize, alpha: f64, opts: &McOptions) -> Result<Outcome> {
    opts.validate(1)?;
    let started = Instant::now();
    let rows = run_replicates(opts.replicates, |r| {
        let mut rng = opts.stream(streams::PRIMARY, r).rng();
        let xs: Vec<f64> = (0..n)
            .map(|_| match *dist {
                Distribution::Exponential { rate } => rng.sample::<f64, _>(Exp1) / rate,
                Distribution::Uniform => rng.random::<f64>(),
            })
            .collect();
        let ks = ks_one_sample(&xs, dist, alpha)?;
        Ok(vec![r as f64, ks.statistic, f64::from(u8::from(ks.reject))])
    })?;
    let rate = Summary::of(&column(&rows, 2));
    let report = ExperimentReport::new(
        "ks_rejection_rate",
        rate.mean,
        Some(rate.se),
        opts.replicates,
        alpha,
        "nominal level of the KS test under the null",
        Criterion::WithinTolerance { tolerance: 0.02 },
        opts.seed,
    )
    .with_details(json!({ "distribution": dist, "sample_size": n }));
    Ok(finish(report, ReplicateTable::new(&["replicate", "statistic", "reject"], rows), started))
}

/// Importance-weighted estimate of `E[f(Y^t)]` with weights `Λ*(t)`, to be
/// compared with the unit Poisson value of `E[f]`. The model should be
/// bounded away from 0 and ∞ and equal to 1 after a finite time, so that the
/// weights are uniformly integrable.
pub fn quasi_invariance_test<M: Intensity>(
    model: &M,
    t: f64,
    functional: &PathFunctional,
    ess_floor: f64,
    opts: &McOptions,
) -> Result<Outcome> {
    opts.validate(2)?;
    functional.validate()?;
    if functional.window() > t {
        return Err(Error::InvalidArgument(format!(
            "functional looks at [0, {}] beyond the horizon t = {t}",
            functional.window()
        )));
    }
    let started = Instant::now();
    let budget = SimulationBudget::horizon(t).with_tolerances(opts.tolerances);
    let rows = run_replicates(opts.replicates, |r| {
        let stream = opts.stream(streams::PRIMARY, r);
        let path = forward_from_stream(model, &stream, t, &budget)?;
        let log_w = log_density_with(model, &path.driving, path.clock_end, opts.tolerances)?;
        let w = finite_or_domain(log_w.exp(), "weight", &stream)?;
        let f = finite_or_domain(functional.eval(&path.image)?, "functional", &stream)?;
        Ok(vec![r as f64, log_w, w, f, w * f])
    })?;
    let weights = column(&rows, 2);
    let sum_w: f64 = weights.iter().sum();
    let sum_w2: f64 = weights.iter().map(|w| w * w).sum();
    let ess = sum_w * sum_w / sum_w2;
    let floor = ess_floor * opts.replicates as f64;
    if ess.is_nan() || ess < floor {
        return Err(Error::UnreliableWeights { ess, floor });
    }
    let w = Summary::of(&weights);
    let wf = Summary::of(&column(&rows, 4));
    let plain = Summary::of(&column(&rows, 3));
    let band = Criterion::WithinBand { k: opts.band_k };
    let report = ExperimentReport::new(
        "weighted_mean_f",
        wf.mean,
        Some(wf.se),
        opts.replicates,
        functional.poisson_mean(),
        "E[f] under the unit Poisson law, closed form",
        band,
        opts.seed,
    )
    .with_check(Check::new("weight_normalization", w.mean, Some(w.se), 1.0, band))
    .with_details(json!({
        "t": t,
        "functional": functional,
        "effective_sample_size": ess,
        "ess_fraction": ess / opts.replicates as f64,
        "ess_floor_fraction": ess_floor,
        "unweighted_mean_f": plain.mean,
        "unweighted_se_f": plain.se,
    }));
    Ok(finish(report, ReplicateTable::new(&["replicate", "log_weight", "weight", "f", "weighted_f"], rows), started))
}

/// Deterministic piecewise-constant view of a model, required to equal 1
/// after its last breakpoint.
fn unit_tail_piecewise(model: &IntensityModel) -> Result<PiecewiseConstant> {
    let p = model
        .as_piecewise()
        .ok_or_else(|| Error::Unsupported(format!("{} models are not deterministic piecewise constant", model.kind())))?;
    if p.tail != 1.0 {
        return Err(Error::Unsupported(format!(
            "the intensity must equal 1 after the last breakpoint, got {}",
            p.tail
        )));
    }
    Ok(p)
}

/// `∫ 𝔪(ẏ* - 1) ds` over the image axis of a unit-tail model.
pub fn image_entropy(p: &PiecewiseConstant) -> Result<f64> {
    p.image_pieces().map(|(len, rate)| Ok(len * m_function(rate - 1.0)?)).sum()
}

/// `H(π_{y*} | π)` for the inhomogeneous Poisson law with rate `ẏ*`, as a
/// sum of per-piece Poisson relative entropies.
fn poisson_relative_entropy(p: &PiecewiseConstant) -> f64 {
    p.image_pieces().map(|(len, rate)| len * (rate * rate.ln() - rate + 1.0)).sum()
}

/// Compares `E_π[-log Λ_y]` with `∫ 𝔪(ẏ* - 1) ds` for a deterministic
/// piecewise-constant intensity equal to 1 after a finite time.
pub fn entropic_criterion_check(model: &IntensityModel, opts: &McOptions) -> Result<Outcome> {
    opts.validate(2)?;
    let p = unit_tail_piecewise(model)?;
    let started = Instant::now();
    let horizon = p.last_breakpoint();
    let rhs = image_entropy(&p)?;
    let closed_lhs = poisson_relative_entropy(&p);
    let n_side = path_functionals_with(model, &Configuration::empty(), horizon, 1.0, opts.tolerances)?.entropy_n_side;
    let budget = SimulationBudget::horizon(horizon);
    let rows = run_replicates(opts.replicates, |r| {
        let n = sample_unit_poisson(&opts.stream(streams::PRIMARY, r), &budget)?;
        Ok(vec![r as f64, -log_density_with(model, &n, horizon, opts.tolerances)?])
    })?;
    let s = Summary::of(&column(&rows, 1));
    let report = ExperimentReport::new(
        "mean_negative_log_density",
        s.mean,
        Some(s.se),
        opts.replicates,
        rhs,
        "integral of m(ẏ* - 1) over the image axis, closed form",
        Criterion::WithinBand { k: opts.band_k },
        opts.seed,
    )
    .with_check(Check::new(
        "poisson_relative_entropy",
        closed_lhs,
        None,
        rhs,
        Criterion::WithinTolerance { tolerance: 1e-12 * rhs.max(1.0) },
    ))
    .with_check(Check::new(
        "original_axis_entropy",
        n_side,
        None,
        rhs,
        Criterion::WithinTolerance { tolerance: 1e-9 * rhs.max(1.0) },
    ))
    .with_details(json!({
        "horizon": horizon,
        "closed_form_lhs": closed_lhs,
        "rhs": rhs,
        "entropy_n_side": n_side,
    }));
    Ok(finish(report, ReplicateTable::new(&["replicate", "negative_log_density"], rows), started))
}

/// Grid of intensities `level` on `[0, window / level]`, then 1, together with
/// the functional of the variational objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationalGrid {
    pub levels: Vec<f64>,
    /// Image-time window covered by each time change.
    pub window: f64,
    pub functional: PathFunctional,
}

impl VariationalGrid {
    pub fn models(&self) -> std::result::Result<Vec<PiecewiseConstant>, ModelIssue> {
        if self.levels.is_empty() {
            return Err(ModelIssue::new("grid.levels", "must not be empty"));
        }
        self.levels.iter().map(|&c| PiecewiseConstant::image_window(c, self.window)).collect()
    }
}

/// Per-replicate values of `f(N ∘ y*)` for each model, sharing the driving
/// path across models.
fn objective_rows(models: &[IntensityModel], functional: &PathFunctional, opts: &McOptions) -> Result<Vec<Vec<f64>>> {
    let window = functional.window();
    let budget = SimulationBudget::horizon(window).with_tolerances(opts.tolerances);
    run_replicates(opts.replicates, |r| {
        let stream = opts.stream(streams::PRIMARY, r);
        let mut row = Vec::with_capacity(models.len() + 1);
        row.push(r as f64);
        for m in models {
            let path = forward_from_stream(m, &stream, window, &budget)?;
            row.push(finite_or_domain(functional.eval(&path.image)?, "functional", &stream)?);
        }
        Ok(row)
    })
}

/// `E_π[f(N ∘ y*)] - ∫ 𝔪(ẏ* - 1) ds` for one deterministic time change,
/// compared with the upper bound `log E_π[e^f]`.
pub fn variational_objective(model: &PiecewiseConstant, functional: &PathFunctional, opts: &McOptions) -> Result<Outcome> {
    opts.validate(2)?;
    functional.validate()?;
    let started = Instant::now();
    let m = IntensityModel::PiecewiseConstant(model.clone());
    let penalty = image_entropy(&unit_tail_piecewise(&m)?)?;
    let rows = objective_rows(std::slice::from_ref(&m), functional, opts)?;
    let f = Summary::of(&column(&rows, 1));
    let bound = functional.poisson_log_laplace();
    let report = ExperimentReport::new(
        "variational_objective",
        f.mean - penalty,
        Some(f.se),
        opts.replicates,
        bound,
        "log E[e^f] under the unit Poisson law, closed form",
        Criterion::AtMost { k: opts.band_k },
        opts.seed,
    )
    .with_details(json!({
        "model": model,
        "functional": functional,
        "mean_f": f.mean,
        "penalty": penalty,
    }));
    Ok(finish(report, ReplicateTable::new(&["replicate", "f"], rows), started))
}

/// Maximizes the variational objective over a grid with common random
/// numbers and compares the maximum with an independent estimate of
/// `log E_π[e^f]`.
pub fn variational_sweep(grid: &VariationalGrid, opts: &McOptions) -> Result<Outcome> {
    opts.validate(2)?;
    let functional = &grid.functional;
    functional.validate()?;
    let started = Instant::now();
    let pieces = grid.models()?;
    let models: Vec<IntensityModel> = pieces.iter().cloned().map(IntensityModel::from).collect();
    let penalties = pieces.iter().map(image_entropy).collect::<Result<Vec<_>>>()?;
    let rows = objective_rows(&models, functional, opts)?;

    let window = functional.window();
    let bound_budget = SimulationBudget::horizon(window);
    let exp_f = run_replicates(opts.replicates, |r| {
        let stream = opts.stream(streams::BOUND, r);
        let n = sample_unit_poisson(&stream, &bound_budget)?;
        finite_or_domain(functional.eval(&n)?.exp(), "exp(f)", &stream)
    })?;
    let e = Summary::of(&exp_f);
    let bound = e.mean.ln();
    let bound_se = e.se / e.mean;
    let closed_bound = functional.poisson_log_laplace();

    let summaries: Vec<Summary> = (0..models.len()).map(|i| Summary::of(&column(&rows, i + 1))).collect();
    let objectives: Vec<f64> = summaries.iter().zip(&penalties).map(|(s, p)| s.mean - p).collect();
    let argmax = objectives
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > objectives[best] { i } else { best });
    let combined = |se: f64| (se * se + bound_se * bound_se).sqrt();
    let at_most = Criterion::AtMost { k: opts.band_k };
    let mut report = ExperimentReport::new(
        "variational_sweep_max",
        objectives[argmax],
        Some(combined(summaries[argmax].se)),
        opts.replicates,
        bound,
        "log E[e^f] estimated on independent unit Poisson paths",
        at_most,
        opts.seed,
    )
    .with_check(Check::new(
        "bound_estimate_vs_closed_form",
        bound,
        Some(bound_se),
        closed_bound,
        Criterion::WithinBand { k: opts.band_k },
    ));
    for (i, level) in grid.levels.iter().enumerate() {
        report = report.with_check(Check::new(
            format!("objective_at_level_{level}"),
            objectives[i],
            Some(combined(summaries[i].se)),
            bound,
            at_most,
        ));
    }
    let report = report.with_details(json!({
        "window": window,
        "functional": functional,
        "levels": grid.levels,
        "objectives": objectives,
        "standard_errors": summaries.iter().map(|s| s.se).collect::<Vec<_>>(),
        "penalties": penalties,
        "argmax_index": argmax,
        "argmax_level": grid.levels[argmax],
        "log_laplace_estimate": bound,
        "log_laplace_se": bound_se,
        "log_laplace_closed_form": closed_bound,
        "gap": bound - objectives[argmax],
    }));
    let mut columns = vec!["replicate".to_string()];
    columns.extend(grid.levels.iter().map(|l| format!("f_level_{l}")));
    let table = ReplicateTable { columns, rows };
    Ok(finish(report, table, started))
}

/// Inversion (Poisson driven) against thinning: permutation two-sample test
/// on `N(horizon)` and asymptotic two-sample KS on the first jump time,
/// censored at the horizon. Refuses models whose contraction constant is not
/// below 1.
pub fn weak_uniqueness_test(model: &IntensityModel, horizon: f64, alpha: f64, permutations: usize, opts: &McOptions) -> Result<Outcome> {
    let constant = model.feedback_constant()?;
    if constant >= 1.0 {
        return Err(Error::ContractionViolated { constant });
    }
    compare_simulators(model, model, horizon, alpha, permutations, opts)
}

/// As [`weak_uniqueness_test`] with possibly different models in the two
/// arms; with different models the test should reject.
pub fn compare_simulators(
    inversion_model: &IntensityModel,
    thinning_model: &IntensityModel,
    horizon: f64,
    alpha: f64,
    permutations: usize,
    opts: &McOptions,
) -> Result<Outcome> {
    opts.validate(MIN_KS_SAMPLES as u64)?;
    let started = Instant::now();
    let budget = SimulationBudget::horizon(horizon).with_tolerances(opts.tolerances);
    let first = |z: &Configuration| z.jump(1).unwrap_or(horizon);
    let rows = run_replicates(opts.replicates, |r| {
        let a = ghawkes_inversion_stream(inversion_model, &opts.stream(streams::PRIMARY, r), &budget)?;
        let b = ghawkes_thinning(thinning_model, &opts.stream(streams::SECOND_ARM, r), &budget)?;
        Ok(vec![r as f64, a.len() as f64, b.len() as f64, first(&a), first(&b)])
    })?;
    let counts = permutation_two_sample(
        &column(&rows, 1),
        &column(&rows, 2),
        alpha,
        permutations,
        opts.seed,
        u64::from(streams::PERMUTATION) << 48,
    )?;
    let firsts = ks_two_sample(&column(&rows, 3), &column(&rows, 4), alpha)?;
    let (ca, cb) = (Summary::of(&column(&rows, 1)), Summary::of(&column(&rows, 2)));
    let report = ExperimentReport::new(
        "count_permutation_p_value",
        counts.p_value,
        None,
        opts.replicates,
        alpha,
        "test level; equal laws are not rejected",
        Criterion::AtLeast,
        opts.seed,
    )
    .with_check(Check::new("first_jump_ks", firsts.statistic, None, firsts.critical, Criterion::Below))
    .with_details(json!({
        "horizon": horizon,
        "permutations": permutations,
        "count_test": counts,
        "first_jump_test": firsts,
        "mean_count_inversion": ca.mean,
        "mean_count_thinning": cb.mean,
        "inversion_model": inversion_model,
        "thinning_model": thinning_model,
    }));
    let table = ReplicateTable::new(
        &["replicate", "count_inversion", "count_thinning", "first_jump_inversion", "first_jump_thinning"],
        rows,
    );
    Ok(finish(report, table, started))
}

/// Long-run event rate `N(horizon) / horizon` against the stationary rate,
/// within a relative tolerance.
pub fn long_run_rate(model: &IntensityModel, algorithm: Algorithm, horizon: f64, relative_tolerance: f64, opts: &McOptions) -> Result<Outcome> {
    opts.validate(1)?;
    let target = match model {
        IntensityModel::Constant { rate } => *rate,
        IntensityModel::ClassicalHawkes(h) => h
            .stationary_rate()
            .ok_or_else(|| Error::Unsupported("stationary rate needs an affine link with contraction below 1".into()))?,
        IntensityModel::PiecewiseConstant(p) => p.tail,
    };
    let started = Instant::now();
    let budget = SimulationBudget::horizon(horizon).with_tolerances(opts.tolerances);
    let rows = run_replicates(opts.replicates, |r| {
        let z = simulate(model, algorithm, &opts.stream(streams::PRIMARY, r), &budget)?;
        Ok(vec![r as f64, z.len() as f64 / horizon])
    })?;
    let s = Summary::of(&column(&rows, 1));
    let report = ExperimentReport::new(
        "long_run_rate",
        s.mean,
        Some(s.se),
        opts.replicates,
        target,
        "stationary rate of the model",
        Criterion::WithinTolerance {
            tolerance: relative_tolerance * target,
        },
        opts.seed,
    )
    .with_details(json!({ "horizon": horizon, "algorithm": algorithm }));
    Ok(finish(report, ReplicateTable::new(&["replicate", "rate"], rows), started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::ClassicalHawkes;
    use crate::simulation::ghawkes_inversion;

    fn hawkes(alpha: f64) -> IntensityModel {
        ClassicalHawkes::linear_exponential(alpha, 0.5, 1.0).unwrap().into()
    }

    fn two_on_unit_window() -> IntensityModel {
        IntensityModel::piecewise(vec![0.0, 2.0], vec![2.0], 1.0).unwrap()
    }

    #[test]
    fn gof_on_inversion_equals_gof_of_driving_path() {
        let m = hawkes(1.0);
        let n = sample_unit_poisson(&RngStream::new(4, 4), &SimulationBudget::n_jumps(300)).unwrap();
        let z = ghawkes_inversion(&m, &n, &SimulationBudget::n_jumps(300)).unwrap();
        let a = time_rescaling_gof(&m, &z, 0.01).unwrap();
        let b = time_rescaling_gof(&IntensityModel::constant(1.0).unwrap(), &n, 0.01).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-8);
    }

    #[test]
    fn gof_detects_wrong_rate() {
        let n = sample_unit_poisson(&RngStream::new(5, 0), &SimulationBudget::n_jumps(2000)).unwrap();
        let r = time_rescaling_gof(&IntensityModel::constant(2.0).unwrap(), &n, 0.01).unwrap();
        assert!(r.reject);
        assert!(matches!(
            time_rescaling_gof(&hawkes(1.0), &Configuration::new(vec![1.0, 2.0]).unwrap(), 0.01),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn quasi_invariance_small() {
        let opts = McOptions::new(20_000, 3);
        let m = two_on_unit_window();
        let out = quasi_invariance_test(&m, 3.0, &PathFunctional::Count { at: 3.0 }, 0.05, &opts).unwrap();
        assert!(out.report.passed(), "{:?}", out.report);
        let out = quasi_invariance_test(&m, 3.0, &PathFunctional::Constant { value: 1.0 }, 0.05, &opts).unwrap();
        assert!(out.report.passed(), "{:?}", out.report);
        assert_eq!(out.table.rows.len(), 20_000);
    }

    #[test]
    fn quasi_invariance_rejects_degenerate_weights() {
        let m = IntensityModel::piecewise(vec![0.0, 5.0], vec![40.0], 1.0).unwrap();
        let err = quasi_invariance_test(&m, 5.0, &PathFunctional::Constant { value: 1.0 }, 0.5, &McOptions::new(500, 1));
        assert!(matches!(err, Err(Error::UnreliableWeights { .. })), "{err:?}");
    }

    #[test]
    fn entropic_check_small_and_unsupported() {
        let out = entropic_criterion_check(&two_on_unit_window(), &McOptions::new(20_000, 9)).unwrap();
        assert!(out.report.passed(), "{:?}", out.report);
        assert!((out.report.target - 4.0 * m_function(-0.5).unwrap()).abs() < 1e-15);
        let unit = entropic_criterion_check(&IntensityModel::constant(1.0).unwrap(), &McOptions::new(10, 9)).unwrap();
        assert_eq!(unit.report.estimate, 0.0);
        assert_eq!(unit.report.target, 0.0);
        assert!(unit.report.passed());
        assert!(matches!(
            entropic_criterion_check(&hawkes(1.0), &McOptions::new(10, 9)),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            entropic_criterion_check(&IntensityModel::constant(2.0).unwrap(), &McOptions::new(10, 9)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn half_level_closed_forms() {
        // ẏ = 0.5 on [0, 1]: image axis [0, 0.5] with ẏ* = 2.
        let p = PiecewiseConstant::new(vec![0.0, 1.0], vec![0.5], 1.0).unwrap();
        let v = image_entropy(&p).unwrap();
        assert!((v - 0.5 * (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((poisson_relative_entropy(&p) - v).abs() < 1e-15);
    }

    #[test]
    fn variational_trivial_cases() {
        let unit = PiecewiseConstant::new(vec![0.0], vec![], 1.0).unwrap();
        let zero = PathFunctional::Constant { value: 0.0 };
        let out = variational_objective(&unit, &zero, &McOptions::new(100, 1)).unwrap();
        assert_eq!(out.report.estimate, 0.0);
        assert!(out.report.passed());
        let grid = VariationalGrid {
            levels: vec![1.0],
            window: 2.0,
            functional: zero,
        };
        let out = variational_sweep(&grid, &McOptions::new(100, 1)).unwrap();
        assert_eq!(out.report.estimate, 0.0);
        assert_eq!(out.report.target, 0.0);
        assert!(out.report.passed());
    }

    #[test]
    fn variational_objective_values() {
        let f = PathFunctional::PoissonLogDensity { at: 2.0, rate: 2.0 };
        let opts = McOptions::new(20_000, 12);
        let best = variational_objective(&PiecewiseConstant::image_window(0.5, 2.0).unwrap(), &f, &opts).unwrap();
        assert!(best.report.estimate.abs() < 4.0 * best.report.standard_error.unwrap());
        let unit = variational_objective(&PiecewiseConstant::image_window(1.0, 2.0).unwrap(), &f, &opts).unwrap();
        let expected = 2.0 * 2f64.ln() - 2.0;
        assert!((unit.report.estimate - expected).abs() < 4.0 * unit.report.standard_error.unwrap());
        assert!(unit.report.passed());
    }

    #[test]
    fn weak_uniqueness_refuses_supercritical() {
        let m: IntensityModel = ClassicalHawkes::linear_exponential(1.0, 2.0, 1.0).unwrap().into();
        let err = weak_uniqueness_test(&m, 1.0, 0.01, 100, &McOptions::new(100, 1));
        assert!(matches!(err, Err(Error::ContractionViolated { constant }) if constant == 2.0));
    }

    #[test]
    fn weak_uniqueness_small() {
        let c = IntensityModel::constant(2.0).unwrap();
        let out = weak_uniqueness_test(&c, 1.0, 0.01, 200, &McOptions::new(2000, 5)).unwrap();
        assert!(out.report.passed(), "{:?}", out.report);
        let power = compare_simulators(&hawkes(1.0), &hawkes(2.0), 5.0, 0.01, 200, &McOptions::new(2000, 5)).unwrap();
        assert!(!power.report.main_passed());
    }

    #[test]
    fn reports_are_deterministic() {
        let opts = McOptions::new(500, 77);
        let a = entropic_criterion_check(&two_on_unit_window(), &opts).unwrap();
        let b = entropic_criterion_check(&two_on_unit_window(), &opts).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.report.estimate, b.report.estimate);
        let mut buf = Vec::new();
        a.table.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("replicate,negative_log_density\n0,"));
    }
}
