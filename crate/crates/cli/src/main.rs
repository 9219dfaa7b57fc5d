//! `ghawkes`: seeded simulation and verification experiments for
//! generalized Hawkes processes.
//!
//! Exit status: 0 when every verdict passes, 2 on a statistical failure,
//! 1 on any error.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use ghawkes_core::girsanov::path_functionals_with;
use ghawkes_core::simulation::{read_replicates_csv, run_replicates, simulate, write_replicates_csv, Algorithm, RngStream};
use ghawkes_core::verification::{self, streams, ExperimentReport, Outcome, PathFunctional, SCHEMA_VERSION};
use ghawkes_core::IntensityModel;

use config::{load_grid, load_model, LoadedModel, RunConfig};

const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "ghawkes", version, about = "Generalized Hawkes simulation and verification experiments")]
struct Cli {
    /// Worker threads for replicates; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Budget {
    #[arg(long, conflicts_with = "n_jumps")]
    horizon: Option<f64>,
    #[arg(long)]
    n_jumps: Option<usize>,
    /// Cap on simulated events per path.
    #[arg(long)]
    max_events: Option<usize>,
}

#[derive(Args)]
struct Table {
    /// CSV of replicate-level values.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths; writes CSV (`replicate_id,jump_index,jump_time`) or JSON by extension.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        algo: Option<Algorithm>,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        common: Common,
    },
    /// Girsanov density and entropy functionals of one path from a CSV.
    Density {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        /// Replicate id within the CSV.
        #[arg(long, default_value_t = 0)]
        replicate: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time-rescaling Kolmogorov–Smirnov test on simulated paths.
    Gof {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        algo: Option<Algorithm>,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        table: Table,
    },
    /// Importance-weighted functional of the time-changed process against its unit Poisson value.
    QuasiInvariance {
        #[arg(long)]
        model: PathBuf,
        /// Time of the time change.
        #[arg(long)]
        t: Option<f64>,
        /// Inline TOML table, e.g. `{kind = "count", at = 1.0}`; defaults to the void probability on [0, t].
        #[arg(long)]
        functional: Option<String>,
        /// Smallest accepted effective sample size, as a fraction of replicates.
        #[arg(long)]
        ess_floor: Option<f64>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        table: Table,
    },
    /// Monte Carlo relative entropy against the closed-form entropy of the image law.
    EntropyCheck {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        table: Table,
    },
    /// Sweep of the variational objective over a grid of constant time changes.
    Variational {
        /// TOML with `levels`, `window` and a `[functional]` table.
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        table: Table,
    },
    /// Inversion against thinning in law; refuses models with contraction ≥ 1.
    WeakUniqueness {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        permutations: Option<usize>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        table: Table,
    },
}

#[derive(Serialize)]
struct ReportFile<'a> {
    schema_version: u32,
    library_version: &'static str,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a IntensityModel>,
    report: &'a ExperimentReport,
}

fn base_config(subcommand: &'static str, loaded: Option<&LoadedModel>, common: &Common) -> RunConfig {
    let mut cfg = RunConfig::new(subcommand);
    let run = loaded.map(|l| l.run.clone()).unwrap_or_default();
    if let Some(l) = loaded {
        cfg.tolerances = l.file.tolerances;
    }
    cfg.replicates = common.replicates.or(run.replicates).unwrap_or(cfg.replicates);
    cfg.seed = common.seed.or(run.seed).unwrap_or(cfg.seed);
    cfg.out = common.out.clone();
    cfg
}

fn apply_budget(cfg: &mut RunConfig, budget: &Budget, loaded: &LoadedModel) {
    let run = &loaded.run;
    if budget.horizon.is_some() || budget.n_jumps.is_some() {
        cfg.horizon = budget.horizon;
        cfg.n_jumps = budget.n_jumps;
    } else {
        cfg.horizon = run.horizon;
        cfg.n_jumps = run.n_jumps;
    }
    cfg.max_events = budget.max_events.or(run.max_events);
}

fn write_report(cfg: &RunConfig, model: Option<&IntensityModel>, outcome: &Outcome, table: &Table) -> Result<bool> {
    let file = ReportFile {
        schema_version: SCHEMA_VERSION,
        library_version: LIBRARY_VERSION,
        config: cfg,
        model,
        report: &outcome.report,
    };
    let mut bytes = serde_json::to_vec_pretty(&file)?;
    bytes.push(b'\n');
    if let Some(path) = &table.csv {
        let mut csv = Vec::new();
        outcome.table.write_csv(&mut csv)?;
        output::write_atomic(path, &csv)?;
    }
    output::emit(cfg.out.as_deref(), &bytes)?;
    let r = &outcome.report;
    eprintln!(
        "{}: estimate {} (target {}), verdict {}",
        r.estimator,
        r.estimate,
        r.target,
        if r.passed() { "pass" } else { "fail" }
    );
    Ok(r.passed())
}

fn parse_functional(inline: &str) -> Result<PathFunctional> {
    #[derive(serde::Deserialize)]
    struct Wrapper {
        functional: PathFunctional,
    }
    let w: Wrapper = toml::from_str(&format!("functional = {inline}")).with_context(|| format!("parsing --functional `{inline}`"))?;
    Ok(w.functional)
}

fn simulate_cmd(model_path: &Path, algo: Option<Algorithm>, budget: &Budget, common: &Common) -> Result<bool> {
    let loaded = load_model(model_path)?;
    let mut cfg = base_config("simulate", Some(&loaded), common);
    cfg.model_file = Some(model_path.to_path_buf());
    cfg.algo = Some(algo.or(loaded.run.algo).unwrap_or(Algorithm::Inversion));
    apply_budget(&mut cfg, budget, &loaded);
    let b = cfg.budget()?;
    let model = &loaded.file.model;
    let algorithm = cfg.algo.expect("set above");
    let paths = run_replicates(cfg.replicates, |r| {
        simulate(model, algorithm, &RngStream::in_namespace(cfg.seed, streams::PRIMARY, r), &b)
    })?;
    let json_out = cfg.out.as_deref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let bytes = if json_out {
        let paths: Vec<Vec<f64>> = paths.iter().map(|p| p.iter().copied().collect()).collect();
        let mut v = serde_json::to_vec_pretty(&json!({
            "schema_version": SCHEMA_VERSION,
            "library_version": LIBRARY_VERSION,
            "config": cfg,
            "model": model,
            "paths": paths,
        }))?;
        v.push(b'\n');
        v
    } else {
        let mut v = Vec::new();
        write_replicates_csv(&mut v, &paths)?;
        v
    };
    output::emit(cfg.out.as_deref(), &bytes)?;
    Ok(true)
}

fn density_cmd(model_path: &Path, path: &Path, horizon: Option<f64>, p: Option<f64>, replicate: usize, out: Option<&Path>) -> Result<bool> {
    let loaded = load_model(model_path)?;
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let paths = read_replicates_csv(file).with_context(|| format!("reading {}", path.display()))?;
    let Some(z) = paths.get(replicate) else {
        bail!("{} holds {} replicates, no replicate {replicate}", path.display(), paths.len());
    };
    let horizon = horizon.or(loaded.run.horizon).context("--horizon is required")?;
    let p = p.or(loaded.run.p).unwrap_or(2.0);
    let record = path_functionals_with(&loaded.file.model, z, horizon, p, loaded.file.tolerances)?;
    let mut bytes = serde_json::to_vec_pretty(&record)?;
    bytes.push(b'\n');
    output::emit(out, &bytes)?;
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate {
            model,
            algo,
            budget,
            common,
        } => simulate_cmd(&model, algo, &budget, &common),
        Command::Density {
            model,
            path,
            horizon,
            p,
            replicate,
            out,
        } => density_cmd(&model, &path, horizon, p, replicate, out.as_deref()),
        Command::Gof {
            model: model_path,
            algo,
            alpha,
            budget,
            common,
            table,
        } => {
            let loaded = load_model(&model_path)?;
            let mut cfg = base_config("gof", Some(&loaded), &common);
            cfg.model_file = Some(model_path);
            cfg.csv = table.csv.clone();
            cfg.algo = Some(algo.or(loaded.run.algo).unwrap_or(Algorithm::Inversion));
            cfg.alpha = Some(alpha.or(loaded.run.alpha).unwrap_or(config::DEFAULT_ALPHA));
            apply_budget(&mut cfg, &budget, &loaded);
            let model = &loaded.file.model;
            let outcome = verification::gof_experiment(model, cfg.algo.unwrap(), &cfg.budget()?, cfg.alpha.unwrap(), &cfg.options())?;
            write_report(&cfg, Some(model), &outcome, &table)
        }
        Command::QuasiInvariance {
            model: model_path,
            t,
            functional,
            ess_floor,
            common,
            table,
        } => {
            let loaded = load_model(&model_path)?;
            let mut cfg = base_config("quasi-invariance", Some(&loaded), &common);
            cfg.model_file = Some(model_path);
            cfg.csv = table.csv.clone();
            let t = t.or(loaded.run.t).context("--t is required")?;
            let functional = match functional {
                Some(s) => parse_functional(&s)?,
                None => loaded.run.functional.unwrap_or(PathFunctional::Void { at: t }),
            };
            cfg.t = Some(t);
            cfg.functional = Some(functional);
            cfg.ess_floor = Some(ess_floor.or(loaded.run.ess_floor).unwrap_or(config::DEFAULT_ESS_FLOOR));
            let model = &loaded.file.model;
            let outcome = verification::quasi_invariance_test(model, t, &functional, cfg.ess_floor.unwrap(), &cfg.options())?;
            write_report(&cfg, Some(model), &outcome, &table)
        }
        Command::EntropyCheck {
            model: model_path,
            common,
            table,
        } => {
            let loaded = load_model(&model_path)?;
            let mut cfg = base_config("entropy-check", Some(&loaded), &common);
            cfg.model_file = Some(model_path);
            cfg.csv = table.csv.clone();
            let model = &loaded.file.model;
            let outcome = verification::entropic_criterion_check(model, &cfg.options())?;
            write_report(&cfg, Some(model), &outcome, &table)
        }
        Command::Variational { grid, common, table } => {
            let g = load_grid(&grid)?;
            let mut cfg = base_config("variational", None, &common);
            cfg.grid_file = Some(grid);
            cfg.csv = table.csv.clone();
            cfg.functional = Some(g.functional);
            let outcome = verification::variational_sweep(&g, &cfg.options())?;
            write_report(&cfg, None, &outcome, &table)
        }
        Command::WeakUniqueness {
            model: model_path,
            horizon,
            alpha,
            permutations,
            common,
            table,
        } => {
            let loaded = load_model(&model_path)?;
            let mut cfg = base_config("weak-uniqueness", Some(&loaded), &common);
            cfg.model_file = Some(model_path);
            cfg.csv = table.csv.clone();
            cfg.horizon = horizon.or(loaded.run.horizon);
            cfg.alpha = Some(alpha.or(loaded.run.alpha).unwrap_or(config::DEFAULT_ALPHA));
            cfg.permutations = Some(permutations.or(loaded.run.permutations).unwrap_or(config::DEFAULT_PERMUTATIONS));
            let model = &loaded.file.model;
            let outcome = verification::weak_uniqueness_test(
                model,
                cfg.require_horizon()?,
                cfg.alpha.unwrap(),
                cfg.permutations.unwrap(),
                &cfg.options(),
            )?;
            write_report(&cfg, Some(model), &outcome, &table)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
