use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;

use dradp_core::benchmarks::{
    chain_run, pendulum_run, ChainRecord, Method, PendulumRecord, PendulumSetup, DEFAULT_CHAIN_GAMMA,
};
use dradp_core::dradp::SolveOptions;

use crate::{create_output, CliError, CliResult};

/// Slack for the post-run check `lower_bound <= return <= rho*`.
const SANDWICH_TOL: f64 = 1e-6;

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[arg(long, default_value_t = 100)]
    pub instances: u64,
    /// Instance `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated subset of dradp, alp, api, exact.
    #[arg(long, default_value = "dradp,alp,api,exact", value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 60_000)]
    pub time_limit_ms: u64,
    /// Caps the DRADP branch-and-bound search; makes runs independent of machine speed.
    #[arg(long)]
    pub node_limit: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_CHAIN_GAMMA)]
    pub gamma: f64,
    /// Writes zero timings so repeated runs produce identical files.
    #[arg(long)]
    pub omit_timing: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PendulumArgs {
    /// Training episodes per run.
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    #[arg(long, default_value_t = 3000)]
    pub max_len: usize,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    /// Comma-separated subset of dradp, alp, api, random.
    #[arg(long, default_value = "dradp,api", value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 60_000)]
    pub time_limit_ms: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub eval_episodes: usize,
    #[arg(long)]
    pub omit_timing: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Prints one `method mean stderr (count)` line per method, in request order.
fn print_summary<'a>(methods: &[Method], values: impl Iterator<Item = (Method, Option<f64>)> + 'a) {
    let mut by_method: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut failed: BTreeMap<&str, usize> = BTreeMap::new();
    for (m, v) in values {
        match v {
            Some(v) => by_method.entry(m.name()).or_default().push(v),
            None => *failed.entry(m.name()).or_default() += 1,
        }
    }
    for m in methods {
        let name = m.name();
        let errors = failed.get(name).copied().unwrap_or(0);
        match by_method.get(name) {
            Some(xs) => {
                let (mean, se) = mean_and_stderr(xs);
                println!("{name:<8} mean {mean:.6} stderr {se:.6} ({} ok, {errors} failed)", xs.len());
            }
            None => println!("{name:<8} no successful runs ({errors} failed)"),
        }
    }
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::input(format!("cannot write {}: {e}", path.display()))
}

/// Rows whose return leaves `[lower_bound, rho*]`, as messages.
fn sandwich_violations(records: &[ChainRecord]) -> Vec<String> {
    let exact: BTreeMap<u64, f64> = records
        .iter()
        .filter(|r| r.method == Method::Exact)
        .filter_map(|r| r.ret.map(|v| (r.seed, v)))
        .collect();
    records
        .iter()
        .filter(|r| r.method == Method::Dradp)
        .filter_map(|r| {
            let (ret, lb, rho) = (r.ret?, r.lower_bound?, *exact.get(&r.seed)?);
            (ret < lb - SANDWICH_TOL || ret > rho + SANDWICH_TOL)
                .then(|| format!("seed {}: lower bound {lb}, return {ret}, optimum {rho}", r.seed))
        })
        .collect()
}

pub fn run_chain(args: &ChainArgs) -> CliResult<()> {
    if let Some(m) = args.methods.iter().find(|m| **m == Method::Random) {
        return Err(CliError::input(format!("method '{}' is only offered by pendulum-bench", m.name())));
    }
    if !(0.0..1.0).contains(&args.gamma) {
        return Err(CliError::input(format!("--gamma must lie in [0, 1), got {}", args.gamma)));
    }
    let mut opts = SolveOptions::new(args.time_limit_ms, 1e-6);
    opts.node_limit = args.node_limit;
    let mut records = Vec::new();
    for i in 0..args.instances {
        let seed = args.seed + i;
        for &method in &args.methods {
            let mut rec = chain_run(seed, args.gamma, method, &opts);
            if let Some(e) = &rec.error {
                log::warn!("seed {seed}, {}: {e}", method.name());
            }
            if args.omit_timing {
                rec.runtime_ms = 0;
            }
            records.push(rec);
        }
    }

    let mut out = csv::Writer::from_writer(create_output(&args.out)?);
    out.write_record(["seed", "method", "return", "lower_bound", "bound_simple", "bound_direct", "gap", "runtime_ms", "error"])
        .map_err(|e| csv_error(&args.out, e))?;
    for r in &records {
        out.write_record([
            r.seed.to_string(),
            r.method.name().to_string(),
            opt(r.ret),
            opt(r.lower_bound),
            opt(r.bound_simple),
            opt(r.bound_direct),
            opt(r.gap),
            r.runtime_ms.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| csv_error(&args.out, e))?;
    }
    out.flush().map_err(|e| csv_error(&args.out, e))?;

    print_summary(&args.methods, records.iter().map(|r| (r.method, r.ret)));
    let violations = sandwich_violations(&records);
    if !violations.is_empty() {
        return Err(CliError::solver(format!(
            "{} DRADP returns outside [lower bound, optimum]: {}",
            violations.len(),
            violations.join("; ")
        )));
    }
    Ok(())
}

pub fn run_pendulum(args: &PendulumArgs) -> CliResult<()> {
    if args.episodes == 0 {
        return Err(CliError::input("--episodes must be positive: the training batch would be empty"));
    }
    if args.eval_episodes == 0 || args.max_len == 0 {
        return Err(CliError::input("--eval-episodes and --max-len must be positive"));
    }
    if let Some(m) = args.methods.iter().find(|m| **m == Method::Exact) {
        return Err(CliError::input(format!("method '{}' needs a tabular model", m.name())));
    }
    let setup = PendulumSetup {
        episodes: args.episodes,
        max_len: args.max_len,
        eval_episodes: args.eval_episodes,
        seed: args.seed,
        solve: SolveOptions::new(args.time_limit_ms, 1e-6),
    };
    let mut records: Vec<PendulumRecord> = Vec::new();
    for run in 0..args.runs {
        for &method in &args.methods {
            let mut rec = pendulum_run(&setup, run, method);
            if let Some(e) = &rec.error {
                log::warn!("run {run}, {}: {e}", method.name());
            }
            if args.omit_timing {
                rec.runtime_ms = 0;
            }
            records.push(rec);
        }
    }

    let mut out = csv::Writer::from_writer(create_output(&args.out)?);
    out.write_record(["run", "method", "n_samples", "mean_balance_steps", "runtime_ms", "error"])
        .map_err(|e| csv_error(&args.out, e))?;
    for r in &records {
        out.write_record([
            r.run.to_string(),
            r.method.name().to_string(),
            r.n_samples.to_string(),
            opt(r.mean_balance_steps),
            r.runtime_ms.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| csv_error(&args.out, e))?;
    }
    out.flush().map_err(|e| csv_error(&args.out, e))?;
    print_summary(&args.methods, records.iter().map(|r| (r.method, r.mean_balance_steps)));
    Ok(())
}
