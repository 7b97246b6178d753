use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::Serialize;

use dradp_core::baselines::{alp_solve, api_solve, ApiConfig};
use dradp_core::benchmarks::{collect_samples, TabularDomain, CHAIN_API_EPISODES, CHAIN_API_EPISODE_LEN};
use dradp_core::bounds::concentration_coefficient;
use dradp_core::dradp::{build_smooth_problem, solve_with, DradpProblem, SolutionExport, SolveOptions};
use dradp_core::mdp::{expected_return, value_iteration, DEFAULT_VI_MAX_ITERS, DEFAULT_VI_TOL};
use dradp_core::{DeterministicPolicy, FeatureBasis, TabularMdp};

use crate::{create_output, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveMethod {
    Dradp,
    DradpSmooth,
    Alp,
    Api,
    Exact,
}

/// `tabular` or `chebyshev:<k>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Features {
    Tabular,
    Chebyshev(usize),
}

impl FromStr for Features {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "tabular" {
            return Ok(Features::Tabular);
        }
        match s.strip_prefix("chebyshev:").map(str::parse::<usize>) {
            Some(Ok(k)) if k > 0 => Ok(Features::Chebyshev(k)),
            _ => Err(format!("expected 'tabular' or 'chebyshev:<k>' with k >= 1, got '{s}'")),
        }
    }
}

impl Features {
    fn basis(self, n_states: usize) -> dradp_core::Result<FeatureBasis> {
        match self {
            Features::Tabular => FeatureBasis::tabular(n_states),
            Features::Chebyshev(k) => FeatureBasis::chebyshev(n_states, k),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// MDP in the JSON layout written by the library.
    #[arg(long)]
    pub mdp: PathBuf,
    #[arg(long, default_value = "tabular")]
    pub features: Features,
    #[arg(long, value_enum)]
    pub method: SolveMethod,
    /// Replaces the discount stored in the file.
    #[arg(long)]
    pub gamma_override: Option<f64>,
    #[arg(long, default_value_t = 60_000)]
    pub time_limit_ms: u64,
    /// Caps the branch-and-bound search (DRADP only).
    #[arg(long)]
    pub node_limit: Option<usize>,
    /// Writes zero timings so repeated runs produce identical files.
    #[arg(long)]
    pub omit_timing: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Result of a non-DRADP method.
#[derive(Debug, Serialize)]
struct PolicyOutput {
    method: &'static str,
    policy: Vec<usize>,
    expected_return: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct DradpOutput {
    method: &'static str,
    #[serde(flatten)]
    solution: SolutionExport,
    expected_return: f64,
    lower_bound_status: String,
}

fn load_mdp(args: &SolveArgs) -> CliResult<TabularMdp> {
    let text = std::fs::read_to_string(&args.mdp)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", args.mdp.display())))?;
    let mdp = TabularMdp::from_json(&text)
        .map_err(|e| CliError::input(format!("malformed MDP in {}: {e}", args.mdp.display())))?;
    match args.gamma_override {
        Some(g) => mdp.with_gamma(g).map_err(|e| CliError::input(e.to_string())),
        None => Ok(mdp),
    }
}

fn solver(e: dradp_core::Error) -> CliError {
    CliError::solver(e.to_string())
}

fn returns(mdp: &TabularMdp, policy: &DeterministicPolicy) -> CliResult<f64> {
    expected_return(mdp, &policy.to_randomized(mdp.n_actions())).map_err(solver)
}

pub fn run(args: &SolveArgs) -> CliResult<()> {
    let mdp = load_mdp(args)?;
    let basis = args.features.basis(mdp.n_states()).map_err(|e| CliError::input(e.to_string()))?;
    let json = match args.method {
        SolveMethod::Dradp | SolveMethod::DradpSmooth => {
            let mut problem = DradpProblem::tabular(&mdp, &basis).map_err(solver)?;
            let name = if args.method == SolveMethod::DradpSmooth {
                let (c, mu) = concentration_coefficient(&mdp);
                problem = build_smooth_problem(&problem, c, &mu).map_err(solver)?;
                "dradp-smooth"
            } else {
                "dradp"
            };
            let mut opts = SolveOptions::new(args.time_limit_ms, 1e-6);
            opts.node_limit = args.node_limit;
            let sol = solve_with(&problem, &opts).map_err(solver)?;
            log::info!("{name}: bound {} after {} nodes ({:?})", sol.objective, sol.node_count, sol.status);
            let out = DradpOutput {
                method: name,
                expected_return: returns(&mdp, &sol.policy)?,
                lower_bound_status: format!("{:?}", sol.status),
                solution: sol.export(args.omit_timing),
            };
            serde_json::to_string_pretty(&out)
        }
        SolveMethod::Alp => {
            let problem = DradpProblem::tabular(&mdp, &basis).map_err(solver)?;
            let sol = alp_solve(&problem, None).map_err(solver)?;
            serde_json::to_string_pretty(&PolicyOutput {
                method: "alp",
                expected_return: returns(&mdp, &sol.policy)?,
                policy: sol.policy.0,
                weights: Some(sol.weights.iter().copied().collect()),
            })
        }
        SolveMethod::Api => {
            let samples = collect_samples(&TabularDomain::new(&mdp, &basis), CHAIN_API_EPISODES, CHAIN_API_EPISODE_LEN, 0);
            let sol = api_solve(&samples, &basis, mdp.gamma(), &ApiConfig::default(), 0).map_err(solver)?;
            serde_json::to_string_pretty(&PolicyOutput {
                method: "api",
                expected_return: returns(&mdp, &sol.policy)?,
                policy: sol.policy.0,
                weights: None,
            })
        }
        SolveMethod::Exact => {
            let opt = value_iteration(&mdp, DEFAULT_VI_TOL, DEFAULT_VI_MAX_ITERS).map_err(solver)?;
            serde_json::to_string_pretty(&PolicyOutput {
                method: "exact",
                expected_return: opt.rho,
                policy: opt.policy.0,
                weights: None,
            })
        }
    }
    .map_err(|e| CliError::solver(format!("cannot encode result: {e}")))?;
    let mut file = create_output(&args.out)?;
    writeln!(file, "{json}").map_err(|e| CliError::input(format!("cannot write {}: {e}", args.out.display())))?;
    Ok(())
}
