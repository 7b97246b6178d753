//! End-to-end runs of each method on the two benchmark domains, shared by the
//! command line and the acceptance tests.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;

use super::{
    chain_generate, collect_samples, collect_samples_all_actions, evaluate_balancing, lookahead_action, random_policy,
    ChainInstance, Pendulum, PendulumState, DEFAULT_PENDULUM_GAMMA,
};
use crate::baselines::{alp_solve, api_solve, ApiConfig};
use crate::bounds::{bound_direct, bound_simple};
use crate::dradp::{build_sampled_problem, solve_with, DradpProblem, FeatureBasis, SolveOptions, TauPolicy};
use crate::error::{Error, Result};
use crate::mdp::{expected_return, value_iteration, DEFAULT_VI_MAX_ITERS, DEFAULT_VI_TOL};

/// Episodes and steps of random-walk data used to train API on a chain.
pub const CHAIN_API_EPISODES: usize = 50;
pub const CHAIN_API_EPISODE_LEN: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dradp,
    Alp,
    Api,
    Exact,
    /// Uniformly random actions; a reference point for the pendulum.
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dradp => "dradp",
            Method::Alp => "alp",
            Method::Api => "api",
            Method::Exact => "exact",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dradp" => Ok(Method::Dradp),
            "alp" => Ok(Method::Alp),
            "api" => Ok(Method::Api),
            "exact" => Ok(Method::Exact),
            "random" => Ok(Method::Random),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// One method on one chain instance. Failures are kept as rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRecord {
    pub seed: u64,
    pub method: Method,
    /// Exact expected return of the method's policy.
    pub ret: Option<f64>,
    /// The robust lower bound certified by DRADP.
    pub lower_bound: Option<f64>,
    pub bound_simple: Option<f64>,
    pub bound_direct: Option<f64>,
    pub gap: Option<f64>,
    pub runtime_ms: u64,
    pub error: Option<String>,
}

impl ChainRecord {
    fn empty(seed: u64, method: Method) -> Self {
        Self {
            seed,
            method,
            ret: None,
            lower_bound: None,
            bound_simple: None,
            bound_direct: None,
            gap: None,
            runtime_ms: 0,
            error: None,
        }
    }
}

/// Generates the chain for `seed` and runs `method` on it.
pub fn chain_run(seed: u64, gamma: f64, method: Method, opts: &SolveOptions) -> ChainRecord {
    let start = Instant::now();
    let mut rec = ChainRecord::empty(seed, method);
    let outcome = chain_generate(seed, gamma).and_then(|inst| chain_method(&inst, method, opts, &mut rec));
    if let Err(e) = outcome {
        rec.error = Some(e.to_string());
    }
    rec.runtime_ms = start.elapsed().as_millis() as u64;
    rec
}

fn chain_method(inst: &ChainInstance, method: Method, opts: &SolveOptions, rec: &mut ChainRecord) -> Result<()> {
    let mdp = &inst.mdp;
    let na = mdp.n_actions();
    match method {
        Method::Exact => {
            let opt = value_iteration(mdp, DEFAULT_VI_TOL, DEFAULT_VI_MAX_ITERS)?;
            rec.ret = Some(opt.rho);
        }
        Method::Dradp => {
            let problem = DradpProblem::tabular(mdp, &inst.basis)?;
            let sol = solve_with(&problem, opts)?;
            rec.ret = Some(expected_return(mdp, &sol.policy.to_randomized(na))?);
            rec.lower_bound = Some(sol.objective);
            rec.bound_simple = Some(bound_simple(mdp, &sol.values)?);
            rec.bound_direct = Some(bound_direct(mdp, &inst.basis)?);
            rec.gap = Some(sol.gap);
        }
        Method::Alp => {
            let problem = DradpProblem::tabular(mdp, &inst.basis)?;
            let sol = alp_solve(&problem, None)?;
            rec.ret = Some(expected_return(mdp, &sol.policy.to_randomized(na))?);
            rec.bound_simple = Some(bound_simple(mdp, &sol.values)?);
            rec.bound_direct = Some(bound_direct(mdp, &inst.basis)?);
        }
        Method::Api => {
            let samples = collect_samples(inst, CHAIN_API_EPISODES, CHAIN_API_EPISODE_LEN, inst.seed);
            let sol = api_solve(&samples, &inst.basis, mdp.gamma(), &ApiConfig::default(), inst.seed)?;
            rec.ret = Some(expected_return(mdp, &sol.policy.to_randomized(na))?);
            rec.bound_direct = Some(bound_direct(mdp, &inst.basis)?);
        }
        Method::Random => {
            return Err(Error::InvalidArgument("the random reference is only offered on the pendulum".into()));
        }
    }
    Ok(())
}

/// Settings of one pendulum training run.
#[derive(Debug, Clone)]
pub struct PendulumSetup {
    pub episodes: usize,
    pub max_len: usize,
    pub eval_episodes: usize,
    pub seed: u64,
    pub solve: SolveOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PendulumRecord {
    pub run: usize,
    pub method: Method,
    pub n_samples: usize,
    pub mean_balance_steps: Option<f64>,
    pub runtime_ms: u64,
    pub error: Option<String>,
}

/// Seeds of run `run`: one for the training batch, one for evaluation.
fn pendulum_seeds(seed: u64, run: usize) -> (u64, u64) {
    let base = seed.wrapping_mul(1_000_003).wrapping_add(run as u64);
    (base, base ^ 0x9e37_79b9_7f4a_7c15)
}

/// Trains `method` on a fresh batch and measures balancing on the simulator.
/// Every run evaluates its methods on the same episode seeds.
pub fn pendulum_run(setup: &PendulumSetup, run: usize, method: Method) -> PendulumRecord {
    let start = Instant::now();
    let (train_seed, eval_seed) = pendulum_seeds(setup.seed, run);
    let mut rec = PendulumRecord { run, method, n_samples: 0, mean_balance_steps: None, runtime_ms: 0, error: None };
    match pendulum_method(setup, method, train_seed, eval_seed, &mut rec) {
        Ok(steps) => rec.mean_balance_steps = Some(steps),
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec.runtime_ms = start.elapsed().as_millis() as u64;
    rec
}

fn pendulum_method(
    setup: &PendulumSetup,
    method: Method,
    train_seed: u64,
    eval_seed: u64,
    rec: &mut PendulumRecord,
) -> Result<f64> {
    let gamma = DEFAULT_PENDULUM_GAMMA;
    if method == Method::Random {
        let mut pol = random_policy(train_seed);
        return Ok(evaluate_balancing(&mut pol, setup.eval_episodes, eval_seed));
    }
    let samples = collect_samples_all_actions(&Pendulum, setup.episodes, setup.max_len, train_seed);
    rec.n_samples = samples.transitions.len();
    let problem = build_sampled_problem(&samples, gamma, TauPolicy::Auto)?;
    match method {
        Method::Dradp => {
            let sol = solve_with(&problem, &setup.solve)?;
            Ok(balance_with_values(sol.lambda1.as_slice(), setup, eval_seed))
        }
        Method::Alp => {
            let sol = alp_solve(&problem, None)?;
            Ok(balance_with_values(sol.weights.as_slice(), setup, eval_seed))
        }
        Method::Api => {
            let basis = FeatureBasis::new(problem.features().clone())?;
            let sol = api_solve(&samples, &basis, gamma, &ApiConfig::default(), train_seed)?;
            let mut pol = |s: &PendulumState| sol.action(&super::pendulum_features(s));
            Ok(evaluate_balancing(&mut pol, setup.eval_episodes, eval_seed))
        }
        Method::Exact | Method::Random => {
            Err(Error::InvalidArgument(format!("method '{method}' is not available on the pendulum")))
        }
    }
}

fn balance_with_values(weights: &[f64], setup: &PendulumSetup, eval_seed: u64) -> f64 {
    let w = DVector::from_column_slice(weights);
    let mut pol = |s: &PendulumState| lookahead_action(w.as_slice(), s, DEFAULT_PENDULUM_GAMMA);
    evaluate_balancing(&mut pol, setup.eval_episodes, eval_seed)
}
