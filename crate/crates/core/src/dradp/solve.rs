use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::evaluate::{complementary_lambda2, inner_lp, InnerSolution};
use super::{build_milp, DradpProblem, MilpLayout};
use crate::error::{Error, Result};
use crate::mdp::DeterministicPolicy;
use crate::optim::{
    branch_and_bound_with, simplex_solve, BranchOptions, LpStatus, MilpProgram, MilpStatus, NodeHeuristic,
    INCUMBENT_FEAS_TOL,
};

/// Relative tolerance under which two backups count as tied.
const TIE_TOL: f64 = 1e-9;
const MAX_POLISH_STEPS: usize = 200;
const HOP_SEED: u64 = 0x5eed;
/// Kick sizes relative to the largest multiplier, cycled.
const HOP_SCALES: [f64; 4] = [0.05, 0.2, 0.5, 1.0];

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub time_limit_ms: u64,
    pub gap_tol: f64,
    /// Extra stopping rule for the branch-and-bound, on top of the time limit.
    pub node_limit: Option<usize>,
    pub max_tau_escalations: usize,
    /// Above this many dense tableau entries the branch-and-bound is skipped
    /// and only the incumbent heuristics run.
    pub max_tableau_entries: usize,
    /// Random restarts of the heuristic search, in multiplier space.
    pub hops: usize,
}

impl SolveOptions {
    pub fn new(time_limit_ms: u64, gap_tol: f64) -> Self {
        Self { time_limit_ms, gap_tol, node_limit: None, max_tau_escalations: 5, max_tableau_entries: 4_000_000, hops: 300 }
    }
}

/// A DRADP policy with the multipliers that certify its bound.
///
/// `lambda1` is shifted along the constant feature so that the selected
/// pairs carry no `lambda2` mass; `z = pi * lambda2` is then zero.
#[derive(Debug, Clone)]
pub struct DradpSolution {
    /// Action per represented state.
    pub policy: DeterministicPolicy,
    /// Selected pair index per represented state.
    pub selected: Vec<usize>,
    pub lambda1: DVector<f64>,
    pub lambda2: DVector<f64>,
    pub lambda3: Option<DVector<f64>>,
    pub z: DVector<f64>,
    /// `Phi lambda1` on the represented states.
    pub values: DVector<f64>,
    /// `rho~` of the returned policy.
    pub objective: f64,
    /// Objective of the best mixed-integer point found by the search.
    pub milp_objective: f64,
    /// Upper bound on the mixed-integer optimum.
    pub bound: f64,
    pub gap: f64,
    pub status: MilpStatus,
    pub tau_used: f64,
    pub node_count: usize,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub state: usize,
    pub action: usize,
}

/// JSON shape of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionExport {
    pub objective: f64,
    pub gap: f64,
    pub lambda1: Vec<f64>,
    pub policy: Vec<PolicyEntry>,
    pub tau_used: f64,
    pub node_count: usize,
    pub runtime_ms: u64,
}

impl DradpSolution {
    /// One-hot pair weights of the returned policy.
    pub fn pair_weights(&self, n_pairs: usize) -> Vec<f64> {
        let mut w = vec![0.0; n_pairs];
        for &i in &self.selected {
            w[i] = 1.0;
        }
        w
    }

    /// `alpha' Phi lambda1 - 1'z - cap' lambda3`.
    pub fn dual_objective(&self, problem: &DradpProblem) -> f64 {
        let mut obj = problem.phi_alpha.dot(&self.lambda1) - self.z.sum();
        if let (Some(cap), Some(l3)) = (&problem.smooth_cap, &self.lambda3) {
            obj -= cap.dot(l3);
        }
        obj
    }

    /// `pi' lambda2`.
    pub fn complementarity(&self) -> f64 {
        self.selected.iter().map(|&i| self.lambda2[i]).sum()
    }

    pub fn export(&self, omit_timing: bool) -> SolutionExport {
        SolutionExport {
            objective: self.objective,
            gap: self.gap,
            lambda1: self.lambda1.iter().copied().collect(),
            policy: self
                .policy
                .as_slice()
                .iter()
                .enumerate()
                .map(|(state, &action)| PolicyEntry { state, action })
                .collect(),
            tau_used: self.tau_used,
            node_count: self.node_count,
            runtime_ms: if omit_timing { 0 } else { self.runtime_ms },
        }
    }
}

/// A policy that is greedy with respect to its own certificate.
#[derive(Debug, Clone)]
struct Polished {
    choice: Vec<usize>,
    value: f64,
    lambda1: DVector<f64>,
    lambda3: Option<DVector<f64>>,
}

struct Engine<'a> {
    problem: &'a DradpProblem,
    evals: HashMap<Vec<usize>, InnerSolution>,
    polished: HashMap<Vec<usize>, Polished>,
    improved: HashMap<Vec<usize>, Polished>,
    deadline: Option<Instant>,
}

impl<'a> Engine<'a> {
    fn new(problem: &'a DradpProblem, deadline: Option<Instant>) -> Self {
        Self { problem, evals: HashMap::new(), polished: HashMap::new(), improved: HashMap::new(), deadline }
    }

    fn weights(&self, choice: &[usize]) -> Vec<f64> {
        let mut w = vec![0.0; self.problem.n_pairs()];
        for &i in choice {
            w[i] = 1.0;
        }
        w
    }

    fn evaluate(&mut self, choice: &[usize]) -> Result<InnerSolution> {
        if let Some(hit) = self.evals.get(choice) {
            return Ok(hit.clone());
        }
        let sol = inner_lp(self.problem, &self.weights(choice))?;
        self.evals.insert(choice.to_vec(), sol.clone());
        Ok(sol)
    }

    /// Per state, the allowed pair with the largest backup of `Phi lambda1`.
    /// Ties go to `prefer` when given, otherwise to the lowest action.
    fn greedy(&self, lambda1: &DVector<f64>, prefer: Option<&[usize]>, allowed: &dyn Fn(usize) -> bool) -> Vec<usize> {
        let adv = self.problem.advantages(lambda1);
        self.problem
            .state_pairs
            .iter()
            .enumerate()
            .map(|(s, list)| {
                let mut cands: Vec<usize> = list.iter().copied().filter(|&i| allowed(i)).collect();
                if cands.is_empty() {
                    cands = list.clone();
                }
                let best = cands.iter().map(|&i| adv[i]).fold(f64::NEG_INFINITY, f64::max);
                let tol = TIE_TOL * (1.0 + best.abs());
                if let Some(p) = prefer.map(|p| p[s]) {
                    if cands.contains(&p) && adv[p] >= best - tol {
                        return p;
                    }
                }
                *cands.iter().find(|&&i| adv[i] >= best - 1e-12 * (1.0 + best.abs())).expect("non-empty")
            })
            .collect()
    }

    /// Alternates evaluation and greedy improvement until the policy is
    /// greedy for its own multipliers.
    fn polish(&mut self, start: &[usize]) -> Result<Polished> {
        if let Some(hit) = self.polished.get(start) {
            return Ok(hit.clone());
        }
        let all = |_: usize| true;
        let mut choice = start.to_vec();
        let mut ev = self.evaluate(&choice)?;
        let mut steps = 0;
        let out = loop {
            let next = self.greedy(&ev.lambda1, Some(&choice), &all);
            if next == choice {
                break Polished { choice, value: ev.value, lambda1: ev.lambda1, lambda3: ev.lambda3 };
            }
            let ev_next = self.evaluate(&next)?;
            if ev_next.value <= ev.value + 1e-10 * (1.0 + ev.value.abs()) {
                // `next` is greedy for `ev`'s multipliers, which certify its value
                break Polished { choice: next, value: ev_next.value, lambda1: ev.lambda1, lambda3: ev.lambda3 };
            }
            steps += 1;
            if steps == MAX_POLISH_STEPS {
                warn!("greedy polishing stopped after {MAX_POLISH_STEPS} steps");
                break Polished { choice: next, value: ev_next.value, lambda1: ev_next.lambda1, lambda3: ev_next.lambda3 };
            }
            choice = next;
            ev = ev_next;
        };
        self.polished.insert(start.to_vec(), out.clone());
        Ok(out)
    }

    /// Single-state action swaps that raise the bound, each followed by
    /// polishing, until no swap helps.
    fn improve(&mut self, start: &[usize]) -> Result<Polished> {
        if let Some(hit) = self.improved.get(start) {
            return Ok(hit.clone());
        }
        let mut best = self.polish(start)?;
        'sweep: loop {
            let support = self.evaluate(&best.choice)?.u;
            for s in 0..self.problem.n_states() {
                // dropping a pair the minimiser does not use cannot raise the minimum
                if support[best.choice[s]] <= 0.0 {
                    continue;
                }
                for &i in &self.problem.state_pairs[s] {
                    if i == best.choice[s] {
                        continue;
                    }
                    if self.deadline.is_some_and(|d| Instant::now() >= d) {
                        break 'sweep;
                    }
                    let mut cand = best.choice.clone();
                    cand[s] = i;
                    let value = match self.evaluate(&cand) {
                        Ok(ev) => ev.value,
                        Err(Error::Infeasible(_)) => continue,
                        Err(e) => return Err(e),
                    };
                    if value > best.value + 1e-9 * (1.0 + best.value.abs()) {
                        let next = self.polish(&cand)?;
                        if next.value > best.value {
                            best = next;
                            continue 'sweep;
                        }
                    }
                }
            }
            break;
        }
        self.improved.insert(start.to_vec(), best.clone());
        Ok(best)
    }

    /// Shifts `lambda1` along the constant feature until every selected pair
    /// has zero `lambda2`; returns the shifted `lambda1` and its `lambda2`.
    fn post_process(&self, pol: &Polished) -> (DVector<f64>, DVector<f64>) {
        let p = self.problem;
        let c0 = p.constant;
        let raw = complementary_lambda2(p, &pol.lambda1, pol.lambda3.as_ref());
        let shift = pol
            .choice
            .iter()
            .map(|&i| raw[i] * (1.0 - p.gamma) / p.a_phi[(i, c0)])
            .fold(0.0_f64, f64::max);
        let mut lambda1 = pol.lambda1.clone();
        lambda1[c0] -= shift;
        let mut lambda2 = complementary_lambda2(p, &lambda1, pol.lambda3.as_ref());
        for &i in &pol.choice {
            // rounding residue of the shift
            if lambda2[i] <= 1e-9 * (1.0 + shift.abs()) {
                lambda2[i] = 0.0;
            }
        }
        (lambda1, lambda2)
    }

    /// A feasible point of `milp` encoding `pol`.
    fn milp_point(&self, milp: &MilpProgram, layout: &MilpLayout, pol: &Polished) -> Option<Vec<f64>> {
        let (lambda1, lambda2) = self.post_process(pol);
        let mut x = vec![0.0; layout.n_vars()];
        for j in 0..layout.n_features {
            x[layout.lambda1(j)] = lambda1[j];
        }
        for i in 0..layout.n_pairs {
            x[layout.lambda2(i)] = lambda2[i];
        }
        for &i in &pol.choice {
            x[layout.pi(i)] = 1.0;
            x[layout.z(i)] = lambda2[i];
        }
        if let Some(l3) = &pol.lambda3 {
            for (s, v) in l3.iter().enumerate() {
                x[layout.lambda3(s)] = *v;
            }
        }
        let tol = feasibility_tol(milp);
        if milp.lp.is_feasible(&x, tol) {
            return Some(x);
        }
        // typically the value box: let the LP pick multipliers for this policy
        let mut lp = milp.lp.clone();
        for i in 0..layout.n_pairs {
            let v = x[layout.pi(i)];
            lp.set_bounds(layout.pi(i), v, v);
        }
        match simplex_solve(&lp) {
            Ok(sol) if sol.status == LpStatus::Optimal => Some(sol.x),
            _ => None,
        }
    }
}

fn feasibility_tol(milp: &MilpProgram) -> f64 {
    INCUMBENT_FEAS_TOL * (1.0 + milp.lp.rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs())))
}

/// Node heuristic: greedy rounding of the node's `lambda1` within its
/// fixings, then polishing.
struct GreedyRounding<'e, 'a> {
    engine: &'e mut Engine<'a>,
    milp: &'e MilpProgram,
    layout: MilpLayout,
    seen: HashSet<Vec<usize>>,
    offered: HashSet<Vec<usize>>,
    error: Option<Error>,
}

impl NodeHeuristic for GreedyRounding<'_, '_> {
    fn suggest(&mut self, relaxation: &[f64], fixed: &[Option<bool>]) -> Vec<Vec<f64>> {
        let lambda1 = DVector::from_column_slice(&relaxation[..self.layout.n_features]);
        let allowed = |i: usize| fixed[i] != Some(false);
        let mut start = self.engine.greedy(&lambda1, None, &allowed);
        // honour fixings to one
        for (s, list) in self.engine.problem.state_pairs.iter().enumerate() {
            if let Some(&i) = list.iter().find(|&&i| fixed[i] == Some(true)) {
                start[s] = i;
            }
        }
        if !self.seen.insert(start.clone()) {
            return Vec::new();
        }
        let pol = match self.engine.improve(&start) {
            Ok(p) => p,
            Err(e) => {
                self.error.get_or_insert(e);
                return Vec::new();
            }
        };
        if !self.offered.insert(pol.choice.clone()) {
            return Vec::new();
        }
        self.engine.milp_point(self.milp, &self.layout, &pol).into_iter().collect()
    }
}

/// [`solve_with`] with default options.
pub fn solve(problem: &DradpProblem, time_limit_ms: u64, gap_tol: f64) -> Result<DradpSolution> {
    solve_with(problem, &SolveOptions::new(time_limit_ms, gap_tol))
}

/// Maximises the lower bound over deterministic policies on the represented
/// states. If the optimal `lambda2` reaches `tau`, `tau` is doubled and the
/// search repeated.
pub fn solve_with(problem: &DradpProblem, opts: &SolveOptions) -> Result<DradpSolution> {
    let start = Instant::now();
    let mut current = problem.clone();
    for attempt in 0..=opts.max_tau_escalations {
        let mut sol = solve_once(&current, opts, start)?;
        let l2max = sol.lambda2.amax();
        if l2max <= current.tau * (1.0 - 1e-6) {
            sol.runtime_ms = start.elapsed().as_millis() as u64;
            return Ok(sol);
        }
        if attempt == opts.max_tau_escalations {
            return Err(Error::TauEscalation { lambda2_max: l2max, tau: current.tau });
        }
        info!("max lambda2 {l2max:e} reaches tau {:e}; doubling", current.tau);
        current.tau *= 2.0;
    }
    unreachable!("loop returns on its last iteration")
}

fn solve_once(problem: &DradpProblem, opts: &SolveOptions, start: Instant) -> Result<DradpSolution> {
    let deadline = start + Duration::from_millis(opts.time_limit_ms);
    let mut engine = Engine::new(problem, Some(deadline));

    if problem.state_pairs.iter().all(|l| l.len() == 1) {
        // a single admissible policy: nothing to search
        let choice: Vec<usize> = problem.state_pairs.iter().map(|l| l[0]).collect();
        let pol = engine.polish(&choice)?;
        return Ok(assemble(&engine, &pol, pol.value, pol.value, MilpStatus::Optimal, 0));
    }

    let rows = 2 * problem.n_pairs() + 3 * problem.n_states();
    let cols = MilpLayout::of(problem).n_vars();
    if rows.saturating_mul(rows + cols) > opts.max_tableau_entries {
        return heuristic_only(&mut engine, opts.hops);
    }

    let milp = build_milp(problem);
    let layout = MilpLayout::of(problem);
    let root = simplex_solve(&milp.lp)?;
    match root.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => return Err(Error::Unbounded("DRADP relaxation".into())),
        LpStatus::Infeasible => return Err(Error::Infeasible("DRADP relaxation".into())),
    }
    let lambda1_root = DVector::from_column_slice(&root.x[..layout.n_features]);
    let warm = engine.greedy(&lambda1_root, None, &|_| true);
    let warm = engine.improve(&warm)?;
    let mut bb = BranchOptions::new(
        opts.time_limit_ms.saturating_sub(start.elapsed().as_millis() as u64),
        opts.gap_tol,
    );
    bb.node_limit = opts.node_limit;
    // every lower bound is at most the return it bounds, which the ALP value dominates
    bb.objective_cap = crate::baselines::alp_solve(problem, None).ok().map(|alp| alp.objective);
    bb.warm_start = engine.milp_point(&milp, &layout, &warm).into_iter().collect();

    let (result, error) = {
        let mut heuristic = GreedyRounding {
            engine: &mut engine,
            milp: &milp,
            layout,
            seen: HashSet::new(),
            offered: HashSet::new(),
            error: None,
        };
        let r = branch_and_bound_with(&milp, &bb, Some(&mut heuristic));
        (r, heuristic.error)
    };
    if let Some(e) = error {
        warn!("node heuristic failed at least once: {e}");
    }
    let result = result?;
    let x = match (result.status, result.x) {
        (MilpStatus::Infeasible, _) => return Err(Error::Infeasible("DRADP program".into())),
        (_, None) => return Err(Error::NoIncumbent),
        (_, Some(x)) => x,
    };
    debug!(
        "DRADP search: status {:?}, objective {:?}, bound {}, {} nodes",
        result.status, result.objective, result.bound, result.nodes
    );
    let choice: Vec<usize> = problem
        .state_pairs
        .iter()
        .map(|list| {
            *list
                .iter()
                .max_by(|&&a, &&b| x[layout.pi(a)].total_cmp(&x[layout.pi(b)]).then(b.cmp(&a)))
                .expect("every state has a pair")
        })
        .collect();
    let pol = engine.improve(&choice)?;
    // objective of the mixed-integer point that encodes the returned policy
    let milp_objective = engine
        .milp_point(&milp, &layout, &pol)
        .map(|x| milp.lp.objective_value(&x))
        .unwrap_or_else(|| result.objective.expect("incumbent has an objective"));
    Ok(assemble(&engine, &pol, milp_objective, result.bound, result.status, result.nodes))
}

/// Incumbent search without branch-and-bound: start from the greedy policy
/// of the uniform policy's multipliers and improve locally.
fn heuristic_only(engine: &mut Engine, hops: usize) -> Result<DradpSolution> {
    let p = engine.problem;
    let mut uniform = vec![0.0; p.n_pairs()];
    for list in &p.state_pairs {
        for &i in list {
            uniform[i] = 1.0 / list.len() as f64;
        }
    }
    let ev = inner_lp(p, &uniform)?;
    let start = engine.greedy(&ev.lambda1, None, &|_| true);
    let mut pol = engine.improve(&start)?;
    let first = pol.value;
    let mut rng = ChaCha8Rng::seed_from_u64(HOP_SEED);
    let mut accepted = 0;
    for hop in 0..hops {
        if engine.deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let scale = HOP_SCALES[hop % HOP_SCALES.len()] * pol.lambda1.amax().max(1.0);
        let kicked = pol.lambda1.map(|x| x + scale * rng.gen_range(-1.0..1.0));
        let cand = engine.greedy(&kicked, None, &|_| true);
        let next = match engine.polish(&cand) {
            Ok(x) => x,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        };
        if next.value > pol.value + 1e-9 * (1.0 + pol.value.abs()) {
            pol = engine.improve(&next.choice)?;
            accepted += 1;
        }
    }
    debug!("multiplier hops: {accepted} accepted, bound {first} -> {}", pol.value);
    // every relaxed occupancy has mass in [1 - gamma, 1]
    let rmax = p.b.max();
    let bound = if rmax >= 0.0 { rmax / (1.0 - p.gamma) } else { rmax };
    info!("problem too large for the dense search; returning the heuristic incumbent");
    Ok(assemble(engine, &pol, pol.value, bound, MilpStatus::FeasibleIncumbent, 0))
}

fn assemble(
    engine: &Engine,
    pol: &Polished,
    milp_objective: f64,
    bound: f64,
    status: MilpStatus,
    nodes: usize,
) -> DradpSolution {
    let p = engine.problem;
    let (lambda1, lambda2) = engine.post_process(pol);
    let mut z = DVector::zeros(p.n_pairs());
    for &i in &pol.choice {
        z[i] = lambda2[i];
    }
    let values = &p.phi * &lambda1;
    let objective = pol.value;
    let gap = (bound - objective).max(0.0) / (1.0 + objective.abs());
    DradpSolution {
        policy: DeterministicPolicy(pol.choice.iter().map(|&i| p.pairs[i].1).collect()),
        selected: pol.choice.clone(),
        lambda1,
        lambda2,
        lambda3: pol.lambda3.clone(),
        z,
        values,
        objective,
        milp_objective,
        bound: bound.max(objective),
        gap,
        status,
        tau_used: p.tau,
        node_count: nodes,
        runtime_ms: 0,
    }
}
