//! Best-bound branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use log::debug;

use super::lp::{LinearProgram, LpStatus};
use super::simplex::simplex_solve;
use crate::error::{Error, Result};

/// Integrality tolerance for binary variables.
pub const INT_TOL: f64 = 1e-6;
/// Row/bound tolerance for accepting an incumbent.
pub const INCUMBENT_FEAS_TOL: f64 = 1e-6;

/// A linear program in which some variables must be 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpProgram {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
}

impl MilpProgram {
    /// Clamps the bounds of every binary to `[0, 1]`.
    pub fn new(mut lp: LinearProgram, binaries: Vec<usize>) -> Result<Self> {
        lp.validate()?;
        for &j in &binaries {
            if j >= lp.n_vars() {
                return Err(Error::InvalidArgument(format!("binary index {j} out of range")));
            }
            lp.lower[j] = lp.lower[j].max(0.0);
            lp.upper[j] = lp.upper[j].min(1.0);
            if lp.lower[j] > lp.upper[j] {
                return Err(Error::InvalidArgument(format!("binary {j} has an empty domain")));
            }
        }
        Ok(Self { lp, binaries })
    }

    /// Whether `x` satisfies every row and bound within `tol` and every
    /// binary is within [`INT_TOL`] of 0 or 1.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.lp.is_feasible(x, tol)
            && self.binaries.iter().all(|&j| {
                let v = x[j];
                v.abs() <= INT_TOL || (v - 1.0).abs() <= INT_TOL
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    /// Search finished (or the gap closed to the tolerance).
    Optimal,
    /// Stopped by a limit with an incumbent in hand.
    FeasibleIncumbent,
    Infeasible,
    /// Stopped by a limit before any incumbent was found.
    TimeLimitNoIncumbent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Best proven bound in the problem's own sense (upper bound when
    /// maximising).
    pub bound: f64,
    /// `|bound - objective| / (1 + |objective|)`; infinite without incumbent.
    pub gap: f64,
    pub nodes: usize,
    /// Global bound after every processed node.
    pub bound_trace: Vec<f64>,
    /// Incumbent objective each time it improved.
    pub incumbent_trace: Vec<f64>,
}

/// Source of feasible points during the search, e.g. rounding heuristics.
pub trait NodeHeuristic {
    /// `relaxation` is the node's LP optimum; `fixed[k]` is the branching
    /// state of `milp.binaries[k]`. Returned vectors are checked for
    /// feasibility before use.
    fn suggest(&mut self, relaxation: &[f64], fixed: &[Option<bool>]) -> Vec<Vec<f64>>;
}

#[derive(Debug, Clone)]
pub struct BranchOptions {
    pub time_limit_ms: u64,
    pub gap_tol: f64,
    pub node_limit: Option<usize>,
    /// Starting incumbents; infeasible ones are ignored.
    pub warm_start: Vec<Vec<f64>>,
    /// A value no integer-feasible point can beat, known from outside the
    /// relaxation. The search stops once the incumbent reaches it.
    pub objective_cap: Option<f64>,
}

impl BranchOptions {
    pub fn new(time_limit_ms: u64, gap_tol: f64) -> Self {
        Self { time_limit_ms, gap_tol, node_limit: None, warm_start: Vec::new(), objective_cap: None }
    }
}

#[derive(Debug)]
struct Node {
    fixed: Vec<Option<bool>>,
    bound: f64,
    depth: usize,
    seq: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then deepest, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    milp: &'a MilpProgram,
    sign: f64,
    incumbent: Option<(Vec<f64>, f64)>,
    incumbent_trace: Vec<f64>,
    feas_tol: f64,
}

impl Search<'_> {
    /// Offers a candidate; returns whether it became the incumbent.
    fn offer(&mut self, x: &[f64]) -> bool {
        if x.len() != self.milp.lp.n_vars() || !self.milp.is_feasible(x, self.feas_tol) {
            return false;
        }
        let value = self.sign * self.milp.lp.objective_value(x);
        let improves = match &self.incumbent {
            None => true,
            Some((_, best)) => value < *best - 1e-12 * (1.0 + best.abs()),
        };
        if improves {
            self.incumbent = Some((x.to_vec(), value));
            self.incumbent_trace.push(self.sign * value);
        }
        improves
    }

    fn prunable(&self, bound: f64, gap_tol: f64) -> bool {
        match &self.incumbent {
            None => false,
            Some((_, inc)) => inc - bound <= gap_tol * (1.0 + inc.abs()) + 1e-9 * (1.0 + inc.abs()),
        }
    }
}

/// Branch-and-bound with only a time limit and a gap tolerance.
pub fn branch_and_bound(milp: &MilpProgram, time_limit_ms: u64, gap_tol: f64) -> Result<MilpSolution> {
    branch_and_bound_with(milp, &BranchOptions::new(time_limit_ms, gap_tol), None)
}

/// Best-bound-first search branching on the most fractional binary (ties to
/// the lowest index).
pub fn branch_and_bound_with(
    milp: &MilpProgram,
    opts: &BranchOptions,
    mut heuristic: Option<&mut dyn NodeHeuristic>,
) -> Result<MilpSolution> {
    let start = Instant::now();
    let sign = milp.lp.sense.sign();
    let scale = 1.0 + milp.lp.rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let mut search = Search {
        milp,
        sign,
        incumbent: None,
        incumbent_trace: Vec::new(),
        feas_tol: INCUMBENT_FEAS_TOL * scale,
    };
    for x in &opts.warm_start {
        search.offer(x);
    }

    let nb = milp.binaries.len();
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node { fixed: vec![None; nb], bound: f64::NEG_INFINITY, depth: 0, seq });
    let mut nodes = 0usize;
    let mut bound_trace = Vec::new();
    let mut lp = milp.lp.clone();
    let mut hit_limit = false;

    let cap = opts.objective_cap.map_or(f64::NEG_INFINITY, |c| sign * c);
    let global_bound = |heap: &BinaryHeap<Node>, search: &Search| -> f64 {
        let open = heap.peek().map_or(f64::INFINITY, |n| n.bound.max(cap));
        match &search.incumbent {
            Some((_, inc)) => open.min(*inc),
            None => open,
        }
    };

    while let Some(top) = heap.peek() {
        if let Some((_, inc)) = &search.incumbent {
            let gap = (inc - top.bound.max(cap).min(*inc)) / (1.0 + inc.abs());
            if gap <= opts.gap_tol {
                break;
            }
        }
        let out_of_time = start.elapsed().as_millis() as u64 >= opts.time_limit_ms;
        let out_of_nodes = opts.node_limit.is_some_and(|lim| nodes >= lim);
        if nodes > 0 && (out_of_time || out_of_nodes) {
            hit_limit = true;
            break;
        }
        let node = heap.pop().expect("peeked");
        if search.prunable(node.bound, opts.gap_tol) {
            bound_trace.push(sign * global_bound(&heap, &search));
            continue;
        }

        for (k, &j) in milp.binaries.iter().enumerate() {
            let (lo, hi) = match node.fixed[k] {
                None => (milp.lp.lower[j], milp.lp.upper[j]),
                Some(false) => (0.0, 0.0),
                Some(true) => (1.0, 1.0),
            };
            lp.lower[j] = lo;
            lp.upper[j] = hi;
        }
        let rel = simplex_solve(&lp)?;
        nodes += 1;
        match rel.status {
            LpStatus::Infeasible => {
                bound_trace.push(sign * global_bound(&heap, &search));
                continue;
            }
            LpStatus::Unbounded => {
                return Err(Error::Unbounded(format!("LP relaxation unbounded at node depth {}", node.depth)));
            }
            LpStatus::Optimal => {}
        }
        let value = (sign * rel.objective).max(node.bound);

        if let Some(h) = heuristic.as_deref_mut() {
            for cand in h.suggest(&rel.x, &node.fixed) {
                search.offer(&cand);
            }
        }

        let mut branch: Option<(usize, f64)> = None;
        for (k, &j) in milp.binaries.iter().enumerate() {
            let v = rel.x[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > INT_TOL && branch.is_none_or(|(_, f)| frac > f + 1e-12) {
                branch = Some((k, frac));
            }
        }
        match branch {
            None => {
                search.offer(&rel.x);
            }
            Some((k, _)) if !search.prunable(value, opts.gap_tol) => {
                for choice in [false, true] {
                    let mut fixed = node.fixed.clone();
                    fixed[k] = Some(choice);
                    seq += 1;
                    heap.push(Node { fixed, bound: value, depth: node.depth + 1, seq });
                }
            }
            Some(_) => {}
        }
        bound_trace.push(sign * global_bound(&heap, &search));
    }

    let open_bound = global_bound(&heap, &search);
    debug!(
        "branch-and-bound: {nodes} nodes, {} open, {:.1} ms",
        heap.len(),
        start.elapsed().as_secs_f64() * 1e3
    );
    let (status, x, objective, bound, gap) = match search.incumbent {
        Some((x, value)) => {
            let bound = if heap.is_empty() { value } else { open_bound.min(value) };
            let gap = (value - bound).abs() / (1.0 + value.abs());
            let status = if hit_limit && gap > opts.gap_tol {
                MilpStatus::FeasibleIncumbent
            } else {
                MilpStatus::Optimal
            };
            (status, Some(x), Some(sign * value), sign * bound, gap)
        }
        None => {
            let status = if hit_limit { MilpStatus::TimeLimitNoIncumbent } else { MilpStatus::Infeasible };
            (status, None, None, sign * open_bound, f64::INFINITY)
        }
    };
    Ok(MilpSolution {
        status,
        x,
        objective,
        bound,
        gap,
        nodes,
        bound_trace,
        incumbent_trace: search.incumbent_trace,
    })
}
