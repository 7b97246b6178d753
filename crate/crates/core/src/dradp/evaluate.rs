use nalgebra::DVector;

use super::DradpProblem;
use crate::error::{Error, Result};
use crate::mdp::RandomizedPolicy;
use crate::optim::{LinearProgram, LpStatus, RowKind, Sense};

/// Optimum of the inner occupancy LP together with a matching dual point.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    /// `rho~(pi)`.
    pub value: f64,
    /// Minimising relaxed occupancy, one entry per pair.
    pub u: DVector<f64>,
    pub lambda1: DVector<f64>,
    /// `[(A Phi lambda1 - b) / (1 - gamma) - lambda3]_+` per pair.
    pub lambda2: DVector<f64>,
    /// Multipliers of the smoothness rows, per represented state.
    pub lambda3: Option<DVector<f64>>,
}

/// Closed-form `lambda2` for given `lambda1` and `lambda3`.
pub(crate) fn complementary_lambda2(
    problem: &DradpProblem,
    lambda1: &DVector<f64>,
    lambda3: Option<&DVector<f64>>,
) -> DVector<f64> {
    let g = problem.gamma;
    let slack = &problem.a_phi * lambda1 - &problem.b;
    DVector::from_fn(problem.n_pairs(), |i, _| {
        let extra = lambda3.map_or(0.0, |l3| l3[problem.pairs[i].0]);
        (slack[i] / (1.0 - g) - extra).max(0.0)
    })
}

/// `alpha' Phi lambda1 - w' lambda2 - cap' lambda3`.
#[cfg(test)]
fn dual_objective(
    problem: &DradpProblem,
    weights: &[f64],
    lambda1: &DVector<f64>,
    lambda2: &DVector<f64>,
    lambda3: Option<&DVector<f64>>,
) -> f64 {
    let mut obj = problem.phi_alpha.dot(lambda1);
    obj -= weights.iter().zip(lambda2.iter()).map(|(w, l)| w * l).sum::<f64>();
    if let (Some(cap), Some(l3)) = (&problem.smooth_cap, lambda3) {
        obj -= cap.dot(l3);
    }
    obj
}

fn infeasible() -> Error {
    Error::Infeasible(
        "no relaxed occupancy matches the feature moments; collect more samples or add actions per state".into(),
    )
}

/// Solves `min b'u / (1 - gamma)` over `Phi'A'u = (1 - gamma) Phi'alpha`,
/// `0 <= u <= w` (plus the smoothness rows) for pair weights `w`.
pub(crate) fn inner_lp(problem: &DradpProblem, weights: &[f64]) -> Result<InnerSolution> {
    crate::error::check_dim("pair weights", problem.n_pairs(), weights.len())?;
    let g = problem.gamma;
    let k = problem.n_features();
    let active: Vec<usize> = (0..problem.n_pairs()).filter(|&i| weights[i] > 0.0).collect();
    let cost = active.iter().map(|&i| problem.b[i] / (1.0 - g)).collect();
    let mut lp = LinearProgram::new(Sense::Minimize, cost);
    for (c, &i) in active.iter().enumerate() {
        lp.upper[c] = weights[i];
    }
    for j in 0..k {
        let row = active.iter().map(|&i| problem.a_phi[(i, j)]).collect();
        lp.add_row(row, RowKind::Eq, (1.0 - g) * problem.phi_alpha[j]);
    }
    if let Some(cap) = &problem.smooth_cap {
        for (s, &c_s) in cap.iter().enumerate() {
            let row = active.iter().map(|&i| if problem.pairs[i].0 == s { 1.0 } else { 0.0 }).collect();
            lp.add_row(row, RowKind::Le, c_s);
        }
    }
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(infeasible()),
        LpStatus::Unbounded => return Err(Error::Numerical("inner occupancy LP reported unbounded".into())),
    }
    let lambda1 = DVector::from_fn(k, |j, _| (1.0 - g) * sol.duals[j]);
    let lambda3 = problem
        .smooth_cap
        .as_ref()
        .map(|cap| DVector::from_fn(cap.len(), |s, _| (-sol.duals[k + s]).max(0.0)));
    let lambda2 = complementary_lambda2(problem, &lambda1, lambda3.as_ref());
    let mut u = DVector::zeros(problem.n_pairs());
    for (c, &i) in active.iter().enumerate() {
        u[i] = sol.x[c];
    }
    Ok(InnerSolution { value: sol.objective, u, lambda1, lambda2, lambda3 })
}

/// The lower bound `rho~(pi)` as the minimum of the inner occupancy LP.
pub fn evaluate_lower_bound(problem: &DradpProblem, pol: &RandomizedPolicy) -> Result<f64> {
    Ok(evaluate_lower_bound_detailed(problem, pol)?.value)
}

pub fn evaluate_lower_bound_detailed(problem: &DradpProblem, pol: &RandomizedPolicy) -> Result<InnerSolution> {
    inner_lp(problem, &problem.pair_weights(pol)?)
}

/// The same bound computed from the multiplier side:
/// `max alpha' Phi lambda1 - pi' lambda2` subject to
/// `(1 - gamma) lambda2 >= A Phi lambda1 - b`, `lambda2 >= 0`.
pub fn evaluate_lower_bound_saddle(problem: &DradpProblem, pol: &RandomizedPolicy) -> Result<f64> {
    let w = problem.pair_weights(pol)?;
    let g = problem.gamma;
    let k = problem.n_features();
    let m = problem.n_pairs();
    let n3 = problem.smooth_cap.as_ref().map_or(0, |c| c.len());
    let mut cost: Vec<f64> = problem.phi_alpha.iter().copied().collect();
    cost.extend(w.iter().map(|x| -x));
    if let Some(cap) = &problem.smooth_cap {
        cost.extend(cap.iter().map(|x| -x));
    }
    let mut lp = LinearProgram::new(Sense::Maximize, cost);
    for j in 0..k {
        lp.set_free(j);
    }
    for i in 0..m {
        let mut entries: Vec<(usize, f64)> = (0..k).map(|j| (j, -problem.a_phi[(i, j)])).collect();
        entries.push((k + i, 1.0 - g));
        if n3 > 0 {
            entries.push((k + m + problem.pairs[i].0, 1.0 - g));
        }
        lp.add_sparse_row(&entries, RowKind::Ge, -problem.b[i]);
    }
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        LpStatus::Unbounded => Err(infeasible()),
        LpStatus::Infeasible => Err(Error::Numerical("multiplier LP reported infeasible".into())),
    }
}
