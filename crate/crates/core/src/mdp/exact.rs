use nalgebra::DVector;

use super::{
    bellman_apply, build_lp_matrices, expected_return, greedy_policy, DeterministicPolicy, RandomizedPolicy,
    TabularMdp, ValueFunction,
};
use crate::error::{Error, Result};
use crate::optim::{LinearProgram, LpStatus, RowKind, Sense};

pub const DEFAULT_VI_TOL: f64 = 1e-10;
pub const DEFAULT_VI_MAX_ITERS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct OptimalSolution {
    pub values: ValueFunction,
    pub policy: DeterministicPolicy,
    pub rho: f64,
    pub iterations: usize,
}

/// Value iteration until `||Bv - v||_inf <= tol`.
///
/// The returned policy is greedy with respect to the returned values and
/// `rho = alpha' v`.
pub fn value_iteration(mdp: &TabularMdp, tol: f64, max_iters: usize) -> Result<OptimalSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut v: ValueFunction = DVector::zeros(mdp.n_states());
    let mut residual = f64::INFINITY;
    for it in 0..max_iters {
        let next = bellman_apply(mdp, &v)?;
        residual = (&next - &v).amax();
        if residual <= tol {
            // the residual check is on v, so v (not next) is the certified point
            let policy = greedy_policy(mdp, &v)?;
            let rho = mdp.alpha().dot(&v);
            return Ok(OptimalSolution { values: v, policy, rho, iterations: it + 1 });
        }
        v = next;
    }
    Err(Error::Convergence { iterations: max_iters, residual })
}

/// `rho* - rho(pi)`, with `rho*` from value iteration at the default tolerance.
pub fn policy_loss(mdp: &TabularMdp, pol: &RandomizedPolicy) -> Result<f64> {
    let opt = value_iteration(mdp, DEFAULT_VI_TOL, DEFAULT_VI_MAX_ITERS)?;
    let exact_star = expected_return(mdp, &opt.policy.to_randomized(mdp.n_actions()))?;
    Ok(exact_star - expected_return(mdp, pol)?)
}

/// Optimal return from the occupancy-measure linear program
/// `max r'u / (1 - gamma)  s.t.  A'u = (1 - gamma) alpha, u >= 0`.
pub fn optimal_return_lp(mdp: &TabularMdp) -> Result<f64> {
    let mats = build_lp_matrices(mdp);
    let g = mdp.gamma();
    let cost: Vec<f64> = mats.b.iter().map(|r| r / (1.0 - g)).collect();
    let mut lp = LinearProgram::new(Sense::Maximize, cost);
    for s in 0..mdp.n_states() {
        let row: Vec<f64> = mats.a.column(s).iter().copied().collect();
        lp.add_row(row, RowKind::Eq, (1.0 - g) * mdp.alpha()[s]);
    }
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        other => Err(Error::Numerical(format!("MDP linear program returned {other:?}"))),
    }
}
