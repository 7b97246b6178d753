use nalgebra::DVector;

use crate::dradp::DradpProblem;
use crate::error::{check_dim, Error, Result};
use crate::mdp::{DeterministicPolicy, ValueFunction};
use crate::optim::{LinearProgram, LpStatus, RowKind, Sense};

#[derive(Debug, Clone)]
pub struct AlpSolution {
    /// Feature weights `x`.
    pub weights: DVector<f64>,
    /// `Phi x` on the represented states.
    pub values: ValueFunction,
    /// Greedy with respect to `Phi x` over the represented pairs.
    pub policy: DeterministicPolicy,
    pub objective: f64,
}

/// `min c' Phi x` subject to `A Phi x >= b` on the problem's pairs.
///
/// `state_weights` defaults to the initial distribution (`Phi' alpha` is
/// taken straight from the problem, so sampled problems work too).
pub fn alp_solve(problem: &DradpProblem, state_weights: Option<&DVector<f64>>) -> Result<AlpSolution> {
    let k = problem.n_features();
    let phi = problem.features();
    let c = match state_weights {
        Some(w) => {
            check_dim("state weights", problem.n_states(), w.len())?;
            phi.transpose() * w
        }
        None => problem.phi_alpha().clone(),
    };
    let mut lp = LinearProgram::new(Sense::Minimize, c.iter().copied().collect());
    for j in 0..k {
        lp.set_free(j);
    }
    let a_phi = problem.a_phi();
    for i in 0..problem.n_pairs() {
        lp.add_row(a_phi.row(i).iter().copied().collect(), RowKind::Ge, problem.rewards()[i]);
    }
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => {
            return Err(Error::InvalidArgument("state weights make the ALP unbounded".into()));
        }
        LpStatus::Infeasible => return Err(Error::Numerical("ALP reported infeasible".into())),
    }
    let weights = DVector::from_vec(sol.x);
    let values = phi * &weights;
    let adv = problem.advantages(&weights);
    let policy = problem
        .state_pairs()
        .iter()
        .map(|list| {
            let best = list.iter().map(|&i| adv[i]).fold(f64::NEG_INFINITY, f64::max);
            let i = *list.iter().find(|&&i| adv[i] >= best - 1e-12 * (1.0 + best.abs())).expect("non-empty");
            problem.pairs()[i].1
        })
        .collect();
    Ok(AlpSolution { weights, values, policy: DeterministicPolicy(policy), objective: sol.objective })
}
