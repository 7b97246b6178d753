use nalgebra::{DMatrix, DVector};

use super::{DeterministicPolicy, RandomizedPolicy, TabularMdp, ValueFunction};
use crate::error::Result;

/// Transition matrix and reward vector of the chain induced by `pol`.
pub fn policy_transition(mdp: &TabularMdp, pol: &RandomizedPolicy) -> Result<(DMatrix<f64>, DVector<f64>)> {
    pol.check_against(mdp)?;
    let n = mdp.n_states();
    let mut p = DMatrix::zeros(n, n);
    let mut r = DVector::zeros(n);
    for a in 0..mdp.n_actions() {
        let pa = mdp.transition(a);
        for s in 0..n {
            let w = pol.prob(s, a);
            if w == 0.0 {
                continue;
            }
            r[s] += w * mdp.reward()[(s, a)];
            for t in 0..n {
                p[(s, t)] += w * pa[(s, t)];
            }
        }
    }
    Ok((p, r))
}

/// One-step backups `r(s, a) + gamma * sum_s' P(s, a, s') v(s')`, as an
/// `n_states x n_actions` matrix.
pub fn q_values(mdp: &TabularMdp, v: &ValueFunction) -> Result<DMatrix<f64>> {
    mdp.check_values(v)?;
    let mut q = mdp.reward().clone();
    for a in 0..mdp.n_actions() {
        let next = mdp.transition(a) * v;
        for s in 0..mdp.n_states() {
            q[(s, a)] += mdp.gamma() * next[s];
        }
    }
    Ok(q)
}

/// The Bellman optimality operator.
pub fn bellman_apply(mdp: &TabularMdp, v: &ValueFunction) -> Result<ValueFunction> {
    let q = q_values(mdp, v)?;
    Ok(DVector::from_fn(mdp.n_states(), |s, _| q.row(s).max()))
}

/// `B_pi v = gamma P_pi v + r_pi`.
pub fn bellman_policy_apply(mdp: &TabularMdp, pol: &RandomizedPolicy, v: &ValueFunction) -> Result<ValueFunction> {
    mdp.check_values(v)?;
    let (p, r) = policy_transition(mdp, pol)?;
    Ok(p * v * mdp.gamma() + r)
}

/// Greedy policy with respect to `v`; ties go to the lowest action index.
pub fn greedy_policy(mdp: &TabularMdp, v: &ValueFunction) -> Result<DeterministicPolicy> {
    let q = q_values(mdp, v)?;
    Ok(DeterministicPolicy(
        (0..mdp.n_states())
            .map(|s| {
                let mut best = 0;
                for a in 1..mdp.n_actions() {
                    if q[(s, a)] > q[(s, best)] {
                        best = a;
                    }
                }
                best
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::swap_identity;
    use super::*;
    use approx::assert_abs_diff_eq;

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    #[test]
    fn policy_transition_examples() {
        let mdp = swap_identity();
        let stay = DeterministicPolicy::constant(2, 0).to_randomized(2);
        let (p, r) = policy_transition(&mdp, &stay).unwrap();
        assert_eq!(p, DMatrix::identity(2, 2));
        assert_eq!(r, vec2(0.0, 1.0));

        let (p, r) = policy_transition(&mdp, &RandomizedPolicy::uniform(2, 2)).unwrap();
        assert_eq!(p.row(0).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.5]);
        assert_eq!(r, vec2(0.0, 1.0));

        let det = DeterministicPolicy(vec![1, 0]);
        let (p, _) = policy_transition(&mdp, &det.to_randomized(2)).unwrap();
        for s in 0..2 {
            assert_eq!(p.row(s), mdp.transition(det.action(s)).row(s));
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mdp = swap_identity();
        assert!(policy_transition(&mdp, &RandomizedPolicy::uniform(3, 2)).is_err());
        assert!(bellman_apply(&mdp, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn bellman_examples() {
        let mdp = swap_identity();
        let bv = bellman_apply(&mdp, &vec2(0.0, 0.0)).unwrap();
        assert_eq!(bv, vec2(0.0, 1.0));
        let shifted = bellman_apply(&mdp, &vec2(2.0, 2.0)).unwrap();
        assert_eq!(shifted, vec2(1.0, 2.0));
    }

    #[test]
    fn policy_backup_example() {
        let mdp = swap_identity();
        let pol = DeterministicPolicy(vec![1, 0]).to_randomized(2);
        let out = bellman_policy_apply(&mdp, &pol, &vec2(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(out, vec2(0.5, 1.5), epsilon = 1e-15);
    }

    #[test]
    fn greedy_examples() {
        let mdp = swap_identity();
        assert_eq!(greedy_policy(&mdp, &vec2(1.0, 2.0)).unwrap(), DeterministicPolicy(vec![1, 0]));
        // constant values: state 0 ties between stay and go -> lowest index
        assert_eq!(greedy_policy(&mdp, &vec2(3.0, 3.0)).unwrap(), DeterministicPolicy(vec![0, 0]));
    }

    #[test]
    fn greedy_backup_matches_bellman() {
        let mdp = swap_identity();
        let v = vec2(0.3, -1.2);
        let pol = greedy_policy(&mdp, &v).unwrap().to_randomized(2);
        assert_eq!(bellman_policy_apply(&mdp, &pol, &v).unwrap(), bellman_apply(&mdp, &v).unwrap());
    }
}
