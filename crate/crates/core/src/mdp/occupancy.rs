use nalgebra::{DMatrix, DVector};

use super::{policy_transition, OccupancyMeasure, RandomizedPolicy, TabularMdp, ValueFunction};
use crate::error::{Error, Result};

fn solve_dense(m: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    m.lu()
        .solve(rhs)
        .ok_or_else(|| Error::Numerical("singular system in policy evaluation".into()))
}

/// `v_pi = (I - gamma P_pi)^{-1} r_pi` by a direct LU solve.
pub fn policy_value(mdp: &TabularMdp, pol: &RandomizedPolicy) -> Result<ValueFunction> {
    let (p, r) = policy_transition(mdp, pol)?;
    let n = mdp.n_states();
    let system = DMatrix::identity(n, n) - p * mdp.gamma();
    solve_dense(system, &r)
}

/// `rho(pi) = alpha' v_pi`.
pub fn expected_return(mdp: &TabularMdp, pol: &RandomizedPolicy) -> Result<f64> {
    Ok(mdp.alpha().dot(&policy_value(mdp, pol)?))
}

/// The occupancy form of the return, `r' u_pi / (1 - gamma)`.
pub fn expected_return_occupancy(mdp: &TabularMdp, pol: &RandomizedPolicy) -> Result<f64> {
    let u = occupancy(mdp, pol)?;
    Ok(u.0.component_mul(mdp.reward()).sum() / (1.0 - mdp.gamma()))
}

/// `d_pi = (1 - gamma) (I - gamma P_pi')^{-1} alpha`.
pub fn state_occupancy(mdp: &TabularMdp, pol: &RandomizedPolicy) -> Result<DVector<f64>> {
    let (p, _) = policy_transition(mdp, pol)?;
    let n = mdp.n_states();
    let system = DMatrix::identity(n, n) - p.transpose() * mdp.gamma();
    Ok(solve_dense(system, mdp.alpha())? * (1.0 - mdp.gamma()))
}

/// `u_pi(s, a) = d_pi(s) pi(s, a)`.
pub fn occupancy(mdp: &TabularMdp, pol: &RandomizedPolicy) -> Result<OccupancyMeasure> {
    let d = state_occupancy(mdp, pol)?;
    let u = DMatrix::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| (d[s] * pol.prob(s, a)).max(0.0));
    Ok(OccupancyMeasure(u))
}

/// Normalises each state's row of `u`. States without mass take action 0.
pub fn policy_from_occupancy(mdp: &TabularMdp, u: &OccupancyMeasure) -> Result<RandomizedPolicy> {
    crate::error::check_dim("occupancy states", mdp.n_states(), u.0.nrows())?;
    crate::error::check_dim("occupancy actions", mdp.n_actions(), u.0.ncols())?;
    if u.0.iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidArgument("occupancy measure must be nonnegative".into()));
    }
    let (n, m) = u.0.shape();
    let mut probs = DMatrix::zeros(n, m);
    for s in 0..n {
        let mass = u.0.row(s).sum();
        if mass > 0.0 {
            for a in 0..m {
                probs[(s, a)] = u.0[(s, a)] / mass;
            }
        } else {
            probs[(s, 0)] = 1.0;
        }
    }
    Ok(RandomizedPolicy { probs })
}

/// The stacked constraint matrix and reward vector of the MDP linear program.
///
/// Rows are ordered action-major: row `a * n_states + s` belongs to `(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpMatrices {
    /// `(n_states * n_actions) x n_states`, block `a` equals `I - gamma P_a`.
    pub a: DMatrix<f64>,
    /// Block `a` equals `r_a`.
    pub b: DVector<f64>,
}

impl LpMatrices {
    pub fn row_index(&self, n_states: usize, s: usize, a: usize) -> usize {
        a * n_states + s
    }
}

pub fn build_lp_matrices(mdp: &TabularMdp) -> LpMatrices {
    let n = mdp.n_states();
    let m = mdp.n_actions();
    let g = mdp.gamma();
    let mut a_mat = DMatrix::zeros(n * m, n);
    let mut b = DVector::zeros(n * m);
    for act in 0..m {
        let p = mdp.transition(act);
        for s in 0..n {
            let row = act * n + s;
            for t in 0..n {
                a_mat[(row, t)] = -g * p[(s, t)];
            }
            a_mat[(row, s)] += 1.0;
            b[row] = mdp.reward()[(s, act)];
        }
    }
    LpMatrices { a: a_mat, b }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{swap_identity, zero_reward};
    use super::super::DeterministicPolicy;
    use super::*;
    use approx::assert_abs_diff_eq;

    fn optimal() -> RandomizedPolicy {
        DeterministicPolicy(vec![1, 0]).to_randomized(2)
    }

    fn stay() -> RandomizedPolicy {
        DeterministicPolicy(vec![0, 0]).to_randomized(2)
    }

    #[test]
    fn policy_value_examples() {
        let mdp = swap_identity();
        assert_abs_diff_eq!(policy_value(&mdp, &stay()).unwrap(), DVector::from_vec(vec![0.0, 2.0]), epsilon = 1e-12);
        assert_abs_diff_eq!(policy_value(&mdp, &optimal()).unwrap(), DVector::from_vec(vec![1.0, 2.0]), epsilon = 1e-12);
        let z = zero_reward(3);
        assert_eq!(policy_value(&z, &RandomizedPolicy::uniform(3, 2)).unwrap(), DVector::zeros(3));
    }

    #[test]
    fn policy_value_residual() {
        let mdp = swap_identity();
        let pol = RandomizedPolicy::uniform(2, 2);
        let v = policy_value(&mdp, &pol).unwrap();
        let (p, r) = policy_transition(&mdp, &pol).unwrap();
        let res = (DMatrix::identity(2, 2) - p * 0.5) * &v - &r;
        assert!(res.amax() <= 1e-9 * (1.0 + r.amax()));
    }

    #[test]
    fn expected_return_examples_and_cross_check() {
        let mdp = swap_identity();
        for (pol, want) in [(optimal(), 1.0), (stay(), 0.0)] {
            let rho = expected_return(&mdp, &pol).unwrap();
            assert_abs_diff_eq!(rho, want, epsilon = 1e-12);
            assert_abs_diff_eq!(expected_return_occupancy(&mdp, &pol).unwrap(), rho, epsilon = 1e-8);
        }
        let z = zero_reward(4);
        assert_eq!(expected_return(&z, &RandomizedPolicy::uniform(4, 2)).unwrap(), 0.0);
    }

    #[test]
    fn occupancy_examples() {
        let mdp = swap_identity();
        let u = occupancy(&mdp, &optimal()).unwrap();
        assert_abs_diff_eq!(u.state_marginal(), DVector::from_vec(vec![0.5, 0.5]), epsilon = 1e-12);
        assert_abs_diff_eq!(u.get(0, 1), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(u.get(1, 0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(u.total(), 1.0, epsilon = 1e-12);

        let d = state_occupancy(&mdp, &stay()).unwrap();
        assert_abs_diff_eq!(d, DVector::from_vec(vec![1.0, 0.0]), epsilon = 1e-12);
    }

    #[test]
    fn lp_matrices_swap_identity() {
        let mdp = swap_identity();
        let lp = build_lp_matrices(&mdp);
        assert_eq!(lp.a.shape(), (4, 2));
        // stay block: I - 0.5 I
        assert_eq!(lp.a.rows(0, 2), DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        // go block: I - 0.5 swap
        assert_eq!(lp.a.rows(2, 2), DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0]));
        assert_eq!(lp.b, DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0]));
        let ones = &lp.a * DVector::from_element(2, 1.0);
        assert_abs_diff_eq!(ones, DVector::from_element(4, 0.5), epsilon = 1e-12);
    }

    #[test]
    fn lp_matrices_reproduce_return() {
        let mdp = swap_identity();
        let lp = build_lp_matrices(&mdp);
        let pol = RandomizedPolicy::uniform(2, 2);
        let u = occupancy(&mdp, &pol).unwrap().to_action_major();
        let via_b = u.dot(&lp.b) / 0.5;
        assert_abs_diff_eq!(via_b, expected_return(&mdp, &pol).unwrap(), epsilon = 1e-10);
        // A'u = (1 - gamma) alpha
        let lhs = lp.a.transpose() * &u;
        assert_abs_diff_eq!(lhs, mdp.alpha() * 0.5, epsilon = 1e-10);
    }

    #[test]
    fn policy_from_occupancy_examples() {
        let mdp = swap_identity();
        let u = occupancy(&mdp, &optimal()).unwrap();
        let pol = policy_from_occupancy(&mdp, &u).unwrap();
        assert_eq!(pol, optimal());

        // under "stay" state 1 is never visited -> default action 0
        let u = occupancy(&mdp, &DeterministicPolicy(vec![0, 1]).to_randomized(2)).unwrap();
        let pol = policy_from_occupancy(&mdp, &u).unwrap();
        assert_eq!(pol.prob(1, 0), 1.0);
        assert_eq!(pol.prob(0, 0), 1.0);

        let neg = OccupancyMeasure(DMatrix::from_row_slice(2, 2, &[-0.1, 0.0, 0.0, 1.1]));
        assert!(policy_from_occupancy(&mdp, &neg).is_err());
    }
}
