//! Finite Markov decision processes and the exact machinery built on them.
//!
//! Everything here is dense and meant for a few hundred states at most. The
//! routines double as oracles for the approximate methods elsewhere in the
//! crate.

mod bellman;
mod exact;
mod occupancy;

pub use bellman::{bellman_apply, bellman_policy_apply, greedy_policy, policy_transition, q_values};
pub use exact::{
    optimal_return_lp, policy_loss, value_iteration, OptimalSolution, DEFAULT_VI_MAX_ITERS,
    DEFAULT_VI_TOL,
};
pub use occupancy::{
    build_lp_matrices, expected_return, expected_return_occupancy, occupancy, policy_from_occupancy,
    policy_value, state_occupancy, LpMatrices,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Tolerance used when validating that rows are probability distributions.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

/// A value per state.
pub type ValueFunction = DVector<f64>;

/// Finite discounted MDP with rewards attached to state-action pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// `transition[a][(s, s')]`
    transition: Vec<DMatrix<f64>>,
    /// `reward[(s, a)]`
    reward: DMatrix<f64>,
    gamma: f64,
    alpha: DVector<f64>,
}

fn check_distribution(what: &str, row: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidArgument(format!("{what}: entry {p} is not a probability")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::InvalidArgument(format!("{what}: sums to {sum}, expected 1")));
    }
    Ok(())
}

impl TabularMdp {
    pub fn new(
        transition: Vec<DMatrix<f64>>,
        reward: DMatrix<f64>,
        gamma: f64,
        alpha: DVector<f64>,
    ) -> Result<Self> {
        let n_actions = transition.len();
        if n_actions == 0 {
            return Err(Error::InvalidArgument("an MDP needs at least one action".into()));
        }
        let n_states = alpha.len();
        if n_states == 0 {
            return Err(Error::InvalidArgument("an MDP needs at least one state".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!("discount {gamma} outside [0, 1)")));
        }
        for (a, p) in transition.iter().enumerate() {
            check_dim("transition rows", n_states, p.nrows())?;
            check_dim("transition columns", n_states, p.ncols())?;
            for s in 0..n_states {
                check_distribution(&format!("transition[{a}][{s}]"), p.row(s).iter().copied())?;
            }
        }
        check_dim("reward rows", n_states, reward.nrows())?;
        check_dim("reward columns", n_actions, reward.ncols())?;
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument("rewards must be finite".into()));
        }
        check_distribution("alpha", alpha.iter().copied())?;
        Ok(Self { n_states, n_actions, transition, reward, gamma, alpha })
    }

    /// Builds an MDP whose rewards depend on the state only.
    pub fn with_state_rewards(
        transition: Vec<DMatrix<f64>>,
        state_reward: &[f64],
        gamma: f64,
        alpha: DVector<f64>,
    ) -> Result<Self> {
        let n_actions = transition.len();
        let reward = DMatrix::from_fn(state_reward.len(), n_actions, |s, _| state_reward[s]);
        Self::new(transition, reward, gamma, alpha)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Transition matrix of action `a`, rows indexed by the current state.
    pub fn transition(&self, a: usize) -> &DMatrix<f64> {
        &self.transition[a]
    }

    /// Reward matrix, `n_states x n_actions`.
    pub fn reward(&self) -> &DMatrix<f64> {
        &self.reward
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[a][(s, next)]
    }

    /// Returns a copy with a different discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.transition.clone(), self.reward.clone(), gamma, self.alpha.clone())
    }

    /// Returns a copy with a different initial distribution.
    pub fn with_alpha(&self, alpha: DVector<f64>) -> Result<Self> {
        Self::new(self.transition.clone(), self.reward.clone(), self.gamma, alpha)
    }

    /// Largest absolute reward.
    pub fn reward_sup(&self) -> f64 {
        self.reward.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    pub(crate) fn check_values(&self, v: &ValueFunction) -> Result<()> {
        check_dim("value function length", self.n_states, v.len())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MdpJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MdpJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

/// On-disk layout: transition indexed `[action][state][next_state]`, reward
/// indexed `[action][state]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpJson {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub alpha: Vec<f64>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
}

impl From<&TabularMdp> for MdpJson {
    fn from(mdp: &TabularMdp) -> Self {
        let n = mdp.n_states;
        Self {
            n_states: n,
            n_actions: mdp.n_actions,
            gamma: mdp.gamma,
            alpha: mdp.alpha.iter().copied().collect(),
            transition: mdp
                .transition
                .iter()
                .map(|p| (0..n).map(|s| p.row(s).iter().copied().collect()).collect())
                .collect(),
            reward: (0..mdp.n_actions).map(|a| mdp.reward.column(a).iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<MdpJson> for TabularMdp {
    type Error = Error;

    fn try_from(raw: MdpJson) -> Result<Self> {
        let n = raw.n_states;
        check_dim("alpha length", n, raw.alpha.len())?;
        check_dim("transition actions", raw.n_actions, raw.transition.len())?;
        check_dim("reward actions", raw.n_actions, raw.reward.len())?;
        let mut transition = Vec::with_capacity(raw.n_actions);
        for block in &raw.transition {
            check_dim("transition rows", n, block.len())?;
            for row in block {
                check_dim("transition columns", n, row.len())?;
            }
            transition.push(DMatrix::from_fn(n, n, |s, t| block[s][t]));
        }
        for r in &raw.reward {
            check_dim("reward states", n, r.len())?;
        }
        let reward = DMatrix::from_fn(n, raw.n_actions, |s, a| raw.reward[a][s]);
        TabularMdp::new(transition, reward, raw.gamma, DVector::from_vec(raw.alpha))
    }
}

/// One action per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicPolicy(pub Vec<usize>);

impl DeterministicPolicy {
    pub fn new(actions: Vec<usize>, n_actions: usize) -> Result<Self> {
        if let Some(&a) = actions.iter().find(|&&a| a >= n_actions) {
            return Err(Error::InvalidArgument(format!("action {a} out of range (n_actions = {n_actions})")));
        }
        Ok(Self(actions))
    }

    pub fn constant(n_states: usize, action: usize) -> Self {
        Self(vec![action; n_states])
    }

    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn to_randomized(&self, n_actions: usize) -> RandomizedPolicy {
        let probs = DMatrix::from_fn(self.0.len(), n_actions, |s, a| if self.0[s] == a { 1.0 } else { 0.0 });
        RandomizedPolicy { probs }
    }
}

/// Action distribution per state, stored as an `n_states x n_actions` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedPolicy {
    probs: DMatrix<f64>,
}

impl RandomizedPolicy {
    pub fn new(probs: DMatrix<f64>) -> Result<Self> {
        for s in 0..probs.nrows() {
            check_distribution(&format!("policy row {s}"), probs.row(s).iter().copied())?;
        }
        Ok(Self { probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self { probs: DMatrix::from_element(n_states, n_actions, 1.0 / n_actions as f64) }
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[(s, a)]
    }

    pub fn n_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.probs.ncols()
    }

    /// The most likely action per state, ties to the lowest index.
    pub fn mode(&self) -> DeterministicPolicy {
        DeterministicPolicy(
            (0..self.n_states())
                .map(|s| {
                    let row = self.probs.row(s);
                    let mut best = 0;
                    for a in 1..row.len() {
                        if row[a] > row[best] {
                            best = a;
                        }
                    }
                    best
                })
                .collect(),
        )
    }

    pub(crate) fn check_against(&self, mdp: &TabularMdp) -> Result<()> {
        check_dim("policy states", mdp.n_states(), self.n_states())?;
        check_dim("policy actions", mdp.n_actions(), self.n_actions())
    }
}

impl From<&DeterministicPolicy> for RandomizedPolicy {
    fn from(p: &DeterministicPolicy) -> Self {
        let n_actions = p.0.iter().copied().max().map_or(1, |a| a + 1);
        p.to_randomized(n_actions)
    }
}

/// Discounted state-action visitation frequencies, `n_states x n_actions`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure(pub DMatrix<f64>);

impl OccupancyMeasure {
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.0[(s, a)]
    }

    pub fn total(&self) -> f64 {
        self.0.sum()
    }

    /// State marginal.
    pub fn state_marginal(&self) -> DVector<f64> {
        DVector::from_fn(self.0.nrows(), |s, _| self.0.row(s).sum())
    }

    /// Flattened in the action-major order used by [`LpMatrices`].
    pub fn to_action_major(&self) -> DVector<f64> {
        let (n, m) = self.0.shape();
        DVector::from_fn(n * m, |i, _| self.0[(i % n, i / n)])
    }

    pub fn from_action_major(u: &DVector<f64>, n_states: usize, n_actions: usize) -> Self {
        Self(DMatrix::from_fn(n_states, n_actions, |s, a| u[a * n_states + s]))
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn rejects_bad_rows_and_discount() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.0, 1.0]);
        let r = TabularMdp::new(vec![bad], DMatrix::zeros(2, 1), 0.5, DVector::from_vec(vec![1.0, 0.0]));
        assert!(matches!(r, Err(Error::InvalidArgument(_))));

        let p = DMatrix::identity(2, 2);
        let r = TabularMdp::new(vec![p.clone()], DMatrix::zeros(2, 1), 1.0, DVector::from_vec(vec![1.0, 0.0]));
        assert!(r.is_err());
        let r = TabularMdp::new(vec![p], DMatrix::zeros(2, 1), 0.5, DVector::from_vec(vec![0.7, 0.0]));
        assert!(r.is_err());
    }

    #[test]
    fn json_layout_round_trip() {
        let mdp = swap_identity();
        let text = mdp.to_json().unwrap();
        let raw: serde_json::Value = serde_json::from_str(&text).unwrap();
        // reward is [action][state]
        assert_eq!(raw["reward"][1][1], 1.0);
        assert_eq!(raw["transition"][1][0][1], 1.0);
        assert_eq!(TabularMdp::from_json(&text).unwrap(), mdp);
    }

    #[test]
    fn json_shape_errors_are_reported() {
        let text = r#"{"n_states":2,"n_actions":1,"gamma":0.5,"alpha":[1.0],"transition":[[[1,0],[0,1]]],"reward":[[0,0]]}"#;
        assert!(matches!(TabularMdp::from_json(text), Err(Error::Dimension { .. })));
    }

    #[test]
    fn deterministic_policy_validates_actions() {
        assert!(DeterministicPolicy::new(vec![0, 2], 2).is_err());
        let p = DeterministicPolicy::new(vec![1, 0], 2).unwrap();
        let r = p.to_randomized(2);
        assert_eq!(r.prob(0, 1), 1.0);
        assert_eq!(r.mode(), p);
    }
}
