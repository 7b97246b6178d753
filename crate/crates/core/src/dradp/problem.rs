use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::FeatureBasis;
use crate::benchmarks::SampleSet;
use crate::error::{check_dim, Error, Result};
use crate::mdp::{build_lp_matrices, RandomizedPolicy, TabularMdp};

/// How the big-M constant is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauPolicy {
    /// `((1 + gamma) V_box + ||b||_inf) / (1 - gamma)`.
    Auto,
    Fixed(f64),
}

/// The linear data DRADP works on: one row of `A Phi` and `b` per
/// represented state-action pair.
///
/// Pairs are grouped by represented state; within a state they are sorted by
/// action. In tabular mode the pair order is action-major, matching
/// [`crate::mdp::LpMatrices`].
#[derive(Debug, Clone)]
pub struct DradpProblem {
    pub(crate) gamma: f64,
    pub(crate) n_actions: usize,
    pub(crate) pairs: Vec<(usize, usize)>,
    pub(crate) state_pairs: Vec<Vec<usize>>,
    pub(crate) a_phi: DMatrix<f64>,
    pub(crate) b: DVector<f64>,
    pub(crate) phi_alpha: DVector<f64>,
    pub(crate) phi: DMatrix<f64>,
    pub(crate) constant: usize,
    pub(crate) v_box: f64,
    pub(crate) tau: f64,
    /// `C sigma(s)` per represented state when the smoothness rows are on.
    pub(crate) smooth_cap: Option<DVector<f64>>,
    pub(crate) mdp: Option<TabularMdp>,
}

fn reward_scale(b: &DVector<f64>) -> f64 {
    let r = b.amax();
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

impl DradpProblem {
    #[allow(clippy::too_many_arguments)]
    fn finish(
        gamma: f64,
        n_actions: usize,
        pairs: Vec<(usize, usize)>,
        n_states: usize,
        a_phi: DMatrix<f64>,
        b: DVector<f64>,
        phi_alpha: DVector<f64>,
        phi: DMatrix<f64>,
        constant: usize,
        tau: TauPolicy,
        mdp: Option<TabularMdp>,
    ) -> Result<Self> {
        let mut state_pairs = vec![Vec::new(); n_states];
        for (i, &(s, _)) in pairs.iter().enumerate() {
            state_pairs[s].push(i);
        }
        for list in &mut state_pairs {
            list.sort_by_key(|&i| pairs[i].1);
        }
        let r = reward_scale(&b);
        let v_box = 2.0 * r / (1.0 - gamma);
        let tau = match tau {
            TauPolicy::Auto => ((1.0 + gamma) * v_box + r) / (1.0 - gamma),
            TauPolicy::Fixed(t) if t > 0.0 && t.is_finite() => t,
            TauPolicy::Fixed(t) => return Err(Error::InvalidArgument(format!("tau must be positive, got {t}"))),
        };
        Ok(Self {
            gamma,
            n_actions,
            pairs,
            state_pairs,
            a_phi,
            b,
            phi_alpha,
            phi,
            constant,
            v_box,
            tau,
            smooth_cap: None,
            mdp,
        })
    }

    /// Every state-action pair of `mdp`, with exact transition rows.
    pub fn tabular(mdp: &TabularMdp, basis: &FeatureBasis) -> Result<Self> {
        let n = mdp.n_states();
        check_dim("feature rows", n, basis.n_rows())?;
        let mats = build_lp_matrices(mdp);
        let phi = basis.matrix().clone();
        let a_phi = &mats.a * &phi;
        let phi_alpha = phi.transpose() * mdp.alpha();
        let pairs = (0..mdp.n_actions()).flat_map(|a| (0..n).map(move |s| (s, a))).collect();
        Self::finish(
            mdp.gamma(),
            mdp.n_actions(),
            pairs,
            n,
            a_phi,
            mats.b,
            phi_alpha,
            phi,
            basis.constant_column(),
            TauPolicy::Auto,
            Some(mdp.clone()),
        )
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Number of represented states.
    pub fn n_states(&self) -> usize {
        self.state_pairs.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn n_features(&self) -> usize {
        self.phi.ncols()
    }

    /// `(represented state, action)` per pair.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Pair indices of each represented state, sorted by action.
    pub fn state_pairs(&self) -> &[Vec<usize>] {
        &self.state_pairs
    }

    /// Features of the represented states.
    pub fn features(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn a_phi(&self) -> &DMatrix<f64> {
        &self.a_phi
    }

    pub fn rewards(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn phi_alpha(&self) -> &DVector<f64> {
        &self.phi_alpha
    }

    pub fn constant_column(&self) -> usize {
        self.constant
    }

    pub fn v_box(&self) -> f64 {
        self.v_box
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn smooth_cap(&self) -> Option<&DVector<f64>> {
        self.smooth_cap.as_ref()
    }

    /// The underlying MDP in tabular mode.
    pub fn mdp(&self) -> Option<&TabularMdp> {
        self.mdp.as_ref()
    }

    /// Policy weight of every pair. The policy is indexed by represented
    /// state.
    pub fn pair_weights(&self, pol: &RandomizedPolicy) -> Result<Vec<f64>> {
        check_dim("policy states", self.n_states(), pol.n_states())?;
        check_dim("policy actions", self.n_actions, pol.n_actions())?;
        Ok(self.pairs.iter().map(|&(s, a)| pol.prob(s, a)).collect())
    }

    /// `b - A Phi lambda1` per pair: the one-step backup of `Phi lambda1`
    /// minus the state's own value.
    pub fn advantages(&self, lambda1: &DVector<f64>) -> DVector<f64> {
        &self.b - &self.a_phi * lambda1
    }
}

fn feature_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Builds the sampled problem: states are identified by their feature
/// vectors, duplicate pairs are averaged, and `Phi' alpha` is the mean
/// initial feature vector.
pub fn build_sampled_problem(samples: &SampleSet, gamma: f64, tau: TauPolicy) -> Result<DradpProblem> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("discount {gamma} outside [0, 1)")));
    }
    let k = samples.validate()?;
    let mut states: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut state_rows: Vec<Vec<f64>> = Vec::new();
    let mut pair_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pairs = Vec::new();
    // per pair: sum of rewards, sum of continuation features, count
    let mut acc: Vec<(f64, Vec<f64>, usize)> = Vec::new();
    for t in &samples.transitions {
        let next_id = states.len();
        let s = *states.entry(feature_key(&t.features)).or_insert_with(|| {
            state_rows.push(t.features.clone());
            next_id
        });
        let next_pair = pairs.len();
        let i = *pair_index.entry((s, t.action)).or_insert_with(|| {
            pairs.push((s, t.action));
            acc.push((0.0, vec![0.0; k], 0));
            next_pair
        });
        let entry = &mut acc[i];
        entry.0 += t.reward;
        if !t.terminal {
            for (sum, x) in entry.1.iter_mut().zip(&t.next_features) {
                *sum += x;
            }
        }
        entry.2 += 1;
    }
    let n = state_rows.len();
    let phi = DMatrix::from_fn(n, k, |s, j| state_rows[s][j]);
    let basis = FeatureBasis::new(phi.clone())?;
    let m = pairs.len();
    let mut a_phi = DMatrix::zeros(m, k);
    let mut b = DVector::zeros(m);
    for (i, &(s, _)) in pairs.iter().enumerate() {
        let (r, ref next, count) = acc[i];
        let c = count as f64;
        b[i] = r / c;
        for j in 0..k {
            a_phi[(i, j)] = phi[(s, j)] - gamma * next[j] / c;
        }
    }
    let mut phi_alpha = DVector::zeros(k);
    for s0 in &samples.initial_states {
        for j in 0..k {
            phi_alpha[j] += s0.features[j];
        }
    }
    phi_alpha /= samples.initial_states.len() as f64;
    if phi_alpha[basis.constant_column()] != 1.0 {
        return Err(Error::InvalidArgument(
            "initial-state features do not share the constant feature of the transitions".into(),
        ));
    }
    DradpProblem::finish(
        gamma,
        samples.n_actions(),
        pairs,
        n,
        a_phi,
        b,
        phi_alpha,
        phi,
        basis.constant_column(),
        tau,
        None,
    )
}

/// Adds the rows `sum_a u(s, a) <= C sigma(s)`, `sigma = gamma mu + (1 - gamma) alpha`,
/// to the inner problem. Tabular mode only; `(C, mu)` must dominate every
/// transition row.
pub fn build_smooth_problem(problem: &DradpProblem, c: f64, mu: &DVector<f64>) -> Result<DradpProblem> {
    let mdp = problem
        .mdp
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("smoothness rows need a tabular problem".into()))?;
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("concentration coefficient {c} must be at least 1")));
    }
    check_dim("mu", mdp.n_states(), mu.len())?;
    if mu.iter().any(|&x| x < 0.0 || !x.is_finite()) || (mu.sum() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("mu must be a probability distribution".into()));
    }
    for a in 0..mdp.n_actions() {
        let p = mdp.transition(a);
        for s in 0..mdp.n_states() {
            for t in 0..mdp.n_states() {
                if p[(s, t)] > c * mu[t] + 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "P({s},{a},{t}) = {} exceeds C mu = {}",
                        p[(s, t)],
                        c * mu[t]
                    )));
                }
            }
        }
    }
    let sigma = crate::bounds::sigma_vector(mdp, mu)?;
    let mut out = problem.clone();
    out.smooth_cap = Some(sigma * c);
    Ok(out)
}
