use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Domain, TabularDomain};
use crate::dradp::FeatureBasis;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

pub const CHAIN_STATES: usize = 30;
pub const CHAIN_FEATURES: usize = 10;
pub const CHAIN_SLIP: f64 = 0.1;
pub const DEFAULT_CHAIN_GAMMA: f64 = 0.95;
pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// Nonzero state rewards, 0-indexed.
const CHAIN_REWARDS: [(usize, f64); 4] = [(1, -50.0), (2, 4.0), (3, -50.0), (19, 10.0)];

/// A random chain: fixed dynamics and rewards, initial distribution drawn
/// from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainInstance {
    pub mdp: TabularMdp,
    pub basis: FeatureBasis,
    pub seed: u64,
}

/// Moves succeed with probability 0.9 and go the other way otherwise; moves
/// past either end stay put.
pub fn chain_generate(seed: u64, gamma: f64) -> Result<ChainInstance> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("discount {gamma} outside [0, 1)")));
    }
    let n = CHAIN_STATES;
    let left = |s: usize| s.saturating_sub(1);
    let right = |s: usize| (s + 1).min(n - 1);
    let mut p_left = DMatrix::zeros(n, n);
    let mut p_right = DMatrix::zeros(n, n);
    for s in 0..n {
        p_left[(s, left(s))] += 1.0 - CHAIN_SLIP;
        p_left[(s, right(s))] += CHAIN_SLIP;
        p_right[(s, right(s))] += 1.0 - CHAIN_SLIP;
        p_right[(s, left(s))] += CHAIN_SLIP;
    }
    let mut rewards = vec![0.0; n];
    for (s, r) in CHAIN_REWARDS {
        rewards[s] = r;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let alpha = DVector::from_iterator(n, raw.iter().map(|x| x / total));
    let mdp = TabularMdp::with_state_rewards(vec![p_left, p_right], &rewards, gamma, alpha)?;
    Ok(ChainInstance { mdp, basis: chain_features(), seed })
}

/// Chebyshev polynomials of degree 0..9 over the chain.
pub fn chain_features() -> FeatureBasis {
    FeatureBasis::chebyshev(CHAIN_STATES, CHAIN_FEATURES).expect("fixed sizes are valid")
}

impl Domain for ChainInstance {
    type State = usize;

    fn n_actions(&self) -> usize {
        self.mdp.n_actions()
    }

    fn initial_state<R: Rng>(&self, rng: &mut R) -> usize {
        TabularDomain::new(&self.mdp, &self.basis).initial_state(rng)
    }

    fn step<R: Rng>(&self, state: &usize, action: usize, rng: &mut R) -> (usize, f64, bool) {
        TabularDomain::new(&self.mdp, &self.basis).step(state, action, rng)
    }

    fn features(&self, state: &usize) -> Vec<f64> {
        TabularDomain::new(&self.mdp, &self.basis).features(state)
    }
}
