use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dradp::FeatureBasis;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

/// One observed step. States are stored as feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub episode: usize,
    pub step: usize,
    pub features: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_features: Vec<f64>,
    /// The successor is absorbing with zero value.
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub episode: usize,
    pub features: Vec<f64>,
}

/// An offline batch of transitions plus draws from the initial distribution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub transitions: Vec<Transition>,
    pub initial_states: Vec<InitialState>,
    pub seed: u64,
}

impl SampleSet {
    /// Checks the batch is usable and returns the feature dimension.
    pub fn validate(&self) -> Result<usize> {
        let first = self
            .transitions
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty sample batch".into()))?;
        if self.initial_states.is_empty() {
            return Err(Error::InvalidArgument("sample batch has no initial states".into()));
        }
        let k = first.features.len();
        if k == 0 {
            return Err(Error::InvalidArgument("samples carry no features".into()));
        }
        for t in &self.transitions {
            crate::error::check_dim("sample features", k, t.features.len())?;
            crate::error::check_dim("sample next features", k, t.next_features.len())?;
            if !t.reward.is_finite() || t.features.iter().chain(&t.next_features).any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite sample at episode {} step {}",
                    t.episode, t.step
                )));
            }
        }
        for s in &self.initial_states {
            crate::error::check_dim("initial state features", k, s.features.len())?;
        }
        Ok(k)
    }

    pub fn n_actions(&self) -> usize {
        self.transitions.iter().map(|t| t.action + 1).max().unwrap_or(0)
    }

    /// Writes `ep,step,s_feat...,a,r,sp_feat...,terminal`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let k = self.transitions.first().map_or(0, |t| t.features.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["ep".to_string(), "step".to_string()];
        header.extend((0..k).map(|j| format!("s_feat{j}")));
        header.push("a".into());
        header.push("r".into());
        header.extend((0..k).map(|j| format!("sp_feat{j}")));
        header.push("terminal".into());
        w.write_record(&header)?;
        for t in &self.transitions {
            let mut rec = vec![t.episode.to_string(), t.step.to_string()];
            rec.extend(t.features.iter().map(|x| x.to_string()));
            rec.push(t.action.to_string());
            rec.push(t.reward.to_string());
            rec.extend(t.next_features.iter().map(|x| x.to_string()));
            rec.push(u8::from(t.terminal).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A simulator that can be sampled episodically.
pub trait Domain {
    type State: Clone;

    fn n_actions(&self) -> usize;
    fn initial_state<R: Rng>(&self, rng: &mut R) -> Self::State;
    /// Returns the successor, the reward and whether the successor is terminal.
    fn step<R: Rng>(&self, state: &Self::State, action: usize, rng: &mut R) -> (Self::State, f64, bool);
    fn features(&self, state: &Self::State) -> Vec<f64>;
}

/// Any tabular MDP as a simulator whose observations are basis rows.
#[derive(Debug, Clone, Copy)]
pub struct TabularDomain<'a> {
    pub mdp: &'a TabularMdp,
    pub basis: &'a FeatureBasis,
}

impl<'a> TabularDomain<'a> {
    pub fn new(mdp: &'a TabularMdp, basis: &'a FeatureBasis) -> Self {
        Self { mdp, basis }
    }
}

impl Domain for TabularDomain<'_> {
    type State = usize;

    fn n_actions(&self) -> usize {
        self.mdp.n_actions()
    }

    fn initial_state<R: Rng>(&self, rng: &mut R) -> usize {
        sample_index(self.mdp.alpha().iter().copied(), rng)
    }

    fn step<R: Rng>(&self, state: &usize, action: usize, rng: &mut R) -> (usize, f64, bool) {
        let next = sample_index(self.mdp.transition(action).row(*state).iter().copied(), rng);
        (next, self.mdp.reward()[(*state, action)], false)
    }

    fn features(&self, state: &usize) -> Vec<f64> {
        self.basis.matrix().row(*state).iter().copied().collect()
    }
}

/// Inverse-CDF draw; round-off past the last mass falls on the last
/// positive entry.
fn sample_index<R: Rng>(probs: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        acc += p;
        if p > 0.0 {
            last = i;
        }
        if u < acc {
            return i;
        }
    }
    last
}

/// Runs `n_episodes` episodes of a uniformly random behaviour policy, each
/// cut at `max_len` steps or at termination.
pub fn collect_samples<D: Domain>(domain: &D, n_episodes: usize, max_len: usize, seed: u64) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = SampleSet { seed, ..SampleSet::default() };
    for ep in 0..n_episodes {
        let mut state = domain.initial_state(&mut rng);
        let mut phi = domain.features(&state);
        set.initial_states.push(InitialState { episode: ep, features: phi.clone() });
        for step in 0..max_len {
            let action = rng.gen_range(0..domain.n_actions());
            let (next, reward, terminal) = domain.step(&state, action, &mut rng);
            let next_phi = domain.features(&next);
            set.transitions.push(Transition {
                episode: ep,
                step,
                features: phi,
                action,
                reward,
                next_features: next_phi.clone(),
                terminal,
            });
            if terminal {
                break;
            }
            state = next;
            phi = next_phi;
        }
    }
    set
}

/// Like [`collect_samples`], but every action is tried once from each visited
/// state; the episode then follows the behaviour action's outcome.
pub fn collect_samples_all_actions<D: Domain>(domain: &D, n_episodes: usize, max_len: usize, seed: u64) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = SampleSet { seed, ..SampleSet::default() };
    for ep in 0..n_episodes {
        let mut state = domain.initial_state(&mut rng);
        let phi = domain.features(&state);
        set.initial_states.push(InitialState { episode: ep, features: phi });
        for step in 0..max_len {
            let phi = domain.features(&state);
            let behaviour = rng.gen_range(0..domain.n_actions());
            let mut follow = None;
            for action in 0..domain.n_actions() {
                let (next, reward, terminal) = domain.step(&state, action, &mut rng);
                set.transitions.push(Transition {
                    episode: ep,
                    step,
                    features: phi.clone(),
                    action,
                    reward,
                    next_features: domain.features(&next),
                    terminal,
                });
                if action == behaviour {
                    follow = Some((next, terminal));
                }
            }
            let (next, terminal) = follow.expect("behaviour action is in range");
            if terminal {
                break;
            }
            state = next;
        }
    }
    set
}
