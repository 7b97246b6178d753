use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Domain;

pub const POLE_MASS: f64 = 2.0;
pub const CART_MASS: f64 = 8.0;
pub const POLE_LENGTH: f64 = 0.5;
pub const GRAVITY: f64 = 9.8;
pub const TIME_STEP: f64 = 0.1;
pub const FORCES: [f64; 3] = [-50.0, 0.0, 50.0];
pub const FORCE_NOISE: f64 = 10.0;
pub const INITIAL_PERTURBATION: f64 = 0.1;
pub const DEFAULT_PENDULUM_GAMMA: f64 = 0.95;
pub const BALANCE_CAP: usize = 3000;
pub const PENDULUM_FEATURES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumState {
    pub theta: f64,
    pub theta_dot: f64,
}

impl PendulumState {
    pub fn new(theta: f64, theta_dot: f64) -> Self {
        Self { theta, theta_dot }
    }

    pub fn is_upright(&self) -> bool {
        self.theta.abs() <= FRAC_PI_2
    }
}

/// One Euler step under the force `FORCES[action] + noise`.
pub fn pendulum_step_with_noise(state: PendulumState, action: usize, noise: f64) -> (PendulumState, f64, bool) {
    let u = FORCES[action] + noise;
    let a = 1.0 / (POLE_MASS + CART_MASS);
    let (th, w) = (state.theta, state.theta_dot);
    let accel = (GRAVITY * th.sin() - a * POLE_MASS * POLE_LENGTH * w * w * (2.0 * th).sin() / 2.0 - a * th.cos() * u)
        / (4.0 * POLE_LENGTH / 3.0 - a * POLE_MASS * POLE_LENGTH * th.cos().powi(2));
    let next = PendulumState { theta: th + TIME_STEP * w, theta_dot: w + TIME_STEP * accel };
    if next.is_upright() {
        (next, 0.0, false)
    } else {
        (next, -1.0, true)
    }
}

/// One step with force noise drawn uniformly from `[-10, 10]` N.
pub fn pendulum_step<R: Rng>(state: PendulumState, action: usize, rng: &mut R) -> (PendulumState, f64, bool) {
    let noise = rng.gen_range(-FORCE_NOISE..=FORCE_NOISE);
    pendulum_step_with_noise(state, action, noise)
}

/// `[1, exp(-||s - c||^2 / 2)]` over the 3x3 grid of centres
/// `{-pi/4, 0, pi/4} x {-1, 0, 1}`.
pub fn pendulum_features(state: &PendulumState) -> Vec<f64> {
    let mut phi = Vec::with_capacity(PENDULUM_FEATURES);
    phi.push(1.0);
    for ct in [-FRAC_PI_4, 0.0, FRAC_PI_4] {
        for cw in [-1.0, 0.0, 1.0] {
            let d2 = (state.theta - ct).powi(2) + (state.theta_dot - cw).powi(2);
            phi.push((-d2 / 2.0).exp());
        }
    }
    phi
}

/// The balancing task as an episodic domain.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pendulum;

impl Domain for Pendulum {
    type State = PendulumState;

    fn n_actions(&self) -> usize {
        FORCES.len()
    }

    fn initial_state<R: Rng>(&self, rng: &mut R) -> PendulumState {
        let e = INITIAL_PERTURBATION;
        PendulumState { theta: rng.gen_range(-e..=e), theta_dot: rng.gen_range(-e..=e) }
    }

    fn step<R: Rng>(&self, state: &PendulumState, action: usize, rng: &mut R) -> (PendulumState, f64, bool) {
        pendulum_step(*state, action, rng)
    }

    fn features(&self, state: &PendulumState) -> Vec<f64> {
        pendulum_features(state)
    }
}

/// Greedy one-step lookahead on the noise-free model against the value
/// `phi(s)' weights`. Ties go to the lowest action.
pub fn lookahead_action(weights: &[f64], state: &PendulumState, gamma: f64) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for a in 0..FORCES.len() {
        let (next, r, terminal) = pendulum_step_with_noise(*state, a, 0.0);
        let cont = if terminal {
            0.0
        } else {
            pendulum_features(&next).iter().zip(weights).map(|(f, w)| f * w).sum()
        };
        let q = r + gamma * cont;
        if q > best.1 {
            best = (a, q);
        }
    }
    best.0
}

/// Steps survived before the pole falls, capped at `cap`.
pub fn balance_steps<R: Rng>(policy: &mut dyn FnMut(&PendulumState) -> usize, rng: &mut R, cap: usize) -> usize {
    let mut state = Pendulum.initial_state(rng);
    for step in 0..cap {
        let (next, _, terminal) = pendulum_step(state, policy(&state), rng);
        if terminal {
            return step;
        }
        state = next;
    }
    cap
}

/// Mean balancing steps over `episodes` episodes.
pub fn evaluate_balancing(policy: &mut dyn FnMut(&PendulumState) -> usize, episodes: usize, seed: u64) -> f64 {
    if episodes == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = (0..episodes).map(|_| balance_steps(policy, &mut rng, BALANCE_CAP)).sum();
    total as f64 / episodes as f64
}

/// Uniformly random actions from a seeded stream.
pub fn random_policy(seed: u64) -> impl FnMut(&PendulumState) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move |_| rng.gen_range(0..FORCES.len())
}
