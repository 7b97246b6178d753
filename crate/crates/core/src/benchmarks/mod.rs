//! The chain and inverted-pendulum domains, plus offline sample collection.

mod chain;
mod pendulum;
mod samples;
mod study;

pub use chain::{
    chain_features, chain_generate, ChainInstance, CHAIN_FEATURES, CHAIN_SLIP, CHAIN_STATES, DEFAULT_CHAIN_GAMMA, LEFT,
    RIGHT,
};
pub use pendulum::{
    balance_steps, evaluate_balancing, lookahead_action, pendulum_features, pendulum_step, pendulum_step_with_noise,
    random_policy, Pendulum, PendulumState, BALANCE_CAP, CART_MASS, DEFAULT_PENDULUM_GAMMA, FORCES, FORCE_NOISE,
    GRAVITY, INITIAL_PERTURBATION, PENDULUM_FEATURES, POLE_LENGTH, POLE_MASS, TIME_STEP,
};
pub use samples::{
    collect_samples, collect_samples_all_actions, Domain, InitialState, SampleSet, TabularDomain, Transition,
};
pub use study::{
    chain_run, pendulum_run, ChainRecord, Method, PendulumRecord, PendulumSetup, CHAIN_API_EPISODES,
    CHAIN_API_EPISODE_LEN,
};
