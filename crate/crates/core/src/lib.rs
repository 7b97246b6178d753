//! Distributionally robust approximate dynamic programming.
//!
//! The crate is organised bottom-up:
//!
//! - [`mdp`]: tabular MDPs, Bellman operators, occupancy measures and the
//!   exact solvers used as ground truth.
//! - [`optim`]: a dense two-phase simplex and a binary branch-and-bound.
//! - [`dradp`]: feature bases, the lower-bound return and its LP duals, the
//!   mixed-integer formulation and the solver that drives it.
//! - [`baselines`]: approximate linear programming and LSTDQ-based policy
//!   iteration.
//! - [`bounds`]: a-priori policy-loss bounds and concentration coefficients.
//! - [`benchmarks`]: the random chain problem and the inverted pendulum.

pub mod baselines;
pub mod benchmarks;
pub mod bounds;
pub mod dradp;
pub mod error;
pub mod mdp;
pub mod optim;

pub use error::{Error, Result};
pub use mdp::{DeterministicPolicy, OccupancyMeasure, RandomizedPolicy, TabularMdp, ValueFunction};
pub use benchmarks::SampleSet;
pub use dradp::{DradpProblem, DradpSolution, FeatureBasis};
pub use optim::{LinearProgram, LpSolution, LpStatus, MilpProgram, MilpSolution, MilpStatus};

