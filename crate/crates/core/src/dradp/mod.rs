//! The robust lower-bound method: feature bases, the bound `rho~(pi)` in its
//! occupancy and multiplier forms, and the mixed-integer program that
//! maximises it over deterministic policies.
//!
//! A problem is either built from a full [`crate::mdp::TabularMdp`] or from a
//! [`crate::benchmarks::SampleSet`]; in both cases it reduces to one row of
//! `A Phi` and `b` per represented state-action pair.

mod basis;
mod evaluate;
mod formulation;
mod problem;
mod solve;

pub use basis::FeatureBasis;
pub use evaluate::{evaluate_lower_bound, evaluate_lower_bound_detailed, evaluate_lower_bound_saddle, InnerSolution};
pub use formulation::{build_milp, MilpLayout};
pub use problem::{build_sampled_problem, build_smooth_problem, DradpProblem, TauPolicy};
pub use solve::{solve, solve_with, DradpSolution, PolicyEntry, SolutionExport, SolveOptions};
