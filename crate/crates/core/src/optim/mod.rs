//! Self-contained dense LP and binary MILP solvers.

mod lp;
mod milp;
mod simplex;

pub use lp::{LinearProgram, LpSolution, LpStatus, RowKind, Sense};
pub use milp::{
    branch_and_bound, branch_and_bound_with, BranchOptions, MilpProgram, MilpSolution, MilpStatus, NodeHeuristic,
    INCUMBENT_FEAS_TOL, INT_TOL,
};
pub use simplex::{simplex_solve, simplex_solve_with, SimplexOptions};
