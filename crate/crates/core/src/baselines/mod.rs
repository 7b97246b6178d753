//! Comparison methods: approximate linear programming and LSTDQ-based
//! approximate policy iteration.

mod alp;
mod api;

pub use alp::{alp_solve, AlpSolution};
pub use api::{api_solve, ApiConfig, ApiResult};
