use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// State features `Phi`, one row per state, with a column of exact ones.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBasis {
    phi: DMatrix<f64>,
    constant: usize,
}

impl FeatureBasis {
    /// Fails unless some column is exactly one everywhere.
    pub fn new(phi: DMatrix<f64>) -> Result<Self> {
        if phi.ncols() == 0 || phi.nrows() == 0 {
            return Err(Error::InvalidArgument("feature matrix must be non-empty".into()));
        }
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("feature matrix has non-finite entries".into()));
        }
        let constant = (0..phi.ncols())
            .find(|&j| phi.column(j).iter().all(|&x| x == 1.0))
            .ok_or_else(|| Error::InvalidArgument("feature matrix has no constant column of ones".into()))?;
        Ok(Self { phi, constant })
    }

    /// Full-rank basis `[1, e_1, ..., e_{n-1}]`; spans every value function.
    pub fn tabular(n_states: usize) -> Result<Self> {
        let phi = DMatrix::from_fn(n_states, n_states, |s, j| match j {
            0 => 1.0,
            _ if s == j => 1.0,
            _ => 0.0,
        });
        Self::new(phi)
    }

    /// Only the constant column.
    pub fn constant(n_states: usize) -> Result<Self> {
        Self::new(DMatrix::from_element(n_states, 1, 1.0))
    }

    /// Chebyshev polynomials `T_0..T_{k-1}` of the first kind at the state
    /// indices mapped affinely onto `[-1, 1]`.
    pub fn chebyshev(n_states: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("need at least one feature".into()));
        }
        let mut phi = DMatrix::zeros(n_states, k);
        for s in 0..n_states {
            let x = if n_states > 1 { 2.0 * s as f64 / (n_states - 1) as f64 - 1.0 } else { 0.0 };
            let (mut prev, mut cur) = (1.0, x);
            phi[(s, 0)] = 1.0;
            for j in 1..k {
                phi[(s, j)] = cur;
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
        }
        Self::new(phi)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn n_rows(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.phi.ncols()
    }

    pub fn constant_column(&self) -> usize {
        self.constant
    }

    pub fn values(&self, weights: &DVector<f64>) -> DVector<f64> {
        &self.phi * weights
    }
}
