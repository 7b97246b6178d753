use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::benchmarks::SampleSet;
use crate::dradp::FeatureBasis;
use crate::error::{Error, Result};
use crate::mdp::DeterministicPolicy;

#[derive(Debug, Clone, PartialEq)]
pub struct ApiConfig {
    pub max_iterations: usize,
    /// Stop once successive weight vectors differ by at most this much (max norm).
    pub tolerance: f64,
    pub ridge: f64,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self { max_iterations: 50, tolerance: 1e-8, ridge: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct ApiResult {
    /// Column `a` holds the state-feature weights of action `a`.
    pub weights: DMatrix<f64>,
    /// Greedy action at every row of the basis.
    pub policy: DeterministicPolicy,
    pub iterations: usize,
    /// False when the iteration cap was hit or the policies cycled.
    pub converged: bool,
}

impl ApiResult {
    pub fn q_value(&self, features: &[f64], action: usize) -> f64 {
        self.weights.column(action).iter().zip(features).map(|(w, f)| w * f).sum()
    }

    /// Greedy action, ties to the lowest index.
    pub fn action(&self, features: &[f64]) -> usize {
        greedy(&self.weights, features)
    }
}

fn greedy(weights: &DMatrix<f64>, features: &[f64]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for a in 0..weights.ncols() {
        let q: f64 = weights.column(a).iter().zip(features).map(|(w, f)| w * f).sum();
        if q > best.1 {
            best = (a, q);
        }
    }
    best.0
}

/// LSTDQ with per-action copies of the state features:
/// `sum psi (psi - gamma psi')' w = sum psi r`, plus a ridge term.
fn lstdq(samples: &SampleSet, weights: &DMatrix<f64>, gamma: f64, ridge: f64) -> Result<DMatrix<f64>> {
    let (k, na) = weights.shape();
    let dim = k * na;
    let mut a_mat = DMatrix::<f64>::identity(dim, dim) * ridge;
    let mut b = DVector::<f64>::zeros(dim);
    let mut diff = DVector::<f64>::zeros(dim);
    for t in &samples.transitions {
        diff.fill(0.0);
        let off = t.action * k;
        for j in 0..k {
            diff[off + j] = t.features[j];
        }
        if !t.terminal {
            let off2 = greedy(weights, &t.next_features) * k;
            for j in 0..k {
                diff[off2 + j] -= gamma * t.next_features[j];
            }
        }
        for j in 0..k {
            let psi = t.features[j];
            if psi == 0.0 {
                continue;
            }
            for c in 0..dim {
                a_mat[(off + j, c)] += psi * diff[c];
            }
            b[off + j] += psi * t.reward;
        }
    }
    let w = a_mat
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular LSTDQ system despite ridge".into()))?;
    Ok(DMatrix::from_column_slice(k, na, w.as_slice()))
}

fn policy_key(weights: &DMatrix<f64>, samples: &SampleSet, basis: &FeatureBasis) -> Vec<usize> {
    let phi = basis.matrix();
    let mut key: Vec<usize> = (0..phi.nrows())
        .map(|s| greedy(weights, phi.row(s).iter().copied().collect::<Vec<_>>().as_slice()))
        .collect();
    key.extend(samples.transitions.iter().map(|t| greedy(weights, &t.next_features)));
    key
}

/// Approximate policy iteration on a fixed batch. Starts from random
/// weights; stops when a policy repeats, the weights settle, or the cap is hit.
pub fn api_solve(
    samples: &SampleSet,
    basis: &FeatureBasis,
    gamma: f64,
    cfg: &ApiConfig,
    rng_seed: u64,
) -> Result<ApiResult> {
    if cfg.max_iterations == 0 || !(cfg.tolerance > 0.0) {
        return Err(Error::InvalidArgument("API needs a positive iteration cap and tolerance".into()));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("discount {gamma} outside [0, 1)")));
    }
    let k = samples.validate()?;
    crate::error::check_dim("basis features", k, basis.n_features())?;
    let na = samples.n_actions();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut weights = DMatrix::from_fn(k, na, |_, _| rng.gen_range(-1.0..1.0));
    let mut history = vec![policy_key(&weights, samples, basis)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let next = lstdq(samples, &weights, gamma, cfg.ridge)?;
        let change = (&next - &weights).amax();
        weights = next;
        let key = policy_key(&weights, samples, basis);
        if key == *history.last().expect("non-empty") || change <= cfg.tolerance {
            converged = true;
            break;
        }
        if history.contains(&key) {
            break;
        }
        history.push(key);
    }
    let phi = basis.matrix();
    let policy = (0..phi.nrows())
        .map(|s| greedy(&weights, phi.row(s).iter().copied().collect::<Vec<_>>().as_slice()))
        .collect();
    Ok(ApiResult { weights, policy: DeterministicPolicy(policy), iterations, converged })
}
