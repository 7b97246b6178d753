//! A-priori policy-loss bounds and the concentration coefficient.
//!
//! All calculators need the tabular model; they evaluate at a caller-supplied
//! value function, so every reported number is an upper bound on the
//! corresponding minimum over representable values.

use nalgebra::DVector;

use crate::dradp::FeatureBasis;
use crate::error::{check_dim, Error, Result};
use crate::mdp::{bellman_apply, value_iteration, TabularMdp, ValueFunction, DEFAULT_VI_MAX_ITERS, DEFAULT_VI_TOL};
use crate::optim::{LinearProgram, LpStatus, RowKind, Sense};

/// Smallest `C` with a distribution `mu` such that `P(s, a, s') <= C mu(s')`.
///
/// With `m(s') = max_{s,a} P(s, a, s')`, `C = sum m` and `mu = m / C`.
pub fn concentration_coefficient(mdp: &TabularMdp) -> (f64, DVector<f64>) {
    let n = mdp.n_states();
    let mut m = DVector::zeros(n);
    for a in 0..mdp.n_actions() {
        let p = mdp.transition(a);
        for s in 0..n {
            for t in 0..n {
                m[t] = f64::max(m[t], p[(s, t)]);
            }
        }
    }
    let c = m.sum();
    (c, m / c)
}

/// `sigma = gamma mu + (1 - gamma) alpha`.
pub fn sigma_vector(mdp: &TabularMdp, mu: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("mu", mdp.n_states(), mu.len())?;
    if mu.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidArgument("mu must be nonnegative".into()));
    }
    let g = mdp.gamma();
    Ok(mu * g + mdp.alpha() * (1.0 - g))
}

/// `(||v - Bv||_inf, ||v - Bv||_{1,sigma})`.
pub fn bellman_residual_norms(mdp: &TabularMdp, v: &ValueFunction, sigma: &DVector<f64>) -> Result<(f64, f64)> {
    check_dim("sigma", mdp.n_states(), sigma.len())?;
    if sigma.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidArgument("sigma must be nonnegative".into()));
    }
    let res = v - bellman_apply(mdp, v)?;
    let linf = res.amax();
    let l1 = res.iter().zip(sigma.iter()).map(|(r, w)| r.abs() * w).sum();
    Ok((linf, l1))
}

/// `2 / (1 - gamma) * ||v - Bv||_inf`.
pub fn bound_simple(mdp: &TabularMdp, v: &ValueFunction) -> Result<f64> {
    let sigma = mdp.alpha().clone();
    let (linf, _) = bellman_residual_norms(mdp, v, &sigma)?;
    Ok(2.0 / (1.0 - mdp.gamma()) * linf)
}

/// `min alpha'(v* - Phi x)` over `Phi x <= v*`.
pub fn bound_direct(mdp: &TabularMdp, basis: &FeatureBasis) -> Result<f64> {
    check_dim("feature rows", mdp.n_states(), basis.n_rows())?;
    let v_star = value_iteration(mdp, DEFAULT_VI_TOL, DEFAULT_VI_MAX_ITERS)?.values;
    let phi = basis.matrix();
    let cost: Vec<f64> = (phi.transpose() * mdp.alpha()).iter().copied().collect();
    let mut lp = LinearProgram::new(Sense::Maximize, cost);
    for j in 0..basis.n_features() {
        lp.set_free(j);
    }
    for s in 0..mdp.n_states() {
        lp.add_row(phi.row(s).iter().copied().collect(), RowKind::Le, v_star[s]);
    }
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok((mdp.alpha().dot(&v_star) - sol.objective).max(0.0)),
        other => Err(Error::Numerical(format!("direct bound LP returned {other:?}"))),
    }
}

/// `2 C / (1 - gamma) * ||v - Bv||_{1,sigma}` with the minimal `(C, mu)`.
pub fn bound_smooth(mdp: &TabularMdp, v: &ValueFunction) -> Result<f64> {
    let (c, mu) = concentration_coefficient(mdp);
    let sigma = sigma_vector(mdp, &mu)?;
    let (_, l1) = bellman_residual_norms(mdp, v, &sigma)?;
    Ok(2.0 * c / (1.0 - mdp.gamma()) * l1)
}
