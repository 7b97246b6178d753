//! Dense two-phase primal simplex with bounded variables.
//!
//! Every row gets a slack column whose bounds encode the row type (`<=`:
//! `[0, inf)`, `>=`: `(-inf, 0]`, `=`: `[0, 0]`), so the working problem is
//! `A x + s = b` with box bounds on every column. Rows whose slack cannot
//! absorb the starting residual get an artificial column; phase one drives
//! those to zero. Nonbasic columns sit at a finite bound (or at zero when
//! free), and upper bounds are handled in the ratio test by bound flips.
//!
//! Pricing is Dantzig's rule until `5 * (rows + cols)` consecutive degenerate
//! pivots have been made, after which Bland's rule takes over for the rest of
//! the phase.

use log::trace;
use nalgebra::{DMatrix, DVector};

use super::lp::{LinearProgram, LpSolution, LpStatus, RowKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Primal feasibility tolerance.
    pub feasibility_tol: f64,
    /// Reduced-cost tolerance for optimality.
    pub optimality_tol: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tol: f64,
    /// Iteration cap; `None` picks a size-dependent default.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { feasibility_tol: 1e-7, optimality_tol: 1e-9, pivot_tol: 1e-9, max_iterations: None }
    }
}

const NONBASIC: usize = usize::MAX;

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    ncols: usize,
    t: Vec<f64>,
    d: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<usize>,
    iterations: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn price(&mut self) {
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
            for (dj, tij) in self.d.iter_mut().zip(row) {
                *dj -= cb * tij;
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.ncols;
        let p = self.t[r * nc + j];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[j] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(r * nc);
        let (pivot_row, after) = rest.split_at_mut(nc);
        for chunk in before.chunks_mut(nc).chain(after.chunks_mut(nc)) {
            let f = chunk[j];
            if f != 0.0 {
                for (v, pr) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * pr;
                }
                chunk[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, pr) in self.d.iter_mut().zip(pivot_row.iter()) {
                *v -= f * pr;
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.row_of[leaving] = NONBASIC;
        self.basis[r] = j;
        self.row_of[j] = r;
    }

    fn choose_entering(&self, tol: f64, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            if self.row_of[j] != NONBASIC || self.lower[j] == self.upper[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = if dj < -tol && self.x[j] < self.upper[j] {
                1.0
            } else if dj > tol && self.x[j] > self.lower[j] {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn run(&mut self, opts: &SimplexOptions, max_iters: usize) -> Result<PhaseOutcome> {
        let degenerate_limit = 5 * (self.m + self.ncols);
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= max_iters {
                return Err(Error::Numerical(format!(
                    "simplex stalled after {} iterations ({} rows, {} columns)",
                    self.iterations, self.m, self.ncols
                )));
            }
            let Some((j, dir)) = self.choose_entering(opts.optimality_tol, bland) else {
                return Ok(PhaseOutcome::Optimal);
            };
            self.iterations += 1;

            // ratio test
            let mut step = f64::INFINITY;
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let alpha = self.at(i, j);
                if alpha.abs() <= opts.pivot_tol {
                    continue;
                }
                let b = self.basis[i];
                let delta = -dir * alpha;
                let (limit, to_upper) = if delta < 0.0 {
                    if self.lower[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    (((self.x[b] - self.lower[b]) / -delta).max(0.0), false)
                } else {
                    if self.upper[b] == f64::INFINITY {
                        continue;
                    }
                    (((self.upper[b] - self.x[b]) / delta).max(0.0), true)
                };
                let better = match leave {
                    None => true,
                    Some((r, _)) => {
                        let tie = (limit - step).abs() <= 1e-12 * (1.0 + step.abs());
                        if tie {
                            if bland {
                                b < self.basis[r]
                            } else {
                                alpha.abs() > leave_alpha
                            }
                        } else {
                            limit < step
                        }
                    }
                };
                if better {
                    step = limit;
                    leave = Some((i, to_upper));
                    leave_alpha = alpha.abs();
                }
            }
            let span = self.upper[j] - self.lower[j];
            let flip = span.is_finite() && span <= step;
            if flip {
                step = span;
            }
            if !step.is_finite() {
                return Ok(PhaseOutcome::Unbounded);
            }

            if step <= 1e-12 {
                degenerate_run += 1;
                if !bland && degenerate_run >= degenerate_limit {
                    trace!("simplex: switching to Bland's rule after {degenerate_run} degenerate pivots");
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            if step > 0.0 {
                for i in 0..self.m {
                    let alpha = self.at(i, j);
                    if alpha != 0.0 {
                        let b = self.basis[i];
                        self.x[b] -= dir * alpha * step;
                    }
                }
            }
            if flip {
                self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                continue;
            }
            self.x[j] += dir * step;
            let (r, to_upper) = leave.expect("finite step without a flip has a leaving row");
            let b = self.basis[r];
            self.x[b] = if to_upper { self.upper[b] } else { self.lower[b] };
            self.pivot(r, j);
        }
    }
}

/// Solves `lp` with the default options.
pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution> {
    simplex_solve_with(lp, &SimplexOptions::default())
}

pub fn simplex_solve_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.n_vars();
    let m = lp.n_rows();
    let sign = lp.sense.sign();

    // structural starting values
    let mut x0 = vec![0.0; n];
    for j in 0..n {
        x0[j] = if lp.lower[j].is_finite() {
            lp.lower[j]
        } else if lp.upper[j].is_finite() {
            lp.upper[j]
        } else {
            0.0
        };
    }

    let mut slack_lower = vec![0.0; m];
    let mut slack_upper = vec![0.0; m];
    for i in 0..m {
        match lp.kinds[i] {
            RowKind::Le => slack_upper[i] = f64::INFINITY,
            RowKind::Ge => slack_lower[i] = f64::NEG_INFINITY,
            RowKind::Eq => {}
        }
    }

    // decide which rows need an artificial
    let mut art_rows = Vec::new();
    let mut art_sign = Vec::new();
    let mut residual = vec![0.0; m];
    let mut slack_value = vec![0.0; m];
    for i in 0..m {
        let r = lp.rhs[i] - lp.row_activity(i, &x0);
        residual[i] = r;
        let clamped = r.clamp(slack_lower[i], slack_upper[i]);
        slack_value[i] = clamped;
        if (r - clamped).abs() > 0.0 {
            art_rows.push(i);
            art_sign.push(if r > clamped { 1.0 } else { -1.0 });
        }
    }
    let n_art = art_rows.len();
    let ncols = n + m + n_art;

    let mut t = vec![0.0; m * ncols];
    let mut row_sign = vec![1.0; m];
    let mut basis = vec![0usize; m];
    let mut art_of_row = vec![NONBASIC; m];
    for (k, &i) in art_rows.iter().enumerate() {
        art_of_row[i] = k;
        row_sign[i] = art_sign[k];
    }
    for i in 0..m {
        let s = row_sign[i];
        let row = &mut t[i * ncols..(i + 1) * ncols];
        for j in 0..n {
            row[j] = s * lp.rows[i][j];
        }
        row[n + i] = s;
        if art_of_row[i] != NONBASIC {
            row[n + m + art_of_row[i]] = 1.0;
            basis[i] = n + m + art_of_row[i];
        } else {
            basis[i] = n + i;
        }
    }

    let mut lower = Vec::with_capacity(ncols);
    let mut upper = Vec::with_capacity(ncols);
    lower.extend_from_slice(&lp.lower);
    upper.extend_from_slice(&lp.upper);
    lower.extend_from_slice(&slack_lower);
    upper.extend_from_slice(&slack_upper);
    lower.extend(std::iter::repeat_n(0.0, n_art));
    upper.extend(std::iter::repeat_n(f64::INFINITY, n_art));

    let mut x = Vec::with_capacity(ncols);
    x.extend_from_slice(&x0);
    x.extend_from_slice(&slack_value);
    for (k, &i) in art_rows.iter().enumerate() {
        x.push((residual[i] - slack_value[i]).abs());
        debug_assert!(x[n + m + k] > 0.0);
    }
    // slacks that are basic carry the full residual
    for i in 0..m {
        if art_of_row[i] == NONBASIC {
            x[n + i] = residual[i];
        }
    }

    let mut row_of = vec![NONBASIC; ncols];
    for (i, &b) in basis.iter().enumerate() {
        row_of[b] = i;
    }

    let max_iters = opts.max_iterations.unwrap_or(200 * (m + ncols) + 1000);
    let mut tab = Tableau {
        m,
        ncols,
        t,
        d: vec![0.0; ncols],
        cost: vec![0.0; ncols],
        lower,
        upper,
        x,
        basis,
        row_of,
        iterations: 0,
    };

    let scale = 1.0 + lp.rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    if n_art > 0 {
        for k in 0..n_art {
            tab.cost[n + m + k] = 1.0;
        }
        tab.price();
        tab.run(opts, max_iters)?;
        let infeas: f64 = (0..n_art).map(|k| tab.x[n + m + k]).sum();
        trace!("simplex phase 1: {} iterations, infeasibility {infeas:e}", tab.iterations);
        if infeas > opts.feasibility_tol * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, n, m, tab.iterations));
        }
        for k in 0..n_art {
            let j = n + m + k;
            tab.upper[j] = 0.0;
            tab.cost[j] = 0.0;
            if tab.row_of[j] == NONBASIC {
                tab.x[j] = 0.0;
            }
        }
    }

    for j in 0..n {
        tab.cost[j] = sign * lp.cost[j];
    }
    tab.price();
    match tab.run(opts, max_iters)? {
        PhaseOutcome::Unbounded => {
            return Ok(LpSolution::without_point(LpStatus::Unbounded, n, m, tab.iterations));
        }
        PhaseOutcome::Optimal => {}
    }
    trace!("simplex phase 2 done after {} iterations", tab.iterations);

    // Recompute basic values and duals from the basis matrix.
    let column = |j: usize| -> DVector<f64> {
        if j < n {
            DVector::from_fn(m, |i, _| lp.rows[i][j])
        } else if j < n + m {
            let mut e = DVector::zeros(m);
            e[j - n] = 1.0;
            e
        } else {
            let i = art_rows[j - n - m];
            let mut e = DVector::zeros(m);
            e[i] = art_sign[j - n - m];
            e
        }
    };
    let mut bmat = DMatrix::zeros(m, m);
    for (i, &b) in tab.basis.iter().enumerate() {
        bmat.set_column(i, &column(b));
    }
    let mut rhs = DVector::from_vec(lp.rhs.clone());
    for j in 0..ncols {
        if tab.row_of[j] == NONBASIC && tab.x[j] != 0.0 {
            rhs -= column(j) * tab.x[j];
        }
    }
    let mut x_final = tab.x.clone();
    let mut y_int: Option<DVector<f64>> = None;
    if m > 0 {
        let bt = bmat.transpose();
        let lu = bmat.lu();
        if let Some(xb) = lu.solve(&rhs) {
            let mut trial = tab.x.clone();
            for (i, &b) in tab.basis.iter().enumerate() {
                trial[b] = xb[i];
            }
            let viol = |v: &[f64]| {
                (0..ncols).fold(0.0_f64, |w, j| w.max(tab.lower[j] - v[j]).max(v[j] - tab.upper[j]))
            };
            if viol(&trial) <= viol(&tab.x).max(opts.feasibility_tol) {
                x_final = trial;
            }
            let cb = DVector::from_fn(m, |i, _| tab.cost[tab.basis[i]]);
            y_int = bt.lu().solve(&cb);
        }
    }
    let y_int = y_int.unwrap_or_else(|| DVector::from_fn(m, |i, _| -tab.d[n + i]));

    let mut reduced = vec![0.0; n];
    for j in 0..n {
        let mut dj = sign * lp.cost[j];
        for i in 0..m {
            dj -= lp.rows[i][j] * y_int[i];
        }
        reduced[j] = sign * dj;
    }
    let mut xs: Vec<f64> = x_final[..n].to_vec();
    for j in 0..n {
        xs[j] = xs[j].clamp(lp.lower[j], lp.upper[j]);
    }
    let duals: Vec<f64> = y_int.iter().map(|y| sign * y).collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&xs),
        x: xs,
        duals,
        reduced_costs: reduced,
        iterations: tab.iterations,
    })
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpSolution> {
        simplex_solve(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::Sense;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_variable_max() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.add_row(vec![1.0], RowKind::Le, 3.0);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.x[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.objective, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.duals[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0]);
        lp.set_free(0);
        lp.add_row(vec![1.0], RowKind::Ge, 1.0);
        lp.add_row(vec![1.0], RowKind::Le, 0.0);
        assert_eq!(lp.solve().unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_is_detected() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.add_row(vec![1.0, -1.0], RowKind::Le, 1.0);
        assert_eq!(lp.solve().unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_negative_bounds() {
        // min x + 2y, x free, y in [-3, 5], x - y >= -1, x + y = 2
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0]);
        lp.set_free(0);
        lp.set_bounds(1, -3.0, 5.0);
        lp.add_row(vec![1.0, -1.0], RowKind::Ge, -1.0);
        lp.add_row(vec![1.0, 1.0], RowKind::Eq, 2.0);
        let sol = lp.solve().unwrap();
        // x = 2 - y, objective 2 + y, x - y = 2 - 2y >= -1 -> y <= 1.5; minimise -> y = -3
        assert_abs_diff_eq!(sol.x[1], -3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[0], 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.objective, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn duals_satisfy_stationarity() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 2.0, 4.0]);
        lp.set_bounds(2, 0.0, 1.0);
        lp.add_row(vec![1.0, 1.0, 2.0], RowKind::Le, 4.0);
        lp.add_row(vec![2.0, 0.0, 3.0], RowKind::Le, 5.0);
        lp.add_row(vec![0.0, 1.0, 1.0], RowKind::Ge, 0.5);
        let sol = lp.solve().unwrap();
        for j in 0..3 {
            let mut lhs = sol.reduced_costs[j];
            for i in 0..3 {
                lhs += lp.rows[i][j] * sol.duals[i];
            }
            assert_abs_diff_eq!(lhs, lp.cost[j], epsilon = 1e-9);
        }
        // dual objective: b'y + bound terms
        let mut dual_obj: f64 = lp.rhs.iter().zip(&sol.duals).map(|(b, y)| b * y).sum();
        for j in 0..3 {
            dual_obj += sol.reduced_costs[j] * sol.x[j];
        }
        assert_abs_diff_eq!(dual_obj, sol.objective, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // a classic cycling example (Beale) for Dantzig pricing without anti-cycling
        let mut lp = LinearProgram::new(Sense::Minimize, vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_row(vec![0.25, -60.0, -0.04, 9.0], RowKind::Le, 0.0);
        lp.add_row(vec![0.5, -90.0, -0.02, 3.0], RowKind::Le, 0.0);
        lp.add_row(vec![0.0, 0.0, 1.0, 0.0], RowKind::Le, 1.0);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.objective, -0.05, epsilon = 1e-9);
    }

    #[test]
    fn deterministic_repeat() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, -1.0, 0.5]);
        lp.add_row(vec![1.0, 1.0, 1.0], RowKind::Eq, 1.0);
        lp.add_row(vec![1.0, -2.0, 0.0], RowKind::Ge, -1.0);
        assert_eq!(lp.solve().unwrap(), lp.solve().unwrap());
    }
}
