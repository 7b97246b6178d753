use super::DradpProblem;
use crate::optim::{LinearProgram, MilpProgram, RowKind, Sense};

/// Column offsets of the mixed-integer program: `lambda1`, `lambda2`, `z`,
/// `pi`, then `lambda3` when the smoothness rows are on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MilpLayout {
    pub n_features: usize,
    pub n_pairs: usize,
    pub n_states: usize,
    pub smooth: bool,
}

impl MilpLayout {
    pub fn of(problem: &DradpProblem) -> Self {
        Self {
            n_features: problem.n_features(),
            n_pairs: problem.n_pairs(),
            n_states: problem.n_states(),
            smooth: problem.smooth_cap.is_some(),
        }
    }

    pub fn lambda1(&self, j: usize) -> usize {
        j
    }

    pub fn lambda2(&self, i: usize) -> usize {
        self.n_features + i
    }

    pub fn z(&self, i: usize) -> usize {
        self.n_features + self.n_pairs + i
    }

    pub fn pi(&self, i: usize) -> usize {
        self.n_features + 2 * self.n_pairs + i
    }

    pub fn lambda3(&self, s: usize) -> usize {
        self.n_features + 3 * self.n_pairs + s
    }

    pub fn n_vars(&self) -> usize {
        self.n_features + 3 * self.n_pairs + if self.smooth { self.n_states } else { 0 }
    }
}

/// The McCormick-linearised program
///
/// ```text
/// max  alpha' Phi lambda1 - 1'z [- cap' lambda3]
/// s.t. z >= lambda2 - tau (1 - pi)
///      (1 - gamma)(lambda2 [+ B' lambda3]) >= A Phi lambda1 - b
///      B pi = 1,  pi binary,  z, lambda2 [, lambda3] >= 0
///      -V_box <= Phi lambda1 <= V_box
/// ```
///
/// Rows are emitted in that order, one block per constraint family.
pub fn build_milp(problem: &DradpProblem) -> MilpProgram {
    let layout = MilpLayout::of(problem);
    let k = layout.n_features;
    let m = layout.n_pairs;
    let g = problem.gamma;
    let tau = problem.tau;

    let mut cost = vec![0.0; layout.n_vars()];
    for j in 0..k {
        cost[layout.lambda1(j)] = problem.phi_alpha[j];
    }
    for i in 0..m {
        cost[layout.z(i)] = -1.0;
    }
    if let Some(cap) = &problem.smooth_cap {
        for (s, c) in cap.iter().enumerate() {
            cost[layout.lambda3(s)] = -c;
        }
    }
    let mut lp = LinearProgram::new(Sense::Maximize, cost);
    for j in 0..k {
        lp.set_free(layout.lambda1(j));
    }

    for i in 0..m {
        lp.add_sparse_row(
            &[(layout.z(i), 1.0), (layout.lambda2(i), -1.0), (layout.pi(i), -tau)],
            RowKind::Ge,
            -tau,
        );
    }
    for i in 0..m {
        let mut entries: Vec<(usize, f64)> = (0..k).map(|j| (layout.lambda1(j), -problem.a_phi[(i, j)])).collect();
        entries.push((layout.lambda2(i), 1.0 - g));
        if layout.smooth {
            entries.push((layout.lambda3(problem.pairs[i].0), 1.0 - g));
        }
        lp.add_sparse_row(&entries, RowKind::Ge, -problem.b[i]);
    }
    for list in &problem.state_pairs {
        let entries: Vec<(usize, f64)> = list.iter().map(|&i| (layout.pi(i), 1.0)).collect();
        lp.add_sparse_row(&entries, RowKind::Eq, 1.0);
    }
    for s in 0..layout.n_states {
        let entries: Vec<(usize, f64)> = (0..k).map(|j| (layout.lambda1(j), problem.phi[(s, j)])).collect();
        lp.add_sparse_row(&entries, RowKind::Le, problem.v_box);
        lp.add_sparse_row(&entries, RowKind::Ge, -problem.v_box);
    }

    let binaries = (0..m).map(|i| layout.pi(i)).collect();
    MilpProgram::new(lp, binaries).expect("DRADP program is well formed by construction")
}
