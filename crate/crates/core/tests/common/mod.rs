//! Random instance generators and brute-force oracles shared by the
//! integration tests.
#![allow(dead_code)]

use dradp_core::dradp::FeatureBasis;
use dradp_core::optim::{LinearProgram, RowKind, Sense};
use dradp_core::{RandomizedPolicy, TabularMdp};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_distribution<R: Rng>(rng: &mut R, n: usize, sparse: bool) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if sparse && rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..1.0) })
        .collect();
    if w.iter().sum::<f64>() <= 0.0 {
        w[rng.gen_range(0..n)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Random transitions with about half the entries zero, rewards in
/// `[-1, 1]` and a random initial distribution.
pub fn random_mdp<R: Rng>(rng: &mut R, n: usize, m: usize, gamma: f64) -> TabularMdp {
    let transition = (0..m)
        .map(|_| {
            let mut p = DMatrix::zeros(n, n);
            for s in 0..n {
                let row = random_distribution(rng, n, true);
                for t in 0..n {
                    p[(s, t)] = row[t];
                }
            }
            p
        })
        .collect();
    let reward = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
    let alpha = DVector::from_vec(random_distribution(rng, n, false));
    TabularMdp::new(transition, reward, gamma, alpha).expect("generated MDP is valid")
}

/// MDP with sizes drawn from the given ranges and `gamma` in `[0.5, 0.95]`.
pub fn random_mdp_sized<R: Rng>(
    rng: &mut R,
    states: std::ops::RangeInclusive<usize>,
    actions: std::ops::RangeInclusive<usize>,
) -> TabularMdp {
    let n = rng.gen_range(states);
    let m = rng.gen_range(actions);
    let gamma = rng.gen_range(0.5..0.95);
    random_mdp(rng, n, m, gamma)
}

/// A constant column followed by `k - 1` columns uniform in `[-1, 1]`.
pub fn random_basis<R: Rng>(rng: &mut R, n: usize, k: usize) -> FeatureBasis {
    let phi = DMatrix::from_fn(n, k, |_, j| if j == 0 { 1.0 } else { rng.gen_range(-1.0..1.0) });
    FeatureBasis::new(phi).expect("first column is constant")
}

pub fn random_policy<R: Rng>(rng: &mut R, n: usize, m: usize) -> RandomizedPolicy {
    let mut probs = DMatrix::zeros(n, m);
    for s in 0..n {
        let row = random_distribution(rng, m, true);
        for a in 0..m {
            probs[(s, a)] = row[a];
        }
    }
    RandomizedPolicy::new(probs).expect("rows are distributions")
}

pub fn random_deterministic<R: Rng>(rng: &mut R, n: usize, m: usize) -> RandomizedPolicy {
    let mut probs = DMatrix::zeros(n, m);
    for s in 0..n {
        probs[(s, rng.gen_range(0..m))] = 1.0;
    }
    RandomizedPolicy::new(probs).expect("rows are distributions")
}

/// A feasible LP with every variable boxed in `[0, u]`, so it is bounded.
/// Up to two equality rows pass through a known interior point.
pub fn random_bounded_lp<R: Rng>(rng: &mut R, max_vars: usize, max_rows: usize) -> LinearProgram {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(1..=max_rows);
    let sense = if rng.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let cost = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let mut lp = LinearProgram::new(sense, cost);
    let upper: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..10.0)).collect();
    for (j, &u) in upper.iter().enumerate() {
        lp.set_bounds(j, 0.0, u);
    }
    let x0: Vec<f64> = upper.iter().map(|u| rng.gen_range(0.0..*u)).collect();
    let mut n_eq = 0;
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let act: f64 = row.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let kind = match rng.gen_range(0..5) {
            0 if n_eq < 2 => {
                n_eq += 1;
                RowKind::Eq
            }
            0..=2 => RowKind::Le,
            _ => RowKind::Ge,
        };
        let slack = rng.gen_range(0.0..2.0);
        let rhs = match kind {
            RowKind::Le => act + slack,
            RowKind::Ge => act - slack,
            RowKind::Eq => act,
        };
        lp.add_row(row, kind, rhs);
    }
    lp
}

/// Optimum of a boxed LP by enumerating every vertex: each choice of `n`
/// tight constraints among rows and bounds is solved and kept if feasible.
/// Equalities are enforced by the feasibility check.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.n_vars();
    let mut cons: Vec<(Vec<f64>, f64)> = lp.rows.iter().cloned().zip(lp.rhs.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cons.push((e.clone(), lp.lower[j]));
        cons.push((e, lp.upper[j]));
    }
    let all: Vec<usize> = (0..cons.len()).collect();
    let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let mut best: Option<f64> = None;
    let mut pick = Vec::new();
    choose(&all, n, 0, &mut pick, &mut |idx| {
        let a = DMatrix::from_fn(n, n, |r, c| cons[idx[r]].0[c]);
        let b = DVector::from_fn(n, |r, _| cons[idx[r]].1);
        let Some(x) = a.lu().solve(&b) else { return };
        let x: Vec<f64> = x.iter().copied().collect();
        if x.iter().any(|v| !v.is_finite()) || !lp.is_feasible(&x, 1e-7) {
            return;
        }
        let obj = lp.objective_value(&x);
        if best.is_none_or(|b| sign * obj < sign * b) {
            best = Some(obj);
        }
    });
    best
}

fn choose(items: &[usize], k: usize, from: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in from..items.len() {
        if items.len() - i < k - pick.len() {
            break;
        }
        pick.push(items[i]);
        choose(items, k, i + 1, pick, f);
        pick.pop();
    }
}

/// A pure-binary program `max c'x` under random knapsack rows, some `>=` rows
/// and at most one equality. Feasibility is not guaranteed.
pub fn random_binary_program<R: Rng>(rng: &mut R, max_binaries: usize) -> dradp_core::MilpProgram {
    let n = rng.gen_range(1..=max_binaries);
    let sense = if rng.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    // integer data keeps the enumeration oracle exact
    let cost = (0..n).map(|_| rng.gen_range(-10..=10) as f64).collect();
    let mut lp = LinearProgram::new(sense, cost);
    for j in 0..n {
        lp.set_bounds(j, 0.0, 1.0);
    }
    for r in 0..rng.gen_range(1..=4) {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=9) as f64).collect();
        let total: f64 = row.iter().filter(|x| **x > 0.0).sum();
        let kind = match r {
            0 => RowKind::Le,
            _ if rng.gen_bool(0.15) => RowKind::Eq,
            _ if rng.gen_bool(0.5) => RowKind::Ge,
            _ => RowKind::Le,
        };
        let rhs = match kind {
            RowKind::Le => (total * rng.gen_range(0.2..0.8)).round(),
            RowKind::Ge => (total * rng.gen_range(0.0..0.4)).round(),
            RowKind::Eq => rng.gen_range(0..=9) as f64,
        };
        lp.add_row(row, kind, rhs);
    }
    dradp_core::MilpProgram::new(lp, (0..n).collect()).expect("well formed")
}

/// Best objective over all `2^n` binary points, `None` when none is feasible.
pub fn binary_enumeration(milp: &dradp_core::MilpProgram) -> Option<f64> {
    let n = milp.lp.n_vars();
    let sign = if milp.lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| f64::from((mask >> j) & 1)).collect();
        if !milp.lp.is_feasible(&x, 1e-9) {
            continue;
        }
        let obj = milp.lp.objective_value(&x);
        if best.is_none_or(|b| sign * obj < sign * b) {
            best = Some(obj);
        }
    }
    best
}
