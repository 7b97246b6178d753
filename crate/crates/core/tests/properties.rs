//! Randomised checks of the library's structural invariants. Every case is
//! driven by a proptest-chosen seed so failures shrink to a reproducible seed.

mod common;

use common::*;
use dradp_core::baselines::{alp_solve, api_solve, ApiConfig};
use dradp_core::benchmarks::{collect_samples, InitialState, SampleSet, TabularDomain, Transition};
use dradp_core::bounds::{concentration_coefficient, sigma_vector};
use dradp_core::dradp::{
    build_sampled_problem, build_smooth_problem, evaluate_lower_bound, evaluate_lower_bound_detailed,
    evaluate_lower_bound_saddle, solve_with, DradpProblem, FeatureBasis, SolveOptions, TauPolicy,
};
use dradp_core::mdp::*;
use dradp_core::optim::{branch_and_bound, LpStatus, MilpStatus, RowKind, Sense};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn return_agrees_across_forms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 2..=8, 1..=3);
        let pol = random_policy(&mut r, mdp.n_states(), mdp.n_actions());
        let direct = expected_return(&mdp, &pol).unwrap();
        let occ = expected_return_occupancy(&mdp, &pol).unwrap();
        prop_assert!((direct - occ).abs() <= 1e-8 * (1.0 + direct.abs()));
    }

    #[test]
    fn occupancy_is_a_feasible_flow(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 2..=8, 1..=3);
        let pol = random_policy(&mut r, mdp.n_states(), mdp.n_actions());
        let u = occupancy(&mdp, &pol).unwrap();
        prop_assert!(u.0.iter().all(|x| *x >= 0.0));
        prop_assert!((u.total() - 1.0).abs() <= 1e-9);
        let lp = build_lp_matrices(&mdp);
        let flow = lp.a.transpose() * u.to_action_major();
        let target = mdp.alpha() * (1.0 - mdp.gamma());
        prop_assert!((flow - target).amax() <= 1e-9);

        let back = policy_from_occupancy(&mdp, &u).unwrap();
        let again = occupancy(&mdp, &back).unwrap();
        prop_assert!((again.0 - u.0).amax() <= 1e-7);
    }

    #[test]
    fn bellman_shift(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 2..=8, 1..=3);
        let n = mdp.n_states();
        let v = DVector::from_fn(n, |_, _| r.gen_range(-5.0..5.0));
        let k = r.gen_range(-10.0..10.0);
        let shifted = bellman_apply(&mdp, &v.add_scalar(k)).unwrap();
        let expect = bellman_apply(&mdp, &v).unwrap().add_scalar(mdp.gamma() * k);
        prop_assert!((shifted - expect).amax() <= 1e-9);
        // integer values and shift: distinct backups cannot swap order
        let vi = DVector::from_fn(n, |_, _| f64::from(r.gen_range(-4..=4)));
        let ki = f64::from(r.gen_range(-10..=10));
        prop_assert_eq!(greedy_policy(&mdp, &vi).unwrap(), greedy_policy(&mdp, &vi.add_scalar(ki)).unwrap());
    }

    #[test]
    fn lp_matrix_rows_sum_to_one_minus_gamma(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 1..=10, 1..=4);
        let lp = build_lp_matrices(&mdp);
        let ones = DVector::from_element(mdp.n_states(), 1.0);
        let row_sums = &lp.a * ones;
        prop_assert!(row_sums.iter().all(|x| (x - (1.0 - mdp.gamma())).abs() <= 1e-12));
    }

    #[test]
    fn concentration_dominates_transitions(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 2..=8, 1..=3);
        let (c, mu) = concentration_coefficient(&mdp);
        prop_assert!((mu.sum() - 1.0).abs() <= 1e-9);
        for a in 0..mdp.n_actions() {
            for s in 0..mdp.n_states() {
                for t in 0..mdp.n_states() {
                    prop_assert!(mdp.transition(a)[(s, t)] <= c * mu[t] + 1e-12);
                }
            }
        }
        let sigma = sigma_vector(&mdp, &mu).unwrap();
        prop_assert!((sigma.sum() - 1.0).abs() <= 1e-9);
        let pol = random_policy(&mut r, mdp.n_states(), mdp.n_actions());
        let d = state_occupancy(&mdp, &pol).unwrap();
        for s in 0..mdp.n_states() {
            prop_assert!(d[s] <= c * sigma[s] + 1e-9);
        }
    }

    #[test]
    fn lower_bound_is_sound_and_dual(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 3..=8, 2..=3);
        let n = mdp.n_states();
        let k = r.gen_range(1..=n);
        let basis = random_basis(&mut r, n, k);
        let problem = DradpProblem::tabular(&mdp, &basis).unwrap();
        let pol = random_policy(&mut r, n, mdp.n_actions());
        let inner = evaluate_lower_bound_detailed(&problem, &pol).unwrap();
        let truth = expected_return(&mdp, &pol).unwrap();
        prop_assert!(inner.value <= truth + 1e-7);
        // the constant feature forces unit mass
        prop_assert!((inner.u.sum() - 1.0).abs() <= 1e-7);
        let saddle = evaluate_lower_bound_saddle(&problem, &pol).unwrap();
        prop_assert!((saddle - inner.value).abs() <= 1e-6 * (1.0 + inner.value.abs()));
    }

    #[test]
    fn tabular_features_are_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 2..=8, 1..=3);
        let problem = DradpProblem::tabular(&mdp, &FeatureBasis::tabular(mdp.n_states()).unwrap()).unwrap();
        let pol = random_deterministic(&mut r, mdp.n_states(), mdp.n_actions());
        let lb = evaluate_lower_bound(&problem, &pol).unwrap();
        let truth = expected_return(&mdp, &pol).unwrap();
        prop_assert!((lb - truth).abs() <= 1e-7 * (1.0 + truth.abs()));
    }

    #[test]
    fn smoothness_rows_tighten_but_stay_sound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 3..=7, 2..=3);
        let n = mdp.n_states();
        let k = r.gen_range(1..=n);
        let basis = random_basis(&mut r, n, k);
        let problem = DradpProblem::tabular(&mdp, &basis).unwrap();
        let (c, mu) = concentration_coefficient(&mdp);
        let smooth = build_smooth_problem(&problem, c, &mu).unwrap();
        let pol = random_policy(&mut r, n, mdp.n_actions());
        let plain = evaluate_lower_bound(&problem, &pol).unwrap();
        let tight = evaluate_lower_bound(&smooth, &pol).unwrap();
        let truth = expected_return(&mdp, &pol).unwrap();
        prop_assert!(plain <= tight + 1e-7);
        prop_assert!(tight <= truth + 1e-7);
        let saddle = evaluate_lower_bound_saddle(&smooth, &pol).unwrap();
        prop_assert!((saddle - tight).abs() <= 1e-6 * (1.0 + tight.abs()));
    }

    #[test]
    fn alp_values_dominate_the_optimum(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 2..=10, 1..=3);
        let n = mdp.n_states();
        let k = r.gen_range(1..=n);
        let basis = random_basis(&mut r, n, k);
        let problem = DradpProblem::tabular(&mdp, &basis).unwrap();
        let alp = alp_solve(&problem, None).unwrap();
        let v_star = value_iteration(&mdp, DEFAULT_VI_TOL, DEFAULT_VI_MAX_ITERS).unwrap().values;
        prop_assert!((0..n).all(|s| alp.values[s] >= v_star[s] - 1e-7));
    }

    #[test]
    fn lp_duals_certify_optimality(seed in any::<u64>()) {
        let mut r = rng(seed);
        let lp = random_bounded_lp(&mut r, 6, 8);
        let sol = lp.solve().unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!(lp.is_feasible(&sol.x, 1e-7));
        // cost = A'y + d with d supported on variables at a bound
        let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
        let mut dual = 0.0;
        for (i, &y) in sol.duals.iter().enumerate() {
            let ok = match lp.kinds[i] {
                RowKind::Le => sign * y <= 1e-9,
                RowKind::Ge => sign * y >= -1e-9,
                RowKind::Eq => true,
            };
            prop_assert!(ok, "dual sign on row {}", i);
            dual += y * lp.rhs[i];
        }
        for j in 0..lp.n_vars() {
            let rc: f64 = lp.cost[j] - (0..lp.n_rows()).map(|i| lp.rows[i][j] * sol.duals[i]).sum::<f64>();
            prop_assert!((rc - sol.reduced_costs[j]).abs() <= 1e-7);
            dual += rc * sol.x[j];
        }
        prop_assert!((dual - sol.objective).abs() <= 1e-6 * (1.0 + sol.objective.abs()));
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn lp_matches_vertex_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let lp = random_bounded_lp(&mut r, 5, 6);
        let sol = lp.solve().unwrap();
        let oracle = vertex_enumeration(&lp).expect("boxed and feasible");
        prop_assert!((sol.objective - oracle).abs() <= 1e-8 * (1.0 + oracle.abs()));
    }

    #[test]
    fn branch_and_bound_matches_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let milp = random_binary_program(&mut r, 10);
        let sol = branch_and_bound(&milp, 60_000, 0.0).unwrap();
        match binary_enumeration(&milp) {
            Some(best) => {
                prop_assert_eq!(sol.status, MilpStatus::Optimal);
                prop_assert!((sol.objective.unwrap() - best).abs() <= 1e-9);
            }
            None => prop_assert_eq!(sol.status, MilpStatus::Infeasible),
        }
        let better = |a: f64, b: f64| if milp.lp.sense == Sense::Minimize { a <= b + 1e-9 } else { a >= b - 1e-9 };
        for w in sol.incumbent_trace.windows(2) {
            prop_assert!(better(w[1], w[0]));
        }
        for w in sol.bound_trace.windows(2) {
            prop_assert!(better(w[0], w[1]));
        }
    }

    #[test]
    fn solved_policy_is_greedy_and_complementary(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 3..=5, 2..=2);
        let n = mdp.n_states();
        let k = r.gen_range(1..=n);
        let basis = random_basis(&mut r, n, k);
        let problem = DradpProblem::tabular(&mdp, &basis).unwrap();
        let sol = solve_with(&problem, &SolveOptions::new(60_000, 1e-9)).unwrap();
        let lb = evaluate_lower_bound(&problem, &sol.policy.to_randomized(mdp.n_actions())).unwrap();
        prop_assert!((sol.milp_objective - lb).abs() <= 1e-5 * (1.0 + lb.abs()));
        prop_assert!(sol.complementarity() <= 1e-6);
        let q = q_values(&mdp, &basis.values(&sol.lambda1)).unwrap();
        for s in 0..n {
            let best = q.row(s).max();
            prop_assert!(q[(s, sol.policy.action(s))] >= best - 1e-6 * (1.0 + best.abs()));
        }
        let truth = expected_return(&mdp, &sol.policy.to_randomized(mdp.n_actions())).unwrap();
        prop_assert!(sol.objective <= truth + 1e-7);
    }

    #[test]
    fn api_is_deterministic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 3..=6, 2..=3);
        let n = mdp.n_states();
        let k = r.gen_range(1..=n);
        let basis = random_basis(&mut r, n, k);
        let domain = TabularDomain::new(&mdp, &basis);
        let samples = collect_samples(&domain, 10, 20, seed);
        let a = api_solve(&samples, &basis, mdp.gamma(), &ApiConfig::default(), seed).unwrap();
        let b = api_solve(&samples, &basis, mdp.gamma(), &ApiConfig::default(), seed).unwrap();
        prop_assert_eq!(a.policy, b.policy);
        prop_assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn full_information_samples_match_the_model(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (mdp, basis) = deterministic_instance(&mut r);
        let n = mdp.n_states();
        let m = mdp.n_actions();
        let samples = exhaustive_samples(&mdp, &basis);
        let sampled = build_sampled_problem(&samples, mdp.gamma(), TauPolicy::Auto).unwrap();
        prop_assert_eq!(sampled.n_states(), n);
        prop_assert_eq!(sampled.n_pairs(), n * m);
        let tabular = DradpProblem::tabular(&mdp, &basis).unwrap();
        let pol = random_policy(&mut r, n, m);
        let a = evaluate_lower_bound(&sampled, &pol).unwrap();
        let b = evaluate_lower_bound(&tabular, &pol).unwrap();
        prop_assert!((a - b).abs() <= 1e-7 * (1.0 + b.abs()), "{} vs {}", a, b);
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn policy_operators_are_monotone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 2..=8, 1..=3);
        let n = mdp.n_states();
        let pol = random_policy(&mut r, n, mdp.n_actions());
        let y = DVector::from_fn(n, |_, _| r.gen_range(-5.0..5.0));
        let x = &y + DVector::from_fn(n, |_, _| r.gen_range(0.0..2.0));
        let (p, _) = policy_transition(&mdp, &pol).unwrap();
        prop_assert!((&p * &x - &p * &y).min() >= -1e-12);
        let resolvent = (DMatrix::identity(n, n) - &p * mdp.gamma()).try_inverse().unwrap();
        prop_assert!((&resolvent * &x - &resolvent * &y).min() >= -1e-9);
    }

    #[test]
    fn supersolutions_dominate(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mdp = random_mdp_sized(&mut r, 2..=8, 1..=3);
        let n = mdp.n_states();
        let v_star = value_iteration(&mdp, DEFAULT_VI_TOL, DEFAULT_VI_MAX_ITERS).unwrap().values;
        // lifting any v by max(Bv - v)_+ / (1 - gamma) makes it a supersolution
        let w = DVector::from_fn(n, |_, _| r.gen_range(-5.0..5.0));
        let lift = (bellman_apply(&mdp, &w).unwrap() - &w).max().max(0.0) / (1.0 - mdp.gamma());
        let v = w.add_scalar(lift);
        prop_assert!((&v - bellman_apply(&mdp, &v).unwrap()).min() >= -1e-9);
        prop_assert!((&v - &v_star).min() >= -1e-8);
    }
}

/// Deterministic dynamics, uniform start and a basis whose rows are
/// pairwise distinct, so single samples carry the full model.
fn deterministic_instance<R: Rng>(r: &mut R) -> (TabularMdp, FeatureBasis) {
    let n = r.gen_range(2..=6);
    let m = r.gen_range(1..=3);
    let transition = (0..m)
        .map(|_| {
            let mut p = DMatrix::zeros(n, n);
            for s in 0..n {
                p[(s, r.gen_range(0..n))] = 1.0;
            }
            p
        })
        .collect();
    let reward = DMatrix::from_fn(n, m, |_, _| r.gen_range(-1.0..1.0));
    let mdp = TabularMdp::new(transition, reward, r.gen_range(0.5..0.95), DVector::from_element(n, 1.0 / n as f64))
        .unwrap();
    let k = r.gen_range(2..=n.max(2));
    let basis = random_basis(r, n, k);
    (mdp, basis)
}

/// One transition per pair in state order and one initial draw per state.
fn exhaustive_samples(mdp: &TabularMdp, basis: &FeatureBasis) -> SampleSet {
    let n = mdp.n_states();
    let row = |s: usize| basis.matrix().row(s).iter().copied().collect::<Vec<f64>>();
    let mut set = SampleSet::default();
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let next = (0..n).find(|&t| mdp.transition(a)[(s, t)] == 1.0).unwrap();
            set.transitions.push(Transition {
                episode: s,
                step: a,
                features: row(s),
                action: a,
                reward: mdp.reward()[(s, a)],
                next_features: row(next),
                terminal: false,
            });
        }
        set.initial_states.push(InitialState { episode: s, features: row(s) });
    }
    set
}
