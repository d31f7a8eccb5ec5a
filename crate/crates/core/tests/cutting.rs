mod common;

use common::{literal_optimum, random_instance, random_submodular};
use gmk_core::cutting::{
    combine_cut_solutions, cut_instances, cut_points_with_spacing, solve_bounded_horizon, solve_general, CutPointSet,
    SchemeParams, SolveConfig, SubSolver,
};
use gmk_core::generators::{gen_random, RandomParams, Range};
use gmk_core::instance::{Profit, StageTable};
use gmk_core::oracle::{brute_force_gmk, solution_from_sets, DEFAULT_ORACLE_BUDGET};
use gmk_core::{GmkError, GmkInstance, ItemSet};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config() -> SolveConfig {
    SolveConfig::default()
}

/// Unit change costs and profits in `1..=5`, so the ratio is at most 1.
fn unit_cost_params(items: usize, horizon: usize) -> RandomParams {
    RandomParams {
        items,
        horizon,
        dimension: 1,
        bins_per_mkc: 1,
        weight: Range::new(1, 4),
        capacity: Range::new(2, 8),
        profit: Range::new(1, 5),
        gain: Range::new(0, 3),
        cost: Range::new(1, 1),
        target_phi: None,
        ..RandomParams::default()
    }
}

#[test]
fn shifted_grids_share_only_endpoints() {
    for t in 1..=60 {
        for m in 1..=10 {
            let grids: Vec<CutPointSet> = (1..=m).map(|j| cut_points_with_spacing(t, m, j).unwrap()).collect();
            for a in 0..m {
                for b in a + 1..m {
                    assert!(grids[a].interior().iter().all(|u| !grids[b].interior().contains(u)), "T={t} m={m}");
                }
            }
        }
    }
}

#[test]
fn windows_tile_the_horizon() {
    let inst = random_instance(1, 12, 1, 1, 0);
    let cuts = CutPointSet::new(vec![1, 3, 6, 9, 13]).unwrap();
    let views = cut_instances(&inst, &cuts).unwrap();
    let spans: Vec<(usize, usize)> = views.iter().map(|v| (v.first, v.last)).collect();
    assert_eq!(spans, vec![(1, 2), (3, 5), (6, 8), (9, 12)]);
    assert_eq!(cut_instances(&inst, &CutPointSet::trivial(12)).unwrap().len(), 1);
    assert!(cut_instances(&inst, &CutPointSet::trivial(11)).is_err());
}

fn random_cuts(rng: &mut ChaCha8Rng, t: usize) -> CutPointSet {
    let mut points = vec![1];
    points.extend((2..=t).filter(|_| rng.gen_bool(0.35)));
    points.push(t + 1);
    CutPointSet::new(points).unwrap()
}

/// Picks a random packable set per stage of each window.
fn random_parts(rng: &mut ChaCha8Rng, inst: &GmkInstance, cuts: &CutPointSet) -> Vec<gmk_core::MultistageSolution> {
    cut_instances(inst, cuts)
        .unwrap()
        .iter()
        .map(|view| {
            let sets: Vec<ItemSet> = (view.first..=view.last)
                .map(|t| {
                    let options: Vec<ItemSet> = (0..1usize << inst.items.len())
                        .map(|m| common::mask_set(m, inst.items.len()))
                        .filter(|s| inst.stages[t - 1].mkcs.iter().all(|mkc| common::set_packs(mkc, s)))
                        .collect();
                    options[rng.gen_range(0..options.len())].clone()
                })
                .collect();
            solution_from_sets(view, sets).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn windows_partition_random_cuts(seed in 0u64..10_000, t in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(1, t, 1, 1, seed);
        let cuts = random_cuts(&mut rng, t);
        let views = cut_instances(&inst, &cuts).unwrap();
        let mut next = 1;
        for v in &views {
            prop_assert_eq!(v.first, next);
            next = v.last + 1;
        }
        prop_assert_eq!(next, t + 1);
    }

    #[test]
    fn combined_value_is_at_least_the_parts(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = rng.gen_range(1..=8);
        let inst = random_instance(3, t, 2, 2, seed);
        let cuts = random_cuts(&mut rng, t);
        let parts = random_parts(&mut rng, &inst, &cuts);
        let combined = combine_cut_solutions(&inst, &cuts, &parts).unwrap();
        prop_assert!(combined.value >= combined.window_values.iter().sum::<i64>());
        prop_assert!(gmk_core::check_feasible(&inst.full_view(), &combined.solution).is_ok());
    }
}

#[test]
fn single_part_combines_to_itself() {
    let inst = random_instance(2, 4, 1, 1, 3);
    let opt = brute_force_gmk(&inst, DEFAULT_ORACLE_BUDGET).unwrap();
    let combined = combine_cut_solutions(&inst, &CutPointSet::trivial(4), std::slice::from_ref(&opt.solution)).unwrap();
    assert_eq!(combined.value, opt.value);
    assert_eq!(combined.bonus(), 0);
}

#[test]
fn seam_saves_exit_and_entry_costs() {
    // one item packed in both stages, cut between them
    let mut inst = random_instance(1, 2, 1, 1, 0);
    for st in &mut inst.stages {
        st.mkcs[0].weights = vec![1];
        st.mkcs[0].bins[0].capacity = 1;
        st.profit = Profit::Modular(vec![4]);
    }
    inst.gain_plus = StageTable::from_fn(1, 2, 2, |_, _| 2);
    inst.gain_minus = StageTable::zeros(1, 2, 2);
    inst.cost_plus = StageTable::from_fn(1, 1, 2, |_, _| 1);
    inst.cost_minus = StageTable::from_fn(1, 1, 2, |_, _| 3);
    let cuts = CutPointSet::new(vec![1, 2, 3]).unwrap();
    let views = cut_instances(&inst, &cuts).unwrap();
    let parts: Vec<_> = views.iter().map(|v| solution_from_sets(v, vec![[0].into()]).unwrap()).collect();
    let combined = combine_cut_solutions(&inst, &cuts, &parts).unwrap();
    // each window: 4 - 1 - 3 = 0; glued: 8 + 2 - 1 - 3 = 6
    assert_eq!(combined.window_values, vec![0, 0]);
    assert_eq!(combined.value, 6);
    assert_eq!(combined.bonus(), 3 + 1 + 2);
}

#[test]
fn infeasible_part_is_rejected() {
    let inst = random_instance(2, 2, 1, 1, 5);
    let cuts = CutPointSet::new(vec![1, 2, 3]).unwrap();
    let views = cut_instances(&inst, &cuts).unwrap();
    let mut parts: Vec<_> = views.iter().map(|v| solution_from_sets(v, vec![ItemSet::new()]).unwrap()).collect();
    parts[1].sets[0].insert(0);
    assert!(matches!(combine_cut_solutions(&inst, &cuts, &parts), Err(GmkError::Infeasible(_))));
}

#[test]
fn bounded_horizon_matches_oracles() {
    for seed in 0..40 {
        for inst in [random_instance(3, 3, 2, 2, seed), random_submodular(2, 3, 2, seed)] {
            let view = inst.full_view();
            let opt = literal_optimum(&inst);
            for solver in [SubSolver::Exact, SubSolver::Dp] {
                let sol = solve_bounded_horizon(&view, solver, &config()).unwrap();
                assert_eq!(view.evaluate(&sol.sets).unwrap(), opt, "seed {seed} {solver:?}");
            }
            let greedy = solve_bounded_horizon(&view, SubSolver::Greedy, &config()).unwrap();
            assert!(view.evaluate(&greedy.sets).unwrap() <= opt);
        }
    }
}

#[test]
fn short_horizons_bypass_cutting() {
    let params = SchemeParams::new(Ratio::new(1, 5), 1).unwrap();
    for seed in 0..10 {
        let inst = gen_random(&unit_cost_params(3, 6), seed).unwrap();
        let out = solve_general(&inst, &params, SubSolver::Exact, &config()).unwrap();
        assert!(out.report.bypassed);
        let direct = solve_bounded_horizon(&inst.full_view(), SubSolver::Exact, &config()).unwrap();
        assert_eq!(out.solution, direct);
    }
}

#[test]
fn cutting_regime_keeps_the_guarantee() {
    // epsilon = 6/25 and phi = 1 give a grid spacing of 18, so T = 40 is cut
    let params = SchemeParams::new(Ratio::new(6, 25), 1).unwrap();
    assert_eq!(params.mu_inv, 18);
    let mut cut_shifts = 0;
    for seed in 0..6 {
        let inst = gen_random(&unit_cost_params(3, 40), seed).unwrap();
        let out = solve_general(&inst, &params, SubSolver::Dp, &config()).unwrap();
        assert!(!out.report.bypassed);
        cut_shifts += out.report.shifts.iter().filter(|s| !s.cut_points.interior().is_empty()).count();
        assert_eq!(inst.full_view().evaluate(&out.solution.sets).unwrap(), out.value);
        let opt = brute_force_gmk(&inst, DEFAULT_ORACLE_BUDGET).unwrap().value;
        assert!(out.value * 25 >= opt * 19, "seed {seed}: {} < 0.76 * {opt}", out.value);
        for s in &out.report.shifts {
            assert!(s.value >= s.window_values.iter().sum::<i64>());
        }
    }
    assert!(cut_shifts > 0);
}

#[test]
fn ratio_violation_names_the_item() {
    let params = SchemeParams::new(Ratio::new(1, 5), 1).unwrap();
    let mut inst = gen_random(&unit_cost_params(2, 3), 0).unwrap();
    inst.cost_plus.set(1, 2, 50);
    match solve_general(&inst, &params, SubSolver::Exact, &config()) {
        Err(GmkError::PhiBound { item, cost_stage, .. }) => {
            assert_eq!(item, "i2");
            assert_eq!(cost_stage, 2);
        }
        other => panic!("expected a ratio error, got {other:?}"),
    }
}

#[test]
fn general_solver_is_deterministic() {
    let params = SchemeParams::new(Ratio::new(6, 25), 1).unwrap();
    let inst = gen_random(&unit_cost_params(2, 38), 3).unwrap();
    let a = solve_general(&inst, &params, SubSolver::Dp, &config()).unwrap();
    let b = solve_general(&inst, &params, SubSolver::Dp, &config()).unwrap();
    assert_eq!(a.solution, b.solution);
    assert_eq!(a.report.selected_j, b.report.selected_j);
}

#[test]
fn submodular_instances_run_through_the_same_scheme() {
    let params = SchemeParams::new(Ratio::new(1, 5), 1).unwrap();
    for seed in 0..10 {
        let inst = random_submodular(2, 3, 1, seed);
        let out = solve_general(&inst, &params, SubSolver::Exact, &config()).unwrap();
        assert_eq!(out.value, literal_optimum(&inst));
    }
}
