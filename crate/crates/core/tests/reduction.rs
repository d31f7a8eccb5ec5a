mod common;

use common::{feasible_sequences, literal_optimum, random_instance, random_submodular, reduced_optimum};
use gmk_core::generators::{gen_random, RandomParams, Range};
use gmk_core::mkcp::{solve_mkcp_exact, MkcpConfig};
use gmk_core::oracle::solution_from_sets;
use gmk_core::reduction::{
    lift_solution, lower_solution, reduce_modular, reduce_submodular, verify_reduced_solution, ReducedInstance, Schedule,
};
use gmk_core::submodular::{check_monotone_submodular, extend_function, CoverageFunction, SetFunction, SetFunctionOracle};
use gmk_core::{GmkInstance, ItemSet, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct ReducedObjective<'a>(&'a ReducedInstance);

impl SetFunction for ReducedObjective<'_> {
    fn ground_size(&self) -> usize {
        self.0.num_elements()
    }

    fn eval(&self, set: &ItemSet) -> i64 {
        self.0.value(&set.iter().copied().collect::<Vec<_>>())
    }
}

fn reduce(inst: &GmkInstance) -> ReducedInstance {
    match inst.variant {
        Variant::Modular => reduce_modular(inst).unwrap(),
        Variant::Submodular => reduce_submodular(inst).unwrap(),
    }
}

/// Lowers every feasible solution, checks values, verifies, lifts back.
fn check_mappings(inst: &GmkInstance) {
    let view = inst.full_view();
    let red = reduce(inst);
    for sets in feasible_sequences(inst, 1, inst.horizon) {
        let sol = solution_from_sets(&view, sets.clone()).unwrap();
        let f = view.evaluate(&sol.sets).unwrap();
        let low = lower_solution(&view, &red, &sol).unwrap();
        assert!(verify_reduced_solution(&red, &low.solution).is_ok());
        let reduced_value = red.value(&low.solution.chosen);
        assert_eq!(reduced_value, f + low.value_increase);
        if low.substituted.is_empty() {
            assert_eq!(low.value_increase, 0);
        } else {
            assert!(low.value_increase > 0);
        }
        let lifted = lift_solution(&view, &red, &low.solution).unwrap();
        assert!(gmk_core::check_feasible(&view, &lifted).is_ok());
        assert_eq!(view.evaluate(&lifted.sets).unwrap(), reduced_value);
        if low.substituted.is_empty() {
            assert_eq!(lifted.sets, sol.sets);
        }
    }
}

#[test]
fn mappings_preserve_value_on_random_modular_instances() {
    for seed in 0..40 {
        check_mappings(&random_instance(2, 3, 2, 2, seed));
        check_mappings(&random_instance(3, 2, 1, 2, seed));
    }
}

#[test]
fn mappings_preserve_value_on_random_submodular_instances() {
    for seed in 0..20 {
        check_mappings(&random_submodular(2, 3, 2, seed));
    }
}

#[test]
fn reduced_optimum_equals_multistage_optimum() {
    for seed in 0..30 {
        for inst in [random_instance(2, 2, 2, 2, seed), random_instance(3, 2, 1, 1, seed), random_submodular(2, 2, 1, seed)] {
            let red = reduce(&inst);
            let opt = literal_optimum(&inst);
            assert_eq!(reduced_optimum(&red), opt, "seed {seed}");
            let exact = solve_mkcp_exact(&red, &MkcpConfig::default()).unwrap();
            assert_eq!(red.value(&exact.chosen), opt, "seed {seed}");
        }
    }
}

#[test]
fn reverse_round_trip_keeps_schedules() {
    for seed in 0..30 {
        let inst = random_instance(3, 3, 2, 2, seed);
        let view = inst.full_view();
        let red = reduce(&inst);
        let rsol = solve_mkcp_exact(&red, &MkcpConfig::default()).unwrap();
        let lifted = lift_solution(&view, &red, &rsol).unwrap();
        let low = lower_solution(&view, &red, &lifted).unwrap();
        let schedules = |chosen: &[usize]| chosen.iter().map(|&e| red.elements[e]).collect::<Vec<_>>();
        assert_eq!(schedules(&low.solution.chosen), schedules(&rsol.chosen));
        assert_eq!(red.value(&low.solution.chosen), red.value(&rsol.chosen));
    }
}

#[test]
fn no_elements_dropped_without_costs() {
    for seed in 0..10 {
        let mut inst = random_instance(2, 3, 1, 1, seed);
        inst.cost_plus = inst.cost_plus.map(|_| 0);
        inst.cost_minus = inst.cost_minus.map(|_| 0);
        assert_eq!(reduce_modular(&inst).unwrap().num_elements(), 2 * 8);
    }
}

#[test]
fn empty_lowering_earns_the_g_minus_mass() {
    let inst = random_instance(3, 3, 1, 1, 4);
    let view = inst.full_view();
    let red = reduce_modular(&inst).unwrap();
    let sol = solution_from_sets(&view, inst.empty_sets()).unwrap();
    let low = lower_solution(&view, &red, &sol).unwrap();
    assert!(low.solution.chosen.iter().all(|&e| red.elements[e].schedule == Schedule(0)));
    assert_eq!(red.value(&low.solution.chosen), view.empty_value());
}

#[test]
fn infeasible_inputs_are_refused() {
    let inst = random_instance(2, 2, 1, 1, 1);
    let view = inst.full_view();
    let red = reduce_modular(&inst).unwrap();
    let mut sol = solution_from_sets(&view, inst.empty_sets()).unwrap();
    sol.sets[0].insert(0);
    assert!(lower_solution(&view, &red, &sol).is_err());

    let mut rsol = red.empty_solution();
    rsol.chosen = red.groups[0][..2].to_vec();
    assert!(lift_solution(&view, &red, &rsol).is_err());
}

#[test]
fn submodular_objective_is_monotone_submodular() {
    for seed in 0..15 {
        // 2 items over 2 stages and 1 item over 3 stages both give 8 elements
        for inst in [random_submodular(2, 2, 1, seed), random_submodular(1, 3, 1, seed)] {
            let red = reduce_submodular(&inst).unwrap();
            assert!(red.num_elements() <= 10);
            assert_eq!(red.value(&[]), 0);
            let ground: Vec<usize> = (0..red.num_elements()).collect();
            let report = check_monotone_submodular(&ReducedObjective(&red), &ground);
            assert!(report.exhaustive && report.is_clean(), "{report:?}");
        }
    }
}

#[test]
fn full_schedule_element_value() {
    let inst = random_submodular(2, 3, 1, 9);
    let red = reduce_submodular(&inst).unwrap();
    let e = red.find(1, Schedule::full(3)).unwrap();
    let single: ItemSet = [1].into();
    let expected: i64 = inst.stages.iter().map(|s| s.profit.eval(&single)).sum::<i64>()
        + (2..=3).map(|t| inst.gain_plus.get(1, t)).sum::<i64>();
    assert_eq!(red.value(&[e]), expected);
}

fn random_coverage(rng: &mut ChaCha8Rng, items: usize) -> SetFunctionOracle {
    let size = rng.gen_range(1..=5);
    SetFunctionOracle::Coverage(CoverageFunction {
        universe: (0..size).map(|u| format!("u{u}")).collect(),
        weights: (0..size).map(|_| rng.gen_range(0..=6)).collect(),
        covers: (0..items)
            .map(|_| {
                let mut c: Vec<usize> = (0..size).filter(|_| rng.gen_bool(0.4)).collect();
                c.dedup();
                c
            })
            .collect(),
    })
}

#[test]
fn stage_extensions_are_monotone_submodular() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let items = rng.gen_range(1..=3);
        let f = random_coverage(&mut rng, items);
        let inst = random_submodular(items, 3, 1, rng.gen());
        let red = reduce_submodular(&inst).unwrap();
        // a random ground of at most 10 elements
        let mut ground: Vec<usize> = (0..red.num_elements()).filter(|_| rng.gen_bool(0.5)).collect();
        ground.truncate(10);
        for t in 1..=3 {
            let g = extend_function(&f, t, &red.elements);
            let report = check_monotone_submodular(&g, &ground);
            assert!(report.exhaustive && report.is_clean(), "{report:?}");
        }
    }
}

#[test]
fn reduced_json_round_trip_and_weight_rule() {
    let params = RandomParams { items: 2, horizon: 3, dimension: 2, bins_per_mkc: 2, weight: Range::new(1, 3), ..RandomParams::default() };
    for seed in 0..10 {
        let inst = gen_random(&params, seed).unwrap();
        let red = reduce_modular(&inst).unwrap();
        assert_eq!(ReducedInstance::from_json(&red.to_json()).unwrap(), red);
        assert_eq!(red.constraints.len(), 3 * inst.dimension);
        for c in &red.constraints {
            let stage = &inst.stages[c.stage - 1];
            assert_eq!(c.padding, c.index > stage.mkcs.len());
            for (e, &w) in red.elements.iter().zip(&c.mkc.weights) {
                let expected = if c.padding || !e.schedule.contains(c.stage) {
                    0
                } else {
                    stage.mkcs[c.index - 1].weights[e.item]
                };
                assert_eq!(w, expected);
            }
        }
    }
}
