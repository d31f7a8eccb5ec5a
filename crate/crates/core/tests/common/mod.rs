//! Independent reference implementations used as oracles by the integration
//! tests. Nothing here calls the library's objective, packing or DP code.

#![allow(dead_code)]

use gmk_core::generators::{gen_random, RandomParams, Range};
use gmk_core::instance::{Mkc, Profit, Variant};
use gmk_core::reduction::ReducedInstance;
use gmk_core::submodular::SetFunction;
use gmk_core::{GmkInstance, ItemSet};

/// Objective written out term by term over the window `[first, last]`.
pub fn reference_objective(inst: &GmkInstance, first: usize, last: usize, sets: &[ItemSet]) -> i64 {
    assert_eq!(sets.len(), last - first + 1);
    let at = |t: usize| -> ItemSet {
        if t < first || t > last {
            ItemSet::new()
        } else {
            sets[t - first].clone()
        }
    };
    let n = inst.items.len();
    let mut total = 0;
    for t in first..=last {
        total += match &inst.stages[t - 1].profit {
            Profit::Modular(p) => at(t).iter().map(|&i| p[i]).sum::<i64>(),
            Profit::Oracle(f) => f.eval(&at(t)),
        };
    }
    for t in first + 1..=last {
        for i in 0..n {
            let (a, b) = (at(t - 1).contains(&i), at(t).contains(&i));
            if a && b {
                total += inst.gain_plus.get(i, t);
            }
            if !a && !b {
                total += inst.gain_minus.get(i, t);
            }
        }
    }
    if inst.variant == Variant::Modular {
        for t in first..=last {
            for &i in &at(t) {
                if !at(t - 1).contains(&i) {
                    total -= inst.cost_plus.get(i, t);
                }
                if !at(t + 1).contains(&i) {
                    total -= inst.cost_minus.get(i, t);
                }
            }
        }
    }
    total
}

/// Tries every map from members to bins.
pub fn packs_by_enumeration(weights: &[u64], caps: &[u64]) -> bool {
    let b = caps.len();
    if weights.is_empty() {
        return true;
    }
    if b == 0 {
        return false;
    }
    let total = (b as u64).pow(weights.len() as u32);
    (0..total).any(|mut code| {
        let mut load = vec![0u64; b];
        for &w in weights {
            load[(code % b as u64) as usize] += w;
            code /= b as u64;
        }
        load.iter().zip(caps).all(|(l, c)| l <= c)
    })
}

pub fn set_packs(mkc: &Mkc, set: &ItemSet) -> bool {
    let w: Vec<u64> = set.iter().map(|&i| mkc.weights[i]).collect();
    packs_by_enumeration(&w, &mkc.capacities())
}

pub fn mask_set(mask: usize, n: usize) -> ItemSet {
    (0..n).filter(|b| mask & (1 << b) != 0).collect()
}

/// Every sequence of stage sets that packs at every stage of `[first, last]`.
pub fn feasible_sequences(inst: &GmkInstance, first: usize, last: usize) -> Vec<Vec<ItemSet>> {
    let n = inst.items.len();
    let per_stage: Vec<Vec<ItemSet>> = (first..=last)
        .map(|t| {
            (0..1usize << n)
                .map(|m| mask_set(m, n))
                .filter(|s| inst.stages[t - 1].mkcs.iter().all(|mkc| set_packs(mkc, s)))
                .collect()
        })
        .collect();
    let mut out = vec![Vec::new()];
    for options in &per_stage {
        let mut next = Vec::with_capacity(out.len() * options.len());
        for prefix in &out {
            for s in options {
                let mut p = prefix.clone();
                p.push(s.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Optimum by literal enumeration of all feasible set sequences.
pub fn literal_optimum(inst: &GmkInstance) -> i64 {
    feasible_sequences(inst, 1, inst.horizon)
        .iter()
        .map(|s| reference_objective(inst, 1, inst.horizon, s))
        .max()
        .expect("the all-empty sequence is feasible")
}

/// Optimum of a reduced instance by enumerating one option (or none) per
/// item group and checking every constraint by enumeration.
pub fn reduced_optimum(red: &ReducedInstance) -> i64 {
    let mut best = i64::MIN;
    let mut pick = vec![0usize; red.groups.len()];
    loop {
        let chosen: Vec<usize> = pick
            .iter()
            .zip(&red.groups)
            .filter(|(&k, g)| k < g.len())
            .map(|(&k, g)| g[k])
            .collect();
        let fits = red.constraints.iter().all(|c| {
            let w: Vec<u64> = chosen.iter().map(|&e| c.mkc.weights[e]).collect();
            packs_by_enumeration(&w, &c.mkc.capacities())
        });
        if fits {
            best = best.max(red.value(&chosen));
        }
        // odometer over group options, the last option meaning "none"
        let mut g = 0;
        loop {
            if g == pick.len() {
                return best;
            }
            pick[g] += 1;
            if pick[g] <= red.groups[g].len() {
                break;
            }
            pick[g] = 0;
            g += 1;
        }
    }
}

pub fn small_params(items: usize, horizon: usize, dimension: usize, bins: usize) -> RandomParams {
    RandomParams {
        variant: Variant::Modular,
        items,
        horizon,
        dimension,
        bins_per_mkc: bins,
        weight: Range::new(0, 4),
        capacity: Range::new(0, 4),
        profit: Range::new(0, 5),
        gain: Range::new(0, 5),
        cost: Range::new(0, 5),
        target_phi: None,
    }
}

pub fn random_instance(items: usize, horizon: usize, dimension: usize, bins: usize, seed: u64) -> GmkInstance {
    gen_random(&small_params(items, horizon, dimension, bins), seed).expect("valid parameters")
}

pub fn random_submodular(items: usize, horizon: usize, bins: usize, seed: u64) -> GmkInstance {
    let params = RandomParams { variant: Variant::Submodular, ..small_params(items, horizon, 1, bins) };
    gen_random(&params, seed).expect("valid parameters")
}
