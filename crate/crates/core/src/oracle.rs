//! Exact optimum of a multistage instance by dynamic programming over the
//! per-stage item sets. The objective only couples consecutive stages, so
//! the best sequence ending in set `S` at stage `t` depends only on the best
//! sequences ending at stage `t - 1`.

use serde::Serialize;

use crate::error::{GmkError, Result};
use crate::instance::{check_feasible, GmkInstance, MultistageSolution, SubInstanceView};
use crate::packing::pack_assignment;
use crate::submodular::ItemSet;

/// Default budget on DP transitions (pairs of feasible sets on consecutive stages).
pub const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;
const MAX_ORACLE_ITEMS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub value: i64,
    #[serde(skip)]
    pub solution: MultistageSolution,
}

fn mask_set(mask: usize) -> ItemSet {
    (0..usize::BITS as usize).filter(|b| mask & (1 << b) != 0).collect()
}

/// Stage sets that pack into every constraint of local stage `k`.
fn feasible_masks(view: &SubInstanceView<'_>, k: usize, n: usize) -> Vec<usize> {
    let stage = view.stage_local(k);
    (0..1usize << n)
        .filter(|&m| {
            let set = mask_set(m);
            stage.mkcs.iter().all(|mkc| pack_assignment(mkc, &set, None).is_packed())
        })
        .collect()
}

pub fn brute_force_gmk(inst: &GmkInstance, budget: u64) -> Result<OracleResult> {
    brute_force_view(&inst.full_view(), budget)
}

/// Exact optimum of the window `view`. Among optimal sequences the witness
/// takes the smallest final set (as a bitmask), then the smallest
/// predecessor at each step back.
pub fn brute_force_view(view: &SubInstanceView<'_>, budget: u64) -> Result<OracleResult> {
    let n = view.num_items();
    let h = view.horizon();
    if n > MAX_ORACLE_ITEMS {
        return Err(GmkError::BudgetExceeded {
            what: format!("oracle over {n} items"),
            budget,
            hint: format!("the oracle handles at most {MAX_ORACLE_ITEMS} items"),
        });
    }
    let states = 1u64 << n;
    let needed = (h as u64).saturating_mul(states.saturating_mul(states));
    if needed > budget {
        return Err(GmkError::BudgetExceeded {
            what: format!("oracle over {n} items and {h} stages ({needed} transitions)"),
            budget,
            hint: "raise --budget or shrink the instance".into(),
        });
    }

    let feasible: Vec<Vec<usize>> = (1..=h).map(|k| feasible_masks(view, k, n)).collect();
    let sets: Vec<ItemSet> = (0..states as usize).map(mask_set).collect();
    let empty = ItemSet::new();

    // best[k][pos] and back[k][pos] index into feasible[k]
    let mut best: Vec<Vec<i64>> = Vec::with_capacity(h);
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(h);
    for k in 1..=h {
        let profit = &view.stage_local(k).profit;
        let mut row = Vec::with_capacity(feasible[k - 1].len());
        let mut from = Vec::with_capacity(feasible[k - 1].len());
        for &cur in &feasible[k - 1] {
            let p = profit.eval(&sets[cur]);
            if k == 1 {
                row.push(view.step_value(1, &empty, &sets[cur], p));
                from.push(0);
                continue;
            }
            let mut top: Option<(i64, usize)> = None;
            for (pos, &prev) in feasible[k - 2].iter().enumerate() {
                let v = best[k - 2][pos] + view.step_value(k, &sets[prev], &sets[cur], p);
                if top.is_none_or(|(b, _)| v > b) {
                    top = Some((v, pos));
                }
            }
            let (v, pos) = top.expect("the empty set is always feasible");
            row.push(v);
            from.push(pos);
        }
        best.push(row);
        back.push(from);
    }

    let last = &feasible[h - 1];
    let (value, mut pos) = last
        .iter()
        .enumerate()
        .map(|(pos, &m)| (best[h - 1][pos] - view.exit_cost(&sets[m]), pos))
        .fold(None, |acc: Option<(i64, usize)>, (v, p)| match acc {
            Some((b, _)) if b >= v => acc,
            _ => Some((v, p)),
        })
        .expect("the empty set is always feasible");

    let mut chosen = vec![ItemSet::new(); h];
    for k in (1..=h).rev() {
        chosen[k - 1] = sets[feasible[k - 1][pos]].clone();
        pos = back[k - 1][pos];
    }
    let solution = solution_from_sets(view, chosen)?;
    debug_assert_eq!(view.evaluate_unchecked(&solution.sets), value);
    Ok(OracleResult { value, solution })
}

/// Completes stage sets into a solution by packing each constraint.
pub fn solution_from_sets(view: &SubInstanceView<'_>, sets: Vec<ItemSet>) -> Result<MultistageSolution> {
    let mut assignments = Vec::with_capacity(sets.len());
    for (k, set) in sets.iter().enumerate() {
        let stage = view.stage_local(k + 1);
        let mut row = Vec::with_capacity(stage.mkcs.len());
        for (j, mkc) in stage.mkcs.iter().enumerate() {
            match pack_assignment(mkc, set, None).assignment {
                Some(a) => row.push(a),
                None => {
                    return Err(GmkError::input(format!(
                        "S_{} does not pack into constraint j={}",
                        view.global(k + 1),
                        j + 1
                    )))
                }
            }
        }
        assignments.push(row);
    }
    let sol = MultistageSolution { sets, assignments };
    let report = check_feasible(view, &sol);
    if !report.is_ok() {
        return Err(GmkError::Contract(format!("packed solution failed the feasibility check: {report}")));
    }
    Ok(sol)
}
