//! Solvers for reduced instances: an exact branch and bound over the
//! partition matroid and a greedy heuristic.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{GmkError, Result};
use crate::packing::{pack_assignment, pack_weights, PackStatus, GREEDY_PACK_BUDGET};
use crate::reduction::{verify_reduced_solution, ReducedInstance, ReducedSolution};
use crate::submodular::ItemSet;

pub const DEFAULT_EXACT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MkcpConfig {
    /// Search nodes allowed to the exact solver.
    pub exact_budget: u64,
    /// Nodes per packing call in greedy mode.
    pub pack_budget: u64,
}

impl Default for MkcpConfig {
    fn default() -> Self {
        MkcpConfig { exact_budget: DEFAULT_EXACT_BUDGET, pack_budget: GREEDY_PACK_BUDGET }
    }
}

/// Memoized exact packability of element sets, keyed by the multiset of
/// positive weights per constraint.
struct Packer<'a> {
    red: &'a ReducedInstance,
    memo: HashMap<(usize, Vec<u64>), bool>,
    budget: Option<u64>,
}

impl<'a> Packer<'a> {
    fn new(red: &'a ReducedInstance, budget: Option<u64>) -> Self {
        Packer { red, memo: HashMap::new(), budget }
    }

    fn fits(&mut self, chosen: &[usize]) -> bool {
        for (c, con) in self.red.constraints.iter().enumerate() {
            let mut weights: Vec<u64> = chosen.iter().map(|&e| con.mkc.weights[e]).filter(|&w| w > 0).collect();
            if weights.is_empty() {
                continue;
            }
            weights.sort_unstable_by(|a, b| b.cmp(a));
            let key = (c, weights);
            let ok = match self.memo.get(&key) {
                Some(&ok) => ok,
                None => {
                    let caps = con.mkc.capacities();
                    let (status, _, _) = pack_weights(&key.1, &caps, self.budget);
                    let ok = status == PackStatus::Packed;
                    self.memo.insert(key, ok);
                    ok
                }
            };
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Builds the witness assignment for a packable chosen set.
fn assemble(red: &ReducedInstance, mut chosen: Vec<usize>) -> Result<ReducedSolution> {
    chosen.sort_unstable();
    let set: ItemSet = chosen.iter().copied().collect();
    let mut assignments = Vec::with_capacity(red.constraints.len());
    for c in &red.constraints {
        let r = pack_assignment(&c.mkc, &set, None);
        match r.assignment {
            Some(a) => assignments.push(a),
            None => {
                return Err(GmkError::Contract(format!(
                    "chosen set does not pack at (t={}, j={})",
                    c.stage, c.index
                )))
            }
        }
    }
    let sol = ReducedSolution { chosen, assignments };
    let report = verify_reduced_solution(red, &sol);
    if !report.is_ok() {
        return Err(GmkError::Contract(format!("solver produced an invalid reduced solution: {report}")));
    }
    Ok(sol)
}

/// Per group, the elements that fit on their own, ordered by decreasing
/// singleton gain then increasing index.
fn candidates(red: &ReducedInstance, packer: &mut Packer<'_>) -> Vec<Vec<(usize, i64)>> {
    red.groups
        .iter()
        .map(|g| {
            let mut c: Vec<(usize, i64)> = g
                .iter()
                .filter(|&&e| packer.fits(&[e]))
                .map(|&e| (e, red.singleton_gain(e)))
                .collect();
            c.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            c
        })
        .collect()
}

struct BranchAndBound<'a, 'b> {
    red: &'a ReducedInstance,
    packer: &'b mut Packer<'a>,
    cands: Vec<Vec<(usize, i64)>>,
    /// Total capacity left per constraint, a relaxation of the bins.
    residual: Vec<u64>,
    chosen: Vec<usize>,
    best: Option<(i64, Vec<usize>)>,
    nodes: u64,
    budget: u64,
}

impl BranchAndBound<'_, '_> {
    fn fits_residual(&self, e: usize) -> bool {
        self.red.constraints.iter().zip(&self.residual).all(|(c, &r)| c.mkc.weights[e] <= r)
    }

    /// What groups `from..` can add when each may use all residual capacity.
    fn residual_rest(&self, from: usize) -> i64 {
        self.cands[from..]
            .iter()
            .map(|group| group.iter().find(|&&(e, _)| self.fits_residual(e)).map_or(0, |&(_, g)| g.max(0)))
            .sum()
    }

    fn take(&mut self, e: usize) {
        for (c, r) in self.red.constraints.iter().zip(self.residual.iter_mut()) {
            *r -= c.mkc.weights[e];
        }
        self.chosen.push(e);
    }

    fn untake(&mut self) {
        let e = self.chosen.pop().expect("an element was taken");
        for (c, r) in self.red.constraints.iter().zip(self.residual.iter_mut()) {
            *r += c.mkc.weights[e];
        }
    }

    fn beats(&self, bound: i64) -> bool {
        self.best.as_ref().is_none_or(|(b, _)| bound > *b)
    }

    fn run(&mut self, depth: usize, value: i64) -> Result<()> {
        if depth == self.cands.len() {
            if self.beats(value) {
                self.best = Some((value, self.chosen.clone()));
            }
            return Ok(());
        }
        // later groups can only lose capacity, so this bounds every option here
        let later = self.residual_rest(depth + 1);
        for k in 0..=self.cands[depth].len() {
            // the last option leaves the group empty
            let option = self.cands[depth].get(k).copied();
            let ub = option.map_or(0, |(_, g)| g.max(0));
            // options are sorted, and the empty option bounds like a gain of 0
            if !self.beats(value + ub + later) {
                break;
            }
            if let Some((e, _)) = option {
                if !self.fits_residual(e) {
                    continue;
                }
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(GmkError::BudgetExceeded {
                    what: "exact reduced-instance search".into(),
                    budget: self.budget,
                    hint: "raise --budget or use the greedy sub-solver".into(),
                });
            }
            match option {
                Some((e, _)) => {
                    self.take(e);
                    let outcome = if self.packer.fits(&self.chosen) {
                        let v = self.red.value(&self.chosen);
                        self.run(depth + 1, v)
                    } else {
                        Ok(())
                    };
                    self.untake();
                    outcome?;
                }
                None => self.run(depth + 1, value)?,
            }
        }
        Ok(())
    }
}

/// Maximum-value feasible solution. Among optima, the first one met in the
/// search order (groups by item, options by decreasing singleton gain then
/// element index) is returned.
pub fn solve_mkcp_exact(red: &ReducedInstance, config: &MkcpConfig) -> Result<ReducedSolution> {
    let mut packer = Packer::new(red, None);
    let cands = candidates(red, &mut packer);
    let residual = red.constraints.iter().map(|c| c.mkc.capacities().iter().sum()).collect();
    let base = red.value(&[]);
    let mut bb = BranchAndBound {
        red,
        packer: &mut packer,
        cands,
        residual,
        chosen: Vec::new(),
        best: None,
        nodes: 0,
        budget: config.exact_budget,
    };
    bb.run(0, base)?;
    let (_, chosen) = bb.best.expect("the all-empty option is always feasible");
    assemble(red, chosen)
}

/// Repeatedly commits the element with the largest marginal value among the
/// groups still open, skipping elements that no longer pack. Ties go to the
/// smaller item, then the smaller element index.
pub fn solve_mkcp_greedy(red: &ReducedInstance, config: &MkcpConfig) -> Result<ReducedSolution> {
    let mut packer = Packer::new(red, Some(config.pack_budget));
    let mut open: Vec<usize> = (0..red.groups.len()).collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut current = red.value(&[]);
    while !open.is_empty() {
        let mut round: Option<(i64, usize, usize, usize)> = None; // (gain, group, element, position in open)
        for (pos, &g) in open.iter().enumerate() {
            let mut scored: Vec<(i64, usize)> = red.groups[g]
                .iter()
                .map(|&e| {
                    chosen.push(e);
                    let v = red.value(&chosen);
                    chosen.pop();
                    (v - current, e)
                })
                .collect();
            scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            for (gain, e) in scored {
                if round.as_ref().is_some_and(|r| gain <= r.0) {
                    break;
                }
                chosen.push(e);
                let ok = packer.fits(&chosen);
                chosen.pop();
                if ok {
                    round = Some((gain, g, e, pos));
                    break;
                }
            }
        }
        match round {
            Some((gain, _, e, pos)) if gain >= 0 => {
                chosen.push(e);
                current += gain;
                open.remove(pos);
            }
            _ => break,
        }
    }
    assemble(red, chosen)
}
