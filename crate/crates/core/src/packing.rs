//! Multiple-knapsack packability of a fixed set.

use serde::Serialize;

use crate::instance::Mkc;
use crate::submodular::ItemSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PackStatus {
    Packed,
    Infeasible,
    /// The node budget ran out before the search finished.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackingResult {
    pub status: PackStatus,
    /// Per bin, the members placed there. Present iff `status` is `Packed`.
    pub assignment: Option<Vec<ItemSet>>,
    pub nodes: u64,
}

impl PackingResult {
    pub fn is_packed(&self) -> bool {
        self.status == PackStatus::Packed
    }
}

/// Default node budget for budgeted (greedy-mode) packing.
pub const GREEDY_PACK_BUDGET: u64 = 100_000;

/// Decides whether `chosen` fits into the bins of `mkc`, where
/// `mkc.weights` is indexed by the members of `chosen`. Zero-weight members
/// go to the designated bin. `budget = None` searches to completion.
pub fn pack_assignment(mkc: &Mkc, chosen: &ItemSet, budget: Option<u64>) -> PackingResult {
    let members: Vec<usize> = chosen.iter().copied().collect();
    let weights: Vec<u64> = members.iter().map(|&m| mkc.weights[m]).collect();
    let caps = mkc.capacities();
    let (status, bins, nodes) = pack_weights(&weights, &caps, budget);
    let assignment = bins.map(|slots| {
        let mut out = vec![ItemSet::new(); caps.len()];
        let designated = mkc.designated_bin();
        for (k, slot) in slots.into_iter().enumerate() {
            out[slot.unwrap_or(designated)].insert(members[k]);
        }
        out
    });
    PackingResult { status, assignment, nodes }
}

/// Core search. Returns, per weight, the chosen bin (`None` for zero
/// weights, which fit anywhere).
pub fn pack_weights(weights: &[u64], caps: &[u64], budget: Option<u64>) -> (PackStatus, Option<Vec<Option<usize>>>, u64) {
    let mut order: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > 0).collect();
    if order.is_empty() {
        return if caps.is_empty() && !weights.is_empty() {
            (PackStatus::Infeasible, None, 0)
        } else {
            (PackStatus::Packed, Some(vec![None; weights.len()]), 0)
        };
    }
    order.sort_by(|&a, &b| weights[b].cmp(&weights[a]).then(a.cmp(&b)));
    let total: u64 = order.iter().map(|&k| weights[k]).sum();
    let cap_total: u64 = caps.iter().sum();
    let max_cap = caps.iter().copied().max().unwrap_or(0);
    if total > cap_total || weights[order[0]] > max_cap {
        return (PackStatus::Infeasible, None, 0);
    }

    let mut search = Search {
        weights,
        order: &order,
        suffix: suffix_sums(weights, &order),
        remaining: caps.to_vec(),
        slot: vec![None; weights.len()],
        nodes: 0,
        budget,
    };
    match search.dfs(0) {
        Some(true) => (PackStatus::Packed, Some(search.slot), search.nodes),
        Some(false) => (PackStatus::Infeasible, None, search.nodes),
        None => (PackStatus::Unknown, None, search.nodes),
    }
}

fn suffix_sums(weights: &[u64], order: &[usize]) -> Vec<u64> {
    let mut s = vec![0u64; order.len() + 1];
    for k in (0..order.len()).rev() {
        s[k] = s[k + 1] + weights[order[k]];
    }
    s
}

struct Search<'a> {
    weights: &'a [u64],
    order: &'a [usize],
    suffix: Vec<u64>,
    remaining: Vec<u64>,
    slot: Vec<Option<usize>>,
    nodes: u64,
    budget: Option<u64>,
}

impl Search<'_> {
    /// `Some(found)` when the subtree was fully explored or a packing found,
    /// `None` when the budget ran out.
    fn dfs(&mut self, depth: usize) -> Option<bool> {
        if depth == self.order.len() {
            return Some(true);
        }
        self.nodes += 1;
        if self.budget.is_some_and(|b| self.nodes > b) {
            return None;
        }
        let w = self.weights[self.order[depth]];
        // room usable by what is left: a bin's slack counts only if the
        // smallest remaining weight fits there
        let smallest = self.weights[*self.order.last().expect("nonempty")];
        let usable: u64 = self.remaining.iter().filter(|&&r| r >= smallest).sum();
        if usable < self.suffix[depth] {
            return Some(false);
        }
        let mut tried: Vec<u64> = Vec::new();
        for b in 0..self.remaining.len() {
            let r = self.remaining[b];
            if r < w || tried.contains(&r) {
                continue;
            }
            tried.push(r);
            self.remaining[b] -= w;
            self.slot[self.order[depth]] = Some(b);
            let outcome = self.dfs(depth + 1);
            self.remaining[b] += w;
            match outcome {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
        }
        self.slot[self.order[depth]] = None;
        Some(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Bin;

    fn mkc(weights: &[u64], caps: &[u64]) -> Mkc {
        Mkc {
            weights: weights.to_vec(),
            bins: caps.iter().enumerate().map(|(k, &c)| Bin { id: format!("b{k}"), capacity: c }).collect(),
        }
    }

    fn all(n: usize) -> ItemSet {
        (0..n).collect()
    }

    #[test]
    fn two_threes_fit_one_six() {
        let r = pack_assignment(&mkc(&[3, 3], &[6]), &all(2), None);
        assert!(r.is_packed());
        assert_eq!(r.assignment.unwrap()[0], all(2));
    }

    #[test]
    fn four_and_three_do_not_fit_five_and_two() {
        let r = pack_assignment(&mkc(&[4, 3], &[5, 2]), &all(2), None);
        assert_eq!(r.status, PackStatus::Infeasible);
    }

    #[test]
    fn zero_weights_always_pack_into_designated_bin() {
        let m = Mkc {
            weights: vec![0, 0, 0],
            bins: vec![Bin { id: "z".into(), capacity: 0 }, Bin { id: "a".into(), capacity: 0 }],
        };
        let r = pack_assignment(&m, &all(3), None);
        assert!(r.is_packed());
        assert_eq!(r.assignment.unwrap()[1], all(3));
    }

    #[test]
    fn partial_subsets_use_only_chosen_members() {
        let m = mkc(&[5, 1, 5], &[6]);
        assert!(pack_assignment(&m, &[0, 1].into(), None).is_packed());
        assert!(!pack_assignment(&m, &[0, 2].into(), None).is_packed());
    }

    #[test]
    fn tight_bin_packing_needs_search() {
        // 3+3 | 2+2+2 fits capacities {6, 6}; first-fit-decreasing would also find it,
        // but {4,4,2,2} into {6,6} requires pairing 4 with 2.
        let r = pack_assignment(&mkc(&[4, 4, 2, 2], &[6, 6]), &all(4), None);
        assert!(r.is_packed());
        for (bin, members) in r.assignment.unwrap().iter().enumerate() {
            let load: u64 = members.iter().map(|&m| [4, 4, 2, 2][m]).sum();
            assert!(load <= [6, 6][bin]);
        }
    }

    #[test]
    fn budget_exhaustion_is_unknown() {
        // many equal-ish items into many bins with no solution
        let weights = vec![7u64; 9];
        let caps = vec![13u64; 5];
        let (status, _, _) = pack_weights(&weights, &caps, Some(3));
        assert_ne!(status, PackStatus::Packed);
        let (status, _, _) = pack_weights(&[5, 4, 3, 3, 3, 2], &[7, 7, 6], Some(2));
        assert_eq!(status, PackStatus::Unknown);
    }
}
