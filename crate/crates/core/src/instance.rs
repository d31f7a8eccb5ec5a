//! Data model for multistage knapsack instances and solutions, objective
//! evaluation and feasibility checking.
//!
//! Stages are numbered from 1. Gain tables cover stages `2..=T`, cost tables
//! `1..=T`. A solution never stores the empty boundary sets `S_0` and
//! `S_{T+1}`; evaluation supplies them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GmkError, Result};
use crate::submodular::{ItemSet, SetFunction, SetFunctionOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Modular,
    Submodular,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bin {
    pub id: String,
    pub capacity: u64,
}

/// One multiple knapsack constraint: a weight per item and a set of bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mkc {
    pub weights: Vec<u64>,
    pub bins: Vec<Bin>,
}

impl Mkc {
    /// Index of the bin with the lexicographically smallest id. Zero-weight
    /// overflow goes there.
    pub fn designated_bin(&self) -> usize {
        self.bins
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.id.cmp(&b.1.id))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn capacities(&self) -> Vec<u64> {
        self.bins.iter().map(|b| b.capacity).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Profit {
    Modular(Vec<i64>),
    Oracle(SetFunctionOracle),
}

impl Profit {
    pub fn eval(&self, set: &ItemSet) -> i64 {
        match self {
            Profit::Modular(p) => set.iter().map(|&i| p[i]).sum(),
            Profit::Oracle(f) => f.eval(set),
        }
    }

    /// Per-item profit, only defined for modular stages.
    pub fn item(&self, i: usize) -> Option<i64> {
        match self {
            Profit::Modular(p) => p.get(i).copied(),
            Profit::Oracle(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub mkcs: Vec<Mkc>,
    pub profit: Profit,
}

/// Dense item × stage table over the stage range `first..=last`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTable {
    first: usize,
    last: usize,
    values: Vec<Vec<i64>>,
}

impl StageTable {
    pub fn zeros(items: usize, first: usize, last: usize) -> Self {
        let len = (last + 1).saturating_sub(first);
        StageTable { first, last, values: vec![vec![0; len]; items] }
    }

    /// Builds a table from `f(item, stage)`.
    pub fn from_fn(items: usize, first: usize, last: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut table = Self::zeros(items, first, last);
        for i in 0..items {
            for t in first..=last {
                table.set(i, t, f(i, t));
            }
        }
        table
    }

    pub fn range(&self) -> (usize, usize) {
        (self.first, self.last)
    }

    pub fn get(&self, item: usize, stage: usize) -> i64 {
        debug_assert!(stage >= self.first && stage <= self.last, "stage {stage} outside table");
        self.values[item][stage - self.first]
    }

    pub fn set(&mut self, item: usize, stage: usize, value: i64) {
        self.values[item][stage - self.first] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().flatten().all(|&v| v == 0)
    }

    pub fn map(&self, f: impl Fn(i64) -> i64) -> Self {
        StageTable {
            first: self.first,
            last: self.last,
            values: self.values.iter().map(|row| row.iter().map(|&v| f(v)).collect()).collect(),
        }
    }

    pub fn item_row(&self, item: usize) -> &[i64] {
        &self.values[item]
    }

    pub(crate) fn item_row_mut(&mut self, item: usize) -> &mut [i64] {
        &mut self.values[item]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmkInstance {
    pub variant: Variant,
    pub items: Vec<String>,
    pub horizon: usize,
    /// Instance-level bound on the number of constraints per stage.
    pub dimension: usize,
    pub stages: Vec<Stage>,
    pub gain_plus: StageTable,
    pub gain_minus: StageTable,
    pub cost_plus: StageTable,
    pub cost_minus: StageTable,
    /// Free-form provenance carried through JSON round trips.
    pub metadata: Option<serde_json::Value>,
}

impl GmkInstance {
    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn stage(&self, t: usize) -> &Stage {
        &self.stages[t - 1]
    }

    pub fn full_view(&self) -> SubInstanceView<'_> {
        SubInstanceView { inst: self, first: 1, last: self.horizon }
    }

    /// View over stages `first..=last` with tables still indexed globally.
    pub fn view(&self, first: usize, last: usize) -> Result<SubInstanceView<'_>> {
        if first == 0 || first > last || last > self.horizon {
            return Err(GmkError::input(format!(
                "stage range [{first}, {last}] is not inside [1, {}]",
                self.horizon
            )));
        }
        Ok(SubInstanceView { inst: self, first, last })
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|s| s == id)
    }

    pub fn empty_sets(&self) -> Vec<ItemSet> {
        vec![ItemSet::new(); self.horizon]
    }
}

pub fn sub_instance(inst: &GmkInstance, first: usize, last: usize) -> Result<SubInstanceView<'_>> {
    inst.view(first, last)
}

/// A read-only window `[first, last]` of an instance. Sets passed to a view
/// are indexed locally: `sets[0]` is stage `first`.
#[derive(Debug, Clone, Copy)]
pub struct SubInstanceView<'a> {
    pub inst: &'a GmkInstance,
    pub first: usize,
    pub last: usize,
}

impl<'a> SubInstanceView<'a> {
    pub fn horizon(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn global(&self, local: usize) -> usize {
        self.first + local - 1
    }

    pub fn stage_local(&self, local: usize) -> &'a Stage {
        self.inst.stage(self.global(local))
    }

    pub fn num_items(&self) -> usize {
        self.inst.num_items()
    }

    fn check_sets(&self, sets: &[ItemSet]) -> Result<()> {
        if sets.len() != self.horizon() {
            return Err(GmkError::input(format!(
                "expected {} stage sets, got {}",
                self.horizon(),
                sets.len()
            )));
        }
        let n = self.num_items();
        for (k, s) in sets.iter().enumerate() {
            if let Some(&bad) = s.iter().find(|&&i| i >= n) {
                return Err(GmkError::input(format!(
                    "stage {} references unknown item index {bad}",
                    self.global(k + 1)
                )));
            }
        }
        Ok(())
    }

    /// Objective of the window with empty sets just outside it.
    pub fn evaluate(&self, sets: &[ItemSet]) -> Result<i64> {
        self.check_sets(sets)?;
        Ok(self.evaluate_unchecked(sets))
    }

    pub(crate) fn evaluate_unchecked(&self, sets: &[ItemSet]) -> i64 {
        let inst = self.inst;
        let modular = inst.variant == Variant::Modular;
        let empty = ItemSet::new();
        let h = self.horizon();
        let mut total = 0i64;
        for k in 1..=h {
            let t = self.global(k);
            let cur = &sets[k - 1];
            let prev = if k > 1 { &sets[k - 2] } else { &empty };
            let next = if k < h { &sets[k] } else { &empty };
            total += inst.stage(t).profit.eval(cur);
            if k > 1 {
                for i in 0..inst.num_items() {
                    match (prev.contains(&i), cur.contains(&i)) {
                        (true, true) => total += inst.gain_plus.get(i, t),
                        (false, false) => total += inst.gain_minus.get(i, t),
                        _ => {}
                    }
                }
            }
            if modular {
                for &i in cur {
                    if !prev.contains(&i) {
                        total -= inst.cost_plus.get(i, t);
                    }
                    if !next.contains(&i) {
                        total -= inst.cost_minus.get(i, t);
                    }
                }
            }
        }
        total
    }

    /// The additive terms of the objective contributed by the transition
    /// into local stage `k` given the previous set (empty at `k = 1`), plus
    /// stage `k`'s own profit. The exit cost of `prev` at `k - 1` is charged
    /// here; the exit cost of the last stage is [`Self::exit_cost`].
    pub(crate) fn step_value(&self, k: usize, prev: &ItemSet, cur: &ItemSet, profit: i64) -> i64 {
        let inst = self.inst;
        let t = self.global(k);
        let mut total = profit;
        if k > 1 {
            for i in 0..inst.num_items() {
                match (prev.contains(&i), cur.contains(&i)) {
                    (true, true) => total += inst.gain_plus.get(i, t),
                    (false, false) => total += inst.gain_minus.get(i, t),
                    _ => {}
                }
            }
        }
        if inst.variant == Variant::Modular {
            for &i in cur {
                if !prev.contains(&i) {
                    total -= inst.cost_plus.get(i, t);
                }
            }
            if k > 1 {
                for &i in prev {
                    if !cur.contains(&i) {
                        total -= inst.cost_minus.get(i, t - 1);
                    }
                }
            }
        }
        total
    }

    pub(crate) fn exit_cost(&self, last_set: &ItemSet) -> i64 {
        if self.inst.variant != Variant::Modular {
            return 0;
        }
        last_set.iter().map(|&i| self.inst.cost_minus.get(i, self.last)).sum()
    }

    /// Total `g-` mass earned when no item is ever packed.
    pub fn empty_value(&self) -> i64 {
        (self.first + 1..=self.last)
            .map(|t| (0..self.num_items()).map(|i| self.inst.gain_minus.get(i, t)).sum::<i64>())
            .sum()
    }
}

pub fn evaluate_objective(inst: &GmkInstance, sets: &[ItemSet]) -> Result<i64> {
    inst.full_view().evaluate(sets)
}

pub fn evaluate_sub_objective(view: &SubInstanceView<'_>, sets: &[ItemSet]) -> Result<i64> {
    view.evaluate(sets)
}

/// Per-stage item sets plus one bin assignment per stage constraint.
/// `assignments[k][j][b]` holds the items placed in bin `b` of constraint
/// `j` at local stage `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultistageSolution {
    pub sets: Vec<ItemSet>,
    pub assignments: Vec<Vec<Vec<ItemSet>>>,
}

/// A list of human-readable problems; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn push(&mut self, issue: impl Into<String>) {
        self.issues.push(issue.into());
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            f.write_str("ok")
        } else {
            f.write_str(&self.issues.join("; "))
        }
    }
}

pub type FeasibilityReport = ValidationReport;

/// Feasibility of `sol` for the window `view`.
///
/// An assignment is accepted when the union of its bins equals the stage set
/// and no bin exceeds its capacity.
pub fn check_feasible(view: &SubInstanceView<'_>, sol: &MultistageSolution) -> FeasibilityReport {
    let mut report = FeasibilityReport::default();
    let h = view.horizon();
    let n = view.num_items();
    if sol.sets.len() != h || sol.assignments.len() != h {
        report.push(format!(
            "solution has {} sets and {} assignment stages, expected {h}",
            sol.sets.len(),
            sol.assignments.len()
        ));
        return report;
    }
    for k in 1..=h {
        let t = view.global(k);
        let set = &sol.sets[k - 1];
        if let Some(bad) = set.iter().find(|&&i| i >= n) {
            report.push(format!("S_{t} references unknown item index {bad}"));
            continue;
        }
        let stage = view.stage_local(k);
        let assignment = &sol.assignments[k - 1];
        if assignment.len() != stage.mkcs.len() {
            report.push(format!(
                "stage {t} has {} constraint assignments, expected {}",
                assignment.len(),
                stage.mkcs.len()
            ));
            continue;
        }
        for (j, (mkc, bins)) in stage.mkcs.iter().zip(assignment).enumerate() {
            let j = j + 1;
            if bins.len() != mkc.bins.len() {
                report.push(format!("stage {t} constraint {j} assigns {} bins, expected {}", bins.len(), mkc.bins.len()));
                continue;
            }
            let mut union = ItemSet::new();
            for (bin, items) in mkc.bins.iter().zip(bins) {
                if let Some(bad) = items.iter().find(|&&i| i >= n) {
                    report.push(format!("bin {} at (t={t}, j={j}) holds unknown item index {bad}", bin.id));
                    continue;
                }
                let load: u64 = items.iter().map(|&i| mkc.weights[i]).sum();
                if load > bin.capacity {
                    report.push(format!(
                        "bin {} over capacity at (t={t}, j={j}): load {load} > capacity {}",
                        bin.id, bin.capacity
                    ));
                }
                union.extend(items.iter().copied());
            }
            if &union != set {
                report.push(format!("assignment does not cover S_{t} at constraint j={j}"));
            }
        }
    }
    report
}
