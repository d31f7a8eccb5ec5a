//! The schedule reduction: a multistage instance over a window of `h`
//! stages becomes a single-shot packing problem over elements `(i, D)`,
//! one per item and stage subset `D`, with `d·h` knapsack constraints and a
//! partition matroid allowing at most one element per item.
//!
//! Schedules are bitmasks over local stages: bit `k - 1` is local stage `k`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GmkError, Result};
use crate::instance::{check_feasible, Bin, GmkInstance, Mkc, MultistageSolution, SubInstanceView, ValidationReport, Variant};
use crate::numeric::RawNum;
use crate::submodular::{ItemSet, OracleDoc, SetFunction, SetFunctionOracle};

pub const DEFAULT_HORIZON_CAP: usize = 12;
const MAX_HORIZON_CAP: usize = 30;

/// Subset of the stages `1..=64` as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Schedule(pub u64);

impl Schedule {
    pub fn from_stages(stages: &[usize]) -> Self {
        Schedule(stages.iter().fold(0, |m, &t| m | (1u64 << (t - 1))))
    }

    pub fn full(h: usize) -> Self {
        Schedule(if h >= 64 { u64::MAX } else { (1u64 << h) - 1 })
    }

    pub fn contains(&self, stage: usize) -> bool {
        (1..=64).contains(&stage) && self.0 & (1u64 << (stage - 1)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn stages(&self) -> Vec<usize> {
        (1..=64).filter(|&t| self.contains(t)).collect()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.stages())
    }
}

impl Serialize for Schedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.stages().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let stages = Vec::<usize>::deserialize(d)?;
        if let Some(bad) = stages.iter().find(|&&t| t == 0 || t > 64) {
            return Err(serde::de::Error::custom(format!("stage {bad} outside 1..=64")));
        }
        Ok(Schedule::from_stages(&stages))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReducedElement {
    pub item: usize,
    pub schedule: Schedule,
}

/// Constraint `j` of local stage `stage`, over elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedConstraint {
    pub stage: usize,
    pub index: usize,
    /// Stages with fewer than `d` constraints are padded with a single
    /// zero-capacity bin where every element weighs nothing.
    pub padding: bool,
    pub mkc: Mkc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedInstance {
    pub variant: Variant,
    pub items: Vec<String>,
    /// Global stage number of local stage 1.
    pub first_stage: usize,
    pub horizon: usize,
    pub dimension: usize,
    pub elements: Vec<ReducedElement>,
    /// Modular: the full element value. Submodular: the gain part only;
    /// stage profits come from `stage_profits`.
    pub values: Vec<i64>,
    pub constraints: Vec<ReducedConstraint>,
    /// Element indices per item, in increasing schedule order.
    pub groups: Vec<Vec<usize>>,
    pub stage_profits: Option<Vec<SetFunctionOracle>>,
}

/// Chosen element indices plus, per constraint, the elements in each bin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedSolution {
    pub chosen: Vec<usize>,
    pub assignments: Vec<Vec<ItemSet>>,
}

/// Value of the element `(i, D)` over the window `view`, with `D` in local
/// stages.
pub fn element_fixed_value(view: &SubInstanceView<'_>, item: usize, schedule: Schedule) -> Result<i64> {
    if view.inst.variant != Variant::Modular {
        return Err(GmkError::Unsupported("fixed element values need modular profits; use the oracle path".into()));
    }
    let profit: i64 = (1..=view.horizon())
        .filter(|&k| schedule.contains(k))
        .map(|k| view.stage_local(k).profit.item(item).unwrap_or(0))
        .sum();
    Ok(profit + schedule_terms(view, item, schedule, true))
}

/// Gains (and, when `costs`, change costs) of an item following `schedule`.
fn schedule_terms(view: &SubInstanceView<'_>, item: usize, schedule: Schedule, costs: bool) -> i64 {
    let inst = view.inst;
    let h = view.horizon();
    let mut total = 0;
    for k in 1..=h {
        let t = view.global(k);
        let here = schedule.contains(k);
        let before = k > 1 && schedule.contains(k - 1);
        let after = k < h && schedule.contains(k + 1);
        if k > 1 {
            if here && before {
                total += inst.gain_plus.get(item, t);
            } else if !here && !before {
                total += inst.gain_minus.get(item, t);
            }
        }
        if costs && here {
            if !before {
                total -= inst.cost_plus.get(item, t);
            }
            if !after {
                total -= inst.cost_minus.get(item, t);
            }
        }
    }
    total
}

fn check_cap(h: usize, cap: usize) -> Result<()> {
    if cap > MAX_HORIZON_CAP {
        return Err(GmkError::input(format!("horizon cap {cap} is above the hard limit {MAX_HORIZON_CAP}")));
    }
    if h > cap {
        return Err(GmkError::HorizonCap { horizon: h, cap });
    }
    Ok(())
}

pub fn reduce_modular(inst: &GmkInstance) -> Result<ReducedInstance> {
    reduce_view(&inst.full_view(), DEFAULT_HORIZON_CAP)
}

pub fn reduce_submodular(inst: &GmkInstance) -> Result<ReducedInstance> {
    reduce_view(&inst.full_view(), DEFAULT_HORIZON_CAP)
}

/// Reduces the window `view`, dispatching on the instance variant.
pub fn reduce_view(view: &SubInstanceView<'_>, horizon_cap: usize) -> Result<ReducedInstance> {
    let h = view.horizon();
    check_cap(h, horizon_cap)?;
    let inst = view.inst;
    let n = inst.num_items();
    let modular = inst.variant == Variant::Modular;

    let mut elements = Vec::new();
    let mut values = Vec::new();
    let mut groups = vec![Vec::new(); n];
    for (i, group) in groups.iter_mut().enumerate() {
        for mask in 0..(1u64 << h) {
            let schedule = Schedule(mask);
            let value = if modular {
                element_fixed_value(view, i, schedule)?
            } else {
                schedule_terms(view, i, schedule, false)
            };
            if modular && value < 0 && mask != 0 {
                continue;
            }
            group.push(elements.len());
            elements.push(ReducedElement { item: i, schedule });
            values.push(value);
        }
    }

    let mut constraints = Vec::with_capacity(h * inst.dimension);
    for k in 1..=h {
        let stage = view.stage_local(k);
        for j in 1..=inst.dimension {
            let c = match stage.mkcs.get(j - 1) {
                Some(mkc) => ReducedConstraint {
                    stage: k,
                    index: j,
                    padding: false,
                    mkc: Mkc {
                        weights: elements
                            .iter()
                            .map(|e| if e.schedule.contains(k) { mkc.weights[e.item] } else { 0 })
                            .collect(),
                        bins: mkc.bins.clone(),
                    },
                },
                None => ReducedConstraint {
                    stage: k,
                    index: j,
                    padding: true,
                    mkc: Mkc { weights: vec![0; elements.len()], bins: vec![Bin { id: "pad".into(), capacity: 0 }] },
                },
            };
            constraints.push(c);
        }
    }

    let stage_profits = (!modular).then(|| {
        (1..=h)
            .map(|k| match &view.stage_local(k).profit {
                crate::instance::Profit::Oracle(f) => f.clone(),
                crate::instance::Profit::Modular(p) => SetFunctionOracle::Modular(p.clone()),
            })
            .collect()
    });

    Ok(ReducedInstance {
        variant: inst.variant,
        items: inst.items.clone(),
        first_stage: view.first,
        horizon: h,
        dimension: inst.dimension,
        elements,
        values,
        constraints,
        groups,
        stage_profits,
    })
}

impl ReducedInstance {
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Index of element `(item, schedule)` if it was kept.
    pub fn find(&self, item: usize, schedule: Schedule) -> Option<usize> {
        let group = self.groups.get(item)?;
        group
            .binary_search_by(|&e| self.elements[e].schedule.cmp(&schedule))
            .ok()
            .map(|pos| group[pos])
    }

    /// Objective value of a set of element indices.
    pub fn value(&self, chosen: &[usize]) -> i64 {
        let modular_part: i64 = chosen.iter().map(|&e| self.values[e]).sum();
        match &self.stage_profits {
            None => modular_part,
            Some(profits) => {
                let mut total = modular_part;
                for (k, f) in profits.iter().enumerate() {
                    let active: ItemSet = chosen
                        .iter()
                        .map(|&e| self.elements[e])
                        .filter(|e| e.schedule.contains(k + 1))
                        .map(|e| e.item)
                        .collect();
                    total += f.eval(&active);
                }
                total
            }
        }
    }

    /// `value({e}) - value({})`, an upper bound on the marginal value of `e`
    /// on top of any set (exact for modular objectives).
    pub fn singleton_gain(&self, e: usize) -> i64 {
        self.value(&[e]) - self.value(&[])
    }

    pub fn empty_solution(&self) -> ReducedSolution {
        ReducedSolution {
            chosen: Vec::new(),
            assignments: self.constraints.iter().map(|c| vec![ItemSet::new(); c.mkc.bins.len()]).collect(),
        }
    }
}

/// Checks matroid membership and every constraint's assignment, without
/// trusting any solver bookkeeping.
pub fn verify_reduced_solution(red: &ReducedInstance, sol: &ReducedSolution) -> ValidationReport {
    let mut report = ValidationReport::default();
    let m = red.num_elements();
    let chosen: ItemSet = sol.chosen.iter().copied().collect();
    if chosen.len() != sol.chosen.len() {
        report.push("chosen lists an element twice");
    }
    if let Some(bad) = chosen.iter().find(|&&e| e >= m) {
        report.push(format!("chosen references unknown element {bad}"));
        return report;
    }
    let mut per_item = vec![0usize; red.items.len()];
    for &e in &chosen {
        per_item[red.elements[e].item] += 1;
    }
    for (i, &count) in per_item.iter().enumerate() {
        if count > 1 {
            report.push(format!("item {} has {count} chosen elements", red.items[i]));
        }
    }
    if sol.assignments.len() != red.constraints.len() {
        report.push(format!(
            "{} constraint assignments given, expected {}",
            sol.assignments.len(),
            red.constraints.len()
        ));
        return report;
    }
    for (c, bins) in red.constraints.iter().zip(&sol.assignments) {
        let at = format!("(t={}, j={})", c.stage, c.index);
        if bins.len() != c.mkc.bins.len() {
            report.push(format!("constraint {at} assigns {} bins, expected {}", bins.len(), c.mkc.bins.len()));
            continue;
        }
        let mut union = ItemSet::new();
        for (bin, members) in c.mkc.bins.iter().zip(bins) {
            if members.iter().any(|&e| e >= m) {
                report.push(format!("bin {} at {at} holds an unknown element", bin.id));
                continue;
            }
            let load: u64 = members.iter().map(|&e| c.mkc.weights[e]).sum();
            if load > bin.capacity {
                report.push(format!("bin {} over capacity at {at}: load {load} > capacity {}", bin.id, bin.capacity));
            }
            union.extend(members.iter().copied());
        }
        if union != chosen {
            report.push(format!("assignment at {at} does not cover the chosen elements"));
        }
    }
    report
}

/// Result of mapping a multistage solution into the reduced instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoweredSolution {
    pub solution: ReducedSolution,
    /// Items whose schedule element had been dropped and was replaced by the
    /// empty schedule.
    pub substituted: Vec<usize>,
    /// `value(reduced) - value(original)`; positive only after substitution.
    pub value_increase: i64,
}

pub fn lower_solution(view: &SubInstanceView<'_>, red: &ReducedInstance, sol: &MultistageSolution) -> Result<LoweredSolution> {
    let report = check_feasible(view, sol);
    if !report.is_ok() {
        return Err(GmkError::Infeasible(report));
    }
    check_matches(view, red)?;
    let n = red.items.len();
    let mut chosen = Vec::with_capacity(n);
    let mut substituted = Vec::new();
    for i in 0..n {
        let stages: Vec<usize> = (1..=red.horizon).filter(|&k| sol.sets[k - 1].contains(&i)).collect();
        let schedule = Schedule::from_stages(&stages);
        match red.find(i, schedule) {
            Some(e) => chosen.push(e),
            None => {
                substituted.push(i);
                chosen.push(red.find(i, Schedule(0)).ok_or_else(|| {
                    GmkError::Contract(format!("empty-schedule element of item {} is missing", red.items[i]))
                })?);
            }
        }
    }

    let mut assignments = Vec::with_capacity(red.constraints.len());
    for c in &red.constraints {
        let mut bins = vec![ItemSet::new(); c.mkc.bins.len()];
        if c.padding {
            bins[0] = chosen.iter().copied().collect();
        } else {
            let designated = c.mkc.designated_bin();
            let original = &sol.assignments[c.stage - 1][c.index - 1];
            for &e in &chosen {
                let el = red.elements[e];
                let bin = if el.schedule.contains(c.stage) {
                    original.iter().position(|b| b.contains(&el.item)).unwrap_or(designated)
                } else {
                    designated
                };
                bins[bin].insert(e);
            }
        }
        assignments.push(bins);
    }

    let solution = ReducedSolution { chosen, assignments };
    let value_increase = red.value(&solution.chosen) - view.evaluate_unchecked(&sol.sets);
    Ok(LoweredSolution { solution, substituted, value_increase })
}

pub fn lift_solution(view: &SubInstanceView<'_>, red: &ReducedInstance, rsol: &ReducedSolution) -> Result<MultistageSolution> {
    check_matches(view, red)?;
    let report = verify_reduced_solution(red, rsol);
    if !report.is_ok() {
        return Err(GmkError::Infeasible(report));
    }
    let h = red.horizon;
    let sets: Vec<ItemSet> = (1..=h)
        .map(|k| {
            rsol.chosen
                .iter()
                .map(|&e| red.elements[e])
                .filter(|e| e.schedule.contains(k))
                .map(|e| e.item)
                .collect()
        })
        .collect();
    let mut assignments: Vec<Vec<Vec<ItemSet>>> = (1..=h)
        .map(|k| view.stage_local(k).mkcs.iter().map(|m| vec![ItemSet::new(); m.bins.len()]).collect())
        .collect();
    for (c, bins) in red.constraints.iter().zip(&rsol.assignments) {
        if c.padding {
            continue;
        }
        for (b, members) in bins.iter().enumerate() {
            for &e in members {
                let el = red.elements[e];
                if el.schedule.contains(c.stage) {
                    assignments[c.stage - 1][c.index - 1][b].insert(el.item);
                }
            }
        }
    }
    Ok(MultistageSolution { sets, assignments })
}

fn check_matches(view: &SubInstanceView<'_>, red: &ReducedInstance) -> Result<()> {
    if red.first_stage != view.first || red.horizon != view.horizon() || red.items.len() != view.num_items() {
        return Err(GmkError::input("reduced instance was built from a different window"));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementDoc {
    pub item: String,
    pub schedule: Schedule,
    pub value: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintDoc {
    pub stage: usize,
    pub index: usize,
    #[serde(default)]
    pub padding: bool,
    pub bins: Vec<String>,
    pub capacities: BTreeMap<String, RawNum>,
    /// One weight per element, in element order.
    pub weights: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedDoc {
    pub variant: Variant,
    pub items: Vec<String>,
    pub first_stage: usize,
    pub horizon: usize,
    pub dimension: usize,
    pub elements: Vec<ElementDoc>,
    pub constraints: Vec<ConstraintDoc>,
    /// Item → indices of its elements; at most one per item may be chosen.
    pub partition: BTreeMap<String, Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_profits: Option<Vec<OracleDoc>>,
}

impl ReducedInstance {
    pub fn to_doc(&self) -> ReducedDoc {
        ReducedDoc {
            variant: self.variant,
            items: self.items.clone(),
            first_stage: self.first_stage,
            horizon: self.horizon,
            dimension: self.dimension,
            elements: self
                .elements
                .iter()
                .zip(&self.values)
                .map(|(e, &value)| ElementDoc { item: self.items[e.item].clone(), schedule: e.schedule, value })
                .collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| ConstraintDoc {
                    stage: c.stage,
                    index: c.index,
                    padding: c.padding,
                    bins: c.mkc.bins.iter().map(|b| b.id.clone()).collect(),
                    capacities: c.mkc.bins.iter().map(|b| (b.id.clone(), RawNum::from(b.capacity))).collect(),
                    weights: c.mkc.weights.clone(),
                })
                .collect(),
            partition: self.items.iter().cloned().zip(self.groups.iter().cloned()).collect(),
            stage_profits: self.stage_profits.as_ref().map(|ps| ps.iter().map(|f| f.to_doc(&self.items)).collect()),
        }
    }

    pub fn from_doc(doc: &ReducedDoc) -> Result<Self> {
        let index: BTreeMap<&str, usize> = doc.items.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let m = doc.elements.len();
        let mut elements = Vec::with_capacity(m);
        let mut values = Vec::with_capacity(m);
        for e in &doc.elements {
            let item = *index
                .get(e.item.as_str())
                .ok_or_else(|| GmkError::input(format!("element names unknown item {:?}", e.item)))?;
            if e.schedule.stages().iter().any(|&t| t > doc.horizon) {
                return Err(GmkError::input(format!("schedule {} exceeds horizon {}", e.schedule, doc.horizon)));
            }
            elements.push(ReducedElement { item, schedule: e.schedule });
            values.push(e.value);
        }
        let mut groups = vec![Vec::new(); doc.items.len()];
        for (k, e) in elements.iter().enumerate() {
            groups[e.item].push(k);
        }
        for g in &mut groups {
            g.sort_by_key(|&k| elements[k].schedule);
            if g.windows(2).any(|w| elements[w[0]].schedule == elements[w[1]].schedule) {
                return Err(GmkError::input("an item lists the same schedule twice"));
            }
        }
        for (id, listed) in &doc.partition {
            let i = *index.get(id.as_str()).ok_or_else(|| GmkError::input(format!("partition names unknown item {id:?}")))?;
            let mut listed = listed.clone();
            listed.sort_by_key(|&k| elements.get(k).map(|e| e.schedule));
            if listed != groups[i] {
                return Err(GmkError::input(format!("partition group of {id} disagrees with the element list")));
            }
        }
        let mut constraints = Vec::with_capacity(doc.constraints.len());
        for c in &doc.constraints {
            if c.weights.len() != m {
                return Err(GmkError::input(format!(
                    "constraint (t={}, j={}) has {} weights for {m} elements",
                    c.stage,
                    c.index,
                    c.weights.len()
                )));
            }
            let bins = c
                .bins
                .iter()
                .map(|b| {
                    let raw = c.capacities.get(b).ok_or_else(|| GmkError::input(format!("bin {b} has no capacity")))?;
                    let cap = crate::numeric::scale_to_int(raw, 1, "capacity")?;
                    if cap < 0 {
                        return Err(GmkError::input(format!("bin {b} has negative capacity")));
                    }
                    Ok(Bin { id: b.clone(), capacity: cap as u64 })
                })
                .collect::<Result<Vec<_>>>()?;
            if bins.is_empty() {
                return Err(GmkError::input("a constraint has no bins"));
            }
            constraints.push(ReducedConstraint {
                stage: c.stage,
                index: c.index,
                padding: c.padding,
                mkc: Mkc { weights: c.weights.clone(), bins },
            });
        }
        let stage_profits = match &doc.stage_profits {
            None => None,
            Some(ps) => Some(
                ps.iter()
                    .map(|p| SetFunctionOracle::from_doc(p, &doc.items, 1).map(|f| f.with_ground(doc.items.len())))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        if (doc.variant == Variant::Submodular) != stage_profits.is_some() {
            return Err(GmkError::input("stage_profits must be present exactly for the submodular variant"));
        }
        Ok(ReducedInstance {
            variant: doc.variant,
            items: doc.items.clone(),
            first_stage: doc.first_stage,
            horizon: doc.horizon,
            dimension: doc.dimension,
            elements,
            values,
            constraints,
            groups,
            stage_profits,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("reduced instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(text)?)
    }
}
