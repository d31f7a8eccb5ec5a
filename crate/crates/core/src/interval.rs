//! Run-length view of a multistage solution: each item's maximal runs of
//! consecutive packed stages, their values and the loss of cutting them.

use serde::{Deserialize, Serialize};

use crate::cutting::CutPointSet;
use crate::error::{GmkError, Result};
use crate::instance::{GmkInstance, Variant};
use crate::submodular::ItemSet;

/// Item `item` packed in every stage of `start..=end`. Serializes as
/// `[item, start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "(usize, usize, usize)", from = "(usize, usize, usize)")]
pub struct IntervalElement {
    pub item: usize,
    pub start: usize,
    pub end: usize,
}

impl From<IntervalElement> for (usize, usize, usize) {
    fn from(e: IntervalElement) -> Self {
        (e.item, e.start, e.end)
    }
}

impl From<(usize, usize, usize)> for IntervalElement {
    fn from((item, start, end): (usize, usize, usize)) -> Self {
        IntervalElement { item, start, end }
    }
}

impl IntervalElement {
    pub fn new(item: usize, start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        IntervalElement { item, start, end }
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }
}

/// Elements kept sorted by `(item, start)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalSet {
    elements: Vec<IntervalElement>,
}

impl IntervalSet {
    pub fn from_elements(mut elements: Vec<IntervalElement>) -> Self {
        elements.sort_unstable();
        IntervalSet { elements }
    }

    pub fn elements(&self) -> &[IntervalElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// True when runs of the same item neither overlap nor touch.
    pub fn is_maximal(&self) -> bool {
        self.elements
            .windows(2)
            .all(|w| w[0].item != w[1].item || w[0].end + 1 < w[1].start)
    }

    /// `[item-id, start, end]` triples for reports.
    pub fn named(&self, items: &[String]) -> Vec<(String, usize, usize)> {
        self.elements.iter().map(|e| (items[e.item].clone(), e.start, e.end)).collect()
    }
}

/// Maximal runs of `sets`, where `sets[0]` is stage 1.
pub fn to_intervals(sets: &[ItemSet]) -> IntervalSet {
    let items: ItemSet = sets.iter().flatten().copied().collect();
    let mut out = Vec::new();
    for i in items {
        let mut start = None;
        for (k, s) in sets.iter().enumerate() {
            match (s.contains(&i), start) {
                (true, None) => start = Some(k + 1),
                (false, Some(s0)) => {
                    out.push(IntervalElement::new(i, s0, k));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s0) = start {
            out.push(IntervalElement::new(i, s0, sets.len()));
        }
    }
    IntervalSet { elements: out }
}

pub fn from_intervals(iv: &IntervalSet, t: usize) -> ItemSet {
    iv.elements.iter().filter(|e| e.contains(t)).map(|e| e.item).collect()
}

fn require_modular(inst: &GmkInstance) -> Result<()> {
    if inst.variant != Variant::Modular {
        return Err(GmkError::Unsupported("element values need modular profits".into()));
    }
    Ok(())
}

fn check_element(inst: &GmkInstance, e: &IntervalElement) -> Result<()> {
    if e.item >= inst.num_items() || e.start == 0 || e.start > e.end || e.end > inst.horizon {
        return Err(GmkError::input(format!(
            "interval ({}, {}, {}) does not fit the instance",
            e.item, e.start, e.end
        )));
    }
    Ok(())
}

/// Net value of a run: profits and keep-gains inside it, minus the entry and
/// exit costs.
pub fn element_value(inst: &GmkInstance, e: &IntervalElement) -> Result<i64> {
    require_modular(inst)?;
    check_element(inst, e)?;
    let i = e.item;
    let profit: i64 = (e.start..=e.end).map(|t| inst.stage(t).profit.item(i).unwrap_or(0)).sum();
    let gain: i64 = (e.start + 1..=e.end).map(|t| inst.gain_plus.get(i, t)).sum();
    Ok(profit + gain - inst.cost_plus.get(i, e.start) - inst.cost_minus.get(i, e.end))
}

/// Splits `e` at every cut point in `(start, end]`.
pub fn cut_element(e: &IntervalElement, cuts: &CutPointSet) -> IntervalSet {
    let mut pieces = Vec::new();
    let mut start = e.start;
    for &u in cuts.points() {
        if u > e.start && u <= e.end {
            pieces.push(IntervalElement::new(e.item, start, u - 1));
            start = u;
        }
    }
    pieces.push(IntervalElement::new(e.item, start, e.end));
    IntervalSet { elements: pieces }
}

/// Loss of a single cut at `u`: the forfeited keep-gain plus the new exit
/// and entry costs on either side.
pub fn single_cut_loss(inst: &GmkInstance, item: usize, u: usize) -> i64 {
    inst.gain_plus.get(item, u) + inst.cost_plus.get(item, u) + inst.cost_minus.get(item, u - 1)
}

pub fn cut_loss(inst: &GmkInstance, e: &IntervalElement, cuts: &CutPointSet) -> Result<i64> {
    require_modular(inst)?;
    check_element(inst, e)?;
    Ok(cuts
        .points()
        .iter()
        .filter(|&&u| u > e.start && u <= e.end)
        .map(|&u| single_cut_loss(inst, e.item, u))
        .sum())
}

/// `sum over t in [2, T] of g-_{i,t}` for items outside both `S_{t-1}` and `S_t`.
pub fn gain_minus_mass(inst: &GmkInstance, sets: &[ItemSet]) -> i64 {
    (2..=sets.len())
        .map(|t| {
            (0..inst.num_items())
                .filter(|i| !sets[t - 2].contains(i) && !sets[t - 1].contains(i))
                .map(|i| inst.gain_minus.get(i, t))
                .sum::<i64>()
        })
        .sum()
}

/// `sum of v(e)` over the runs of `sets` plus the `g-` mass.
pub fn interval_objective(inst: &GmkInstance, sets: &[ItemSet]) -> Result<i64> {
    let mut total = gain_minus_mass(inst, sets);
    for e in to_intervals(sets).elements() {
        total += element_value(inst, e)?;
    }
    Ok(total)
}
