//! Monotone submodular profit oracles and an exhaustive property checker.
//!
//! Instances only carry coverage, modular and sum oracles, all of which are
//! monotone and submodular by construction. The checker accepts any
//! [`SetFunction`] so it can also be pointed at hand-built tables.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GmkError, Result};
use crate::numeric::{scale_to_int, RawNum};
use crate::reduction::ReducedElement;

pub type ItemSet = BTreeSet<usize>;

/// A set function over the ground set `0..ground_size()`.
pub trait SetFunction {
    fn ground_size(&self) -> usize;

    /// Evaluates the function. Members outside the ground set are ignored;
    /// use [`eval_set_function`] for a checked call.
    fn eval(&self, set: &ItemSet) -> i64;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageFunction {
    pub universe: Vec<String>,
    pub weights: Vec<i64>,
    /// `covers[i]` lists the universe indices covered by item `i`.
    pub covers: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetFunctionOracle {
    Coverage(CoverageFunction),
    Modular(Vec<i64>),
    Sum(Vec<SetFunctionOracle>),
}

impl SetFunction for SetFunctionOracle {
    fn ground_size(&self) -> usize {
        match self {
            SetFunctionOracle::Coverage(c) => c.covers.len(),
            SetFunctionOracle::Modular(v) => v.len(),
            SetFunctionOracle::Sum(parts) => parts.iter().map(|p| p.ground_size()).max().unwrap_or(0),
        }
    }

    fn eval(&self, set: &ItemSet) -> i64 {
        match self {
            SetFunctionOracle::Coverage(c) => {
                let mut covered = vec![false; c.universe.len()];
                for &i in set {
                    if let Some(cov) = c.covers.get(i) {
                        for &u in cov {
                            covered[u] = true;
                        }
                    }
                }
                covered.iter().zip(&c.weights).filter(|(hit, _)| **hit).map(|(_, w)| *w).sum()
            }
            SetFunctionOracle::Modular(values) => set.iter().filter_map(|&i| values.get(i)).sum(),
            SetFunctionOracle::Sum(parts) => parts.iter().map(|p| p.eval(set)).sum(),
        }
    }
}

/// Checked evaluation: every member of `set` must belong to the ground set.
pub fn eval_set_function(f: &dyn SetFunction, set: &ItemSet) -> Result<i64> {
    if let Some(&bad) = set.iter().find(|&&i| i >= f.ground_size()) {
        return Err(GmkError::input(format!(
            "item index {bad} is outside the ground set of size {}",
            f.ground_size()
        )));
    }
    Ok(f.eval(set))
}

/// An explicit value table indexed by subset bitmask. Useful for building
/// counterexamples; never produced from instance files.
#[derive(Debug, Clone)]
pub struct TableFunction {
    pub ground: usize,
    pub values: Vec<i64>,
}

impl SetFunction for TableFunction {
    fn ground_size(&self) -> usize {
        self.ground
    }

    fn eval(&self, set: &ItemSet) -> i64 {
        let mask = set.iter().filter(|&&i| i < self.ground).fold(0usize, |m, &i| m | (1 << i));
        self.values[mask]
    }
}

/// `g(A) = f({ item(e) | e in A, stage in schedule(e) })`, a set function over
/// reduced elements.
#[derive(Debug, Clone)]
pub struct StageExtension<'a> {
    pub base: &'a SetFunctionOracle,
    pub stage: usize,
    pub elements: &'a [ReducedElement],
}

impl SetFunction for StageExtension<'_> {
    fn ground_size(&self) -> usize {
        self.elements.len()
    }

    fn eval(&self, set: &ItemSet) -> i64 {
        let active: ItemSet = set
            .iter()
            .filter_map(|&e| self.elements.get(e))
            .filter(|e| e.schedule.contains(self.stage))
            .map(|e| e.item)
            .collect();
        self.base.eval(&active)
    }
}

pub fn extend_function<'a>(
    base: &'a SetFunctionOracle,
    stage: usize,
    elements: &'a [ReducedElement],
) -> StageExtension<'a> {
    StageExtension { base, stage, elements }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PropertyViolation {
    Negative { set: Vec<usize>, value: i64 },
    NotMonotone { smaller: Vec<usize>, larger: Vec<usize> },
    NotSubmodular { a: Vec<usize>, b: Vec<usize>, item: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    /// False when the ground set was too large and triples were sampled.
    pub exhaustive: bool,
    pub checks: u64,
    pub violation: Option<PropertyViolation>,
}

impl PropertyReport {
    pub fn is_clean(&self) -> bool {
        self.violation.is_none()
    }
}

pub const EXHAUSTIVE_GROUND_LIMIT: usize = 12;
const SAMPLED_TRIPLES: u64 = 50_000;

/// Checks nonnegativity, monotonicity and diminishing returns of `f`
/// restricted to `ground`. Exhaustive up to [`EXHAUSTIVE_GROUND_LIMIT`]
/// elements, sampled (seed 0) beyond.
pub fn check_monotone_submodular(f: &dyn SetFunction, ground: &[usize]) -> PropertyReport {
    let n = ground.len();
    let to_set = |mask: usize| -> ItemSet { (0..n).filter(|b| mask & (1 << b) != 0).map(|b| ground[b]).collect() };
    let to_vec = |mask: usize| -> Vec<usize> { to_set(mask).into_iter().collect() };

    if n > EXHAUSTIVE_GROUND_LIMIT {
        return sampled_check(f, ground);
    }

    let table: Vec<i64> = (0..1usize << n).map(|m| f.eval(&to_set(m))).collect();
    let mut checks = 0u64;
    let report = |checks, violation| PropertyReport { exhaustive: true, checks, violation };

    for (mask, &v) in table.iter().enumerate() {
        checks += 1;
        if v < 0 {
            return report(checks, Some(PropertyViolation::Negative { set: to_vec(mask), value: v }));
        }
    }
    for mask in 0..table.len() {
        for b in 0..n {
            if mask & (1 << b) == 0 {
                checks += 1;
                if table[mask] > table[mask | (1 << b)] {
                    return report(
                        checks,
                        Some(PropertyViolation::NotMonotone { smaller: to_vec(mask), larger: to_vec(mask | (1 << b)) }),
                    );
                }
            }
        }
    }
    let full = (1usize << n) - 1;
    for big in 0..table.len() {
        // all submasks of `big`, including the empty one
        let mut small = big;
        loop {
            for b in 0..n {
                let bit = 1 << b;
                if big & bit == 0 {
                    checks += 1;
                    let gain_small = table[small | bit] - table[small];
                    let gain_big = table[big | bit] - table[big];
                    if gain_small < gain_big {
                        return report(
                            checks,
                            Some(PropertyViolation::NotSubmodular { a: to_vec(small), b: to_vec(big), item: ground[b] }),
                        );
                    }
                }
            }
            if small == 0 {
                break;
            }
            small = (small - 1) & big;
        }
        debug_assert!(big <= full);
    }
    report(checks, None)
}

fn sampled_check(f: &dyn SetFunction, ground: &[usize]) -> PropertyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut checks = 0;
    for _ in 0..SAMPLED_TRIPLES {
        let mut a = ItemSet::new();
        let mut b = ItemSet::new();
        let pivot = ground[rng.gen_range(0..ground.len())];
        for &g in ground {
            if g == pivot {
                continue;
            }
            match rng.gen_range(0..3) {
                0 => {
                    a.insert(g);
                    b.insert(g);
                }
                1 => {
                    b.insert(g);
                }
                _ => {}
            }
        }
        checks += 1;
        let (fa, fb) = (f.eval(&a), f.eval(&b));
        let mut a_plus = a.clone();
        a_plus.insert(pivot);
        let mut b_plus = b.clone();
        b_plus.insert(pivot);
        let (fap, fbp) = (f.eval(&a_plus), f.eval(&b_plus));
        let violation = if fa < 0 {
            Some(PropertyViolation::Negative { set: a.iter().copied().collect(), value: fa })
        } else if fa > fb {
            Some(PropertyViolation::NotMonotone { smaller: a.iter().copied().collect(), larger: b.iter().copied().collect() })
        } else if fap - fa < fbp - fb {
            Some(PropertyViolation::NotSubmodular {
                a: a.iter().copied().collect(),
                b: b.iter().copied().collect(),
                item: pivot,
            })
        } else {
            None
        };
        if violation.is_some() {
            return PropertyReport { exhaustive: false, checks, violation };
        }
    }
    PropertyReport { exhaustive: false, checks, violation: None }
}

/// JSON form of an oracle, keyed by item ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OracleDoc {
    Coverage {
        universe: BTreeMap<String, RawNum>,
        covers: BTreeMap<String, Vec<String>>,
    },
    Modular {
        kind: ModularTag,
        values: BTreeMap<String, RawNum>,
    },
    Sum {
        kind: SumTag,
        parts: Vec<OracleDoc>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModularTag {
    Modular,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumTag {
    Sum,
}

impl SetFunctionOracle {
    pub fn from_doc(doc: &OracleDoc, items: &[String], scale: u64) -> Result<Self> {
        let index: BTreeMap<&str, usize> = items.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| GmkError::input(format!("oracle references unknown item {id:?}")))
        };
        match doc {
            OracleDoc::Coverage { universe, covers } => {
                let names: Vec<String> = universe.keys().cloned().collect();
                let mut weights = Vec::with_capacity(names.len());
                for (name, raw) in universe {
                    let w = scale_to_int(raw, scale, &format!("universe weight {name}"))?;
                    if w < 0 {
                        return Err(GmkError::input(format!("universe element {name} has negative weight")));
                    }
                    weights.push(w);
                }
                let pos: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
                let mut cov = vec![Vec::new(); items.len()];
                for (item, elems) in covers {
                    let i = lookup(item)?;
                    let mut list = Vec::new();
                    for e in elems {
                        let u = *pos
                            .get(e.as_str())
                            .ok_or_else(|| GmkError::input(format!("item {item} covers unknown element {e:?}")))?;
                        list.push(u);
                    }
                    list.sort_unstable();
                    list.dedup();
                    cov[i] = list;
                }
                Ok(SetFunctionOracle::Coverage(CoverageFunction { universe: names, weights, covers: cov }))
            }
            OracleDoc::Modular { values, .. } => {
                let mut out = vec![0i64; items.len()];
                for (item, raw) in values {
                    let v = scale_to_int(raw, scale, &format!("modular value of {item}"))?;
                    if v < 0 {
                        return Err(GmkError::input(format!("modular oracle value of {item} is negative")));
                    }
                    out[lookup(item)?] = v;
                }
                Ok(SetFunctionOracle::Modular(out))
            }
            OracleDoc::Sum { parts, .. } => Ok(SetFunctionOracle::Sum(
                parts.iter().map(|p| Self::from_doc(p, items, scale)).collect::<Result<_>>()?,
            )),
        }
    }

    pub fn to_doc(&self, items: &[String]) -> OracleDoc {
        match self {
            SetFunctionOracle::Coverage(c) => OracleDoc::Coverage {
                universe: c.universe.iter().cloned().zip(c.weights.iter().map(|&w| RawNum::from(w))).collect(),
                covers: c
                    .covers
                    .iter()
                    .enumerate()
                    .filter(|(_, cov)| !cov.is_empty())
                    .map(|(i, cov)| (items[i].clone(), cov.iter().map(|&u| c.universe[u].clone()).collect()))
                    .collect(),
            },
            SetFunctionOracle::Modular(values) => OracleDoc::Modular {
                kind: ModularTag::Modular,
                values: values.iter().enumerate().map(|(i, &v)| (items[i].clone(), RawNum::from(v))).collect(),
            },
            SetFunctionOracle::Sum(parts) => OracleDoc::Sum {
                kind: SumTag::Sum,
                parts: parts.iter().map(|p| p.to_doc(items)).collect(),
            },
        }
    }

    /// Pads the oracle's ground set to `n` items (missing items contribute nothing).
    pub(crate) fn with_ground(mut self, n: usize) -> Self {
        match &mut self {
            SetFunctionOracle::Coverage(c) => c.covers.resize(n, Vec::new()),
            SetFunctionOracle::Modular(v) => v.resize(n, 0),
            SetFunctionOracle::Sum(parts) => {
                let owned = std::mem::take(parts);
                *parts = owned.into_iter().map(|p| p.with_ground(n)).collect();
            }
        }
        self
    }
}
