//! Canonical JSON formats for instances and solutions, and instance
//! validation. Stage keys in tables are 1-based stage numbers.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GmkError, Result};
use crate::instance::{
    check_feasible, Bin, GmkInstance, Mkc, MultistageSolution, Profit, Stage, StageTable, SubInstanceView,
    ValidationReport, Variant,
};
use crate::numeric::{scale_to_int, RawNum};
use crate::submodular::{ItemSet, OracleDoc, SetFunctionOracle};

pub type TableDoc = BTreeMap<String, BTreeMap<usize, RawNum>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MkcDoc {
    pub weights: BTreeMap<String, RawNum>,
    pub bins: Vec<String>,
    pub capacities: BTreeMap<String, RawNum>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageDoc {
    pub mkcs: Vec<MkcDoc>,
    /// Item → profit for the modular variant, an oracle for the submodular one.
    pub profit: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    #[serde(default)]
    pub variant: Variant,
    pub items: Vec<String>,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    /// Decimal profits, gains, costs and coverage weights are multiplied by this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_scale: Option<u64>,
    /// Decimal weights and capacities are multiplied by this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_scale: Option<u64>,
    pub stages: Vec<StageDoc>,
    #[serde(default)]
    pub gain_plus: TableDoc,
    #[serde(default)]
    pub gain_minus: TableDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_plus: Option<TableDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_minus: Option<TableDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

/// Lists every violated invariant of an instance document.
pub fn validate_instance(doc: &InstanceDoc) -> ValidationReport {
    match build_instance(doc) {
        Ok((_, report)) | Err(report) => report,
    }
}

impl GmkInstance {
    pub fn from_doc(doc: &InstanceDoc) -> Result<Self> {
        match build_instance(doc) {
            Ok((inst, report)) if report.is_ok() => Ok(inst),
            Ok((_, report)) | Err(report) => Err(GmkError::InvalidInstance(report)),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }

    pub fn to_doc(&self) -> InstanceDoc {
        let items = &self.items;
        let stages = self
            .stages
            .iter()
            .map(|st| StageDoc {
                mkcs: st
                    .mkcs
                    .iter()
                    .map(|m| MkcDoc {
                        weights: items.iter().cloned().zip(m.weights.iter().map(|&w| RawNum::from(w))).collect(),
                        bins: m.bins.iter().map(|b| b.id.clone()).collect(),
                        capacities: m.bins.iter().map(|b| (b.id.clone(), RawNum::from(b.capacity))).collect(),
                    })
                    .collect(),
                profit: match &st.profit {
                    Profit::Modular(p) => serde_json::to_value(
                        items.iter().cloned().zip(p.iter().map(|&v| RawNum::from(v))).collect::<BTreeMap<_, _>>(),
                    )
                    .expect("profit table serializes"),
                    Profit::Oracle(f) => serde_json::to_value(f.to_doc(items)).expect("oracle serializes"),
                },
            })
            .collect();
        let table = |t: &StageTable| -> TableDoc {
            let (first, last) = t.range();
            items
                .iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), (first..=last).map(|s| (s, RawNum::from(t.get(i, s)))).collect()))
                .collect()
        };
        let costs = self.variant == Variant::Modular;
        InstanceDoc {
            variant: self.variant,
            items: items.clone(),
            horizon: self.horizon,
            dimension: Some(self.dimension),
            value_scale: None,
            weight_scale: None,
            stages,
            gain_plus: table(&self.gain_plus),
            gain_minus: table(&self.gain_minus),
            cost_plus: costs.then(|| table(&self.cost_plus)),
            cost_minus: costs.then(|| table(&self.cost_minus)),
            metadata: self.metadata.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("instance serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Builds the instance while collecting issues. Returns `Err` only when the
/// document is too malformed to build anything at all.
fn build_instance(doc: &InstanceDoc) -> std::result::Result<(GmkInstance, ValidationReport), ValidationReport> {
    let mut report = ValidationReport::default();
    let value_scale = doc.value_scale.unwrap_or(1);
    let weight_scale = doc.weight_scale.unwrap_or(1);
    if value_scale == 0 || weight_scale == 0 {
        report.push("scales must be positive");
        return Err(report);
    }

    let items = &doc.items;
    let mut index = BTreeMap::new();
    for (i, id) in items.iter().enumerate() {
        if id.is_empty() {
            report.push(format!("item {i} has an empty id"));
        }
        if index.insert(id.as_str(), i).is_some() {
            report.push(format!("duplicate item id {id:?}"));
        }
    }
    let n = items.len();
    let horizon = doc.horizon;
    if horizon == 0 {
        report.push("horizon must be at least 1");
        return Err(report);
    }
    if doc.stages.len() != horizon {
        report.push(format!("horizon is {horizon} but {} stages are given", doc.stages.len()));
        return Err(report);
    }

    let num = |raw: &RawNum, scale: u64, what: &str, report: &mut ValidationReport| -> i64 {
        match scale_to_int(raw, scale, what) {
            Ok(v) => v,
            Err(e) => {
                report.push(e.to_string().trim_start_matches("input error: ").to_string());
                0
            }
        }
    };

    let mut stages = Vec::with_capacity(horizon);
    for (s, sd) in doc.stages.iter().enumerate() {
        let t = s + 1;
        if sd.mkcs.is_empty() {
            report.push(format!("stage {t} has no constraints (need 1 <= d_t)"));
        }
        let mut mkcs = Vec::new();
        for (j, md) in sd.mkcs.iter().enumerate() {
            let j = j + 1;
            let mut weights = vec![0u64; n];
            let mut missing = 0;
            for (i, id) in items.iter().enumerate() {
                match md.weights.get(id) {
                    Some(raw) => {
                        let w = num(raw, weight_scale, &format!("weight of {id} at stage {t}, constraint {j}"), &mut report);
                        if w < 0 {
                            report.push(format!("negative weight for item {id} at stage {t}, constraint {j}"));
                        }
                        weights[i] = w.max(0) as u64;
                    }
                    None => missing += 1,
                }
            }
            if missing > 0 {
                report.push(format!("weights incomplete at stage {t}, constraint {j} ({missing} items missing)"));
            }
            for id in md.weights.keys() {
                if !index.contains_key(id.as_str()) {
                    report.push(format!("weights at stage {t}, constraint {j} name unknown item {id:?}"));
                }
            }
            if md.bins.is_empty() {
                report.push(format!("stage {t}, constraint {j} has no bins"));
            }
            let mut seen = BTreeSet::new();
            let mut bins = Vec::new();
            for b in &md.bins {
                if !seen.insert(b.as_str()) {
                    report.push(format!("bin {b:?} listed twice at stage {t}, constraint {j}"));
                    continue;
                }
                let capacity = match md.capacities.get(b) {
                    Some(raw) => {
                        let c = num(raw, weight_scale, &format!("capacity of bin {b}"), &mut report);
                        if c < 0 {
                            report.push(format!("negative capacity for bin {b} at stage {t}, constraint {j}"));
                        }
                        c.max(0) as u64
                    }
                    None => {
                        report.push(format!("bin {b} at stage {t}, constraint {j} has no capacity"));
                        0
                    }
                };
                bins.push(Bin { id: b.clone(), capacity });
            }
            for b in md.capacities.keys() {
                if !seen.contains(b.as_str()) {
                    report.push(format!("capacity given for unlisted bin {b:?} at stage {t}, constraint {j}"));
                }
            }
            mkcs.push(Mkc { weights, bins });
        }

        let profit = match doc.variant {
            Variant::Modular => {
                let mut p = vec![0i64; n];
                match serde_json::from_value::<BTreeMap<String, RawNum>>(sd.profit.clone()) {
                    Ok(table) => {
                        for (i, id) in items.iter().enumerate() {
                            match table.get(id) {
                                Some(raw) => {
                                    let v = num(raw, value_scale, &format!("profit of {id} at stage {t}"), &mut report);
                                    if v < 0 {
                                        report.push(format!("negative profit for item {id} at stage {t}"));
                                    }
                                    p[i] = v;
                                }
                                None => report.push(format!("profit incomplete at stage {t}: item {id} missing")),
                            }
                        }
                        for id in table.keys() {
                            if !index.contains_key(id.as_str()) {
                                report.push(format!("profit at stage {t} names unknown item {id:?}"));
                            }
                        }
                    }
                    Err(e) => report.push(format!("profit at stage {t} is not an item -> number map: {e}")),
                }
                Profit::Modular(p)
            }
            Variant::Submodular => match serde_json::from_value::<OracleDoc>(sd.profit.clone()) {
                Ok(od) => match SetFunctionOracle::from_doc(&od, items, value_scale) {
                    Ok(f) => Profit::Oracle(f.with_ground(n)),
                    Err(e) => {
                        report.push(format!("profit oracle at stage {t}: {}", e.to_string().trim_start_matches("input error: ")));
                        Profit::Oracle(SetFunctionOracle::Modular(vec![0; n]))
                    }
                },
                Err(e) => {
                    report.push(format!("profit at stage {t} is not a coverage, modular or sum oracle: {e}"));
                    Profit::Oracle(SetFunctionOracle::Modular(vec![0; n]))
                }
            },
        };
        stages.push(Stage { mkcs, profit });
    }

    let max_dt = stages.iter().map(|s| s.mkcs.len()).max().unwrap_or(0).max(1);
    let dimension = match doc.dimension {
        Some(d) => {
            if d < max_dt {
                report.push(format!("dimension {d} is smaller than a stage's constraint count {max_dt}"));
            }
            d.max(max_dt)
        }
        None => max_dt,
    };

    let table = |name: &str, td: Option<&TableDoc>, first: usize, report: &mut ValidationReport| -> StageTable {
        let mut out = StageTable::zeros(n, first, horizon);
        let Some(td) = td else { return out };
        let mut missing = 0usize;
        for (i, id) in items.iter().enumerate() {
            let row = td.get(id);
            for t in first..=horizon {
                match row.and_then(|r| r.get(&t)) {
                    Some(raw) => {
                        let v = num(raw, value_scale, &format!("{name} of {id} at stage {t}"), report);
                        if v < 0 {
                            report.push(format!("{name} is negative for item {id} at stage {t}"));
                        }
                        out.set(i, t, v);
                    }
                    None => missing += 1,
                }
            }
        }
        if missing > 0 {
            report.push(format!("{name} incomplete ({missing} entries missing over items x [{first}, {horizon}])"));
        }
        for (id, row) in td {
            if !index.contains_key(id.as_str()) {
                report.push(format!("{name} names unknown item {id:?}"));
            }
            if let Some(t) = row.keys().find(|&&t| t < first || t > horizon) {
                report.push(format!("{name} has an entry for {id} at stage {t}, outside [{first}, {horizon}]"));
            }
        }
        out
    };

    let gain_plus = table("gain_plus", Some(&doc.gain_plus), 2, &mut report);
    let gain_minus = table("gain_minus", Some(&doc.gain_minus), 2, &mut report);
    let (cost_plus, cost_minus) = match doc.variant {
        Variant::Modular => (
            table("cost_plus", Some(doc.cost_plus.as_ref().unwrap_or(&BTreeMap::new())), 1, &mut report),
            table("cost_minus", Some(doc.cost_minus.as_ref().unwrap_or(&BTreeMap::new())), 1, &mut report),
        ),
        Variant::Submodular => {
            let cp = table("cost_plus", doc.cost_plus.as_ref(), 1, &mut report);
            let cm = table("cost_minus", doc.cost_minus.as_ref(), 1, &mut report);
            if !cp.is_zero() || !cm.is_zero() {
                report.push("submodular variant must have zero change costs");
            }
            (cp, cm)
        }
    };

    let inst = GmkInstance {
        variant: doc.variant,
        items: items.clone(),
        horizon,
        dimension,
        stages,
        gain_plus,
        gain_minus,
        cost_plus,
        cost_minus,
        metadata: doc.metadata.clone(),
    };
    Ok((inst, report))
}

/// JSON form of a multistage solution: item ids per stage and, per stage and
/// constraint, a bin → items map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub sets: Vec<Vec<String>>,
    pub assignments: Vec<Vec<BTreeMap<String, Vec<String>>>>,
}

impl MultistageSolution {
    pub fn to_doc(&self, view: &SubInstanceView<'_>) -> SolutionDoc {
        let items = &view.inst.items;
        let names = |s: &ItemSet| s.iter().map(|&i| items[i].clone()).collect::<Vec<_>>();
        SolutionDoc {
            sets: self.sets.iter().map(names).collect(),
            assignments: self
                .assignments
                .iter()
                .enumerate()
                .map(|(k, per_mkc)| {
                    let stage = view.stage_local(k + 1);
                    per_mkc
                        .iter()
                        .zip(&stage.mkcs)
                        .map(|(bins, mkc)| {
                            mkc.bins.iter().zip(bins).map(|(b, s)| (b.id.clone(), names(s))).collect()
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &SolutionDoc, view: &SubInstanceView<'_>) -> Result<Self> {
        let inst = view.inst;
        let resolve = |ids: &[String]| -> Result<ItemSet> {
            ids.iter()
                .map(|id| inst.item_index(id).ok_or_else(|| GmkError::input(format!("unknown item id {id:?}"))))
                .collect()
        };
        if doc.sets.len() != view.horizon() || doc.assignments.len() != view.horizon() {
            return Err(GmkError::input(format!(
                "solution covers {} stages, instance has {}",
                doc.sets.len(),
                view.horizon()
            )));
        }
        let sets = doc.sets.iter().map(|s| resolve(s)).collect::<Result<Vec<_>>>()?;
        let mut assignments = Vec::with_capacity(doc.assignments.len());
        for (k, per_mkc) in doc.assignments.iter().enumerate() {
            let stage = view.stage_local(k + 1);
            if per_mkc.len() != stage.mkcs.len() {
                return Err(GmkError::input(format!(
                    "stage {} has {} assignments, expected {}",
                    view.global(k + 1),
                    per_mkc.len(),
                    stage.mkcs.len()
                )));
            }
            let mut row = Vec::new();
            for (map, mkc) in per_mkc.iter().zip(&stage.mkcs) {
                if let Some(b) = map.keys().find(|b| !mkc.bins.iter().any(|x| &x.id == *b)) {
                    return Err(GmkError::input(format!("unknown bin id {b:?} at stage {}", view.global(k + 1))));
                }
                let bins = mkc
                    .bins
                    .iter()
                    .map(|b| map.get(&b.id).map(|ids| resolve(ids)).unwrap_or_else(|| Ok(ItemSet::new())))
                    .collect::<Result<Vec<_>>>()?;
                row.push(bins);
            }
            assignments.push(row);
        }
        Ok(MultistageSolution { sets, assignments })
    }

    pub fn to_json(&self, view: &SubInstanceView<'_>) -> String {
        serde_json::to_string_pretty(&self.to_doc(view)).expect("solution serializes")
    }

    /// Parses and checks feasibility.
    pub fn from_json(text: &str, view: &SubInstanceView<'_>) -> Result<Self> {
        let doc: SolutionDoc = serde_json::from_str(text)?;
        let sol = Self::from_doc(&doc, view)?;
        let report = check_feasible(view, &sol);
        if !report.is_ok() {
            return Err(GmkError::Infeasible(report));
        }
        Ok(sol)
    }
}
