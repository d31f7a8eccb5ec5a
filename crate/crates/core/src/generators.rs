//! Instance generators: two structured families built from multidimensional
//! knapsack instances, and a seeded random generator with a bound on the
//! profit-cost ratio.

use std::collections::BTreeSet;

use num_integer::Integer;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{GmkError, Result};
use crate::instance::{Bin, GmkInstance, Mkc, Profit, Stage, StageTable, Variant};
use crate::numeric::{parse_ratio, ratio_to_string};
use crate::ratio::{profit_cost_ratio, ExtendedRatio};
use crate::submodular::{CoverageFunction, SetFunctionOracle};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KpItem {
    pub id: String,
    /// One weight per dimension.
    pub weights: Vec<u64>,
    pub profit: u64,
}

/// Items with `d`-dimensional weights and a single capacity per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultidimKnapsackInstance {
    pub items: Vec<KpItem>,
    pub capacities: Vec<u64>,
}

impl MultidimKnapsackInstance {
    pub fn dimension(&self) -> usize {
        self.capacities.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension();
        if d == 0 {
            return Err(GmkError::input("knapsack instance needs at least one dimension"));
        }
        let mut seen = BTreeSet::new();
        for it in &self.items {
            if !seen.insert(it.id.as_str()) {
                return Err(GmkError::input(format!("duplicate item id {:?}", it.id)));
            }
            if it.weights.len() != d {
                return Err(GmkError::input(format!(
                    "item {} has {} weights, expected {d}",
                    it.id,
                    it.weights.len()
                )));
            }
        }
        Ok(())
    }

    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("knapsack serializes")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let kp: Self = serde_json::from_str(text)?;
        kp.validate()?;
        Ok(kp)
    }
}

/// Exhaustive optimum of a knapsack instance: value and chosen item indices.
pub fn brute_force_kp(kp: &MultidimKnapsackInstance) -> Result<(u64, Vec<usize>)> {
    kp.validate()?;
    let n = kp.items.len();
    if n > 24 {
        return Err(GmkError::BudgetExceeded {
            what: format!("knapsack enumeration over {n} items"),
            budget: 1 << 24,
            hint: "use at most 24 items".into(),
        });
    }
    let mut best = (0u64, 0usize);
    for mask in 0..1usize << n {
        let members = (0..n).filter(|b| mask & (1 << b) != 0);
        let fits = (0..kp.dimension()).all(|j| {
            members.clone().map(|i| kp.items[i].weights[j]).sum::<u64>() <= kp.capacities[j]
        });
        if fits {
            let value = members.map(|i| kp.items[i].profit).sum();
            if value > best.0 {
                best = (value, mask);
            }
        }
    }
    Ok((best.0, (0..n).filter(|b| best.1 & (1 << b) != 0).collect()))
}

fn single_bin_stage(weights: Vec<u64>, capacity: u64, profit: Vec<i64>) -> Stage {
    Stage {
        mkcs: vec![Mkc { weights, bins: vec![Bin { id: "b".into(), capacity }] }],
        profit: Profit::Modular(profit),
    }
}

/// One stage per dimension, each holding that dimension's knapsack with
/// per-stage profit `p/d`, and change costs `p` everywhere except on entry at
/// stage 1 and exit at stage `d`. Keeping one set throughout earns exactly
/// `p`; any change costs at least as much as it could gain.
///
/// Profits are multiplied by the smallest factor making every profit
/// divisible by `d`; the factor is recorded as `profit_scale` in the
/// metadata.
pub fn gen_from_multidim_knapsack(kp: &MultidimKnapsackInstance) -> Result<GmkInstance> {
    kp.validate()?;
    let d = kp.dimension();
    let n = kp.items.len();
    let g = kp.items.iter().fold(0u64, |acc, it| acc.gcd(&it.profit));
    let scale = d as u64 / (d as u64).gcd(&g);
    let scaled: Vec<i64> = kp.items.iter().map(|it| (it.profit * scale) as i64).collect();
    let per_stage: Vec<i64> = scaled.iter().map(|p| p / d as i64).collect();

    let stages = (0..d)
        .map(|j| single_bin_stage(kp.items.iter().map(|it| it.weights[j]).collect(), kp.capacities[j], per_stage.clone()))
        .collect();
    let cost_plus = StageTable::from_fn(n, 1, d, |i, t| if t >= 2 { scaled[i] } else { 0 });
    let cost_minus = StageTable::from_fn(n, 1, d, |i, t| if t < d { scaled[i] } else { 0 });
    Ok(GmkInstance {
        variant: Variant::Modular,
        items: kp.items.iter().map(|it| it.id.clone()).collect(),
        horizon: d,
        dimension: 1,
        stages,
        gain_plus: StageTable::zeros(n, 2, d),
        gain_minus: StageTable::zeros(n, 2, d),
        cost_plus,
        cost_minus,
        metadata: Some(json!({
            "source": "multidim-knapsack",
            "original_hash": kp.content_hash(),
            "profit_scale": scale,
        })),
    })
}

/// Two stages holding the two knapsack dimensions, zero profits and costs,
/// and a keep-gain at stage 2 equal to the item's profit.
pub fn gen_from_2kp(kp: &MultidimKnapsackInstance) -> Result<GmkInstance> {
    kp.validate()?;
    if kp.dimension() != 2 {
        return Err(GmkError::input(format!("expected a 2-dimensional knapsack, got d={}", kp.dimension())));
    }
    let n = kp.items.len();
    let stages = (0..2)
        .map(|j| single_bin_stage(kp.items.iter().map(|it| it.weights[j]).collect(), kp.capacities[j], vec![0; n]))
        .collect();
    Ok(GmkInstance {
        variant: Variant::Modular,
        items: kp.items.iter().map(|it| it.id.clone()).collect(),
        horizon: 2,
        dimension: 1,
        stages,
        gain_plus: StageTable::from_fn(n, 2, 2, |i, _| kp.items[i].profit as i64),
        gain_minus: StageTable::zeros(n, 2, 2),
        cost_plus: StageTable::zeros(n, 1, 2),
        cost_minus: StageTable::zeros(n, 1, 2),
        metadata: Some(json!({
            "source": "two-dimensional-knapsack",
            "original_hash": kp.content_hash(),
            "profit_scale": 1,
        })),
    })
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub lo: u64,
    pub hi: u64,
}

impl Range {
    pub const fn new(lo: u64, hi: u64) -> Self {
        Range { lo, hi }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        rng.gen_range(self.lo..=self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomParams {
    pub variant: Variant,
    pub items: usize,
    pub horizon: usize,
    /// Each stage gets between 1 and `dimension` constraints.
    pub dimension: usize,
    pub bins_per_mkc: usize,
    pub weight: Range,
    pub capacity: Range,
    pub profit: Range,
    pub gain: Range,
    pub cost: Range,
    /// Upper bound on the profit-cost ratio, as a decimal string, or `None`
    /// for no bound.
    pub target_phi: Option<String>,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            variant: Variant::Modular,
            items: 3,
            horizon: 4,
            dimension: 1,
            bins_per_mkc: 1,
            weight: Range::new(1, 4),
            capacity: Range::new(2, 8),
            profit: Range::new(1, 5),
            gain: Range::new(0, 2),
            cost: Range::new(0, 2),
            target_phi: Some("1".into()),
        }
    }
}

impl RandomParams {
    fn check(&self) -> Result<Option<Ratio<u64>>> {
        if self.horizon == 0 || self.dimension == 0 || self.bins_per_mkc == 0 {
            return Err(GmkError::input("horizon, dimension and bins_per_mkc must be at least 1"));
        }
        for (name, r) in [
            ("weight", self.weight),
            ("capacity", self.capacity),
            ("profit", self.profit),
            ("gain", self.gain),
            ("cost", self.cost),
        ] {
            if r.lo > r.hi {
                return Err(GmkError::input(format!("{name} range is empty: {} > {}", r.lo, r.hi)));
            }
            if r.hi > i64::MAX as u64 / 1024 {
                return Err(GmkError::input(format!("{name} range is too large")));
            }
        }
        self.target_phi.as_deref().map(parse_ratio).transpose()
    }
}

/// Seeded random instance. With a finite target ratio, each item's change
/// costs are scaled down (rounding down) until its largest cost is at most
/// `target · (smallest profit)`.
pub fn gen_random(params: &RandomParams, seed: u64) -> Result<GmkInstance> {
    let target = params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.items;
    let h = params.horizon;
    let modular = params.variant == Variant::Modular;

    let mut stages = Vec::with_capacity(h);
    for _ in 0..h {
        let d_t = rng.gen_range(1..=params.dimension);
        let mkcs = (0..d_t)
            .map(|_| Mkc {
                weights: (0..n).map(|_| params.weight.sample(&mut rng)).collect(),
                bins: (1..=params.bins_per_mkc)
                    .map(|b| Bin { id: format!("b{b}"), capacity: params.capacity.sample(&mut rng) })
                    .collect(),
            })
            .collect();
        let profit = if modular {
            Profit::Modular((0..n).map(|_| params.profit.sample(&mut rng) as i64).collect())
        } else {
            let size = n + 2;
            let weights = (0..size).map(|_| params.profit.sample(&mut rng) as i64).collect();
            let covers = (0..n)
                .map(|_| {
                    let k = rng.gen_range(1..=3.min(size));
                    let mut c: Vec<usize> = (0..k).map(|_| rng.gen_range(0..size)).collect();
                    c.sort_unstable();
                    c.dedup();
                    c
                })
                .collect();
            Profit::Oracle(SetFunctionOracle::Coverage(CoverageFunction {
                universe: (1..=size).map(|u| format!("u{u}")).collect(),
                weights,
                covers,
            }))
        };
        stages.push(Stage { mkcs, profit });
    }
    let dimension = stages.iter().map(|s| s.mkcs.len()).max().unwrap_or(1).max(params.dimension);
    let mut table = |first: usize| StageTable::from_fn(n, first, h, |_, _| params.gain.sample(&mut rng) as i64);
    let gain_plus = table(2);
    let gain_minus = table(2);
    let (mut cost_plus, mut cost_minus) = if modular {
        (
            StageTable::from_fn(n, 1, h, |_, _| params.cost.sample(&mut rng) as i64),
            StageTable::from_fn(n, 1, h, |_, _| params.cost.sample(&mut rng) as i64),
        )
    } else {
        (StageTable::zeros(n, 1, h), StageTable::zeros(n, 1, h))
    };

    if let (true, Some(target)) = (modular, target) {
        for i in 0..n {
            let min_profit = stages.iter().map(|s| s.profit.item(i).unwrap_or(0)).min().unwrap_or(0) as u64;
            let allowed = (target * Ratio::from_integer(min_profit)).floor().to_integer() as i64;
            let max_cost = cost_plus.item_row(i).iter().chain(cost_minus.item_row(i)).copied().max().unwrap_or(0);
            if max_cost > allowed {
                for row in [cost_plus.item_row_mut(i), cost_minus.item_row_mut(i)] {
                    for c in row.iter_mut() {
                        *c = *c * allowed / max_cost;
                    }
                }
            }
        }
    }

    let inst = GmkInstance {
        variant: params.variant,
        items: (1..=n).map(|i| format!("i{i}")).collect(),
        horizon: h,
        dimension,
        stages,
        gain_plus,
        gain_minus,
        cost_plus,
        cost_minus,
        metadata: Some(json!({ "source": "random", "seed": seed, "params": params })),
    };
    if let (true, Some(target)) = (modular, target) {
        let phi = profit_cost_ratio(&inst)?;
        if phi > ExtendedRatio::Finite(target) {
            return Err(GmkError::Contract(format!(
                "generated ratio {phi} exceeds the target {}",
                ratio_to_string(&target)
            )));
        }
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp(items: &[(&[u64], u64)], caps: &[u64]) -> MultidimKnapsackInstance {
        MultidimKnapsackInstance {
            items: items
                .iter()
                .enumerate()
                .map(|(k, (w, p))| KpItem { id: format!("x{k}"), weights: w.to_vec(), profit: *p })
                .collect(),
            capacities: caps.to_vec(),
        }
    }

    #[test]
    fn one_dimension_is_a_plain_knapsack() {
        let inst = gen_from_multidim_knapsack(&kp(&[(&[2], 3), (&[3], 4)], &[4])).unwrap();
        assert_eq!(inst.horizon, 1);
        assert!(inst.cost_plus.is_zero() && inst.cost_minus.is_zero());
        assert_eq!(inst.stages[0].profit.item(1), Some(4));
    }

    #[test]
    fn two_dimensions_halve_profits_and_charge_changes() {
        let inst = gen_from_multidim_knapsack(&kp(&[(&[1, 1], 6)], &[1, 1])).unwrap();
        assert_eq!(inst.stages[0].profit.item(0), Some(3));
        assert_eq!(inst.stages[1].profit.item(0), Some(3));
        assert_eq!(inst.cost_plus.get(0, 2), 6);
        assert_eq!(inst.cost_minus.get(0, 1), 6);
        assert_eq!(inst.cost_plus.get(0, 1), 0);
        assert_eq!(inst.cost_minus.get(0, 2), 0);
        assert_eq!(inst.metadata.as_ref().unwrap()["profit_scale"], 1);

        let odd = gen_from_multidim_knapsack(&kp(&[(&[1, 1], 3)], &[1, 1])).unwrap();
        assert_eq!(odd.metadata.as_ref().unwrap()["profit_scale"], 2);
        assert_eq!(odd.stages[0].profit.item(0), Some(3));
    }

    #[test]
    fn two_kp_moves_profit_into_keep_gain() {
        let inst = gen_from_2kp(&kp(&[(&[1, 2], 7)], &[3, 3])).unwrap();
        assert_eq!(inst.gain_plus.get(0, 2), 7);
        assert_eq!(inst.stages[0].profit.item(0), Some(0));
        assert!(gen_from_2kp(&kp(&[(&[1], 7)], &[3])).is_err());
    }

    #[test]
    fn random_is_seeded_and_bounded() {
        let p = RandomParams::default();
        let a = gen_random(&p, 7).unwrap().to_json();
        let b = gen_random(&p, 7).unwrap().to_json();
        assert_eq!(a, b);
        assert_ne!(a, gen_random(&p, 8).unwrap().to_json());

        let zero = RandomParams { target_phi: Some("0".into()), cost: Range::new(1, 9), ..p.clone() };
        let inst = gen_random(&zero, 1).unwrap();
        assert!(inst.cost_plus.is_zero() && inst.cost_minus.is_zero());

        let bad = RandomParams { weight: Range::new(3, 2), ..p };
        assert!(matches!(gen_random(&bad, 0), Err(GmkError::Input(_))));
    }

    #[test]
    fn knapsack_oracle() {
        let (v, set) = brute_force_kp(&kp(&[(&[2, 1], 3), (&[3, 1], 4), (&[4, 2], 5)], &[5, 2])).unwrap();
        assert_eq!(v, 7);
        assert_eq!(set, vec![0, 1]);
    }
}
