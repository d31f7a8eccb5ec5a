//! The profit-cost ratio of a modular instance.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::error::{GmkError, Result};
use crate::instance::{GmkInstance, Variant};
use crate::numeric::ratio_to_string;

/// A nonnegative rational or `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendedRatio {
    Finite(Ratio<u64>),
    Infinite,
}

impl ExtendedRatio {
    pub fn zero() -> Self {
        ExtendedRatio::Finite(Ratio::from_integer(0))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedRatio::Finite(_))
    }
}

impl Ord for ExtendedRatio {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtendedRatio::Infinite, ExtendedRatio::Infinite) => Ordering::Equal,
            (ExtendedRatio::Infinite, _) => Ordering::Greater,
            (_, ExtendedRatio::Infinite) => Ordering::Less,
            (ExtendedRatio::Finite(a), ExtendedRatio::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for ExtendedRatio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExtendedRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedRatio::Finite(r) => f.write_str(&ratio_to_string(r)),
            ExtendedRatio::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedRatio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Per-item extremes behind the ratio.
#[derive(Debug, Clone, Copy)]
struct ItemExtremes {
    cost: i64,
    cost_stage: usize,
    profit: i64,
    profit_stage: usize,
}

impl ItemExtremes {
    fn ratio(&self) -> ExtendedRatio {
        if self.cost == 0 {
            ExtendedRatio::zero()
        } else if self.profit == 0 {
            ExtendedRatio::Infinite
        } else {
            ExtendedRatio::Finite(Ratio::new(self.cost as u64, self.profit as u64))
        }
    }
}

fn extremes(inst: &GmkInstance) -> Result<Vec<ItemExtremes>> {
    if inst.variant != Variant::Modular {
        return Err(GmkError::Unsupported("the profit-cost ratio needs modular profits".into()));
    }
    Ok((0..inst.num_items())
        .map(|i| {
            let mut ex = ItemExtremes { cost: 0, cost_stage: 1, profit: i64::MAX, profit_stage: 1 };
            for t in 1..=inst.horizon {
                let c = inst.cost_plus.get(i, t).max(inst.cost_minus.get(i, t));
                if c > ex.cost {
                    ex.cost = c;
                    ex.cost_stage = t;
                }
                let p = inst.stage(t).profit.item(i).unwrap_or(0);
                if p < ex.profit {
                    ex.profit = p;
                    ex.profit_stage = t;
                }
            }
            ex
        })
        .collect())
}

/// `max_i (max_t cost) / (min_t profit)`, with `x/0 = Infinite` for `x > 0`
/// and items without any cost contributing 0.
pub fn profit_cost_ratio(inst: &GmkInstance) -> Result<ExtendedRatio> {
    Ok(extremes(inst)?.iter().map(ItemExtremes::ratio).max().unwrap_or_else(ExtendedRatio::zero))
}

/// Fails with [`GmkError::PhiBound`] naming the first item whose ratio
/// exceeds `phi`.
pub fn check_phi_bound(inst: &GmkInstance, phi: u64) -> Result<()> {
    let bound = ExtendedRatio::Finite(Ratio::from_integer(phi));
    for (i, ex) in extremes(inst)?.iter().enumerate() {
        let r = ex.ratio();
        if r > bound {
            return Err(GmkError::PhiBound {
                item: inst.items[i].clone(),
                cost_stage: ex.cost_stage,
                cost: ex.cost,
                profit_stage: ex.profit_stage,
                profit: ex.profit,
                ratio: r.to_string(),
                phi,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::single_item_t2;
    use crate::instance::{Profit, StageTable};

    fn uniform(profit: i64, cost: i64) -> GmkInstance {
        let mut inst = single_item_t2();
        for st in &mut inst.stages {
            st.profit = Profit::Modular(vec![profit]);
        }
        inst.cost_plus = StageTable::from_fn(1, 1, 2, |_, _| cost);
        inst.cost_minus = StageTable::from_fn(1, 1, 2, |_, _| cost);
        inst
    }

    #[test]
    fn max_cost_over_min_profit() {
        assert_eq!(profit_cost_ratio(&uniform(2, 1)).unwrap(), ExtendedRatio::Finite(Ratio::new(1, 2)));
        assert_eq!(profit_cost_ratio(&uniform(2, 0)).unwrap(), ExtendedRatio::zero());
        assert_eq!(profit_cost_ratio(&uniform(0, 0)).unwrap(), ExtendedRatio::zero());
    }

    #[test]
    fn zero_profit_with_cost_is_infinite() {
        let mut inst = uniform(3, 0);
        inst.cost_plus.set(0, 1, 1);
        inst.stages[1].profit = Profit::Modular(vec![0]);
        assert_eq!(profit_cost_ratio(&inst).unwrap(), ExtendedRatio::Infinite);
        assert!(ExtendedRatio::Infinite > ExtendedRatio::Finite(Ratio::from_integer(1000)));
    }

    #[test]
    fn bound_violation_names_item_and_stages() {
        let mut inst = uniform(2, 1);
        inst.cost_minus.set(0, 2, 5);
        inst.stages[0].profit = Profit::Modular(vec![1]);
        match check_phi_bound(&inst, 1) {
            Err(GmkError::PhiBound { item, cost_stage, profit_stage, ratio, .. }) => {
                assert_eq!(item, "i");
                assert_eq!((cost_stage, profit_stage), (2, 1));
                assert_eq!(ratio, "5");
            }
            other => panic!("{other:?}"),
        }
        assert!(check_phi_bound(&inst, 5).is_ok());
    }
}
