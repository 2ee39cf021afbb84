//! Enumeration of the non-empty feature-group subsets and the deterministic
//! search order used when the search is budget-limited.

use rand::seq::SliceRandom;

use crate::features::{FeatureGroup, FeatureSet};
use crate::seed;

/// Number of non-empty subsets of the fourteen groups.
pub const SUBSET_COUNT: usize = (1 << FeatureGroup::COUNT) - 1;

const ORDER_SEED: u64 = 0x5eed_0f_5ab5e7;

/// Every non-empty subset, in increasing mask order.
pub fn feature_subsets() -> Vec<FeatureSet> {
    (1..=FeatureSet::FULL.mask()).map(FeatureSet::from_mask).collect()
}

/// Search order: the full set first, then round-robin over subset sizes from
/// 13 down to 1, each size stratum in a fixed shuffled order. A budget takes a
/// prefix of this order; `None` (or a budget at least [`SUBSET_COUNT`])
/// searches everything.
pub fn search_order(budget: Option<usize>) -> Vec<FeatureSet> {
    let mut rng = seed::rng(ORDER_SEED);
    let mut strata: Vec<std::collections::VecDeque<FeatureSet>> = (1..FeatureGroup::COUNT)
        .rev()
        .map(|size| {
            let mut s: Vec<FeatureSet> = feature_subsets()
                .into_iter()
                .filter(|f| f.len() == size)
                .collect();
            s.shuffle(&mut rng);
            s.into()
        })
        .collect();
    let limit = budget.unwrap_or(SUBSET_COUNT).min(SUBSET_COUNT);
    let mut order = Vec::with_capacity(limit);
    order.push(FeatureSet::FULL);
    while order.len() < limit {
        for stratum in strata.iter_mut() {
            if order.len() >= limit {
                break;
            }
            if let Some(s) = stratum.pop_front() {
                order.push(s);
            }
        }
    }
    order.truncate(limit);
    order
}
