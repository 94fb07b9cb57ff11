//! Record-level train/val/test assignment.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::seed::keyed_rng;
use crate::types::{QAInstance, Split};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("split ratios must be finite and non-negative, got {0:?}")]
    Negative([f64; 3]),
    #[error("split ratios must sum to 1, got {sum} from {ratios:?}")]
    Sum { ratios: [f64; 3], sum: f64 },
}

pub fn check_ratios(ratios: [f64; 3]) -> Result<(), SplitError> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(SplitError::Negative(ratios));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SplitError::Sum { ratios, sum });
    }
    Ok(())
}

/// Assigns each distinct record ID to a split.
///
/// IDs are sorted, shuffled with a generator derived from `seed`, and cut
/// into consecutive blocks of `round(ratio * n)` records (test takes the
/// remainder), so the outcome does not depend on input order.
pub fn assign_records<'a>(
    record_ids: impl IntoIterator<Item = &'a str>,
    ratios: [f64; 3],
    seed: u64,
) -> Result<BTreeMap<String, Split>, SplitError> {
    check_ratios(ratios)?;
    let unique: BTreeSet<&str> = record_ids.into_iter().collect();
    let mut ids: Vec<&str> = unique.into_iter().collect();
    ids.shuffle(&mut keyed_rng(seed, "split"));

    let n = ids.len();
    let n_train = ((ratios[0] * n as f64).round() as usize).min(n);
    let n_val = ((ratios[1] * n as f64).round() as usize).min(n - n_train);
    Ok(ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            (id.to_string(), split)
        })
        .collect())
}

/// Sets the split of every instance so that all instances of a record share
/// one split.
pub fn split_dataset(
    mut instances: Vec<QAInstance>,
    ratios: [f64; 3],
    seed: u64,
) -> Result<Vec<QAInstance>, SplitError> {
    let assignment = assign_records(instances.iter().map(|i| i.record_id.as_str()), ratios, seed)?;
    for instance in &mut instances {
        instance.split = assignment.get(&instance.record_id).copied();
    }
    Ok(instances)
}
