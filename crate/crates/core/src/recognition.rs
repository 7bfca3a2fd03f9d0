//! Detects whether an instance splits into channel groups with per-user
//! uniform gains, and recovers the groups.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MpcaInstance;

/// Partition of channels into `K` groups, ids numbered by first occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStructure {
    group_id: Vec<usize>,
    group_sizes: Vec<usize>,
}

impl GroupStructure {
    /// Relabels arbitrary per-channel labels to ids `0..K` in order of first
    /// appearance.
    pub fn from_labels<T: Eq + Hash>(labels: impl IntoIterator<Item = T>) -> Self {
        let mut ids: HashMap<T, usize> = HashMap::new();
        let mut group_sizes = Vec::new();
        let group_id = labels
            .into_iter()
            .map(|label| {
                let next = ids.len();
                let id = *ids.entry(label).or_insert(next);
                if id == group_sizes.len() {
                    group_sizes.push(0);
                }
                group_sizes[id] += 1;
                id
            })
            .collect();
        GroupStructure {
            group_id,
            group_sizes,
        }
    }

    pub fn num_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn group_id(&self) -> &[usize] {
        &self.group_id
    }

    pub fn group_of(&self, channel: usize) -> usize {
        self.group_id[channel]
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    /// Channels of each group in ascending index order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_groups()];
        for (n, &g) in self.group_id.iter().enumerate() {
            out[g].push(n);
        }
        out
    }
}

/// Column signature under the equality policy: raw bits when `tolerance`
/// is zero, otherwise `round(log2 g / tolerance)`.
fn column_key(instance: &MpcaInstance, channel: usize, tolerance: f64) -> Vec<i64> {
    (0..instance.num_users())
        .map(|m| {
            let g = instance.gain(m, channel);
            if tolerance == 0.0 {
                g.to_bits() as i64
            } else {
                (g.log2() / tolerance).round() as i64
            }
        })
        .collect()
}

fn check_tolerance(tolerance: f64) -> Result<()> {
    if tolerance >= 0.0 && tolerance.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "tolerance must be a finite nonnegative number, got {tolerance}"
        )))
    }
}

/// Groups channels with equal gain columns by hashing the columns.
pub fn recognize(instance: &MpcaInstance, tolerance: f64) -> Result<GroupStructure> {
    check_tolerance(tolerance)?;
    Ok(GroupStructure::from_labels(
        (0..instance.num_channels()).map(|n| column_key(instance, n, tolerance)),
    ))
}

/// Reference implementation: builds the channel equivalence graph by
/// comparing every pair of columns, then labels its connected components.
pub fn recognize_pairwise(instance: &MpcaInstance, tolerance: f64) -> Result<GroupStructure> {
    check_tolerance(tolerance)?;
    let n = instance.num_channels();
    let keys: Vec<Vec<i64>> = (0..n).map(|c| column_key(instance, c, tolerance)).collect();
    let mut adjacent = vec![false; n * n];
    for a in 0..n {
        for b in a..n {
            let same = keys[a] == keys[b];
            adjacent[a * n + b] = same;
            adjacent[b * n + a] = same;
        }
    }
    let mut component = vec![usize::MAX; n];
    let mut next = 0;
    for root in 0..n {
        if component[root] != usize::MAX {
            continue;
        }
        let mut stack = vec![root];
        component[root] = next;
        while let Some(c) = stack.pop() {
            for d in 0..n {
                if adjacent[c * n + d] && component[d] == usize::MAX {
                    component[d] = next;
                    stack.push(d);
                }
            }
        }
        next += 1;
    }
    Ok(GroupStructure::from_labels(component))
}

/// One pass over the gain matrix: true iff every user sees the same gain on
/// all channels.
pub fn fast_is_1mpca(instance: &MpcaInstance) -> bool {
    (0..instance.num_users()).all(|m| {
        let row = instance.gains_row(m);
        row.iter().all(|&g| g == row[0])
    })
}
