use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, NodeData};
use crate::{seed, Error, Result};

pub const DEFAULT_MAJORITY_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionKind {
    /// Classes split evenly across 5 participants.
    Extreme,
    /// Classes split evenly across 10 participants.
    Severe,
    /// Each participant holds mostly its designated classes plus a uniform
    /// remainder of the others.
    Modest,
    /// Every class dealt evenly to all 10 participants.
    Homogeneous,
}

impl PartitionKind {
    pub const ALL: [PartitionKind; 4] = [
        PartitionKind::Extreme,
        PartitionKind::Severe,
        PartitionKind::Modest,
        PartitionKind::Homogeneous,
    ];

    pub fn default_participants(self) -> usize {
        match self {
            PartitionKind::Extreme => 5,
            PartitionKind::Severe | PartitionKind::Modest | PartitionKind::Homogeneous => 10,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PartitionKind::Extreme => "extreme",
            PartitionKind::Severe => "severe",
            PartitionKind::Modest => "modest",
            PartitionKind::Homogeneous => "homogeneous",
        }
    }
}

impl fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PartitionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config("partition", format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionMode {
    pub kind: PartitionKind,
    pub participants: usize,
    /// Only meaningful for [`PartitionKind::Modest`].
    pub majority_fraction: f64,
}

impl PartitionMode {
    pub fn new(kind: PartitionKind) -> Self {
        Self {
            kind,
            participants: kind.default_participants(),
            majority_fraction: DEFAULT_MAJORITY_FRACTION,
        }
    }

    pub fn with_participants(mut self, k: usize) -> Self {
        self.participants = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.participants == 0 {
            return Err(Error::config("participants", "need at least one participant"));
        }
        if self.kind == PartitionKind::Modest
            && !(self.majority_fraction > 0.0 && self.majority_fraction <= 1.0)
        {
            return Err(Error::config("majority_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Splits `data` into `mode.participants` disjoint shards covering every row,
/// each divided 80/20 into train/test per class.
pub fn partition(data: &Dataset, mode: &PartitionMode, seed: u64) -> Result<Vec<NodeData>> {
    mode.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = mode.participants;
    let c = data.num_classes();
    let mut rng = seed::rng(seed);

    let mut by_class = data.rows_by_class();
    for rows in by_class.iter_mut() {
        rows.shuffle(&mut rng);
    }
    let mut class_order: Vec<usize> = (0..c).collect();
    class_order.shuffle(&mut rng);

    let (shards, designated) = match mode.kind {
        PartitionKind::Extreme | PartitionKind::Severe => {
            if !c.is_multiple_of(k) {
                return Err(Error::Partition(format!(
                    "{c} classes cannot be divided equally among {k} participants"
                )));
            }
            let per_node = c / k;
            let designated: Vec<Vec<usize>> = class_order
                .chunks(per_node)
                .map(|chunk| {
                    let mut v = chunk.to_vec();
                    v.sort_unstable();
                    v
                })
                .collect();
            let shards = designated
                .iter()
                .map(|classes| classes.iter().flat_map(|&y| by_class[y].iter().copied()).collect())
                .collect();
            (shards, designated)
        }
        PartitionKind::Homogeneous => {
            let mut shards = vec![Vec::new(); k];
            let mut cursor = 0;
            for rows in &by_class {
                for &i in rows {
                    shards[cursor % k].push(i);
                    cursor += 1;
                }
            }
            (shards, vec![(0..c).collect(); k])
        }
        PartitionKind::Modest => modest(&by_class, &class_order, k, mode.majority_fraction),
    };

    Ok(shards
        .into_iter()
        .zip(designated)
        .map(|(rows, designated_classes)| split_shard(data, &rows, designated_classes))
        .collect())
}

/// Owners of each class receive a `share >= fraction` of its rows; the rest
/// goes round-robin to non-owners. The share is raised in steps until every
/// shard meets the majority constraint (share 1 always does).
fn modest(
    by_class: &[Vec<usize>],
    class_order: &[usize],
    k: usize,
    fraction: f64,
) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let c = by_class.len();
    let mut designated = vec![Vec::new(); k];
    if k <= c {
        for (j, &y) in class_order.iter().enumerate() {
            designated[j % k].push(y);
        }
    } else {
        for (i, d) in designated.iter_mut().enumerate() {
            d.push(class_order[i % c]);
        }
    }
    for d in designated.iter_mut() {
        d.sort_unstable();
    }
    let mut owners = vec![Vec::new(); c];
    for (node, classes) in designated.iter().enumerate() {
        for &y in classes {
            owners[y].push(node);
        }
    }

    const STEPS: usize = 10;
    for step in 0..=STEPS {
        let share = if step == STEPS {
            1.0
        } else {
            fraction + (1.0 - fraction) * step as f64 / STEPS as f64
        };
        let mut shards = vec![Vec::new(); k];
        let mut majority = vec![0usize; k];
        let mut cursor = 0;
        for (y, rows) in by_class.iter().enumerate() {
            let others: Vec<usize> = (0..k).filter(|n| !owners[y].contains(n)).collect();
            let owned = if others.is_empty() {
                rows.len()
            } else {
                ((share * rows.len() as f64).ceil() as usize).min(rows.len())
            };
            let (to_owners, to_others) = rows.split_at(owned);
            for (j, &i) in to_owners.iter().enumerate() {
                let node = owners[y][j % owners[y].len()];
                shards[node].push(i);
                majority[node] += 1;
            }
            for &i in to_others {
                shards[others[cursor % others.len()]].push(i);
                cursor += 1;
            }
        }
        let ok = shards
            .iter()
            .zip(&majority)
            .all(|(s, &m)| s.is_empty() || m as f64 >= fraction * s.len() as f64);
        if ok {
            return (shards, designated);
        }
    }
    unreachable!("share 1 assigns every row to an owner")
}

/// Per-class 80/20 split; within each class the first `floor(4n/5)` rows
/// (already shuffled) train.
fn split_shard(data: &Dataset, rows: &[usize], designated_classes: Vec<usize>) -> NodeData {
    let mut per_class = vec![Vec::new(); data.num_classes()];
    for &i in rows {
        per_class[data.label(i)].push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class_rows in &per_class {
        let n_train = class_rows.len() * 4 / 5;
        train.extend_from_slice(&class_rows[..n_train]);
        test.extend_from_slice(&class_rows[n_train..]);
    }
    let mut source_rows = train.clone();
    source_rows.extend_from_slice(&test);
    NodeData {
        train: data.select(&train),
        test: data.select(&test),
        source_rows,
        designated_classes,
    }
}
