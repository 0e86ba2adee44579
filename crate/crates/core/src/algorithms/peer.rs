use std::collections::{BTreeMap, BTreeSet};

use super::{Accuracy, AccuracyMetric};
use crate::data::Dataset;
use crate::model::Model;
use crate::{Error, NodeId, Result};

pub type ModelMap = BTreeMap<NodeId, Model>;

/// `C(x)`: candidates whose models reached the accuracy threshold on the
/// selecting node's data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeerSet {
    pub members: BTreeSet<NodeId>,
    /// `H(M(c), D(x))` for every evaluated candidate, selected or not.
    pub scores: BTreeMap<NodeId, f64>,
}

impl PeerSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.members.contains(&id)
    }
}

pub fn peer_selection(
    x: NodeId,
    candidates: &BTreeSet<NodeId>,
    models: &ModelMap,
    dx: &Dataset,
    theta: f64,
) -> Result<PeerSet> {
    peer_selection_with(x, candidates, models, dx, theta, &Accuracy)
}

/// Evaluates every model in `candidates ∪ {x}` exactly once on `dx` and
/// keeps those scoring at least `theta`.
pub fn peer_selection_with<M: AccuracyMetric>(
    x: NodeId,
    candidates: &BTreeSet<NodeId>,
    models: &ModelMap,
    dx: &Dataset,
    theta: f64,
    metric: &M,
) -> Result<PeerSet> {
    if candidates.contains(&x) {
        return Err(Error::config("candidates", format!("node {x} listed as its own neighbor")));
    }
    if dx.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut pool = candidates.clone();
    pool.insert(x);
    if let Some(&missing) = pool.iter().find(|c| !models.contains_key(c)) {
        return Err(Error::MissingModel(missing));
    }

    let mut selected = PeerSet::default();
    for c in pool {
        let h = metric.accuracy(&models[&c], dx)?;
        selected.scores.insert(c, h);
        if h >= theta {
            selected.members.insert(c);
        }
    }
    Ok(selected)
}
