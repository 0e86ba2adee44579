use std::collections::BTreeMap;

use super::ModelMap;
use crate::data::NodeData;
use crate::model::{aggregate, fedavg_weights, train_local, Model, TrainConfig};
use crate::{Error, NodeId, Result};

/// One central FedAvg aggregation, weighting each node by its training-set
/// size.
pub fn fedavg_baseline_round(models: &ModelMap, train_sizes: &BTreeMap<NodeId, usize>) -> Result<Model> {
    let mut sizes = Vec::with_capacity(models.len());
    for id in models.keys() {
        sizes.push(*train_sizes.get(id).ok_or(Error::UnknownNode(*id))?);
    }
    let weights = fedavg_weights(&sizes)?;
    let refs: Vec<&Model> = models.values().collect();
    aggregate(&refs, &weights)
}

/// No communication: just local training on the node's own shard.
pub fn local_only_baseline(model: &Model, dx: &NodeData, tc: &TrainConfig) -> Result<Model> {
    train_local(model, &dx.train, tc)
}
