//! Round-synchronous orchestration.
//!
//! Each FL round runs in phases separated by barriers:
//!
//! 1. every node trains locally from its current model;
//! 2. the post-training models are frozen into a snapshot;
//! 3. the round's adjacency is computed;
//! 4. every node selects peers and aggregates against the snapshot only;
//! 5. aggregated models replace the node models and metrics are taken on
//!    the local test shards.
//!
//! Per-node work runs on the rayon pool. Seeds depend only on the master
//! seed, node index and round, so results do not depend on the thread count.

mod metrics;

pub use metrics::{
    write_metrics_csv, write_trace_csv, NodeMetrics, NodeSummary, RepeatSummary, RoundMetrics, RoundSummary,
    TraceRecord, METRICS_HEADER, TRACE_HEADER,
};

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    fedavg_baseline_round, local_only_baseline, peer_selection, pfedgame_aggregate, GameConfig, ModelMap,
};
use crate::data::{generate_synthetic, load_csv, partition, Dataset, NodeData, PartitionMode, SyntheticParams};
use crate::model::{evaluate_accuracy, fedavg_weights, init_model, Model, ModelSpec, TrainConfig};
use crate::seed::{self, Stream};
use crate::topology::{adjacency_at, neighbors, Adjacency, TopologyKind, TopologySchedule};
use crate::{Error, NodeId, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[serde(rename = "pfedgame")]
    PFedGame,
    FedavgCentral,
    LocalOnly,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::PFedGame, Algorithm::FedavgCentral, Algorithm::LocalOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::PFedGame => "pfedgame",
            Algorithm::FedavgCentral => "fedavg-central",
            Algorithm::LocalOnly => "local-only",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::config("algorithm", format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DatasetSource {
    Synthetic(SyntheticParams),
    Csv { path: PathBuf, num_classes: Option<usize> },
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Synthetic(p) => generate_synthetic(p),
            DatasetSource::Csv { path, num_classes } => load_csv(path, *num_classes),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelArch {
    SoftmaxRegression,
    Mlp { hidden_dim: usize },
}

impl ModelArch {
    pub fn spec(&self, input_dim: usize, num_classes: usize) -> ModelSpec {
        match *self {
            ModelArch::SoftmaxRegression => ModelSpec::softmax(input_dim, num_classes),
            ModelArch::Mlp { hidden_dim } => ModelSpec::mlp(input_dim, hidden_dim, num_classes),
        }
    }
}

/// Epochs, step size and batch size of the per-round local training; the
/// seed is derived per node and round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTraining {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl LocalTraining {
    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rounds: usize,
    pub algorithm: Algorithm,
    pub game: GameConfig,
    pub train: LocalTraining,
    pub model: ModelArch,
    pub topology: TopologyKind,
    pub partition: PartitionMode,
    pub dataset: DatasetSource,
    pub master_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.game.validate()?;
        self.train.with_seed(0).validate()?;
        self.topology.validate()?;
        self.partition.validate()?;
        if let DatasetSource::Synthetic(p) = &self.dataset {
            p.validate()?;
        }
        if let ModelArch::Mlp { hidden_dim: 0 } = self.model {
            return Err(Error::config("hidden_dim", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    pub data: NodeData,
    pub model: Model,
    /// Label frequencies of the whole local shard.
    pub histogram: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub nodes: Vec<NodeState>,
    pub schedule: TopologySchedule,
}

/// Everything a round produces besides the new state.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub metrics: RoundMetrics,
    pub traces: Vec<TraceRecord>,
    /// `None` when the algorithm ignores the graph.
    pub adjacency: Option<Adjacency>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub metrics: Vec<RoundMetrics>,
    pub traces: Vec<TraceRecord>,
    pub adjacencies: Vec<(usize, Adjacency)>,
    pub final_models: Vec<(NodeId, Model)>,
}

/// Loads and partitions the data, then gives every node the same initial
/// model.
pub fn prepare(cfg: &SimConfig) -> Result<SimState> {
    cfg.validate()?;
    let data = cfg.dataset.load()?;
    let shards = partition(&data, &cfg.partition, seed::derive(cfg.master_seed, Stream::Partition, &[]))?;
    let spec = cfg.model.spec(data.dim(), data.num_classes());
    let initial = init_model(spec, seed::derive(cfg.master_seed, Stream::Init, &[]))?;

    let nodes = shards
        .into_iter()
        .enumerate()
        .map(|(i, shard)| {
            if shard.train.is_empty() || shard.test.is_empty() {
                return Err(Error::Partition(format!(
                    "node {i} has {} train and {} test rows; both must be non-empty",
                    shard.train.len(),
                    shard.test.len()
                )));
            }
            let n = (shard.train.len() + shard.test.len()) as f64;
            let histogram = shard
                .train
                .class_counts()
                .into_iter()
                .zip(shard.test.class_counts())
                .map(|(a, b)| (a + b) as f64 / n)
                .collect();
            Ok(NodeState {
                id: NodeId(i),
                data: shard,
                model: initial.clone(),
                histogram,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SimState {
        nodes,
        schedule: TopologySchedule {
            kind: cfg.topology,
            seed: seed::derive(cfg.master_seed, Stream::Topology, &[]),
        },
    })
}

pub fn train_seed(master: u64, node: NodeId, t: usize) -> u64 {
    seed::derive(master, Stream::Train, &[node.0 as u64, t as u64])
}

struct Aggregated {
    model: Model,
    peers: usize,
    psi_x: f64,
    skipped: bool,
    trace: Vec<TraceRecord>,
}

pub fn run_round(state: &SimState, t: usize, cfg: &SimConfig) -> Result<(SimState, RoundReport)> {
    if t >= cfg.rounds {
        return Err(Error::config("rounds", format!("round {t} is past the configured {}", cfg.rounds)));
    }

    // phase 1: local training
    let trained: Vec<Model> = state
        .nodes
        .par_iter()
        .map(|n| local_only_baseline(&n.model, &n.data, &cfg.train.with_seed(train_seed(cfg.master_seed, n.id, t))))
        .collect::<Result<_>>()?;

    let mut adjacency = None;
    let aggregated: Vec<Aggregated> = match cfg.algorithm {
        Algorithm::LocalOnly => trained
            .into_iter()
            .map(|model| Aggregated {
                model,
                peers: 0,
                psi_x: 1.0,
                skipped: false,
                trace: Vec::new(),
            })
            .collect(),
        Algorithm::FedavgCentral => {
            let snapshot: ModelMap = state.nodes.iter().map(|n| n.id).zip(trained).collect();
            let sizes: BTreeMap<NodeId, usize> = state.nodes.iter().map(|n| (n.id, n.data.train.len())).collect();
            let global = fedavg_baseline_round(&snapshot, &sizes)?;
            let weights = fedavg_weights(&sizes.values().copied().collect::<Vec<_>>())?;
            weights
                .into_iter()
                .map(|w| Aggregated {
                    model: global.clone(),
                    peers: state.nodes.len(),
                    psi_x: w,
                    skipped: false,
                    trace: Vec::new(),
                })
                .collect()
        }
        Algorithm::PFedGame => {
            // phase 2: immutable snapshot of post-training models
            let snapshot: ModelMap = state.nodes.iter().map(|n| n.id).zip(trained).collect();
            // phase 3
            let histograms: Vec<Vec<f64>> = state.nodes.iter().map(|n| n.histogram.clone()).collect();
            let adj = adjacency_at(&state.schedule, t, &histograms)?;
            // phase 4
            let out = state
                .nodes
                .par_iter()
                .map(|n| aggregate_node(n, t, &adj, &snapshot, &cfg.game))
                .collect::<Result<Vec<_>>>()?;
            adjacency = Some(adj);
            out
        }
    };

    // phase 5
    let mut nodes = Vec::with_capacity(state.nodes.len());
    let mut per_node = Vec::with_capacity(state.nodes.len());
    let mut traces = Vec::new();
    for (n, agg) in state.nodes.iter().zip(aggregated) {
        let accuracy = evaluate_accuracy(&agg.model, &n.data.test)?;
        per_node.push(NodeMetrics {
            node: n.id,
            accuracy,
            peers: agg.peers,
            psi_x: agg.psi_x,
            skipped: agg.skipped,
        });
        traces.extend(agg.trace);
        nodes.push(NodeState {
            model: agg.model,
            ..n.clone()
        });
    }
    let metrics = RoundMetrics::new(t, per_node);
    Ok((
        SimState {
            nodes,
            schedule: state.schedule,
        },
        RoundReport {
            metrics,
            traces,
            adjacency,
        },
    ))
}

fn aggregate_node(
    node: &NodeState,
    t: usize,
    adj: &Adjacency,
    snapshot: &ModelMap,
    game: &GameConfig,
) -> Result<Aggregated> {
    let candidates = neighbors(adj, node.id)?;
    let cx = peer_selection(node.id, &candidates, snapshot, &node.data.test, game.theta)?;
    if cx.is_empty() {
        debug!("round {t} node {}: no-aggregation (empty peer set)", node.id);
        return Ok(Aggregated {
            model: snapshot[&node.id].clone(),
            peers: 0,
            psi_x: 1.0,
            skipped: true,
            trace: Vec::new(),
        });
    }
    let (gamma, state) = pfedgame_aggregate(node.id, &cx, snapshot, &node.data, game)?;
    debug!(
        "round {t} node {}: |C(x)|={} psi_x={} H={}",
        node.id,
        cx.len(),
        state.psi_x,
        state.final_accuracy
    );
    let trace = state
        .trace
        .into_iter()
        .map(|step| TraceRecord {
            fl_round: t,
            node: node.id,
            step,
        })
        .collect();
    Ok(Aggregated {
        model: gamma,
        peers: cx.len(),
        psi_x: state.psi_x,
        skipped: false,
        trace,
    })
}

pub fn run_simulation(cfg: &SimConfig) -> Result<SimOutcome> {
    let mut state = prepare(cfg)?;
    let mut outcome = SimOutcome {
        metrics: Vec::with_capacity(cfg.rounds),
        traces: Vec::new(),
        adjacencies: Vec::new(),
        final_models: Vec::new(),
    };
    for t in 0..cfg.rounds {
        let (next, report) = run_round(&state, t, cfg)?;
        state = next;
        outcome.metrics.push(report.metrics);
        outcome.traces.extend(report.traces);
        if let Some(adj) = report.adjacency {
            outcome.adjacencies.push((t, adj));
        }
    }
    outcome.final_models = state.nodes.into_iter().map(|n| (n.id, n.model)).collect();
    Ok(outcome)
}

/// Runs `repeats` simulations, repeat `i` with master seed `seed + i`, and
/// reduces them to per-round and per-node mean / population std.
pub fn repeat_and_average(cfg: &SimConfig, repeats: usize) -> Result<(RepeatSummary, Vec<SimOutcome>)> {
    if repeats == 0 {
        return Err(Error::config("repeats", "must be at least 1"));
    }
    let runs = (0..repeats)
        .map(|i| {
            let c = SimConfig {
                master_seed: cfg.master_seed.wrapping_add(i as u64),
                ..cfg.clone()
            };
            run_simulation(&c)
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = RepeatSummary::from_runs(cfg.master_seed, &runs.iter().map(|r| r.metrics.as_slice()).collect::<Vec<_>>());
    Ok((summary, runs))
}
