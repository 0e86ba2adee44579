//! Deterministic, round-synchronous simulator of decentralized federated
//! learning over temporally dynamic participant graphs.
//!
//! Every FL round each participant trains locally, then picks peers whose
//! models score at least `theta` on its own test shard ([`algorithms::peer_selection`])
//! and plays a two-player constant-sum game between its own model and the
//! uniform average of its peers ([`algorithms::pfedgame_aggregate`]).
//! FedAvg-central and local-only baselines run through the same
//! orchestration in [`simulator`].
//!
//! All randomness flows from explicit seeds; a full metric stream is a pure
//! function of its [`simulator::SimConfig`], independent of the rayon
//! thread count.

pub mod algorithms;
pub mod config;
pub mod data;
pub mod error;
pub mod model;
pub mod seed;
pub mod simulator;
pub mod topology;

pub use error::{Error, Result};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a participant in the (fixed) node set of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
