//! Peer selection, game-theoretic aggregation, and the FedAvg / local-only
//! baselines.

mod baseline;
mod game;
mod peer;

pub use baseline::{fedavg_baseline_round, local_only_baseline};
pub use game::{
    pfedgame_aggregate, pfedgame_aggregate_with, GameConfig, GameState, GameStep, GameUtility, LocalAccuracy,
};
pub use peer::{peer_selection, peer_selection_with, ModelMap, PeerSet};

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::data::Dataset;
use crate::model::{evaluate_accuracy, Model};
use crate::Result;

/// The accuracy function `H(model, data)`.
pub trait AccuracyMetric: Sync {
    fn accuracy(&self, model: &Model, data: &Dataset) -> Result<f64>;
}

/// Arg-max accuracy via [`evaluate_accuracy`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Accuracy;

impl AccuracyMetric for Accuracy {
    fn accuracy(&self, model: &Model, data: &Dataset) -> Result<f64> {
        evaluate_accuracy(model, data)
    }
}

impl<M: AccuracyMetric + ?Sized> AccuracyMetric for &M {
    fn accuracy(&self, model: &Model, data: &Dataset) -> Result<f64> {
        (**self).accuracy(model, data)
    }
}

/// Wraps a metric and counts how many times it is evaluated.
#[derive(Debug, Default)]
pub struct CountingMetric<M> {
    inner: M,
    calls: AtomicUsize,
}

impl<M> CountingMetric<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }
}

impl<M: AccuracyMetric> AccuracyMetric for CountingMetric<M> {
    fn accuracy(&self, model: &Model, data: &Dataset) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.accuracy(model, data)
    }
}
