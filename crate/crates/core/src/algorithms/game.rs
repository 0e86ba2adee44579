//! Two-player constant-sum aggregation game between a node's own model
//! `M(x)` and the uniform average of its peers `M(α)`.
//!
//! The mixing weight `ψ(x)` starts at 0 (`ψ(α) = 1`) and is offered one
//! `δ` step per game round. A step is taken only if it does not lower
//! accuracy on the node's test shard and changes it by at least `β`.
//! `ψ(x)` is tracked as an integer step count so that it is always an exact
//! multiple of `δ` and `ψ(x) + ψ(α) = 1` holds in floating point.

use serde::{Deserialize, Serialize};

use super::{Accuracy, AccuracyMetric, ModelMap, PeerSet};
use crate::data::{Dataset, NodeData};
use crate::model::{aggregate, Model};
use crate::{Error, NodeId, Result};

/// Slack allowed on `δ · r ≤ 1`, e.g. for `δ = 1/3, r = 3`.
const STEP_BUDGET_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Peer-selection accuracy threshold.
    pub theta: f64,
    /// Minimum accuracy change for a step to count.
    pub beta: f64,
    /// Increment of `ψ(x)` per accepted step.
    pub delta: f64,
    /// Game rounds per aggregation.
    pub rounds: usize,
    /// Stop at the first rejected proposal. Later proposals would repeat it,
    /// so the returned model is the same either way.
    pub early_exit: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            beta: 0.001,
            delta: 0.1,
            rounds: 10,
            early_exit: false,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::config("theta", "must lie in [0, 1]"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config("beta", "must be a non-negative number"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::config("delta", "must lie in (0, 1]"));
        }
        if self.rounds == 0 {
            return Err(Error::config("game_rounds", "must be at least 1"));
        }
        let budget = self.delta * self.rounds as f64;
        if budget > 1.0 + STEP_BUDGET_SLACK {
            return Err(Error::config(
                "delta",
                format!("delta * game_rounds = {budget} exceeds 1"),
            ));
        }
        Ok(())
    }

    /// `ψ(x)` after `steps` accepted increments.
    pub fn psi_x(&self, steps: usize) -> f64 {
        (steps as f64 * self.delta).min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameStep {
    /// 1-based game round.
    pub game_round: usize,
    /// `ψ(x)` offered this round.
    pub candidate_psi_x: f64,
    pub candidate_accuracy: f64,
    pub accepted: bool,
    /// State after the round's decision.
    pub psi_x: f64,
    pub psi_alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub psi_x: f64,
    pub psi_alpha: f64,
    pub gamma: Model,
    pub accepted_steps: usize,
    /// `H(M(α))`, the utility of the starting mixture.
    pub initial_accuracy: f64,
    /// `H(Γ(x))` at exit.
    pub final_accuracy: f64,
    /// Number of utility evaluations performed.
    pub evaluations: usize,
    pub trace: Vec<GameStep>,
}

/// Scores a candidate mixture. `step` is its position on the `ψ(x)` grid,
/// i.e. `ψ(x) = step · δ`.
pub trait GameUtility {
    fn utility(&self, candidate: &Model, step: usize) -> Result<f64>;
}

/// Accuracy on a fixed dataset; ignores the grid position.
pub struct LocalAccuracy<'a, M> {
    pub metric: &'a M,
    pub data: &'a Dataset,
}

impl<M: AccuracyMetric> GameUtility for LocalAccuracy<'_, M> {
    fn utility(&self, candidate: &Model, _step: usize) -> Result<f64> {
        self.metric.accuracy(candidate, self.data)
    }
}

impl<F: Fn(&Model, usize) -> Result<f64>> GameUtility for F {
    fn utility(&self, candidate: &Model, step: usize) -> Result<f64> {
        self(candidate, step)
    }
}

/// Runs the game for node `x` against the uniform aggregate of `cx`,
/// scoring mixtures by accuracy on `dx.test`.
pub fn pfedgame_aggregate(
    x: NodeId,
    cx: &PeerSet,
    models: &ModelMap,
    dx: &NodeData,
    cfg: &GameConfig,
) -> Result<(Model, GameState)> {
    let own = models.get(&x).ok_or(Error::MissingModel(x))?;
    let peers = cx
        .members
        .iter()
        .map(|c| models.get(c).ok_or(Error::MissingModel(*c)))
        .collect::<Result<Vec<_>>>()?;
    let utility = LocalAccuracy {
        metric: &Accuracy,
        data: &dx.test,
    };
    pfedgame_aggregate_with(own, &peers, cfg, &utility)
}

/// Game core with an injectable utility: `1 + r` utility evaluations in the
/// full mode, fewer with `early_exit`.
pub fn pfedgame_aggregate_with<U: GameUtility + ?Sized>(
    own: &Model,
    peers: &[&Model],
    cfg: &GameConfig,
    utility: &U,
) -> Result<(Model, GameState)> {
    cfg.validate()?;
    if peers.is_empty() {
        return Err(Error::EmptyPeerSet);
    }
    let uniform = vec![1.0 / peers.len() as f64; peers.len()];
    let alpha = aggregate(peers, &uniform)?;
    let mix = |psi: f64| aggregate(&[own, &alpha], &[psi, 1.0 - psi]);

    let mut steps = 0usize;
    let mut gamma = mix(cfg.psi_x(0))?;
    let mut current = utility.utility(&gamma, 0)?;
    let initial_accuracy = current;
    let mut evaluations = 1;
    let mut trace = Vec::with_capacity(cfg.rounds);

    for game_round in 1..=cfg.rounds {
        let candidate_psi = cfg.psi_x(steps + 1);
        let candidate = mix(candidate_psi)?;
        let h = utility.utility(&candidate, steps + 1)?;
        evaluations += 1;
        let accepted = (current - h).abs() >= cfg.beta && current <= h;
        if accepted {
            steps += 1;
            gamma = candidate;
            current = h;
        }
        let psi_x = cfg.psi_x(steps);
        trace.push(GameStep {
            game_round,
            candidate_psi_x: candidate_psi,
            candidate_accuracy: h,
            accepted,
            psi_x,
            psi_alpha: 1.0 - psi_x,
        });
        if !accepted && cfg.early_exit {
            break;
        }
    }

    let psi_x = cfg.psi_x(steps);
    let state = GameState {
        psi_x,
        psi_alpha: 1.0 - psi_x,
        gamma: gamma.clone(),
        accepted_steps: steps,
        initial_accuracy,
        final_accuracy: current,
        evaluations,
        trace,
    };
    Ok((gamma, state))
}
