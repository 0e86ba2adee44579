//! Shared test oracles.
#![allow(dead_code)]

use pfedgame::algorithms::{GameConfig, GameState};
use pfedgame::data::{generate_synthetic, Dataset, NodeData, SyntheticParams};
use pfedgame::model::{init_model, Model, ModelSpec, ParamVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One game round of the reference walk: proposal index, score, decision
/// and the step count afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct RefStep {
    pub proposed: usize,
    pub score: f64,
    pub accepted: bool,
    pub steps_after: usize,
}

/// Straight transcription of the greedy game loop over a utility table
/// indexed by step count: propose `k + 1`, accept iff the score moved by at
/// least `beta` and did not drop.
pub fn reference_walk(landscape: &[f64], rounds: usize, beta: f64) -> Vec<RefStep> {
    let mut k = 0;
    let mut out = Vec::new();
    for _ in 0..rounds {
        let now = landscape[k];
        let next = landscape[k + 1];
        let diff = now - next;
        let big_enough = if diff < 0.0 { -diff >= beta } else { diff >= beta };
        let accepted = big_enough && next >= now;
        let proposed = k + 1;
        if accepted {
            k += 1;
        }
        out.push(RefStep {
            proposed,
            score: next,
            accepted,
            steps_after: k,
        });
    }
    out
}

pub fn grid_max(landscape: &[f64]) -> f64 {
    landscape.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Random landscape on `rounds + 1` grid points, drawn from one of several
/// shapes (uniform, coarse-quantized with ties, monotone, small-step walk).
pub fn random_landscape(rng: &mut ChaCha8Rng, rounds: usize) -> Vec<f64> {
    let n = rounds + 1;
    match rng.random_range(0..4) {
        0 => (0..n).map(|_| rng.random::<f64>()).collect(),
        1 => (0..n).map(|_| rng.random_range(0..20) as f64 / 20.0).collect(),
        2 => {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            v.sort_by(f64::total_cmp);
            v
        }
        _ => {
            let mut x: f64 = rng.random_range(0.2..0.8);
            (0..n)
                .map(|_| {
                    x = (x + rng.random_range(-0.06..0.06)).clamp(0.0, 1.0);
                    x
                })
                .collect()
        }
    }
}

pub fn random_game_config(rng: &mut ChaCha8Rng) -> GameConfig {
    let rounds = rng.random_range(1..=10);
    let scale = if rng.random::<bool>() { 1.0 } else { rng.random_range(0.1..=1.0) };
    GameConfig {
        theta: 0.0,
        beta: [0.0, 0.001, 0.05][rng.random_range(0..3)],
        delta: scale / rounds as f64,
        rounds,
        early_exit: false,
    }
}

pub fn model_pair(seed: u64) -> (Model, Model) {
    let spec = ModelSpec::softmax(3, 2);
    (init_model(spec, seed).unwrap(), init_model(spec, seed.wrapping_add(1)).unwrap())
}

/// Compares a game state against the reference walk.
pub fn matches_reference(state: &GameState, cfg: &GameConfig, landscape: &[f64]) -> Result<(), String> {
    let reference = reference_walk(landscape, cfg.rounds, cfg.beta);
    if state.trace.len() != reference.len() {
        return Err(format!("trace length {} vs {}", state.trace.len(), reference.len()));
    }
    for (got, want) in state.trace.iter().zip(&reference) {
        let psi = want.steps_after as f64 * cfg.delta;
        if got.accepted != want.accepted
            || got.candidate_accuracy != want.score
            || (got.psi_x - psi).abs() > 1e-12
            || (got.candidate_psi_x - want.proposed as f64 * cfg.delta).abs() > 1e-12
        {
            return Err(format!("round {}: got {got:?}, want {want:?}", got.game_round));
        }
    }
    let k = reference.last().map_or(0, |s| s.steps_after);
    if state.accepted_steps != k || state.final_accuracy != landscape[k] {
        return Err(format!("final steps {} vs {k}", state.accepted_steps));
    }
    Ok(())
}

/// A small two-node-style shard with separable blobs.
pub fn small_node(seed: u64, classes: usize) -> NodeData {
    let ds = generate_synthetic(&SyntheticParams {
        num_classes: classes,
        dim: 4,
        per_class: 20,
        separation: 2.0,
        seed,
    })
    .unwrap();
    let train: Vec<usize> = (0..ds.len()).filter(|i| i % 5 != 0).collect();
    let test: Vec<usize> = (0..ds.len()).filter(|i| i % 5 == 0).collect();
    NodeData {
        train: ds.select(&train),
        test: ds.select(&test),
        source_rows: train.iter().chain(&test).copied().collect(),
        designated_classes: (0..classes).collect(),
    }
}

pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, c: usize) -> Dataset {
    let features = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let labels = (0..n).map(|_| rng.random_range(0..c)).collect();
    Dataset::new(features, d, labels, c).unwrap()
}

pub fn perturbed(model: &Model, i: usize, h: f64) -> Model {
    let mut v = model.params().values().to_vec();
    v[i] += h;
    Model::from_params(*model.spec(), ParamVector::new(v, model.spec().layout()).unwrap()).unwrap()
}

/// Largest relative error between the analytic gradient and central
/// differences of the loss.
pub fn max_gradient_error(model: &Model, data: &Dataset) -> f64 {
    let (_, grad) = model.cross_entropy_gradient(data).unwrap();
    let h = 1e-6;
    grad.iter()
        .enumerate()
        .map(|(i, &g)| {
            let up = perturbed(model, i, h).cross_entropy(data).unwrap();
            let down = perturbed(model, i, -h).cross_entropy(data).unwrap();
            let numeric = (up - down) / (2.0 * h);
            (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-4)
        })
        .fold(0.0, f64::max)
}
