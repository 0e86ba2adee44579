mod common;

use common::*;
use pfedgame::algorithms::{
    pfedgame_aggregate, pfedgame_aggregate_with, Accuracy, CountingMetric, GameConfig, LocalAccuracy,
    ModelMap, PeerSet,
};
use pfedgame::model::{evaluate_accuracy, init_model, train_local, Model, ModelSpec, TrainConfig};
use pfedgame::{NodeId, Result};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn trace_matches_reference_walk(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_game_config(&mut rng);
        let landscape = random_landscape(&mut rng, cfg.rounds);
        let (own, peer) = model_pair(seed);
        let utility = |_: &Model, k: usize| -> Result<f64> { Ok(landscape[k]) };
        let (_, state) = pfedgame_aggregate_with(&own, &[&peer], &cfg, &utility).unwrap();
        prop_assert!(matches_reference(&state, &cfg, &landscape).is_ok(), "{:?}", matches_reference(&state, &cfg, &landscape));
    }

    #[test]
    fn early_exit_returns_same_model(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_game_config(&mut rng);
        let landscape = random_landscape(&mut rng, cfg.rounds);
        let (own, peer) = model_pair(seed);
        let utility = |_: &Model, k: usize| -> Result<f64> { Ok(landscape[k]) };
        let full = pfedgame_aggregate_with(&own, &[&peer], &cfg, &utility).unwrap();
        let early = pfedgame_aggregate_with(&own, &[&peer], &GameConfig { early_exit: true, ..cfg }, &utility).unwrap();
        prop_assert_eq!(full.0, early.0);
        prop_assert_eq!(full.1.psi_x, early.1.psi_x);
    }

    #[test]
    fn equal_players_return_themselves(seed in any::<u64>(), beta in 0.0f64..0.1, rounds in 1usize..=10, theta in 0.0f64..=1.0) {
        let own = init_model(ModelSpec::softmax(4, 2), seed).unwrap();
        let node = small_node(seed, 2);
        let cfg = GameConfig { theta, beta, delta: 1.0 / rounds as f64, rounds, early_exit: false };
        let utility = LocalAccuracy { metric: &Accuracy, data: &node.test };
        let twin = own.clone();
        let (gamma, _) = pfedgame_aggregate_with(&own, &[&twin, &own], &cfg, &utility).unwrap();
        prop_assert_eq!(gamma, own);
    }
}

/// Real models on real shards: several trained peers with different data.
fn trained_setup(seed: u64) -> (ModelMap, pfedgame::data::NodeData, PeerSet) {
    let spec = ModelSpec::softmax(4, 3);
    let start = init_model(spec, seed).unwrap();
    let mut models = ModelMap::new();
    for i in 0..4u64 {
        let shard = small_node(seed.wrapping_mul(31).wrapping_add(i), 3);
        let cfg = TrainConfig {
            epochs: 1 + i as usize,
            learning_rate: 0.05,
            batch_size: 8,
            seed: i,
        };
        models.insert(NodeId(i as usize), train_local(&start, &shard.train, &cfg).unwrap());
    }
    let node = small_node(seed.wrapping_mul(31), 3);
    let cx = PeerSet {
        members: (0..4).map(NodeId).collect(),
        ..Default::default()
    };
    (models, node, cx)
}

#[test]
fn invariants_on_trained_models() {
    for seed in 0..40 {
        let (models, node, cx) = trained_setup(seed);
        for beta in [0.0, 0.001, 0.05] {
            let cfg = GameConfig { beta, ..GameConfig::default() };
            let (gamma, state) = pfedgame_aggregate(NodeId(0), &cx, &models, &node, &cfg).unwrap();
            let mut last = state.initial_accuracy;
            for step in &state.trace {
                assert_eq!(step.psi_x + step.psi_alpha, 1.0);
                if step.accepted {
                    assert!(step.candidate_accuracy >= last);
                    last = step.candidate_accuracy;
                }
            }
            assert!(state.final_accuracy >= state.initial_accuracy);
            assert_eq!(state.psi_x, state.accepted_steps as f64 * cfg.delta);
            assert_eq!(evaluate_accuracy(&gamma, &node.test).unwrap(), state.final_accuracy);
        }
    }
}

#[test]
fn evaluation_count_is_bounded() {
    let (models, node, cx) = trained_setup(3);
    let own = &models[&NodeId(0)];
    let peers: Vec<&Model> = models.values().collect();
    for rounds in 1..=10 {
        let cfg = GameConfig {
            delta: 1.0 / rounds as f64,
            rounds,
            ..GameConfig::default()
        };
        let counter = CountingMetric::new(Accuracy);
        let utility = LocalAccuracy { metric: &counter, data: &node.test };
        let (_, state) = pfedgame_aggregate_with(own, &peers, &cfg, &utility).unwrap();
        assert_eq!(counter.calls(), state.evaluations);
        assert!(counter.calls() <= 2 + 2 * rounds);
    }
    let _ = cx;
}
