//! Flat JSON configuration and built-in experiment presets.
//!
//! A [`FlatConfig`] has one optional key per tunable. Layers are merged
//! with [`FlatConfig::overlay`] (later layers win), then [`FlatConfig::resolve`]
//! fills defaults and validates. The CLI layers preset < `--config` file <
//! flags.
//!
//! | key | type | default |
//! |---|---|---|
//! | `rounds` | int | 20 |
//! | `algorithm` | `pfedgame` \| `fedavg-central` \| `local-only` | `pfedgame` |
//! | `theta`, `beta`, `delta` | real | 0.5, 0.001, 0.1 |
//! | `game_rounds` | int | 10 |
//! | `early_exit_game` | bool | false |
//! | `epochs`, `learning_rate`, `batch_size` | int, real, int | 2, 0.1, 16 |
//! | `model` | `softmax` \| `mlp` | `softmax` |
//! | `hidden_dim` | int (mlp) | 32 |
//! | `topology` | `static-complete` \| `static-random` \| `rewire-per-round` \| `similarity-threshold` | `similarity-threshold` |
//! | `edge_probability` | real (static-random, rewire-per-round) | 0.5 |
//! | `rewire_fraction` | real (rewire-per-round) | 0.2 |
//! | `similarity_threshold` | real (similarity-threshold) | 0.0 |
//! | `partition` | `extreme` \| `severe` \| `modest` \| `homogeneous` | `extreme` |
//! | `participants` | int | 5 / 10 / 10 / 10 by partition |
//! | `majority_fraction` | real (modest) | 0.8 |
//! | `dataset` | `synthetic` or a CSV path | required |
//! | `num_classes` | int | 10 for synthetic, inferred for CSV |
//! | `dim`, `per_class`, `separation`, `data_seed` | synthetic only | 20, 200, 4.0, 1 |
//! | `seed` | int, master seed | 0 |
//!
//! Keys that do not apply to the chosen variant (e.g. `hidden_dim` with
//! `softmax`) are accepted and ignored.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algorithms::GameConfig;
use crate::data::{PartitionKind, PartitionMode, SyntheticParams, DEFAULT_MAJORITY_FRACTION};
use crate::simulator::{Algorithm, DatasetSource, LocalTraining, ModelArch, SimConfig};
use crate::topology::TopologyKind;
use crate::{Error, Result};

pub const SYNTHETIC: &str = "synthetic";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game_rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_exit_game: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewire_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participants: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub majority_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Softmax,
    Mlp,
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(ModelName::Softmax),
            "mlp" => Ok(ModelName::Mlp),
            _ => Err(Error::config("model", format!("unknown model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyName {
    StaticComplete,
    StaticRandom,
    RewirePerRound,
    SimilarityThreshold,
}

impl FromStr for TopologyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static-complete" => Ok(TopologyName::StaticComplete),
            "static-random" => Ok(TopologyName::StaticRandom),
            "rewire-per-round" => Ok(TopologyName::RewirePerRound),
            "similarity-threshold" => Ok(TopologyName::SimilarityThreshold),
            _ => Err(Error::config("topology", format!("unknown topology `{s}`"))),
        }
    }
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl FlatConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("flat config is always serializable")
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &FlatConfig) -> Self {
        overlay_fields!(self, top;
            rounds, algorithm, theta, beta, delta, game_rounds, early_exit_game,
            epochs, learning_rate, batch_size, model, hidden_dim, topology,
            edge_probability, rewire_fraction, similarity_threshold, partition,
            participants, majority_fraction, dataset, num_classes, dim, per_class,
            separation, data_seed, seed,
        );
        self
    }

    /// Applies defaults and validates. `dataset` has no default.
    pub fn resolve(&self) -> Result<SimConfig> {
        let dataset = match self.dataset.as_deref() {
            None => return Err(Error::config("dataset", "no dataset source given (`synthetic` or a CSV path)")),
            Some(SYNTHETIC) => DatasetSource::Synthetic(SyntheticParams {
                num_classes: self.num_classes.unwrap_or(10),
                dim: self.dim.unwrap_or(20),
                per_class: self.per_class.unwrap_or(200),
                separation: self.separation.unwrap_or(4.0),
                seed: self.data_seed.unwrap_or(1),
            }),
            Some(path) => DatasetSource::Csv {
                path: PathBuf::from(path),
                num_classes: self.num_classes,
            },
        };
        let model = match self.model.unwrap_or(ModelName::Softmax) {
            ModelName::Softmax => ModelArch::SoftmaxRegression,
            ModelName::Mlp => ModelArch::Mlp {
                hidden_dim: self.hidden_dim.unwrap_or(32),
            },
        };
        let topology = match self.topology.unwrap_or(TopologyName::SimilarityThreshold) {
            TopologyName::StaticComplete => TopologyKind::StaticComplete,
            TopologyName::StaticRandom => TopologyKind::StaticRandom {
                edge_probability: self.edge_probability.unwrap_or(0.5),
            },
            TopologyName::RewirePerRound => TopologyKind::RewirePerRound {
                edge_probability: self.edge_probability.unwrap_or(0.5),
                rewire_fraction: self.rewire_fraction.unwrap_or(0.2),
            },
            TopologyName::SimilarityThreshold => TopologyKind::SimilarityThreshold {
                threshold: self.similarity_threshold.unwrap_or(0.0),
            },
        };
        let kind = self.partition.unwrap_or(PartitionKind::Extreme);
        let cfg = SimConfig {
            rounds: self.rounds.unwrap_or(20),
            algorithm: self.algorithm.unwrap_or(Algorithm::PFedGame),
            game: GameConfig {
                theta: self.theta.unwrap_or(0.5),
                beta: self.beta.unwrap_or(0.001),
                delta: self.delta.unwrap_or(0.1),
                rounds: self.game_rounds.unwrap_or(10),
                early_exit: self.early_exit_game.unwrap_or(false),
            },
            train: LocalTraining {
                epochs: self.epochs.unwrap_or(2),
                learning_rate: self.learning_rate.unwrap_or(0.1),
                batch_size: self.batch_size.unwrap_or(16),
            },
            model,
            topology,
            partition: PartitionMode {
                kind,
                participants: self.participants.unwrap_or(kind.default_participants()),
                majority_fraction: self.majority_fraction.unwrap_or(DEFAULT_MAJORITY_FRACTION),
            },
            dataset,
            master_seed: self.seed.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<&SimConfig> for FlatConfig {
    fn from(cfg: &SimConfig) -> Self {
        let mut flat = FlatConfig {
            rounds: Some(cfg.rounds),
            algorithm: Some(cfg.algorithm),
            theta: Some(cfg.game.theta),
            beta: Some(cfg.game.beta),
            delta: Some(cfg.game.delta),
            game_rounds: Some(cfg.game.rounds),
            early_exit_game: Some(cfg.game.early_exit),
            epochs: Some(cfg.train.epochs),
            learning_rate: Some(cfg.train.learning_rate),
            batch_size: Some(cfg.train.batch_size),
            partition: Some(cfg.partition.kind),
            participants: Some(cfg.partition.participants),
            seed: Some(cfg.master_seed),
            ..Default::default()
        };
        if cfg.partition.kind == PartitionKind::Modest {
            flat.majority_fraction = Some(cfg.partition.majority_fraction);
        }
        match cfg.model {
            ModelArch::SoftmaxRegression => flat.model = Some(ModelName::Softmax),
            ModelArch::Mlp { hidden_dim } => {
                flat.model = Some(ModelName::Mlp);
                flat.hidden_dim = Some(hidden_dim);
            }
        }
        match cfg.topology {
            TopologyKind::StaticComplete => flat.topology = Some(TopologyName::StaticComplete),
            TopologyKind::StaticRandom { edge_probability } => {
                flat.topology = Some(TopologyName::StaticRandom);
                flat.edge_probability = Some(edge_probability);
            }
            TopologyKind::RewirePerRound {
                edge_probability,
                rewire_fraction,
            } => {
                flat.topology = Some(TopologyName::RewirePerRound);
                flat.edge_probability = Some(edge_probability);
                flat.rewire_fraction = Some(rewire_fraction);
            }
            TopologyKind::SimilarityThreshold { threshold } => {
                flat.topology = Some(TopologyName::SimilarityThreshold);
                flat.similarity_threshold = Some(threshold);
            }
        }
        match &cfg.dataset {
            DatasetSource::Synthetic(p) => {
                flat.dataset = Some(SYNTHETIC.into());
                flat.num_classes = Some(p.num_classes);
                flat.dim = Some(p.dim);
                flat.per_class = Some(p.per_class);
                flat.separation = Some(p.separation);
                flat.data_seed = Some(p.seed);
            }
            DatasetSource::Csv { path, num_classes } => {
                flat.dataset = Some(path.to_string_lossy().into_owned());
                flat.num_classes = *num_classes;
            }
        }
        flat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    ExtremeSynthetic,
    SevereSynthetic,
    HomogeneousSynthetic,
    ModestSynthetic,
    DynamicRewire,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::ExtremeSynthetic,
        Preset::SevereSynthetic,
        Preset::HomogeneousSynthetic,
        Preset::ModestSynthetic,
        Preset::DynamicRewire,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::ExtremeSynthetic => "extreme-synthetic",
            Preset::SevereSynthetic => "severe-synthetic",
            Preset::HomogeneousSynthetic => "homogeneous-synthetic",
            Preset::ModestSynthetic => "modest-synthetic",
            Preset::DynamicRewire => "dynamic-rewire",
        }
    }

    /// Every preset uses the 10-class synthetic blobs (d = 20, 200 per class,
    /// separation 4), softmax regression, 20 FL rounds, θ = 0.5, β = 0.001,
    /// δ = 0.1 and r = 10. They differ in partition and topology.
    pub fn flat(self) -> FlatConfig {
        let (partition, topology) = match self {
            Preset::ExtremeSynthetic => (PartitionKind::Extreme, TopologyName::SimilarityThreshold),
            Preset::SevereSynthetic => (PartitionKind::Severe, TopologyName::SimilarityThreshold),
            Preset::HomogeneousSynthetic => (PartitionKind::Homogeneous, TopologyName::SimilarityThreshold),
            Preset::ModestSynthetic => (PartitionKind::Modest, TopologyName::SimilarityThreshold),
            Preset::DynamicRewire => (PartitionKind::Extreme, TopologyName::RewirePerRound),
        };
        let mut flat = FlatConfig {
            rounds: Some(20),
            algorithm: Some(Algorithm::PFedGame),
            theta: Some(0.5),
            beta: Some(0.001),
            delta: Some(0.1),
            game_rounds: Some(10),
            early_exit_game: Some(false),
            epochs: Some(2),
            learning_rate: Some(0.1),
            batch_size: Some(16),
            model: Some(ModelName::Softmax),
            topology: Some(topology),
            partition: Some(partition),
            participants: Some(partition.default_participants()),
            dataset: Some(SYNTHETIC.into()),
            num_classes: Some(10),
            dim: Some(20),
            per_class: Some(200),
            separation: Some(4.0),
            data_seed: Some(1),
            seed: Some(0),
            ..Default::default()
        };
        match topology {
            TopologyName::RewirePerRound => {
                flat.edge_probability = Some(0.5);
                flat.rewire_fraction = Some(0.2);
            }
            _ => flat.similarity_threshold = Some(0.0),
        }
        if partition == PartitionKind::Modest {
            flat.majority_fraction = Some(DEFAULT_MAJORITY_FRACTION);
        }
        flat
    }

    pub fn config(self) -> SimConfig {
        self.flat().resolve().expect("presets are valid")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config("preset", format!("unknown preset `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_preset_pins_settings() {
        let cfg = Preset::ExtremeSynthetic.config();
        assert_eq!(cfg.partition.participants, 5);
        assert_eq!(cfg.game.rounds, 10);
        assert_eq!(cfg.game.delta, 0.1);
        assert_eq!(cfg.topology, TopologyKind::SimilarityThreshold { threshold: 0.0 });
    }

    #[test]
    fn presets_expand_to_documented_participants() {
        assert_eq!(Preset::SevereSynthetic.config().partition.participants, 10);
        assert_eq!(Preset::HomogeneousSynthetic.config().partition.participants, 10);
        assert_eq!(Preset::ModestSynthetic.config().partition.majority_fraction, 0.8);
        assert!(matches!(
            Preset::DynamicRewire.config().topology,
            TopologyKind::RewirePerRound { rewire_fraction, .. } if rewire_fraction == 0.2
        ));
    }

    #[test]
    fn step_budget_violation_names_field() {
        let flat = Preset::ExtremeSynthetic.flat().overlay(&FlatConfig {
            delta: Some(0.2),
            game_rounds: Some(10),
            ..Default::default()
        });
        let err = flat.resolve().unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "delta"), "{err}");
    }

    #[test]
    fn missing_dataset_is_an_error() {
        let err = FlatConfig::default().resolve().unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "dataset"));
    }

    #[test]
    fn unknown_keys_and_bad_types_are_rejected() {
        assert!(FlatConfig::from_json(r#"{"roundz": 3}"#).is_err());
        assert!(FlatConfig::from_json(r#"{"rounds": "three"}"#).is_err());
        assert!(FlatConfig::from_json(r#"{"algorithm": "gossip"}"#).is_err());
        let ok = FlatConfig::from_json(r#"{"rounds": 3, "algorithm": "local-only", "dataset": "synthetic"}"#).unwrap();
        assert_eq!(ok.resolve().unwrap().algorithm, Algorithm::LocalOnly);
    }

    #[test]
    fn overlay_precedence() {
        let base = FlatConfig {
            rounds: Some(5),
            theta: Some(0.1),
            ..Default::default()
        };
        let top = FlatConfig {
            rounds: Some(9),
            ..Default::default()
        };
        let merged = base.overlay(&top);
        assert_eq!(merged.rounds, Some(9));
        assert_eq!(merged.theta, Some(0.1));
    }

    #[test]
    fn csv_dataset_source() {
        let flat = FlatConfig {
            dataset: Some("data/train.csv".into()),
            ..Default::default()
        };
        let cfg = flat.resolve().unwrap();
        assert_eq!(
            cfg.dataset,
            DatasetSource::Csv {
                path: "data/train.csv".into(),
                num_classes: None
            }
        );
    }
}
