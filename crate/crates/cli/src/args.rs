use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pfedgame::config::{FlatConfig, ModelName, Preset, TopologyName};
use pfedgame::data::PartitionKind;
use pfedgame::simulator::Algorithm;

/// Decentralized federated learning simulator with game-theoretic
/// peer aggregation.
///
/// Settings are layered: preset < --config file < individual flags.
/// Set PFEDGAME_LOG (e.g. `info`, `debug`) to control log output.
#[derive(Debug, Parser)]
#[command(name = "pfedgame", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration and write metrics, traces, edges, summary and checkpoints.
    Run(RunArgs),
    /// Run a grid of algorithms x partitions and print a final-accuracy table.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub settings: Settings,
    /// JSON config file (flat schema)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Independent repeats with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Output directory [default: ./out/<timestamp>-<preset>]
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub settings: Settings,
    /// JSON config file; repeat to compare several files
    #[arg(long, value_name = "PATH")]
    pub config: Vec<PathBuf>,
    /// Comma-separated algorithms to compare
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub algorithms: Vec<Algorithm>,
    /// Comma-separated partition modes to compare
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub partitions: Vec<PartitionKind>,
    /// Independent repeats per cell
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Output directory for compare.csv [default: ./out/<timestamp>-<preset>]
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
}

/// Flags mirroring every config key.
#[derive(Debug, Args, Default)]
pub struct Settings {
    /// Built-in experiment preset
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Federated rounds T
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Peer-selection accuracy threshold
    #[arg(long)]
    pub theta: Option<f64>,
    /// Minimum utility change for a step to count
    #[arg(long)]
    pub beta: Option<f64>,
    /// Step size for the node's own weight
    #[arg(long)]
    pub delta: Option<f64>,
    /// Game rounds r (delta * r must not exceed 1)
    #[arg(long)]
    pub game_rounds: Option<usize>,
    /// Stop the game at the first rejected step
    #[arg(long)]
    pub early_exit_game: bool,
    /// pfedgame | fedavg-central | local-only
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// extreme | severe | modest | homogeneous
    #[arg(long)]
    pub partition: Option<PartitionKind>,
    /// static-complete | static-random | rewire-per-round | similarity-threshold
    #[arg(long)]
    pub topology: Option<TopologyName>,
    /// `synthetic` or a CSV path
    #[arg(long)]
    pub dataset: Option<String>,
    /// Local epochs per round
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// softmax | mlp
    #[arg(long)]
    pub model: Option<ModelName>,
    /// Hidden width for the mlp model
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// Edge probability for random topologies
    #[arg(long)]
    pub edge_probability: Option<f64>,
    /// Fraction of edges rewired each round
    #[arg(long)]
    pub rewire_fraction: Option<f64>,
    /// Minimum label-distribution similarity for an edge
    #[arg(long)]
    pub similarity_threshold: Option<f64>,
    /// Number of nodes k
    #[arg(long)]
    pub participants: Option<usize>,
    /// Majority share for the modest partition
    #[arg(long)]
    pub majority_fraction: Option<f64>,
    /// Number of classes (synthetic, or override for CSV)
    #[arg(long)]
    pub num_classes: Option<usize>,
    /// Synthetic feature dimension
    #[arg(long)]
    pub dim: Option<usize>,
    /// Synthetic samples per class
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Synthetic centroid separation
    #[arg(long)]
    pub separation: Option<f64>,
    /// Synthetic data seed
    #[arg(long)]
    pub data_seed: Option<u64>,
}

impl Settings {
    pub fn flags(&self) -> FlatConfig {
        FlatConfig {
            rounds: self.rounds,
            algorithm: self.algorithm,
            theta: self.theta,
            beta: self.beta,
            delta: self.delta,
            game_rounds: self.game_rounds,
            early_exit_game: self.early_exit_game.then_some(true),
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            model: self.model,
            hidden_dim: self.hidden_dim,
            topology: self.topology,
            edge_probability: self.edge_probability,
            rewire_fraction: self.rewire_fraction,
            similarity_threshold: self.similarity_threshold,
            partition: self.partition,
            participants: self.participants,
            majority_fraction: self.majority_fraction,
            dataset: self.dataset.clone(),
            num_classes: self.num_classes,
            dim: self.dim,
            per_class: self.per_class,
            separation: self.separation,
            data_seed: self.data_seed,
            seed: self.seed,
        }
    }

    /// preset < file < flags.
    pub fn layered(&self, file: Option<&FlatConfig>) -> FlatConfig {
        let mut flat = self.preset.map(Preset::flat).unwrap_or_default();
        if let Some(file) = file {
            flat = flat.overlay(file);
        }
        flat.overlay(&self.flags())
    }

    pub fn label(&self) -> &'static str {
        self.preset.map_or("custom", Preset::name)
    }
}
