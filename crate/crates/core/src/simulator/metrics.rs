use std::io::Write;

use serde::Serialize;

use crate::algorithms::GameStep;
use crate::NodeId;

pub const METRICS_HEADER: &str = "fl_round,node,acc,peers,psi_x,skipped";
pub const TRACE_HEADER: &str = "fl_round,node,game_round,psi_x,candidate_acc,accepted";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeMetrics {
    pub node: NodeId,
    /// Accuracy of the node's end-of-round model on its test shard.
    pub accuracy: f64,
    /// `|C(x)|` for pFedGame, participants for FedAvg, 0 for local-only.
    pub peers: usize,
    /// Weight of the node's own model in what it ends the round with.
    pub psi_x: f64,
    /// The peer set was empty and the node kept its trained model.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub nodes: Vec<NodeMetrics>,
    pub mean_accuracy: f64,
}

impl RoundMetrics {
    pub fn new(round: usize, nodes: Vec<NodeMetrics>) -> Self {
        let mean_accuracy = mean(nodes.iter().map(|n| n.accuracy));
        Self {
            round,
            nodes,
            mean_accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub fl_round: usize,
    pub node: NodeId,
    pub step: GameStep,
}

pub fn write_metrics_csv<W: Write>(metrics: &[RoundMetrics], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for round in metrics {
        for n in &round.nodes {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                round.round, n.node, n.accuracy, n.peers, n.psi_x, n.skipped
            )?;
        }
    }
    Ok(())
}

/// `psi_x` is the state after each game round's decision.
pub fn write_trace_csv<W: Write>(traces: &[TraceRecord], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in traces {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.fl_round, r.node, r.step.game_round, r.step.psi_x, r.step.candidate_accuracy, r.step.accepted
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundSummary {
    pub round: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeSummary {
    pub node: NodeId,
    pub final_mean: f64,
    pub final_std: f64,
}

/// Cross-repeat statistics; `std` is the population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatSummary {
    pub base_seed: u64,
    pub repeats: usize,
    pub per_round: Vec<RoundSummary>,
    pub per_node: Vec<NodeSummary>,
    pub final_mean: f64,
    pub final_std: f64,
}

impl RepeatSummary {
    pub fn from_runs(base_seed: u64, runs: &[&[RoundMetrics]]) -> Self {
        let rounds = runs.first().map_or(0, |r| r.len());
        let per_round: Vec<RoundSummary> = (0..rounds)
            .map(|t| {
                let (mean, std) = mean_std(runs.iter().map(|r| r[t].mean_accuracy));
                RoundSummary { round: t, mean, std }
            })
            .collect();
        let per_node = match runs.first().and_then(|r| r.last()) {
            Some(last) => (0..last.nodes.len())
                .map(|i| {
                    let (m, s) = mean_std(runs.iter().map(|r| r[rounds - 1].nodes[i].accuracy));
                    NodeSummary {
                        node: last.nodes[i].node,
                        final_mean: m,
                        final_std: s,
                    }
                })
                .collect(),
            None => Vec::new(),
        };
        let (final_mean, final_std) = per_round.last().map_or((f64::NAN, f64::NAN), |r| (r.mean, r.std));
        Self {
            base_seed,
            repeats: runs.len(),
            per_round,
            per_node,
            final_mean,
            final_std,
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    if let Some(first) = xs.clone().next() {
        if xs.clone().all(|x| x == first) {
            return (first, 0.0);
        }
    }
    let m = mean(xs.clone());
    let var = mean(xs.map(|x| (x - m) * (x - m)));
    (m, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(i: usize, acc: f64) -> NodeMetrics {
        NodeMetrics {
            node: NodeId(i),
            accuracy: acc,
            peers: 1,
            psi_x: 0.5,
            skipped: false,
        }
    }

    #[test]
    fn round_mean() {
        let r = RoundMetrics::new(0, vec![node(0, 0.5), node(1, 1.0)]);
        assert_eq!(r.mean_accuracy, 0.75);
    }

    #[test]
    fn csv_layout() {
        let r = RoundMetrics::new(3, vec![node(0, 0.5), node(1, 1.0)]);
        let mut buf = Vec::new();
        write_metrics_csv(&[r], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "fl_round,node,acc,peers,psi_x,skipped\n3,0,0.5,1,0.5,false\n3,1,1,1,0.5,false\n"
        );
    }

    #[test]
    fn identical_runs_have_zero_std() {
        let run = vec![RoundMetrics::new(0, vec![node(0, 0.4)]), RoundMetrics::new(1, vec![node(0, 0.6)])];
        let s = RepeatSummary::from_runs(0, &[&run, &run, &run]);
        assert_eq!(s.final_mean, 0.6);
        assert_eq!(s.final_std, 0.0);
        assert!(s.per_round.iter().all(|r| r.std == 0.0));
    }

    #[test]
    fn population_std() {
        let a = vec![RoundMetrics::new(0, vec![node(0, 0.2)])];
        let b = vec![RoundMetrics::new(0, vec![node(0, 0.6)])];
        let s = RepeatSummary::from_runs(0, &[&a, &b]);
        assert!((s.final_mean - 0.4).abs() < 1e-15);
        assert!((s.final_std - 0.2).abs() < 1e-15);
    }
}
