//! Time-varying undirected participant graphs.
//!
//! An [`Adjacency`] is an immutable snapshot for one FL round. Schedules are
//! pure functions of `(kind, seed, t, histograms)`, so any round can be
//! recomputed independently of the others.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed::{self, Stream};
use crate::{Error, NodeId, Result};

const HISTOGRAM_TOLERANCE: f64 = 1e-9;

/// `1 - TV(a, b) = 1 - ½ Σ |a_i - b_i|` for label-frequency vectors.
pub fn distribution_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Histogram(format!("lengths {} and {} differ", a.len(), b.len())));
    }
    for h in [a, b] {
        let sum: f64 = h.iter().sum();
        if (sum - 1.0).abs() > HISTOGRAM_TOLERANCE || h.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::Histogram(format!("not a distribution (sum {sum})")));
        }
    }
    let tv = 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    Ok((1.0 - tv).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TopologyKind {
    StaticComplete,
    StaticRandom { edge_probability: f64 },
    /// Each round moves `rewire_fraction` of a static random base graph's
    /// edges to previously absent pairs. Rounds do not accumulate.
    RewirePerRound { edge_probability: f64, rewire_fraction: f64 },
    /// Edge iff label-distribution similarity ≥ `threshold`, weighted by
    /// the similarity.
    SimilarityThreshold { threshold: f64 },
}

impl TopologyKind {
    pub fn name(&self) -> &'static str {
        match self {
            TopologyKind::StaticComplete => "static-complete",
            TopologyKind::StaticRandom { .. } => "static-random",
            TopologyKind::RewirePerRound { .. } => "rewire-per-round",
            TopologyKind::SimilarityThreshold { .. } => "similarity-threshold",
        }
    }

    pub const NAMES: [&'static str; 4] = [
        "static-complete",
        "static-random",
        "rewire-per-round",
        "similarity-threshold",
    ];

    pub fn validate(&self) -> Result<()> {
        let unit = |field: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(field, "must lie in [0, 1]"))
            }
        };
        match *self {
            TopologyKind::StaticComplete => Ok(()),
            TopologyKind::StaticRandom { edge_probability } => unit("edge_probability", edge_probability),
            TopologyKind::RewirePerRound {
                edge_probability,
                rewire_fraction,
            } => {
                unit("edge_probability", edge_probability)?;
                unit("rewire_fraction", rewire_fraction)
            }
            TopologyKind::SimilarityThreshold { threshold } => unit("similarity_threshold", threshold),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologySchedule {
    pub kind: TopologyKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    nodes: Vec<NodeId>,
    /// Keys are ordered pairs `(a, b)` with `a < b`.
    edges: BTreeMap<(NodeId, NodeId), f64>,
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        Self {
            nodes: (0..n).map(NodeId).collect(),
            edges: BTreeMap::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut adj = Self::empty(n);
        for a in 0..n {
            for b in a + 1..n {
                adj.edges.insert((NodeId(a), NodeId(b)), 1.0);
            }
        }
        adj
    }

    /// Adds the edge `a`-`b`; self-loops and out-of-range weights are rejected.
    pub fn insert(&mut self, a: NodeId, b: NodeId, weight: f64) -> Result<()> {
        for n in [a, b] {
            if !self.contains(n) {
                return Err(Error::UnknownNode(n));
            }
        }
        if a == b {
            return Err(Error::config("edge", format!("self-loop on node {a}")));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::config("edge", format!("weight {weight} outside [0, 1]")));
        }
        self.edges.insert((a.min(b), a.max(b)), weight);
        Ok(())
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    fn contains(&self, x: NodeId) -> bool {
        x.0 < self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> Option<f64> {
        self.edges.get(&(a.min(b), a.max(b))).copied()
    }

    /// Writes `t,node_a,node_b,weight` lines.
    pub fn write_edge_list<W: Write>(&self, t: usize, out: &mut W) -> std::io::Result<()> {
        for (a, b, w) in self.edges() {
            writeln!(out, "{t},{a},{b},{w}")?;
        }
        Ok(())
    }
}

pub fn neighbors(adj: &Adjacency, x: NodeId) -> Result<BTreeSet<NodeId>> {
    if !adj.contains(x) {
        return Err(Error::UnknownNode(x));
    }
    Ok(adj
        .edges
        .keys()
        .filter_map(|&(a, b)| {
            if a == x {
                Some(b)
            } else if b == x {
                Some(a)
            } else {
                None
            }
        })
        .collect())
}

fn random_graph(n: usize, p: f64, seed: u64) -> Adjacency {
    let mut rng = seed::rng(seed);
    let mut adj = Adjacency::empty(n);
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                adj.edges.insert((NodeId(a), NodeId(b)), 1.0);
            }
        }
    }
    adj
}

/// Graph for FL round `t` over `histograms.len()` nodes.
pub fn adjacency_at(schedule: &TopologySchedule, t: usize, histograms: &[Vec<f64>]) -> Result<Adjacency> {
    schedule.kind.validate()?;
    let n = histograms.len();
    match schedule.kind {
        TopologyKind::StaticComplete => Ok(Adjacency::complete(n)),
        TopologyKind::StaticRandom { edge_probability } => Ok(random_graph(n, edge_probability, schedule.seed)),
        TopologyKind::RewirePerRound {
            edge_probability,
            rewire_fraction,
        } => {
            let mut adj = random_graph(n, edge_probability, schedule.seed);
            let moves = (rewire_fraction * adj.edge_count() as f64).round() as usize;
            if moves == 0 {
                return Ok(adj);
            }
            let mut rng = seed::rng(seed::derive(schedule.seed, Stream::Topology, &[t as u64]));
            let mut present: Vec<(NodeId, NodeId)> = adj.edges.keys().copied().collect();
            present.shuffle(&mut rng);
            let removed: Vec<(NodeId, NodeId)> = present.into_iter().take(moves).collect();
            for e in &removed {
                adj.edges.remove(e);
            }
            let mut free: Vec<(NodeId, NodeId)> = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (NodeId(a), NodeId(b))))
                .filter(|e| !adj.edges.contains_key(e) && !removed.contains(e))
                .collect();
            for e in removed {
                if free.is_empty() {
                    adj.edges.insert(e, 1.0);
                    continue;
                }
                let target = free.swap_remove(rng.random_range(0..free.len()));
                adj.edges.insert(target, 1.0);
            }
            Ok(adj)
        }
        TopologyKind::SimilarityThreshold { threshold } => {
            let mut adj = Adjacency::empty(n);
            for a in 0..n {
                for b in a + 1..n {
                    let s = distribution_similarity(&histograms[a], &histograms[b])?;
                    if s >= threshold {
                        adj.edges.insert((NodeId(a), NodeId(b)), s);
                    }
                }
            }
            Ok(adj)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, c: usize) -> Vec<Vec<f64>> {
        vec![vec![1.0 / c as f64; c]; n]
    }

    fn one_hot(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let mut h = vec![0.0; n];
                h[i] = 1.0;
                h
            })
            .collect()
    }

    #[test]
    fn similarity_examples() {
        let a = [0.2, 0.3, 0.5];
        assert_eq!(distribution_similarity(&a, &a).unwrap(), 1.0);
        assert_eq!(distribution_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let s = distribution_similarity(&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5]).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn similarity_rejects_bad_input() {
        assert!(distribution_similarity(&[1.0], &[0.5, 0.5]).is_err());
        assert!(distribution_similarity(&[0.5, 0.4], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn complete_graph_every_round() {
        let s = TopologySchedule {
            kind: TopologyKind::StaticComplete,
            seed: 0,
        };
        for t in 0..5 {
            assert_eq!(adjacency_at(&s, t, &uniform(4, 3)).unwrap().edge_count(), 6);
        }
    }

    #[test]
    fn disjoint_histograms_with_threshold_have_no_edges() {
        let s = TopologySchedule {
            kind: TopologyKind::SimilarityThreshold { threshold: 0.9 },
            seed: 0,
        };
        assert_eq!(adjacency_at(&s, 0, &one_hot(10)).unwrap().edge_count(), 0);
        // threshold 0 admits every pair, at weight 0
        let s = TopologySchedule {
            kind: TopologyKind::SimilarityThreshold { threshold: 0.0 },
            seed: 0,
        };
        let adj = adjacency_at(&s, 0, &one_hot(4)).unwrap();
        assert_eq!(adj.edge_count(), 6);
        assert!(adj.edges().all(|(_, _, w)| w == 0.0));
    }

    #[test]
    fn zero_rewire_is_constant() {
        let s = TopologySchedule {
            kind: TopologyKind::RewirePerRound {
                edge_probability: 0.5,
                rewire_fraction: 0.0,
            },
            seed: 42,
        };
        let h = uniform(8, 2);
        let base = adjacency_at(&s, 0, &h).unwrap();
        for t in 1..10 {
            assert_eq!(adjacency_at(&s, t, &h).unwrap(), base);
        }
    }

    #[test]
    fn rewiring_changes_edges_but_keeps_count() {
        let s = TopologySchedule {
            kind: TopologyKind::RewirePerRound {
                edge_probability: 0.4,
                rewire_fraction: 0.2,
            },
            seed: 7,
        };
        let h = uniform(10, 2);
        let rounds: Vec<Adjacency> = (0..6).map(|t| adjacency_at(&s, t, &h).unwrap()).collect();
        let count = rounds[0].edge_count();
        assert!(rounds.iter().all(|a| a.edge_count() == count));
        assert!(rounds.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn neighbor_examples() {
        let k3 = Adjacency::complete(3);
        assert_eq!(neighbors(&k3, NodeId(0)).unwrap(), BTreeSet::from([NodeId(1), NodeId(2)]));
        assert!(neighbors(&Adjacency::empty(3), NodeId(1)).unwrap().is_empty());
        let mut path = Adjacency::empty(3);
        path.insert(NodeId(0), NodeId(1), 1.0).unwrap();
        path.insert(NodeId(2), NodeId(1), 1.0).unwrap();
        assert_eq!(neighbors(&path, NodeId(1)).unwrap(), BTreeSet::from([NodeId(0), NodeId(2)]));
        assert!(matches!(neighbors(&path, NodeId(3)), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn insert_rejects_self_loops_and_bad_weights() {
        let mut a = Adjacency::empty(2);
        assert!(a.insert(NodeId(0), NodeId(0), 1.0).is_err());
        assert!(a.insert(NodeId(0), NodeId(1), 1.5).is_err());
        assert!(a.insert(NodeId(0), NodeId(2), 0.5).is_err());
    }

    #[test]
    fn edge_list_export() {
        let mut a = Adjacency::empty(3);
        a.insert(NodeId(2), NodeId(0), 0.5).unwrap();
        let mut buf = Vec::new();
        a.write_edge_list(4, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "4,0,2,0.5\n");
    }
}
