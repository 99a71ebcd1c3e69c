use petgraph::algo::{astar, has_path_connecting};
use petgraph::graph::{NodeIndex, UnGraph};

use crate::error::{Error, Result};
use crate::geometry::{config_valid, motion_valid, ChainSpec, Circle, Configuration};
use crate::planners::Path;

/// Undirected roadmap; edge weights are max-norm C-space lengths.
#[derive(Debug, Clone, Default)]
pub struct Roadmap {
    pub graph: UnGraph<Configuration, f64>,
}

/// Bookkeeping from one [`prm_grow`] call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GrowStats {
    pub added: usize,
    pub rejected: usize,
    pub edges: usize,
}

impl Roadmap {
    pub fn new() -> Self {
        Roadmap::default()
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Adds `q` and tries edges to its `k` nearest vertices. Returns the new
    /// vertex and the number of edges made. `q` must already be valid.
    pub fn insert(
        &mut self,
        q: Configuration,
        k: usize,
        spec: &ChainSpec,
        obstacles: &[Circle],
        motion_step: f64,
    ) -> (NodeIndex, usize) {
        let mut near: Vec<(f64, NodeIndex)> = self
            .graph
            .node_indices()
            .map(|n| (spec.distance(&self.graph[n], &q), n))
            .collect();
        let by_distance =
            |a: &(f64, NodeIndex), b: &(f64, NodeIndex)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if near.len() > k {
            near.select_nth_unstable_by(k - 1, by_distance);
            near.truncate(k);
        }
        near.sort_by(by_distance);
        let v = self.graph.add_node(q);
        let mut edges = 0;
        for (d, n) in near {
            if motion_valid(spec, &self.graph[n], &self.graph[v], obstacles, motion_step) {
                self.graph.add_edge(n, v, d);
                edges += 1;
            }
        }
        (v, edges)
    }

    pub fn connected(&self, a: NodeIndex, b: NodeIndex) -> bool {
        has_path_connecting(&self.graph, a, b, None)
    }

    /// Shortest path between two vertices by summed edge length.
    pub fn shortest_path(&self, start: NodeIndex, goal: NodeIndex) -> Result<Path> {
        let (_, nodes) = astar(&self.graph, start, |n| n == goal, |e| *e.weight(), |_| 0.0)
            .ok_or(Error::NotConnected)?;
        let mut waypoints: Vec<Configuration> =
            nodes.into_iter().map(|n| self.graph[n].clone()).collect();
        if waypoints.len() == 1 {
            waypoints.push(waypoints[0].clone());
        }
        Ok(Path::new(waypoints))
    }
}

/// Adds every valid sample of `batch` to the roadmap, linking it to its
/// `k` nearest existing vertices where the straight motion is free.
pub fn prm_grow(
    roadmap: &mut Roadmap,
    batch: &[Configuration],
    k: usize,
    spec: &ChainSpec,
    obstacles: &[Circle],
    motion_step: f64,
) -> GrowStats {
    assert!(k >= 1, "k must be at least 1");
    let mut stats = GrowStats::default();
    for q in batch {
        if !config_valid(spec, q, obstacles) {
            stats.rejected += 1;
            continue;
        }
        let (_, e) = roadmap.insert(q.clone(), k, spec, obstacles, motion_step);
        stats.added += 1;
        stats.edges += e;
    }
    stats
}
