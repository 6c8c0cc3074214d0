//! Exact structural clustering from scratch, written independently of the
//! incremental structures so it can serve as the reference.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::dyngraph::{DynamicGraph, EdgeKey, VertexId};
use crate::framework::ClusteringResult;
use crate::similarity::SimilarityMeasure;

/// A similarity value for every edge of a graph snapshot.
#[derive(Clone, Debug, Default)]
pub struct EdgeSims {
    n: usize,
    sims: BTreeMap<(VertexId, VertexId), f64>,
    adj: Vec<Vec<VertexId>>,
}

impl EdgeSims {
    /// Exact similarities from brute-force closed-neighborhood intersection.
    pub fn exact(graph: &DynamicGraph, measure: SimilarityMeasure) -> Self {
        let closed: Vec<BTreeSet<VertexId>> = (0..graph.n() as VertexId)
            .map(|u| graph.neighbors(u).chain([u]).collect())
            .collect();
        Self::from_fn(graph, |u, v| {
            let (a, b) = (&closed[u as usize], &closed[v as usize]);
            let inter = a.intersection(b).count() as f64;
            let (na, nb) = (a.len() as f64, b.len() as f64);
            match measure {
                SimilarityMeasure::Jaccard => inter / (na + nb - inter),
                SimilarityMeasure::Cosine => inter / (na * nb).sqrt(),
                SimilarityMeasure::Dice => 2.0 * inter / (na + nb),
            }
        })
    }

    /// Similarities supplied by `f(u, v)` with `u < v`.
    pub fn from_fn(graph: &DynamicGraph, mut f: impl FnMut(VertexId, VertexId) -> f64) -> Self {
        let mut sims = BTreeMap::new();
        let mut adj = vec![Vec::new(); graph.n()];
        for e in graph.edges() {
            let (u, v) = e.endpoints();
            sims.insert((u, v), f(u, v));
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Self { n: graph.n(), sims, adj }
    }

    pub fn get(&self, u: VertexId, v: VertexId) -> Option<f64> {
        self.sims.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn len(&self) -> usize {
        self.sims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sims.is_empty()
    }

    /// `(edge, σ ≥ ε)` for every edge, in edge order.
    pub fn labels(&self, eps: f64) -> Vec<(EdgeKey, bool)> {
        self.sims
            .iter()
            .map(|(&(u, v), &s)| (EdgeKey::new(u, v), s >= eps))
            .collect()
    }

    fn similar(&self, u: VertexId, v: VertexId, eps: f64) -> bool {
        self.get(u, v).is_some_and(|s| s >= eps)
    }

    /// Exact `(ε, μ)` clustering over the stored similarities.
    pub fn cluster(&self, eps: f64, mu: usize) -> ClusteringResult {
        let is_core: Vec<bool> = (0..self.n as VertexId)
            .map(|u| self.adj[u as usize].iter().filter(|&&w| self.similar(u, w, eps)).count() >= mu)
            .collect();
        let cores: Vec<VertexId> = (0..self.n as VertexId).filter(|&u| is_core[u as usize]).collect();

        let mut cluster_sets: Vec<BTreeSet<VertexId>> = Vec::new();
        let mut seen = vec![false; self.n];
        for &c in &cores {
            if seen[c as usize] {
                continue;
            }
            let mut members = BTreeSet::new();
            let mut queue = VecDeque::from([c]);
            seen[c as usize] = true;
            while let Some(x) = queue.pop_front() {
                members.insert(x);
                for &w in &self.adj[x as usize] {
                    if !self.similar(x, w, eps) {
                        continue;
                    }
                    members.insert(w);
                    if is_core[w as usize] && !seen[w as usize] {
                        seen[w as usize] = true;
                        queue.push_back(w);
                    }
                }
            }
            cluster_sets.push(members);
        }

        let clustered: BTreeSet<VertexId> = cluster_sets.iter().flatten().copied().collect();
        let (mut hubs, mut outliers) = (Vec::new(), Vec::new());
        for u in 0..self.n as VertexId {
            if clustered.contains(&u) {
                continue;
            }
            let touching = cluster_sets
                .iter()
                .filter(|c| self.adj[u as usize].iter().any(|w| c.contains(w)))
                .count();
            if touching >= 2 {
                hubs.push(u);
            } else {
                outliers.push(u);
            }
        }
        let result_edges = self
            .sims
            .iter()
            .filter(|(&(u, v), &s)| s >= eps && (is_core[u as usize] || is_core[v as usize]))
            .map(|(&(u, v), _)| EdgeKey::new(u, v))
            .collect();
        ClusteringResult {
            clusters: cluster_sets.into_iter().map(|c| c.into_iter().collect()).collect(),
            cores,
            hubs,
            outliers,
            result_edges,
        }
    }
}

/// Exact clustering of `graph` at `(ε, μ)`.
pub fn oracle_cluster(graph: &DynamicGraph, measure: SimilarityMeasure, eps: f64, mu: usize) -> ClusteringResult {
    EdgeSims::exact(graph, measure).cluster(eps, mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph() {
        let g = DynamicGraph::new();
        let r = oracle_cluster(&g, SimilarityMeasure::Jaccard, 0.5, 2);
        assert_eq!(r, ClusteringResult::default());
    }

    #[test]
    fn two_triangles_with_bridge() {
        // Triangles {0,1,2} and {3,4,5} joined by the edge (2,3).
        let g = DynamicGraph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
        let r = oracle_cluster(&g, SimilarityMeasure::Jaccard, 0.6, 2);
        // Inner triangle edges: I = 3, U = 3 or 4.
        assert_eq!(r.clusters, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert!(r.hubs.is_empty());
        assert!(r.outliers.is_empty());
        assert!(!r.result_edges.contains(&EdgeKey::new(2, 3)));
    }
}
