use std::cmp::Ordering;

use rustc_hash::FxHashMap;

use super::graph::{DynamicGraph, EdgeKey, VertexId};
use crate::ostree::OrderedSet;

/// Ordering key for "non-increasing by similarity, ties by ascending id".
#[derive(Clone, Copy, Debug)]
pub struct SimKey {
    pub sim: f64,
    pub id: VertexId,
}

impl SimKey {
    pub fn new(sim: f64, id: VertexId) -> Self {
        Self { sim, id }
    }
}

impl Ord for SimKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .sim
            .total_cmp(&self.sim)
            .then_with(|| self.id.cmp(&other.id))
    }
}

impl PartialOrd for SimKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for SimKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SimKey {}

/// Per-vertex neighbor lists sorted by stored similarity.
///
/// Each edge's similarity is stored once and mirrored into the ordered
/// lists of both endpoints, so the two entries can never disagree.
#[derive(Clone, Debug, Default)]
pub struct SortedNeighborLists {
    lists: Vec<OrderedSet<SimKey>>,
    sims: FxHashMap<EdgeKey, f64>,
}

impl SortedNeighborLists {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ensure_vertex(&mut self, u: VertexId) {
        let need = u as usize + 1;
        if self.lists.len() < need {
            self.lists.resize_with(need, OrderedSet::new);
        }
    }

    pub fn clear(&mut self) {
        self.lists.iter_mut().for_each(OrderedSet::clear);
        self.sims.clear();
    }

    pub fn sim(&self, u: VertexId, v: VertexId) -> Option<f64> {
        self.sims.get(&EdgeKey::new(u, v)).copied()
    }

    pub fn degree(&self, u: VertexId) -> usize {
        self.lists.get(u as usize).map_or(0, OrderedSet::len)
    }

    /// Number of stored edges.
    pub fn len(&self) -> usize {
        self.sims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sims.is_empty()
    }

    pub fn insert(&mut self, u: VertexId, v: VertexId, sim: f64) {
        self.ensure_vertex(u.max(v));
        let prev = self.sims.insert(EdgeKey::new(u, v), sim);
        debug_assert!(prev.is_none(), "edge ({u}, {v}) already stored");
        self.lists[u as usize].insert(SimKey::new(sim, v));
        self.lists[v as usize].insert(SimKey::new(sim, u));
    }

    pub fn remove(&mut self, u: VertexId, v: VertexId) -> Option<f64> {
        let sim = self.sims.remove(&EdgeKey::new(u, v))?;
        self.lists[u as usize].remove(&SimKey::new(sim, v));
        self.lists[v as usize].remove(&SimKey::new(sim, u));
        Some(sim)
    }

    /// Replaces the stored similarity; returns the previous value.
    pub fn update(&mut self, u: VertexId, v: VertexId, sim: f64) -> Option<f64> {
        let slot = self.sims.get_mut(&EdgeKey::new(u, v))?;
        let old = std::mem::replace(slot, sim);
        if old.to_bits() != sim.to_bits() {
            let lu = &mut self.lists;
            lu[u as usize].remove(&SimKey::new(old, v));
            lu[u as usize].insert(SimKey::new(sim, v));
            lu[v as usize].remove(&SimKey::new(old, u));
            lu[v as usize].insert(SimKey::new(sim, u));
        }
        Some(old)
    }

    /// The `k`-th largest stored similarity around `u` (`k` is 1-based).
    pub fn kth_largest_sim(&self, u: VertexId, k: usize) -> Option<f64> {
        if k == 0 {
            return None;
        }
        self.lists.get(u as usize)?.kth(k - 1).map(|key| key.sim)
    }

    /// Neighbors of `u` in non-increasing similarity order.
    pub fn iter(&self, u: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.lists
            .get(u as usize)
            .into_iter()
            .flat_map(|l| l.iter())
            .map(|k| (k.id, k.sim))
    }

    /// All stored edges with their similarity, sorted by edge key.
    pub fn edge_sims(&self) -> Vec<(EdgeKey, f64)> {
        let mut out: Vec<_> = self.sims.iter().map(|(k, s)| (*k, *s)).collect();
        out.sort_unstable_by_key(|(k, _)| *k);
        out
    }

    pub fn heap_bytes(&self) -> usize {
        self.lists.iter().map(OrderedSet::heap_bytes).sum::<usize>()
            + self.sims.capacity() * (std::mem::size_of::<EdgeKey>() + std::mem::size_of::<f64>() + 1)
    }

    /// Full consistency check against the graph.
    pub fn audit(&self, graph: &DynamicGraph) -> Result<(), String> {
        if self.sims.len() != graph.m() {
            return Err(format!("{} stored sims for {} edges", self.sims.len(), graph.m()));
        }
        for u in 0..graph.n() as VertexId {
            let entries: Vec<_> = self.iter(u).collect();
            if entries.len() != graph.degree(u) {
                return Err(format!("vertex {u}: list size {} vs degree {}", entries.len(), graph.degree(u)));
            }
            for w in entries.windows(2) {
                let ordered = w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0);
                if !ordered {
                    return Err(format!("vertex {u}: list out of order at {:?}", w));
                }
            }
            for (v, s) in entries {
                if !graph.has_edge(u, v) {
                    return Err(format!("vertex {u}: stale neighbor {v}"));
                }
                if self.sim(u, v) != Some(s) {
                    return Err(format!("edge ({u}, {v}): endpoint entry {s} differs from stored sim"));
                }
            }
        }
        Ok(())
    }
}
