use indexmap::IndexSet;
use rustc_hash::FxBuildHasher;

use crate::error::GraphError;

pub type VertexId = u32;

pub(crate) type AdjacencySet = IndexSet<VertexId, FxBuildHasher>;

/// Undirected edge normalized so that `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey(u64);

impl EdgeKey {
    pub fn new(u: VertexId, v: VertexId) -> Self {
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        EdgeKey(((lo as u64) << 32) | hi as u64)
    }

    pub fn lo(self) -> VertexId {
        (self.0 >> 32) as VertexId
    }

    pub fn hi(self) -> VertexId {
        self.0 as VertexId
    }

    pub fn endpoints(self) -> (VertexId, VertexId) {
        (self.lo(), self.hi())
    }

    /// The endpoint opposite to `u`.
    pub fn other(self, u: VertexId) -> VertexId {
        if self.lo() == u {
            self.hi()
        } else {
            self.lo()
        }
    }
}

/// Dynamic undirected simple graph over dense vertex ids.
///
/// Adjacency sets keep a dense backing array next to the hash index, so
/// membership tests and uniform neighbor sampling are both `O(1)`. The
/// graph also keeps its edge set indexable, which the workload generators
/// use to draw uniform edges and degree-proportional endpoints.
#[derive(Clone, Debug, Default)]
pub struct DynamicGraph {
    adj: Vec<AdjacencySet>,
    edges: IndexSet<EdgeKey, FxBuildHasher>,
}

impl DynamicGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vertices(n: usize) -> Self {
        Self {
            adj: (0..n).map(|_| AdjacencySet::default()).collect(),
            edges: IndexSet::default(),
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (VertexId, VertexId)>) -> Self {
        let mut g = Self::with_vertices(n);
        for (u, v) in edges {
            if u != v && !g.has_edge(u, v) {
                g.insert_edge(u, v).expect("checked");
            }
        }
        g
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Number of edges.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Grows the vertex set so that `u` is a valid id.
    pub fn ensure_vertex(&mut self, u: VertexId) {
        let need = u as usize + 1;
        if self.adj.len() < need {
            self.adj.resize_with(need, AdjacencySet::default);
        }
    }

    pub fn degree(&self, u: VertexId) -> usize {
        self.adj.get(u as usize).map_or(0, |a| a.len())
    }

    /// `n_u = d_u + 1`, the size of the inclusive neighborhood.
    pub fn inclusive_size(&self, u: VertexId) -> usize {
        self.degree(u) + 1
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj
            .get(u as usize)
            .is_some_and(|a| a.contains(&v))
    }

    /// Membership test against the inclusive neighborhood `N[u]`.
    pub fn in_closed_neighborhood(&self, u: VertexId, w: VertexId) -> bool {
        u == w || self.has_edge(u, w)
    }

    /// Neighbors of `u`; empty for ids beyond the vertex range.
    pub fn neighbors(&self, u: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.get(u as usize).into_iter().flatten().copied()
    }

    /// The `i`-th neighbor in the dense backing array of `N(u)`.
    pub fn neighbor_at(&self, u: VertexId, i: usize) -> VertexId {
        self.adj[u as usize][i]
    }

    pub(crate) fn adjacency(&self, u: VertexId) -> &AdjacencySet {
        &self.adj[u as usize]
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = EdgeKey> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_at(&self, i: usize) -> EdgeKey {
        self.edges[i]
    }

    pub fn insert_edge(&mut self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        self.ensure_vertex(u.max(v));
        if self.has_edge(u, v) {
            return Err(GraphError::DuplicateEdge(u, v));
        }
        self.adj[u as usize].insert(v);
        self.adj[v as usize].insert(u);
        self.edges.insert(EdgeKey::new(u, v));
        Ok(())
    }

    pub fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        if !self.has_edge(u, v) {
            return Err(GraphError::MissingEdge(u, v));
        }
        self.adj[u as usize].swap_remove(&v);
        self.adj[v as usize].swap_remove(&u);
        self.edges.swap_remove(&EdgeKey::new(u, v));
        Ok(())
    }

    pub fn average_degree(&self) -> f64 {
        if self.adj.is_empty() {
            0.0
        } else {
            2.0 * self.m() as f64 / self.n() as f64
        }
    }

    pub fn heap_bytes(&self) -> usize {
        let per_entry = std::mem::size_of::<VertexId>() + 2 * std::mem::size_of::<usize>();
        self.adj.iter().map(|a| a.capacity() * per_entry).sum::<usize>()
            + self.adj.capacity() * std::mem::size_of::<AdjacencySet>()
            + self.edges.capacity() * (std::mem::size_of::<EdgeKey>() + 2 * std::mem::size_of::<usize>())
    }
}
