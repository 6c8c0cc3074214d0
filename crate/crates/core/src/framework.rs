//! The unified update and query procedures.
//!
//! An [`Engine`] couples a dynamic graph, the similarity-sorted neighbor
//! lists, an edge-similarity structure ([`EdgeSimStore`]) and a core index.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::affordability::{Quota, QuotaLevel};
use crate::corefind::CoreIndex;
use crate::dyngraph::{DynamicGraph, EdgeKey, SortedNeighborLists, VertexId};
use crate::error::GraphError;
use crate::similarity::Estimate;

pub type EngineRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UpdateKind {
    Insert,
    Delete,
}

/// One edge update of a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UpdateOp {
    pub kind: UpdateKind,
    pub u: VertexId,
    pub v: VertexId,
}

impl UpdateOp {
    pub fn insert(u: VertexId, v: VertexId) -> Self {
        Self {
            kind: UpdateKind::Insert,
            u,
            v,
        }
    }

    pub fn delete(u: VertexId, v: VertexId) -> Self {
        Self {
            kind: UpdateKind::Delete,
            u,
            v,
        }
    }
}

impl fmt::Display for UpdateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            UpdateKind::Insert => 'I',
            UpdateKind::Delete => 'D',
        };
        write!(f, "{tag} {} {}", self.u, self.v)
    }
}

impl FromStr for UpdateOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut it = s.split_whitespace();
        let kind = match it.next() {
            Some("I") | Some("i") => UpdateKind::Insert,
            Some("D") | Some("d") => UpdateKind::Delete,
            other => return Err(format!("expected `I` or `D`, found {other:?}")),
        };
        let mut id = || -> Result<VertexId, String> {
            let tok = it.next().ok_or("missing vertex id")?;
            tok.parse().map_err(|_| format!("bad vertex id `{tok}`"))
        };
        let (u, v) = (id()?, id()?);
        if it.next().is_some() {
            return Err("trailing tokens".into());
        }
        Ok(Self { kind, u, v })
    }
}

/// An edge-similarity structure (EdgeSimStr).
///
/// The engine drives it in this order for an update `(u, v)`:
/// `on_update` (graph not yet mutated), `insert` or `delete` of the
/// updated edge, graph mutation, `find`, and then `delete` / `cal_sim` /
/// `insert` for every reported edge. On insertion the graph is mutated
/// before the new edge's `cal_sim` and `insert`.
pub trait EdgeSimStore {
    fn name(&self) -> &'static str;

    fn on_update(&mut self, graph: &DynamicGraph, u: VertexId, v: VertexId, kind: UpdateKind);

    fn insert(&mut self, graph: &DynamicGraph, x: VertexId, y: VertexId);

    fn delete(&mut self, graph: &DynamicGraph, x: VertexId, y: VertexId);

    /// Pushes potentially invalid edges onto `out` in ascending order,
    /// never including `(u, v)`. Returns the number of entries examined.
    fn find(&mut self, graph: &DynamicGraph, u: VertexId, v: VertexId, kind: UpdateKind, out: &mut Vec<EdgeKey>)
        -> usize;

    fn cal_sim(&mut self, graph: &DynamicGraph, x: VertexId, y: VertexId, rng: &mut EngineRng) -> Estimate;

    /// Drops all state ahead of a rebuild over `graph`.
    fn reset(&mut self, graph: &DynamicGraph);

    fn audit(&self, graph: &DynamicGraph) -> Result<(), String>;

    /// Affordability quota of an edge, for structures that have one.
    fn quota(&self, _e: EdgeKey) -> Option<Quota> {
        None
    }

    fn heap_bytes(&self) -> usize {
        0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryParams {
    pub eps: f64,
    pub mu: usize,
}

impl QueryParams {
    pub fn new(eps: f64, mu: usize) -> Self {
        Self { eps, mu }
    }
}

/// Clusters, roles and the clustering-result graph of one query.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusteringResult {
    /// Sorted member lists, ordered by smallest core id.
    pub clusters: Vec<Vec<VertexId>>,
    pub cores: Vec<VertexId>,
    pub hubs: Vec<VertexId>,
    pub outliers: Vec<VertexId>,
    /// Sim-edges incident on at least one core, sorted.
    pub result_edges: Vec<EdgeKey>,
}

impl ClusteringResult {
    /// Vertices of the clustering-result graph.
    pub fn n_cr(&self) -> usize {
        let mut seen = FxHashSet::default();
        for e in &self.result_edges {
            seen.insert(e.lo());
            seen.insert(e.hi());
        }
        seen.extend(self.cores.iter().copied());
        seen.len()
    }

    pub fn m_cr(&self) -> usize {
        self.result_edges.len()
    }
}

/// Builds clusters from cores and the sim-edges incident on them. Every
/// vertex of `graph` outside all clusters becomes a hub or an outlier.
pub fn extract_clusters(graph: &DynamicGraph, cores: &[VertexId], result_edges: &[EdgeKey]) -> ClusteringResult {
    let n = graph.n().max(cores.iter().map(|&c| c as usize + 1).max().unwrap_or(0));
    let mut core_slot = vec![u32::MAX; n];
    for (i, &c) in cores.iter().enumerate() {
        core_slot[c as usize] = i as u32;
    }
    let is_core = |x: VertexId| core_slot[x as usize] != u32::MAX;

    let mut parent: Vec<u32> = (0..cores.len() as u32).collect();
    fn root(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    for e in result_edges {
        let (a, b) = e.endpoints();
        if is_core(a) && is_core(b) {
            let ra = root(&mut parent, core_slot[a as usize]);
            let rb = root(&mut parent, core_slot[b as usize]);
            if ra != rb {
                parent[ra.max(rb) as usize] = ra.min(rb);
            }
        }
    }

    // Cores come sorted, so clusters are numbered by smallest core id.
    let mut cluster_of_root = FxHashMap::default();
    let mut core_cluster = vec![0u32; cores.len()];
    let mut clusters: Vec<Vec<VertexId>> = Vec::new();
    for (i, &c) in cores.iter().enumerate() {
        let r = root(&mut parent, i as u32);
        let id = *cluster_of_root.entry(r).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() as u32 - 1
        });
        core_cluster[i] = id;
        clusters[id as usize].push(c);
    }
    let mut membership: FxHashMap<VertexId, Vec<u32>> = FxHashMap::default();
    for (i, &c) in cores.iter().enumerate() {
        membership.insert(c, vec![core_cluster[i]]);
    }
    for e in result_edges {
        let (a, b) = e.endpoints();
        for (core, other) in [(a, b), (b, a)] {
            if is_core(core) && !is_core(other) {
                let id = core_cluster[core_slot[core as usize] as usize];
                let m = membership.entry(other).or_default();
                if !m.contains(&id) {
                    m.push(id);
                    clusters[id as usize].push(other);
                }
            }
        }
    }
    for c in &mut clusters {
        c.sort_unstable();
    }

    let mut hubs = Vec::new();
    let mut outliers = Vec::new();
    let mut adjacent = FxHashSet::default();
    for u in 0..n as VertexId {
        if membership.contains_key(&u) {
            continue;
        }
        adjacent.clear();
        if (u as usize) < graph.n() {
            for w in graph.neighbors(u) {
                if let Some(ids) = membership.get(&w) {
                    adjacent.extend(ids.iter().copied());
                    if adjacent.len() >= 2 {
                        break;
                    }
                }
            }
        }
        if adjacent.len() >= 2 {
            hubs.push(u);
        } else {
            outliers.push(u);
        }
    }
    ClusteringResult {
        clusters,
        cores: cores.to_vec(),
        hubs,
        outliers,
        result_edges: result_edges.to_vec(),
    }
}

/// Instrumentation outcome of one update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UpdateReport {
    /// `|F|`.
    pub invalid: usize,
    /// Entries examined by `find`.
    pub touched: usize,
    pub cal_sim_calls: usize,
    pub samples: u64,
    /// Some `cal_sim` hit the sample cap.
    pub capped: bool,
    pub rebuilt: bool,
}

/// Counters accumulated over an engine's lifetime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub updates: u64,
    pub cal_sim_calls: u64,
    /// Re-evaluations of existing edges reported by `find`.
    pub recomputations: u64,
    pub touched: u64,
    pub samples: u64,
    pub capped_calls: u64,
    pub rebuilds: u64,
}

/// A recomputation that absorbed more affecting updates than its quota
/// allows, or an edge holding more pending updates than `floor₂(τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecomputeViolation {
    pub update_index: u64,
    pub edge: EdgeKey,
    /// Affecting updates since the last `cal_sim`, including the current one.
    pub count: u64,
    pub quota: Quota,
}

/// Per-edge affecting-update counts since the last `cal_sim`.
#[derive(Clone, Debug, Default)]
pub struct RecomputeTracker {
    pending: FxHashMap<EdgeKey, u64>,
    bumped: Vec<EdgeKey>,
    pub recomputes: u64,
    /// Largest count seen at a recomputation.
    pub max_count: u64,
    pub bucketed_recomputes: u64,
    pub violations: Vec<RecomputeViolation>,
}

impl RecomputeTracker {
    /// Count passes iff `k - 1 < floor₂(τ)`, and additionally `k < 4q`
    /// for bucketed entries and `k = 1` for immediate ones.
    pub fn within_quota(count: u64, quota: &Quota) -> bool {
        let absorbed_ok = ((count - 1) as f64) < quota.floor2_tau();
        let level_ok = match quota.level {
            QuotaLevel::Immediate => count == 1,
            QuotaLevel::Bucket(_) => count < 4 * quota.q().unwrap_or(1),
        };
        absorbed_ok && level_ok
    }

    fn reset(&mut self) {
        self.pending.clear();
        self.bumped.clear();
    }
}

/// Dynamic structural clustering engine over one EdgeSimStr.
pub struct Engine<S> {
    graph: DynamicGraph,
    lists: SortedNeighborLists,
    store: S,
    cores: CoreIndex,
    rng: EngineRng,
    /// Updates between full rebuilds; `None` disables rebuilding.
    epoch_len: Option<u64>,
    since_rebuild: u64,
    stats: EngineStats,
    tracker: Option<RecomputeTracker>,
    scratch: Vec<EdgeKey>,
}

impl<S: EdgeSimStore> Engine<S> {
    /// Builds all structures over `graph`. The epoch length defaults to
    /// `n₀²` for the initial vertex count `n₀`.
    pub fn new(graph: DynamicGraph, store: S, cores: CoreIndex, seed: u64) -> Self {
        let n0 = graph.n().max(2) as u64;
        let mut engine = Self {
            graph,
            lists: SortedNeighborLists::new(),
            store,
            cores,
            rng: EngineRng::seed_from_u64(seed),
            epoch_len: Some(n0.saturating_mul(n0)),
            since_rebuild: 0,
            stats: EngineStats::default(),
            tracker: None,
            scratch: Vec::new(),
        };
        engine.rebuild();
        engine
    }

    pub fn with_epoch_len(mut self, epoch_len: Option<u64>) -> Self {
        self.epoch_len = epoch_len;
        self
    }

    /// Enables per-edge affecting-update counting.
    pub fn with_recompute_tracking(mut self) -> Self {
        self.tracker = Some(RecomputeTracker::default());
        self
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.graph
    }

    pub fn lists(&self) -> &SortedNeighborLists {
        &self.lists
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    pub fn core_index(&self) -> &CoreIndex {
        &self.cores
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    pub fn tracker(&self) -> Option<&RecomputeTracker> {
        self.tracker.as_ref()
    }

    /// Recomputes every similarity from scratch and starts a new epoch.
    pub fn rebuild(&mut self) {
        self.store.reset(&self.graph);
        self.lists.clear();
        self.cores.clear();
        if self.graph.n() > 0 {
            self.lists.ensure_vertex(self.graph.n() as VertexId - 1);
        }
        let edges: Vec<_> = self.graph.edges().collect();
        for e in edges {
            let (x, y) = e.endpoints();
            let est = self.store.cal_sim(&self.graph, x, y, &mut self.rng);
            self.note_estimate(&est);
            self.store.insert(&self.graph, x, y);
            self.lists.insert(x, y, est.value);
        }
        for u in 0..self.graph.n() as VertexId {
            self.cores.update(u, &self.lists);
        }
        if let Some(t) = &mut self.tracker {
            t.reset();
        }
        self.since_rebuild = 0;
    }

    fn note_estimate(&mut self, est: &Estimate) {
        self.stats.cal_sim_calls += 1;
        self.stats.samples += est.samples;
        if est.capped {
            self.stats.capped_calls += 1;
        }
    }

    pub fn apply_update(&mut self, op: UpdateOp) -> Result<UpdateReport, GraphError> {
        let UpdateOp { kind, u, v } = op;
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        match kind {
            UpdateKind::Insert if self.graph.has_edge(u, v) => return Err(GraphError::DuplicateEdge(u, v)),
            UpdateKind::Delete if !self.graph.has_edge(u, v) => return Err(GraphError::MissingEdge(u, v)),
            _ => {}
        }
        let mut report = UpdateReport::default();
        let before = self.stats;

        if let Some(t) = &mut self.tracker {
            t.bumped.clear();
            for (x, other) in [(u, v), (v, u)] {
                if (x as usize) < self.graph.n() {
                    for w in self.graph.neighbors(x) {
                        if w != other {
                            let e = EdgeKey::new(x, w);
                            *t.pending.entry(e).or_insert(0) += 1;
                            t.bumped.push(e);
                        }
                    }
                }
            }
        }

        self.store.on_update(&self.graph, u, v, kind);
        match kind {
            UpdateKind::Insert => {
                self.graph.insert_edge(u, v)?;
                self.lists.ensure_vertex(u.max(v));
                let est = self.store.cal_sim(&self.graph, u, v, &mut self.rng);
                self.note_estimate(&est);
                report.capped |= est.capped;
                self.store.insert(&self.graph, u, v);
                self.lists.insert(u, v, est.value);
            }
            UpdateKind::Delete => {
                self.store.delete(&self.graph, u, v);
                self.graph.delete_edge(u, v)?;
                self.lists.remove(u, v);
            }
        }

        let mut invalid = std::mem::take(&mut self.scratch);
        invalid.clear();
        report.touched = self.store.find(&self.graph, u, v, kind, &mut invalid);
        report.invalid = invalid.len();
        for &e in &invalid {
            let (x, y) = e.endpoints();
            if let Some(t) = &mut self.tracker {
                let count = t.pending.remove(&e).unwrap_or(0);
                t.recomputes += 1;
                t.max_count = t.max_count.max(count);
                if let Some(quota) = self.store.quota(e) {
                    if matches!(quota.level, QuotaLevel::Bucket(_)) {
                        t.bucketed_recomputes += 1;
                    }
                    if count == 0 || !RecomputeTracker::within_quota(count, &quota) {
                        t.violations.push(RecomputeViolation {
                            update_index: self.stats.updates,
                            edge: e,
                            count,
                            quota,
                        });
                    }
                }
            }
            self.store.delete(&self.graph, x, y);
            let est = self.store.cal_sim(&self.graph, x, y, &mut self.rng);
            self.note_estimate(&est);
            report.capped |= est.capped;
            self.store.insert(&self.graph, x, y);
            self.lists.update(x, y, est.value);
        }
        self.stats.recomputations += invalid.len() as u64;

        if let Some(t) = &mut self.tracker {
            // Edges that absorbed this update without a recomputation.
            for &e in &t.bumped {
                let Some(&count) = t.pending.get(&e) else { continue };
                if let Some(quota) = self.store.quota(e) {
                    if (count as f64) >= quota.floor2_tau() {
                        t.violations.push(RecomputeViolation {
                            update_index: self.stats.updates,
                            edge: e,
                            count: count + 1,
                            quota,
                        });
                    }
                }
            }
            if kind == UpdateKind::Delete {
                t.pending.remove(&EdgeKey::new(u, v));
            } else {
                t.pending.insert(EdgeKey::new(u, v), 0);
            }
        }

        let mut touched_vertices: Vec<VertexId> = Vec::with_capacity(2 * invalid.len() + 2);
        touched_vertices.extend([u, v]);
        for e in &invalid {
            touched_vertices.extend([e.lo(), e.hi()]);
        }
        touched_vertices.sort_unstable();
        touched_vertices.dedup();
        for &x in &touched_vertices {
            self.cores.update(x, &self.lists);
        }
        self.scratch = invalid;

        self.stats.updates += 1;
        self.stats.touched += report.touched as u64;
        self.since_rebuild += 1;
        if self.epoch_len.is_some_and(|len| self.since_rebuild >= len) {
            self.rebuild();
            self.stats.rebuilds += 1;
            report.rebuilt = true;
        }
        report.cal_sim_calls = (self.stats.cal_sim_calls - before.cal_sim_calls) as usize;
        report.samples = self.stats.samples - before.samples;
        Ok(report)
    }

    pub fn query(&self, params: QueryParams) -> ClusteringResult {
        let cores = self
            .cores
            .find_core(self.graph.n(), &self.lists, params.eps, params.mu);
        let is_core: FxHashSet<VertexId> = cores.iter().copied().collect();
        let mut edges = Vec::new();
        for &c in &cores {
            for (w, s) in self.lists.iter(c) {
                if s < params.eps {
                    break;
                }
                // Core-core edges are collected once, from the smaller id.
                if !is_core.contains(&w) || c < w {
                    edges.push(EdgeKey::new(c, w));
                }
            }
        }
        edges.sort_unstable();
        extract_clusters(&self.graph, &cores, &edges)
    }

    /// Full consistency check of all structures.
    pub fn audit(&self) -> Result<(), String> {
        self.lists.audit(&self.graph)?;
        self.store.audit(&self.graph)?;
        self.cores.audit(self.graph.n(), &self.lists)?;
        for (e, s) in self.lists.edge_sims() {
            if !(0.0..=1.0).contains(&s) {
                return Err(format!("edge {:?}: similarity {s} outside [0, 1]", e.endpoints()));
            }
        }
        Ok(())
    }

    pub fn heap_bytes(&self) -> usize {
        self.graph.heap_bytes() + self.lists.heap_bytes() + self.store.heap_bytes() + self.cores.heap_bytes()
    }
}

/// Object-safe view of an engine, used by the benchmark runner.
pub trait ClusteringEngine {
    fn name(&self) -> &'static str;
    fn apply_update(&mut self, op: UpdateOp) -> Result<UpdateReport, GraphError>;
    fn query(&self, params: QueryParams) -> ClusteringResult;
    fn graph(&self) -> &DynamicGraph;
    fn lists(&self) -> &SortedNeighborLists;
    fn stats(&self) -> &EngineStats;
    fn audit(&self) -> Result<(), String>;
    fn tracker(&self) -> Option<&RecomputeTracker>;
    fn heap_bytes(&self) -> usize;
}

impl<S: EdgeSimStore> ClusteringEngine for Engine<S> {
    fn name(&self) -> &'static str {
        self.store.name()
    }

    fn apply_update(&mut self, op: UpdateOp) -> Result<UpdateReport, GraphError> {
        Engine::apply_update(self, op)
    }

    fn query(&self, params: QueryParams) -> ClusteringResult {
        Engine::query(self, params)
    }

    fn graph(&self) -> &DynamicGraph {
        &self.graph
    }

    fn lists(&self) -> &SortedNeighborLists {
        &self.lists
    }

    fn stats(&self) -> &EngineStats {
        &self.stats
    }

    fn audit(&self) -> Result<(), String> {
        Engine::audit(self)
    }

    fn tracker(&self) -> Option<&RecomputeTracker> {
        self.tracker.as_ref()
    }

    fn heap_bytes(&self) -> usize {
        Engine::heap_bytes(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_op_roundtrip() {
        let op: UpdateOp = "I 3 7".parse().unwrap();
        assert_eq!(op, UpdateOp::insert(3, 7));
        assert_eq!(op.to_string(), "I 3 7");
        assert_eq!("D 1 2".parse::<UpdateOp>().unwrap(), UpdateOp::delete(1, 2));
        assert!("X 1 2".parse::<UpdateOp>().is_err());
        assert!("I 1".parse::<UpdateOp>().is_err());
        assert!("I 1 2 3".parse::<UpdateOp>().is_err());
    }

    #[test]
    fn extract_single_core() {
        let g = DynamicGraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]);
        let edges = [EdgeKey::new(0, 1), EdgeKey::new(0, 2), EdgeKey::new(0, 3)];
        let r = extract_clusters(&g, &[0], &edges);
        assert_eq!(r.clusters, vec![vec![0, 1, 2, 3]]);
        assert!(r.hubs.is_empty() && r.outliers.is_empty());
        assert_eq!(r.n_cr(), 4);
        assert_eq!(r.m_cr(), 3);
    }

    #[test]
    fn extract_two_cores_merge() {
        let g = DynamicGraph::from_edges(3, [(0, 1), (1, 2)]);
        let edges = [EdgeKey::new(0, 1), EdgeKey::new(1, 2)];
        let r = extract_clusters(&g, &[0, 1], &edges);
        assert_eq!(r.clusters, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn extract_overlap_and_roles() {
        // Cores 0 and 4 in separate clusters; 2 is similar to both; 5 is
        // adjacent to both clusters without being similar; 6 hangs off 5.
        let g = DynamicGraph::from_edges(7, [(0, 1), (0, 2), (4, 2), (4, 3), (5, 1), (5, 3), (5, 6)]);
        let edges = [EdgeKey::new(0, 1), EdgeKey::new(0, 2), EdgeKey::new(2, 4), EdgeKey::new(3, 4)];
        let r = extract_clusters(&g, &[0, 4], &edges);
        assert_eq!(r.clusters, vec![vec![0, 1, 2], vec![2, 3, 4]]);
        assert_eq!(r.hubs, vec![5]);
        assert_eq!(r.outliers, vec![6]);
    }

    #[test]
    fn extract_no_cores() {
        let g = DynamicGraph::from_edges(3, [(0, 1)]);
        let r = extract_clusters(&g, &[], &[]);
        assert!(r.clusters.is_empty());
        assert_eq!(r.outliers, vec![0, 1, 2]);
    }
}
