//! Synthetic graphs, update streams and query workloads.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyngraph::{DynamicGraph, LabelMap, VertexId};
use crate::error::{ParseError, WorkloadError};
use crate::framework::{QueryParams, UpdateKind, UpdateOp};

/// How the endpoints of an insertion are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum InsertStrategy {
    /// Uniform non-edge.
    Rr,
    /// First endpoint proportional to degree, second uniform.
    #[default]
    Dr,
    /// Both endpoints proportional to degree.
    Dd,
}

impl fmt::Display for InsertStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rr => "rr",
            Self::Dr => "dr",
            Self::Dd => "dd",
        })
    }
}

impl FromStr for InsertStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rr" => Ok(Self::Rr),
            "dr" => Ok(Self::Dr),
            "dd" => Ok(Self::Dd),
            other => Err(format!("unknown insertion strategy `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadConfig {
    pub strategy: InsertStrategy,
    /// Deletion-to-insertion ratio.
    pub eta: f64,
    /// Stream length; `None` means `2m` of the initial graph.
    pub updates: Option<u64>,
    pub seed: u64,
    pub query_period: u64,
    pub eps_range: (f64, f64),
    pub mu_min: usize,
    pub dd_retries: usize,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            strategy: InsertStrategy::Dr,
            eta: 0.1,
            updates: None,
            seed: 0,
            query_period: 20,
            eps_range: (0.1, 0.5),
            mu_min: 2,
            dd_retries: 64,
        }
    }
}

impl WorkloadConfig {
    pub fn delete_probability(&self) -> f64 {
        self.eta / (1.0 + self.eta)
    }

    pub fn stream_len(&self, graph: &DynamicGraph) -> u64 {
        self.updates.unwrap_or(2 * graph.m() as u64)
    }
}

/// Draws the next update for `graph` as it is now.
pub fn next_update<R: Rng + ?Sized>(
    graph: &DynamicGraph,
    config: &WorkloadConfig,
    rng: &mut R,
) -> Result<UpdateOp, WorkloadError> {
    let n = graph.n();
    let complete = n >= 2 && graph.m() == n * (n - 1) / 2;
    let delete = rng.random::<f64>() < config.delete_probability();
    // Deletions on an edgeless graph and insertions on a complete one flip.
    if (delete || complete) && graph.m() > 0 {
        let (u, v) = graph.edge_at(rng.random_range(0..graph.m())).endpoints();
        return Ok(UpdateOp::delete(u, v));
    }
    let (u, v) = match config.strategy {
        InsertStrategy::Rr => uniform_non_edge(graph, rng)?,
        InsertStrategy::Dr => degree_random(graph, rng)?,
        InsertStrategy::Dd => degree_degree(graph, config.dd_retries, rng)?,
    };
    Ok(UpdateOp::insert(u, v))
}

/// One endpoint of a uniform edge, i.e. a vertex drawn with probability
/// `d_u / 2m`. Uniform over vertices when the graph has no edges.
pub fn degree_proportional_vertex<R: Rng + ?Sized>(graph: &DynamicGraph, rng: &mut R) -> VertexId {
    if graph.m() == 0 {
        return rng.random_range(0..graph.n() as VertexId);
    }
    let (u, v) = graph.edge_at(rng.random_range(0..graph.m())).endpoints();
    if rng.random::<bool>() {
        u
    } else {
        v
    }
}

/// Uniform vertex `w ≠ u` not adjacent to `u`, if any.
fn uniform_non_neighbor<R: Rng + ?Sized>(graph: &DynamicGraph, u: VertexId, rng: &mut R) -> Option<VertexId> {
    let n = graph.n();
    let free = n.saturating_sub(1 + graph.degree(u));
    if free == 0 {
        return None;
    }
    if free * 8 >= n {
        loop {
            let w = rng.random_range(0..n as VertexId);
            if w != u && !graph.has_edge(u, w) {
                return Some(w);
            }
        }
    }
    let pick = rng.random_range(0..free);
    (0..n as VertexId)
        .filter(|&w| w != u && !graph.has_edge(u, w))
        .nth(pick)
}

fn uniform_non_edge<R: Rng + ?Sized>(graph: &DynamicGraph, rng: &mut R) -> Result<(VertexId, VertexId), WorkloadError> {
    let n = graph.n();
    let pairs = n * n.saturating_sub(1) / 2;
    let free = pairs - graph.m();
    if free == 0 {
        return Err(WorkloadError::Saturated);
    }
    if free * 8 >= pairs {
        loop {
            let u = rng.random_range(0..n as VertexId);
            let v = rng.random_range(0..n as VertexId);
            if u != v && !graph.has_edge(u, v) {
                return Ok((u, v));
            }
        }
    }
    let pick = rng.random_range(0..free);
    (0..n as VertexId)
        .flat_map(|u| (u + 1..n as VertexId).map(move |v| (u, v)))
        .filter(|&(u, v)| !graph.has_edge(u, v))
        .nth(pick)
        .ok_or(WorkloadError::Saturated)
}

fn degree_random<R: Rng + ?Sized>(graph: &DynamicGraph, rng: &mut R) -> Result<(VertexId, VertexId), WorkloadError> {
    if graph.n() < 2 {
        return Err(WorkloadError::Saturated);
    }
    for _ in 0..64 {
        let u = degree_proportional_vertex(graph, rng);
        if let Some(v) = uniform_non_neighbor(graph, u, rng) {
            return Ok((u, v));
        }
    }
    uniform_non_edge(graph, rng)
}

fn degree_degree<R: Rng + ?Sized>(
    graph: &DynamicGraph,
    retries: usize,
    rng: &mut R,
) -> Result<(VertexId, VertexId), WorkloadError> {
    if graph.n() < 2 {
        return Err(WorkloadError::Saturated);
    }
    for _ in 0..retries {
        let u = degree_proportional_vertex(graph, rng);
        let v = degree_proportional_vertex(graph, rng);
        if u != v && !graph.has_edge(u, v) {
            return Ok((u, v));
        }
    }
    degree_random(graph, rng)
}

/// Uniform `ε` in the configured range and uniform integer
/// `μ ∈ [mu_min, max(mu_min, ⌊2d̄⌋)]`.
pub fn next_query<R: Rng + ?Sized>(graph: &DynamicGraph, config: &WorkloadConfig, rng: &mut R) -> QueryParams {
    let (lo, hi) = config.eps_range;
    let eps = rng.random_range(lo..=hi);
    let mu_max = ((2.0 * graph.average_degree()).floor() as usize).max(config.mu_min);
    let mu = rng.random_range(config.mu_min..=mu_max);
    QueryParams { eps, mu }
}

/// Seeded source of updates and queries. The two use independent streams
/// so changing the query period does not change the updates.
#[derive(Clone, Debug)]
pub struct WorkloadGenerator {
    pub config: WorkloadConfig,
    update_rng: ChaCha8Rng,
    query_rng: ChaCha8Rng,
}

impl WorkloadGenerator {
    pub fn new(config: WorkloadConfig) -> Self {
        let update_rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut query_rng = ChaCha8Rng::seed_from_u64(config.seed);
        query_rng.set_stream(1);
        Self {
            config,
            update_rng,
            query_rng,
        }
    }

    pub fn next_update(&mut self, graph: &DynamicGraph) -> Result<UpdateOp, WorkloadError> {
        next_update(graph, &self.config, &mut self.update_rng)
    }

    pub fn next_query(&mut self, graph: &DynamicGraph) -> QueryParams {
        next_query(graph, &self.config, &mut self.query_rng)
    }

    /// Materializes `count` updates against a private copy of `graph`.
    pub fn stream(&mut self, graph: &DynamicGraph, count: u64) -> Result<Vec<UpdateOp>, WorkloadError> {
        let mut g = graph.clone();
        let mut ops = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let op = self.next_update(&g)?;
            match op.kind {
                UpdateKind::Insert => g.insert_edge(op.u, op.v),
                UpdateKind::Delete => g.delete_edge(op.u, op.v),
            }
            .expect("generated updates are legal");
            ops.push(op);
        }
        Ok(ops)
    }
}

/// `G(n, m)`: `m` distinct uniform edges over `n` vertices.
pub fn gnm_graph<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> DynamicGraph {
    let m = m.min(n * n.saturating_sub(1) / 2);
    let mut g = DynamicGraph::with_vertices(n);
    while g.m() < m {
        let (u, v) = uniform_non_edge(&g, rng).expect("m is below the pair count");
        g.insert_edge(u, v).expect("non-edge");
    }
    g
}

/// Preferential attachment: every new vertex links to `k` distinct earlier
/// vertices chosen proportionally to degree (uniformly while the seed clique
/// is small), giving average degree close to `2k`.
pub fn preferential_attachment<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> DynamicGraph {
    let mut g = DynamicGraph::with_vertices(n);
    let seed = (k + 1).min(n);
    for u in 0..seed as VertexId {
        for v in u + 1..seed as VertexId {
            g.insert_edge(u, v).expect("fresh clique");
        }
    }
    let mut targets = Vec::with_capacity(k);
    for u in seed as VertexId..n as VertexId {
        targets.clear();
        while targets.len() < k {
            let v = degree_proportional_vertex(&g, rng);
            if v < u && !targets.contains(&v) {
                targets.push(v);
            }
        }
        for &v in &targets {
            g.insert_edge(u, v).expect("distinct targets");
        }
    }
    g
}

/// Planted partition: `blocks` groups of `size` vertices, each intra-group
/// pair linked with probability `p_in` and each cross pair with `p_out`.
/// Vertex `u` belongs to group `u / size`.
pub fn planted_partition<R: Rng + ?Sized>(blocks: usize, size: usize, p_in: f64, p_out: f64, rng: &mut R) -> DynamicGraph {
    let n = blocks * size;
    let mut g = DynamicGraph::with_vertices(n);
    for u in 0..n {
        for v in u + 1..n {
            let p = if u / size == v / size { p_in } else { p_out };
            if rng.random::<f64>() < p {
                g.insert_edge(u as VertexId, v as VertexId).expect("each pair visited once");
            }
        }
    }
    g
}

/// Reads an update stream of `I u v` / `D u v` lines. Vertex tokens are
/// resolved through `labels`, so streams can name the graph file's labels.
pub fn read_stream<R: BufRead>(reader: R, labels: &mut LabelMap) -> Result<Vec<UpdateOp>, ParseError> {
    let mut ops = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let malformed = |message: String| ParseError::Malformed { line: i + 1, message };
        let mut it = trimmed.split_whitespace();
        let kind = match it.next() {
            Some("I") | Some("i") => UpdateKind::Insert,
            Some("D") | Some("d") => UpdateKind::Delete,
            other => return Err(malformed(format!("expected `I` or `D`, found {other:?}"))),
        };
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(malformed(format!("expected `{} u v`, got {trimmed:?}", if kind == UpdateKind::Insert { 'I' } else { 'D' })));
        };
        let (u, v) = (labels.id_of(a), labels.id_of(b));
        if u == v {
            return Err(malformed(format!("self-loop on `{a}`")));
        }
        ops.push(UpdateOp { kind, u, v });
    }
    Ok(ops)
}

/// Writes a stream using `labels` for vertex names (dense ids when absent).
pub fn write_stream<W: Write>(ops: &[UpdateOp], labels: Option<&LabelMap>, mut out: W) -> std::io::Result<()> {
    let name = |x: VertexId| -> String {
        labels
            .and_then(|l| l.label(x))
            .map_or_else(|| x.to_string(), str::to_owned)
    };
    for op in ops {
        let tag = if op.kind == UpdateKind::Insert { 'I' } else { 'D' };
        writeln!(out, "{tag} {} {}", name(op.u), name(op.v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn eta_zero_is_insert_only() {
        let mut r = rng(1);
        let g0 = gnm_graph(200, 400, &mut r);
        let cfg = WorkloadConfig {
            eta: 0.0,
            ..WorkloadConfig::default()
        };
        let ops = WorkloadGenerator::new(cfg).stream(&g0, 2000).unwrap();
        assert!(ops.iter().all(|op| op.kind == UpdateKind::Insert));
    }

    #[test]
    fn deletion_fraction() {
        let mut r = rng(2);
        let g = gnm_graph(500, 2000, &mut r);
        let cfg = WorkloadConfig::default();
        let draws = 100_000;
        let deletes = (0..draws)
            .filter(|_| next_update(&g, &cfg, &mut r).unwrap().kind == UpdateKind::Delete)
            .count();
        let frac = deletes as f64 / draws as f64;
        assert!((frac - 1.0 / 11.0).abs() < 0.01, "{frac}");
    }

    #[test]
    fn dr_first_endpoint_is_degree_proportional() {
        // Star with center 0 and 20 leaves, plus an extra path 1-2-3.
        let mut edges: Vec<_> = (1..=20).map(|w| (0, w)).collect();
        edges.extend([(1, 2), (2, 3)]);
        let g = DynamicGraph::from_edges(21, edges);
        let mut r = rng(3);
        let draws = 200_000usize;
        let mut counts = [0usize; 21];
        for _ in 0..draws {
            counts[degree_proportional_vertex(&g, &mut r) as usize] += 1;
        }
        let two_m = 2.0 * g.m() as f64;
        let chi2: f64 = (0..21u32)
            .map(|u| {
                let expected = draws as f64 * g.degree(u) as f64 / two_m;
                let diff = counts[u as usize] as f64 - expected;
                diff * diff / expected
            })
            .sum();
        // 20 degrees of freedom; the 0.999 quantile is about 45.3.
        assert!(chi2 < 45.3, "chi2 = {chi2}");
    }

    #[test]
    fn insertions_are_legal() {
        for strategy in [InsertStrategy::Rr, InsertStrategy::Dr, InsertStrategy::Dd] {
            let mut r = rng(4);
            let g = preferential_attachment(300, 3, &mut r);
            let cfg = WorkloadConfig {
                strategy,
                eta: 0.5,
                ..WorkloadConfig::default()
            };
            // `stream` panics on an illegal update.
            let ops = WorkloadGenerator::new(cfg).stream(&g, 3000).unwrap();
            assert_eq!(ops.len(), 3000);
        }
    }

    #[test]
    fn complete_graph_insertion_becomes_deletion() {
        let edges: Vec<_> = (0..5u32).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
        let g = DynamicGraph::from_edges(5, edges);
        let cfg = WorkloadConfig {
            eta: 0.0,
            ..WorkloadConfig::default()
        };
        let op = next_update(&g, &cfg, &mut rng(0)).unwrap();
        assert_eq!(op.kind, UpdateKind::Delete);
        let single = DynamicGraph::with_vertices(1);
        assert_eq!(next_update(&single, &cfg, &mut rng(0)), Err(WorkloadError::Saturated));
    }

    #[test]
    fn edgeless_graph_deletion_becomes_insertion() {
        let g = DynamicGraph::with_vertices(10);
        let cfg = WorkloadConfig {
            eta: 1e9,
            ..WorkloadConfig::default()
        };
        let op = next_update(&g, &cfg, &mut rng(0)).unwrap();
        assert_eq!(op.kind, UpdateKind::Insert);
    }

    #[test]
    fn queries_in_range() {
        let mut r = rng(5);
        let g = preferential_attachment(500, 5, &mut r);
        let cfg = WorkloadConfig::default();
        let mu_max = (2.0 * g.average_degree()).floor() as usize;
        for _ in 0..5000 {
            let q = next_query(&g, &cfg, &mut r);
            assert!((0.1..=0.5).contains(&q.eps));
            assert!(q.mu >= 2 && q.mu <= mu_max);
        }
    }

    #[test]
    fn streams_reproducible() {
        let g = gnm_graph(100, 300, &mut rng(6));
        let cfg = WorkloadConfig {
            seed: 99,
            ..WorkloadConfig::default()
        };
        let a = WorkloadGenerator::new(cfg.clone()).stream(&g, 500).unwrap();
        let b = WorkloadGenerator::new(cfg).stream(&g, 500).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generators() {
        let g = gnm_graph(100, 250, &mut rng(7));
        assert_eq!((g.n(), g.m()), (100, 250));
        let pa = preferential_attachment(1000, 5, &mut rng(8));
        assert!((pa.average_degree() - 10.0).abs() < 0.2, "{}", pa.average_degree());
        let pp = planted_partition(4, 10, 1.0, 0.0, &mut rng(9));
        assert_eq!((pp.n(), pp.m()), (40, 4 * 45));
        assert!(pp.edges().all(|e| e.lo() / 10 == e.hi() / 10));
    }

    #[test]
    fn stream_roundtrip() {
        let ops = vec![UpdateOp::insert(0, 1), UpdateOp::delete(1, 0), UpdateOp::insert(2, 3)];
        let labels = LabelMap::from_labels(["a", "b", "c", "d"].map(String::from));
        let mut buf = Vec::new();
        write_stream(&ops, Some(&labels), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "I a b\nD b a\nI c d\n");
        let mut back_labels = labels.clone();
        assert_eq!(read_stream(buf.as_slice(), &mut back_labels).unwrap(), ops);
        let err = read_stream("I a\n".as_bytes(), &mut back_labels).unwrap_err();
        assert!(matches!(err, ParseError::Malformed { line: 1, .. }));
    }
}
