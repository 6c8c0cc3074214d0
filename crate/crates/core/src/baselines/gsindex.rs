use rustc_hash::FxHashMap;

use crate::dyngraph::{DynamicGraph, EdgeKey, VertexId};
use crate::framework::{EdgeSimStore, EngineRng, UpdateKind};
use crate::similarity::{Estimate, SimilarityMeasure};

/// Exact store keeping `I(u, x) = |N[u] ∩ N[x]|` for every edge.
#[derive(Clone, Debug)]
pub struct GsStore {
    measure: SimilarityMeasure,
    counters: FxHashMap<EdgeKey, u32>,
}

impl GsStore {
    pub fn new(measure: SimilarityMeasure) -> Self {
        Self {
            measure,
            counters: FxHashMap::default(),
        }
    }

    pub fn counter(&self, u: VertexId, v: VertexId) -> Option<u32> {
        self.counters.get(&EdgeKey::new(u, v)).copied()
    }

    fn common_neighbors(graph: &DynamicGraph, u: VertexId, v: VertexId) -> Vec<VertexId> {
        let (a, b) = if graph.degree(u) <= graph.degree(v) { (u, v) } else { (v, u) };
        graph.neighbors(a).filter(|&w| w != b && graph.has_edge(b, w)).collect()
    }

    fn push_incident(graph: &DynamicGraph, x: VertexId, skip: VertexId, out: &mut Vec<EdgeKey>) {
        out.extend(graph.neighbors(x).filter(|&w| w != skip).map(|w| EdgeKey::new(x, w)));
    }
}

impl EdgeSimStore for GsStore {
    fn name(&self) -> &'static str {
        "gsindex"
    }

    fn on_update(&mut self, graph: &DynamicGraph, u: VertexId, v: VertexId, kind: UpdateKind) {
        let common = Self::common_neighbors(graph, u, v);
        for &w in &common {
            for x in [u, v] {
                let c = self.counters.get_mut(&EdgeKey::new(x, w)).expect("counter for existing edge");
                match kind {
                    UpdateKind::Insert => *c += 1,
                    UpdateKind::Delete => *c -= 1,
                }
            }
        }
        let key = EdgeKey::new(u, v);
        match kind {
            UpdateKind::Insert => {
                self.counters.insert(key, common.len() as u32 + 2);
            }
            UpdateKind::Delete => {
                self.counters.remove(&key);
            }
        }
    }

    fn insert(&mut self, _graph: &DynamicGraph, _x: VertexId, _y: VertexId) {}

    fn delete(&mut self, _graph: &DynamicGraph, _x: VertexId, _y: VertexId) {}

    fn find(
        &mut self,
        graph: &DynamicGraph,
        u: VertexId,
        v: VertexId,
        _kind: UpdateKind,
        out: &mut Vec<EdgeKey>,
    ) -> usize {
        Self::push_incident(graph, u, v, out);
        Self::push_incident(graph, v, u, out);
        out.sort_unstable();
        out.len()
    }

    fn cal_sim(&mut self, graph: &DynamicGraph, x: VertexId, y: VertexId, _rng: &mut EngineRng) -> Estimate {
        let inter = self.counter(x, y).expect("counter for existing edge") as usize;
        Estimate {
            value: self.measure.from_counts(inter, graph.inclusive_size(x), graph.inclusive_size(y)),
            samples: 0,
            exact: true,
            capped: false,
        }
    }

    fn reset(&mut self, graph: &DynamicGraph) {
        self.counters.clear();
        for e in graph.edges() {
            let (u, v) = e.endpoints();
            let c = Self::common_neighbors(graph, u, v).len() as u32 + 2;
            self.counters.insert(e, c);
        }
    }

    fn audit(&self, graph: &DynamicGraph) -> Result<(), String> {
        if self.counters.len() != graph.m() {
            return Err(format!("gs: {} counters for {} edges", self.counters.len(), graph.m()));
        }
        // Brute force: mark N[u], then count marks over N[v].
        let mut marked = vec![false; graph.n()];
        for u in 0..graph.n() as VertexId {
            for w in graph.neighbors(u).chain([u]) {
                marked[w as usize] = true;
            }
            for v in graph.neighbors(u).filter(|&v| v > u) {
                let truth = graph.neighbors(v).chain([v]).filter(|&w| marked[w as usize]).count() as u32;
                match self.counters.get(&EdgeKey::new(u, v)) {
                    Some(&c) if c == truth => {}
                    other => return Err(format!("gs: I({u}, {v}) = {other:?}, expected {truth}")),
                }
            }
            for w in graph.neighbors(u).chain([u]) {
                marked[w as usize] = false;
            }
        }
        Ok(())
    }

    fn heap_bytes(&self) -> usize {
        self.counters.capacity() * (std::mem::size_of::<EdgeKey>() + 4 + 1)
    }
}
