use crate::dyngraph::{DynamicGraph, EdgeKey, VertexId};
use crate::framework::{EdgeSimStore, EngineRng, UpdateKind};
use crate::ostree::OrderedSet;
use crate::similarity::Estimate;

/// Signature size `k = ⌈(2/ρ²)·ln(2(n·M)²)⌉`.
pub fn botbin_k(n: usize, updates: u64, rho: f64) -> usize {
    let nm = (n.max(2) as f64) * (updates.max(1) as f64);
    ((2.0 / (rho * rho)) * (2.0 * nm * nm).ln()).ceil() as usize
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type PiKey = (u64, VertexId);

/// Bottom-k Jaccard store. Each vertex keeps `N[u]` ordered by a seeded
/// random permutation `π`; the signature `s(u)` is the first `k` members.
#[derive(Clone, Debug)]
pub struct BotbinStore {
    k: usize,
    seed: u64,
    closed: Vec<OrderedSet<PiKey>>,
    changed: [bool; 2],
}

impl BotbinStore {
    pub fn new(k: usize, seed: u64) -> Self {
        assert!(k >= 1, "signature size must be positive");
        Self {
            k,
            seed,
            closed: Vec::new(),
            changed: [false; 2],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn key(&self, w: VertexId) -> PiKey {
        (splitmix64(self.seed ^ u64::from(w)), w)
    }

    fn ensure(&mut self, u: VertexId) {
        while self.closed.len() <= u as usize {
            let x = self.closed.len() as VertexId;
            let mut set = OrderedSet::new();
            set.insert(self.key(x));
            self.closed.push(set);
        }
    }

    /// The signature `s(u)` in `π` order.
    pub fn signature(&self, u: VertexId) -> Vec<VertexId> {
        match self.closed.get(u as usize) {
            Some(set) => set.iter().take(self.k).map(|(_, w)| w).collect(),
            None => vec![u],
        }
    }

    /// Whether the last update changed `s(u)` / `s(v)`.
    pub fn last_changed(&self) -> [bool; 2] {
        self.changed
    }

    /// Applies `x`'s side of an update and reports whether `s(x)` changed.
    fn mutate(&mut self, x: VertexId, y: VertexId, kind: UpdateKind) -> bool {
        let key = self.key(y);
        let k = self.k;
        let set = &mut self.closed[x as usize];
        match kind {
            UpdateKind::Insert => {
                let changed = set.len() < k || set.kth(k - 1).is_some_and(|last| key < last);
                set.insert(key);
                changed
            }
            UpdateKind::Delete => {
                let changed = set.rank(&key) < k;
                set.remove(&key);
                changed
            }
        }
    }
}

impl EdgeSimStore for BotbinStore {
    fn name(&self) -> &'static str {
        "botbin"
    }

    fn on_update(&mut self, _graph: &DynamicGraph, u: VertexId, v: VertexId, kind: UpdateKind) {
        self.ensure(u.max(v));
        self.changed = [self.mutate(u, v, kind), self.mutate(v, u, kind)];
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
        for (x, other, changed) in [(u, v, self.changed[0]), (v, u, self.changed[1])] {
            if changed {
                out.extend(graph.neighbors(x).filter(|&w| w != other).map(|w| EdgeKey::new(x, w)));
            }
        }
        out.sort_unstable();
        out.dedup();
        out.len()
    }

    /// `|s(x) ∩ s(y) ∩ s({x,y})| / |s({x,y})|` where `s({x,y})` is the
    /// bottom-k of `s(x) ∪ s(y)`.
    fn cal_sim(&mut self, _graph: &DynamicGraph, x: VertexId, y: VertexId, _rng: &mut EngineRng) -> Estimate {
        self.ensure(x.max(y));
        let mut a = self.closed[x as usize].iter().take(self.k).peekable();
        let mut b = self.closed[y as usize].iter().take(self.k).peekable();
        let (mut taken, mut both) = (0usize, 0usize);
        while taken < self.k {
            match (a.peek(), b.peek()) {
                (Some(p), Some(q)) if p == q => {
                    both += 1;
                    a.next();
                    b.next();
                }
                (Some(p), Some(q)) if p < q => {
                    a.next();
                }
                (Some(_), Some(_)) => {
                    b.next();
                }
                (Some(_), None) => {
                    a.next();
                }
                (None, Some(_)) => {
                    b.next();
                }
                (None, None) => break,
            }
            taken += 1;
        }
        Estimate {
            value: if taken == 0 { 0.0 } else { both as f64 / taken as f64 },
            samples: 0,
            exact: false,
            capped: false,
        }
    }

    fn reset(&mut self, graph: &DynamicGraph) {
        self.closed.clear();
        if graph.n() > 0 {
            self.ensure(graph.n() as VertexId - 1);
        }
        for u in 0..graph.n() as VertexId {
            let keys: Vec<_> = graph.neighbors(u).map(|w| self.key(w)).collect();
            for key in keys {
                self.closed[u as usize].insert(key);
            }
        }
        self.changed = [false; 2];
    }

    fn audit(&self, graph: &DynamicGraph) -> Result<(), String> {
        for u in 0..graph.n() as VertexId {
            let mut brute: Vec<PiKey> = graph.neighbors(u).chain([u]).map(|w| self.key(w)).collect();
            brute.sort_unstable();
            brute.truncate(self.k);
            let expected: Vec<_> = brute.into_iter().map(|(_, w)| w).collect();
            let got = self.signature(u);
            if got != expected {
                return Err(format!("botbin: s({u}) = {got:?}, expected {expected:?}"));
            }
            if self.closed.get(u as usize).map_or(1, OrderedSet::len) != graph.degree(u) + 1 {
                return Err(format!("botbin: N[{u}] size mismatch"));
            }
        }
        Ok(())
    }

    fn heap_bytes(&self) -> usize {
        self.closed.iter().map(OrderedSet::heap_bytes).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{exact_sim, SimilarityMeasure};
    use rand::{Rng, SeedableRng};

    fn store_over(graph: &DynamicGraph, k: usize) -> BotbinStore {
        let mut s = BotbinStore::new(k, 7);
        s.reset(graph);
        s
    }

    fn apply(s: &mut BotbinStore, g: &mut DynamicGraph, u: VertexId, v: VertexId, kind: UpdateKind) {
        s.on_update(g, u, v, kind);
        match kind {
            UpdateKind::Insert => g.insert_edge(u, v).unwrap(),
            UpdateKind::Delete => g.delete_edge(u, v).unwrap(),
        }
    }

    #[test]
    fn k_formula() {
        // (2 / 0.01) * ln(2 * (100 * 1000)^2) = 200 * ln(2e10).
        let expected = (200.0 * (2e10f64).ln()).ceil() as usize;
        assert_eq!(botbin_k(100, 1000, 0.1), expected);
        assert_eq!(expected, 4744);
    }

    #[test]
    fn signature_changes() {
        let mut g = DynamicGraph::with_vertices(40);
        let mut s = store_over(&g, 3);
        // Below k every insertion changes the signature.
        for w in 1..3 {
            apply(&mut s, &mut g, 0, w, UpdateKind::Insert);
            assert!(s.last_changed()[0]);
        }
        for w in 3..40 {
            let last = s.closed[0].kth(2).unwrap();
            let incoming = s.key(w);
            apply(&mut s, &mut g, 0, w, UpdateKind::Insert);
            assert_eq!(s.last_changed()[0], incoming < last);
        }
        s.audit(&g).unwrap();
        // Deleting a member outside the signature leaves it unchanged.
        let sig = s.signature(0);
        let outside = (1..40).find(|w| !sig.contains(w)).unwrap();
        apply(&mut s, &mut g, 0, outside, UpdateKind::Delete);
        assert!(!s.last_changed()[0]);
        assert_eq!(s.signature(0), sig);
        let inside = *sig.iter().find(|&&w| w != 0).unwrap();
        apply(&mut s, &mut g, 0, inside, UpdateKind::Delete);
        assert!(s.last_changed()[0]);
        s.audit(&g).unwrap();
    }

    #[test]
    fn identical_signatures_estimate_one() {
        let edges: Vec<_> = (0..6u32).flat_map(|a| (a + 1..6).map(move |b| (a, b))).collect();
        let g = DynamicGraph::from_edges(6, edges);
        let mut s = store_over(&g, 4);
        let mut rng = EngineRng::seed_from_u64(0);
        assert_eq!(s.cal_sim(&g, 0, 1, &mut rng).value, 1.0);
    }

    #[test]
    fn small_union_is_exact() {
        let g = DynamicGraph::from_edges(6, [(0, 1), (0, 2), (1, 3), (1, 2), (4, 5)]);
        let mut s = store_over(&g, 64);
        let mut rng = EngineRng::seed_from_u64(0);
        for (u, v) in [(0, 1), (0, 2), (1, 3), (4, 5)] {
            let est = s.cal_sim(&g, u, v, &mut rng).value;
            let exact = exact_sim(&g, u, v, SimilarityMeasure::Jaccard);
            assert!((est - exact).abs() < 1e-12, "({u},{v}): {est} vs {exact}");
        }
    }

    #[test]
    fn estimate_concentrates() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 400u32;
        let mut g = DynamicGraph::with_vertices(n as usize);
        while g.m() < 12_000 {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b && !g.has_edge(a, b) {
                g.insert_edge(a, b).unwrap();
            }
        }
        let rho = 0.1;
        let mut s = store_over(&g, 64);
        let mut erng = EngineRng::seed_from_u64(0);
        let edges: Vec<_> = g.edges().collect();
        let good = edges
            .iter()
            .filter(|e| {
                let (u, v) = e.endpoints();
                let est = s.cal_sim(&g, u, v, &mut erng).value;
                (est - exact_sim(&g, u, v, SimilarityMeasure::Jaccard)).abs() <= rho
            })
            .count();
        assert!(good as f64 >= 0.99 * edges.len() as f64, "{good}/{}", edges.len());
    }
}
