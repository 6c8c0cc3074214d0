//! Affordability tracking for VD-STAR's edge-similarity structure.
//!
//! Every vertex `u` keeps a counter `c_u` of affecting updates and a list
//! of power-of-two buckets. A neighbor `w` sits in bucket `B_i` of `u`
//! when the quota of `(u, w)` is `2^i`. Bucket `B_i` is checked whenever
//! `c_u` crosses a multiple of `2^i`; an entry seen by a second check is
//! reported for recomputation. Entries whose quota would be below one
//! update live in the immediate bucket and are reported on the first
//! affecting update.

use std::str::FromStr;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::dyngraph::{DynamicGraph, EdgeKey, VertexId};
use crate::error::BucketError;
use crate::framework::{EdgeSimStore, EngineRng, UpdateKind};
use crate::similarity::{Estimate, SimilarityEstimator};

/// How to treat edges whose affordability quota is below one update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum QuotaPolicy {
    /// Recompute on the first affecting update.
    #[default]
    Immediate,
    /// Clamp to `q = 1` (bucket 0).
    ClampToUnit,
}

impl FromStr for QuotaPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "immediate" => Ok(Self::Immediate),
            "clamp" => Ok(Self::ClampToUnit),
            other => Err(format!("unknown quota policy `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuotaLevel {
    Immediate,
    Bucket(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quota {
    /// Update affordability `τ = ρ²/4 · max(n_u, n_v)`.
    pub tau: f64,
    pub level: QuotaLevel,
}

impl Quota {
    /// The quota `q = 2^i`, if bucketed.
    pub fn q(&self) -> Option<u64> {
        match self.level {
            QuotaLevel::Bucket(i) => Some(1u64 << i),
            QuotaLevel::Immediate => None,
        }
    }

    pub fn floor2_tau(&self) -> f64 {
        floor_pow2(self.tau)
    }
}

/// Largest power of two not exceeding `x`; 0 for non-positive input.
pub fn floor_pow2(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    2f64.powi(x.log2().floor() as i32)
}

pub fn compute_quota(n_u: usize, n_v: usize, rho: f64, policy: QuotaPolicy) -> Quota {
    let tau = rho * rho / 4.0 * n_u.max(n_v) as f64;
    // q = floor2(τ) / 4, so log2 q = floor(log2 τ) - 2.
    let exp = if tau > 0.0 { tau.log2().floor() as i64 - 2 } else { -1 };
    let level = if exp >= 0 {
        QuotaLevel::Bucket(exp as u32)
    } else {
        match policy {
            QuotaPolicy::Immediate => QuotaLevel::Immediate,
            QuotaPolicy::ClampToUnit => QuotaLevel::Bucket(0),
        }
    };
    Quota { tau, level }
}

const IMMEDIATE: u8 = u8::MAX;

#[derive(Clone, Copy, Debug)]
struct Loc {
    bucket: u8,
    pos: u32,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    w: VertexId,
    visited: bool,
}

#[derive(Clone, Debug)]
struct Bucket {
    index: u32,
    /// Value of `c_u` when the bucket was last visited.
    snapshot: u64,
    entries: Vec<Entry>,
}

/// Bucket list `B(u)` of one vertex.
#[derive(Clone, Debug, Default)]
pub struct BucketList {
    mask: u64,
    buckets: Vec<Bucket>,
    immediate: Vec<VertexId>,
    loc: FxHashMap<VertexId, Loc>,
}

impl BucketList {
    fn slot(&self, i: u32) -> usize {
        (self.mask & ((1u64 << i) - 1)).count_ones() as usize
    }

    pub fn len(&self) -> usize {
        self.loc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loc.is_empty()
    }

    pub fn contains(&self, w: VertexId) -> bool {
        self.loc.contains_key(&w)
    }

    /// Materialized bucket indices in increasing order.
    pub fn materialized(&self) -> Vec<u32> {
        self.buckets.iter().map(|b| b.index).collect()
    }

    /// Smallest materialized index `>= i`.
    pub fn next_bucket(&self, i: u32) -> Option<u32> {
        if i >= 64 {
            return None;
        }
        let rest = self.mask & !((1u64 << i) - 1);
        (rest != 0).then(|| rest.trailing_zeros())
    }

    pub fn immediate_len(&self) -> usize {
        self.immediate.len()
    }

    pub fn level_of(&self, w: VertexId) -> Option<QuotaLevel> {
        self.loc.get(&w).map(|l| {
            if l.bucket == IMMEDIATE {
                QuotaLevel::Immediate
            } else {
                QuotaLevel::Bucket(l.bucket as u32)
            }
        })
    }

    /// Inserts `w` with the given level; `counter` is the current `c_u`.
    fn insert(&mut self, w: VertexId, level: QuotaLevel, counter: u64) -> bool {
        if self.loc.contains_key(&w) {
            return false;
        }
        match level {
            QuotaLevel::Immediate => {
                self.loc.insert(
                    w,
                    Loc {
                        bucket: IMMEDIATE,
                        pos: self.immediate.len() as u32,
                    },
                );
                self.immediate.push(w);
            }
            QuotaLevel::Bucket(i) => {
                debug_assert!(i < 64);
                let slot = self.slot(i);
                if self.mask & (1u64 << i) == 0 {
                    self.mask |= 1u64 << i;
                    self.buckets.insert(
                        slot,
                        Bucket {
                            index: i,
                            snapshot: counter,
                            entries: Vec::new(),
                        },
                    );
                }
                let bucket = &mut self.buckets[slot];
                self.loc.insert(
                    w,
                    Loc {
                        bucket: i as u8,
                        pos: bucket.entries.len() as u32,
                    },
                );
                bucket.entries.push(Entry { w, visited: false });
            }
        }
        true
    }

    fn remove(&mut self, w: VertexId) -> Option<QuotaLevel> {
        let loc = self.loc.remove(&w)?;
        let pos = loc.pos as usize;
        if loc.bucket == IMMEDIATE {
            self.immediate.swap_remove(pos);
            if let Some(&moved) = self.immediate.get(pos) {
                self.loc.get_mut(&moved).expect("moved entry").pos = pos as u32;
            }
            return Some(QuotaLevel::Immediate);
        }
        let i = loc.bucket as u32;
        let slot = self.slot(i);
        let bucket = &mut self.buckets[slot];
        bucket.entries.swap_remove(pos);
        if let Some(moved) = bucket.entries.get(pos) {
            self.loc.get_mut(&moved.w).expect("moved entry").pos = pos as u32;
        }
        if bucket.entries.is_empty() {
            self.buckets.remove(slot);
            self.mask &= !(1u64 << i);
        }
        Some(QuotaLevel::Bucket(i))
    }

    /// Checks buckets whose power-of-two boundary `counter` has crossed.
    /// Second-visit entries are pushed to `out`; `skip` is never touched.
    /// Returns the number of entries examined.
    fn scan(&mut self, counter: u64, skip: VertexId, out: &mut Vec<VertexId>) -> usize {
        let mut touched = 0;
        for &w in &self.immediate {
            if w != skip {
                out.push(w);
                touched += 1;
            }
        }
        for bucket in &mut self.buckets {
            let i = bucket.index;
            if counter >> i <= bucket.snapshot >> i {
                break;
            }
            for entry in &mut bucket.entries {
                if entry.w == skip {
                    continue;
                }
                touched += 1;
                if entry.visited {
                    out.push(entry.w);
                } else {
                    entry.visited = true;
                }
            }
            bucket.snapshot = counter;
        }
        touched
    }

    fn audit(&self, u: VertexId) -> Result<(), String> {
        let mut count = self.immediate.len();
        if self.buckets.len() != self.mask.count_ones() as usize {
            return Err(format!("B({u}): mask/bucket count mismatch"));
        }
        for w in self.buckets.windows(2) {
            if w[0].index >= w[1].index {
                return Err(format!("B({u}): buckets not increasing"));
            }
        }
        for b in &self.buckets {
            if b.entries.is_empty() {
                return Err(format!("B({u}): empty bucket {} materialized", b.index));
            }
            if self.mask & (1u64 << b.index) == 0 {
                return Err(format!("B({u}): bucket {} missing from mask", b.index));
            }
            for (pos, e) in b.entries.iter().enumerate() {
                match self.loc.get(&e.w) {
                    Some(l) if l.bucket as u32 == b.index && l.pos as usize == pos => {}
                    _ => return Err(format!("B({u}): bad location for {}", e.w)),
                }
            }
            count += b.entries.len();
        }
        for (pos, w) in self.immediate.iter().enumerate() {
            match self.loc.get(w) {
                Some(l) if l.bucket == IMMEDIATE && l.pos as usize == pos => {}
                _ => return Err(format!("B({u}): bad immediate location for {w}")),
            }
        }
        if count != self.loc.len() {
            return Err(format!("B({u}): {count} entries vs {} locations", self.loc.len()));
        }
        Ok(())
    }

    fn heap_bytes(&self) -> usize {
        self.buckets
            .iter()
            .map(|b| b.entries.capacity() * std::mem::size_of::<Entry>())
            .sum::<usize>()
            + self.buckets.capacity() * std::mem::size_of::<Bucket>()
            + self.immediate.capacity() * std::mem::size_of::<VertexId>()
            + self.loc.capacity() * (std::mem::size_of::<VertexId>() + std::mem::size_of::<Loc>() + 1)
    }
}

/// Counters and bucket lists for all vertices.
#[derive(Clone, Debug, Default)]
pub struct AffordState {
    counters: Vec<u64>,
    lists: Vec<BucketList>,
    quotas: FxHashMap<EdgeKey, Quota>,
}

impl AffordState {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure(&mut self, u: VertexId) {
        let need = u as usize + 1;
        if self.lists.len() < need {
            self.lists.resize_with(need, BucketList::default);
            self.counters.resize(need, 0);
        }
    }

    pub fn clear(&mut self) {
        self.counters.iter_mut().for_each(|c| *c = 0);
        self.lists.iter_mut().for_each(|l| *l = BucketList::default());
        self.quotas.clear();
    }

    pub fn counter(&self, u: VertexId) -> u64 {
        self.counters.get(u as usize).copied().unwrap_or(0)
    }

    pub fn bucket_list(&self, u: VertexId) -> Option<&BucketList> {
        self.lists.get(u as usize)
    }

    pub fn quota(&self, e: EdgeKey) -> Option<Quota> {
        self.quotas.get(&e).copied()
    }

    /// Records one affecting update on both endpoints.
    pub fn on_update(&mut self, u: VertexId, v: VertexId) {
        self.ensure(u.max(v));
        self.counters[u as usize] += 1;
        self.counters[v as usize] += 1;
    }

    pub fn insert_entry(&mut self, u: VertexId, v: VertexId, quota: Quota) -> Result<(), BucketError> {
        self.ensure(u.max(v));
        if self.lists[u as usize].contains(v) {
            return Err(BucketError::DuplicateEntry(u, v));
        }
        if self.lists[v as usize].contains(u) {
            return Err(BucketError::DuplicateEntry(v, u));
        }
        let (cu, cv) = (self.counters[u as usize], self.counters[v as usize]);
        self.lists[u as usize].insert(v, quota.level, cu);
        self.lists[v as usize].insert(u, quota.level, cv);
        self.quotas.insert(EdgeKey::new(u, v), quota);
        Ok(())
    }

    pub fn delete_entry(&mut self, u: VertexId, v: VertexId) -> Result<(), BucketError> {
        let present_u = self.lists.get(u as usize).is_some_and(|l| l.contains(v));
        let present_v = self.lists.get(v as usize).is_some_and(|l| l.contains(u));
        if !present_u {
            return Err(BucketError::MissingEntry(u, v));
        }
        if !present_v {
            return Err(BucketError::MissingEntry(v, u));
        }
        self.lists[u as usize].remove(v);
        self.lists[v as usize].remove(u);
        self.quotas.remove(&EdgeKey::new(u, v));
        Ok(())
    }

    /// Potentially invalid edges after the update `(u, v)`, deduplicated and
    /// sorted. The edge `(u, v)` itself is never reported. Returns the number
    /// of bucket entries examined.
    pub fn find_invalid(&mut self, u: VertexId, v: VertexId, out: &mut Vec<EdgeKey>) -> usize {
        self.ensure(u.max(v));
        let mut hits = Vec::new();
        let mut touched = 0;
        let mut seen = FxHashSet::default();
        for (x, other) in [(u, v), (v, u)] {
            hits.clear();
            let counter = self.counters[x as usize];
            touched += self.lists[x as usize].scan(counter, other, &mut hits);
            for &w in &hits {
                let e = EdgeKey::new(x, w);
                if seen.insert(e) {
                    out.push(e);
                }
            }
        }
        out.sort_unstable();
        touched
    }

    pub fn audit(&self, graph: &DynamicGraph) -> Result<(), String> {
        for u in 0..graph.n() as VertexId {
            let Some(list) = self.lists.get(u as usize) else {
                if graph.degree(u) > 0 {
                    return Err(format!("B({u}) missing"));
                }
                continue;
            };
            list.audit(u)?;
            if list.len() != graph.degree(u) {
                return Err(format!("B({u}) holds {} entries, d_u = {}", list.len(), graph.degree(u)));
            }
            for w in graph.neighbors(u) {
                let Some(level) = list.level_of(w) else {
                    return Err(format!("B({u}) lacks neighbor {w}"));
                };
                let quota = self.quotas.get(&EdgeKey::new(u, w)).ok_or("quota missing")?;
                if quota.level != level {
                    return Err(format!("edge ({u}, {w}) at level {level:?}, quota says {:?}", quota.level));
                }
            }
            if let Some(i) = list.buckets.iter().find(|b| b.snapshot > self.counter(u)) {
                return Err(format!("B({u}): snapshot of bucket {} ahead of counter", i.index));
            }
        }
        if self.quotas.len() != graph.m() {
            return Err(format!("{} quotas for {} edges", self.quotas.len(), graph.m()));
        }
        Ok(())
    }

    pub fn heap_bytes(&self) -> usize {
        self.lists.iter().map(BucketList::heap_bytes).sum::<usize>()
            + self.counters.capacity() * 8
            + self.quotas.capacity() * (std::mem::size_of::<EdgeKey>() + std::mem::size_of::<Quota>() + 1)
    }
}

/// VD-STAR's edge-similarity structure: affordability buckets plus the
/// sampling estimator.
#[derive(Clone, Debug)]
pub struct VdStarStore {
    state: AffordState,
    estimator: SimilarityEstimator,
    policy: QuotaPolicy,
}

impl VdStarStore {
    pub fn new(estimator: SimilarityEstimator, policy: QuotaPolicy) -> Self {
        Self {
            state: AffordState::new(),
            estimator,
            policy,
        }
    }

    pub fn state(&self) -> &AffordState {
        &self.state
    }
}

impl EdgeSimStore for VdStarStore {
    fn name(&self) -> &'static str {
        "vdstar"
    }

    fn on_update(&mut self, _graph: &DynamicGraph, u: VertexId, v: VertexId, _kind: UpdateKind) {
        self.state.on_update(u, v);
    }

    fn insert(&mut self, graph: &DynamicGraph, x: VertexId, y: VertexId) {
        let quota = compute_quota(
            graph.inclusive_size(x),
            graph.inclusive_size(y),
            self.estimator.rho,
            self.policy,
        );
        self.state
            .insert_entry(x, y, quota)
            .expect("edge inserted twice into the bucket lists");
    }

    fn delete(&mut self, _graph: &DynamicGraph, x: VertexId, y: VertexId) {
        self.state
            .delete_entry(x, y)
            .expect("deleting an edge absent from the bucket lists");
    }

    fn find(
        &mut self,
        _graph: &DynamicGraph,
        u: VertexId,
        v: VertexId,
        _kind: UpdateKind,
        out: &mut Vec<EdgeKey>,
    ) -> usize {
        self.state.find_invalid(u, v, out)
    }

    fn cal_sim(&mut self, graph: &DynamicGraph, x: VertexId, y: VertexId, rng: &mut EngineRng) -> Estimate {
        self.estimator.cal_sim(graph, x, y, rng)
    }

    fn reset(&mut self, _graph: &DynamicGraph) {
        self.state.clear();
    }

    fn audit(&self, graph: &DynamicGraph) -> Result<(), String> {
        self.state.audit(graph)
    }

    fn quota(&self, e: EdgeKey) -> Option<Quota> {
        self.state.quota(e)
    }

    fn heap_bytes(&self) -> usize {
        self.state.heap_bytes()
    }
}
