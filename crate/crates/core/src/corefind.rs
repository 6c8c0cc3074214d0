//! Core-vertex retrieval strategies.
//!
//! All strategies read per-vertex similarities from
//! [`SortedNeighborLists`] and answer "which vertices have at least `μ`
//! neighbors with stored similarity `≥ ε`".

use std::cmp::Reverse;

use crate::dyngraph::{SimKey, SortedNeighborLists, VertexId};
use crate::error::CoreError;
use crate::ostree::OrderedSet;

/// Slack for float-rounding when mapping `ε` and `i·Δ` onto levels.
const LEVEL_EPS: f64 = 1e-9;

/// Per-level similar-neighbor counts `μ_{u,i}` in `⌈1/Δ⌉` sorted lists.
#[derive(Clone, Debug)]
pub struct DeltaTable {
    delta: f64,
    levels: usize,
    /// `keys[u][i] = μ_{u,i}`; empty for vertices not in the table.
    keys: Vec<Vec<u32>>,
    lists: Vec<OrderedSet<(Reverse<u32>, VertexId)>>,
}

impl DeltaTable {
    pub fn new(delta: f64) -> Self {
        assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
        let levels = ((1.0 / delta) - LEVEL_EPS).ceil() as usize;
        Self {
            delta,
            levels,
            keys: Vec::new(),
            lists: (0..levels).map(|_| OrderedSet::new()).collect(),
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    fn threshold(&self, i: usize) -> f64 {
        i as f64 * self.delta - LEVEL_EPS
    }

    /// Level used for a query at `eps`.
    pub fn level_of(&self, eps: f64) -> usize {
        (((eps / self.delta) + LEVEL_EPS).floor() as usize).min(self.levels - 1)
    }

    /// Stored `μ_{u,i}`, or 0 for vertices not in the table.
    pub fn key(&self, u: VertexId, i: usize) -> u32 {
        self.keys
            .get(u as usize)
            .and_then(|k| k.get(i))
            .copied()
            .unwrap_or(0)
    }

    fn compute(&self, u: VertexId, lists: &SortedNeighborLists) -> Vec<u32> {
        let d = lists.degree(u);
        if d == 0 {
            return Vec::new();
        }
        let mut counts = vec![0u32; self.levels];
        for (_, sim) in lists.iter(u) {
            // Highest level whose threshold `sim` reaches.
            let top = (((sim + LEVEL_EPS) / self.delta).floor() as usize).min(self.levels - 1);
            let top = (0..=top).rev().find(|&i| sim >= self.threshold(i)).unwrap_or(0);
            counts[top] += 1;
        }
        for i in (0..self.levels - 1).rev() {
            counts[i] += counts[i + 1];
        }
        counts
    }

    pub fn update(&mut self, u: VertexId, lists: &SortedNeighborLists) {
        let need = u as usize + 1;
        if self.keys.len() < need {
            self.keys.resize_with(need, Vec::new);
        }
        let fresh = self.compute(u, lists);
        let old = std::mem::take(&mut self.keys[u as usize]);
        for i in 0..self.levels {
            let before = old.get(i).copied();
            let after = fresh.get(i).copied();
            if before == after {
                continue;
            }
            if let Some(k) = before {
                self.lists[i].remove(&(Reverse(k), u));
            }
            if let Some(k) = after {
                self.lists[i].insert((Reverse(k), u));
            }
        }
        self.keys[u as usize] = fresh;
    }

    pub fn find_core(&self, eps: f64, mu: usize) -> Vec<VertexId> {
        let level = self.level_of(eps);
        let mut out: Vec<_> = self.lists[level]
            .iter()
            .take_while(|(Reverse(k), _)| *k as usize >= mu)
            .map(|(_, u)| u)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn clear(&mut self) {
        self.keys.clear();
        self.lists.iter_mut().for_each(OrderedSet::clear);
    }

    pub fn audit(&self, n: usize, lists: &SortedNeighborLists) -> Result<(), String> {
        let mut members = vec![0usize; self.levels];
        for u in 0..n as VertexId {
            let expected = self.compute(u, lists);
            let stored = self.keys.get(u as usize).map_or(&[][..], |k| &k[..]);
            if stored != &expected[..] {
                return Err(format!("delta table: vertex {u} keys {stored:?}, expected {expected:?}"));
            }
            for (i, &k) in expected.iter().enumerate() {
                if !self.lists[i].contains(&(Reverse(k), u)) {
                    return Err(format!("delta table: vertex {u} missing from level {i}"));
                }
                members[i] += 1;
            }
        }
        for (i, list) in self.lists.iter().enumerate() {
            if list.len() != members[i] {
                return Err(format!("delta table: level {i} holds {} vertices, expected {}", list.len(), members[i]));
            }
        }
        Ok(())
    }

    pub fn heap_bytes(&self) -> usize {
        self.keys.iter().map(|k| k.capacity() * 4).sum::<usize>()
            + self.lists.iter().map(OrderedSet::heap_bytes).sum::<usize>()
    }
}

/// Lists `T[i]` keyed by the `i`-th largest stored similarity `ε_{u,i}`.
#[derive(Clone, Debug)]
pub struct MuTable {
    cap: Option<usize>,
    keys: Vec<Vec<f64>>,
    lists: Vec<OrderedSet<SimKey>>,
}

impl MuTable {
    /// Table over every `μ` up to the maximum degree.
    pub fn full() -> Self {
        Self {
            cap: None,
            keys: Vec::new(),
            lists: Vec::new(),
        }
    }

    /// Table limited to `μ ≤ cap`.
    pub fn small(cap: usize) -> Self {
        assert!(cap >= 1);
        Self {
            cap: Some(cap),
            keys: Vec::new(),
            lists: Vec::new(),
        }
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    /// `ε_{u,i}` as stored, `i` 1-based.
    pub fn key(&self, u: VertexId, i: usize) -> Option<f64> {
        self.keys.get(u as usize)?.get(i.checked_sub(1)?).copied()
    }

    pub fn update(&mut self, u: VertexId, lists: &SortedNeighborLists) {
        let need = u as usize + 1;
        if self.keys.len() < need {
            self.keys.resize_with(need, Vec::new);
        }
        let depth = self.cap.map_or(usize::MAX, |c| c);
        let fresh: Vec<f64> = lists.iter(u).take(depth).map(|(_, s)| s).collect();
        if self.lists.len() < fresh.len() {
            self.lists.resize_with(fresh.len(), OrderedSet::new);
        }
        let old = std::mem::take(&mut self.keys[u as usize]);
        for i in 0..old.len().max(fresh.len()) {
            let before = old.get(i).copied();
            let after = fresh.get(i).copied();
            if before.map(f64::to_bits) == after.map(f64::to_bits) {
                continue;
            }
            if let Some(s) = before {
                self.lists[i].remove(&SimKey::new(s, u));
            }
            if let Some(s) = after {
                self.lists[i].insert(SimKey::new(s, u));
            }
        }
        self.keys[u as usize] = fresh;
    }

    pub fn find_core(&self, eps: f64, mu: usize) -> Result<Vec<VertexId>, CoreError> {
        if let Some(cap) = self.cap {
            if mu > cap {
                return Err(CoreError::MuOutOfRange { mu, cap });
            }
        }
        let Some(list) = mu.checked_sub(1).and_then(|i| self.lists.get(i)) else {
            return Ok(Vec::new());
        };
        let mut out: Vec<_> = list.iter().take_while(|k| k.sim >= eps).map(|k| k.id).collect();
        out.sort_unstable();
        Ok(out)
    }

    pub fn clear(&mut self) {
        self.keys.clear();
        self.lists.clear();
    }

    pub fn audit(&self, n: usize, lists: &SortedNeighborLists) -> Result<(), String> {
        let depth = self.cap.unwrap_or(usize::MAX);
        let mut expected: Vec<Vec<SimKey>> = vec![Vec::new(); self.lists.len()];
        for u in 0..n as VertexId {
            let stored = self.keys.get(u as usize).map_or(&[][..], |k| &k[..]);
            let expect = lists.degree(u).min(depth);
            if stored.len() != expect {
                return Err(format!("mu table: vertex {u} in {} lists, expected {expect}", stored.len()));
            }
            for (i, (&s, (_, truth))) in stored.iter().zip(lists.iter(u)).enumerate() {
                if truth != s {
                    return Err(format!("mu table: T[{}] key of {u} is stale", i + 1));
                }
                expected[i].push(SimKey::new(s, u));
            }
        }
        for (i, (list, want)) in self.lists.iter().zip(&mut expected).enumerate() {
            want.sort_unstable();
            if list.len() != want.len() || !list.iter().zip(want.iter()).all(|(a, b)| a == *b) {
                return Err(format!("mu table: T[{}] holds {} vertices, expected {}", i + 1, list.len(), want.len()));
            }
        }
        Ok(())
    }

    pub fn heap_bytes(&self) -> usize {
        self.keys.iter().map(|k| k.capacity() * 8).sum::<usize>()
            + self.lists.iter().map(OrderedSet::heap_bytes).sum::<usize>()
    }
}

/// Direct scan: `u` is a core iff its `μ`-th largest similarity is `≥ ε`.
pub fn scan_find_core(n: usize, lists: &SortedNeighborLists, eps: f64, mu: usize) -> Vec<VertexId> {
    (0..n as VertexId)
        .filter(|&u| lists.kth_largest_sim(u, mu).is_some_and(|s| s >= eps))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoreStrategyKind {
    DeltaTable { delta: f64 },
    MuTableFull,
    MuTableSmall { cap: usize },
    NoTable,
}

impl CoreStrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::DeltaTable { .. } => "delta-table",
            Self::MuTableFull => "mu-table",
            Self::MuTableSmall { .. } => "small-mu-table",
            Self::NoTable => "no-table",
        }
    }
}

/// The configured CoreFindStr.
#[derive(Clone, Debug)]
pub enum CoreIndex {
    Delta(DeltaTable),
    Mu(MuTable),
    NoTable,
}

impl CoreIndex {
    pub fn new(kind: CoreStrategyKind) -> Self {
        match kind {
            CoreStrategyKind::DeltaTable { delta } => Self::Delta(DeltaTable::new(delta)),
            CoreStrategyKind::MuTableFull => Self::Mu(MuTable::full()),
            CoreStrategyKind::MuTableSmall { cap } => Self::Mu(MuTable::small(cap)),
            CoreStrategyKind::NoTable => Self::NoTable,
        }
    }

    pub fn update(&mut self, u: VertexId, lists: &SortedNeighborLists) {
        match self {
            Self::Delta(t) => t.update(u, lists),
            Self::Mu(t) => t.update(u, lists),
            Self::NoTable => {}
        }
    }

    /// Core vertices in ascending id order. A small μ-table falls back to
    /// the direct scan when `μ` exceeds its cap.
    pub fn find_core(&self, n: usize, lists: &SortedNeighborLists, eps: f64, mu: usize) -> Vec<VertexId> {
        match self {
            Self::Delta(t) => t.find_core(eps, mu),
            Self::Mu(t) => match t.find_core(eps, mu) {
                Ok(c) => c,
                Err(CoreError::MuOutOfRange { .. }) => scan_find_core(n, lists, eps, mu),
            },
            Self::NoTable => scan_find_core(n, lists, eps, mu),
        }
    }

    pub fn clear(&mut self) {
        match self {
            Self::Delta(t) => t.clear(),
            Self::Mu(t) => t.clear(),
            Self::NoTable => {}
        }
    }

    pub fn audit(&self, n: usize, lists: &SortedNeighborLists) -> Result<(), String> {
        match self {
            Self::Delta(t) => t.audit(n, lists),
            Self::Mu(t) => t.audit(n, lists),
            Self::NoTable => Ok(()),
        }
    }

    pub fn heap_bytes(&self) -> usize {
        match self {
            Self::Delta(t) => t.heap_bytes(),
            Self::Mu(t) => t.heap_bytes(),
            Self::NoTable => 0,
        }
    }
}
