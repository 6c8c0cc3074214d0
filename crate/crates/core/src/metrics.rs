//! Clustering quality (ARI, MLR, sandwich checks) and run instrumentation.

use std::io::Write;

use rustc_hash::FxHashMap;

use crate::dyngraph::{EdgeKey, SortedNeighborLists, VertexId};
use crate::framework::ClusteringResult;

/// One block label per vertex: the index of the first cluster containing
/// it, or a fresh singleton label for unclustered vertices.
pub fn canonical_labels(result: &ClusteringResult, n: usize) -> Vec<u64> {
    let singletons = result.clusters.len() as u64;
    let mut labels: Vec<u64> = (0..n as u64).map(|v| singletons + v).collect();
    for (i, c) in result.clusters.iter().enumerate().rev() {
        for &v in c {
            if (v as usize) < n {
                labels[v as usize] = i as u64;
            }
        }
    }
    labels
}

fn pairs(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index of two labelings of the same elements.
pub fn adjusted_rand_index(a: &[u64], b: &[u64]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings cover different universes");
    let n = a.len() as u64;
    if n < 2 {
        return 1.0;
    }
    let mut cells: FxHashMap<(u64, u64), u64> = FxHashMap::default();
    let mut rows: FxHashMap<u64, u64> = FxHashMap::default();
    let mut cols: FxHashMap<u64, u64> = FxHashMap::default();
    for (&x, &y) in a.iter().zip(b) {
        *cells.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let same_both: f64 = cells.values().map(|&c| pairs(c)).sum();
    let same_a: f64 = rows.values().map(|&c| pairs(c)).sum();
    let same_b: f64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    let tp = same_both;
    let fn_ = same_a - tp;
    let fp = same_b - tp;
    let tn = total - tp - fn_ - fp;
    if fn_ == 0.0 && fp == 0.0 {
        return 1.0;
    }
    2.0 * (tp * tn - fn_ * fp) / ((tp + fn_) * (fn_ + tn) + (tp + fp) * (fp + tn))
}

/// `(edge, σ̃ ≥ ε)` for every stored edge, sorted by edge.
pub fn approx_labels(lists: &SortedNeighborLists, eps: f64) -> Vec<(EdgeKey, bool)> {
    lists.edge_sims().into_iter().map(|(e, s)| (e, s >= eps)).collect()
}

/// Fraction of edges whose similar/dissimilar label disagrees.
pub fn mislabel_rate(approx: &[(EdgeKey, bool)], exact: &[(EdgeKey, bool)]) -> f64 {
    assert_eq!(approx.len(), exact.len(), "label maps cover different edge sets");
    if exact.is_empty() {
        return 0.0;
    }
    let wrong = approx
        .iter()
        .zip(exact)
        .filter(|((ea, la), (eb, lb))| {
            assert_eq!(ea, eb, "label maps cover different edge sets");
            la != lb
        })
        .count();
    wrong as f64 / exact.len() as f64
}

fn is_subset(small: &[VertexId], large: &[VertexId]) -> bool {
    small.iter().all(|v| large.binary_search(v).is_ok())
}

fn contained_count(inner: &[Vec<VertexId>], outer: &[Vec<VertexId>]) -> usize {
    let mut by_vertex: FxHashMap<VertexId, Vec<usize>> = FxHashMap::default();
    for (i, c) in outer.iter().enumerate() {
        for &v in c {
            by_vertex.entry(v).or_default().push(i);
        }
    }
    inner
        .iter()
        .filter(|c| {
            let Some(&first) = c.first() else { return false };
            !by_vertex
                .get(&first)
                .is_some_and(|cands| cands.iter().any(|&i| is_subset(c, &outer[i])))
        })
        .count()
}

/// Sandwich violations of `result` between the exact clusterings at
/// `ε + ρ*` (`tight`) and `ε − ρ*` (`loose`): tight clusters not inside a
/// returned cluster plus returned clusters not inside a loose cluster.
pub fn sandwich_violations(result: &ClusteringResult, tight: &ClusteringResult, loose: &ClusteringResult) -> usize {
    contained_count(&tight.clusters, &result.clusters) + contained_count(&result.clusters, &loose.clusters)
}

/// One query of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryRecord {
    pub update_index: u64,
    pub eps: f64,
    pub mu: usize,
    pub ari: Option<f64>,
    pub mlr: Option<f64>,
    pub n_cr: usize,
    pub m_cr: usize,
    pub query_micros: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QualityReport {
    pub records: Vec<QueryRecord>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl QualityReport {
    pub fn mean_ari(&self) -> Option<f64> {
        mean(self.records.iter().filter_map(|r| r.ari))
    }

    pub fn mean_mlr(&self) -> Option<f64> {
        mean(self.records.iter().filter_map(|r| r.mlr))
    }

    pub fn evaluated(&self) -> usize {
        self.records.iter().filter(|r| r.ari.is_some()).count()
    }

    /// Per-query rows followed by a summary row of means.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "update_index,eps,mu,ari,mlr,n_cr,m_cr,query_micros")?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6}"));
        for r in &self.records {
            writeln!(
                out,
                "{},{:.6},{},{},{},{},{},{}",
                r.update_index,
                r.eps,
                r.mu,
                opt(r.ari),
                opt(r.mlr),
                r.n_cr,
                r.m_cr,
                r.query_micros
            )?;
        }
        let f = |g: fn(&QueryRecord) -> f64| mean(self.records.iter().map(g));
        writeln!(
            out,
            "summary,{},{},{},{},{},{},{}",
            opt(f(|r| r.eps)),
            opt(f(|r| r.mu as f64)),
            opt(self.mean_ari()),
            opt(self.mean_mlr()),
            opt(f(|r| r.n_cr as f64)),
            opt(f(|r| r.m_cr as f64)),
            opt(f(|r| r.query_micros as f64)),
        )
    }
}

/// Aggregated update-side measurements of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerfReport {
    pub algorithm: String,
    pub measure: String,
    pub n: usize,
    pub m_initial: usize,
    pub m_final: usize,
    pub updates: u64,
    pub queries: u64,
    pub update_micros_mean: f64,
    pub update_micros_p50: u64,
    pub update_micros_p99: u64,
    pub update_micros_max: u64,
    pub cal_sim_calls: u64,
    pub recomputations: u64,
    pub samples: u64,
    pub capped_calls: u64,
    pub touched: u64,
    pub invalid_mean: f64,
    pub invalid_max: usize,
    pub rebuilds: u64,
    pub peak_heap_bytes: usize,
    pub sandwich_violations: usize,
    pub audit_failures: usize,
    pub recompute_violations: usize,
}

impl PerfReport {
    pub const HEADER: &'static str = "algorithm,measure,n,m_initial,m_final,updates,queries,update_micros_mean,\
update_micros_p50,update_micros_p99,update_micros_max,cal_sim_calls,recomputations,samples,capped_calls,\
touched,invalid_mean,invalid_max,rebuilds,peak_heap_bytes,sandwich_violations,audit_failures,recompute_violations";

    /// Fills the latency fields from per-update microsecond timings.
    pub fn set_latencies(&mut self, micros: &[u64]) {
        if micros.is_empty() {
            return;
        }
        let mut sorted = micros.to_vec();
        sorted.sort_unstable();
        let pct = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
        self.update_micros_mean = sorted.iter().sum::<u64>() as f64 / sorted.len() as f64;
        self.update_micros_p50 = pct(0.5);
        self.update_micros_p99 = pct(0.99);
        self.update_micros_max = *sorted.last().unwrap();
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::HEADER)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3},{},{},{},{},{},{},{},{},{:.6},{},{},{},{},{},{}",
            self.algorithm,
            self.measure,
            self.n,
            self.m_initial,
            self.m_final,
            self.updates,
            self.queries,
            self.update_micros_mean,
            self.update_micros_p50,
            self.update_micros_p99,
            self.update_micros_max,
            self.cal_sim_calls,
            self.recomputations,
            self.samples,
            self.capped_calls,
            self.touched,
            self.invalid_mean,
            self.invalid_max,
            self.rebuilds,
            self.peak_heap_bytes,
            self.sandwich_violations,
            self.audit_failures,
            self.recompute_violations,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ari_identical() {
        let a = [0, 0, 1, 1, 2];
        assert_eq!(adjusted_rand_index(&a, &a), 1.0);
        let relabeled = [7, 7, 3, 3, 9];
        assert_eq!(adjusted_rand_index(&a, &relabeled), 1.0);
    }

    #[test]
    fn ari_split_vs_singletons() {
        // Contingency: each singleton meets one half; the value 0 was
        // computed separately from the pair-count formula.
        let ari = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 2, 3]);
        assert!(ari.abs() < 1e-12, "{ari}");
    }

    #[test]
    fn ari_reference_value() {
        // Checked against an independent contingency-table computation.
        let a = [0, 0, 0, 1, 1, 1, 2, 2];
        let b = [0, 0, 1, 1, 1, 2, 2, 2];
        let ari = adjusted_rand_index(&a, &b);
        assert!((ari - 5.0 / 21.0).abs() < 1e-12, "{ari}");
    }

    #[test]
    fn mlr_examples() {
        let e = |i: u32| EdgeKey::new(i, i + 1);
        let exact = [(e(0), true), (e(1), false), (e(2), true), (e(3), false)];
        assert_eq!(mislabel_rate(&exact, &exact), 0.0);
        let mut flipped = exact;
        flipped[2].1 = false;
        assert_eq!(mislabel_rate(&flipped, &exact), 0.25);
    }

    #[test]
    fn canonical_resolves_overlap() {
        let r = ClusteringResult {
            clusters: vec![vec![0, 1, 2], vec![2, 3]],
            ..ClusteringResult::default()
        };
        assert_eq!(canonical_labels(&r, 5), vec![0, 0, 0, 1, 6]);
    }

    #[test]
    fn sandwich_detects_escape() {
        let res = |c: Vec<Vec<VertexId>>| ClusteringResult {
            clusters: c,
            ..ClusteringResult::default()
        };
        let tight = res(vec![vec![0, 1]]);
        let loose = res(vec![vec![0, 1, 2, 3]]);
        assert_eq!(sandwich_violations(&res(vec![vec![0, 1, 2]]), &tight, &loose), 0);
        assert_eq!(sandwich_violations(&res(vec![vec![0, 2]]), &tight, &loose), 1);
        assert_eq!(sandwich_violations(&res(vec![vec![0, 1, 4]]), &tight, &loose), 1);
    }

    proptest! {
        #[test]
        fn ari_symmetric(a in proptest::collection::vec(0u64..4, 2..40), seed in 0u64..1000) {
            let b: Vec<u64> = a.iter().enumerate().map(|(i, &x)| (x + (i as u64 * seed) % 3) % 5).collect();
            let ab = adjusted_rand_index(&a, &b);
            let ba = adjusted_rand_index(&b, &a);
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab <= 1.0 + 1e-12);
        }
    }
}
