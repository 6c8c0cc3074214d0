//! The benchmark loop: replay updates, issue periodic queries, and compare
//! against the oracle.

use std::time::Instant;

use crate::algorithms::EngineConfig;
use crate::baselines::EdgeSims;
use crate::dyngraph::DynamicGraph;
use crate::error::Result;
use crate::framework::{ClusteringEngine, QueryParams, UpdateOp};
use crate::metrics::{
    adjusted_rand_index, approx_labels, canonical_labels, mislabel_rate, sandwich_violations, PerfReport,
    QualityReport, QueryRecord,
};
use crate::workload::{WorkloadConfig, WorkloadGenerator};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub engine: EngineConfig,
    pub workload: WorkloadConfig,
    /// Compare every `k`-th query against the oracle.
    pub evaluate_every: Option<u64>,
    /// Check the sandwich property on evaluated queries.
    pub sandwich: bool,
    /// Full structure audit after every update.
    pub audit_structures: bool,
    /// Record wall-clock timings; zeros otherwise.
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            engine: EngineConfig::default(),
            workload: WorkloadConfig::default(),
            evaluate_every: None,
            sandwich: false,
            audit_structures: false,
            timings: true,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub quality: QualityReport,
    pub perf: PerfReport,
    /// First messages of failed audits, capped at a few entries.
    pub audit_messages: Vec<String>,
}

impl RunOutput {
    /// Total audit, sandwich and recompute violations.
    pub fn violations(&self) -> usize {
        self.perf.sandwich_violations + self.perf.audit_failures + self.perf.recompute_violations
    }
}

fn micros_since(start: Option<Instant>) -> u64 {
    start.map_or(0, |s| s.elapsed().as_micros() as u64)
}

/// Evaluates one query result against the exact clustering.
pub struct QueryEvaluation {
    pub ari: f64,
    pub mlr: f64,
    pub sandwich_violations: usize,
}

pub fn evaluate_query(
    engine: &dyn ClusteringEngine,
    exact: &EdgeSims,
    params: QueryParams,
    rho_star: f64,
    result: &crate::framework::ClusteringResult,
    sandwich: bool,
) -> QueryEvaluation {
    let n = engine.graph().n();
    let truth = exact.cluster(params.eps, params.mu);
    let ari = adjusted_rand_index(&canonical_labels(result, n), &canonical_labels(&truth, n));
    let mlr = mislabel_rate(&approx_labels(engine.lists(), params.eps), &exact.labels(params.eps));
    let sandwich_violations = if sandwich {
        let tight = exact.cluster(params.eps + rho_star, params.mu);
        let loose = exact.cluster(params.eps - rho_star, params.mu);
        sandwich_violations(result, &tight, &loose)
    } else {
        0
    };
    QueryEvaluation {
        ari,
        mlr,
        sandwich_violations,
    }
}

/// Replays `stream` (or a generated stream of the configured length) over
/// `graph` and reports quality and performance.
pub fn run(graph: DynamicGraph, stream: Option<&[UpdateOp]>, config: &RunConfig) -> Result<RunOutput> {
    let m_initial = graph.m();
    let n = graph.n();
    let mut engine_cfg = config.engine.clone();
    let total = match stream {
        Some(s) => s.len() as u64,
        None => config.workload.stream_len(&graph),
    };
    if engine_cfg.expected_updates == 0 {
        engine_cfg.expected_updates = total;
    }
    let mut engine = engine_cfg.build(graph)?;
    let mut generator = WorkloadGenerator::new(config.workload.clone());
    let mut out = RunOutput::default();
    let mut latencies = Vec::with_capacity(total as usize);
    let mut invalid_sum = 0u64;
    let mut queries = 0u64;
    let clock = || config.timings.then(Instant::now);

    if config.audit_structures {
        if let Err(msg) = engine.audit() {
            out.perf.audit_failures += 1;
            out.audit_messages.push(format!("initial: {msg}"));
        }
    }
    for i in 0..total {
        let op = match stream {
            Some(s) => s[i as usize],
            None => generator.next_update(engine.graph())?,
        };
        let start = clock();
        let report = engine.apply_update(op)?;
        latencies.push(micros_since(start));
        invalid_sum += report.invalid as u64;
        out.perf.invalid_max = out.perf.invalid_max.max(report.invalid);

        if config.audit_structures {
            if let Err(msg) = engine.audit() {
                out.perf.audit_failures += 1;
                if out.audit_messages.len() < 8 {
                    out.audit_messages.push(format!("update {}: {msg}", i + 1));
                }
            }
        }

        let index = i + 1;
        if config.workload.query_period > 0 && index % config.workload.query_period == 0 {
            let params = generator.next_query(engine.graph());
            let start = clock();
            let result = engine.query(params);
            let query_micros = micros_since(start);
            let mut record = QueryRecord {
                update_index: index,
                eps: params.eps,
                mu: params.mu,
                ari: None,
                mlr: None,
                n_cr: result.n_cr(),
                m_cr: result.m_cr(),
                query_micros,
            };
            if config.evaluate_every.is_some_and(|k| k > 0 && queries.is_multiple_of(k)) {
                let exact = EdgeSims::exact(engine.graph(), engine_cfg.measure);
                let eval = evaluate_query(&*engine, &exact, params, engine_cfg.rho_star, &result, config.sandwich);
                record.ari = Some(eval.ari);
                record.mlr = Some(eval.mlr);
                out.perf.sandwich_violations += eval.sandwich_violations;
            }
            out.quality.records.push(record);
            queries += 1;
            out.perf.peak_heap_bytes = out.perf.peak_heap_bytes.max(engine.heap_bytes());
        }
    }

    let stats = *engine.stats();
    let perf = &mut out.perf;
    perf.algorithm = engine_cfg.algorithm.name().to_owned();
    perf.measure = engine_cfg.measure.name().to_owned();
    perf.n = n;
    perf.m_initial = m_initial;
    perf.m_final = engine.graph().m();
    perf.updates = total;
    perf.queries = queries;
    perf.set_latencies(&latencies);
    perf.cal_sim_calls = stats.cal_sim_calls;
    perf.recomputations = stats.recomputations;
    perf.samples = stats.samples;
    perf.capped_calls = stats.capped_calls;
    perf.touched = stats.touched;
    perf.invalid_mean = if total > 0 { invalid_sum as f64 / total as f64 } else { 0.0 };
    perf.rebuilds = stats.rebuilds;
    perf.peak_heap_bytes = perf.peak_heap_bytes.max(engine.heap_bytes());
    perf.recompute_violations = engine.tracker().map_or(0, |t| t.violations.len());
    Ok(out)
}
