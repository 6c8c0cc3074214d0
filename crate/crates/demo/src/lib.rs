//! Browser demo: a planted-partition graph under random edge updates,
//! clustered on demand for slider-chosen `(ε, μ)`.

use dynscan::workload::planted_partition;
use dynscan::{Algorithm, ClusteringEngine, EngineConfig, QueryParams, SimilarityMeasure, UpdateOp};
use dynscan::{WorkloadConfig, WorkloadGenerator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Engine, update generator and a fixed vertex layout.
pub struct DemoState {
    engine: Box<dyn ClusteringEngine>,
    generator: WorkloadGenerator,
    positions: Vec<(f64, f64)>,
    updates: u64,
}

impl DemoState {
    pub fn new(blocks: usize, size: usize, measure: &str, seed: u64) -> Result<Self, String> {
        if blocks == 0 || size < 2 {
            return Err("need at least one block of two vertices".into());
        }
        let measure: SimilarityMeasure = measure.parse()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = planted_partition(blocks, size, 0.45, 0.02, &mut rng);
        let config = EngineConfig {
            rho_star: 0.1,
            delta: 0.05,
            seed,
            ..EngineConfig::new(Algorithm::VdStar, measure)
        };
        let engine = config.build(graph).map_err(|e| e.to_string())?;
        let generator = WorkloadGenerator::new(WorkloadConfig {
            seed,
            eta: 1.0,
            ..WorkloadConfig::default()
        });
        Ok(Self {
            engine,
            generator,
            positions: layout(blocks, size),
            updates: 0,
        })
    }

    /// Applies `count` generated updates.
    pub fn step(&mut self, count: u32) -> Result<(), String> {
        for _ in 0..count {
            let op = self.generator.next_update(self.engine.graph()).map_err(|e| e.to_string())?;
            self.apply(op)?;
        }
        Ok(())
    }

    /// Inserts `(u, v)` if absent, deletes it otherwise.
    pub fn toggle_edge(&mut self, u: u32, v: u32) -> Result<(), String> {
        let n = self.engine.graph().n() as u32;
        if u >= n || v >= n {
            return Err(format!("vertex out of range 0..{n}"));
        }
        let op = if self.engine.graph().has_edge(u, v) {
            UpdateOp::delete(u, v)
        } else {
            UpdateOp::insert(u, v)
        };
        self.apply(op)
    }

    fn apply(&mut self, op: UpdateOp) -> Result<(), String> {
        self.engine.apply_update(op).map_err(|e| e.to_string())?;
        self.updates += 1;
        Ok(())
    }

    pub fn query(&self, eps: f64, mu: usize) -> Value {
        let result = self.engine.query(QueryParams::new(eps, mu));
        let mut edges: Vec<_> = self.engine.lists().edge_sims();
        edges.sort_unstable_by_key(|(e, _)| *e);
        let result_edges: std::collections::HashSet<_> = result.result_edges.iter().copied().collect();
        let edges: Vec<Value> = edges
            .into_iter()
            .map(|(e, s)| json!([e.lo(), e.hi(), (s * 1000.0).round() / 1000.0, result_edges.contains(&e)]))
            .collect();
        json!({
            "n": self.engine.graph().n(),
            "m": self.engine.graph().m(),
            "updates": self.updates,
            "cores": result.cores,
            "clusters": result.clusters,
            "hubs": result.hubs,
            "outliers": result.outliers,
            "edges": edges,
        })
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }
}

/// Groups on a large circle, members on a small circle around each
/// group centre, all in the unit square.
fn layout(blocks: usize, size: usize) -> Vec<(f64, f64)> {
    use std::f64::consts::TAU;
    let outer = if blocks == 1 { 0.0 } else { 0.33 };
    let inner = if blocks == 1 { 0.4 } else { (0.45 * TAU * outer / blocks as f64).min(0.15) };
    (0..blocks * size)
        .map(|u| {
            let (b, i) = (u / size, u % size);
            let a = TAU * b as f64 / blocks as f64;
            let t = TAU * i as f64 / size as f64;
            (0.5 + outer * a.cos() + inner * t.cos(), 0.5 + outer * a.sin() + inner * t.sin())
        })
        .collect()
}

#[wasm_bindgen]
pub struct Demo {
    state: DemoState,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(blocks: usize, size: usize, measure: &str, seed: u32) -> Result<Demo, JsError> {
        let state = DemoState::new(blocks, size, measure, u64::from(seed)).map_err(|e| JsError::new(&e))?;
        Ok(Demo { state })
    }

    pub fn step(&mut self, count: u32) -> Result<(), JsError> {
        self.state.step(count).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = toggleEdge)]
    pub fn toggle_edge(&mut self, u: u32, v: u32) -> Result<(), JsError> {
        self.state.toggle_edge(u, v).map_err(|e| JsError::new(&e))
    }

    /// Clustering at `(eps, mu)` as a JSON string.
    pub fn query(&self, eps: f64, mu: usize) -> String {
        self.state.query(eps, mu).to_string()
    }

    /// Flat `[x0, y0, x1, y1, ...]` in the unit square.
    pub fn positions(&self) -> Vec<f64> {
        self.state.positions().iter().flat_map(|&(x, y)| [x, y]).collect()
    }
}
