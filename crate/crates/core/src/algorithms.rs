//! Named engine configurations and the builder used by the CLI.

use std::fmt;
use std::str::FromStr;

use crate::affordability::{QuotaPolicy, VdStarStore};
use crate::baselines::{botbin_k, BotbinStore, GsStore};
use crate::corefind::{CoreIndex, CoreStrategyKind};
use crate::dyngraph::DynamicGraph;
use crate::error::{Error, Result};
use crate::framework::{ClusteringEngine, Engine};
use crate::similarity::{ApproxParams, SampleMode, SimilarityEstimator, SimilarityMeasure};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Affordability buckets with the Δ-Table.
    #[default]
    VdStar,
    /// Affordability buckets with the direct core scan.
    VdStarNoTable,
    /// Affordability buckets with the small μ-Table.
    VdStarMuTable,
    GsIndex,
    Botbin,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Self::VdStar,
        Self::VdStarNoTable,
        Self::VdStarMuTable,
        Self::GsIndex,
        Self::Botbin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::VdStar => "vdstar",
            Self::VdStarNoTable => "vdstar_not",
            Self::VdStarMuTable => "vdstar_mut",
            Self::GsIndex => "gsindex",
            Self::Botbin => "botbin",
        }
    }

    pub fn uses_delta_table(self) -> bool {
        matches!(self, Self::VdStar | Self::Botbin)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub algorithm: Algorithm,
    pub measure: SimilarityMeasure,
    pub rho_star: f64,
    pub delta: f64,
    pub mu_cap: usize,
    pub quota_policy: QuotaPolicy,
    pub max_samples: Option<u64>,
    pub sample_mode: SampleMode,
    /// Overrides the BOTBIN signature size.
    pub botbin_k: Option<usize>,
    /// Stream length used for the default BOTBIN `k`.
    pub expected_updates: u64,
    pub seed: u64,
    /// Overrides the `n₀²` rebuild period; `Some(None)` disables rebuilds.
    pub epoch_len: Option<Option<u64>>,
    pub track_recomputes: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::VdStar,
            measure: SimilarityMeasure::Jaccard,
            rho_star: 0.02,
            delta: 0.01,
            mu_cap: 15,
            quota_policy: QuotaPolicy::Immediate,
            max_samples: None,
            sample_mode: SampleMode::Auto,
            botbin_k: None,
            expected_updates: 0,
            seed: 0,
            epoch_len: None,
            track_recomputes: false,
        }
    }
}

impl EngineConfig {
    pub fn new(algorithm: Algorithm, measure: SimilarityMeasure) -> Self {
        Self {
            algorithm,
            measure,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithm == Algorithm::Botbin && self.measure != SimilarityMeasure::Jaccard {
            return Err(Error::Config(format!(
                "botbin supports jaccard similarity only, not {}",
                self.measure
            )));
        }
        if !(self.rho_star > 0.0 && self.rho_star < 1.0) {
            return Err(Error::Config(format!("rho* = {} must lie in (0, 1)", self.rho_star)));
        }
        if self.algorithm.uses_delta_table() && !(self.delta > 0.0 && self.delta < self.rho_star) {
            return Err(Error::Config(format!(
                "delta = {} must lie in (0, rho* = {})",
                self.delta, self.rho_star
            )));
        }
        if self.mu_cap == 0 {
            return Err(Error::Config("mu cap must be at least 1".into()));
        }
        if self.botbin_k == Some(0) {
            return Err(Error::Config("botbin k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn approx_params(&self) -> ApproxParams {
        if self.algorithm.uses_delta_table() {
            ApproxParams::with_delta(self.rho_star, self.delta)
        } else {
            ApproxParams::exact_core(self.rho_star)
        }
    }

    fn core_strategy(&self) -> CoreStrategyKind {
        match self.algorithm {
            Algorithm::VdStar | Algorithm::Botbin => CoreStrategyKind::DeltaTable { delta: self.delta },
            Algorithm::VdStarNoTable => CoreStrategyKind::NoTable,
            Algorithm::VdStarMuTable => CoreStrategyKind::MuTableSmall { cap: self.mu_cap },
            Algorithm::GsIndex => CoreStrategyKind::MuTableFull,
        }
    }

    pub fn estimator(&self) -> SimilarityEstimator {
        let mut est = SimilarityEstimator::new(self.measure, self.approx_params().rho).with_mode(self.sample_mode);
        est.max_samples = self.max_samples;
        est
    }

    fn finish<S: crate::framework::EdgeSimStore>(&self, mut engine: Engine<S>) -> Engine<S> {
        if let Some(len) = self.epoch_len {
            engine = engine.with_epoch_len(len);
        }
        if self.track_recomputes {
            engine = engine.with_recompute_tracking();
        }
        engine
    }

    /// A VD-STAR engine with a concrete type, for callers that need the
    /// affordability state.
    pub fn build_vdstar(&self, graph: DynamicGraph) -> Result<Engine<VdStarStore>> {
        self.validate()?;
        let store = VdStarStore::new(self.estimator(), self.quota_policy);
        let cores = CoreIndex::new(self.core_strategy());
        Ok(self.finish(Engine::new(graph, store, cores, self.seed)))
    }

    pub fn build(&self, graph: DynamicGraph) -> Result<Box<dyn ClusteringEngine>> {
        self.validate()?;
        let cores = CoreIndex::new(self.core_strategy());
        Ok(match self.algorithm {
            Algorithm::VdStar | Algorithm::VdStarNoTable | Algorithm::VdStarMuTable => {
                Box::new(self.build_vdstar(graph)?)
            }
            Algorithm::GsIndex => {
                let store = GsStore::new(self.measure);
                Box::new(self.finish(Engine::new(graph, store, cores, self.seed)))
            }
            Algorithm::Botbin => {
                let updates = self.expected_updates.max(2 * graph.m() as u64);
                let k = self
                    .botbin_k
                    .unwrap_or_else(|| botbin_k(graph.n(), updates, self.approx_params().rho));
                let store = BotbinStore::new(k, self.seed);
                Box::new(self.finish(Engine::new(graph, store, cores, self.seed)))
            }
        })
    }
}
