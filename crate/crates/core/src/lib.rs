//! Dynamic structural graph clustering with approximate edge similarities.
//!
//! The engine maintains a similarity estimate for every edge of a graph
//! under edge insertions and deletions, and answers SCAN-style `(ε, μ)`
//! clustering queries with parameters chosen at query time.

pub mod affordability;
pub mod algorithms;
pub mod baselines;
pub mod corefind;
pub mod dyngraph;
pub mod error;
pub mod framework;
pub mod metrics;
pub mod ostree;
pub mod runner;
pub mod similarity;
pub mod workload;

pub use algorithms::{Algorithm, EngineConfig};
pub use dyngraph::{DynamicGraph, EdgeKey, SortedNeighborLists, VertexId};
pub use error::{Error, Result};
pub use framework::{ClusteringEngine, ClusteringResult, Engine, QueryParams, UpdateKind, UpdateOp};
pub use similarity::SimilarityMeasure;
pub use workload::{InsertStrategy, WorkloadConfig, WorkloadGenerator};
