//! Dynamic graph storage: adjacency sets, similarity-sorted neighbor
//! lists and edge-list ingestion.

mod graph;
mod ingest;
mod sorted;

pub use graph::{DynamicGraph, EdgeKey, VertexId};
pub use ingest::{read_edge_list, write_edge_list, IngestedGraph, LabelMap};
pub use sorted::{SimKey, SortedNeighborLists};
