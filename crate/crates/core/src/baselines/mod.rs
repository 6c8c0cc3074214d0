//! Reference structures: the exact GS*-Index store, the BOTBIN bottom-k
//! store, and a from-scratch oracle.

pub mod botbin;
pub mod gsindex;
pub mod oracle;

pub use botbin::{botbin_k, BotbinStore};
pub use gsindex::GsStore;
pub use oracle::{oracle_cluster, EdgeSims};
