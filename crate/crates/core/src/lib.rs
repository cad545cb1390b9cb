//! Connectedness, direct sums and component decomposition for graph limits
//! represented by step kernels, together with a seeded W-random graph
//! sampler and Monte Carlo drivers that check the limit behaviour of sampled
//! graphs.
//!
//! Heavy loops (replicates, subset enumeration) run on rayon when the
//! `parallel` feature is enabled and sequentially otherwise; outputs are
//! identical either way.

pub mod catalog;
pub mod cuts;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod kernel;
pub mod limit;
pub mod par;
pub mod rng;
pub mod sampler;

pub use catalog::{enumerate_connected, is_connected_graph, TestGraphCatalog};
pub use error::{Error, Result};
pub use graph::{Graph, Partition2};
pub use kernel::{ComponentDecomposition, Part, StepKernel};
pub use limit::{DensityFingerprint, GraphLimit};
pub use rng::Seed;
