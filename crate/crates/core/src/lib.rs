//! Simulation and exact analysis of the two-walk painting process.

pub mod batch;
pub mod constants;
pub mod error;
pub mod exact;
pub mod graph;
pub mod numeric;
pub mod painter;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use graph::{Graph, GraphSpec, Vertex};
pub use walk::WalkConfig;
