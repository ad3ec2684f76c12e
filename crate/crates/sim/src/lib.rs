//! Monte Carlo estimates of boundary connectivity for the positive and
//! negative sign clusters of the metric-graph Gaussian free field on a
//! lattice rectangle with alternating boundary data.
//!
//! A trial samples the discrete field on the vertices, opens each edge with
//! the probability that the Brownian bridge along it keeps its sign, and
//! reads off which boundary arcs are joined by clusters. The resulting
//! frontier link pattern is tallied against the exact distribution from
//! [`fusion_core::probability`].

pub mod cluster;
pub mod error;
pub mod experiment;
pub mod field;
pub mod lattice;

pub use error::{SimError, SimResult};
