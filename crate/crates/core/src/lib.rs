//! Exact and numerical tools for multiple level lines of the Gaussian free
//! field at κ = 4: pure partition functions, their fusion into metric-graph
//! first-passage-set partition functions, and the resulting crossing
//! probabilities.

pub mod combinat;
pub mod coulomb;
pub mod dd;
pub mod elliptic;
pub mod error;
pub mod incidence;
pub mod partition_fn;
pub mod probability;
pub mod suite;
pub mod verify;

pub use error::{Error, Result};
