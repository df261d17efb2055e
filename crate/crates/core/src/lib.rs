//! Quasihyperbolic geometry on finite samples of metric domains.

pub mod cli;
pub mod domain;
pub mod error;
pub mod generate;
pub mod graph;
pub mod mesh;
pub mod metric;
pub mod moebius;
pub mod quasihyperbolic;
pub mod sampling;
pub mod suite;
pub mod transforms;
pub mod uniformity;

pub use error::{Error, Result};
