//! Proximity networks on Poisson point configurations.
//!
//! Builders for the relative neighborhood graph and its relatives, the
//! boundary-robust subnetwork of a square window, route-length statistics for
//! planted city pairs, oriented-percolation and block-construction
//! simulation, and chain diagnostics. Every random quantity is a pure
//! function of a master seed and the coordinates of the task that draws it.

pub mod chains;
pub mod error;
pub mod experiment;
pub mod geom;
pub mod graphs;
pub mod perc;
pub mod robust;
pub mod routes;
pub mod runner;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use geom::{Configuration, Point, Window};
pub use graphs::{Network, NetworkKind};
pub use runner::ExperimentSpec;
