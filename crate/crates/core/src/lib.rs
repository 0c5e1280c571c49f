//! Market-basket analysis with Kohonen self-organizing maps.
//!
//! The pipeline turns point-of-sale transaction rows into binary basket
//! vectors ([`ingest`]), trains a seeded SOM over them ([`som`]), reads
//! clusters and product associations off the trained lattice
//! ([`analysis`]) and writes images, text maps and CSV tables ([`report`]).
//! [`synth`] produces datasets with planted co-purchase groups plus naive
//! counting oracles used throughout the tests.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod ingest;
pub mod report;
pub mod rng;
pub mod som;
pub mod synth;

pub use error::{Error, Result};
