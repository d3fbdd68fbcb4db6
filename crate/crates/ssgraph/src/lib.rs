//! File formats, graph cache, scan drivers and the `ssgraph` command line
//! on top of `ssgraph-core`.

pub mod cache;
pub mod cli;
pub mod error;
pub mod modpoly_db;
pub mod report;
pub mod source;

pub use error::{Error, Result};
pub use ssgraph_core;

/// Version of the cache and output file layouts.
pub const FORMAT_VERSION: u32 = 1;
