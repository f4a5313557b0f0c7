//! File formats, pipeline stages, exports, the command-line driver and the
//! HTTP API for referral-network analysis. The algorithms themselves live in
//! `refnet-core`.

pub mod api;
pub mod bundle;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod export;
pub mod ingest;
pub mod parallel;
pub mod pipeline;
pub mod sqldb;
pub mod table;

pub use error::{Error, Result};
