//! File formats and command-line workflows built on `blurbench-core`.

pub mod cli;
pub mod commands;
pub mod config;
mod error;
pub mod ingest;
pub mod manifest;
pub mod pnm;

pub use error::{IngestError, PnmError};
