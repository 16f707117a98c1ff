//! File formats, ingestion, translation and the command-line front end
//! around `stimulex-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod format;
pub mod fsutil;
pub mod ingest;
pub mod model_file;
pub mod project;
pub mod reports;
pub mod translate;

pub use error::Error;
