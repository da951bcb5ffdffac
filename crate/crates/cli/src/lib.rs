//! Command-line front end: configuration, CSV ingestion, analysis runs and
//! the JSON, CSV and SVG outputs.

pub mod analysis;
pub mod config;
pub mod ingest;
pub mod output;
pub mod run;
pub mod svg;

pub use analysis::{analyze, ResultDoc};
pub use config::{resolve, AnalysisConfig, Command, Overrides};
pub use ingest::{ingest_csv, IngestError};
pub use run::{run, RunOutput};
