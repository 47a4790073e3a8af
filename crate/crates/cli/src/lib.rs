//! Front end for `bregman-core`: sample ingestion, generator documents, the
//! `bregman-bv` subcommands and their JSON reports.
//!
//! Exit codes are [`EXIT_OK`], [`EXIT_INPUT`] for anything wrong with the
//! inputs, and [`EXIT_IDENTITY`] when a report's checks fail.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod report;

pub use commands::{execute, run, Cli, Outcome, RunConfig, THREADS_ENV};
pub use config::GeneratorConfig;
pub use error::{CliError, EXIT_IDENTITY, EXIT_INPUT, EXIT_OK};
pub use ingest::{ingest, read_csv, read_json, write_csv, write_json, Format, RawSamples, Samples};
pub use report::to_json;
