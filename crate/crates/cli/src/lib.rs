//! Command-line front end: single runs, batch evaluation, statistics,
//! synthetic corpora and plot data.

pub mod aggregate;
pub mod commands;
pub mod record;

pub use commands::{run_cli, Cli, Failure, EXIT_EMPTY, EXIT_FLAGS, EXIT_INPUT};
pub use record::RunRecord;
