//! Command-line driver: problem and scenario files, CSV outputs with run manifests,
//! and the `estimate`, `bench`, `oracle-scatter` and `simulate` commands.

pub mod commands;
pub mod error;
pub mod output;
pub mod problem;
pub mod scenario;

pub use commands::{run, Cli};
pub use error::{exit, CliError};
