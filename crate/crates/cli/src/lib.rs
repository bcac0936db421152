//! Configuration-driven runs of the `pumpfield` models with file outputs.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::RunConfig;
pub use error::{CliError, ErrorRecord};
pub use run::{run, Mode};
