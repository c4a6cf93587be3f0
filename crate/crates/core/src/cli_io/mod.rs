//! Configuration, subcommand dispatch and report writing for the `rotflow`
//! binary.

pub mod certify;
pub mod commands;
pub mod config;
pub mod report;

pub use certify::{certify, Certification, CertifyError};
pub use commands::{Context, EXIT_INPUT, EXIT_OK, EXIT_PRECONDITION, EXIT_SOLVER};
pub use config::{ConfigError, RunConfig};
