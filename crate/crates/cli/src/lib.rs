//! Batch front end: parse a JSON input, run one verification command and
//! emit a machine-readable report.

pub mod commands;
pub mod error;
pub mod inputs;
pub mod report;

pub use commands::{run, Command, Options, Outcome};
pub use error::CliError;
pub use report::{Check, VerificationReport};
