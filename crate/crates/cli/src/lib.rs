//! Library side of the `blockgcl` binary: config files, commands, CSV and SVG output.

pub mod config;
pub mod plot;
pub mod report;
pub mod run;

pub use config::{ConfigError, RunConfig};

/// Process exit status for an error: 2 for bad usage or configuration, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.is::<ConfigError>()) {
        2
    } else {
        1
    }
}
