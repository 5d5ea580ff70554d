//! Config-driven experiment runner behind the `lamedtn` binary.
//!
//! A run reads one JSON config, validates every section before any compute,
//! executes a single task and writes its artifacts (mesh, DtN blob and
//! header, CSV/JSON reports) into the output directory.

pub mod config;
pub mod run;

pub use config::{ExperimentConfig, Task};
pub use run::{run, run_config, RunOptions, RunSummary};

/// Process exit code for an error: 1 for configuration problems, 2 for
/// numerical failures.
pub fn exit_code(err: &crate::Error) -> i32 {
    if err.is_config_error() {
        1
    } else {
        2
    }
}
