//! Spec-driven pipelines around the `ionforce` simulator: event synthesis,
//! drive-frequency sweeps, force ladders, analytic sensitivity budgets and
//! field calibration, each writing data files plus a checksummed manifest.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod commands;
pub mod output;
pub mod spec;

pub use commands::{run, Command, Invocation};
pub use spec::{ExperimentSpec, Format};

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        RunError::Runtime(format!("{}: {e}", path.display()))
    }

    /// Process exit code: 2 for an invalid spec, 3 for a runtime failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Spec(_) => 2,
            RunError::Runtime(_) => 3,
        }
    }
}
