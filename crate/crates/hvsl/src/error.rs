//! Error type shared by the whole simulator.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Invalid configuration (bad key, missing key, violated invariant).
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// A 1D advection kernel was asked to do something it cannot.
    #[error("kernel error: {0}")]
    Kernel(String),

    /// The discrete state violates a model invariant (e.g. rho <= 0).
    #[error("state error: {0}")]
    State(String),

    /// The rotation angle sits on a resonance of the averaging matrix;
    /// the caller must reduce the time step.
    #[error("step-size error: theta = {theta} is within {tol} of 2*k*pi; reduce dt")]
    Resonance { theta: f64, tol: f64 },

    /// The Picard iteration did not reach its tolerance.
    #[error("picard iteration failed to converge after {iterations} iterations (residual {residual:e})")]
    PicardNonConvergence { iterations: usize, residual: f64 },

    /// Analysis failure in the diagnostics layer.
    #[error("diagnostics error: {0}")]
    Diagnostics(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        SimError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 config, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config { .. } => 2,
            _ => 3,
        }
    }
}
