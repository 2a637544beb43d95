use thiserror::Error;

/// Errors raised by the numerical routines and the file interfaces.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("argument {arg} outside the tabulated range [0, {max}]")]
    Range { arg: f64, max: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("unimodality lost at iteration {iteration}, node {node}: grid too coarse")]
    UnimodalityLost { iteration: usize, node: usize },

    #[error("potential energy decreased at iteration {iteration}: {before} -> {after}")]
    EnergyDecrease {
        iteration: usize,
        before: f64,
        after: f64,
    },

    #[error("boundary truncation dominates: profile magnitude {magnitude:e} at the grid edge")]
    BoundaryTruncation { magnitude: f64 },

    #[error("singularity barrier reached at step {step} (bond {bond}, r = {r})")]
    Barrier { step: usize, bond: usize, r: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },
}

impl Error {
    /// True for failures of the numerics, as opposed to bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integration(_)
                | Error::MaxIterations { .. }
                | Error::UnimodalityLost { .. }
                | Error::EnergyDecrease { .. }
                | Error::BoundaryTruncation { .. }
                | Error::Barrier { .. }
                | Error::LinearAlgebra(_)
                | Error::Range { .. }
                | Error::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
