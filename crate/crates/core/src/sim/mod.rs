//! Round-based simulation: problem generation, observation signals, the run
//! loop with its metrics, and multi-algorithm comparisons.

mod compare;
mod config;
mod engine;
mod generate;
mod log;
mod metrics;
mod rng;
mod signal;

use std::path::Path;

use crate::linalg::LinalgError;
use crate::problem::ProblemError;
use crate::protocols::ProtocolError;

pub use compare::{best_per_algorithm, comparison_csv, run_comparison, ComparisonRow, Outcome, DEFAULT_THRESHOLD};
pub use config::{AlphaChoice, GainSpec, GeneratorSpec, ProblemSource, RunConfig, StopRule};
pub use engine::{load_problem, prepare_run, run_prepared, run_simulation, PreparedRun, AUTO_ALPHA_CAP};
pub use generate::{generate_random_problem, Conditioning};
pub use log::{sidecar_path, AlphaSource, MetricsLog, MetricsRow, RunMetadata, StopReason};
pub use metrics::{comm_cycles_per_iteration, mean_residual, metric_e1, metric_e2, Algorithm};
pub use rng::GaussianStream;
pub use signal::{generate_tv_observation, ObservationStream, SignalSpec};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("step size {alpha} is not below the admissible bound {bound}; pass force_alpha to run anyway")]
    AlphaAboveBound { alpha: f64, bound: f64 },
    #[error("diverged at iteration {k}: e1 = {e1:e}")]
    Diverged { k: usize, e1: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<LinalgError> for SimError {
    fn from(e: LinalgError) -> Self {
        SimError::Problem(e.into())
    }
}

impl SimError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Whether the error is a numerical guard (divergence, non-diagonalizable
    /// or unstable spectrum, a failed decomposition) rather than a problem
    /// with the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SimError::Diverged { .. }
                | SimError::Problem(
                    ProblemError::NotDiagonalizable { .. }
                        | ProblemError::UnstableSpectrum { .. }
                        | ProblemError::EmptyNonzeroSpectrum
                        | ProblemError::KktResidual { .. }
                        | ProblemError::Linalg(
                            LinalgError::NotPsd(_)
                                | LinalgError::NotDirectSum(_)
                                | LinalgError::Decomposition(_)
                                | LinalgError::EigenResidual { .. }
                        )
                )
        )
    }
}

#[cfg(test)]
mod tests;
