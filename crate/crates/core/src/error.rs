use thiserror::Error;

use crate::benchmarks::BenchmarkError;
use crate::forecast::ForecastError;
use crate::forest::ForestError;
use crate::hurdle::HurdleError;
use crate::panel::PanelError;
use crate::scoring::ScoringError;
use crate::simulation::SimulationError;
use crate::spatial::SpatialError;
use crate::tuning::TuningError;

/// Coarse classification used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad configuration or missing/unknown inputs.
    Config,
    /// Inputs exist but violate a data contract.
    Validation,
    /// Everything else (IO failures, numerical failures).
    Runtime,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("panel: {0}")]
    Panel(#[from] PanelError),
    #[error("forest: {0}")]
    Forest(#[from] ForestError),
    #[error("hurdle: {0}")]
    Hurdle(#[from] HurdleError),
    #[error("forecast: {0}")]
    Forecast(#[from] ForecastError),
    #[error("tuning: {0}")]
    Tuning(#[from] TuningError),
    #[error("spatial: {0}")]
    Spatial(#[from] SpatialError),
    #[error("benchmarks: {0}")]
    Benchmark(#[from] BenchmarkError),
    #[error("scoring: {0}")]
    Scoring(#[from] ScoringError),
    #[error("simulation: {0}")]
    Simulation(#[from] SimulationError),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Panel(e) => e.category(),
            Error::Forest(e) => e.category(),
            Error::Hurdle(e) => e.category(),
            Error::Forecast(e) => e.category(),
            Error::Tuning(e) => e.category(),
            Error::Spatial(e) => e.category(),
            Error::Benchmark(e) => e.category(),
            Error::Scoring(e) => e.category(),
            Error::Simulation(e) => e.category(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
