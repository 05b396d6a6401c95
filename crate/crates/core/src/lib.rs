//! Probabilistic forecasting of zero-inflated grid-month counts.
//!
//! The crate is organised along the pipeline:
//!
//! - [`panel`]: the dense grid-cell × month dataset, CSV IO, a synthetic
//!   generator and the shifted supervised frames used for training.
//! - [`forest`]: bagged Gini classification forests and quantile regression
//!   forests written from scratch.
//! - [`hurdle`]: two-stage classifier/regressor models and the quasi-hurdle
//!   composition of 1000-sample predictive distributions.
//! - [`forecast`]: the [`ForecastSet`](forecast::ForecastSet) container and
//!   its CSV/binary formats.
//! - [`tuning`]: sliding-window cross-validation, average precision, the
//!   penalized tuning score and seeded random search.
//! - [`spatial`]: DBSCAN clustering of violent cells, cluster merging, hull
//!   assignment and global-local component selection.
//! - [`benchmarks`]: conflict-history benchmark forecasts.
//! - [`scoring`]: CRPS, interval score, ignorance score, KDE MAP points,
//!   aggregate/per-country reports and rank tables.
//! - [`simulation`]: the CRPS informativeness experiment.
//! - [`pipeline`]: glue that tunes, trains and predicts a full window.

pub mod benchmarks;
pub mod error;
pub mod forecast;
pub mod forest;
pub mod hurdle;
pub mod panel;
pub mod pipeline;
pub mod scoring;
pub mod seed;
pub mod simulation;
pub mod spatial;
pub mod tuning;

pub use error::{Error, ErrorCategory, Result};

/// Identifier of a grid cell.
pub type CellId = u32;

/// Consecutive month index. Calendar months are mapped onto this by the caller.
pub type MonthId = i32;

/// Number of samples in every model-generated predictive distribution.
pub const SAMPLE_COUNT: usize = 1000;

/// First and last forecast horizon (months ahead of the data cutoff).
pub const MIN_TIMESTEP: u32 = 3;
pub const MAX_TIMESTEP: u32 = 14;

/// Length of a prediction window in months.
pub const WINDOW_MONTHS: usize = 12;
