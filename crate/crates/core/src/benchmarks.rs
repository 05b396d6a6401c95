//! Conflict-history benchmark forecasts.
//!
//! Every benchmark only reads fatalities up to `window_start − 3` and uses
//! the same sample for all twelve months of the window.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::forecast::{ForecastError, ForecastSet};
use crate::panel::PanelDataset;
use crate::{seed, CellId, MonthId, MIN_TIMESTEP, SAMPLE_COUNT};

/// Months of history drawn from by the bootstrap benchmark.
pub const BOOTSTRAP_HISTORY: usize = 240;

/// Months of history used by the conflictology benchmarks.
pub const CONFLICTOLOGY_HISTORY: usize = 12;

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("window starting at {window_start} needs data from month {needed}, panel starts at {first}")]
    InsufficientHistory {
        window_start: MonthId,
        needed: MonthId,
        first: MonthId,
    },
    #[error("cutoff month {cutoff} is after the last panel month {last}")]
    CutoffBeyondData { cutoff: MonthId, last: MonthId },
    #[error("unknown benchmark kind {0:?}")]
    UnknownKind(String),
    #[error("{0}")]
    Forecast(#[from] ForecastError),
}

impl BenchmarkError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            BenchmarkError::Forecast(e) => e.category(),
            _ => ErrorCategory::Config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    AllZero,
    PoissonLast,
    Conflictology,
    ConflictologyNeighbors,
    Bootstrap240,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 5] = [
        BenchmarkKind::AllZero,
        BenchmarkKind::PoissonLast,
        BenchmarkKind::Conflictology,
        BenchmarkKind::ConflictologyNeighbors,
        BenchmarkKind::Bootstrap240,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::AllZero => "all_zero",
            BenchmarkKind::PoissonLast => "poisson_last",
            BenchmarkKind::Conflictology => "conflictology",
            BenchmarkKind::ConflictologyNeighbors => "conflictology_neighbors",
            BenchmarkKind::Bootstrap240 => "bootstrap_240",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = BenchmarkError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BenchmarkKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BenchmarkError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub kind: BenchmarkKind,
    pub seed: u64,
}

/// Data cutoff for a window: the last month a benchmark may read.
pub fn cutoff_for(window_start: MonthId) -> MonthId {
    window_start - MIN_TIMESTEP as MonthId
}

/// Queen-adjacent neighbours of the cell at `ci` that exist in the panel.
pub fn queen_neighbours(data: &PanelDataset, ci: usize) -> Vec<usize> {
    let lattice = data.lattice_index();
    queen_neighbours_in(&lattice, data, ci)
}

fn queen_neighbours_in(
    lattice: &std::collections::HashMap<(i64, i64), usize>,
    data: &PanelDataset,
    ci: usize,
) -> Vec<usize> {
    let Some((r, c)) = data.cells()[ci].lattice() else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(8);
    for dr in -1..=1 {
        for dc in -1..=1 {
            if dr == 0 && dc == 0 {
                continue;
            }
            if let Some(&j) = lattice.get(&(r + dr, c + dc)) {
                out.push(j);
            }
        }
    }
    out
}

pub fn benchmark_forecast(
    spec: BenchmarkSpec,
    data: &PanelDataset,
    window_start: MonthId,
) -> Result<ForecastSet, BenchmarkError> {
    let cutoff = cutoff_for(window_start);
    if cutoff < data.first_month() {
        return Err(BenchmarkError::InsufficientHistory {
            window_start,
            needed: cutoff,
            first: data.first_month(),
        });
    }
    if cutoff > data.last_month() {
        return Err(BenchmarkError::CutoffBeyondData {
            cutoff,
            last: data.last_month(),
        });
    }
    let cut_idx = (cutoff - data.first_month()) as usize;
    let history = |ci: usize, len: usize| -> Vec<u32> {
        let start = (cut_idx + 1).saturating_sub(len);
        (start..=cut_idx).map(|m| data.fatality(ci, m)).collect()
    };
    let lattice = data.lattice_index();

    let samples: Vec<(CellId, Vec<u32>)> = (0..data.n_cells())
        .into_par_iter()
        .map(|ci| {
            let cell = data.cells()[ci].cell_id;
            let mut rng = seed::derived_rng(spec.seed, &[spec.kind.tag(), cell as u64]);
            let s = match spec.kind {
                BenchmarkKind::AllZero => vec![0; SAMPLE_COUNT],
                BenchmarkKind::PoissonLast => {
                    let lambda = data.fatality(ci, cut_idx) as f64;
                    match Poisson::new(lambda) {
                        Ok(dist) => (0..SAMPLE_COUNT).map(|_| dist.sample(&mut rng) as u32).collect(),
                        Err(_) => vec![0; SAMPLE_COUNT],
                    }
                }
                BenchmarkKind::Conflictology => history(ci, CONFLICTOLOGY_HISTORY),
                BenchmarkKind::ConflictologyNeighbors => {
                    let mut s = history(ci, CONFLICTOLOGY_HISTORY);
                    for j in queen_neighbours_in(&lattice, data, ci) {
                        s.extend(history(j, CONFLICTOLOGY_HISTORY));
                    }
                    s
                }
                BenchmarkKind::Bootstrap240 => {
                    let h = history(ci, BOOTSTRAP_HISTORY);
                    (0..SAMPLE_COUNT)
                        .map(|_| h[rng.random_range(0..h.len())])
                        .collect()
                }
            };
            (cell, s)
        })
        .collect();

    let mut fc = ForecastSet::new(window_start);
    let months: Vec<MonthId> = fc.window_months().collect();
    for (cell, s) in samples {
        for &m in &months {
            fc.insert(cell, m, s.clone())?;
        }
    }
    Ok(fc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{generate_synthetic, SyntheticConfig};

    #[test]
    fn kinds_parse() {
        for k in BenchmarkKind::ALL {
            assert_eq!(k.name().parse::<BenchmarkKind>().unwrap(), k);
        }
        assert!("nope".parse::<BenchmarkKind>().is_err());
    }

    #[test]
    fn insufficient_history() {
        let data = generate_synthetic(&SyntheticConfig {
            n_cells: 9,
            n_months: 24,
            ..Default::default()
        })
        .unwrap();
        let spec = BenchmarkSpec {
            kind: BenchmarkKind::AllZero,
            seed: 0,
        };
        assert!(matches!(
            benchmark_forecast(spec, &data, 2),
            Err(BenchmarkError::InsufficientHistory { .. })
        ));
        assert!(benchmark_forecast(spec, &data, 3).is_ok());
    }
}
