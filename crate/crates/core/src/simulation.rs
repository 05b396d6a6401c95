//! How informative is mean CRPS under extreme zero-inflation?
//!
//! Simulated actuals are mostly zeros with a small share of positive counts.
//! Predictions are Poisson samples centred on (noisy) actuals; a share
//! `1 − α` of the predictions for positive actuals is replaced by all-zero
//! vectors. The mean CRPS over the grid of `α` and noise levels is recorded.
//!
//! Random streams are shared across grid points within a replication: the
//! noise draws, each observation's Poisson stream and the replacement order
//! are fixed, and the replaced sets are nested as `α` falls.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::panel::PanelDataset;
use crate::scoring::{crps_sample, silverman_bandwidth};
use crate::{seed, SAMPLE_COUNT};

/// Minimum number of positive panel values for the KDE source.
pub const MIN_PANEL_VALUES: usize = 30;

/// Upper bound (exclusive) on simulated positive values.
pub const VALUE_CAP: f64 = 1000.0;
/// Default log-scale parameters of the lognormal non-zero source.
pub const DEFAULT_MU: f64 = 1.6;
pub const DEFAULT_SIGMA: f64 = 1.75;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("accuracy must be in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("panel has {found} non-zero values below {VALUE_CAP}, the KDE source needs at least {required}; use the lognormal source instead")]
    TooFewPanelValues { found: usize, required: usize },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl SimulationError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            SimulationError::Config(_) | SimulationError::InvalidAlpha(_) => ErrorCategory::Config,
            SimulationError::TooFewPanelValues { .. } => ErrorCategory::Validation,
            _ => ErrorCategory::Runtime,
        }
    }
}

/// Distribution of the positive simulated actuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonzeroSource {
    /// Log-normal draws, rejected at or above [`VALUE_CAP`].
    Lognormal { mu: f64, sigma: f64 },
    /// Gaussian KDE (Silverman bandwidth) over observed positive values.
    Kde { values: Vec<f64> },
}

impl NonzeroSource {
    /// KDE source from every panel value in `(0, 1000)`.
    pub fn from_panel(data: &PanelDataset) -> Result<Self, SimulationError> {
        let values: Vec<f64> = data
            .observations()
            .map(|o| o.fatalities as f64)
            .filter(|&v| v > 0.0 && v < VALUE_CAP)
            .collect();
        if values.len() < MIN_PANEL_VALUES {
            return Err(SimulationError::TooFewPanelValues {
                found: values.len(),
                required: MIN_PANEL_VALUES,
            });
        }
        Ok(NonzeroSource::Kde { values })
    }

    fn validate(&self) -> Result<(), SimulationError> {
        match self {
            NonzeroSource::Lognormal { mu, sigma } => {
                if !(mu.is_finite() && *sigma > 0.0 && sigma.is_finite()) {
                    return Err(SimulationError::Config(format!(
                        "lognormal parameters must be finite with sigma > 0, got ({mu}, {sigma})"
                    )));
                }
                // at least a sliver of mass below the cap
                let p_below = LogNormal::new(*mu, *sigma).is_ok() && (VALUE_CAP.ln() - mu) / sigma > -8.0;
                if !p_below {
                    return Err(SimulationError::Config(
                        "lognormal source puts no mass below the value cap".into(),
                    ));
                }
                Ok(())
            }
            NonzeroSource::Kde { values } => {
                if values.len() < MIN_PANEL_VALUES {
                    return Err(SimulationError::TooFewPanelValues {
                        found: values.len(),
                        required: MIN_PANEL_VALUES,
                    });
                }
                if silverman_bandwidth(values).is_none() {
                    return Err(SimulationError::Config("KDE values have no spread".into()));
                }
                Ok(())
            }
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<u32> {
        match self {
            NonzeroSource::Lognormal { mu, sigma } => {
                let dist = LogNormal::new(*mu, *sigma).expect("validated");
                (0..n)
                    .map(|_| loop {
                        let v: f64 = dist.sample(rng);
                        if v < VALUE_CAP {
                            break round_positive(v);
                        }
                    })
                    .collect()
            }
            NonzeroSource::Kde { values } => {
                let h = silverman_bandwidth(values).expect("validated");
                let kernel = Normal::new(0.0, h).expect("positive bandwidth");
                (0..n)
                    .map(|_| {
                        let centre = values[rng.random_range(0..values.len())];
                        let v = centre + kernel.sample(rng);
                        // negative draws are reflected
                        round_positive(v.abs())
                    })
                    .collect()
            }
        }
    }
}

fn round_positive(v: f64) -> u32 {
    ((v + 0.5).floor() as u32).max(1)
}

fn round_half_up(v: f64) -> usize {
    (v + 0.5).floor() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_total: usize,
    pub n_nonzero: usize,
    pub accuracy_grid: Vec<f64>,
    pub noise_grid: Vec<f64>,
    pub noise_scale: f64,
    pub replications: usize,
    pub seed: u64,
    pub source: NonzeroSource,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_total: 157_320,
            n_nonzero: 787,
            accuracy_grid: (1..=10).rev().map(|i| i as f64 / 10.0).collect(),
            noise_grid: (0..=5).map(|i| i as f64 / 5.0).collect(),
            noise_scale: 50.0,
            replications: 5,
            seed: 0,
            source: NonzeroSource::Lognormal {
                mu: DEFAULT_MU,
                sigma: DEFAULT_SIGMA,
            },
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: &str| Err(SimulationError::Config(m.to_string()));
        if self.n_nonzero > self.n_total || self.n_total == 0 {
            return bad("need 0 < n_total and n_nonzero <= n_total");
        }
        if self.accuracy_grid.is_empty() || self.noise_grid.is_empty() {
            return bad("accuracy and noise grids must be non-empty");
        }
        if let Some(&a) = self.accuracy_grid.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return Err(SimulationError::InvalidAlpha(a));
        }
        if self.noise_grid.iter().any(|&n| !(n >= 0.0 && n.is_finite())) {
            return bad("noise levels must be finite and >= 0");
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return bad("noise_scale must be finite and >= 0");
        }
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        self.source.validate()
    }
}

const TAG_ACTUALS: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_ORDER: u64 = 3;
const TAG_POISSON: u64 = 4;

/// Actuals for one replication: `n_total − n_nonzero` zeros followed by the
/// positive draws.
pub fn simulate_actuals(cfg: &SimConfig, seed: u64) -> Result<Vec<u32>, SimulationError> {
    cfg.source.validate()?;
    if cfg.n_nonzero > cfg.n_total {
        return Err(SimulationError::Config("n_nonzero exceeds n_total".into()));
    }
    let mut rng = seed::derived_rng(seed, &[TAG_ACTUALS]);
    let mut out = vec![0u32; cfg.n_total - cfg.n_nonzero];
    out.extend(cfg.source.draw(&mut rng, cfg.n_nonzero));
    Ok(out)
}

/// Shared random state of one replication.
struct Streams {
    positives: Vec<(usize, u32)>,
    eps: Vec<f64>,
    order: Vec<usize>,
    seed: u64,
}

impl Streams {
    fn new(actuals: &[u32], seed: u64) -> Self {
        let positives: Vec<(usize, u32)> = actuals
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(i, &v)| (i, v))
            .collect();
        let mut noise_rng = seed::derived_rng(seed, &[TAG_NOISE]);
        let eps = (0..positives.len())
            .map(|_| noise_rng.random_range(-1.0..=1.0))
            .collect();
        let mut order: Vec<usize> = (0..positives.len()).collect();
        order.shuffle(&mut seed::derived_rng(seed, &[TAG_ORDER]));
        Self {
            positives,
            eps,
            order,
            seed,
        }
    }

    /// Positions (into `positives`) whose predictions become all-zero.
    fn replaced(&self, alpha: f64) -> Vec<bool> {
        let count = round_half_up((1.0 - alpha) * self.positives.len() as f64).min(self.positives.len());
        let mut mask = vec![false; self.positives.len()];
        for &j in &self.order[..count] {
            mask[j] = true;
        }
        mask
    }

    /// Poisson predictive sample for positive actual `j`.
    fn poisson_sample(&self, j: usize, noise: f64, noise_scale: f64) -> Vec<u32> {
        let (idx, z) = self.positives[j];
        let lambda = (z as f64 + noise_scale * noise * self.eps[j]).max(0.0);
        let mut rng = seed::derived_rng(self.seed, &[TAG_POISSON, idx as u64]);
        let mut s: Vec<u32> = match Poisson::new(lambda) {
            Ok(d) => (0..SAMPLE_COUNT).map(|_| d.sample(&mut rng) as u32).collect(),
            Err(_) => vec![0; SAMPLE_COUNT],
        };
        s.sort_unstable();
        s
    }
}

/// Prediction table for a set of actuals at accuracy `alpha` and noise `noise`.
pub fn build_predictions(
    actuals: &[u32],
    alpha: f64,
    noise: f64,
    noise_scale: f64,
    seed: u64,
) -> Result<Vec<Vec<u32>>, SimulationError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SimulationError::InvalidAlpha(alpha));
    }
    if noise.is_nan() || noise < 0.0 {
        return Err(SimulationError::Config("noise must be >= 0".into()));
    }
    let streams = Streams::new(actuals, seed);
    let mask = streams.replaced(alpha);
    let mut out = vec![vec![0u32; SAMPLE_COUNT]; actuals.len()];
    for j in 0..streams.positives.len() {
        if !mask[j] {
            out[streams.positives[j].0] = streams.poisson_sample(j, noise, noise_scale);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub alpha: f64,
    pub noise: f64,
    pub replication: usize,
    pub mean_crps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub rows: Vec<SimRow>,
}

impl SimResult {
    /// Mean over replications at one grid point.
    pub fn mean_at(&self, alpha: f64, noise: f64) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.alpha == alpha && r.noise == noise)
            .map(|r| r.mean_crps)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Values for one (alpha, noise) across replications.
    pub fn replicates(&self, alpha: f64, noise: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.alpha == alpha && r.noise == noise)
            .map(|r| r.mean_crps)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SimulationError> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        wtr.write_record(["alpha", "noise", "replication", "mean_crps"])?;
        for r in &self.rows {
            wtr.write_record([
                r.alpha.to_string(),
                r.noise.to_string(),
                r.replication.to_string(),
                r.mean_crps.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Mean CRPS over the full (alpha × noise × replication) grid.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult, SimulationError> {
    cfg.validate()?;
    let per_rep: Vec<Vec<SimRow>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| -> Result<Vec<SimRow>, SimulationError> {
            let rep_seed = seed::derive(cfg.seed, &[rep as u64]);
            let actuals = simulate_actuals(cfg, rep_seed)?;
            let streams = Streams::new(&actuals, rep_seed);
            let masks: Vec<Vec<bool>> = cfg.accuracy_grid.iter().map(|&a| streams.replaced(a)).collect();
            let mut rows = Vec::new();
            for &noise in &cfg.noise_grid {
                let crps: Vec<f64> = (0..streams.positives.len())
                    .into_par_iter()
                    .map(|j| {
                        let s = streams.poisson_sample(j, noise, cfg.noise_scale);
                        crps_sample(&s, streams.positives[j].1 as f64).expect("non-empty")
                    })
                    .collect();
                for (&alpha, mask) in cfg.accuracy_grid.iter().zip(&masks) {
                    // zero actuals score exactly 0; an all-zero prediction scores z
                    let total: f64 = (0..crps.len())
                        .map(|j| {
                            if mask[j] {
                                streams.positives[j].1 as f64
                            } else {
                                crps[j]
                            }
                        })
                        .sum();
                    rows.push(SimRow {
                        alpha,
                        noise,
                        replication: rep,
                        mean_crps: total / cfg.n_total as f64,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;
    Ok(SimResult {
        rows: per_rep.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(source: NonzeroSource) -> SimConfig {
        SimConfig {
            n_total: 1000,
            n_nonzero: 5,
            source,
            ..Default::default()
        }
    }

    #[test]
    fn actual_counts() {
        let cfg = small(NonzeroSource::Lognormal { mu: 1.6, sigma: 1.0 });
        let a = simulate_actuals(&cfg, 3).unwrap();
        assert_eq!(a.iter().filter(|&&v| v == 0).count(), 995);
        assert!(a[995..].iter().all(|&v| v >= 1));
    }

    #[test]
    fn replacement_count() {
        let mut actuals = vec![0u32; 2000];
        for (i, v) in actuals.iter_mut().take(787).enumerate() {
            *v = 1 + (i as u32 % 40);
        }
        let preds = build_predictions(&actuals, 0.8, 0.0, 50.0, 1).unwrap();
        let zeroed = preds[..787].iter().filter(|p| p.iter().all(|&v| v == 0)).count();
        // a Poisson(λ ≥ 1) sample of 1000 is never all zero in practice
        assert_eq!(zeroed, 157);
        assert!(preds[787..].iter().all(|p| p.iter().all(|&v| v == 0)));
        assert!(build_predictions(&actuals, 0.0, 0.0, 50.0, 1).is_err());
    }

    #[test]
    fn negative_centres_clamp_to_zero() {
        let actuals = vec![1u32; 200];
        let preds = build_predictions(&actuals, 1.0, 1.0, 50.0, 2).unwrap();
        // with noise scale 50 roughly half of the centres fall below zero
        let all_zero = preds.iter().filter(|p| p.iter().all(|&v| v == 0)).count();
        assert!(all_zero > 50 && all_zero < 150, "{all_zero}");
    }

    #[test]
    fn kde_source_needs_values() {
        let cfg = small(NonzeroSource::Kde { values: vec![1.0; 5] });
        assert!(matches!(
            simulate_actuals(&cfg, 0),
            Err(SimulationError::TooFewPanelValues { .. })
        ));
    }
}
