//! Two-stage hurdle models and the composition of predictive samples.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::forecast::{ForecastError, ForecastSet};
use crate::forest::{fit_classifier, fit_qrf, ForestError, ForestKind, ForestModel, HyperParams};
use crate::panel::{build_supervised_frame, PanelDataset, PanelError};
use crate::{seed, CellId, MonthId, MAX_TIMESTEP, MIN_TIMESTEP, SAMPLE_COUNT};

#[derive(Debug, Error)]
pub enum HurdleError {
    #[error("{0}")]
    Panel(#[from] PanelError),
    #[error("{0}")]
    Forest(#[from] ForestError),
    #[error("{0}")]
    Forecast(#[from] ForecastError),
    #[error("insufficient positive examples for timestep {timestep}: {detail}")]
    InsufficientPositives { timestep: u32, detail: String },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("regressor samples must be non-empty and all at least 1")]
    InvalidSamples,
    #[error("missing model for timestep {0}")]
    MissingTimestep(u32),
    #[error("more than one model for timestep {0}")]
    DuplicateTimestep(u32),
    #[error("inconsistent model set: {0}")]
    Inconsistent(String),
    #[error("missing component forecast for cell {0} month {1}")]
    MissingComponent(CellId, MonthId),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl HurdleError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            HurdleError::Panel(e) => e.category(),
            HurdleError::Forest(e) => e.category(),
            HurdleError::Forecast(e) => e.category(),
            HurdleError::MissingTimestep(_)
            | HurdleError::DuplicateTimestep(_)
            | HurdleError::Inconsistent(_) => ErrorCategory::Config,
            HurdleError::Io(_) => ErrorCategory::Runtime,
            _ => ErrorCategory::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Global,
    Cluster(u32),
}

/// Classifier + quantile regressor for one forecast horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurdleModel {
    pub timestep_k: u32,
    pub cutoff_month: MonthId,
    pub scope: Scope,
    pub classifier: ForestModel,
    pub regressor: ForestModel,
}

impl HurdleModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HurdleError> {
        serde_json::to_writer(BufWriter::new(File::create(path)?), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HurdleError> {
        let model: HurdleModel = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        // re-validate the embedded forests
        let classifier = ForestModel::from_json(&model.classifier.to_json()?)?;
        let regressor = ForestModel::from_json(&model.regressor.to_json()?)?;
        if classifier.kind != ForestKind::Classifier || regressor.kind != ForestKind::QuantileRegressor {
            return Err(HurdleError::Inconsistent("component kinds swapped".into()));
        }
        Ok(model)
    }
}

/// Fit both stages for timestep `k` on data up to `cutoff_month`, optionally
/// restricted to `scope_cells`.
pub fn train_hurdle(
    data: &PanelDataset,
    timestep_k: u32,
    cutoff_month: MonthId,
    hp_cls: &HyperParams,
    hp_reg: &HyperParams,
    scope: Scope,
    scope_cells: Option<&BTreeSet<CellId>>,
) -> Result<HurdleModel, HurdleError> {
    let mut frame = build_supervised_frame(data, timestep_k, cutoff_month)?;
    if let Some(cells) = scope_cells {
        frame = frame.restrict_cells(cells);
    }
    let nonzero = frame.nonzero_rows();
    let insufficient = |detail: String| HurdleError::InsufficientPositives {
        timestep: timestep_k,
        detail,
    };
    if nonzero.is_empty() {
        return Err(insufficient("no rows with non-zero fatalities in scope".into()));
    }
    let distinct: BTreeSet<u32> = nonzero.iter().map(|&i| frame.counts[i]).collect();
    if distinct.len() < 2 {
        return Err(insufficient(
            "non-zero targets need at least two distinct values".into(),
        ));
    }
    if nonzero.len() == frame.len() {
        return Err(insufficient("no zero rows left for the classifier".into()));
    }
    let classifier = fit_classifier(frame.features.view(), &frame.occurred, hp_cls)?;
    let reg_frame = frame.select(&nonzero);
    let regressor = fit_qrf(reg_frame.features.view(), &reg_frame.counts, hp_reg)?;
    Ok(HurdleModel {
        timestep_k,
        cutoff_month,
        scope,
        classifier,
        regressor,
    })
}

/// How classifier probabilities and regressor samples are combined.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionStrategy {
    /// `round(m·p)` draws from the regressor samples, zeros elsewhere.
    #[default]
    QuasiHurdle,
    /// Every regressor sample scaled by `p` and rounded.
    Multiplicative,
    /// Regressor samples if `p ≥ threshold`, all zeros otherwise.
    Threshold(f64),
}

fn round_half_up(v: f64) -> usize {
    (v + 0.5).floor() as usize
}

/// Quasi-hurdle composition of a predictive sample.
///
/// Exactly `round(m·p)` (half up) entries are drawn uniformly with
/// replacement from `nonzero_samples`; the remaining entries are zero.
/// The output has the input's length and is sorted.
pub fn compose_quasi_hurdle(
    p: f64,
    nonzero_samples: &[u32],
    rng_seed: u64,
) -> Result<Vec<u32>, HurdleError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(HurdleError::InvalidProbability(p));
    }
    if nonzero_samples.is_empty() || nonzero_samples.contains(&0) {
        return Err(HurdleError::InvalidSamples);
    }
    let m = nonzero_samples.len();
    let k = round_half_up(m as f64 * p).min(m);
    let mut rng = seed::rng(rng_seed);
    let mut out = vec![0u32; m - k];
    out.extend((0..k).map(|_| nonzero_samples[rng.random_range(0..m)]));
    out.sort_unstable();
    Ok(out)
}

pub fn compose(
    strategy: CompositionStrategy,
    p: f64,
    nonzero_samples: &[u32],
    rng_seed: u64,
) -> Result<Vec<u32>, HurdleError> {
    match strategy {
        CompositionStrategy::QuasiHurdle => compose_quasi_hurdle(p, nonzero_samples, rng_seed),
        CompositionStrategy::Multiplicative | CompositionStrategy::Threshold(_) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(HurdleError::InvalidProbability(p));
            }
            if nonzero_samples.is_empty() || nonzero_samples.contains(&0) {
                return Err(HurdleError::InvalidSamples);
            }
            let mut out: Vec<u32> = match strategy {
                CompositionStrategy::Multiplicative => nonzero_samples
                    .iter()
                    .map(|&v| round_half_up(v as f64 * p) as u32)
                    .collect(),
                CompositionStrategy::Threshold(t) if p >= t => nonzero_samples.to_vec(),
                _ => vec![0; nonzero_samples.len()],
            };
            out.sort_unstable();
            Ok(out)
        }
    }
}

/// Uncomposed model output for one window: the classifier probability and
/// the regressor samples for every (cell, month).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentForecast {
    pub feature_month: MonthId,
    pub probabilities: BTreeMap<(CellId, MonthId), f64>,
    pub regressor_samples: BTreeMap<(CellId, MonthId), Vec<u32>>,
}

impl ComponentForecast {
    pub fn window_start(&self) -> MonthId {
        self.feature_month + MIN_TIMESTEP as MonthId
    }

    pub fn restrict<F: Fn(CellId) -> bool>(&self, keep: F) -> ComponentForecast {
        ComponentForecast {
            feature_month: self.feature_month,
            probabilities: self
                .probabilities
                .iter()
                .filter(|(k, _)| keep(k.0))
                .map(|(k, v)| (*k, *v))
                .collect(),
            regressor_samples: self
                .regressor_samples
                .iter()
                .filter(|(k, _)| keep(k.0))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    /// Union of disjoint component sets for the same feature month.
    pub fn merge(&mut self, other: ComponentForecast) {
        self.probabilities.extend(other.probabilities);
        self.regressor_samples.extend(other.regressor_samples);
    }
}

/// Order a model set by timestep, checking that 3..=14 each appear once.
pub fn check_model_set(models: &[HurdleModel]) -> Result<Vec<&HurdleModel>, HurdleError> {
    let mut by_k: BTreeMap<u32, &HurdleModel> = BTreeMap::new();
    for m in models {
        if by_k.insert(m.timestep_k, m).is_some() {
            return Err(HurdleError::DuplicateTimestep(m.timestep_k));
        }
    }
    (MIN_TIMESTEP..=MAX_TIMESTEP)
        .map(|k| by_k.get(&k).copied().ok_or(HurdleError::MissingTimestep(k)))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| {
            if let Some(extra) = by_k.keys().find(|k| !(MIN_TIMESTEP..=MAX_TIMESTEP).contains(k)) {
                return Err(HurdleError::Inconsistent(format!("unexpected timestep {extra}")));
            }
            Ok(v)
        })
}

/// Classifier probabilities and regressor samples for `cells` (all cells if
/// `None`) from features observed at `feature_month`.
pub fn predict_components(
    models: &[HurdleModel],
    data: &PanelDataset,
    feature_month: MonthId,
    cells: Option<&[CellId]>,
) -> Result<ComponentForecast, HurdleError> {
    let ordered = check_model_set(models)?;
    let mi = data.check_month(feature_month)?;
    let cell_ids: Vec<CellId> = match cells {
        Some(c) => c.to_vec(),
        None => data.cell_ids().collect(),
    };
    let nf = data.n_features();
    let mut x = Array2::<f64>::zeros((cell_ids.len(), nf));
    for (r, &cell) in cell_ids.iter().enumerate() {
        let ci = data.cell_index(cell).ok_or_else(|| {
            HurdleError::Inconsistent(format!("cell {cell} is not in the panel"))
        })?;
        x.row_mut(r)
            .as_slice_mut()
            .expect("row-major")
            .copy_from_slice(data.features_of(ci, mi));
    }
    let mut out = ComponentForecast {
        feature_month,
        ..Default::default()
    };
    for model in ordered {
        let month = feature_month + model.timestep_k as MonthId;
        let p = model.classifier.predict_proba(x.view())?;
        let samples = model.regressor.predict_samples_batch(x.view(), SAMPLE_COUNT)?;
        for ((&cell, p), s) in cell_ids.iter().zip(p).zip(samples) {
            out.probabilities.insert((cell, month), p);
            out.regressor_samples.insert((cell, month), s);
        }
    }
    Ok(out)
}

/// Compose a forecast from (possibly different) classifier and regressor
/// sources. The seed of each entry is derived from `(base_seed, cell, k)`.
pub fn compose_window(
    classifier_source: &ComponentForecast,
    regressor_source: &ComponentForecast,
    base_seed: u64,
    strategy: CompositionStrategy,
) -> Result<ForecastSet, HurdleError> {
    if classifier_source.feature_month != regressor_source.feature_month {
        return Err(HurdleError::Inconsistent(
            "component sources use different feature months".into(),
        ));
    }
    let feature_month = classifier_source.feature_month;
    let mut out = ForecastSet::new(classifier_source.window_start());
    for (&(cell, month), &p) in &classifier_source.probabilities {
        let samples = regressor_source
            .regressor_samples
            .get(&(cell, month))
            .ok_or(HurdleError::MissingComponent(cell, month))?;
        let k = (month - feature_month) as u64;
        let s = seed::derive(base_seed, &[cell as u64, k]);
        out.insert(cell, month, compose(strategy, p, samples, s)?)?;
    }
    Ok(out)
}

/// Predict the twelve-month window starting at `feature_month + 3`.
pub fn predict_window(
    models: &[HurdleModel],
    data: &PanelDataset,
    feature_month: MonthId,
    base_seed: u64,
    strategy: CompositionStrategy,
    cells: Option<&[CellId]>,
) -> Result<ForecastSet, HurdleError> {
    let components = predict_components(models, data, feature_month, cells)?;
    compose_window(&components, &components, base_seed, strategy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quasi_hurdle_examples() {
        let src: Vec<u32> = (1..=1000).collect();
        let out = compose_quasi_hurdle(0.25, &src, 3).unwrap();
        assert_eq!(out.iter().filter(|&&v| v == 0).count(), 750);
        assert_eq!(compose_quasi_hurdle(0.0, &src, 3).unwrap(), vec![0; 1000]);
        assert_eq!(compose_quasi_hurdle(1.0, &[7; 1000], 3).unwrap(), vec![7; 1000]);
        assert!(matches!(
            compose_quasi_hurdle(1.5, &src, 3),
            Err(HurdleError::InvalidProbability(_))
        ));
        assert_eq!(
            compose_quasi_hurdle(0.4, &src, 9).unwrap(),
            compose_quasi_hurdle(0.4, &src, 9).unwrap()
        );
    }

    #[test]
    fn half_rounds_up() {
        let src = vec![5u32; 1000];
        let out = compose_quasi_hurdle(0.0125, &src, 0).unwrap();
        assert_eq!(out.iter().filter(|&&v| v > 0).count(), 13);
    }

    #[test]
    fn alternative_strategies() {
        let src = vec![4u32; 10];
        assert_eq!(compose(CompositionStrategy::Multiplicative, 0.5, &src, 0).unwrap(), vec![2; 10]);
        assert_eq!(compose(CompositionStrategy::Threshold(0.6), 0.5, &src, 0).unwrap(), vec![0; 10]);
        assert_eq!(compose(CompositionStrategy::Threshold(0.5), 0.5, &src, 0).unwrap(), src);
    }
}
