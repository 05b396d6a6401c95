//! Sliding-window cross-validation, average precision, the penalized tuning
//! score and seeded random hyperparameter search.

use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::forest::{fit_classifier, fit_qrf, ForestError, HyperParams};
use crate::panel::{build_supervised_frame, PanelDataset, PanelError, SupervisedFrame};
use crate::scoring::crps_sample;
use crate::{seed, MonthId, SAMPLE_COUNT};

/// Length of every training window in months.
pub const TRAIN_MONTHS: usize = 60;

#[derive(Debug, Error)]
pub enum TuningError {
    #[error(
        "not enough months for CV: {n_folds} folds of {TRAIN_MONTHS}+{test_len} months need at least {required} usable feature months, found {available}"
    )]
    NotEnoughMonths {
        n_folds: usize,
        test_len: usize,
        required: usize,
        available: usize,
    },
    #[error("invalid tuning config: {0}")]
    Config(String),
    #[error("average precision is undefined without positive labels")]
    UndefinedMetric,
    #[error("{0} scores but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("tune score needs at least one fold")]
    EmptyFolds,
    #[error("every fold is degenerate for the {stage} stage at timestep {timestep}")]
    AllFoldsDegenerate { stage: Stage, timestep: u32 },
    #[error("{0}")]
    Panel(#[from] PanelError),
    #[error("{0}")]
    Forest(#[from] ForestError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl TuningError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            TuningError::NotEnoughMonths { .. } | TuningError::Config(_) => ErrorCategory::Config,
            TuningError::Panel(e) => e.category(),
            TuningError::Forest(e) => e.category(),
            TuningError::Io(_) => ErrorCategory::Runtime,
            TuningError::AllFoldsDegenerate { .. } => ErrorCategory::Runtime,
            _ => ErrorCategory::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Classifier,
    Regressor,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Classifier => "classifier",
            Stage::Regressor => "regressor",
        })
    }
}

/// One fold, in feature months `s` of the supervised frame (labels sit at
/// `s + k`). Test rows follow the training rows directly, so every test
/// label is later than every training label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSplit {
    pub timestep_k: u32,
    pub train_months: RangeInclusive<MonthId>,
    pub test_months: RangeInclusive<MonthId>,
}

impl CvSplit {
    pub fn train_label_months(&self) -> RangeInclusive<MonthId> {
        let k = self.timestep_k as MonthId;
        self.train_months.start() + k..=self.train_months.end() + k
    }

    pub fn test_label_months(&self) -> RangeInclusive<MonthId> {
        let k = self.timestep_k as MonthId;
        self.test_months.start() + k..=self.test_months.end() + k
    }
}

/// Evenly spaced sliding folds whose last test month is the last row month
/// of the training frame (`cutoff − k`).
pub fn make_cv_splits(
    data: &PanelDataset,
    timestep_k: u32,
    cutoff_month: MonthId,
    n_folds: usize,
    test_len_months: usize,
) -> Result<Vec<CvSplit>, TuningError> {
    if n_folds == 0 || test_len_months == 0 {
        return Err(TuningError::Config(
            "n_folds and test_len_months must be at least 1".into(),
        ));
    }
    data.check_month(cutoff_month)?;
    let last_row = cutoff_month - timestep_k as MonthId;
    let available = (last_row - data.first_month() + 1).max(0) as usize;
    let span = TRAIN_MONTHS + test_len_months;
    let required = span + n_folds - 1;
    if available < required {
        return Err(TuningError::NotEnoughMonths {
            n_folds,
            test_len: test_len_months,
            required,
            available,
        });
    }
    let stride = if n_folds > 1 {
        (available - span) / (n_folds - 1)
    } else {
        0
    };
    let last_start = last_row - span as MonthId + 1;
    Ok((0..n_folds)
        .map(|i| {
            let a = last_start - (stride * (n_folds - 1 - i)) as MonthId;
            let train_end = a + TRAIN_MONTHS as MonthId - 1;
            CvSplit {
                timestep_k,
                train_months: a..=train_end,
                test_months: train_end + 1..=train_end + test_len_months as MonthId,
            }
        })
        .collect())
}

/// `mean_test − 0.5·|mean_train − mean_test|` over `(train, test)` pairs.
pub fn tune_score(per_fold: &[(f64, f64)]) -> Result<f64, TuningError> {
    if per_fold.is_empty() {
        return Err(TuningError::EmptyFolds);
    }
    let n = per_fold.len() as f64;
    let train = per_fold.iter().map(|f| f.0).sum::<f64>() / n;
    let test = per_fold.iter().map(|f| f.1).sum::<f64>() / n;
    Ok(test - 0.5 * (train - test).abs())
}

/// Average precision with tied scores entering the PR curve together.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64, TuningError> {
    if scores.len() != labels.len() {
        return Err(TuningError::LengthMismatch(scores.len(), labels.len()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(TuningError::UndefinedMetric);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        if recall > prev_recall {
            ap += (recall - prev_recall) * tp as f64 / (tp + fp) as f64;
            prev_recall = recall;
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneConfig {
    pub budget: usize,
    pub n_folds: usize,
    pub test_len_months: usize,
    pub seed: u64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            budget: 25,
            n_folds: 5,
            test_len_months: 12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub hyperparams: HyperParams,
    pub mean_train: f64,
    pub mean_test: f64,
    pub tune_score: f64,
    pub per_fold: Vec<(f64, f64)>,
}

impl TuneResult {
    fn from_folds(hyperparams: HyperParams, per_fold: Vec<(f64, f64)>) -> Result<Self, TuningError> {
        let n = per_fold.len() as f64;
        let mean_train = per_fold.iter().map(|f| f.0).sum::<f64>() / n;
        let mean_test = per_fold.iter().map(|f| f.1).sum::<f64>() / n;
        Ok(Self {
            tune_score: tune_score(&per_fold)?,
            hyperparams,
            mean_train,
            mean_test,
            per_fold,
        })
    }
}

/// Every candidate evaluated during a search.
/// Per-fold `(train, test)` scores; `None` marks a skipped degenerate fold.
pub type FoldScores = Vec<Option<(f64, f64)>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneTrace {
    pub stage: Stage,
    pub timestep_k: u32,
    pub n_folds: usize,
    /// Per candidate: hyperparameters, fold scores and the tune score if any
    /// fold was usable.
    pub candidates: Vec<(HyperParams, FoldScores, Option<f64>)>,
    pub best: usize,
}

/// Draw one point from the search space.
pub fn sample_hyperparams<R: Rng>(rng: &mut R, stage: Stage, seed: u64) -> HyperParams {
    let n_trees = rng.random_range(100..=500);
    // 4..=24 plus one slot for unlimited depth
    let depth = rng.random_range(4..=25);
    let max_depth = (depth <= 24).then_some(depth);
    let min_samples_leaf = rng.random_range(1..=50);
    let max_features = rng.random_range(0.2..=1.0);
    let class_weight_positive = match stage {
        Stage::Classifier => rng.random_range(1.0..=100.0),
        Stage::Regressor => 1.0,
    };
    HyperParams {
        n_trees,
        max_depth,
        min_samples_leaf,
        max_features,
        class_weight_positive,
        seed,
    }
}

fn stage_tag(stage: Stage) -> u64 {
    match stage {
        Stage::Classifier => 1,
        Stage::Regressor => 2,
    }
}

/// Score one candidate on one fold; `None` when the fold cannot be scored.
fn evaluate_fold(
    frame: &SupervisedFrame,
    split: &CvSplit,
    stage: Stage,
    hp: &HyperParams,
) -> Result<Option<(f64, f64)>, TuningError> {
    let train = frame.select(&frame.rows_where(|_, s| split.train_months.contains(&s)));
    let test = frame.select(&frame.rows_where(|_, s| split.test_months.contains(&s)));
    match stage {
        Stage::Classifier => {
            let usable = |f: &SupervisedFrame| f.occurred.iter().any(|&o| o) && f.occurred.iter().any(|&o| !o);
            if !usable(&train) || !test.occurred.iter().any(|&o| o) {
                return Ok(None);
            }
            let model = fit_classifier(train.features.view(), &train.occurred, hp)?;
            let p_train = model.predict_proba(train.features.view())?;
            let p_test = model.predict_proba(test.features.view())?;
            Ok(Some((
                average_precision(&p_train, &train.occurred)?,
                average_precision(&p_test, &test.occurred)?,
            )))
        }
        Stage::Regressor => {
            let train = train.select(&train.nonzero_rows());
            let test = test.select(&test.nonzero_rows());
            if train.is_empty() || test.is_empty() {
                return Ok(None);
            }
            let model = fit_qrf(train.features.view(), &train.counts, hp)?;
            let score = |f: &SupervisedFrame| -> Result<f64, TuningError> {
                let samples = model.predict_samples_batch(f.features.view(), SAMPLE_COUNT)?;
                let total: f64 = samples
                    .iter()
                    .zip(&f.counts)
                    .map(|(s, &y)| crps_sample(s, y as f64).expect("non-empty samples"))
                    .sum();
                Ok(-total / f.len() as f64)
            };
            Ok(Some((score(&train)?, score(&test)?)))
        }
    }
}

fn depth_key(hp: &HyperParams) -> usize {
    hp.max_depth.unwrap_or(usize::MAX)
}

/// Seeded random search over the forest search space, scored by the
/// penalized tuning score on sliding-window CV.
pub fn random_search(
    data: &PanelDataset,
    stage: Stage,
    timestep_k: u32,
    cutoff_month: MonthId,
    cfg: &TuneConfig,
) -> Result<(TuneResult, TuneTrace), TuningError> {
    if cfg.budget == 0 {
        return Err(TuningError::Config("budget must be at least 1".into()));
    }
    let splits = make_cv_splits(data, timestep_k, cutoff_month, cfg.n_folds, cfg.test_len_months)?;
    let frame = build_supervised_frame(data, timestep_k, cutoff_month)?;
    let mut rng = seed::derived_rng(cfg.seed, &[stage_tag(stage), timestep_k as u64]);
    let candidates: Vec<HyperParams> = (0..cfg.budget)
        .map(|i| {
            let s = seed::derive(cfg.seed, &[stage_tag(stage), timestep_k as u64, i as u64]);
            sample_hyperparams(&mut rng, stage, s)
        })
        .collect();

    let evaluated: Vec<Vec<Option<(f64, f64)>>> = candidates
        .par_iter()
        .map(|hp| {
            splits
                .iter()
                .map(|split| evaluate_fold(&frame, split, stage, hp))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let mut trace = TuneTrace {
        stage,
        timestep_k,
        n_folds: splits.len(),
        candidates: Vec::with_capacity(candidates.len()),
        best: 0,
    };
    let mut best: Option<(usize, TuneResult)> = None;
    for (i, (hp, folds)) in candidates.into_iter().zip(evaluated).enumerate() {
        let usable: Vec<(f64, f64)> = folds.iter().flatten().copied().collect();
        let result = if usable.is_empty() {
            None
        } else {
            Some(TuneResult::from_folds(hp.clone(), usable)?)
        };
        trace
            .candidates
            .push((hp, folds, result.as_ref().map(|r| r.tune_score)));
        let Some(result) = result else { continue };
        let better = match &best {
            None => true,
            Some((_, b)) => {
                let (r, q) = (&result.hyperparams, &b.hyperparams);
                result.tune_score > b.tune_score
                    || (result.tune_score == b.tune_score
                        && (r.n_trees, depth_key(r)) < (q.n_trees, depth_key(q)))
            }
        };
        if better {
            best = Some((i, result));
        }
    }
    let (idx, result) = best.ok_or(TuningError::AllFoldsDegenerate {
        stage,
        timestep: timestep_k,
    })?;
    trace.best = idx;
    Ok((result, trace))
}

impl TuneTrace {
    /// One row per candidate: hyperparameters, per-fold scores, tune score.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TuningError> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header: Vec<String> = [
            "stage",
            "timestep",
            "candidate",
            "n_trees",
            "max_depth",
            "min_samples_leaf",
            "max_features",
            "class_weight_positive",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for f in 0..self.n_folds {
            header.push(format!("fold{f}_train"));
            header.push(format!("fold{f}_test"));
        }
        header.push("tune_score".into());
        header.push("selected".into());
        wtr.write_record(&header)?;
        for (i, (hp, folds, score)) in self.candidates.iter().enumerate() {
            let mut row = vec![
                self.stage.to_string(),
                self.timestep_k.to_string(),
                i.to_string(),
                hp.n_trees.to_string(),
                hp.max_depth.map_or("unlimited".into(), |d| d.to_string()),
                hp.min_samples_leaf.to_string(),
                hp.max_features.to_string(),
                hp.class_weight_positive.to_string(),
            ];
            for f in folds {
                match f {
                    Some((a, b)) => {
                        row.push(a.to_string());
                        row.push(b.to_string());
                    }
                    None => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            row.push(score.map_or(String::new(), |s| s.to_string()));
            row.push((i == self.best).to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tune_score_examples() {
        assert!((tune_score(&[(0.7, 0.5); 3]).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(tune_score(&[(0.6, 0.6)]).unwrap(), 0.6);
        assert!((tune_score(&[(0.9, 0.1), (0.9, 0.3)]).unwrap() + 0.15).abs() < 1e-12);
        assert!(tune_score(&[]).is_err());
    }

    #[test]
    fn ap_examples() {
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(
            average_precision(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap(),
            1.0
        );
        assert!(matches!(
            average_precision(&[0.1, 0.2], &[false, false]),
            Err(TuningError::UndefinedMetric)
        ));
        // a tie between a positive and a negative counts both at once
        let tied = average_precision(&[0.5, 0.5], &[true, false]).unwrap();
        assert_eq!(tied, 0.5);
    }

    #[test]
    fn search_space_bounds() {
        let mut rng = seed::rng(1);
        for _ in 0..500 {
            let hp = sample_hyperparams(&mut rng, Stage::Classifier, 0);
            hp.validate().unwrap();
            assert!((100..=500).contains(&hp.n_trees));
            assert!(hp.max_depth.is_none_or(|d| (4..=24).contains(&d)));
            assert!((1..=50).contains(&hp.min_samples_leaf));
            assert!((1.0..=100.0).contains(&hp.class_weight_positive));
        }
    }
}
