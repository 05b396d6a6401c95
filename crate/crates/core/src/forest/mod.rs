//! Bagged decision-tree ensembles: a probability classifier and a quantile
//! regression forest that keeps every leaf response.

mod tree;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tree::{Leaf, Node, Tree};
use tree::{Builder, Target};

use crate::error::ErrorCategory;
use crate::seed;

/// Serialization format version.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("empty training data")]
    EmptyData,
    #[error("shape mismatch: model expects {expected} features, got {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("degenerate labels: training data contains a single class")]
    DegenerateLabels,
    #[error("zero target in regressor training at row {row}")]
    ZeroTarget { row: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),
    #[error("wrong model kind: expected {expected:?}, found {found:?}")]
    WrongKind { expected: ForestKind, found: ForestKind },
    #[error("invalid quantile levels: {0}")]
    InvalidQuantiles(String),
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ForestError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ForestError::InvalidHyperParams(_) => ErrorCategory::Config,
            ForestError::Io(_) => ErrorCategory::Runtime,
            _ => ErrorCategory::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestKind {
    Classifier,
    QuantileRegressor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Fraction of features examined at each split.
    pub max_features: f64,
    /// Weight of the positive class in Gini impurity and leaf frequencies.
    pub class_weight_positive: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: 0.5,
            class_weight_positive: 1.0,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), ForestError> {
        let bad = |m: String| Err(ForestError::InvalidHyperParams(m));
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1".into());
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return bad(format!("max_features must be in (0, 1], got {}", self.max_features));
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1".into());
        }
        if self.max_depth == Some(0) {
            return bad("max_depth must be at least 1".into());
        }
        if !(self.class_weight_positive >= 1.0 && self.class_weight_positive.is_finite()) {
            return bad(format!(
                "class_weight_positive must be a finite value >= 1, got {}",
                self.class_weight_positive
            ));
        }
        Ok(())
    }

    /// Number of features examined per split for `n_features` inputs.
    pub fn mtry(&self, n_features: usize) -> usize {
        ((self.max_features * n_features as f64).ceil() as usize).clamp(1, n_features.max(1))
    }
}

/// A fitted ensemble. Immutable after fitting.
///
/// Bootstrap samples are not stored row by row: each tree keeps the seed that
/// generated its sample, and [`ForestModel::bootstrap_indices`] replays it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub version: u32,
    pub kind: ForestKind,
    pub hyperparams: HyperParams,
    pub feature_count: usize,
    pub n_train: usize,
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<Tree>,
    /// Training responses referenced by regression leaves; empty for classifiers.
    pub targets: Vec<u32>,
}

fn row_major(x: &ArrayView2<f64>) -> Vec<f64> {
    x.as_standard_layout().iter().copied().collect()
}

fn check_inputs(x: &ArrayView2<f64>, n_labels: usize, hp: &HyperParams) -> Result<(), ForestError> {
    hp.validate()?;
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(ForestError::EmptyData);
    }
    if x.nrows() != n_labels {
        return Err(ForestError::LengthMismatch {
            rows: x.nrows(),
            labels: n_labels,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ForestError::Malformed("non-finite feature value".into()));
    }
    Ok(())
}

fn tree_seed(hp: &HyperParams, t: usize) -> u64 {
    hp.seed ^ t as u64
}

fn bootstrap<R: Rng>(rng: &mut R, n: usize) -> Vec<u32> {
    let mut mult = vec![0u32; n];
    for _ in 0..n {
        mult[rng.random_range(0..n)] += 1;
    }
    mult
}

fn fit(
    x: &ArrayView2<f64>,
    target: Target<'_>,
    kind: ForestKind,
    hp: &HyperParams,
    targets: Vec<u32>,
) -> ForestModel {
    let n = x.nrows();
    let nf = x.ncols();
    let data = row_major(x);
    let mtry = hp.mtry(nf);
    let tree_seeds: Vec<u64> = (0..hp.n_trees).map(|t| tree_seed(hp, t)).collect();
    let order: Vec<Vec<(f64, u32)>> = (0..nf)
        .into_par_iter()
        .map(|f| {
            let mut o: Vec<(f64, u32)> = (0..n).map(|r| (data[r * nf + f], r as u32)).collect();
            o.sort_by(|a, b| a.0.total_cmp(&b.0));
            o
        })
        .collect();
    let trees: Vec<Tree> = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = seed::rng(s);
            let mult = bootstrap(&mut rng, n);
            Builder::new(
                nf,
                target,
                &mult,
                &order,
                hp.max_depth,
                hp.min_samples_leaf,
                mtry,
                rng,
            )
            .build()
        })
        .collect();
    ForestModel {
        version: MODEL_VERSION,
        kind,
        hyperparams: hp.clone(),
        feature_count: nf,
        n_train: n,
        tree_seeds,
        trees,
        targets,
    }
}

/// Fit a bagged Gini classification forest.
pub fn fit_classifier(
    x: ArrayView2<f64>,
    y: &[bool],
    hp: &HyperParams,
) -> Result<ForestModel, ForestError> {
    check_inputs(&x, y.len(), hp)?;
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == y.len() {
        return Err(ForestError::DegenerateLabels);
    }
    let weight = hp.class_weight_positive;
    Ok(fit(
        &x,
        Target::Classes { labels: y, weight },
        ForestKind::Classifier,
        hp,
        Vec::new(),
    ))
}

/// Fit a quantile regression forest on strictly positive counts.
pub fn fit_qrf(x: ArrayView2<f64>, y: &[u32], hp: &HyperParams) -> Result<ForestModel, ForestError> {
    check_inputs(&x, y.len(), hp)?;
    if let Some(row) = y.iter().position(|&v| v == 0) {
        return Err(ForestError::ZeroTarget { row });
    }
    let values: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    Ok(fit(
        &x,
        Target::Values(&values),
        ForestKind::QuantileRegressor,
        hp,
        y.to_vec(),
    ))
}

/// Evenly spaced, centred quantile levels `(j − 0.5)/m`, `j = 1..=m`.
pub fn sample_levels(m: usize) -> Vec<f64> {
    (1..=m).map(|j| (j as f64 - 0.5) / m as f64).collect()
}

impl ForestModel {
    /// Assemble a model from hand-built trees (validated like a loaded model).
    pub fn from_parts(
        kind: ForestKind,
        hyperparams: HyperParams,
        feature_count: usize,
        trees: Vec<Tree>,
        targets: Vec<u32>,
    ) -> Result<Self, ForestError> {
        let model = ForestModel {
            version: MODEL_VERSION,
            kind,
            n_train: targets.len(),
            tree_seeds: (0..trees.len()).map(|t| tree_seed(&hyperparams, t)).collect(),
            hyperparams,
            feature_count,
            trees,
            targets,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), ForestError> {
        if self.version != MODEL_VERSION {
            return Err(ForestError::UnsupportedVersion(self.version));
        }
        if self.trees.is_empty() {
            return Err(ForestError::Malformed("model has no trees".into()));
        }
        for tree in &self.trees {
            if tree.nodes.is_empty() {
                return Err(ForestError::Malformed("empty tree".into()));
            }
            if tree
                .max_feature_index()
                .is_some_and(|f| f as usize >= self.feature_count)
            {
                return Err(ForestError::Malformed("feature index out of range".into()));
            }
            for (i, node) in tree.nodes.iter().enumerate() {
                match node {
                    Node::Split { left, right, .. } => {
                        let n = tree.nodes.len() as u32;
                        if *left as usize <= i || *right as usize <= i || *left >= n || *right >= n {
                            return Err(ForestError::Malformed("bad child index".into()));
                        }
                    }
                    Node::Leaf(Leaf::Rows(rows)) => {
                        if self.kind != ForestKind::QuantileRegressor
                            || rows.is_empty()
                            || rows.iter().any(|&r| r as usize >= self.targets.len())
                        {
                            return Err(ForestError::Malformed("bad regression leaf".into()));
                        }
                    }
                    Node::Leaf(Leaf::Classes { positive, negative }) => {
                        if self.kind != ForestKind::Classifier || positive + negative == 0 {
                            return Err(ForestError::Malformed("bad classification leaf".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn expect_kind(&self, kind: ForestKind) -> Result<(), ForestError> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(ForestError::WrongKind {
                expected: kind,
                found: self.kind,
            })
        }
    }

    fn check_width(&self, width: usize) -> Result<(), ForestError> {
        if width == self.feature_count {
            Ok(())
        } else {
            Err(ForestError::ShapeMismatch {
                expected: self.feature_count,
                found: width,
            })
        }
    }

    /// Replay the bootstrap sample of tree `t` as a sorted list of row ids
    /// (with repeats).
    pub fn bootstrap_indices(&self, t: usize) -> Vec<u32> {
        let mut rng = seed::rng(self.tree_seeds[t]);
        let mult = bootstrap(&mut rng, self.n_train);
        mult.iter()
            .enumerate()
            .flat_map(|(r, &m)| std::iter::repeat_n(r as u32, m as usize))
            .collect()
    }

    fn proba_row(&self, x: &[f64]) -> f64 {
        let w = self.hyperparams.class_weight_positive;
        let total: f64 = self
            .trees
            .iter()
            .map(|t| match t.leaf(x) {
                Leaf::Classes { positive, negative } => {
                    let p = w * *positive as f64;
                    p / (p + *negative as f64)
                }
                Leaf::Rows(_) => unreachable!("validated classifier"),
            })
            .sum();
        total / self.trees.len() as f64
    }

    /// Positive-class probability per row.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>, ForestError> {
        self.expect_kind(ForestKind::Classifier)?;
        if x.nrows() == 0 {
            return Ok(Vec::new());
        }
        self.check_width(x.ncols())?;
        let x = x.as_standard_layout();
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|i| self.proba_row(x.row(i).as_slice().expect("standard layout")))
            .collect())
    }

    /// Per-training-row weights for a probe; sums to one.
    pub fn leaf_weights(&self, x: &[f64]) -> Result<Vec<(u32, f64)>, ForestError> {
        self.expect_kind(ForestKind::QuantileRegressor)?;
        self.check_width(x.len())?;
        let mut weights = vec![0.0; self.targets.len()];
        let t = self.trees.len() as f64;
        for tree in &self.trees {
            if let Leaf::Rows(rows) = tree.leaf(x) {
                let w = 1.0 / (t * rows.len() as f64);
                for &r in rows {
                    weights[r as usize] += w;
                }
            }
        }
        Ok(weights
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > 0.0)
            .map(|(r, w)| (r as u32, w))
            .collect())
    }

    /// Weighted response distribution as `(value, weight)` sorted by value.
    fn response_distribution(&self, x: &[f64]) -> Vec<(u32, f64)> {
        let t = self.trees.len() as f64;
        let mut pairs: Vec<(u32, f64)> = Vec::new();
        for tree in &self.trees {
            if let Leaf::Rows(rows) = tree.leaf(x) {
                let w = 1.0 / (t * rows.len() as f64);
                pairs.extend(rows.iter().map(|&r| (self.targets[r as usize], w)));
            }
        }
        pairs.sort_unstable_by_key(|p| p.0);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (v, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += w,
                _ => merged.push((v, w)),
            }
        }
        merged
    }

    /// Lower-value quantiles of the weighted response distribution.
    pub fn predict_quantiles(&self, x: &[f64], levels: &[f64]) -> Result<Vec<f64>, ForestError> {
        self.expect_kind(ForestKind::QuantileRegressor)?;
        self.check_width(x.len())?;
        if levels.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
            return Err(ForestError::InvalidQuantiles("levels must lie in (0, 1)".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ForestError::InvalidQuantiles(
                "levels must be strictly increasing".into(),
            ));
        }
        let dist = self.response_distribution(x);
        Ok(quantiles_from(&dist, levels)
            .into_iter()
            .map(|v| v as f64)
            .collect())
    }

    /// `m` sorted integer samples at levels `(j − 0.5)/m`, each at least 1.
    pub fn predict_samples(&self, x: &[f64], m: usize) -> Result<Vec<u32>, ForestError> {
        self.expect_kind(ForestKind::QuantileRegressor)?;
        self.check_width(x.len())?;
        let dist = self.response_distribution(x);
        // responses are integers, so rounding half up is the identity here
        Ok(quantiles_from(&dist, &sample_levels(m))
            .into_iter()
            .map(|v| v.max(1))
            .collect())
    }

    /// [`predict_samples`](Self::predict_samples) for every row, in parallel.
    pub fn predict_samples_batch(
        &self,
        x: ArrayView2<f64>,
        m: usize,
    ) -> Result<Vec<Vec<u32>>, ForestError> {
        self.expect_kind(ForestKind::QuantileRegressor)?;
        if x.nrows() == 0 {
            return Ok(Vec::new());
        }
        self.check_width(x.ncols())?;
        let x = x.as_standard_layout();
        (0..x.nrows())
            .into_par_iter()
            .map(|i| self.predict_samples(x.row(i).as_slice().expect("standard layout"), m))
            .collect()
    }

    pub fn to_json(&self) -> Result<String, ForestError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, ForestError> {
        let model: ForestModel = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ForestError> {
        let w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ForestError> {
        let model: ForestModel = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        model.validate()?;
        Ok(model)
    }
}

/// Smallest value whose cumulative weight reaches each level.
fn quantiles_from(dist: &[(u32, f64)], levels: &[f64]) -> Vec<u32> {
    let mut out = Vec::with_capacity(levels.len());
    let mut i = 0;
    let mut cum = dist.first().map_or(0.0, |d| d.1);
    for &q in levels {
        while cum < q - 1e-12 && i + 1 < dist.len() {
            i += 1;
            cum += dist[i].1;
        }
        out.push(dist[i].0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn hp(n_trees: usize) -> HyperParams {
        HyperParams {
            n_trees,
            max_features: 1.0,
            seed: 42,
            ..Default::default()
        }
    }

    #[test]
    fn separable_training_accuracy() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 / 100.0 - 1.0 + 0.005).collect();
        let y: Vec<bool> = xs.iter().map(|&v| v > 0.0).collect();
        let x = Array2::from_shape_vec((200, 1), xs).unwrap();
        let model = fit_classifier(x.view(), &y, &hp(10)).unwrap();
        let p = model.predict_proba(x.view()).unwrap();
        let correct = p.iter().zip(&y).filter(|(p, y)| (**p > 0.5) == **y).count();
        assert_eq!(correct, 200);
    }

    #[test]
    fn degenerate_labels_and_zero_targets() {
        let x = Array2::<f64>::zeros((4, 2));
        assert!(matches!(
            fit_classifier(x.view(), &[false; 4], &hp(2)),
            Err(ForestError::DegenerateLabels)
        ));
        assert!(matches!(
            fit_qrf(x.view(), &[1, 2, 0, 3], &hp(2)),
            Err(ForestError::ZeroTarget { row: 2 })
        ));
    }

    #[test]
    fn hand_built_leaf_frequency() {
        let tree = Tree {
            nodes: vec![Node::Leaf(Leaf::Classes {
                positive: 3,
                negative: 1,
            })],
        };
        let model =
            ForestModel::from_parts(ForestKind::Classifier, hp(1), 2, vec![tree], vec![]).unwrap();
        let p = model.predict_proba(Array2::zeros((1, 2)).view()).unwrap();
        assert_eq!(p, vec![0.75]);
        let empty = model.predict_proba(Array2::zeros((0, 2)).view()).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn single_leaf_quantiles() {
        let tree = Tree {
            nodes: vec![Node::Leaf(Leaf::Rows(vec![0, 1, 2, 3]))],
        };
        let model = ForestModel::from_parts(
            ForestKind::QuantileRegressor,
            hp(1),
            1,
            vec![tree],
            vec![1, 2, 3, 4],
        )
        .unwrap();
        let q = model.predict_quantiles(&[0.0], &[0.25, 0.5, 0.75]).unwrap();
        assert_eq!(q, vec![1.0, 2.0, 3.0]);
        assert!(model.predict_quantiles(&[0.0], &[0.5, 0.5]).is_err());
        assert!(model.predict_quantiles(&[0.0], &[0.0]).is_err());
    }

    #[test]
    fn level_grid() {
        assert_eq!(sample_levels(4), vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn constant_target_and_roundtrip() {
        let x = Array2::from_shape_fn((50, 3), |(i, j)| (i * (j + 1)) as f64);
        let model = fit_qrf(x.view(), &[5; 50], &hp(5)).unwrap();
        assert_eq!(model.predict_samples(&[1.0, 2.0, 3.0], 1000).unwrap(), vec![5; 1000]);
        let back = ForestModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        assert_eq!(model.bootstrap_indices(0).len(), 50);
    }

    #[test]
    fn wrong_kind_and_shape() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| (i + j) as f64);
        let y: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
        let model = fit_classifier(x.view(), &y, &hp(3)).unwrap();
        assert!(matches!(
            model.predict_samples(&[0.0, 0.0], 10),
            Err(ForestError::WrongKind { .. })
        ));
        assert!(matches!(
            model.predict_proba(Array2::zeros((1, 3)).view()),
            Err(ForestError::ShapeMismatch { .. })
        ));
    }
}
