//! Tune, train and predict a full twelve-month window.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::forecast::ForecastSet;
use crate::forest::HyperParams;
use crate::hurdle::{
    compose_window, predict_components, train_hurdle, ComponentForecast, CompositionStrategy,
    HurdleError, HurdleModel, Scope,
};
use crate::panel::PanelDataset;
use crate::spatial::ClusterAssignment;
use crate::tuning::{random_search, Stage, TuneConfig, TuneTrace};
use crate::{CellId, MonthId, Result, MAX_TIMESTEP, MIN_TIMESTEP};

/// Months between the last observed month and the window start.
pub const LEAD_MONTHS: MonthId = MIN_TIMESTEP as MonthId;

/// Last month of data available for a window starting at `window_start`.
pub fn feature_month_for(window_start: MonthId) -> MonthId {
    window_start - LEAD_MONTHS
}

/// Hyperparameters per timestep: (classifier, regressor).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TunedParams {
    pub per_k: BTreeMap<u32, (HyperParams, HyperParams)>,
}

impl TunedParams {
    /// The same pair for every timestep.
    pub fn uniform(cls: HyperParams, reg: HyperParams) -> Self {
        Self {
            per_k: (MIN_TIMESTEP..=MAX_TIMESTEP).map(|k| (k, (cls.clone(), reg.clone()))).collect(),
        }
    }

    fn get(&self, k: u32) -> Result<&(HyperParams, HyperParams)> {
        self.per_k
            .get(&k)
            .ok_or_else(|| HurdleError::MissingTimestep(k).into())
    }
}

/// Random search for both stages at every timestep.
pub fn tune_all(
    data: &PanelDataset,
    cutoff: MonthId,
    cfg: &TuneConfig,
) -> Result<(TunedParams, Vec<TuneTrace>)> {
    let mut params = TunedParams::default();
    let mut traces = Vec::new();
    for k in MIN_TIMESTEP..=MAX_TIMESTEP {
        let (cls, cls_trace) = random_search(data, Stage::Classifier, k, cutoff, cfg)?;
        let (reg, reg_trace) = random_search(data, Stage::Regressor, k, cutoff, cfg)?;
        params.per_k.insert(k, (cls.hyperparams, reg.hyperparams));
        traces.push(cls_trace);
        traces.push(reg_trace);
    }
    Ok((params, traces))
}

/// One model per timestep for the given scope.
pub fn train_all(
    data: &PanelDataset,
    cutoff: MonthId,
    params: &TunedParams,
    scope: Scope,
    scope_cells: Option<&BTreeSet<CellId>>,
) -> Result<Vec<HurdleModel>> {
    (MIN_TIMESTEP..=MAX_TIMESTEP)
        .map(|k| {
            let (cls, reg) = params.get(k)?;
            Ok(train_hurdle(data, k, cutoff, cls, reg, scope, scope_cells)?)
        })
        .collect()
}

/// Train global models at `feature_month_for(window_start)` and compose the window.
pub fn forecast_window(
    data: &PanelDataset,
    window_start: MonthId,
    params: &TunedParams,
    base_seed: u64,
    strategy: CompositionStrategy,
) -> Result<ForecastSet> {
    let cutoff = feature_month_for(window_start);
    let models = train_all(data, cutoff, params, Scope::Global, None)?;
    let comps = predict_components(&models, data, cutoff, None)?;
    Ok(compose_window(&comps, &comps, base_seed, strategy)?)
}

/// Cluster-local model sets. Clusters whose training data cannot support a
/// hurdle model are listed in `skipped`.
#[derive(Debug, Clone, Default)]
pub struct LocalModels {
    pub models: BTreeMap<u32, Vec<HurdleModel>>,
    pub skipped: BTreeMap<u32, String>,
}

pub fn train_local(
    data: &PanelDataset,
    cutoff: MonthId,
    params: &TunedParams,
    assignment: &ClusterAssignment,
) -> Result<LocalModels> {
    let mut out = LocalModels::default();
    for cluster in assignment.cluster_ids() {
        let cells: BTreeSet<CellId> = assignment.cells_of(cluster).into_iter().collect();
        match train_all(data, cutoff, params, Scope::Cluster(cluster), Some(&cells)) {
            Ok(models) => {
                out.models.insert(cluster, models);
            }
            Err(crate::Error::Hurdle(e @ HurdleError::InsufficientPositives { .. })) => {
                out.skipped.insert(cluster, e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Local components for every assigned cell; clusters without local models
/// fall back to the global components.
pub fn local_components(
    local: &LocalModels,
    global: &ComponentForecast,
    data: &PanelDataset,
    feature_month: MonthId,
    assignment: &ClusterAssignment,
) -> Result<ComponentForecast> {
    let mut out = ComponentForecast {
        feature_month,
        ..Default::default()
    };
    for cluster in assignment.cluster_ids() {
        let cells = assignment.cells_of(cluster);
        let part = match local.models.get(&cluster) {
            Some(models) => predict_components(models, data, feature_month, Some(&cells))?,
            None => {
                let keep: BTreeSet<CellId> = cells.into_iter().collect();
                global.restrict(|c| keep.contains(&c))
            }
        };
        out.merge(part);
    }
    Ok(out)
}
