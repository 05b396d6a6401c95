//! Per-cluster choice among global and local model components.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ClusterAssignment, SpatialError};
use crate::forecast::ForecastSet;
use crate::hurdle::{compose_window, ComponentForecast, CompositionStrategy};
use crate::panel::PanelDataset;
use crate::scoring::crps_sample;
use crate::{CellId, MonthId};

/// Source of the (classifier, regressor) components: G = global, L = local.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Combo {
    GG,
    GL,
    LG,
    LL,
}

impl Combo {
    /// In tie-break order: the all-global combination first.
    pub const ALL: [Combo; 4] = [Combo::GG, Combo::GL, Combo::LG, Combo::LL];

    pub fn classifier_is_local(self) -> bool {
        matches!(self, Combo::LG | Combo::LL)
    }

    pub fn regressor_is_local(self) -> bool {
        matches!(self, Combo::GL | Combo::LL)
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Composed forecasts of all four combinations for one earlier window.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorYear {
    pub window_start: MonthId,
    pub forecasts: BTreeMap<Combo, ForecastSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub choice: BTreeMap<u32, Combo>,
    pub mean_crps: BTreeMap<u32, BTreeMap<Combo, f64>>,
}

/// Pick, per cluster, the combination with the lowest mean CRPS over the
/// prior years' cells and months. Exact ties prefer the earlier entry of
/// [`Combo::ALL`].
pub fn select_global_local(
    assignment: &ClusterAssignment,
    years: &[PriorYear],
    actuals: &PanelDataset,
    required_years: usize,
) -> Result<Selection, SpatialError> {
    if years.len() < required_years || years.is_empty() {
        return Err(SpatialError::InsufficientHistory {
            found: years.len(),
            required: required_years.max(1),
        });
    }
    let all_cells: Vec<CellId> = assignment.cluster_of.keys().copied().collect();
    for year in years {
        for combo in Combo::ALL {
            let fc = year
                .forecasts
                .get(&combo)
                .ok_or(SpatialError::MissingCombination {
                    combo,
                    window_start: year.window_start,
                })?;
            fc.check_coverage(&all_cells)?;
            for m in fc.window_months() {
                if actuals.month_index(m).is_none() {
                    return Err(SpatialError::MissingActuals(m));
                }
            }
        }
    }

    let mut choice = BTreeMap::new();
    let mut mean_crps = BTreeMap::new();
    for cluster in assignment.cluster_ids() {
        let cells = assignment.cells_of(cluster);
        let mut scores: BTreeMap<Combo, f64> = BTreeMap::new();
        for combo in Combo::ALL {
            let mut total = 0.0;
            let mut n = 0usize;
            for year in years {
                let fc = &year.forecasts[&combo];
                for &cell in &cells {
                    for m in fc.window_months() {
                        let samples = fc.get(cell, m).expect("coverage checked");
                        let y = actuals.fatalities_at(cell, m).expect("months checked");
                        total += crps_sample(samples, y as f64).expect("non-empty");
                        n += 1;
                    }
                }
            }
            scores.insert(combo, total / n.max(1) as f64);
        }
        let best = Combo::ALL
            .into_iter()
            .fold(Combo::GG, |b, c| if scores[&c] < scores[&b] { c } else { b });
        choice.insert(cluster, best);
        mean_crps.insert(cluster, scores);
    }
    Ok(Selection { choice, mean_crps })
}

/// Compose the target window cluster by cluster from the chosen sources.
pub fn compose_selected(
    selection: &Selection,
    assignment: &ClusterAssignment,
    global: &ComponentForecast,
    local: &ComponentForecast,
    base_seed: u64,
    strategy: CompositionStrategy,
) -> Result<ForecastSet, SpatialError> {
    let mut parts = Vec::new();
    for cluster in assignment.cluster_ids() {
        let combo = selection.choice.get(&cluster).copied().unwrap_or(Combo::GG);
        let in_cluster = |c: CellId| assignment.cluster_of.get(&c) == Some(&cluster);
        let cls = if combo.classifier_is_local() { local } else { global };
        let reg = if combo.regressor_is_local() { local } else { global };
        parts.push(compose_window(
            &cls.restrict(in_cluster),
            &reg.restrict(in_cluster),
            base_seed,
            strategy,
        )?);
    }
    Ok(ForecastSet::stitch(global.window_start(), parts)?)
}
