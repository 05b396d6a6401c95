//! Per-country model ranking with average ranks for ties.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{countries, Metric, ScoreReport, ScoringError};
use crate::MonthId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub window_start: MonthId,
    pub country: String,
    pub fatalities: u64,
    /// Metric value per model, aligned with [`RankTable::models`].
    pub values: Vec<f64>,
    /// Rank per model (1 = best), ties averaged.
    pub ranks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub metric: Metric,
    pub models: Vec<String>,
    pub entries: Vec<RankEntry>,
    pub mean_rank: Vec<f64>,
    /// Mean over countries with fatalities in the window; `None` if there are none.
    pub mean_rank_nonzero: Vec<Option<f64>>,
}

/// Ranks ascending by value with average ranks for exact ties.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Rank models within every (country, window) by `metric`.
pub fn rank_models(reports: &[ScoreReport], metric: Metric) -> Result<RankTable, ScoringError> {
    if reports.is_empty() {
        return Err(ScoringError::NoReports);
    }
    let mut models: Vec<String> = Vec::new();
    for r in reports {
        if r.per_country.is_empty() {
            return Err(ScoringError::NoCountryScores(r.model.clone()));
        }
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    let mut by_window: BTreeMap<MonthId, Vec<Option<&ScoreReport>>> = BTreeMap::new();
    for r in reports {
        let slot = models.iter().position(|m| *m == r.model).expect("collected");
        let row = by_window
            .entry(r.window_start)
            .or_insert_with(|| vec![None; models.len()]);
        if row[slot].is_some() {
            return Err(ScoringError::InconsistentCountries {
                window: r.window_start,
                detail: format!("model {} reported twice", r.model),
            });
        }
        row[slot] = Some(r);
    }

    let mut entries = Vec::new();
    for (&window, row) in &by_window {
        if let Some(missing) = row.iter().position(Option::is_none) {
            return Err(ScoringError::InconsistentCountries {
                window,
                detail: format!("no report for model {}", models[missing]),
            });
        }
        let row: Vec<&ScoreReport> = row.iter().map(|r| r.expect("checked")).collect();
        let reference = countries(row[0]);
        for r in &row[1..] {
            if countries(r) != reference {
                return Err(ScoringError::InconsistentCountries {
                    window,
                    detail: format!("{} and {} cover different countries", row[0].model, r.model),
                });
            }
        }
        for country in reference {
            let values: Vec<f64> = row
                .iter()
                .map(|r| metric.of(&r.per_country[country].metrics))
                .collect();
            entries.push(RankEntry {
                window_start: window,
                country: country.to_string(),
                fatalities: row[0].per_country[country].fatalities,
                ranks: average_ranks(&values),
                values,
            });
        }
    }

    let mean = |filter: &dyn Fn(&RankEntry) -> bool, k: usize| -> Option<f64> {
        let picked: Vec<f64> = entries.iter().filter(|e| filter(e)).map(|e| e.ranks[k]).collect();
        (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
    };
    let mean_rank = (0..models.len())
        .map(|k| mean(&|_| true, k).expect("entries non-empty"))
        .collect();
    let mean_rank_nonzero = (0..models.len())
        .map(|k| mean(&|e| e.fatalities > 0, k))
        .collect();
    Ok(RankTable {
        metric,
        models,
        entries,
        mean_rank,
        mean_rank_nonzero,
    })
}

impl RankTable {
    /// Long format: `window_start,country,fatalities,model,value,rank`.
    pub fn write_entries<W: Write>(&self, writer: W) -> Result<(), ScoringError> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        wtr.write_record(["window_start", "country", "fatalities", "model", "value", "rank"])?;
        for e in &self.entries {
            for (k, model) in self.models.iter().enumerate() {
                wtr.write_record([
                    e.window_start.to_string(),
                    e.country.clone(),
                    e.fatalities.to_string(),
                    model.clone(),
                    e.values[k].to_string(),
                    e.ranks[k].to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// `model,mean_rank,mean_rank_nonzero` (empty when undefined).
    pub fn write_summary<W: Write>(&self, writer: W) -> Result<(), ScoringError> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        wtr.write_record(["model", "mean_rank", "mean_rank_nonzero"])?;
        for (k, model) in self.models.iter().enumerate() {
            wtr.write_record([
                model.clone(),
                self.mean_rank[k].to_string(),
                self.mean_rank_nonzero[k].map_or(String::new(), |v| v.to_string()),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn mean_rank_of(&self, model: &str) -> Option<f64> {
        let k = self.models.iter().position(|m| m == model)?;
        Some(self.mean_rank[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_rank_ties() {
        assert_eq!(average_ranks(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(average_ranks(&[3.0, 1.0, 2.0, 1.0]), vec![4.0, 1.5, 3.0, 1.5]);
    }
}
