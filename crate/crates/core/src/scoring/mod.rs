//! Sample-based scoring rules, forecast reports and score/fatality
//! correlation.

mod kde;
mod rank;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kde::{map_point, silverman_bandwidth, GRID_POINTS};
pub use rank::{average_ranks, rank_models, RankEntry, RankTable};

use crate::error::ErrorCategory;
use crate::forecast::{ForecastError, ForecastSet};
use crate::panel::PanelDataset;
use crate::{CellId, MonthId};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("empty sample vector")]
    EmptySample,
    #[error("alpha must be in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("ignorance floor must be in (0, 1/bins), got {0}")]
    InvalidFloor(f64),
    #[error("invalid bin edges: {0}")]
    InvalidBins(String),
    #[error("observation {0} is outside the bin coverage")]
    OutOfBins(f64),
    #[error("forecast: {0}")]
    Forecast(#[from] ForecastError),
    #[error("forecast window month {0} is not in the actuals")]
    MonthOutsideActuals(MonthId),
    #[error("cell {0} has no country in the country map")]
    MissingCountry(CellId),
    #[error("inconsistent country sets across reports for window {window}: {detail}")]
    InconsistentCountries { window: MonthId, detail: String },
    #[error("no reports to rank")]
    NoReports,
    #[error("report for model {0} has no per-country scores")]
    NoCountryScores(String),
    #[error("at least 3 windows are required, got {0}")]
    TooFewWindows(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("undefined correlation: {0} has zero variance")]
    UndefinedCorrelation(&'static str),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl ScoringError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ScoringError::Io(_) => ErrorCategory::Runtime,
            ScoringError::InvalidAlpha(_)
            | ScoringError::InvalidFloor(_)
            | ScoringError::InvalidBins(_)
            | ScoringError::UnknownMetric(_) => ErrorCategory::Config,
            ScoringError::Forecast(e) => e.category(),
            _ => ErrorCategory::Validation,
        }
    }
}

fn is_sorted<T: Copy + Into<f64>>(s: &[T]) -> bool {
    s.windows(2).all(|w| w[0].into() <= w[1].into())
}

fn sorted_f64<T: Copy + Into<f64>>(s: &[T]) -> Vec<f64> {
    let mut v: Vec<f64> = s.iter().map(|&x| x.into()).collect();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// CRPS of the empirical distribution of `samples` at `y`:
/// `(1/m)Σ|x_i − y| − (1/m²)Σ(2i − m − 1)x_(i)`.
///
/// Sorted input is used as is; unsorted input is sorted first.
pub fn crps_sample<T: Copy + Into<f64>>(samples: &[T], y: f64) -> Result<f64, ScoringError> {
    if samples.is_empty() {
        return Err(ScoringError::EmptySample);
    }
    if is_sorted(samples) {
        Ok(crps_sorted(samples, y))
    } else {
        Ok(crps_sorted(&sorted_f64(samples), y))
    }
}

fn crps_sorted<T: Copy + Into<f64>>(sorted: &[T], y: f64) -> f64 {
    let m = sorted.len() as f64;
    let mut abs = 0.0;
    let mut spread = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let x: f64 = x.into();
        abs += (x - y).abs();
        spread += (2.0 * (i as f64 + 1.0) - m - 1.0) * x;
    }
    (abs / m - spread / (m * m)).max(0.0)
}

/// Lower-value empirical quantile: the smallest order statistic whose
/// cumulative share reaches `q`.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    let k = ((q * m as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[k.min(m) - 1]
}

/// Interval score of the central `1 − alpha` interval.
pub fn mis_sample<T: Copy + Into<f64>>(
    samples: &[T],
    y: f64,
    alpha: f64,
) -> Result<f64, ScoringError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ScoringError::InvalidAlpha(alpha));
    }
    if samples.is_empty() {
        return Err(ScoringError::EmptySample);
    }
    let sorted = sorted_f64(samples);
    let l = empirical_quantile(&sorted, alpha / 2.0);
    let u = empirical_quantile(&sorted, 1.0 - alpha / 2.0);
    Ok(interval_score(l, u, y, alpha))
}

pub fn interval_score(l: f64, u: f64, y: f64, alpha: f64) -> f64 {
    let mut s = u - l;
    if y < l {
        s += 2.0 / alpha * (l - y);
    }
    if y > u {
        s += 2.0 / alpha * (y - u);
    }
    s
}

/// Half-open bins `[edge_i, edge_{i+1})`; the last bin is unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgnBins {
    lower_edges: Vec<f64>,
}

impl Default for IgnBins {
    fn default() -> Self {
        Self {
            lower_edges: vec![
                0.0, 1.0, 2.0, 6.0, 11.0, 26.0, 51.0, 101.0, 251.0, 501.0, 1001.0,
            ],
        }
    }
}

impl IgnBins {
    pub fn new(lower_edges: Vec<f64>) -> Result<Self, ScoringError> {
        if lower_edges.first() != Some(&0.0) {
            return Err(ScoringError::InvalidBins("first edge must be 0".into()));
        }
        if lower_edges.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(ScoringError::InvalidBins(
                "edges must be strictly increasing".into(),
            ));
        }
        Ok(Self { lower_edges })
    }

    pub fn lower_edges(&self) -> &[f64] {
        &self.lower_edges
    }

    pub fn len(&self) -> usize {
        self.lower_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower_edges.is_empty()
    }

    pub fn bin_of(&self, v: f64) -> Option<usize> {
        if !v.is_finite() || v < 0.0 {
            return None;
        }
        Some(self.lower_edges.partition_point(|&e| e <= v) - 1)
    }
}

/// Ignorance score: `−log2` of the floor-mixed probability of `y`'s bin.
pub fn ign_sample<T: Copy + Into<f64>>(
    samples: &[T],
    y: f64,
    bins: &IgnBins,
    floor: f64,
) -> Result<f64, ScoringError> {
    if samples.is_empty() {
        return Err(ScoringError::EmptySample);
    }
    let b = bins.len() as f64;
    if !(floor > 0.0 && floor * b < 1.0) {
        return Err(ScoringError::InvalidFloor(floor));
    }
    let target = bins.bin_of(y).ok_or(ScoringError::OutOfBins(y))?;
    let mut hits = 0usize;
    for &s in samples {
        let bin = bins.bin_of(s.into()).ok_or(ScoringError::OutOfBins(s.into()))?;
        if bin == target {
            hits += 1;
        }
    }
    let p = hits as f64 / samples.len() as f64;
    Ok(-((1.0 - floor * b) * p + floor).log2())
}

/// Metrics for one forecast; every field is a mean over observations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub crps: f64,
    pub ign: f64,
    pub mis: f64,
    pub mse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Crps,
    Ign,
    Mis,
    Mse,
    Mae,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Crps, Metric::Ign, Metric::Mis, Metric::Mse, Metric::Mae];

    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            Metric::Crps => m.crps,
            Metric::Ign => m.ign,
            Metric::Mis => m.mis,
            Metric::Mse => m.mse,
            Metric::Mae => m.mae,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Crps => "crps",
            Metric::Ign => "ign",
            Metric::Mis => "mis",
            Metric::Mse => "mse",
            Metric::Mae => "mae",
        }
    }
}

impl FromStr for Metric {
    type Err = ScoringError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ScoringError::UnknownMetric(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryScore {
    pub n_obs: usize,
    pub fatalities: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub model: String,
    pub window_start: MonthId,
    pub n_obs: usize,
    pub fatalities: u64,
    pub metrics: Metrics,
    pub per_country: BTreeMap<String, CountryScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub mis_alpha: f64,
    pub ign_bins: IgnBins,
    pub ign_floor: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            mis_alpha: 0.1,
            ign_bins: IgnBins::default(),
            ign_floor: 1e-3,
        }
    }
}

/// Cell → country code.
pub type CountryMap = BTreeMap<CellId, String>;

pub fn load_country_map(path: impl AsRef<Path>) -> Result<CountryMap, ScoringError> {
    read_country_map(File::open(path)?)
}

pub fn read_country_map<R: Read>(reader: R) -> Result<CountryMap, ScoringError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = CountryMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let cell: CellId = rec
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| ScoringError::Parse {
                line,
                message: format!("cell_id: {e}"),
            })?;
        let code = rec.get(1).unwrap_or("").trim().to_string();
        if code.is_empty() {
            return Err(ScoringError::Parse {
                line,
                message: "empty country_code".into(),
            });
        }
        out.insert(cell, code);
    }
    Ok(out)
}

/// Per-observation scores for one forecast entry.
pub fn observation_metrics(
    samples: &[u32],
    y: u32,
    cfg: &ScoringConfig,
) -> Result<Metrics, ScoringError> {
    let yf = y as f64;
    let point = map_point(samples);
    Ok(Metrics {
        crps: crps_sample(samples, yf)?,
        ign: ign_sample(samples, yf, &cfg.ign_bins, cfg.ign_floor)?,
        mis: mis_sample(samples, yf, cfg.mis_alpha)?,
        mse: (point - yf).powi(2),
        mae: (point - yf).abs(),
    })
}

fn mean_metrics<'a, I: Iterator<Item = &'a Metrics>>(it: I) -> (usize, Metrics) {
    let mut n = 0usize;
    let mut s = Metrics::default();
    for m in it {
        n += 1;
        s.crps += m.crps;
        s.ign += m.ign;
        s.mis += m.mis;
        s.mse += m.mse;
        s.mae += m.mae;
    }
    let d = n.max(1) as f64;
    (
        n,
        Metrics {
            crps: s.crps / d,
            ign: s.ign / d,
            mis: s.mis / d,
            mse: s.mse / d,
            mae: s.mae / d,
        },
    )
}

/// Score a forecast against actuals; sums run in `(cell, month)` order so
/// results are independent of thread count.
pub fn score_forecast(
    model: &str,
    fc: &ForecastSet,
    actuals: &PanelDataset,
    country_map: Option<&CountryMap>,
    cfg: &ScoringConfig,
) -> Result<ScoreReport, ScoringError> {
    for m in fc.window_months() {
        if actuals.month_index(m).is_none() {
            return Err(ScoringError::MonthOutsideActuals(m));
        }
    }
    let cells: Vec<CellId> = actuals.cell_ids().collect();
    fc.check_coverage(&cells)?;
    if let Some(map) = country_map {
        if let Some(c) = cells.iter().find(|c| !map.contains_key(c)) {
            return Err(ScoringError::MissingCountry(*c));
        }
    }
    let entries: Vec<((CellId, MonthId), &[u32])> = fc.iter().collect();
    let per_obs: Vec<(u32, Metrics)> = entries
        .par_iter()
        .map(|&((cell, month), samples)| {
            let y = actuals
                .fatalities_at(cell, month)
                .expect("coverage checked");
            observation_metrics(samples, y, cfg).map(|m| (y, m))
        })
        .collect::<Result<_, _>>()?;

    let (n_obs, metrics) = mean_metrics(per_obs.iter().map(|(_, m)| m));
    let fatalities = per_obs.iter().map(|(y, _)| *y as u64).sum();
    let mut per_country = BTreeMap::new();
    if let Some(map) = country_map {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, ((cell, _), _)) in entries.iter().enumerate() {
            groups.entry(map[cell].as_str()).or_default().push(i);
        }
        for (country, idx) in groups {
            let (n, m) = mean_metrics(idx.iter().map(|&i| &per_obs[i].1));
            per_country.insert(
                country.to_string(),
                CountryScore {
                    n_obs: n,
                    fatalities: idx.iter().map(|&i| per_obs[i].0 as u64).sum(),
                    metrics: m,
                },
            );
        }
    }
    Ok(ScoreReport {
        model: model.to_string(),
        window_start: fc.window_start(),
        n_obs,
        fatalities,
        metrics,
        per_country,
    })
}

const REPORT_HEADER: [&str; 11] = [
    "model",
    "window_start",
    "scope",
    "country",
    "n_obs",
    "fatalities",
    "crps",
    "ign",
    "mis",
    "mse",
    "mae",
];

/// Long-format report CSV: one aggregate row per report plus one row per country.
pub fn write_reports<W: Write>(reports: &[ScoreReport], writer: W) -> Result<(), ScoringError> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    wtr.write_record(REPORT_HEADER)?;
    let row = |r: &ScoreReport, scope: &str, country: &str, n: usize, f: u64, m: &Metrics| {
        vec![
            r.model.clone(),
            r.window_start.to_string(),
            scope.to_string(),
            country.to_string(),
            n.to_string(),
            f.to_string(),
            m.crps.to_string(),
            m.ign.to_string(),
            m.mis.to_string(),
            m.mse.to_string(),
            m.mae.to_string(),
        ]
    };
    for r in reports {
        wtr.write_record(row(r, "aggregate", "", r.n_obs, r.fatalities, &r.metrics))?;
        for (c, s) in &r.per_country {
            wtr.write_record(row(r, "country", c, s.n_obs, s.fatalities, &s.metrics))?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_reports(reports: &[ScoreReport], path: impl AsRef<Path>) -> Result<(), ScoringError> {
    write_reports(reports, BufWriter::new(File::create(path)?))
}

pub fn load_reports(path: impl AsRef<Path>) -> Result<Vec<ScoreReport>, ScoringError> {
    read_reports(BufReader::new(File::open(path)?))
}

pub fn read_reports<R: Read>(reader: R) -> Result<Vec<ScoreReport>, ScoringError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != REPORT_HEADER {
        return Err(ScoringError::Parse {
            line: 1,
            message: format!("expected header {REPORT_HEADER:?}"),
        });
    }
    let mut out: Vec<ScoreReport> = Vec::new();
    let mut index: BTreeMap<(String, MonthId), usize> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let err = |message: String| ScoringError::Parse { line, message };
        let f = |j: usize| rec.get(j).unwrap_or("");
        let num = |j: usize| -> Result<f64, ScoringError> {
            f(j).parse::<f64>()
                .map_err(|e| err(format!("{}: {e}", REPORT_HEADER[j])))
        };
        let model = f(0).to_string();
        let window: MonthId = f(1).parse().map_err(|e| err(format!("window_start: {e}")))?;
        let n_obs: usize = f(4).parse().map_err(|e| err(format!("n_obs: {e}")))?;
        let fatalities: u64 = f(5).parse().map_err(|e| err(format!("fatalities: {e}")))?;
        let metrics = Metrics {
            crps: num(6)?,
            ign: num(7)?,
            mis: num(8)?,
            mse: num(9)?,
            mae: num(10)?,
        };
        match f(2) {
            "aggregate" => {
                index.insert((model.clone(), window), out.len());
                out.push(ScoreReport {
                    model,
                    window_start: window,
                    n_obs,
                    fatalities,
                    metrics,
                    per_country: BTreeMap::new(),
                });
            }
            "country" => {
                let &k = index
                    .get(&(model.clone(), window))
                    .ok_or_else(|| err("country row before its aggregate row".into()))?;
                out[k].per_country.insert(
                    f(3).to_string(),
                    CountryScore {
                        n_obs,
                        fatalities,
                        metrics,
                    },
                );
            }
            other => return Err(err(format!("unknown scope {other:?}"))),
        }
    }
    Ok(out)
}

/// Table-style text rendering of aggregate metrics, one row per report.
pub fn format_table(reports: &[ScoreReport]) -> String {
    let width = reports.iter().map(|r| r.model.len()).max().unwrap_or(5).max(5);
    let mut s = format!(
        "{:<width$} {:>8} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
        "model", "window", "CRPS", "IGN", "MIS", "MSE", "MAE"
    );
    for r in reports {
        let m = &r.metrics;
        s.push_str(&format!(
            "{:<width$} {:>8} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}\n",
            r.model, r.window_start, m.crps, m.ign, m.mis, m.mse, m.mae
        ));
    }
    s
}

/// Pearson correlations of per-window scores with total fatalities and with
/// non-zero cell-month counts.
pub fn score_fatality_correlation(
    scores: &[f64],
    fatalities: &[f64],
    nonzero_counts: &[f64],
) -> Result<(f64, f64), ScoringError> {
    if scores.len() != fatalities.len() {
        return Err(ScoringError::LengthMismatch(scores.len(), fatalities.len()));
    }
    if scores.len() != nonzero_counts.len() {
        return Err(ScoringError::LengthMismatch(scores.len(), nonzero_counts.len()));
    }
    if scores.len() < 3 {
        return Err(ScoringError::TooFewWindows(scores.len()));
    }
    Ok((
        pearson(scores, fatalities, "fatalities")?,
        pearson(scores, nonzero_counts, "non-zero counts")?,
    ))
}

fn pearson(a: &[f64], b: &[f64], b_name: &'static str) -> Result<f64, ScoringError> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 {
        return Err(ScoringError::UndefinedCorrelation("scores"));
    }
    if sbb == 0.0 {
        return Err(ScoringError::UndefinedCorrelation(b_name));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Total fatalities and non-zero cell-month count of each window.
pub fn window_totals(actuals: &PanelDataset, window_start: MonthId) -> (u64, usize) {
    let mut total = 0u64;
    let mut nonzero = 0usize;
    for m in window_start..window_start + crate::WINDOW_MONTHS as MonthId {
        if let Some(mi) = actuals.month_index(m) {
            for c in 0..actuals.n_cells() {
                let f = actuals.fatality(c, mi);
                total += f as u64;
                nonzero += (f > 0) as usize;
            }
        }
    }
    (total, nonzero)
}

/// Countries appearing in a report set, for consistency checks.
pub(crate) fn countries(r: &ScoreReport) -> BTreeSet<&str> {
    r.per_country.keys().map(String::as_str).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crps_examples() {
        assert_eq!(crps_sample(&[0.0, 2.0], 1.0).unwrap(), 0.5);
        assert_eq!(crps_sample(&[0u32; 10], 0.0).unwrap(), 0.0);
        assert_eq!(crps_sample(&[3.5f64], -1.0).unwrap(), 4.5);
        assert_eq!(crps_sample(&[2.0, 0.0], 1.0).unwrap(), 0.5);
        assert!(matches!(
            crps_sample::<f64>(&[], 1.0),
            Err(ScoringError::EmptySample)
        ));
    }

    #[test]
    fn mis_examples() {
        assert_eq!(mis_sample(&[0u32; 100], 0.0, 0.1).unwrap(), 0.0);
        assert_eq!(interval_score(0.0, 10.0, 5.0, 0.1), 10.0);
        assert!((interval_score(2.0, 4.0, 1.0, 0.1) - 22.0).abs() < 1e-12);
        // 20 samples: 5% quantile is the 1st, 95% the 19th order statistic
        let s: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(mis_sample(&s, 10.0, 0.1).unwrap(), 18.0);
        assert!(mis_sample(&s, 10.0, 0.0).is_err());
    }

    #[test]
    fn ign_examples() {
        let bins = IgnBins::default();
        let floor = 1e-3;
        let v = ign_sample(&[0u32; 50], 3.0, &bins, floor).unwrap();
        assert!((v - 9.965784284662087).abs() < 1e-12);
        let exact = ign_sample(&[3u32; 50], 4.0, &bins, 1e-12).unwrap();
        assert!(exact.abs() < 1e-9);
        let half = ign_sample(&[0u32, 0, 7, 8], 0.0, &bins, 1e-12).unwrap();
        assert!((half - 1.0).abs() < 1e-9);
        assert!(ign_sample(&[0u32], -1.0, &bins, floor).is_err());
        assert_eq!(bins.bin_of(1000.0), Some(9));
        assert_eq!(bins.bin_of(1001.0), Some(10));
    }

    #[test]
    fn correlation_checks() {
        let (r1, r2) =
            score_fatality_correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], &[3.0, 2.0, 1.0])
                .unwrap();
        assert!((r1 - 1.0).abs() < 1e-12 && (r2 + 1.0).abs() < 1e-12);
        assert!(matches!(
            score_fatality_correlation(&[1.0; 3], &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]),
            Err(ScoringError::UndefinedCorrelation(_))
        ));
        assert!(matches!(
            score_fatality_correlation(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]),
            Err(ScoringError::TooFewWindows(2))
        ));
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("CRPS".parse::<Metric>().unwrap(), Metric::Crps);
        assert!("foo".parse::<Metric>().is_err());
    }
}
