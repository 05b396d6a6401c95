//! Grid-cell × month panel: data model, CSV ingestion, synthetic data and
//! supervised training frames.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use ndarray::Array2;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::seed;
use crate::{CellId, MonthId, MAX_TIMESTEP, MIN_TIMESTEP};

const FIXED_COLUMNS: [&str; 5] = ["cell_id", "month_id", "lat", "lon", "fatalities"];

/// Cap for the months-since-last-violence feature.
const MONTHS_SINCE_CAP: f64 = 240.0;

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad header: expected columns {expected:?} followed by features, found {found:?}")]
    BadHeader {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("validation error at data row {row}: {message}")]
    Validation { row: usize, message: String },
    #[error("validation error: {0}")]
    Invalid(String),
    #[error("sparse panel: missing observation for cell {cell_id} in month {month_id}")]
    SparsePanel { cell_id: CellId, month_id: MonthId },
    #[error("config error: {0}")]
    Config(String),
    #[error("timestep {0} outside the supported range {MIN_TIMESTEP}..={MAX_TIMESTEP}")]
    InvalidTimestep(u32),
    #[error("month {month} outside the dataset range {first}..={last}")]
    MonthOutOfRange {
        month: MonthId,
        first: MonthId,
        last: MonthId,
    },
    #[error(
        "empty training frame: cutoff {cutoff} minus timestep {timestep} is before the first month {first}"
    )]
    EmptyTrainingFrame {
        cutoff: MonthId,
        timestep: u32,
        first: MonthId,
    },
}

impl PanelError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            PanelError::Io(_) => ErrorCategory::Runtime,
            PanelError::Config(_)
            | PanelError::InvalidTimestep(_)
            | PanelError::MonthOutOfRange { .. }
            | PanelError::EmptyTrainingFrame { .. } => ErrorCategory::Config,
            _ => ErrorCategory::Validation,
        }
    }
}

/// A 0.5° grid cell identified by its centre.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridCell {
    pub cell_id: CellId,
    pub lat: f64,
    pub lon: f64,
}

impl GridCell {
    /// Integer lattice coordinates `(row, col)` of the cell centre.
    pub fn lattice(&self) -> Option<(i64, i64)> {
        Some((lattice_coord(self.lat)?, lattice_coord(self.lon)?))
    }
}

/// Centres lie at x.25 / x.75, so `2·v − 0.5` must be an integer.
fn lattice_coord(v: f64) -> Option<i64> {
    let scaled = 2.0 * v - 0.5;
    let rounded = scaled.round();
    ((scaled - rounded).abs() < 1e-9 && v.is_finite()).then_some(rounded as i64)
}

/// One (cell, month) row of a panel, borrowed from the dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelObservation<'a> {
    pub cell_id: CellId,
    pub month_id: MonthId,
    pub fatalities: u32,
    pub features: &'a [f64],
}

/// Dense grid-cell × month table. Immutable after construction.
///
/// Storage is month-major: row `m * n_cells + c` holds cell `c` (in ascending
/// id order) at month `first_month + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    cells: Vec<GridCell>,
    first_month: MonthId,
    n_months: usize,
    fatalities: Vec<u32>,
    features: Vec<f64>,
    feature_names: Vec<String>,
    cell_index: HashMap<CellId, usize>,
}

impl PanelDataset {
    /// Build a dataset from dense month-major arrays.
    pub fn new(
        mut cells: Vec<GridCell>,
        first_month: MonthId,
        n_months: usize,
        fatalities: Vec<u32>,
        features: Vec<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self, PanelError> {
        if cells.is_empty() || n_months == 0 {
            return Err(PanelError::Invalid("panel has no cells or no months".into()));
        }
        let unsorted = cells.windows(2).any(|w| w[0].cell_id >= w[1].cell_id);
        if unsorted {
            // reorder the dense arrays along with the cells
            let mut order: Vec<usize> = (0..cells.len()).collect();
            order.sort_by_key(|&i| cells[i].cell_id);
            if order.windows(2).any(|w| cells[w[0]].cell_id == cells[w[1]].cell_id) {
                return Err(PanelError::Invalid("duplicate cell_id".into()));
            }
            let nf = feature_names.len();
            let n_cells = cells.len();
            let mut fat = Vec::with_capacity(fatalities.len());
            let mut feat = Vec::with_capacity(features.len());
            for m in 0..n_months {
                for &c in &order {
                    let row = m * n_cells + c;
                    fat.push(fatalities[row]);
                    feat.extend_from_slice(&features[row * nf..(row + 1) * nf]);
                }
            }
            cells = order.iter().map(|&i| cells[i]).collect();
            return Self::new(cells, first_month, n_months, fat, feat, feature_names);
        }
        let rows = cells.len() * n_months;
        if fatalities.len() != rows || features.len() != rows * feature_names.len() {
            return Err(PanelError::Invalid(format!(
                "dense arrays do not match {} cells x {} months",
                cells.len(),
                n_months
            )));
        }
        for cell in &cells {
            if cell.lattice().is_none() {
                return Err(PanelError::Invalid(format!(
                    "cell {} at ({}, {}) is not on the 0.5 degree lattice",
                    cell.cell_id, cell.lat, cell.lon
                )));
            }
        }
        if let Some(bad) = features.iter().position(|v| !v.is_finite()) {
            return Err(PanelError::Invalid(format!(
                "non-finite feature value at flat index {bad}"
            )));
        }
        let cell_index = cells.iter().enumerate().map(|(i, c)| (c.cell_id, i)).collect();
        Ok(Self {
            cells,
            first_month,
            n_months,
            fatalities,
            features,
            feature_names,
            cell_index,
        })
    }

    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn cell_ids(&self) -> impl Iterator<Item = CellId> + '_ {
        self.cells.iter().map(|c| c.cell_id)
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_months(&self) -> usize {
        self.n_months
    }

    pub fn first_month(&self) -> MonthId {
        self.first_month
    }

    pub fn last_month(&self) -> MonthId {
        self.first_month + self.n_months as MonthId - 1
    }

    pub fn months(&self) -> RangeInclusive<MonthId> {
        self.first_month..=self.last_month()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn cell_index(&self, cell_id: CellId) -> Option<usize> {
        self.cell_index.get(&cell_id).copied()
    }

    pub fn month_index(&self, month: MonthId) -> Option<usize> {
        let offset = month.checked_sub(self.first_month)?;
        (offset >= 0 && (offset as usize) < self.n_months).then_some(offset as usize)
    }

    pub fn check_month(&self, month: MonthId) -> Result<usize, PanelError> {
        self.month_index(month).ok_or(PanelError::MonthOutOfRange {
            month,
            first: self.first_month,
            last: self.last_month(),
        })
    }

    fn row(&self, cell_idx: usize, month_idx: usize) -> usize {
        month_idx * self.cells.len() + cell_idx
    }

    /// Fatalities of the cell at position `cell_idx` in month index `month_idx`.
    pub fn fatality(&self, cell_idx: usize, month_idx: usize) -> u32 {
        self.fatalities[self.row(cell_idx, month_idx)]
    }

    pub fn features_of(&self, cell_idx: usize, month_idx: usize) -> &[f64] {
        let nf = self.feature_names.len();
        let row = self.row(cell_idx, month_idx);
        &self.features[row * nf..(row + 1) * nf]
    }

    /// Fatalities by cell id and month id.
    pub fn fatalities_at(&self, cell_id: CellId, month: MonthId) -> Option<u32> {
        Some(self.fatality(self.cell_index(cell_id)?, self.month_index(month)?))
    }

    /// Rows ordered by `(month_id, cell_id)`.
    pub fn observations(&self) -> impl Iterator<Item = PanelObservation<'_>> + '_ {
        (0..self.n_months).flat_map(move |m| {
            (0..self.cells.len()).map(move |c| PanelObservation {
                cell_id: self.cells[c].cell_id,
                month_id: self.first_month + m as MonthId,
                fatalities: self.fatality(c, m),
                features: self.features_of(c, m),
            })
        })
    }

    pub fn n_observations(&self) -> usize {
        self.fatalities.len()
    }

    /// Share of cell-months with at least one fatality.
    pub fn nonzero_share(&self) -> f64 {
        let nz = self.fatalities.iter().filter(|&&f| f > 0).count();
        nz as f64 / self.fatalities.len() as f64
    }

    /// Number of cell-months with fatalities in the inclusive month range.
    pub fn nonzero_count(&self, months: RangeInclusive<MonthId>) -> usize {
        self.months_clamped(months)
            .map(|m| {
                (0..self.cells.len())
                    .filter(|&c| self.fatality(c, m) > 0)
                    .count()
            })
            .sum()
    }

    fn months_clamped(&self, months: RangeInclusive<MonthId>) -> std::ops::Range<usize> {
        let lo = (*months.start()).max(self.first_month);
        let hi = (*months.end()).min(self.last_month());
        if lo > hi {
            return 0..0;
        }
        (lo - self.first_month) as usize..(hi - self.first_month) as usize + 1
    }

    /// Copy of the dataset with fatalities in months after `month` rewritten
    /// by `f(cell_id, month_id, value)`. Features are left untouched.
    pub fn with_fatalities_after<F>(&self, month: MonthId, mut f: F) -> PanelDataset
    where
        F: FnMut(CellId, MonthId, u32) -> u32,
    {
        let mut out = self.clone();
        for m in 0..self.n_months {
            let month_id = self.first_month + m as MonthId;
            if month_id <= month {
                continue;
            }
            for c in 0..self.cells.len() {
                let row = self.row(c, m);
                out.fatalities[row] = f(self.cells[c].cell_id, month_id, self.fatalities[row]);
            }
        }
        out
    }

    /// Map from lattice coordinates to cell position, for neighbourhood queries.
    pub fn lattice_index(&self) -> HashMap<(i64, i64), usize> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.lattice().map(|k| (k, i)))
            .collect()
    }
}

/// Read a panel CSV from disk.
pub fn load_panel(path: impl AsRef<Path>) -> Result<PanelDataset, PanelError> {
    read_panel(File::open(path)?)
}

pub fn read_panel<R: Read>(reader: R) -> Result<PanelDataset, PanelError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.len() < FIXED_COLUMNS.len()
        || header.iter().zip(FIXED_COLUMNS).any(|(h, e)| h.trim() != e)
    {
        return Err(PanelError::BadHeader {
            expected: FIXED_COLUMNS.iter().map(|s| s.to_string()).collect(),
            found: header,
        });
    }
    let feature_names: Vec<String> = header[FIXED_COLUMNS.len()..].to_vec();
    let width = header.len();

    let mut cells: BTreeMap<CellId, (f64, f64)> = BTreeMap::new();
    let mut rows: HashMap<(CellId, MonthId), (u32, Vec<f64>)> = HashMap::new();
    let mut months: BTreeSet<MonthId> = BTreeSet::new();

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let invalid = |message: String| PanelError::Validation { row, message };
        if record.len() != width {
            return Err(invalid(format!(
                "expected {width} fields, found {}",
                record.len()
            )));
        }
        let field = |j: usize| record.get(j).unwrap_or("").trim();
        let cell_id: CellId = field(0)
            .parse()
            .map_err(|e| invalid(format!("cell_id {:?}: {e}", field(0))))?;
        let month_id: MonthId = field(1)
            .parse()
            .map_err(|e| invalid(format!("month_id {:?}: {e}", field(1))))?;
        let lat: f64 = field(2)
            .parse()
            .map_err(|e| invalid(format!("lat {:?}: {e}", field(2))))?;
        let lon: f64 = field(3)
            .parse()
            .map_err(|e| invalid(format!("lon {:?}: {e}", field(3))))?;
        let fatalities: i64 = field(4)
            .parse()
            .map_err(|e| invalid(format!("fatalities {:?}: {e}", field(4))))?;
        if fatalities < 0 {
            return Err(invalid(format!("negative fatalities {fatalities}")));
        }
        let fatalities = u32::try_from(fatalities)
            .map_err(|_| invalid(format!("fatalities {fatalities} too large")))?;
        let features = (FIXED_COLUMNS.len()..width)
            .map(|j| {
                field(j)
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| invalid(format!("feature {:?} = {:?}", header[j], field(j))))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let probe = GridCell { cell_id, lat, lon };
        if probe.lattice().is_none() {
            return Err(invalid(format!(
                "cell {cell_id} centre ({lat}, {lon}) is not on the 0.5 degree lattice"
            )));
        }
        match cells.get(&cell_id) {
            Some(&(a, b)) if a != lat || b != lon => {
                return Err(invalid(format!(
                    "cell {cell_id} has inconsistent coordinates"
                )))
            }
            _ => {
                cells.insert(cell_id, (lat, lon));
            }
        }
        if rows.insert((cell_id, month_id), (fatalities, features)).is_some() {
            return Err(invalid(format!(
                "duplicate observation for cell {cell_id} month {month_id}"
            )));
        }
        months.insert(month_id);
    }

    let (Some(&first), Some(&last)) = (months.first(), months.last()) else {
        return Err(PanelError::Invalid("panel file has no data rows".into()));
    };
    let n_months = (last - first + 1) as usize;
    let cells: Vec<GridCell> = cells
        .into_iter()
        .map(|(cell_id, (lat, lon))| GridCell { cell_id, lat, lon })
        .collect();
    let nf = feature_names.len();
    let mut fatalities = Vec::with_capacity(cells.len() * n_months);
    let mut features = Vec::with_capacity(cells.len() * n_months * nf);
    for month_id in first..=last {
        for cell in &cells {
            let Some((f, x)) = rows.remove(&(cell.cell_id, month_id)) else {
                return Err(PanelError::SparsePanel {
                    cell_id: cell.cell_id,
                    month_id,
                });
            };
            fatalities.push(f);
            features.extend(x);
        }
    }
    PanelDataset::new(cells, first, n_months, fatalities, features, feature_names)
}

pub fn save_panel(data: &PanelDataset, path: impl AsRef<Path>) -> Result<(), PanelError> {
    let file = File::create(path)?;
    write_panel(data, std::io::BufWriter::new(file))
}

/// Write a panel as CSV, rows sorted by `(month_id, cell_id)`, LF line endings.
pub fn write_panel<W: Write>(data: &PanelDataset, writer: W) -> Result<(), PanelError> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let header: Vec<&str> = FIXED_COLUMNS
        .iter()
        .copied()
        .chain(data.feature_names.iter().map(String::as_str))
        .collect();
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for m in 0..data.n_months {
        for (c, cell) in data.cells.iter().enumerate() {
            record.clear();
            record.push(cell.cell_id.to_string());
            record.push((data.first_month + m as MonthId).to_string());
            record.push(cell.lat.to_string());
            record.push(cell.lon.to_string());
            record.push(data.fatality(c, m).to_string());
            record.extend(data.features_of(c, m).iter().map(f64::to_string));
            wtr.write_record(&record)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Parameters of the synthetic panel generator.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_cells: usize,
    pub n_months: usize,
    pub target_nonzero_share: f64,
    pub hotspot_count: usize,
    pub persistence: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_cells: 400,
            n_months: 120,
            target_nonzero_share: 0.004,
            hotspot_count: 3,
            persistence: 0.7,
            seed: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), PanelError> {
        let fail = |m: String| Err(PanelError::Config(m));
        if self.n_cells < 9 {
            return fail(format!("n_cells must be at least 9, got {}", self.n_cells));
        }
        if self.n_months < 24 {
            return fail(format!("n_months must be at least 24, got {}", self.n_months));
        }
        if !(self.target_nonzero_share > 0.0 && self.target_nonzero_share < 1.0) {
            return fail(format!(
                "target_nonzero_share must be in (0, 1), got {}",
                self.target_nonzero_share
            ));
        }
        if !(0.0..=1.0).contains(&self.persistence) {
            return fail(format!(
                "persistence must be in [0, 1], got {}",
                self.persistence
            ));
        }
        if self.hotspot_count == 0 || self.hotspot_count > self.n_cells {
            return fail(format!(
                "hotspot_count must be in 1..={}, got {}",
                self.n_cells, self.hotspot_count
            ));
        }
        Ok(())
    }
}

/// Names of the seven synthetic features.
pub const SYNTHETIC_FEATURES: [&str; 7] = [
    "hist_lag1",
    "hist_sum12",
    "hist_months_since",
    "risk_static",
    "hotspot_distance",
    "noise_a",
    "noise_b",
];

const ATTEMPTS: u64 = 200;
const SHARE_BAND: f64 = 0.10;
const MAX_CELL_RATE: f64 = 0.6;
const BACKGROUND_WEIGHT: f64 = 0.01;

/// Generate a synthetic zero-inflated panel.
///
/// Activity follows a per-cell "sticky" Bernoulli chain: with probability
/// `persistence` a cell keeps last month's state, otherwise it redraws from
/// its stationary rate. Rates are concentrated around `hotspot_count`
/// centres and normalised so their mean equals the target share. Several
/// activity draws are made and the first whose realised share is within 10%
/// of the target is kept (else the closest).
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<PanelDataset, PanelError> {
    config.validate()?;
    let n = config.n_cells;
    let width = (n as f64).sqrt().ceil() as usize;
    let cells: Vec<GridCell> = (0..n)
        .map(|i| GridCell {
            cell_id: i as CellId + 1,
            lat: 0.25 + 0.5 * (i / width) as f64,
            lon: 0.25 + 0.5 * (i % width) as f64,
        })
        .collect();

    let mut layout_rng = seed::derived_rng(config.seed, &[0x6c61_796f]);
    let centres: Vec<(usize, f64)> = sample_indices(&mut layout_rng, n, config.hotspot_count)
        .into_iter()
        .map(|i| (i, layout_rng.random_range(0.75..1.75)))
        .collect();
    let (risk, hotspot_distance): (Vec<f64>, Vec<f64>) = cells
        .iter()
        .map(|cell| {
            centres.iter().fold((0.0f64, f64::INFINITY), |(r, d), &(h, radius)| {
                let dist = ((cell.lat - cells[h].lat).powi(2) + (cell.lon - cells[h].lon).powi(2))
                    .sqrt();
                let bump = (-(dist * dist) / (2.0 * radius * radius)).exp();
                (r.max(bump), d.min(dist))
            })
        })
        .unzip();
    let rates = stationary_rates(&risk, config.target_nonzero_share);

    let n_months = config.n_months;
    let total = (n * n_months) as f64;
    let mut best: Option<(f64, Vec<u32>)> = None;
    for attempt in 0..ATTEMPTS {
        let mut rng = seed::derived_rng(config.seed, &[0x6163_7469, attempt]);
        let fatalities = simulate_activity(&mut rng, &rates, &risk, n_months, config.persistence);
        let share = fatalities.iter().filter(|&&f| f > 0).count() as f64 / total;
        let deviation = (share / config.target_nonzero_share - 1.0).abs();
        if best.as_ref().is_none_or(|(d, _)| deviation < *d) {
            best = Some((deviation, fatalities));
        }
        if deviation <= SHARE_BAND {
            break;
        }
    }
    let (_, fatalities) = best.expect("at least one attempt");

    let mut feature_rng = seed::derived_rng(config.seed, &[0x6665_6174]);
    let static_noise = Normal::new(0.0, 0.1).expect("valid normal");
    let distance_noise = Normal::new(0.0, 0.25).expect("valid normal");
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let risk_static: Vec<f64> = risk
        .iter()
        .map(|r| r + static_noise.sample(&mut feature_rng))
        .collect();
    let distance_feature: Vec<f64> = hotspot_distance
        .iter()
        .map(|d| d + distance_noise.sample(&mut feature_rng))
        .collect();

    let nf = SYNTHETIC_FEATURES.len();
    let mut features = Vec::with_capacity(n * n_months * nf);
    let mut last_violence: Vec<Option<usize>> = vec![None; n];
    let mut window: Vec<f64> = vec![0.0; n];
    for m in 0..n_months {
        for c in 0..n {
            let lag1 = if m > 0 { fatalities[(m - 1) * n + c] as f64 } else { 0.0 };
            let since = last_violence[c]
                .map(|u| ((m - u) as f64).min(MONTHS_SINCE_CAP))
                .unwrap_or(MONTHS_SINCE_CAP);
            features.extend_from_slice(&[
                lag1,
                window[c],
                since,
                risk_static[c],
                distance_feature[c],
                unit.sample(&mut feature_rng),
                unit.sample(&mut feature_rng),
            ]);
        }
        // roll the history state forward to include month m
        for c in 0..n {
            let f = fatalities[m * n + c];
            window[c] += f as f64;
            if m >= 12 {
                window[c] -= fatalities[(m - 12) * n + c] as f64;
            }
            if f > 0 {
                last_violence[c] = Some(m);
            }
        }
    }

    PanelDataset::new(
        cells,
        0,
        n_months,
        fatalities,
        features,
        SYNTHETIC_FEATURES.iter().map(|s| s.to_string()).collect(),
    )
}

/// Per-cell stationary activity rates with mean `share`, capped per cell.
fn stationary_rates(risk: &[f64], share: f64) -> Vec<f64> {
    let weights: Vec<f64> = risk.iter().map(|r| r * r + BACKGROUND_WEIGHT).collect();
    let n = weights.len() as f64;
    let mut rates: Vec<f64> = vec![0.0; weights.len()];
    let mut capped = vec![false; weights.len()];
    // water-filling: redistribute mass from capped cells to the rest
    loop {
        let capped_mass = capped.iter().filter(|&&c| c).count() as f64 * MAX_CELL_RATE;
        let free_weight: f64 = weights
            .iter()
            .zip(&capped)
            .filter(|(_, &c)| !c)
            .map(|(w, _)| w)
            .sum();
        let scale = ((share * n - capped_mass) / free_weight).max(0.0);
        let mut changed = false;
        for i in 0..weights.len() {
            if capped[i] {
                rates[i] = MAX_CELL_RATE;
                continue;
            }
            rates[i] = weights[i] * scale;
            if rates[i] > MAX_CELL_RATE {
                capped[i] = true;
                changed = true;
            }
        }
        if !changed {
            return rates;
        }
    }
}

fn simulate_activity<R: Rng>(
    rng: &mut R,
    rates: &[f64],
    risk: &[f64],
    n_months: usize,
    persistence: f64,
) -> Vec<u32> {
    let n = rates.len();
    let mut out = vec![0u32; n * n_months];
    let mut active: Vec<bool> = rates.iter().map(|&p| rng.random_bool(p)).collect();
    for m in 0..n_months {
        if m > 0 {
            for c in 0..n {
                if !rng.random_bool(persistence) {
                    active[c] = rng.random_bool(rates[c]);
                }
            }
        }
        for c in 0..n {
            if active[c] {
                let intensity = LogNormal::new(1.0 + 1.5 * risk[c], 0.9)
                    .expect("valid lognormal")
                    .sample(rng);
                let extra = Poisson::new(intensity)
                    .map(|p| p.sample(rng) as u32)
                    .unwrap_or(0);
                out[m * n + c] = 1 + extra;
            }
        }
    }
    out
}

/// Shifted training table for one forecast horizon.
///
/// Row `(cell, s)` carries the features observed at month `s` and the
/// fatalities observed at month `s + timestep_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedFrame {
    pub timestep_k: u32,
    pub features: Array2<f64>,
    pub occurred: Vec<bool>,
    pub counts: Vec<u32>,
    /// `(cell_id, feature month s)` per row.
    pub index: Vec<(CellId, MonthId)>,
}

impl SupervisedFrame {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> SupervisedFrame {
        SupervisedFrame {
            timestep_k: self.timestep_k,
            features: self.features.select(ndarray::Axis(0), rows),
            occurred: rows.iter().map(|&r| self.occurred[r]).collect(),
            counts: rows.iter().map(|&r| self.counts[r]).collect(),
            index: rows.iter().map(|&r| self.index[r]).collect(),
        }
    }

    pub fn rows_where<P: Fn(CellId, MonthId) -> bool>(&self, pred: P) -> Vec<usize> {
        self.index
            .iter()
            .enumerate()
            .filter(|(_, &(c, s))| pred(c, s))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn restrict_cells(&self, cells: &BTreeSet<CellId>) -> SupervisedFrame {
        self.select(&self.rows_where(|c, _| cells.contains(&c)))
    }

    /// Rows with a non-zero count label (the regressor's training universe).
    pub fn nonzero_rows(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.counts[i] > 0).collect()
    }

    pub fn nonzero_counts(&self) -> Vec<u32> {
        self.counts.iter().copied().filter(|&c| c > 0).collect()
    }
}

/// Build the training frame for horizon `timestep_k` with data cutoff `cutoff_month`.
pub fn build_supervised_frame(
    data: &PanelDataset,
    timestep_k: u32,
    cutoff_month: MonthId,
) -> Result<SupervisedFrame, PanelError> {
    if !(MIN_TIMESTEP..=MAX_TIMESTEP).contains(&timestep_k) {
        return Err(PanelError::InvalidTimestep(timestep_k));
    }
    data.check_month(cutoff_month)?;
    let last_feature_month = cutoff_month - timestep_k as MonthId;
    if last_feature_month < data.first_month() {
        return Err(PanelError::EmptyTrainingFrame {
            cutoff: cutoff_month,
            timestep: timestep_k,
            first: data.first_month(),
        });
    }
    let n_cells = data.n_cells();
    let n_feature_months = (last_feature_month - data.first_month() + 1) as usize;
    let n_rows = n_feature_months * n_cells;
    let nf = data.n_features();
    let mut features = Vec::with_capacity(n_rows * nf);
    let mut counts = Vec::with_capacity(n_rows);
    let mut index = Vec::with_capacity(n_rows);
    for m in 0..n_feature_months {
        let label_m = m + timestep_k as usize;
        for c in 0..n_cells {
            features.extend_from_slice(data.features_of(c, m));
            counts.push(data.fatality(c, label_m));
            index.push((data.cells()[c].cell_id, data.first_month() + m as MonthId));
        }
    }
    let occurred = counts.iter().map(|&c| c > 0).collect();
    Ok(SupervisedFrame {
        timestep_k,
        features: Array2::from_shape_vec((n_rows, nf), features)
            .expect("row-major buffer matches shape"),
        occurred,
        counts,
        index,
    })
}
