//! Sample-based forecast container and its CSV / binary encodings.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::error::ErrorCategory;
use crate::{CellId, MonthId, WINDOW_MONTHS};

const MAGIC: &[u8; 8] = b"PGMFCST1";

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty sample vector for cell {0} month {1}")]
    EmptySample(CellId, MonthId),
    #[error("duplicate entry for cell {0} month {1}")]
    Duplicate(CellId, MonthId),
    #[error("window mismatch: {0} vs {1}")]
    WindowMismatch(MonthId, MonthId),
    #[error("coverage mismatch: {missing_count} missing (first: {missing:?}), {extra_count} extra (first: {extra:?})")]
    Coverage {
        missing_count: usize,
        missing: Vec<(CellId, MonthId)>,
        extra_count: usize,
        extra: Vec<(CellId, MonthId)>,
    },
    #[error("sample vector for cell {cell} month {month} has {found} entries, expected {expected}")]
    SampleCount {
        cell: CellId,
        month: MonthId,
        found: usize,
        expected: usize,
    },
    #[error("not a forecast binary file")]
    BadMagic,
}

impl ForecastError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ForecastError::Io(_) => ErrorCategory::Runtime,
            _ => ErrorCategory::Validation,
        }
    }
}

/// Predictive samples per (cell, month) for one prediction window.
///
/// Sample vectors are kept sorted; every scoring rule is invariant to order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ForecastSet {
    window_start: MonthId,
    entries: BTreeMap<(CellId, MonthId), Vec<u32>>,
}

impl ForecastSet {
    pub fn new(window_start: MonthId) -> Self {
        Self {
            window_start,
            entries: BTreeMap::new(),
        }
    }

    pub fn window_start(&self) -> MonthId {
        self.window_start
    }

    /// The twelve months of the window.
    pub fn window_months(&self) -> impl Iterator<Item = MonthId> {
        let start = self.window_start;
        (0..WINDOW_MONTHS as MonthId).map(move |i| start + i)
    }

    pub fn insert(
        &mut self,
        cell: CellId,
        month: MonthId,
        mut samples: Vec<u32>,
    ) -> Result<(), ForecastError> {
        if samples.is_empty() {
            return Err(ForecastError::EmptySample(cell, month));
        }
        samples.sort_unstable();
        if self.entries.insert((cell, month), samples).is_some() {
            return Err(ForecastError::Duplicate(cell, month));
        }
        Ok(())
    }

    pub fn get(&self, cell: CellId, month: MonthId) -> Option<&[u32]> {
        self.entries.get(&(cell, month)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in `(cell_id, month_id)` order.
    pub fn iter(&self) -> impl Iterator<Item = ((CellId, MonthId), &[u32])> {
        self.entries.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn cells(&self) -> Vec<CellId> {
        let mut cells: Vec<CellId> = self.entries.keys().map(|k| k.0).collect();
        cells.dedup();
        cells
    }

    /// Keep only the given cells.
    pub fn restrict<F: Fn(CellId) -> bool>(&self, keep: F) -> ForecastSet {
        ForecastSet {
            window_start: self.window_start,
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keep(k.0))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    /// Union of disjoint forecast sets over the same window.
    pub fn stitch<I: IntoIterator<Item = ForecastSet>>(
        window_start: MonthId,
        parts: I,
    ) -> Result<ForecastSet, ForecastError> {
        let mut out = ForecastSet::new(window_start);
        for part in parts {
            if part.window_start != window_start {
                return Err(ForecastError::WindowMismatch(window_start, part.window_start));
            }
            for (k, v) in part.entries {
                if out.entries.insert(k, v).is_some() {
                    return Err(ForecastError::Duplicate(k.0, k.1));
                }
            }
        }
        Ok(out)
    }

    /// Check the set covers exactly `cells` × the window months.
    pub fn check_coverage(&self, cells: &[CellId]) -> Result<(), ForecastError> {
        let mut missing = Vec::new();
        for &c in cells {
            for m in self.window_months() {
                if !self.entries.contains_key(&(c, m)) {
                    missing.push((c, m));
                }
            }
        }
        let expected: std::collections::BTreeSet<CellId> = cells.iter().copied().collect();
        let last = self.window_start + WINDOW_MONTHS as MonthId - 1;
        let extra: Vec<(CellId, MonthId)> = self
            .entries
            .keys()
            .filter(|(c, m)| !expected.contains(c) || *m < self.window_start || *m > last)
            .copied()
            .collect();
        if missing.is_empty() && extra.is_empty() {
            return Ok(());
        }
        Err(ForecastError::Coverage {
            missing_count: missing.len(),
            missing: missing.into_iter().take(5).collect(),
            extra_count: extra.len(),
            extra: extra.into_iter().take(5).collect(),
        })
    }

    /// Check every vector has exactly `m` samples.
    pub fn check_sample_count(&self, m: usize) -> Result<(), ForecastError> {
        match self.entries.iter().find(|(_, v)| v.len() != m) {
            None => Ok(()),
            Some((&(cell, month), v)) => Err(ForecastError::SampleCount {
                cell,
                month,
                found: v.len(),
                expected: m,
            }),
        }
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), ForecastError> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }

    /// CSV with header `cell_id,month_id,sample_0,...`; shorter vectors are
    /// padded with empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ForecastError> {
        let width = self.entries.values().map(Vec::len).max().unwrap_or(0);
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header = vec!["cell_id".to_string(), "month_id".to_string()];
        header.extend((0..width).map(|i| format!("sample_{i}")));
        wtr.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(width + 2);
        for (&(cell, month), samples) in &self.entries {
            record.clear();
            record.push(cell.to_string());
            record.push(month.to_string());
            record.extend(samples.iter().map(u32::to_string));
            record.resize(width + 2, String::new());
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>, window_start: MonthId) -> Result<Self, ForecastError> {
        Self::read_csv(BufReader::new(File::open(path)?), window_start)
    }

    /// Load a CSV whose window starts at its earliest month.
    pub fn load_csv_inferred(path: impl AsRef<Path>) -> Result<Self, ForecastError> {
        let mut fc = Self::load_csv(path, 0)?;
        fc.window_start = fc.entries.keys().map(|k| k.1).min().unwrap_or(0);
        Ok(fc)
    }

    pub fn read_csv<R: Read>(reader: R, window_start: MonthId) -> Result<Self, ForecastError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("cell_id") || header.get(1) != Some("month_id") {
            return Err(ForecastError::Parse {
                line: 1,
                message: "header must start with cell_id,month_id".into(),
            });
        }
        let mut out = ForecastSet::new(window_start);
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let line = i + 2;
            let parse_err = |message: String| ForecastError::Parse { line, message };
            let cell: CellId = record
                .get(0)
                .unwrap_or("")
                .parse()
                .map_err(|e| parse_err(format!("cell_id: {e}")))?;
            let month: MonthId = record
                .get(1)
                .unwrap_or("")
                .parse()
                .map_err(|e| parse_err(format!("month_id: {e}")))?;
            let fields: Vec<&str> = record.iter().skip(2).collect();
            let used = fields.iter().rposition(|f| !f.is_empty()).map_or(0, |p| p + 1);
            let samples = fields[..used]
                .iter()
                .map(|f| {
                    f.parse::<u32>()
                        .map_err(|e| parse_err(format!("sample {f:?}: {e}")))
                })
                .collect::<Result<Vec<u32>, _>>()?;
            out.insert(cell, month, samples)?;
        }
        Ok(out)
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<(), ForecastError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_binary(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Little-endian: magic, window start, entry count, then per entry
    /// `cell, month, len, samples...`.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<(), ForecastError> {
        w.write_all(MAGIC)?;
        w.write_all(&self.window_start.to_le_bytes())?;
        w.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        for (&(cell, month), samples) in &self.entries {
            w.write_all(&cell.to_le_bytes())?;
            w.write_all(&month.to_le_bytes())?;
            w.write_all(&(samples.len() as u32).to_le_bytes())?;
            for s in samples {
                w.write_all(&s.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self, ForecastError> {
        Self::read_binary(&mut BufReader::new(File::open(path)?))
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self, ForecastError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ForecastError::BadMagic);
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let window_start = MonthId::from_le_bytes(b4);
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8);
        let mut out = ForecastSet::new(window_start);
        for _ in 0..n {
            r.read_exact(&mut b4)?;
            let cell = CellId::from_le_bytes(b4);
            r.read_exact(&mut b4)?;
            let month = MonthId::from_le_bytes(b4);
            r.read_exact(&mut b4)?;
            let len = u32::from_le_bytes(b4) as usize;
            let mut buf = vec![0u8; len * 4];
            r.read_exact(&mut buf)?;
            let samples = buf
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            out.insert(cell, month, samples)?;
        }
        Ok(out)
    }
}
