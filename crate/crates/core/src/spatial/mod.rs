//! Density clustering of violent cells, merging of undersized clusters,
//! hull-based assignment of the remaining cells and the global-local
//! component selection.

mod ensemble;
pub mod geometry;

use std::collections::{BTreeMap, VecDeque};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ensemble::{compose_selected, select_global_local, Combo, PriorYear, Selection};
use geometry::Point;

use crate::error::ErrorCategory;
use crate::forecast::ForecastError;
use crate::hurdle::HurdleError;
use crate::panel::PanelDataset;
use crate::{CellId, MonthId};

/// Number of training cell-months in the reference dataset the default
/// `min_nonzero` was chosen for.
pub const REFERENCE_TRAINING_PGMS: usize = 4_378_740;

#[derive(Debug, Error)]
pub enum SpatialError {
    #[error("invalid cluster config: {0}")]
    Config(String),
    #[error("nothing to cluster: {found} cells with fatalities up to month {cutoff}, need at least {min_pts}")]
    NothingToCluster {
        found: usize,
        min_pts: usize,
        cutoff: MonthId,
    },
    #[error("no cluster formed: every violent cell is noise")]
    NoClusters,
    #[error("global data insufficient for any cluster: {total} non-zero cell-months in clusters, {required} required")]
    GlobalInsufficient { total: usize, required: usize },
    #[error("selection needs {required} prior years, got {found}")]
    InsufficientHistory { found: usize, required: usize },
    #[error("missing prior-year forecast for combination {combo} in window {window_start}")]
    MissingCombination { combo: Combo, window_start: MonthId },
    #[error("no actuals for month {0}")]
    MissingActuals(MonthId),
    #[error("cell {0} is not assigned to a cluster")]
    Unassigned(CellId),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Forecast(#[from] ForecastError),
    #[error("{0}")]
    Hurdle(#[from] HurdleError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl SpatialError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            SpatialError::Config(_) | SpatialError::InsufficientHistory { .. } => {
                ErrorCategory::Config
            }
            SpatialError::Forecast(e) => e.category(),
            SpatialError::Hurdle(e) => e.category(),
            SpatialError::Io(_) => ErrorCategory::Runtime,
            _ => ErrorCategory::Validation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    /// Neighbourhood radius in degrees.
    pub eps: f64,
    /// Neighbourhood size (including the point) that makes a core point.
    pub min_pts: usize,
    /// Minimum non-zero cell-months per surviving cluster.
    pub min_nonzero: usize,
    /// Replace `min_nonzero` by 5% of all non-zero training cell-months when
    /// the panel is under a tenth of the reference size.
    pub scale_min_nonzero: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            eps: 1.5,
            min_pts: 5,
            min_nonzero: 1000,
            scale_min_nonzero: true,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), SpatialError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(SpatialError::Config(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.min_pts == 0 || self.min_nonzero == 0 {
            return Err(SpatialError::Config(
                "min_pts and min_nonzero must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// The threshold actually applied for a panel with the given totals.
    pub fn effective_min_nonzero(&self, training_pgms: usize, total_nonzero: usize) -> usize {
        if self.scale_min_nonzero && training_pgms * 10 < REFERENCE_TRAINING_PGMS {
            ((0.05 * total_nonzero as f64).ceil() as usize).max(1)
        } else {
            self.min_nonzero
        }
    }
}

fn centre(data: &PanelDataset, ci: usize) -> Point {
    let c = data.cells()[ci];
    (c.lat, c.lon)
}

/// Non-zero cell-months per cell up to and including `cutoff`.
pub fn nonzero_counts(data: &PanelDataset, cutoff: MonthId) -> Vec<usize> {
    let last = (cutoff.min(data.last_month()) - data.first_month() + 1).max(0) as usize;
    (0..data.n_cells())
        .map(|ci| (0..last).filter(|&m| data.fatality(ci, m) > 0).count())
        .collect()
}

/// DBSCAN output over violent cells (positions into the panel's cells).
#[derive(Debug, Clone, PartialEq)]
pub struct Preliminary {
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
}

/// DBSCAN over the centres of cells with any fatalities up to `cutoff`.
pub fn cluster_violent_cells(
    data: &PanelDataset,
    cfg: &ClusterConfig,
    cutoff: MonthId,
) -> Result<Preliminary, SpatialError> {
    cfg.validate()?;
    let counts = nonzero_counts(data, cutoff);
    let violent: Vec<usize> = (0..data.n_cells()).filter(|&ci| counts[ci] > 0).collect();
    if violent.is_empty() || violent.len() < cfg.min_pts {
        return Err(SpatialError::NothingToCluster {
            found: violent.len(),
            min_pts: cfg.min_pts,
            cutoff,
        });
    }
    let points: Vec<Point> = violent.iter().map(|&ci| centre(data, ci)).collect();
    let labels = dbscan(&points, cfg.eps, cfg.min_pts);
    let n_clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut clusters = vec![Vec::new(); n_clusters];
    let mut noise = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        match label {
            Some(c) => clusters[*c].push(violent[i]),
            None => noise.push(violent[i]),
        }
    }
    Ok(Preliminary { clusters, noise })
}

/// Plain DBSCAN; a point is core when its closed `eps`-ball holds at least
/// `min_pts` points including itself. Returns a cluster label or `None`
/// (noise) per point; clusters are numbered in discovery order.
pub fn dbscan(points: &[Point], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let neighbours = |i: usize| -> Vec<usize> {
        (0..points.len())
            .filter(|&j| geometry::distance(points[i], points[j]) <= eps + 1e-12)
            .collect()
    };
    let mut labels: Vec<Option<usize>> = vec![None; points.len()];
    let mut visited = vec![false; points.len()];
    let mut next = 0;
    for i in 0..points.len() {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let n = neighbours(i);
        if n.len() < min_pts {
            continue;
        }
        let id = next;
        next += 1;
        labels[i] = Some(id);
        let mut queue: VecDeque<usize> = n.into_iter().collect();
        while let Some(j) = queue.pop_front() {
            if labels[j].is_none() {
                labels[j] = Some(id);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let nj = neighbours(j);
            if nj.len() >= min_pts {
                queue.extend(nj);
            }
        }
    }
    labels
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub absorbed: u32,
    pub absorbing: u32,
    pub centroid_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub cluster_id: u32,
    /// Convex hull of member cell centres as `[lat, lon]` vertices.
    pub polygon: Vec<Point>,
    pub centroid: Point,
    /// DBSCAN members (after merging); assignment adds further cells.
    pub members: Vec<CellId>,
    pub nonzero_pgms: usize,
}

/// Surviving clusters after merging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedClusters {
    pub min_nonzero: usize,
    pub clusters: Vec<ClusterInfo>,
    pub merge_log: Vec<MergeEvent>,
}

fn cluster_info(data: &PanelDataset, counts: &[usize], id: u32, members: &[usize]) -> ClusterInfo {
    let points: Vec<Point> = members.iter().map(|&ci| centre(data, ci)).collect();
    let polygon = geometry::convex_hull(&points);
    let mut ids: Vec<CellId> = members.iter().map(|&ci| data.cells()[ci].cell_id).collect();
    ids.sort_unstable();
    ClusterInfo {
        cluster_id: id,
        centroid: geometry::centroid(&polygon),
        polygon,
        members: ids,
        nonzero_pgms: members.iter().map(|&ci| counts[ci]).sum(),
    }
}

/// Merge clusters below the non-zero threshold into the cluster with the
/// nearest hull centroid, smallest first, until all clusters qualify.
pub fn merge_small_clusters(
    prelim: &Preliminary,
    data: &PanelDataset,
    cfg: &ClusterConfig,
    cutoff: MonthId,
) -> Result<MergedClusters, SpatialError> {
    let counts = nonzero_counts(data, cutoff);
    let training_pgms = data.n_cells() * counts_months(data, cutoff);
    let min_nonzero = cfg.effective_min_nonzero(training_pgms, counts.iter().sum());
    merge_with_threshold(prelim, data, &counts, min_nonzero)
}

fn counts_months(data: &PanelDataset, cutoff: MonthId) -> usize {
    (cutoff.min(data.last_month()) - data.first_month() + 1).max(0) as usize
}

/// Merge procedure with an explicit threshold and per-cell non-zero counts.
pub fn merge_with_threshold(
    prelim: &Preliminary,
    data: &PanelDataset,
    counts: &[usize],
    min_nonzero: usize,
) -> Result<MergedClusters, SpatialError> {
    if prelim.clusters.is_empty() {
        return Err(SpatialError::NoClusters);
    }
    let mut members: BTreeMap<u32, Vec<usize>> = prelim
        .clusters
        .iter()
        .enumerate()
        .map(|(i, m)| (i as u32 + 1, m.clone()))
        .collect();
    let total: usize = members.values().flatten().map(|&ci| counts[ci]).sum();
    if total < min_nonzero {
        return Err(SpatialError::GlobalInsufficient {
            total,
            required: min_nonzero,
        });
    }
    let mut info: BTreeMap<u32, ClusterInfo> = members
        .iter()
        .map(|(&id, m)| (id, cluster_info(data, counts, id, m)))
        .collect();
    let mut merge_log = Vec::new();
    loop {
        let small = info
            .values()
            .filter(|c| c.nonzero_pgms < min_nonzero)
            .min_by_key(|c| (c.nonzero_pgms, c.cluster_id))
            .map(|c| c.cluster_id);
        let Some(small) = small else { break };
        let from = info[&small].centroid;
        let (target, dist) = info
            .values()
            .filter(|c| c.cluster_id != small)
            .map(|c| (c.cluster_id, geometry::distance(from, c.centroid)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("total check guarantees a second cluster");
        let absorbed = members.remove(&small).expect("present");
        info.remove(&small);
        let m = members.get_mut(&target).expect("present");
        m.extend(absorbed);
        m.sort_unstable();
        info.insert(target, cluster_info(data, counts, target, m));
        merge_log.push(MergeEvent {
            absorbed: small,
            absorbing: target,
            centroid_distance: dist,
        });
    }
    Ok(MergedClusters {
        min_nonzero,
        clusters: info.into_values().collect(),
        merge_log,
    })
}

/// Final partition of all panel cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub cluster_of: BTreeMap<CellId, u32>,
    pub clusters: Vec<ClusterInfo>,
    pub merge_log: Vec<MergeEvent>,
    pub min_nonzero: usize,
}

/// Assign every cell: cluster members keep their cluster; other cells go to
/// the single hull containing them, the nearest centroid among several
/// containing hulls, or the nearest hull boundary. Ties go to the lower id.
pub fn assign_remaining_cells(merged: &MergedClusters, data: &PanelDataset) -> ClusterAssignment {
    let mut cluster_of = BTreeMap::new();
    for c in &merged.clusters {
        for &cell in &c.members {
            cluster_of.insert(cell, c.cluster_id);
        }
    }
    let pick = |cands: Vec<(u32, f64)>| -> u32 {
        cands
            .into_iter()
            .min_by(|a, b| {
                if (a.1 - b.1).abs() <= 1e-12 {
                    a.0.cmp(&b.0)
                } else {
                    a.1.total_cmp(&b.1)
                }
            })
            .expect("at least one cluster")
            .0
    };
    for cell in data.cells() {
        if cluster_of.contains_key(&cell.cell_id) {
            continue;
        }
        let p = (cell.lat, cell.lon);
        let inside: Vec<&ClusterInfo> = merged
            .clusters
            .iter()
            .filter(|c| geometry::contains(&c.polygon, p))
            .collect();
        let id = match inside.len() {
            1 => inside[0].cluster_id,
            0 => pick(
                merged
                    .clusters
                    .iter()
                    .map(|c| (c.cluster_id, geometry::boundary_distance(p, &c.polygon)))
                    .collect(),
            ),
            _ => pick(
                inside
                    .iter()
                    .map(|c| (c.cluster_id, geometry::distance(p, c.centroid)))
                    .collect(),
            ),
        };
        cluster_of.insert(cell.cell_id, id);
    }
    ClusterAssignment {
        cluster_of,
        clusters: merged.clusters.clone(),
        merge_log: merged.merge_log.clone(),
        min_nonzero: merged.min_nonzero,
    }
}

/// Cluster, merge and assign in one call.
pub fn build_clusters(
    data: &PanelDataset,
    cfg: &ClusterConfig,
    cutoff: MonthId,
) -> Result<ClusterAssignment, SpatialError> {
    let prelim = cluster_violent_cells(data, cfg, cutoff)?;
    let merged = merge_small_clusters(&prelim, data, cfg, cutoff)?;
    Ok(assign_remaining_cells(&merged, data))
}

impl ClusterAssignment {
    pub fn cluster_ids(&self) -> Vec<u32> {
        self.clusters.iter().map(|c| c.cluster_id).collect()
    }

    /// Cells of one cluster, ascending.
    pub fn cells_of(&self, cluster: u32) -> Vec<CellId> {
        self.cluster_of
            .iter()
            .filter(|(_, &c)| c == cluster)
            .map(|(&cell, _)| cell)
            .collect()
    }

    /// Non-zero cell-months per cluster over the full assignment.
    pub fn assigned_nonzero(&self, data: &PanelDataset, cutoff: MonthId) -> BTreeMap<u32, usize> {
        let counts = nonzero_counts(data, cutoff);
        let mut out: BTreeMap<u32, usize> = self.cluster_ids().into_iter().map(|c| (c, 0)).collect();
        for (ci, cell) in data.cells().iter().enumerate() {
            if let Some(c) = self.cluster_of.get(&cell.cell_id) {
                *out.entry(*c).or_default() += counts[ci];
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SpatialError> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        wtr.write_record(["cell_id", "cluster_id"])?;
        for (cell, c) in &self.cluster_of {
            wtr.write_record([cell.to_string(), c.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Hulls, centroids and merge log as JSON.
    pub fn write_hulls_json<W: Write>(&self, writer: W) -> Result<(), SpatialError> {
        #[derive(Serialize)]
        struct Hulls<'a> {
            min_nonzero: usize,
            clusters: &'a [ClusterInfo],
            merge_log: &'a [MergeEvent],
        }
        serde_json::to_writer_pretty(
            writer,
            &Hulls {
                min_nonzero: self.min_nonzero,
                clusters: &self.clusters,
                merge_log: &self.merge_log,
            },
        )?;
        Ok(())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), SpatialError> {
        let dir = dir.as_ref();
        self.write_csv(BufWriter::new(File::create(dir.join("clusters.csv"))?))?;
        self.write_hulls_json(BufWriter::new(File::create(dir.join("hulls.json"))?))?;
        Ok(())
    }

    /// Read back an assignment written by [`save`](Self::save).
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, SpatialError> {
        let dir = dir.as_ref();
        #[derive(Deserialize)]
        struct Hulls {
            min_nonzero: usize,
            clusters: Vec<ClusterInfo>,
            merge_log: Vec<MergeEvent>,
        }
        let hulls: Hulls =
            serde_json::from_reader(BufReader::new(File::open(dir.join("hulls.json"))?))?;
        let cluster_of = read_assignment_csv(File::open(dir.join("clusters.csv"))?)?;
        Ok(ClusterAssignment {
            cluster_of,
            clusters: hulls.clusters,
            merge_log: hulls.merge_log,
            min_nonzero: hulls.min_nonzero,
        })
    }
}

pub fn read_assignment_csv<R: Read>(reader: R) -> Result<BTreeMap<CellId, u32>, SpatialError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let parse = |j: usize| -> Result<u32, SpatialError> {
            rec.get(j)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|e| SpatialError::Parse {
                    line,
                    message: format!("{e}"),
                })
        };
        out.insert(parse(0)?, parse(1)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(r0: f64, c0: f64) -> Vec<Point> {
        let mut v = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                v.push((r0 + 0.5 * i as f64, c0 + 0.5 * j as f64));
            }
        }
        v
    }

    #[test]
    fn dbscan_two_blocks() {
        let mut pts = block(0.25, 0.25);
        pts.extend(block(10.25, 10.25));
        let labels = dbscan(&pts, 0.75, 3);
        assert!(labels.iter().all(Option::is_some));
        assert_eq!(labels.iter().flatten().max(), Some(&1));
        pts.push((30.25, 30.25));
        let labels = dbscan(&pts, 0.75, 3);
        assert_eq!(labels[18], None);
        let labels = dbscan(&pts[..18], 20.0, 3);
        assert!(labels.iter().all(|l| *l == Some(0)));
    }

    #[test]
    fn effective_threshold_scales_for_small_panels() {
        let cfg = ClusterConfig::default();
        assert_eq!(cfg.effective_min_nonzero(48_000, 190), 10);
        assert_eq!(cfg.effective_min_nonzero(REFERENCE_TRAINING_PGMS, 190), 1000);
    }
}
