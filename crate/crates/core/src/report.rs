//! File schemas for cluster and Moran outputs, cluster annotation, and the
//! combined run report with its plot-ready CSV export.
//!
//! All maps are ordered and floats are written in shortest round-trip form,
//! so identical inputs produce byte-identical files.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::{Algorithm, ClusterModel, KScore, SilhouetteReport};
use crate::dataset::Dataset;
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::preprocess::NormalizationMethod;
use crate::spatial::{MoranResult, WeightScheme};
use crate::warning::Warning;

pub const AMBIGUOUS: &str = "ambiguous";
pub const UNLABELED: &str = "unlabeled";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteSummary {
    pub mean: f64,
    pub per_station: BTreeMap<String, f64>,
}

/// Contents of `clusters.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersFile {
    pub k: usize,
    pub seed: u64,
    pub metric: Metric,
    pub algo: Algorithm,
    pub assignments: BTreeMap<String, usize>,
    /// Absent when k = 1.
    pub silhouette: Option<SilhouetteSummary>,
    /// Mean silhouette per candidate k; empty when k was fixed.
    pub score_table: Vec<KScore>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub n_iterations: usize,
    pub converged: bool,
    /// Medoid station ids, k-medoids only.
    pub medoids: Option<Vec<String>>,
}

impl ClustersFile {
    pub fn new(
        model: &ClusterModel,
        silhouette: Option<&SilhouetteReport>,
        score_table: Vec<KScore>,
    ) -> Self {
        let assignments = model
            .station_ids
            .iter()
            .cloned()
            .zip(model.assignments.iter().copied())
            .collect();
        let silhouette = silhouette.map(|s| SilhouetteSummary {
            mean: s.mean,
            per_station: model
                .station_ids
                .iter()
                .cloned()
                .zip(s.per_station.iter().copied())
                .collect(),
        });
        ClustersFile {
            k: model.k,
            seed: model.seed,
            metric: model.metric,
            algo: model.algorithm,
            assignments,
            silhouette,
            score_table,
            centroids: model.centroids.clone(),
            inertia: model.inertia,
            n_iterations: model.n_iterations,
            converged: model.converged,
            medoids: model
                .medoids
                .as_ref()
                .map(|m| m.iter().map(|&i| model.station_ids[i].clone()).collect()),
        }
    }

    /// Checks the file against the dataset it claims to describe.
    pub fn check_against(&self, ds: &Dataset) -> Result<()> {
        let ids: HashSet<&str> = ds.stations.iter().map(|s| s.id()).collect();
        let assigned: HashSet<&str> = self.assignments.keys().map(String::as_str).collect();
        if ids != assigned {
            let mut missing: Vec<&str> = ids.difference(&assigned).copied().collect();
            let mut extra: Vec<&str> = assigned.difference(&ids).copied().collect();
            missing.sort_unstable();
            extra.sort_unstable();
            return Err(Error::Consistency(format!(
                "station sets differ (unassigned: {missing:?}, unknown: {extra:?})"
            )));
        }
        if let Some(c) = self.assignments.values().find(|&&c| c >= self.k) {
            return Err(Error::Consistency(format!(
                "cluster {c} out of range for k = {}",
                self.k
            )));
        }
        Ok(())
    }
}

/// Contents of `moran.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoranFile {
    pub scheme: WeightScheme,
    pub row_standardized: bool,
    pub n_permutations: usize,
    pub seed: u64,
    pub results: Vec<MoranResult>,
    pub warnings: Vec<Warning>,
}

impl MoranFile {
    /// Share of evaluated snapshots with p above `alpha`.
    pub fn fraction_not_significant(&self, alpha: f64) -> f64 {
        if self.results.is_empty() {
            return 0.0;
        }
        let count = self.results.iter().filter(|r| r.p_value > alpha).count();
        count as f64 / self.results.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub station_id: String,
    pub label: String,
}

/// Reads a `station_id,label` CSV.
pub fn load_annotations(path: &Path) -> Result<Vec<Annotation>> {
    read_annotations(File::open(path)?)
}

pub fn read_annotations<R: Read>(input: R) -> Result<Vec<Annotation>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Labels each cluster with the majority label of its annotated members.
/// Ties give `ambiguous`, clusters without annotated members `unlabeled`.
pub fn annotate_clusters(
    clusters: &ClustersFile,
    annotations: &[Annotation],
) -> Result<BTreeMap<usize, String>> {
    let mut votes: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); clusters.k];
    for a in annotations {
        let c = clusters
            .assignments
            .get(&a.station_id)
            .ok_or_else(|| Error::UnknownAnnotation(a.station_id.clone()))?;
        *votes[*c].entry(a.label.as_str()).or_default() += 1;
    }
    Ok(votes
        .iter()
        .enumerate()
        .map(|(c, tally)| {
            let top = tally.values().copied().max().unwrap_or(0);
            let leaders: Vec<&str> = tally
                .iter()
                .filter(|(_, &n)| n == top)
                .map(|(&label, _)| label)
                .collect();
            let label = match leaders.as_slice() {
                [] => UNLABELED,
                [only] => only,
                _ => AMBIGUOUS,
            };
            (c, label.to_owned())
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub station_count: usize,
    pub grid_start: String,
    pub grid_end: String,
    pub n_steps: usize,
    pub normalization: Option<NormalizationMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationRow {
    pub station_id: String,
    pub name: String,
    pub cluster: usize,
    pub silhouette: Option<f64>,
    /// Share of hours that were imputed rather than observed.
    pub imputed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub k: usize,
    pub algo: Algorithm,
    pub metric: Metric,
    pub seed: u64,
    pub inertia: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub sizes: Vec<usize>,
    pub mean_silhouette: Option<f64>,
    pub score_table: Vec<KScore>,
    pub medoids: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub dataset: DatasetSummary,
    pub clustering: ClusterSummary,
    pub stations: Vec<StationRow>,
    pub moran: Option<MoranFile>,
    pub annotations: Option<BTreeMap<usize, String>>,
    pub warnings: Vec<Warning>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// Assembles the run report. Fails when the cluster file does not cover
/// exactly the dataset's stations.
pub fn build_report(
    ds: &Dataset,
    clusters: &ClustersFile,
    moran: Option<&MoranFile>,
    annotations: Option<BTreeMap<usize, String>>,
    warnings: Vec<Warning>,
) -> Result<RunReport> {
    clusters.check_against(ds)?;
    if let Some(labels) = &annotations {
        if let Some(c) = labels.keys().find(|&&c| c >= clusters.k) {
            return Err(Error::Consistency(format!(
                "annotation for missing cluster {c}"
            )));
        }
    }

    let mut sizes = vec![0; clusters.k];
    for &c in clusters.assignments.values() {
        sizes[c] += 1;
    }
    let stations = ds
        .stations
        .iter()
        .map(|s| StationRow {
            station_id: s.id().to_owned(),
            name: s.meta.name.clone(),
            cluster: clusters.assignments[s.id()],
            silhouette: clusters
                .silhouette
                .as_ref()
                .and_then(|sil| sil.per_station.get(s.id()).copied()),
            imputed_fraction: s.missing_fraction(),
        })
        .collect();

    Ok(RunReport {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        dataset: DatasetSummary {
            station_count: ds.len(),
            grid_start: ds.grid.start().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            grid_end: ds.grid.end().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            n_steps: ds.grid.n_steps(),
            normalization: ds.normalization,
        },
        clustering: ClusterSummary {
            k: clusters.k,
            algo: clusters.algo,
            metric: clusters.metric,
            seed: clusters.seed,
            inertia: clusters.inertia,
            n_iterations: clusters.n_iterations,
            converged: clusters.converged,
            sizes,
            mean_silhouette: clusters.silhouette.as_ref().map(|s| s.mean),
            score_table: clusters.score_table.clone(),
            medoids: clusters.medoids.clone(),
        },
        stations,
        moran: moran.cloned(),
        annotations,
        warnings,
    })
}

/// Rows `station_id,cluster,hour_index,normalized_value`, stations in
/// dataset order.
pub fn write_plotdata<W: Write>(ds: &Dataset, clusters: &ClustersFile, out: W) -> Result<()> {
    clusters.check_against(ds)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["station_id", "cluster", "hour_index", "normalized_value"])?;
    for s in &ds.stations {
        let cluster = clusters.assignments[s.id()].to_string();
        for (t, v) in s.values.iter().enumerate() {
            w.write_record([s.id(), &cluster, &t.to_string(), &v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.json` and `plotdata.csv`.
pub fn emit_report(
    report: &RunReport,
    ds: &Dataset,
    clusters: &ClustersFile,
    json_path: &Path,
    plot_path: &Path,
) -> Result<()> {
    std::fs::write(json_path, report.to_json()?)?;
    let mut out = BufWriter::new(File::create(plot_path)?);
    write_plotdata(ds, clusters, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
