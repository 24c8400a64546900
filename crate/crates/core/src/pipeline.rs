//! End-to-end orchestration shared by the CLI subcommands.

use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::str::FromStr;

use crate::cluster::{
    default_k_range, kmeans_fit, kmedoids_fit, select_k, silhouette, Algorithm, DEFAULT_MAX_ITER,
};
use crate::dataset::Dataset;
use crate::distance::{pairwise_matrix, Metric};
use crate::error::{Error, Result};
use crate::ingest::{exclude_stations, load_readings, GridSpec};
use crate::preprocess::{preprocess_all, NormalizationMethod};
use crate::report::{
    annotate_clusters, build_report, load_annotations, ClustersFile, MoranFile, RunReport,
};
use crate::spatial::{build_weights, moran_scan, Snapshot, WeightScheme, DEFAULT_PERMUTATIONS};
use crate::warning::Warning;

/// Number of snapshots taken by [`SnapshotSpec::Auto`].
pub const AUTO_SNAPSHOTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KChoice {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for KChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(KChoice::Auto);
        }
        s.parse()
            .map(KChoice::Fixed)
            .map_err(|_| Error::Parameter(format!("k must be `auto` or an integer, got `{s}`")))
    }
}

/// Parses `min:max`.
pub fn parse_k_range(s: &str) -> Result<RangeInclusive<usize>> {
    let bad = || Error::Parameter(format!("k range must look like `2:10`, got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok(lo.trim().parse().map_err(|_| bad())?..=hi.trim().parse().map_err(|_| bad())?)
}

/// Which snapshots a Moran scan evaluates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SnapshotSpec {
    /// Ten evenly spaced hours.
    #[default]
    Auto,
    Every(usize),
    Explicit(Vec<usize>),
    /// Per-station mean over the whole grid.
    Mean,
}

impl FromStr for SnapshotSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("invalid snapshot list `{s}`"));
        match s {
            "auto" => Ok(SnapshotSpec::Auto),
            "mean" => Ok(SnapshotSpec::Mean),
            _ => {
                if let Some(stride) = s.strip_prefix("every:") {
                    let stride: usize = stride.parse().map_err(|_| bad())?;
                    if stride == 0 {
                        return Err(bad());
                    }
                    return Ok(SnapshotSpec::Every(stride));
                }
                s.split(',')
                    .map(|t| t.trim().parse().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()
                    .map(SnapshotSpec::Explicit)
            }
        }
    }
}

impl SnapshotSpec {
    pub fn resolve(&self, n_steps: usize) -> Vec<Snapshot> {
        match self {
            SnapshotSpec::Auto => evenly_spaced(n_steps, AUTO_SNAPSHOTS)
                .into_iter()
                .map(Snapshot::Hour)
                .collect(),
            SnapshotSpec::Every(stride) => {
                (0..n_steps).step_by(*stride).map(Snapshot::Hour).collect()
            }
            SnapshotSpec::Explicit(ts) => ts.iter().copied().map(Snapshot::Hour).collect(),
            SnapshotSpec::Mean => vec![Snapshot::StationMean],
        }
    }
}

/// `count` indices at the centres of equal slices of `0..n_steps`.
pub fn evenly_spaced(n_steps: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..count)
        .map(|j| ((2 * j + 1) * n_steps) / (2 * count))
        .collect();
    out.dedup();
    out
}

/// Clusters a preprocessed dataset and packages the result as `clusters.json`.
pub fn cluster_dataset(
    ds: &Dataset,
    metric: Metric,
    algorithm: Algorithm,
    k: KChoice,
    k_range: Option<RangeInclusive<usize>>,
    seed: u64,
) -> Result<ClustersFile> {
    match k {
        KChoice::Auto => {
            let range = match k_range {
                Some(r) => r,
                None => default_k_range(ds.len())?,
            };
            let sel = select_k(ds, range, seed, metric, algorithm, DEFAULT_MAX_ITER)?;
            Ok(ClustersFile::new(
                &sel.model,
                Some(&sel.silhouette),
                sel.scores,
            ))
        }
        KChoice::Fixed(k) => {
            let dm = pairwise_matrix(ds, metric)?;
            let model = match algorithm {
                Algorithm::KMeans => kmeans_fit(ds, k, seed, metric, DEFAULT_MAX_ITER)?,
                Algorithm::KMedoids => kmedoids_fit(ds, &dm, k, seed, DEFAULT_MAX_ITER)?,
            };
            let sil = if k >= 2 {
                Some(silhouette(&dm, &model.assignments)?)
            } else {
                None
            };
            Ok(ClustersFile::new(&model, sil.as_ref(), Vec::new()))
        }
    }
}

/// Moran scan over a dataset with row-standardized weights.
pub fn spatial_scan(
    ds: &Dataset,
    scheme: WeightScheme,
    snapshots: &SnapshotSpec,
    n_permutations: usize,
    seed: u64,
) -> Result<MoranFile> {
    let w = build_weights(&ds.metas(), scheme, true)?;
    let (results, warnings) = moran_scan(
        ds,
        &w,
        &snapshots.resolve(ds.grid.n_steps()),
        n_permutations,
        seed,
    )?;
    Ok(MoranFile {
        scheme,
        row_standardized: true,
        n_permutations,
        seed,
        results,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub readings: PathBuf,
    pub meta: PathBuf,
    pub exclude: Vec<String>,
    pub normalization: NormalizationMethod,
    pub metric: Metric,
    pub algorithm: Algorithm,
    pub k: KChoice,
    pub k_range: Option<RangeInclusive<usize>>,
    pub seed: u64,
    pub scheme: WeightScheme,
    pub snapshots: SnapshotSpec,
    pub n_permutations: usize,
    pub annotations: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(readings: PathBuf, meta: PathBuf, seed: u64) -> Self {
        RunConfig {
            readings,
            meta,
            exclude: Vec::new(),
            normalization: NormalizationMethod::default(),
            metric: Metric::default(),
            algorithm: Algorithm::default(),
            k: KChoice::Auto,
            k_range: None,
            seed,
            scheme: WeightScheme::default(),
            snapshots: SnapshotSpec::Auto,
            n_permutations: DEFAULT_PERMUTATIONS,
            annotations: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub dataset: Dataset,
    pub clusters: ClustersFile,
    pub moran: MoranFile,
    pub report: RunReport,
}

/// Ingest, exclude, preprocess, cluster, scan and report.
pub fn run(config: &RunConfig) -> Result<RunOutputs> {
    let mut warnings: Vec<Warning> = Vec::new();
    let (raw, w) = load_readings(&config.readings, &config.meta, GridSpec::Infer)?;
    warnings.extend(w);
    let (raw, w) = exclude_stations(&raw, &config.exclude)?;
    warnings.extend(w);
    let (dataset, w) = preprocess_all(&raw, config.normalization)?;
    warnings.extend(w);

    let clusters = cluster_dataset(
        &dataset,
        config.metric,
        config.algorithm,
        config.k,
        config.k_range.clone(),
        config.seed,
    )?;
    let moran = spatial_scan(
        &dataset,
        config.scheme,
        &config.snapshots,
        config.n_permutations,
        config.seed,
    )?;
    warnings.extend(moran.warnings.iter().cloned());

    let labels = match &config.annotations {
        Some(path) => Some(annotate_clusters(&clusters, &load_annotations(path)?)?),
        None => None,
    };
    let report = build_report(&dataset, &clusters, Some(&moran), labels, warnings)?;
    Ok(RunOutputs {
        dataset,
        clusters,
        moran,
        report,
    })
}
