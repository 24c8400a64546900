//! Partitioning stations by temporal behavior.
//!
//! [`kmeans_fit`] runs Lloyd iterations with the chosen metric in the
//! assignment step and pointwise-mean centroids. [`kmedoids_fit`] works on a
//! precomputed distance matrix and keeps actual stations as centers, which
//! is the metric-faithful option for CID. [`select_k`] picks the cluster
//! count with the best mean silhouette.

mod ari;
mod kmeans;
mod kmedoids;
mod select;
mod silhouette;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distance::Metric;
use crate::error::{Error, Result};

pub use ari::adjusted_rand_index;
pub use kmeans::{kmeans_fit, kmeans_fit_restarts};
pub use kmedoids::kmedoids_fit;
pub use select::{default_k_range, select_k, KScore, Selection};
pub use silhouette::{silhouette, SilhouetteReport};

pub const DEFAULT_MAX_ITER: usize = 300;

/// Seeded k-means++ restarts per k-means fit.
pub const DEFAULT_N_INIT: usize = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    #[serde(rename = "kmeans")]
    KMeans,
    #[serde(rename = "kmedoids")]
    KMedoids,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::KMedoids => "kmedoids",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Algorithm::KMeans),
            "kmedoids" => Ok(Algorithm::KMedoids),
            other => Err(Error::Parameter(format!(
                "unknown algorithm `{other}` (expected kmeans or kmedoids)"
            ))),
        }
    }
}

/// A fitted partition of the stations of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub algorithm: Algorithm,
    pub metric: Metric,
    pub seed: u64,
    /// Station ids in dataset order; `assignments[i]` belongs to `station_ids[i]`.
    pub station_ids: Vec<String>,
    pub assignments: Vec<usize>,
    /// Mean series (k-means) or medoid series (k-medoids), one per cluster.
    pub centroids: Vec<Vec<f64>>,
    /// Station index of each medoid, k-medoids only.
    pub medoids: Option<Vec<usize>>,
    /// Objective of the fit: summed squared distance to the assigned
    /// centroid for k-means, summed distance to the medoid for k-medoids.
    pub inertia: f64,
    /// Objective after each completed iteration.
    pub inertia_trace: Vec<f64>,
    pub n_iterations: usize,
    pub converged: bool,
}

impl ClusterModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| (a == cluster).then_some(i))
            .collect()
    }
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Parameter(format!(
            "k = {k} exceeds the number of stations ({n})"
        )));
    }
    Ok(())
}

/// k-means++ seeding over an arbitrary dissimilarity: the first center is
/// uniform, each further center is drawn with probability proportional to
/// its squared distance from the nearest chosen center. When every
/// remaining weight is zero the lowest unchosen index is taken.
pub(crate) fn plus_plus_seeds<R: Rng>(
    n: usize,
    k: usize,
    rng: &mut R,
    dist: impl Fn(usize, usize) -> f64,
) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut nearest: Vec<f64> = (0..n).map(|i| dist(i, first)).collect();

    while chosen.len() < k {
        let weights: Vec<f64> = nearest
            .iter()
            .zip(&taken)
            .map(|(&d, &t)| if t { 0.0 } else { d * d })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight has a positive entry")
        } else {
            taken
                .iter()
                .position(|t| !t)
                .expect("k <= n leaves a free index")
        };
        chosen.push(pick);
        taken[pick] = true;
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dist(i, pick));
        }
    }
    chosen
}
