use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{kmeans_fit, kmedoids_fit, silhouette, Algorithm, ClusterModel, SilhouetteReport};
use crate::dataset::Dataset;
use crate::distance::{pairwise_matrix, Metric};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub mean_silhouette: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub k_best: usize,
    /// One entry per candidate k, ascending.
    pub scores: Vec<KScore>,
    pub model: ClusterModel,
    pub silhouette: SilhouetteReport,
}

/// `[2, min(10, n - 1)]`.
pub fn default_k_range(n: usize) -> Result<RangeInclusive<usize>> {
    if n < 3 {
        return Err(Error::Parameter(format!(
            "automatic k selection needs at least 3 stations, got {n}"
        )));
    }
    Ok(2..=10.min(n - 1))
}

/// Fits every k in `k_range` with the same seed and keeps the one with the
/// highest mean silhouette on the `metric` distance matrix. Ties go to the
/// smaller k.
pub fn select_k(
    ds: &Dataset,
    k_range: RangeInclusive<usize>,
    seed: u64,
    metric: Metric,
    algorithm: Algorithm,
    max_iter: usize,
) -> Result<Selection> {
    let (k_min, k_max) = (*k_range.start(), *k_range.end());
    let n = ds.len();
    if k_min < 2 || k_min > k_max || k_max + 1 > n {
        return Err(Error::Parameter(format!(
            "k range {k_min}:{k_max} must satisfy 2 <= k_min <= k_max <= {}",
            n.saturating_sub(1)
        )));
    }
    let dm = pairwise_matrix(ds, metric)?;

    let mut scores = Vec::with_capacity(k_max - k_min + 1);
    let mut best: Option<(ClusterModel, SilhouetteReport)> = None;
    for k in k_range {
        let model = match algorithm {
            Algorithm::KMeans => kmeans_fit(ds, k, seed, metric, max_iter)?,
            Algorithm::KMedoids => kmedoids_fit(ds, &dm, k, seed, max_iter)?,
        };
        let report = silhouette(&dm, &model.assignments)?;
        scores.push(KScore {
            k,
            mean_silhouette: report.mean,
        });
        let better = best.as_ref().is_none_or(|(_, b)| report.mean > b.mean);
        if better {
            best = Some((model, report));
        }
    }

    let (model, silhouette) = best.expect("range is nonempty");
    Ok(Selection {
        k_best: model.k,
        scores,
        model,
        silhouette,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::dataset_from;

    fn blobs() -> Dataset {
        let mut rows = Vec::new();
        for i in 0..5 {
            let eps = i as f64 * 0.01;
            rows.push(vec![0.0 + eps, 1.0, 0.0, 1.0, 0.0]);
            rows.push(vec![5.0, 5.0 + eps, 5.0, 5.2, 5.0]);
        }
        dataset_from(&rows)
    }

    #[test]
    fn degenerate_range_returns_that_k() {
        let s = select_k(&blobs(), 3..=3, 1, Metric::Cid, Algorithm::KMeans, 300).unwrap();
        assert_eq!(s.k_best, 3);
        assert_eq!(s.scores.len(), 1);
        assert_eq!(s.scores[0].mean_silhouette, s.silhouette.mean);
    }

    #[test]
    fn picks_two_for_two_blobs() {
        for algo in [Algorithm::KMeans, Algorithm::KMedoids] {
            let s = select_k(&blobs(), 2..=4, 1, Metric::Cid, algo, 300).unwrap();
            assert_eq!(s.k_best, 2, "{algo}");
        }
    }

    #[test]
    fn bad_ranges_rejected() {
        let ds = blobs();
        assert!(select_k(&ds, 1..=3, 1, Metric::Cid, Algorithm::KMeans, 300).is_err());
        assert!(select_k(&ds, 2..=10, 1, Metric::Cid, Algorithm::KMeans, 300).is_err());
        #[allow(clippy::reversed_empty_ranges)]
        let reversed = 4..=3;
        assert!(select_k(&ds, reversed, 1, Metric::Cid, Algorithm::KMeans, 300).is_err());
    }

    #[test]
    fn default_range() {
        assert_eq!(default_k_range(31).unwrap(), 2..=10);
        assert_eq!(default_k_range(5).unwrap(), 2..=4);
        assert!(default_k_range(2).is_err());
    }
}
