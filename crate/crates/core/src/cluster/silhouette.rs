use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    pub k: usize,
    pub mean: f64,
    pub per_station: Vec<f64>,
}

/// Silhouette scores on a precomputed matrix.
///
/// Clusters are the distinct labels in `assignments`. Members of singleton
/// clusters score 0, as do stations whose `a` and `b` are both zero.
pub fn silhouette(dm: &DistanceMatrix, assignments: &[usize]) -> Result<SilhouetteReport> {
    let n = dm.n();
    if assignments.len() != n {
        return Err(Error::Shape(format!(
            "{} assignments for {n} stations",
            assignments.len()
        )));
    }
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &a) in assignments.iter().enumerate() {
        clusters.entry(a).or_default().push(i);
    }
    if clusters.len() < 2 {
        return Err(Error::UndefinedSilhouette);
    }

    let mean_to = |i: usize, members: &[usize]| -> f64 {
        members.iter().map(|&j| dm.get(i, j)).sum::<f64>() / members.len() as f64
    };

    let per_station: Vec<f64> = (0..n)
        .map(|i| {
            let own = &clusters[&assignments[i]];
            if own.len() == 1 {
                return 0.0;
            }
            let a = own.iter().map(|&j| dm.get(i, j)).sum::<f64>() / (own.len() - 1) as f64;
            let b = clusters
                .iter()
                .filter(|(&label, _)| label != assignments[i])
                .map(|(_, members)| mean_to(i, members))
                .fold(f64::INFINITY, f64::min);
            let scale = a.max(b);
            if scale == 0.0 {
                0.0
            } else {
                (b - a) / scale
            }
        })
        .collect();

    let mean = per_station.iter().sum::<f64>() / n as f64;
    Ok(SilhouetteReport {
        k: clusters.len(),
        mean,
        per_station,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::Metric;

    fn matrix(n: usize, f: impl Fn(usize, usize) -> f64) -> DistanceMatrix {
        let ids = (0..n).map(|i| format!("s{i}")).collect();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    data[i * n + j] = f(i.min(j), i.max(j));
                }
            }
        }
        DistanceMatrix::from_dense(ids, Metric::Euclidean, data).unwrap()
    }

    #[test]
    fn two_tight_blobs() {
        // Points 0,1 near each other, 2,3 near each other, blobs 10 apart.
        let pos: [f64; _] = [0.0, 0.1, 10.0, 10.1];
        let dm = matrix(4, |i, j| (pos[i] - pos[j]).abs());
        let r = silhouette(&dm, &[0, 0, 1, 1]).unwrap();
        // Station 0: a = 0.1, b = (10 + 10.1) / 2 = 10.05.
        let s0 = (10.05 - 0.1) / 10.05;
        assert!((r.per_station[0] - s0).abs() < 1e-12);
        assert!(r.mean > 0.9);
    }

    #[test]
    fn equidistant_points_score_zero() {
        let dm = matrix(6, |_, _| 1.0);
        let r = silhouette(&dm, &[0, 0, 1, 1, 2, 2]).unwrap();
        assert!(r.per_station.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn singleton_scores_zero() {
        let pos: [f64; _] = [0.0, 0.1, 10.0];
        let dm = matrix(3, |i, j| (pos[i] - pos[j]).abs());
        let r = silhouette(&dm, &[0, 0, 1]).unwrap();
        assert_eq!(r.per_station[2], 0.0);
    }

    #[test]
    fn one_cluster_is_undefined() {
        let dm = matrix(3, |_, _| 1.0);
        assert!(matches!(
            silhouette(&dm, &[4, 4, 4]),
            Err(Error::UndefinedSilhouette)
        ));
        assert!(matches!(silhouette(&dm, &[0, 1]), Err(Error::Shape(_))));
    }

    #[test]
    fn relabeling_keeps_mean() {
        let pos: [f64; _] = [0.0, 0.3, 4.0, 4.2, 9.0, 7.5];
        let dm = matrix(6, |i, j| (pos[i] - pos[j]).abs());
        let a = silhouette(&dm, &[0, 0, 1, 1, 2, 2]).unwrap();
        let b = silhouette(&dm, &[7, 7, 3, 3, 0, 0]).unwrap();
        assert_eq!(a.per_station, b.per_station);
        assert_eq!(a.mean, b.mean);
    }
}
