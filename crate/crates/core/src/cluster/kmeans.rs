use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_k, plus_plus_seeds, Algorithm, ClusterModel, DEFAULT_N_INIT};
use crate::dataset::Dataset;
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::rng::mix;

pub(crate) fn check_series(ds: &Dataset) -> Result<Vec<&[f64]>> {
    if ds.grid.n_steps() < 2 {
        return Err(Error::TooShort(ds.grid.n_steps()));
    }
    ds.stations
        .iter()
        .map(|s| {
            if s.values.len() != ds.grid.n_steps() {
                return Err(Error::Shape(format!(
                    "station `{}` has wrong length",
                    s.id()
                )));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "station `{}` has non-finite values",
                    s.id()
                )));
            }
            Ok(s.values.as_slice())
        })
        .collect()
}

/// Nearest centroid per station; ties go to the lowest centroid index.
fn assign(data: &[&[f64]], centroids: &[Vec<f64>], metric: Metric) -> Vec<usize> {
    data.iter()
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = metric.distance_unchecked(x, centroid);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

/// Reseeds each empty cluster with the station farthest from its current
/// centroid, taken only from clusters that can spare a member.
fn repair_empty(
    data: &[&[f64]],
    centroids: &mut [Vec<f64>],
    assignments: &mut [usize],
    metric: Metric,
) {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = f64::NEG_INFINITY;
        for (i, x) in data.iter().enumerate() {
            let own = assignments[i];
            if sizes[own] < 2 {
                continue;
            }
            let d = metric.distance_unchecked(x, &centroids[own]);
            if d > far_d {
                far = Some(i);
                far_d = d;
            }
        }
        let i = far.expect("an empty cluster implies another cluster with two members");
        sizes[assignments[i]] -= 1;
        sizes[c] = 1;
        assignments[i] = c;
        centroids[c] = data[i].to_vec();
    }
}

fn means(data: &[&[f64]], assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    let len = data[0].len();
    let mut sums = vec![vec![0.0; len]; k];
    let mut counts = vec![0usize; k];
    for (x, &a) in data.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(x.iter()) {
            *s += v;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        let count = count as f64;
        for s in sum.iter_mut() {
            *s /= count;
        }
    }
    sums
}

pub(crate) fn squared_cost(
    data: &[&[f64]],
    centroids: &[Vec<f64>],
    assignments: &[usize],
    metric: Metric,
) -> f64 {
    data.iter()
        .zip(assignments)
        .map(|(x, &a)| metric.distance_unchecked(x, &centroids[a]).powi(2))
        .sum()
}

/// Lloyd-style k-means under `metric`, seeded with metric-aware k-means++.
///
/// Runs [`DEFAULT_N_INIT`] seeded restarts and keeps the one with the lowest
/// inertia (first wins on ties). Each restart stops when an assignment pass
/// changes nothing or after `max_iter` centroid updates. Under CID the mean
/// update does not minimize the cost and the loop can cycle; a restart also
/// stops, unconverged, when it revisits an earlier assignment. The result is
/// fully determined by the dataset, `k`, `seed` and `metric`.
pub fn kmeans_fit(
    ds: &Dataset,
    k: usize,
    seed: u64,
    metric: Metric,
    max_iter: usize,
) -> Result<ClusterModel> {
    kmeans_fit_restarts(ds, k, seed, metric, max_iter, DEFAULT_N_INIT)
}

/// [`kmeans_fit`] with an explicit number of restarts. Restart `r` is
/// seeded from `(seed, r)`.
pub fn kmeans_fit_restarts(
    ds: &Dataset,
    k: usize,
    seed: u64,
    metric: Metric,
    max_iter: usize,
    n_init: usize,
) -> Result<ClusterModel> {
    let data = check_series(ds)?;
    check_k(k, data.len())?;
    if n_init == 0 {
        return Err(Error::Parameter("n_init must be at least 1".into()));
    }

    let mut best: Option<Lloyd> = None;
    for r in 0..n_init {
        let run = lloyd(&data, k, mix(seed, r as u64), metric, max_iter);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("n_init >= 1");

    Ok(ClusterModel {
        k,
        algorithm: Algorithm::KMeans,
        metric,
        seed,
        station_ids: ds.station_ids(),
        inertia: best.inertia,
        assignments: best.assignments,
        centroids: best.centroids,
        medoids: None,
        inertia_trace: best.trace,
        n_iterations: best.n_iterations,
        converged: best.converged,
    })
}

struct Lloyd {
    assignments: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    inertia: f64,
    trace: Vec<f64>,
    n_iterations: usize,
    converged: bool,
}

fn lloyd(data: &[&[f64]], k: usize, seed: u64, metric: Metric, max_iter: usize) -> Lloyd {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = plus_plus_seeds(data.len(), k, &mut rng, |i, j| {
        metric.distance_unchecked(data[i], data[j])
    });
    let mut centroids: Vec<Vec<f64>> = seeds.iter().map(|&i| data[i].to_vec()).collect();
    let mut assignments = assign(data, &centroids, metric);
    repair_empty(data, &mut centroids, &mut assignments, metric);

    let mut seen = HashSet::from([assignments.clone()]);
    let mut trace = Vec::new();
    let mut n_iterations = 0;
    let mut converged = false;
    while n_iterations < max_iter {
        n_iterations += 1;
        centroids = means(data, &assignments, k);
        trace.push(squared_cost(data, &centroids, &assignments, metric));

        let mut next = assign(data, &centroids, metric);
        repair_empty(data, &mut centroids, &mut next, metric);
        if next == assignments {
            converged = true;
            break;
        }
        if !seen.insert(next.clone()) {
            assignments = next;
            break;
        }
        assignments = next;
    }

    Lloyd {
        inertia: squared_cost(data, &centroids, &assignments, metric),
        assignments,
        centroids,
        trace,
        n_iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::dataset_from;

    #[test]
    fn k_equal_n_gives_singletons() {
        let ds = dataset_from(&[
            vec![0.0, 1.0, 0.0],
            vec![5.0, 5.0, 6.0],
            vec![2.0, 2.5, 3.0],
            vec![9.0, 1.0, 9.0],
        ]);
        for metric in [Metric::Cid, Metric::Euclidean] {
            let m = kmeans_fit(&ds, 4, 11, metric, 300).unwrap();
            assert_eq!(m.cluster_sizes(), vec![1, 1, 1, 1]);
            assert_eq!(m.inertia, 0.0);
        }
    }

    #[test]
    fn k_out_of_range_is_parameter_error() {
        let ds = dataset_from(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(
            kmeans_fit(&ds, 0, 1, Metric::Cid, 10),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            kmeans_fit(&ds, 3, 1, Metric::Cid, 10),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn duplicates_still_fill_every_cluster() {
        let ds = dataset_from(&vec![vec![1.0, 2.0, 1.0]; 5]);
        let m = kmeans_fit(&ds, 3, 5, Metric::Euclidean, 50).unwrap();
        assert!(m.cluster_sizes().iter().all(|&s| s >= 1));
        assert_eq!(m.inertia, 0.0);
    }

    #[test]
    fn repair_moves_farthest_station() {
        let a = [0.0, 0.0];
        let b = [0.0, 1.0];
        let c = [0.0, 3.0];
        let data: Vec<&[f64]> = vec![&a, &b, &c];
        let mut centroids = vec![vec![0.0, 0.5], vec![100.0, 100.0]];
        let mut assignments = vec![0, 0, 0];
        repair_empty(&data, &mut centroids, &mut assignments, Metric::Euclidean);
        assert_eq!(assignments, vec![0, 0, 1]);
        assert_eq!(centroids[1], vec![0.0, 3.0]);
    }

    #[test]
    fn ties_go_to_lowest_centroid() {
        let x = [1.0, 1.0];
        let data: Vec<&[f64]> = vec![&x];
        let centroids = vec![vec![0.0, 1.0], vec![2.0, 1.0]];
        assert_eq!(assign(&data, &centroids, Metric::Euclidean), vec![0]);
    }

    proptest::proptest! {
        #[test]
        fn cid_assign_step_never_raises_cost(
            rows in proptest::collection::vec(proptest::collection::vec(0.0..1.0f64, 6), 4..12),
            centroids in proptest::collection::vec(proptest::collection::vec(0.0..1.0f64, 6), 1..4),
            seed in 0u64..1000,
        ) {
            let data: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let k = centroids.len();
            let current: Vec<usize> = (0..data.len()).map(|i| (i + seed as usize) % k).collect();
            let before = squared_cost(&data, &centroids, &current, Metric::Cid);
            let after = squared_cost(&data, &centroids, &assign(&data, &centroids, Metric::Cid), Metric::Cid);
            proptest::prop_assert!(after <= before);
        }
    }
}
