use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kmeans::check_series;
use super::{check_k, plus_plus_seeds, Algorithm, ClusterModel};
use crate::dataset::Dataset;
use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

/// Each medoid keeps its own cluster; every other station goes to the
/// nearest medoid, ties to the lowest cluster index.
fn assign(dm: &DistanceMatrix, medoids: &[usize]) -> Vec<usize> {
    (0..dm.n())
        .map(|i| {
            if let Some(c) = medoids.iter().position(|&m| m == i) {
                return c;
            }
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, &m) in medoids.iter().enumerate() {
                let d = dm.get(i, m);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

fn cost(dm: &DistanceMatrix, medoids: &[usize], assignments: &[usize]) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| dm.get(i, medoids[c]))
        .sum()
}

/// Best improving exchange of one medoid for one non-medoid, if any.
fn best_swap(dm: &DistanceMatrix, medoids: &[usize], current: f64) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    let mut trial = medoids.to_vec();
    for slot in 0..medoids.len() {
        for candidate in 0..dm.n() {
            if medoids.contains(&candidate) {
                continue;
            }
            trial[slot] = candidate;
            let c = cost(dm, &trial, &assign(dm, &trial));
            if c < best.map_or(current, |b| b.2) {
                best = Some((slot, candidate, c));
            }
        }
        trial[slot] = medoids[slot];
    }
    best
}

/// k-medoids on a precomputed matrix.
///
/// Medoids are seeded with k-means++ on the matrix. Each iteration first
/// moves every medoid to the member with the smallest summed distance to
/// the rest of its cluster; once that settles, it applies the best PAM swap
/// of a medoid with a non-medoid. The fit stops when neither step lowers
/// the total cost, so it never ends above a single-swap local optimum.
/// `ds` supplies the medoid series and must list the same stations as `dm`.
pub fn kmedoids_fit(
    ds: &Dataset,
    dm: &DistanceMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterModel> {
    let data = check_series(ds)?;
    if dm.station_ids() != ds.station_ids().as_slice() {
        return Err(Error::Consistency(
            "distance matrix and dataset list different stations".into(),
        ));
    }
    let n = dm.n();
    check_k(k, n)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut medoids = plus_plus_seeds(n, k, &mut rng, |i, j| dm.get(i, j));
    let mut assignments = assign(dm, &medoids);
    let mut total = cost(dm, &medoids, &assignments);

    let mut trace = Vec::new();
    let mut n_iterations = 0;
    let mut converged = false;
    while n_iterations < max_iter {
        n_iterations += 1;
        let mut moved = false;
        for (c, medoid) in medoids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignments[i] == c).collect();
            let within = |m: usize| members.iter().map(|&j| dm.get(m, j)).sum::<f64>();
            let mut best = *medoid;
            let mut best_sum = within(best);
            for &m in &members {
                let s = within(m);
                if s < best_sum {
                    best = m;
                    best_sum = s;
                }
            }
            if best != *medoid {
                *medoid = best;
                moved = true;
            }
        }
        if !moved {
            match best_swap(dm, &medoids, total) {
                Some((slot, candidate, _)) => medoids[slot] = candidate,
                None => {
                    trace.push(total);
                    converged = true;
                    break;
                }
            }
        }
        assignments = assign(dm, &medoids);
        total = cost(dm, &medoids, &assignments);
        trace.push(total);
    }

    Ok(ClusterModel {
        k,
        algorithm: Algorithm::KMedoids,
        metric: dm.metric(),
        seed,
        station_ids: ds.station_ids(),
        inertia: total,
        centroids: medoids.iter().map(|&m| data[m].to_vec()).collect(),
        medoids: Some(medoids),
        assignments,
        inertia_trace: trace,
        n_iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{pairwise_matrix, Metric};
    use crate::test_support::dataset_from;

    #[test]
    fn single_medoid_minimizes_total_distance() {
        let ds = dataset_from(&[
            vec![0.0, 1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0, 0.0],
            vec![0.2, 0.9, 0.1, 0.8],
            vec![3.0, 3.0, 2.0, 3.0],
            vec![0.1, 1.0, 0.0, 1.1],
        ]);
        let dm = pairwise_matrix(&ds, Metric::Cid).unwrap();
        let totals: Vec<f64> = (0..dm.n()).map(|i| dm.row(i).iter().sum()).collect();
        let best = totals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        for seed in 0..10 {
            let m = kmedoids_fit(&ds, &dm, 1, seed, 300).unwrap();
            assert_eq!(m.medoids.as_deref(), Some(&[best][..]));
            assert!((m.inertia - totals[best]).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_pair_has_zero_cost() {
        let ds = dataset_from(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]);
        let dm = pairwise_matrix(&ds, Metric::Cid).unwrap();
        let m = kmedoids_fit(&ds, &dm, 2, 9, 300).unwrap();
        assert_eq!(m.inertia, 0.0);
        assert_eq!(m.cluster_sizes(), vec![1, 1]);
    }

    #[test]
    fn no_single_swap_improves_the_result() {
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|i| {
                (0..16)
                    .map(|t| ((t * (i % 5 + 1)) as f64 * 0.4).cos() * (1.0 + i as f64 * 0.05))
                    .collect()
            })
            .collect();
        let ds = dataset_from(&rows);
        let dm = pairwise_matrix(&ds, Metric::Cid).unwrap();
        let m = kmedoids_fit(&ds, &dm, 3, 4, 300).unwrap();
        let medoids = m.medoids.clone().unwrap();
        // brute force over every single exchange
        for slot in 0..3 {
            for cand in 0..15 {
                if medoids.contains(&cand) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[slot] = cand;
                let c: f64 = (0..15)
                    .map(|i| {
                        trial
                            .iter()
                            .map(|&t| dm.get(i, t))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .sum();
                assert!(c >= m.inertia - 1e-9);
            }
        }
    }

    #[test]
    fn mismatched_matrix_is_rejected() {
        let ds = dataset_from(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let other = dataset_from(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.0]]);
        let dm = pairwise_matrix(&other, Metric::Cid).unwrap();
        assert!(matches!(
            kmedoids_fit(&ds, &dm, 1, 0, 10),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn cost_trace_never_increases() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                (0..20)
                    .map(|t| ((t * (i % 4 + 1)) as f64 * 0.7).sin() + i as f64 * 0.01)
                    .collect()
            })
            .collect();
        let ds = dataset_from(&rows);
        let dm = pairwise_matrix(&ds, Metric::Cid).unwrap();
        for seed in 0..5 {
            let m = kmedoids_fit(&ds, &dm, 3, seed, 300).unwrap();
            assert!(m.converged);
            for w in m.inertia_trace.windows(2) {
                assert!(w[1] <= w[0]);
            }
        }
    }
}
