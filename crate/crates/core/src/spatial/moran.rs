use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::weights::SpatialWeights;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{mix, stream_rng};
use crate::warning::Warning;

pub const DEFAULT_PERMUTATIONS: usize = 999;

/// Which cross-station vector a Moran test is run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Snapshot {
    /// Values at one grid index.
    Hour(usize),
    /// Each station's mean over the whole grid.
    StationMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoranResult {
    /// Grid index of the snapshot; `None` for the station-mean summary or a
    /// free-standing vector.
    pub timestamp: Option<usize>,
    pub i_observed: f64,
    /// Null expectation `-1 / (N - 1)`.
    pub e_i: f64,
    /// Two-sided permutation p-value.
    pub p_value: f64,
    pub n_permutations: usize,
    /// Mean and standard deviation of I over the permutations.
    pub perm_mean: f64,
    pub perm_sd: f64,
}

fn check(x: &[f64], w: &SpatialWeights) -> Result<f64> {
    if x.len() != w.n() {
        return Err(Error::Shape(format!(
            "{} values for {} stations",
            x.len(),
            w.n()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("values must be finite".into()));
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::ZeroVariance);
    }
    let total = w.total();
    if total <= 0.0 {
        return Err(Error::Parameter("spatial weights are all zero".into()));
    }
    Ok(total)
}

fn statistic(x: &[f64], w: &SpatialWeights, total: f64) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let z: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let mut cross = 0.0;
    for (i, zi) in z.iter().enumerate() {
        let lag: f64 = w.row(i).iter().zip(&z).map(|(wij, zj)| wij * zj).sum();
        cross += zi * lag;
    }
    let var: f64 = z.iter().map(|v| v * v).sum();
    (n as f64 / total) * cross / var
}

/// Global Moran's I:
/// `I = (N / W) * sum_ij w_ij (x_i - mean)(x_j - mean) / sum_i (x_i - mean)^2`.
pub fn morans_i(x: &[f64], w: &SpatialWeights) -> Result<f64> {
    let total = check(x, w)?;
    Ok(statistic(x, w, total))
}

/// Moran's I of `n_permutations` random relabelings of `x`.
///
/// Permutation `p` draws from ChaCha stream `p` under `seed`, so each value
/// depends only on `(seed, p)`.
pub fn permutation_distribution(
    x: &[f64],
    w: &SpatialWeights,
    n_permutations: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let total = check(x, w)?;
    Ok((0..n_permutations)
        .map(|p| {
            let mut rng = stream_rng(seed, p as u64);
            let mut shuffled = x.to_vec();
            shuffled.shuffle(&mut rng);
            statistic(&shuffled, w, total)
        })
        .collect())
}

/// Two-sided permutation test of Moran's I around `-1 / (N - 1)`.
pub fn permutation_test(
    x: &[f64],
    w: &SpatialWeights,
    n_permutations: usize,
    seed: u64,
) -> Result<MoranResult> {
    if n_permutations == 0 {
        return Err(Error::Parameter("need at least one permutation".into()));
    }
    let observed = morans_i(x, w)?;
    let e_i = -1.0 / (x.len() as f64 - 1.0);
    let perms = permutation_distribution(x, w, n_permutations, seed)?;

    let deviation = (observed - e_i).abs();
    let extreme = perms
        .iter()
        .filter(|&&i| (i - e_i).abs() >= deviation)
        .count();
    let count = perms.len() as f64;
    let perm_mean = perms.iter().sum::<f64>() / count;
    let perm_sd = (perms.iter().map(|i| (i - perm_mean).powi(2)).sum::<f64>() / count).sqrt();

    Ok(MoranResult {
        timestamp: None,
        i_observed: observed,
        e_i,
        p_value: (1 + extreme) as f64 / (n_permutations + 1) as f64,
        n_permutations,
        perm_mean,
        perm_sd,
    })
}

/// Runs [`permutation_test`] at each snapshot. Constant snapshots are
/// skipped and reported as warnings.
pub fn moran_scan(
    ds: &Dataset,
    w: &SpatialWeights,
    snapshots: &[Snapshot],
    n_permutations: usize,
    seed: u64,
) -> Result<(Vec<MoranResult>, Vec<Warning>)> {
    if snapshots.is_empty() {
        return Err(Error::Parameter("no snapshots requested".into()));
    }
    if w.n() != ds.len() {
        return Err(Error::Shape(format!(
            "weights cover {} stations, dataset has {}",
            w.n(),
            ds.len()
        )));
    }
    let mut results = Vec::new();
    let mut warnings = Vec::new();
    for (j, snap) in snapshots.iter().enumerate() {
        let (timestamp, x) = match *snap {
            Snapshot::Hour(t) => {
                if t >= ds.grid.n_steps() {
                    return Err(Error::Parameter(format!(
                        "snapshot {t} outside grid of {} steps",
                        ds.grid.n_steps()
                    )));
                }
                (Some(t), ds.snapshot(t))
            }
            Snapshot::StationMean => (
                None,
                ds.stations
                    .iter()
                    .map(|s| s.values.iter().sum::<f64>() / s.values.len() as f64)
                    .collect(),
            ),
        };
        match permutation_test(&x, w, n_permutations, mix(seed, j as u64)) {
            Ok(mut r) => {
                r.timestamp = timestamp;
                results.push(r);
            }
            Err(Error::ZeroVariance) => warnings.push(Warning::ConstantSnapshot { timestamp }),
            Err(e) => return Err(e),
        }
    }
    Ok((results, warnings))
}
