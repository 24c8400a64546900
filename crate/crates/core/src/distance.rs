//! Complexity-invariant distance (CID) and pairwise distance matrices.
//!
//! The complexity estimate of a series is the root of its summed squared
//! consecutive differences. CID multiplies the Euclidean distance by the
//! ratio of the larger to the smaller complexity estimate, so two series
//! only count as close when they are close pointwise *and* equally wiggly.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Complexity estimates below this are treated as zero when forming the
/// correction factor.
pub const COMPLEXITY_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Cid,
    Euclidean,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Cid => "cid",
            Metric::Euclidean => "euclidean",
        }
    }

    pub fn distance(&self, q: &[f64], c: &[f64]) -> Result<f64> {
        check_pair(q, c)?;
        Ok(self.distance_unchecked(q, c))
    }

    /// Caller guarantees equal lengths of at least 2.
    pub(crate) fn distance_unchecked(&self, q: &[f64], c: &[f64]) -> f64 {
        match self {
            Metric::Cid => cid_unchecked(q, c),
            Metric::Euclidean => euclidean_unchecked(q, c),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cid" => Ok(Metric::Cid),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(Error::Parameter(format!(
                "unknown metric `{other}` (expected cid or euclidean)"
            ))),
        }
    }
}

fn check_pair(q: &[f64], c: &[f64]) -> Result<()> {
    if q.len() != c.len() {
        return Err(Error::Shape(format!(
            "series lengths differ: {} vs {}",
            q.len(),
            c.len()
        )));
    }
    if q.len() < 2 {
        return Err(Error::TooShort(q.len()));
    }
    Ok(())
}

fn complexity_unchecked(x: &[f64]) -> f64 {
    x.windows(2)
        .fold(0.0, |acc, w| acc + (w[0] - w[1]) * (w[0] - w[1]))
        .sqrt()
}

fn euclidean_unchecked(q: &[f64], c: &[f64]) -> f64 {
    q.iter()
        .zip(c)
        .fold(0.0, |acc, (a, b)| acc + (a - b) * (a - b))
        .sqrt()
}

/// Ratio of the larger to the smaller complexity estimate, with the
/// degenerate cases resolved: two (near-)constant series give 1, and a
/// single constant series has its estimate clamped to [`COMPLEXITY_EPSILON`].
pub fn correction_factor(ce_q: f64, ce_c: f64) -> f64 {
    let (lo, hi) = if ce_q <= ce_c {
        (ce_q, ce_c)
    } else {
        (ce_c, ce_q)
    };
    if hi < COMPLEXITY_EPSILON {
        1.0
    } else {
        hi / lo.max(COMPLEXITY_EPSILON)
    }
}

fn cid_unchecked(q: &[f64], c: &[f64]) -> f64 {
    let cf = correction_factor(complexity_unchecked(q), complexity_unchecked(c));
    euclidean_unchecked(q, c) * cf
}

pub fn complexity_estimate(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::TooShort(x.len()));
    }
    Ok(complexity_unchecked(x))
}

pub fn euclidean(q: &[f64], c: &[f64]) -> Result<f64> {
    check_pair(q, c)?;
    Ok(euclidean_unchecked(q, c))
}

pub fn cid(q: &[f64], c: &[f64]) -> Result<f64> {
    check_pair(q, c)?;
    Ok(cid_unchecked(q, c))
}

/// Dense symmetric station-by-station distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    station_ids: Vec<String>,
    metric: Metric,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major entries, checking symmetry, a zero
    /// diagonal and finite non-negative entries.
    pub fn from_dense(station_ids: Vec<String>, metric: Metric, data: Vec<f64>) -> Result<Self> {
        let n = station_ids.len();
        if data.len() != n * n {
            return Err(Error::Shape(format!(
                "{} entries for {n} stations",
                data.len()
            )));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::Validation(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = data[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!(
                        "invalid entry {v} at ({i}, {j})"
                    )));
                }
                if v.to_bits() != data[j * n + i].to_bits() {
                    return Err(Error::Validation(format!("asymmetric entry at ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix {
            station_ids,
            metric,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.station_ids.len()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn station_ids(&self) -> &[String] {
        &self.station_ids
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.data[i * n..(i + 1) * n]
    }

    /// CSV with a header row and a leading column of station ids.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::from("station_id")];
        header.extend(self.station_ids.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in self.station_ids.iter().enumerate() {
            let mut record = vec![id.clone()];
            record.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Computes every pairwise distance between stations. The upper triangle is
/// evaluated and mirrored, so the result is bit-exactly symmetric.
pub fn pairwise_matrix(ds: &Dataset, metric: Metric) -> Result<DistanceMatrix> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 stations for a distance matrix, got {n}"
        )));
    }
    if ds.grid.n_steps() < 2 {
        return Err(Error::TooShort(ds.grid.n_steps()));
    }
    for s in &ds.stations {
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
    }

    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = metric.distance_unchecked(&ds.stations[i].values, &ds.stations[j].values);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix {
        station_ids: ds.station_ids(),
        metric,
        data,
    })
}
