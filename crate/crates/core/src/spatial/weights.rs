use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::geo::haversine_km;
use crate::dataset::StationMeta;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum WeightScheme {
    /// `w[i][j] = 1 / d_km(i, j)`.
    #[default]
    InverseDistance,
    /// `w[i][j] = 1` when `j` is among the `k` nearest stations to `i`.
    Knn(usize),
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::InverseDistance => f.write_str("inverse_distance"),
            WeightScheme::Knn(k) => write!(f, "knn:{k}"),
        }
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "inverse_distance" {
            return Ok(WeightScheme::InverseDistance);
        }
        s.strip_prefix("knn:")
            .and_then(|k| k.parse().ok())
            .map(WeightScheme::Knn)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "unknown weight scheme `{s}` (expected inverse_distance or knn:<k>)"
                ))
            })
    }
}

impl From<WeightScheme> for String {
    fn from(s: WeightScheme) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for WeightScheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Dense spatial weights with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialWeights {
    n: usize,
    w: Vec<f64>,
    scheme: WeightScheme,
    row_standardized: bool,
}

impl SpatialWeights {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn row_standardized(&self) -> bool {
        self.row_standardized
    }

    /// Sum of all weights.
    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// Builds station-to-station weights from coordinates.
///
/// Ties among k-nearest candidates go to the lower station index. Row
/// standardization leaves all-zero rows untouched.
pub fn build_weights(
    metas: &[StationMeta],
    scheme: WeightScheme,
    row_standardize: bool,
) -> Result<SpatialWeights> {
    let n = metas.len();
    if n < 3 {
        return Err(Error::Parameter(format!(
            "spatial weights need at least 3 stations, got {n}"
        )));
    }
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = haversine_km((metas[i].lat, metas[i].lon), (metas[j].lat, metas[j].lon))?;
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut w = vec![0.0; n * n];
    match scheme {
        WeightScheme::InverseDistance => {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let d = dist[i * n + j];
                    if d == 0.0 {
                        return Err(Error::DegenerateDistance(
                            metas[i.min(j)].station_id.clone(),
                            metas[i.max(j)].station_id.clone(),
                        ));
                    }
                    w[i * n + j] = 1.0 / d;
                }
            }
        }
        WeightScheme::Knn(k) => {
            if k == 0 || k >= n {
                return Err(Error::Parameter(format!("knn needs 1 <= k < {n}, got {k}")));
            }
            for i in 0..n {
                let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                // stable sort keeps lower indices first among equal distances
                others.sort_by(|&a, &b| dist[i * n + a].total_cmp(&dist[i * n + b]));
                for &j in &others[..k] {
                    w[i * n + j] = 1.0;
                }
            }
        }
    }

    if row_standardize {
        for row in w.chunks_mut(n) {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
    }

    Ok(SpatialWeights {
        n,
        w,
        scheme,
        row_standardized: row_standardize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(id: &str, lat: f64, lon: f64) -> StationMeta {
        StationMeta {
            station_id: id.into(),
            name: id.into(),
            lat,
            lon,
            storage_kg: None,
        }
    }

    #[test]
    fn equidistant_triangle_splits_evenly() {
        let metas = [at("a", 0.0, 0.0), at("b", 0.0, 120.0), at("c", 0.0, -120.0)];
        let w = build_weights(&metas, WeightScheme::InverseDistance, true).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 0.5 };
                assert!((w.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn knn_on_a_line() {
        // A - B - C with B closer to A.
        let metas = [at("A", 0.0, 0.0), at("B", 0.0, 1.0), at("C", 0.0, 3.0)];
        let w = build_weights(&metas, WeightScheme::Knn(1), false).unwrap();
        assert_eq!(w.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(w.row(1), &[1.0, 0.0, 0.0]);
        assert_eq!(w.row(2), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn diagonal_is_zero_and_rows_sum_to_one() {
        let metas = [
            at("a", 34.0, -118.0),
            at("b", 37.7, -122.4),
            at("c", 38.5, -121.5),
            at("d", 33.6, -117.7),
        ];
        for scheme in [WeightScheme::InverseDistance, WeightScheme::Knn(2)] {
            let w = build_weights(&metas, scheme, true).unwrap();
            for i in 0..4 {
                assert_eq!(w.get(i, i), 0.0);
                assert!((w.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coincident_stations_rejected() {
        let metas = [
            at("a", 34.0, -118.0),
            at("b", 34.0, -118.0),
            at("c", 35.0, -118.0),
        ];
        match build_weights(&metas, WeightScheme::InverseDistance, true) {
            Err(Error::DegenerateDistance(a, b)) => {
                assert_eq!((a.as_str(), b.as_str()), ("a", "b"))
            }
            other => panic!("{other:?}"),
        }
        assert!(build_weights(&metas, WeightScheme::Knn(1), true).is_ok());
    }

    #[test]
    fn knn_k_too_large() {
        let metas = [at("a", 0.0, 0.0), at("b", 0.0, 1.0), at("c", 0.0, 2.0)];
        assert!(matches!(
            build_weights(&metas, WeightScheme::Knn(3), true),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_weights(&metas[..2], WeightScheme::Knn(1), true),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn scheme_parses() {
        assert_eq!(
            "knn:4".parse::<WeightScheme>().unwrap(),
            WeightScheme::Knn(4)
        );
        assert_eq!(
            "inverse_distance".parse::<WeightScheme>().unwrap(),
            WeightScheme::InverseDistance
        );
        assert!("knn:x".parse::<WeightScheme>().is_err());
        assert_eq!(
            serde_json::to_string(&WeightScheme::Knn(2)).unwrap(),
            "\"knn:2\""
        );
    }
}
