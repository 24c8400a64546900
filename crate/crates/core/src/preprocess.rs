//! Gap filling and per-station normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, StationSeries};
use crate::error::{Error, Result};
use crate::warning::Warning;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMethod {
    /// Divide by rated storage; the physically meaningful fill fraction.
    StorageFraction,
    #[default]
    MinMax,
    /// Population z-score.
    ZScore,
}

impl NormalizationMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormalizationMethod::StorageFraction => "storage_fraction",
            NormalizationMethod::MinMax => "min_max",
            NormalizationMethod::ZScore => "z_score",
        }
    }
}

impl fmt::Display for NormalizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "storage_fraction" => Ok(NormalizationMethod::StorageFraction),
            "min_max" => Ok(NormalizationMethod::MinMax),
            "z_score" => Ok(NormalizationMethod::ZScore),
            other => Err(Error::Parameter(format!(
                "unknown normalization `{other}` (expected storage_fraction, min_max or z_score)"
            ))),
        }
    }
}

/// Fills unobserved slots by linear interpolation between the neighbouring
/// observations. Leading and trailing gaps take the nearest observed value.
/// Observed values and the mask are left untouched.
pub fn impute_linear(s: &StationSeries) -> Result<StationSeries> {
    let observed: Vec<usize> = s
        .observed
        .iter()
        .enumerate()
        .filter_map(|(i, &o)| o.then_some(i))
        .collect();
    let (&first, &last) = match (observed.first(), observed.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => {
            return Err(Error::AllMissing {
                station_id: s.meta.station_id.clone(),
            })
        }
    };

    let mut values = s.values.clone();
    let head = values[first];
    values[..first].fill(head);
    let tail = values[last];
    values[last + 1..].fill(tail);

    for pair in observed.windows(2) {
        let (i, j) = (pair[0], pair[1]);
        if j - i < 2 {
            continue;
        }
        let (vi, vj) = (s.values[i], s.values[j]);
        let span = (j - i) as f64;
        for (t, slot) in values.iter_mut().enumerate().take(j).skip(i + 1) {
            *slot = vi + (vj - vi) * ((t - i) as f64 / span);
        }
    }

    Ok(StationSeries {
        meta: s.meta.clone(),
        values,
        observed: s.observed.clone(),
    })
}

fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return vec![0.5; values.len()];
    }
    let range = hi - lo;
    values.iter().map(|v| (v - lo) / range).collect()
}

/// Normalizes a gap-free series. `storage_fraction` without `storage_kg`
/// falls back to `min_max` and returns a warning.
pub fn normalize(
    s: &StationSeries,
    method: NormalizationMethod,
) -> Result<(StationSeries, Option<Warning>)> {
    let mut warning = None;
    let values = match method {
        NormalizationMethod::StorageFraction => match s.meta.storage_kg {
            Some(kg) => s.values.iter().map(|v| v / kg).collect(),
            None => {
                warning = Some(Warning::StorageFallback {
                    station_id: s.meta.station_id.clone(),
                });
                min_max(&s.values)
            }
        },
        NormalizationMethod::MinMax => min_max(&s.values),
        NormalizationMethod::ZScore => {
            let degenerate = || Error::DegenerateSeries {
                station_id: s.meta.station_id.clone(),
            };
            let lo = s.values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = s.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if s.values.is_empty() || lo == hi {
                return Err(degenerate());
            }
            let n = s.values.len() as f64;
            let mean = s.values.iter().sum::<f64>() / n;
            let var = s.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd == 0.0 {
                return Err(degenerate());
            }
            s.values.iter().map(|v| (v - mean) / sd).collect()
        }
    };
    Ok((
        StationSeries {
            meta: s.meta.clone(),
            values,
            observed: s.observed.clone(),
        },
        warning,
    ))
}

/// Imputes then normalizes every station, preserving order. Errors name
/// the offending station.
pub fn preprocess_all(
    ds: &Dataset,
    method: NormalizationMethod,
) -> Result<(Dataset, Vec<Warning>)> {
    let mut warnings = Vec::new();
    let mut stations = Vec::with_capacity(ds.len());
    for s in &ds.stations {
        let annotate = |e| Error::for_station(s.id(), e);
        let filled = impute_linear(s).map_err(annotate)?;
        let (normalized, warning) = normalize(&filled, method).map_err(annotate)?;
        warnings.extend(warning);
        stations.push(normalized);
    }
    Ok((
        Dataset {
            grid: ds.grid,
            stations,
            normalization: Some(method),
        },
        warnings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::StationMeta;

    fn series(values: &[f64], observed: &[bool]) -> StationSeries {
        StationSeries {
            meta: StationMeta {
                station_id: "S".into(),
                name: "S".into(),
                lat: 0.0,
                lon: 0.0,
                storage_kg: Some(24.0),
            },
            values: values.to_vec(),
            observed: observed.to_vec(),
        }
    }

    fn complete(values: &[f64]) -> StationSeries {
        series(values, &vec![true; values.len()])
    }

    #[test]
    fn interior_gap_is_straight_line() {
        let s = series(&[10.0, 0.0, 0.0, 4.0], &[true, false, false, true]);
        let out = impute_linear(&s).unwrap();
        assert_eq!(out.values, vec![10.0, 8.0, 6.0, 4.0]);
        assert_eq!(out.observed, s.observed);
    }

    #[test]
    fn edge_gaps_take_nearest_value() {
        let s = series(&[0.0, 5.0, 0.0], &[false, true, false]);
        assert_eq!(impute_linear(&s).unwrap().values, vec![5.0, 5.0, 5.0]);
    }

    #[test]
    fn all_missing_names_station() {
        let s = series(&[0.0, 0.0], &[false, false]);
        match impute_linear(&s) {
            Err(Error::AllMissing { station_id }) => assert_eq!(station_id, "S"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn storage_fraction_divides() {
        let (out, w) = normalize(
            &complete(&[0.0, 12.0, 24.0]),
            NormalizationMethod::StorageFraction,
        )
        .unwrap();
        assert_eq!(out.values, vec![0.0, 0.5, 1.0]);
        assert!(w.is_none());
    }

    #[test]
    fn storage_fraction_without_storage_falls_back() {
        let mut s = complete(&[2.0, 4.0, 6.0]);
        s.meta.storage_kg = None;
        let (out, w) = normalize(&s, NormalizationMethod::StorageFraction).unwrap();
        assert_eq!(out.values, vec![0.0, 0.5, 1.0]);
        assert_eq!(
            w,
            Some(Warning::StorageFallback {
                station_id: "S".into()
            })
        );
    }

    #[test]
    fn constant_min_max_is_half() {
        let (out, _) = normalize(&complete(&[3.0, 3.0, 3.0]), NormalizationMethod::MinMax).unwrap();
        assert_eq!(out.values, vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn z_score_population() {
        // mean 4, population variance 8/3
        let sd = (8.0f64 / 3.0).sqrt();
        let expect = [-2.0 / sd, 0.0, 2.0 / sd];
        let (out, _) = normalize(&complete(&[2.0, 4.0, 6.0]), NormalizationMethod::ZScore).unwrap();
        for (a, b) in out.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((out.values[2] - 1.2247).abs() < 1e-4);
    }

    #[test]
    fn z_score_constant_is_degenerate() {
        assert!(matches!(
            normalize(&complete(&[1.0, 1.0]), NormalizationMethod::ZScore),
            Err(Error::DegenerateSeries { .. })
        ));
    }

    #[test]
    fn method_parses() {
        assert_eq!(
            "z_score".parse::<NormalizationMethod>().unwrap(),
            NormalizationMethod::ZScore
        );
        assert!("zscore".parse::<NormalizationMethod>().is_err());
    }
}
