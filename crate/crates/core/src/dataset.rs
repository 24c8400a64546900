//! Station time series aligned on a shared hourly grid.
//!
//! Station order inside a [`Dataset`] is the canonical index order used by
//! every matrix and labeling downstream.

use std::collections::HashSet;

use chrono::{DateTime, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::NormalizationMethod;

/// Hourly time axis starting at an exact hour boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct TimeGrid {
    start: DateTime<Utc>,
    n_steps: usize,
}

#[derive(Deserialize)]
struct RawGrid {
    start: DateTime<Utc>,
    n_steps: usize,
}

impl TryFrom<RawGrid> for TimeGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        TimeGrid::new(raw.start, raw.n_steps)
    }
}

impl TimeGrid {
    pub fn new(start: DateTime<Utc>, n_steps: usize) -> Result<Self> {
        if start.minute() != 0 || start.second() != 0 || start.nanosecond() != 0 {
            return Err(Error::Validation(format!(
                "grid start {start} is not on an hour boundary"
            )));
        }
        if n_steps < 2 {
            return Err(Error::Validation(format!(
                "grid needs at least 2 steps, got {n_steps}"
            )));
        }
        Ok(TimeGrid { start, n_steps })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Timestamp of step `index`.
    pub fn time_at(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::hours(index as i64)
    }

    /// Index of an hour-aligned timestamp, if it lies on the grid.
    pub fn index_of(&self, t: DateTime<Utc>) -> Option<usize> {
        let offset = (t - self.start).num_seconds();
        if offset < 0 || offset % 3600 != 0 {
            return None;
        }
        let idx = (offset / 3600) as usize;
        (idx < self.n_steps).then_some(idx)
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.time_at(self.n_steps - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationMeta {
    pub station_id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    /// Rated storage in kg, when the source publishes it.
    pub storage_kg: Option<f64>,
}

impl StationMeta {
    pub fn validate(&self) -> Result<()> {
        if self.station_id.trim().is_empty() {
            return Err(Error::Validation("station_id must be nonempty".into()));
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(Error::Validation(format!(
                "station `{}`: latitude {} outside [-90, 90]",
                self.station_id, self.lat
            )));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(Error::Validation(format!(
                "station `{}`: longitude {} outside [-180, 180]",
                self.station_id, self.lon
            )));
        }
        if let Some(kg) = self.storage_kg {
            if !(kg.is_finite() && kg > 0.0) {
                return Err(Error::Validation(format!(
                    "station `{}`: storage_kg must be positive, got {kg}",
                    self.station_id
                )));
            }
        }
        Ok(())
    }
}

/// One station's hourly trace. Unobserved slots hold `0.0` until imputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSeries {
    pub meta: StationMeta,
    pub values: Vec<f64>,
    pub observed: Vec<bool>,
}

impl StationSeries {
    pub fn id(&self) -> &str {
        &self.meta.station_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_observed(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Fraction of grid slots that were not observed.
    pub fn missing_fraction(&self) -> f64 {
        if self.observed.is_empty() {
            return 0.0;
        }
        (self.observed.len() - self.n_observed()) as f64 / self.observed.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub grid: TimeGrid,
    pub stations: Vec<StationSeries>,
    /// Set once the dataset has been imputed and normalized.
    #[serde(default)]
    pub normalization: Option<NormalizationMethod>,
}

impl Dataset {
    pub fn new(grid: TimeGrid, stations: Vec<StationSeries>) -> Result<Self> {
        let ds = Dataset {
            grid,
            stations,
            normalization: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Checks structural invariants: nonempty, unique ids, matching lengths,
    /// finite values.
    pub fn validate(&self) -> Result<()> {
        if self.stations.is_empty() {
            return Err(Error::EmptyInput("dataset has no stations".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.stations {
            s.meta.validate()?;
            if !seen.insert(s.id()) {
                return Err(Error::Validation(format!(
                    "duplicate station_id `{}`",
                    s.id()
                )));
            }
            if s.values.len() != self.grid.n_steps() || s.observed.len() != self.grid.n_steps() {
                return Err(Error::Shape(format!(
                    "station `{}` has {} values / {} mask entries, grid has {} steps",
                    s.id(),
                    s.values.len(),
                    s.observed.len(),
                    self.grid.n_steps()
                )));
            }
            if let Some(i) = s.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "station `{}` has a non-finite value at step {i}",
                    s.id()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn station_ids(&self) -> Vec<String> {
        self.stations
            .iter()
            .map(|s| s.meta.station_id.clone())
            .collect()
    }

    pub fn position(&self, station_id: &str) -> Option<usize> {
        self.stations.iter().position(|s| s.id() == station_id)
    }

    pub fn metas(&self) -> Vec<StationMeta> {
        self.stations.iter().map(|s| s.meta.clone()).collect()
    }

    /// True when every slot of every station carries a value (observed or imputed).
    pub fn is_preprocessed(&self) -> bool {
        self.normalization.is_some()
    }

    /// Cross-station value vector at grid index `t`.
    pub fn snapshot(&self, t: usize) -> Vec<f64> {
        self.stations.iter().map(|s| s.values[t]).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ds: Dataset = serde_json::from_str(text)?;
        ds.validate()?;
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn meta(id: &str) -> StationMeta {
        StationMeta {
            station_id: id.into(),
            name: id.into(),
            lat: 34.0,
            lon: -118.0,
            storage_kg: None,
        }
    }

    #[test]
    fn grid_rejects_unaligned_start() {
        let t = Utc.with_ymd_and_hms(2018, 10, 1, 0, 15, 0).unwrap();
        assert!(matches!(TimeGrid::new(t, 10), Err(Error::Validation(_))));
    }

    #[test]
    fn grid_rejects_single_step() {
        let t = Utc.with_ymd_and_hms(2018, 10, 1, 0, 0, 0).unwrap();
        assert!(TimeGrid::new(t, 1).is_err());
    }

    #[test]
    fn grid_index_round_trip() {
        let t = Utc.with_ymd_and_hms(2018, 10, 1, 0, 0, 0).unwrap();
        let g = TimeGrid::new(t, 2208).unwrap();
        assert_eq!(g.index_of(g.time_at(1234)), Some(1234));
        assert_eq!(g.index_of(g.time_at(2208)), None);
        assert_eq!(
            g.end(),
            Utc.with_ymd_and_hms(2018, 12, 31, 23, 0, 0).unwrap()
        );
    }

    #[test]
    fn dataset_rejects_duplicate_ids() {
        let t = Utc.with_ymd_and_hms(2018, 10, 1, 0, 0, 0).unwrap();
        let g = TimeGrid::new(t, 2).unwrap();
        let s = StationSeries {
            meta: meta("A"),
            values: vec![1.0, 2.0],
            observed: vec![true, true],
        };
        assert!(Dataset::new(g, vec![s.clone(), s]).is_err());
    }

    #[test]
    fn meta_rejects_bad_latitude() {
        let mut m = meta("A");
        m.lat = 91.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = Utc.with_ymd_and_hms(2018, 10, 1, 0, 0, 0).unwrap();
        let g = TimeGrid::new(t, 3).unwrap();
        let ds = Dataset::new(
            g,
            vec![StationSeries {
                meta: meta("A"),
                values: vec![0.1, 0.0, 0.30000000000000004],
                observed: vec![true, false, true],
            }],
        )
        .unwrap();
        let back = Dataset::from_json(&ds.to_json().unwrap()).unwrap();
        assert_eq!(ds, back);
    }
}
