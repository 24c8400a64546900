use std::fmt;

use serde::{Deserialize, Serialize};

/// Non-fatal conditions surfaced by pipeline stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Ids passed to an exclusion that matched no station.
    UnknownStations { ids: Vec<String> },
    /// Readings whose snapped hour fell outside an explicit grid.
    ReadingsOutsideGrid { count: usize },
    /// `storage_fraction` requested for a station without rated storage.
    StorageFallback { station_id: String },
    /// Snapshot skipped because every station had the same value.
    ConstantSnapshot { timestamp: Option<usize> },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::UnknownStations { ids } => {
                write!(f, "unknown station ids ignored: {}", ids.join(","))
            }
            Warning::ReadingsOutsideGrid { count } => {
                write!(f, "{count} readings fell outside the grid and were dropped")
            }
            Warning::StorageFallback { station_id } => write!(
                f,
                "station `{station_id}` has no storage_kg; normalized with min_max instead"
            ),
            Warning::ConstantSnapshot { timestamp: Some(t) } => {
                write!(f, "snapshot {t} is constant across stations; skipped")
            }
            Warning::ConstantSnapshot { timestamp: None } => {
                write!(f, "station means are constant; summary snapshot skipped")
            }
        }
    }
}
