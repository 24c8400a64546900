//! Behavioral clustering of fueling-station capacity time series.
//!
//! The pipeline loads hourly capacity readings onto a common grid
//! ([`ingest`]), fills gaps and normalizes each station ([`preprocess`]),
//! compares stations with the complexity-invariant distance ([`distance`]),
//! clusters them and selects the cluster count by silhouette ([`cluster`]),
//! checks that station behavior is not spatially autocorrelated
//! ([`spatial`]) and writes a reproducible report ([`report`]). The
//! [`synth`] module generates labeled archetype stations used to verify
//! that the clustering recovers known structure.

pub mod cluster;
pub mod dataset;
pub mod distance;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod preprocess;
pub mod report;
mod rng;
pub mod spatial;
pub mod synth;
pub mod warning;

pub use cluster::{adjusted_rand_index, Algorithm, ClusterModel, SilhouetteReport};
pub use dataset::{Dataset, StationMeta, StationSeries, TimeGrid};
pub use distance::{cid, complexity_estimate, euclidean, pairwise_matrix, DistanceMatrix, Metric};
pub use error::{Error, Result};
pub use preprocess::NormalizationMethod;
pub use spatial::{MoranResult, SpatialWeights, WeightScheme};
pub use synth::{ArchetypeKind, ArchetypeSpec};
pub use warning::Warning;

#[cfg(test)]
pub(crate) mod test_support {
    use chrono::{TimeZone, Utc};

    use crate::dataset::{Dataset, StationMeta, StationSeries, TimeGrid};

    pub fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(Utc.with_ymd_and_hms(2018, 10, 1, 0, 0, 0).unwrap(), n).unwrap()
    }

    pub fn dataset_from(rows: &[Vec<f64>]) -> Dataset {
        let stations = rows
            .iter()
            .enumerate()
            .map(|(i, values)| StationSeries {
                meta: StationMeta {
                    station_id: format!("s{i:02}"),
                    name: format!("station {i}"),
                    lat: 34.0 + i as f64 * 0.1,
                    lon: -118.0,
                    storage_kg: None,
                },
                values: values.clone(),
                observed: vec![true; values.len()],
            })
            .collect();
        Dataset::new(grid(rows[0].len()), stations).unwrap()
    }
}
