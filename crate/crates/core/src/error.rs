use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("line {line}: reading references unknown station `{station_id}`")]
    UnknownStation { line: u64, station_id: String },

    #[error("annotation references unknown station `{0}`")]
    UnknownAnnotation(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("station `{station_id}` has no observed values")]
    AllMissing { station_id: String },

    #[error("station `{station_id}` is constant; z-score is undefined")]
    DegenerateSeries { station_id: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("series of length {0} is too short (need at least 2 points)")]
    TooShort(usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("silhouette is undefined for a single cluster")]
    UndefinedSilhouette,

    #[error("values have zero variance")]
    ZeroVariance,

    #[error("stations `{0}` and `{1}` share coordinates; inverse-distance weight is undefined")]
    DegenerateDistance(String, String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("station `{station_id}`: {source}")]
    Station {
        station_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn for_station(station_id: &str, source: Error) -> Self {
        Error::Station {
            station_id: station_id.to_owned(),
            source: Box::new(source),
        }
    }
}
