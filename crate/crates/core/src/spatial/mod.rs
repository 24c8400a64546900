//! Spatial-independence check: Moran's I over station values with a
//! permutation significance test.

mod geo;
mod moran;
mod weights;

pub use geo::{haversine_km, EARTH_RADIUS_KM};
pub use moran::{
    moran_scan, morans_i, permutation_distribution, permutation_test, MoranResult, Snapshot,
    DEFAULT_PERMUTATIONS,
};
pub use weights::{build_weights, SpatialWeights, WeightScheme};
