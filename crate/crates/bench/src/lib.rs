//! Fixtures shared by the criterion benches.

use station_pulse::synth::{benchmark_set, default_grid};
use station_pulse::{ArchetypeKind, ArchetypeSpec, Dataset};

/// Four archetypes of `per_kind` stations over `hours` hourly steps.
pub fn archetype_dataset(per_kind: usize, hours: usize, seed: u64) -> Dataset {
    let grid = default_grid(hours).expect("valid grid");
    let specs: Vec<_> = [
        ArchetypeKind::Reliable,
        ArchetypeKind::Overstressed,
        ArchetypeKind::Connector,
        ArchetypeKind::CryoSmallTank,
    ]
    .into_iter()
    .map(|k| ArchetypeSpec::new(k, per_kind, 0.05, seed, grid))
    .collect();
    benchmark_set(&specs).expect("valid specs").0
}

/// One normalized capacity snapshot of the dataset at hour `t`.
pub fn snapshot(ds: &Dataset, t: usize) -> Vec<f64> {
    ds.snapshot(t)
}
