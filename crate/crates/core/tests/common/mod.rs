#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use station_pulse::synth::default_grid;
use station_pulse::{Dataset, StationMeta, StationSeries};

pub fn meta(i: usize) -> StationMeta {
    StationMeta {
        station_id: format!("st{i:03}"),
        name: format!("Station {i}"),
        lat: 33.0 + (i % 7) as f64 * 0.9,
        lon: -122.0 + (i / 7) as f64 * 1.1,
        storage_kg: Some(200.0),
    }
}

pub fn dataset(rows: &[Vec<f64>]) -> Dataset {
    let stations = rows
        .iter()
        .enumerate()
        .map(|(i, v)| StationSeries {
            meta: meta(i),
            values: v.clone(),
            observed: vec![true; v.len()],
        })
        .collect();
    Dataset::new(default_grid(rows[0].len()).unwrap(), stations).unwrap()
}

pub fn random_rows(n: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..len).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect()
}

/// Straight-line CID used as an oracle: no shared helpers with the library.
pub fn naive_cid(q: &[f64], c: &[f64]) -> f64 {
    let mut ed2 = 0.0;
    for i in 0..q.len() {
        ed2 += (q[i] - c[i]) * (q[i] - c[i]);
    }
    let mut ce_q = 0.0;
    let mut ce_c = 0.0;
    for i in 0..q.len() - 1 {
        ce_q += (q[i] - q[i + 1]) * (q[i] - q[i + 1]);
        ce_c += (c[i] - c[i + 1]) * (c[i] - c[i + 1]);
    }
    let (ce_q, ce_c) = (ce_q.sqrt(), ce_c.sqrt());
    let eps = 1e-12;
    let cf = if ce_q < eps && ce_c < eps {
        1.0
    } else {
        ce_q.max(ce_c) / ce_q.min(ce_c).max(eps)
    };
    ed2.sqrt() * cf
}
