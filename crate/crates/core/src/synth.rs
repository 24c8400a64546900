//! Labeled synthetic station archetypes.
//!
//! Each archetype is a stylized capacity trace in normalized units (1.0 is
//! a full tank) modelled on one behavioral category of real stations:
//!
//! * `reliable`: one refill per day followed by a steady drawdown to ~0.4,
//!   with a mild time-of-day modulation.
//! * `overstressed`: two demand waves a day drain the tank to a depletion
//!   floor, and each refill arrives after a random 2-6 h wait.
//! * `connector`: nearly full all the time with at most two small draws a
//!   week.
//! * `cryo_small_tank`: full-amplitude cycling every few hours, the trace a
//!   small dispensing tank produces when it is refilled from a larger one.
//! * `downtime`: the reliable pattern with one long flatline at zero.
//!
//! Gaussian noise is added and values are clamped to `[0, 1.2]`. Station
//! coordinates are drawn uniformly from a box around California with no
//! dependence on the archetype. These shapes are a verification instrument
//! with a known ground truth, not a model of any real network.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::DateTime;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, StationMeta, StationSeries, TimeGrid};
use crate::error::{Error, Result};
use crate::preprocess::NormalizationMethod;
use crate::rng::{mix, stream_rng};

pub const CLAMP_MAX: f64 = 1.2;

/// Latitude and longitude bounds used for synthetic station placement.
pub const CALIFORNIA_LAT: (f64, f64) = (32.6, 41.9);
pub const CALIFORNIA_LON: (f64, f64) = (-124.2, -114.7);

/// Maximum phase offset, as a fraction of the period, between two series of
/// the same periodic archetype.
const PHASE_JITTER: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchetypeKind {
    Reliable,
    Overstressed,
    Connector,
    CryoSmallTank,
    Downtime,
}

impl ArchetypeKind {
    pub const ALL: [ArchetypeKind; 5] = [
        ArchetypeKind::Reliable,
        ArchetypeKind::Overstressed,
        ArchetypeKind::Connector,
        ArchetypeKind::CryoSmallTank,
        ArchetypeKind::Downtime,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ArchetypeKind::Reliable => "reliable",
            ArchetypeKind::Overstressed => "overstressed",
            ArchetypeKind::Connector => "connector",
            ArchetypeKind::CryoSmallTank => "cryo_small_tank",
            ArchetypeKind::Downtime => "downtime",
        }
    }

    fn index(&self) -> u64 {
        *self as u64
    }
}

impl fmt::Display for ArchetypeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchetypeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reliable" => Ok(ArchetypeKind::Reliable),
            "overstressed" => Ok(ArchetypeKind::Overstressed),
            "connector" => Ok(ArchetypeKind::Connector),
            "cryo" | "cryo_small_tank" => Ok(ArchetypeKind::CryoSmallTank),
            "downtime" => Ok(ArchetypeKind::Downtime),
            other => Err(Error::Parameter(format!("unknown archetype `{other}`"))),
        }
    }
}

/// Shape knobs. Not every knob applies to every kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeParams {
    /// Hours between refills of the reliable pattern.
    pub refill_period_h: f64,
    /// Level drop per hour while a tank is being drawn down.
    pub drawdown_rate: f64,
    /// Level an over-stressed station drains to before waiting for a refill.
    pub depletion_floor: f64,
    /// Length of the downtime flatline.
    pub downtime_span_h: usize,
    /// Hours per cycle of the small-tank pattern.
    pub cycle_period_h: f64,
}

impl ArchetypeParams {
    pub fn for_kind(kind: ArchetypeKind) -> Self {
        let drawdown_rate = match kind {
            ArchetypeKind::Overstressed => 0.25,
            _ => 0.025,
        };
        ArchetypeParams {
            refill_period_h: 24.0,
            drawdown_rate,
            depletion_floor: 0.05,
            downtime_span_h: 168,
            cycle_period_h: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeSpec {
    pub kind: ArchetypeKind,
    pub n_series: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub grid: TimeGrid,
    pub params: ArchetypeParams,
}

impl ArchetypeSpec {
    /// Spec with the default knobs for `kind`.
    pub fn new(
        kind: ArchetypeKind,
        n_series: usize,
        noise_sigma: f64,
        seed: u64,
        grid: TimeGrid,
    ) -> Self {
        ArchetypeSpec {
            kind,
            n_series,
            noise_sigma,
            seed,
            grid,
            params: ArchetypeParams::for_kind(kind),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.n_series == 0 {
            return bad("n_series must be positive".into());
        }
        if !(0.0..0.5).contains(&self.noise_sigma) {
            return bad(format!(
                "noise_sigma {} must lie in [0, 0.5)",
                self.noise_sigma
            ));
        }
        if !(p.refill_period_h >= 2.0 && p.refill_period_h.is_finite()) {
            return bad(format!(
                "refill_period_h {} must be at least 2",
                p.refill_period_h
            ));
        }
        if !(p.cycle_period_h >= 2.0 && p.cycle_period_h.is_finite()) {
            return bad(format!(
                "cycle_period_h {} must be at least 2",
                p.cycle_period_h
            ));
        }
        if !(p.drawdown_rate > 0.0 && p.drawdown_rate <= 1.0) {
            return bad(format!(
                "drawdown_rate {} must lie in (0, 1]",
                p.drawdown_rate
            ));
        }
        if !(0.0..1.0).contains(&p.depletion_floor) {
            return bad(format!(
                "depletion_floor {} must lie in [0, 1)",
                p.depletion_floor
            ));
        }
        if p.downtime_span_h == 0 || p.downtime_span_h >= self.grid.n_steps() {
            return bad(format!(
                "downtime_span_h {} must lie in [1, {})",
                p.downtime_span_h,
                self.grid.n_steps()
            ));
        }
        Ok(())
    }
}

fn reliable<R: Rng>(n: usize, p: &ArchetypeParams, rng: &mut R) -> Vec<f64> {
    let period = p.refill_period_h;
    let phase = rng.random::<f64>() * PHASE_JITTER * period;
    (0..n)
        .map(|h| {
            let t = h as f64;
            let since_refill = (t + phase).rem_euclid(period);
            1.0 - p.drawdown_rate * since_refill + 0.02 * (2.0 * PI * t / 24.0).sin()
        })
        .collect()
}

/// Two demand waves per refill period drain the tank to the floor; each
/// refill then arrives after a random 2-6 h wait.
fn overstressed<R: Rng>(n: usize, p: &ArchetypeParams, rng: &mut R) -> Vec<f64> {
    enum State {
        Full,
        Draining,
        Waiting(u32),
    }
    let half = (p.refill_period_h / 2.0).round().max(1.0) as usize;
    let offset = rng.random_range(0..=(PHASE_JITTER * half as f64) as usize);
    let wave = (6 + offset) % half;
    let mut level = 1.0;
    let mut state = State::Full;
    let mut out = Vec::with_capacity(n);
    for h in 0..n {
        if matches!(state, State::Full) && h % half == wave {
            state = State::Draining;
        }
        out.push(level);
        state = match state {
            State::Full => State::Full,
            State::Draining => {
                level -= p.drawdown_rate;
                if level <= p.depletion_floor {
                    level = p.depletion_floor;
                    State::Waiting(rng.random_range(2..=6))
                } else {
                    State::Draining
                }
            }
            State::Waiting(1) => {
                level = 1.0;
                State::Full
            }
            State::Waiting(w) => State::Waiting(w - 1),
        };
    }
    out
}

fn connector<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    const BASE: f64 = 0.95;
    const WEEK: usize = 168;
    let mut out = vec![BASE; n];
    for week_start in (0..n).step_by(WEEK) {
        let draws = rng.random_range(0..=2);
        for _ in 0..draws {
            let start = week_start + rng.random_range(0..WEEK);
            let depth = rng.random_range(0.05..0.15);
            let recovery = rng.random_range(6..=24);
            for v in out.iter_mut().take((start + recovery).min(n)).skip(start) {
                *v = v.min(BASE - depth);
            }
        }
    }
    out
}

fn cryo_small_tank<R: Rng>(n: usize, p: &ArchetypeParams, rng: &mut R) -> Vec<f64> {
    let period = p.cycle_period_h;
    let phase = rng.random::<f64>() * PHASE_JITTER * period;
    (0..n)
        .map(|h| {
            let since_refill = (h as f64 + phase).rem_euclid(period);
            (1.0 - since_refill / (period - 1.0)).max(0.0)
        })
        .collect()
}

fn downtime<R: Rng>(n: usize, p: &ArchetypeParams, rng: &mut R) -> Vec<f64> {
    let mut out = reliable(n, p, rng);
    let start = rng.random_range(0..=n - p.downtime_span_h);
    out[start..start + p.downtime_span_h].fill(0.0);
    out
}

fn shape<R: Rng>(kind: ArchetypeKind, n: usize, p: &ArchetypeParams, rng: &mut R) -> Vec<f64> {
    match kind {
        ArchetypeKind::Reliable => reliable(n, p, rng),
        ArchetypeKind::Overstressed => overstressed(n, p, rng),
        ArchetypeKind::Connector => connector(n, rng),
        ArchetypeKind::CryoSmallTank => cryo_small_tank(n, p, rng),
        ArchetypeKind::Downtime => downtime(n, p, rng),
    }
}

/// `n` points drawn uniformly in the California box, then shuffled.
pub fn coordinate_pool<R: Rng>(n: usize, rng: &mut R) -> Vec<(f64, f64)> {
    let mut pool: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.random_range(CALIFORNIA_LAT.0..CALIFORNIA_LAT.1),
                rng.random_range(CALIFORNIA_LON.0..CALIFORNIA_LON.1),
            )
        })
        .collect();
    pool.shuffle(rng);
    pool
}

// Values are already fractions of a 1.0 kg tank.
fn synthetic_dataset(grid: TimeGrid, stations: Vec<StationSeries>) -> Result<Dataset> {
    let mut ds = Dataset::new(grid, stations)?;
    ds.normalization = Some(NormalizationMethod::StorageFraction);
    Ok(ds)
}

/// Generates `spec.n_series` stations of one archetype plus their labels.
pub fn generate(spec: &ArchetypeSpec) -> Result<(Dataset, Vec<ArchetypeKind>)> {
    spec.validate()?;
    let n = spec.grid.n_steps();
    let kind_seed = mix(spec.seed, spec.kind.index());
    let noise = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
    let coords = coordinate_pool(spec.n_series, &mut stream_rng(kind_seed, u64::MAX));

    let stations = (0..spec.n_series)
        .zip(coords)
        .map(|(i, (lat, lon))| {
            let mut rng = stream_rng(kind_seed, i as u64);
            let mut values = shape(spec.kind, n, &spec.params, &mut rng);
            if spec.noise_sigma > 0.0 {
                for v in values.iter_mut() {
                    *v += noise.sample(&mut rng);
                }
            }
            for v in values.iter_mut() {
                *v = v.clamp(0.0, CLAMP_MAX);
            }
            StationSeries {
                meta: StationMeta {
                    station_id: format!("{}-{i:02}", spec.kind),
                    name: format!("synthetic {} {i:02}", spec.kind),
                    lat,
                    lon,
                    storage_kg: Some(1.0),
                },
                values,
                observed: vec![true; n],
            }
        })
        .collect();

    let ds = synthetic_dataset(spec.grid, stations)?;
    Ok((ds, vec![spec.kind; spec.n_series]))
}

/// Combines several archetype sets into one dataset, interleaving stations
/// round-robin across the specs. Coordinates are redrawn for the combined
/// set from one shuffled pool.
pub fn benchmark_set(specs: &[ArchetypeSpec]) -> Result<(Dataset, Vec<ArchetypeKind>)> {
    let first = specs
        .first()
        .ok_or_else(|| Error::Parameter("no archetype specs given".into()))?;
    if specs.iter().any(|s| s.grid != first.grid) {
        return Err(Error::Parameter(
            "archetype specs use different grids".into(),
        ));
    }
    let parts = specs.iter().map(generate).collect::<Result<Vec<_>>>()?;

    let longest = specs.iter().map(|s| s.n_series).max().unwrap_or(0);
    let mut stations = Vec::new();
    let mut labels = Vec::new();
    for i in 0..longest {
        for (ds, kinds) in &parts {
            if let Some(s) = ds.stations.get(i) {
                stations.push(s.clone());
                labels.push(kinds[i]);
            }
        }
    }

    let mut seen = HashSet::new();
    for s in &stations {
        if !seen.insert(s.id()) {
            return Err(Error::Parameter(format!(
                "duplicate synthetic station `{}`; give each archetype once",
                s.id()
            )));
        }
    }

    let pool_seed = specs.iter().fold(0x5EED_u64, |acc, s| mix(acc, s.seed));
    let coords = coordinate_pool(stations.len(), &mut stream_rng(pool_seed, 0));
    for (s, (lat, lon)) in stations.iter_mut().zip(coords) {
        s.meta.lat = lat;
        s.meta.lon = lon;
    }

    Ok((synthetic_dataset(first.grid, stations)?, labels))
}

/// First hour of the default synthetic grid, 2018-10-01T00:00Z.
pub const DEFAULT_START_UNIX: i64 = 1_538_352_000;

/// Hourly grid of `n_hours` steps starting at [`DEFAULT_START_UNIX`].
pub fn default_grid(n_hours: usize) -> Result<TimeGrid> {
    let start = DateTime::from_timestamp(DEFAULT_START_UNIX, 0).expect("constant in range");
    TimeGrid::new(start, n_hours)
}

/// Parses `reliable:8,overstressed:8,...` into `(kind, count)` pairs.
pub fn parse_kinds(s: &str) -> Result<Vec<(ArchetypeKind, usize)>> {
    s.split(',')
        .map(|item| {
            let item = item.trim();
            let (kind, n) = item
                .split_once(':')
                .ok_or_else(|| Error::Parameter(format!("expected `kind:count`, got `{item}`")))?;
            let n = n
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad count in `{item}`")))?;
            Ok((kind.trim().parse()?, n))
        })
        .collect()
}

/// Ground-truth labels as `station_id,label` rows.
pub fn write_labels<W: Write>(ds: &Dataset, labels: &[ArchetypeKind], out: W) -> Result<()> {
    if labels.len() != ds.len() {
        return Err(Error::Shape(format!(
            "{} labels for {} stations",
            labels.len(),
            ds.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["station_id", "label"])?;
    for (s, kind) in ds.stations.iter().zip(labels) {
        w.write_record([s.id(), kind.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
