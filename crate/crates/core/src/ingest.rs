//! Loading raw capacity readings and station metadata onto an hourly grid.
//!
//! Readings CSV: `timestamp,station_id,capacity_kg` with ISO-8601 UTC
//! timestamps. Metadata CSV: `station_id,name,lat,lon,storage_kg` where
//! `storage_kg` may be empty. Timestamps snap to the nearest hour (a reading
//! at exactly half past rounds up). Duplicate readings for the same station
//! and hour keep the one that appears last in the file.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};

use crate::dataset::{Dataset, StationMeta, StationSeries, TimeGrid};
use crate::error::{Error, Result};
use crate::warning::Warning;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

/// How the time grid of a loaded dataset is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpec {
    /// Smallest grid spanning every snapped reading.
    Infer,
    Fixed(TimeGrid),
}

/// Parses an ISO-8601 timestamp. Offsets are converted to UTC; timestamps
/// without an offset are taken as UTC.
pub fn parse_timestamp(text: &str) -> Option<DateTime<Utc>> {
    let text = text.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Some(t.with_timezone(&Utc));
    }
    [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ]
    .iter()
    .find_map(|fmt| NaiveDateTime::parse_from_str(text, fmt).ok())
    .map(|naive| Utc.from_utc_datetime(&naive))
}

/// Rounds to the nearest hour boundary.
pub fn snap_to_hour(t: DateTime<Utc>) -> DateTime<Utc> {
    let secs = t.timestamp();
    let snapped = (secs + 1800).div_euclid(3600) * 3600;
    Utc.timestamp_opt(snapped, 0)
        .single()
        .expect("snapped timestamp in range")
}

struct Reading {
    hour: DateTime<Utc>,
    station: usize,
    capacity: f64,
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Parse {
            path: path.to_owned(),
            line: 1,
            message: format!("missing column `{name}`"),
        })
}

fn csv_error(err: csv::Error, path: &Path) -> Error {
    match err.position() {
        Some(pos) => Error::Parse {
            path: path.to_owned(),
            line: pos.line(),
            message: err.to_string(),
        },
        None => Error::Csv(err),
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// Reads the station metadata CSV, preserving file order.
pub fn load_meta(path: &Path) -> Result<Vec<StationMeta>> {
    read_meta(File::open(path)?, path)
}

fn read_meta<R: Read>(input: R, path: &Path) -> Result<Vec<StationMeta>> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(e, path))?.clone();
    let cols =
        ["station_id", "name", "lat", "lon", "storage_kg"].map(|c| column_index(&headers, c, path));
    let [id_col, name_col, lat_col, lon_col, storage_col] = match cols {
        [Ok(a), Ok(b), Ok(c), Ok(d), Ok(e)] => [a, b, c, d, e],
        other => return Err(other.into_iter().find_map(|r| r.err()).unwrap()),
    };

    let mut metas = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, path))?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        let field = |i: usize| record.get(i).unwrap_or("");
        let number = |i: usize, what: &str| {
            field(i)
                .parse::<f64>()
                .map_err(|_| parse_err(format!("invalid {what} `{}`", field(i))))
        };
        let storage_kg = match field(storage_col) {
            "" => None,
            s => Some(
                s.parse::<f64>()
                    .map_err(|_| parse_err(format!("invalid storage_kg `{s}`")))?,
            ),
        };
        let meta = StationMeta {
            station_id: field(id_col).to_owned(),
            name: field(name_col).to_owned(),
            lat: number(lat_col, "lat")?,
            lon: number(lon_col, "lon")?,
            storage_kg,
        };
        meta.validate()
            .map_err(|e| Error::Validation(format!("{}:{line}: {e}", path.display())))?;
        if !seen.insert(meta.station_id.clone()) {
            return Err(Error::Validation(format!(
                "{}:{line}: duplicate station_id `{}`",
                path.display(),
                meta.station_id
            )));
        }
        metas.push(meta);
    }
    if metas.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} has no stations",
            path.display()
        )));
    }
    Ok(metas)
}

fn read_readings<R: Read>(
    input: R,
    path: &Path,
    index: &HashMap<&str, usize>,
) -> Result<Vec<Reading>> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(e, path))?.clone();
    let ts_col = column_index(&headers, "timestamp", path)?;
    let id_col = column_index(&headers, "station_id", path)?;
    let cap_col = column_index(&headers, "capacity_kg", path)?;

    let mut readings = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, path))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");

        let t = parse_timestamp(field(ts_col)).ok_or_else(|| Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("invalid timestamp `{}`", field(ts_col)),
        })?;
        let station_id = field(id_col);
        let station = *index.get(station_id).ok_or_else(|| Error::UnknownStation {
            line,
            station_id: station_id.to_owned(),
        })?;
        let capacity: f64 = field(cap_col).parse().map_err(|_| Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("invalid capacity_kg `{}`", field(cap_col)),
        })?;
        if !capacity.is_finite() || capacity < 0.0 {
            return Err(Error::Validation(format!(
                "{}:{line}: capacity {capacity} must be finite and non-negative",
                path.display()
            )));
        }
        readings.push(Reading {
            hour: snap_to_hour(t),
            station,
            capacity,
        });
    }
    if readings.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} has no readings",
            path.display()
        )));
    }
    Ok(readings)
}

/// Loads readings and metadata into a [`Dataset`].
///
/// Stations appear in metadata file order. Stations without any reading are
/// kept with an all-false mask. With a fixed grid, readings that snap outside
/// it are dropped and reported as a warning.
pub fn load_readings(
    readings_path: &Path,
    meta_path: &Path,
    grid: GridSpec,
) -> Result<(Dataset, Vec<Warning>)> {
    let metas = load_meta(meta_path)?;
    let readings = File::open(readings_path)?;
    assemble(metas, readings, readings_path, grid)
}

fn assemble<R: Read>(
    metas: Vec<StationMeta>,
    readings: R,
    readings_path: &Path,
    grid: GridSpec,
) -> Result<(Dataset, Vec<Warning>)> {
    let index: HashMap<&str, usize> = metas
        .iter()
        .enumerate()
        .map(|(i, m)| (m.station_id.as_str(), i))
        .collect();
    let readings = read_readings(readings, readings_path, &index)?;

    let grid = match grid {
        GridSpec::Fixed(g) => g,
        GridSpec::Infer => {
            let first = readings.iter().map(|r| r.hour).min().unwrap();
            let last = readings.iter().map(|r| r.hour).max().unwrap();
            let steps = (last - first).num_hours() as usize + 1;
            TimeGrid::new(first, steps)?
        }
    };

    let n = grid.n_steps();
    let mut values = vec![vec![0.0; n]; metas.len()];
    let mut observed = vec![vec![false; n]; metas.len()];
    let mut outside = 0;
    for r in &readings {
        match grid.index_of(r.hour) {
            Some(t) => {
                values[r.station][t] = r.capacity;
                observed[r.station][t] = true;
            }
            None => outside += 1,
        }
    }

    let stations = metas
        .into_iter()
        .zip(values.into_iter().zip(observed))
        .map(|(meta, (values, observed))| StationSeries {
            meta,
            values,
            observed,
        })
        .collect();
    let mut warnings = Vec::new();
    if outside > 0 {
        warnings.push(Warning::ReadingsOutsideGrid { count: outside });
    }
    Ok((Dataset::new(grid, stations)?, warnings))
}

/// Writes observed readings and metadata back out in the input CSV formats.
pub fn write_readings(ds: &Dataset, readings_path: &Path, meta_path: &Path) -> Result<()> {
    write_readings_to(ds, File::create(readings_path)?)?;
    write_meta_to(&ds.metas(), File::create(meta_path)?)
}

pub fn write_readings_to<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "station_id", "capacity_kg"])?;
    for t in 0..ds.grid.n_steps() {
        let stamp = ds.grid.time_at(t).format(TIMESTAMP_FORMAT).to_string();
        for s in &ds.stations {
            if s.observed[t] {
                w.write_record([stamp.as_str(), s.id(), &s.values[t].to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_meta_to<W: Write>(metas: &[StationMeta], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["station_id", "name", "lat", "lon", "storage_kg"])?;
    for m in metas {
        w.write_record([
            m.station_id.clone(),
            m.name.clone(),
            m.lat.to_string(),
            m.lon.to_string(),
            m.storage_kg.map(|kg| kg.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Drops the listed stations, keeping the relative order of the rest.
/// Ids that match nothing are returned as a warning.
pub fn exclude_stations(ds: &Dataset, ids: &[String]) -> Result<(Dataset, Vec<Warning>)> {
    let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
    let unknown: Vec<String> = ids
        .iter()
        .filter(|id| ds.position(id).is_none())
        .cloned()
        .collect();
    let stations: Vec<StationSeries> = ds
        .stations
        .iter()
        .filter(|s| !wanted.contains(s.id()))
        .cloned()
        .collect();
    if stations.is_empty() {
        return Err(Error::EmptyInput("every station was excluded".into()));
    }
    let mut warnings = Vec::new();
    if !unknown.is_empty() {
        warnings.push(Warning::UnknownStations { ids: unknown });
    }
    Ok((
        Dataset {
            grid: ds.grid,
            stations,
            normalization: ds.normalization,
        },
        warnings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const META: &str = "station_id,name,lat,lon,storage_kg\n\
                        A,Anaheim,33.83,-117.91,180\n\
                        B,Campbell,37.28,-121.95,\n\
                        C,Lake Forest,33.65,-117.69,250\n";

    fn load(readings: &str, grid: GridSpec) -> Result<(Dataset, Vec<Warning>)> {
        let metas = read_meta(META.as_bytes(), Path::new("meta.csv"))?;
        assemble(metas, readings.as_bytes(), Path::new("readings.csv"), grid)
    }

    fn grid(n: usize) -> GridSpec {
        GridSpec::Fixed(TimeGrid::new(parse_timestamp("2018-10-01T00:00:00Z").unwrap(), n).unwrap())
    }

    #[test]
    fn gap_produces_false_mask() {
        let csv = "timestamp,station_id,capacity_kg\n\
                   2018-10-01T00:00:00Z,A,10\n\
                   2018-10-01T02:00:00Z,A,12\n";
        let (ds, _) = load(csv, grid(3)).unwrap();
        assert_eq!(ds.stations[0].observed, vec![true, false, true]);
        assert!(ds.stations[1].observed.iter().all(|o| !o));
    }

    #[test]
    fn last_write_wins() {
        let csv = "timestamp,station_id,capacity_kg\n\
                   2018-10-01T00:00:00Z,A,10\n\
                   2018-10-01T00:00:00Z,A,12\n\
                   2018-10-01T01:00:00Z,A,5\n";
        let (ds, _) = load(csv, GridSpec::Infer).unwrap();
        assert_eq!(ds.stations[0].values[0], 12.0);
    }

    #[test]
    fn last_write_wins_matches_replay_oracle() {
        // Replay the rows in file order into a map keyed by (station, hour).
        let rows = [
            ("2018-10-01T00:10:00Z", "A", 3.0),
            ("2018-10-01T01:00:00Z", "B", 4.0),
            ("2018-09-30T23:50:00Z", "A", 7.5),
            ("2018-10-01T01:29:59Z", "B", 1.25),
            ("2018-10-01T02:00:00Z", "C", 2.0),
        ];
        let mut csv = String::from("timestamp,station_id,capacity_kg\n");
        let mut oracle = HashMap::new();
        for (ts, id, v) in rows {
            csv.push_str(&format!("{ts},{id},{v}\n"));
            let hour = snap_to_hour(parse_timestamp(ts).unwrap());
            oracle.insert((id, hour), v);
        }
        let (ds, _) = load(&csv, GridSpec::Infer).unwrap();
        for s in &ds.stations {
            for t in 0..ds.grid.n_steps() {
                let expect = oracle.get(&(s.id(), ds.grid.time_at(t)));
                assert_eq!(s.observed[t], expect.is_some());
                if let Some(&v) = expect {
                    assert_eq!(s.values[t], v);
                }
            }
        }
        assert_eq!(ds.stations[0].values[0], 7.5);
    }

    #[test]
    fn snapping_rounds_to_nearest_hour() {
        let t = |s| snap_to_hour(parse_timestamp(s).unwrap());
        assert_eq!(t("2018-10-01T00:29:59Z"), t("2018-10-01T00:00:00Z"));
        assert_eq!(t("2018-10-01T00:30:00Z"), t("2018-10-01T01:00:00Z"));
        assert_eq!(t("2018-10-01T00:31:00Z"), t("2018-10-01T01:00:00Z"));
        assert_eq!(t("2018-09-30T23:45:00Z"), t("2018-10-01T00:00:00Z"));
    }

    #[test]
    fn offsets_convert_to_utc() {
        assert_eq!(
            parse_timestamp("2018-10-01T01:00:00+01:00"),
            parse_timestamp("2018-10-01T00:00:00Z")
        );
        assert_eq!(
            parse_timestamp("2018-10-01 00:00:00"),
            parse_timestamp("2018-10-01T00:00:00Z")
        );
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "timestamp,station_id,capacity_kg\n\
                   2018-10-01T00:00:00Z,A,10\n\
                   2018-10-01T01:00:00Z,A,abc\n";
        match load(csv, GridSpec::Infer) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let csv = "timestamp,station_id,capacity_kg\n\
                   2018-10-01T00:00:00Z,A,10\n\
                   2018-10-01T00:00:00Z,A\n";
        match load(csv, GridSpec::Infer) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_station_is_referential_error() {
        let csv = "timestamp,station_id,capacity_kg\n2018-10-01T00:00:00Z,ZZ,10\n";
        assert!(matches!(
            load(csv, GridSpec::Infer),
            Err(Error::UnknownStation { line: 2, .. })
        ));
    }

    #[test]
    fn negative_and_non_finite_capacity_rejected() {
        for bad in ["-1", "NaN", "inf"] {
            let csv = format!("timestamp,station_id,capacity_kg\n2018-10-01T00:00:00Z,A,{bad}\n");
            assert!(
                matches!(load(&csv, GridSpec::Infer), Err(Error::Validation(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn empty_readings_rejected() {
        let csv = "timestamp,station_id,capacity_kg\n";
        assert!(matches!(
            load(csv, GridSpec::Infer),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            load("", GridSpec::Infer),
            Err(Error::Parse { .. }) | Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn readings_outside_fixed_grid_are_dropped() {
        let csv = "timestamp,station_id,capacity_kg\n\
                   2018-10-01T00:00:00Z,A,10\n\
                   2018-10-05T00:00:00Z,A,12\n";
        let (ds, warnings) = load(csv, grid(2)).unwrap();
        assert_eq!(ds.stations[0].n_observed(), 1);
        assert_eq!(warnings, vec![Warning::ReadingsOutsideGrid { count: 1 }]);
    }

    #[test]
    fn empty_storage_is_none() {
        let metas = read_meta(META.as_bytes(), Path::new("m")).unwrap();
        assert_eq!(metas[0].storage_kg, Some(180.0));
        assert_eq!(metas[1].storage_kg, None);
    }

    #[test]
    fn exclude_keeps_order_and_warns_on_unknown() {
        let csv = "timestamp,station_id,capacity_kg\n\
                   2018-10-01T00:00:00Z,A,1\n\
                   2018-10-01T01:00:00Z,C,1\n";
        let (ds, _) = load(csv, GridSpec::Infer).unwrap();

        let (same, w) = exclude_stations(&ds, &[]).unwrap();
        assert_eq!(same, ds);
        assert!(w.is_empty());

        let (out, w) = exclude_stations(&ds, &["B".into()]).unwrap();
        assert_eq!(out.station_ids(), vec!["A", "C"]);
        assert!(w.is_empty());

        let (out, w) = exclude_stations(&ds, &["XX".into()]).unwrap();
        assert_eq!(out, ds);
        assert_eq!(
            w,
            vec![Warning::UnknownStations {
                ids: vec!["XX".into()]
            }]
        );

        let all: Vec<String> = ds.station_ids();
        assert!(matches!(
            exclude_stations(&ds, &all),
            Err(Error::EmptyInput(_))
        ));
    }
}
