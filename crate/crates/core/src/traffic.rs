//! Speed records on a uniform time grid, converted to unit loads.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, SecondsFormat, Timelike, Utc};
use log::warn;

use crate::error::{Error, Result};
use crate::road_graph::{TransportGraph, UnitIdx};

pub const TRAFFIC_CSV_HEADER: [&str; 3] = ["unit_id", "timestamp_iso8601", "avg_speed_kmh"];

const MINUTES_PER_DAY: u32 = 1440;

/// Relative speed reduction against the speed limit, clamped to `[0, 1]`.
pub fn unit_load(limit_kmh: f64, speed_kmh: f64) -> Result<f64> {
    if !(limit_kmh > 0.0 && limit_kmh.is_finite()) {
        return Err(Error::Domain(format!("speed limit must be positive, got {limit_kmh}")));
    }
    if !(speed_kmh >= 0.0 && speed_kmh.is_finite()) {
        return Err(Error::Domain(format!("speed must be non-negative, got {speed_kmh}")));
    }
    Ok(((limit_kmh - speed_kmh) / limit_kmh).clamp(0.0, 1.0))
}

/// `(weekday, time-of-day slot)` conditioning cell. Weekday 0 is Monday.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bucket {
    pub weekday: u8,
    pub slot: u16,
}

/// Uniform sequence of time points `start + t * interval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    pub start: DateTime<Utc>,
    pub interval_minutes: u32,
    pub count: usize,
    /// Shift applied before bucketing; 0 buckets in UTC.
    pub bucket_offset_minutes: i32,
}

impl TimeGrid {
    pub fn new(start: DateTime<Utc>, interval_minutes: u32, count: usize) -> Result<Self> {
        if interval_minutes == 0 || !MINUTES_PER_DAY.is_multiple_of(interval_minutes) {
            return Err(Error::Domain(format!(
                "interval of {interval_minutes} minutes does not divide a day"
            )));
        }
        Ok(TimeGrid {
            start,
            interval_minutes,
            count,
            bucket_offset_minutes: 0,
        })
    }

    pub fn with_bucket_offset(mut self, minutes: i32) -> Self {
        self.bucket_offset_minutes = minutes;
        self
    }

    pub fn slots_per_day(&self) -> usize {
        (MINUTES_PER_DAY / self.interval_minutes) as usize
    }

    pub fn bucket_count(&self) -> usize {
        7 * self.slots_per_day()
    }

    pub fn instant(&self, t: usize) -> DateTime<Utc> {
        self.start + Duration::minutes(t as i64 * self.interval_minutes as i64)
    }

    /// Grid cell containing `at`, flooring to the interval.
    pub fn index_of(&self, at: DateTime<Utc>) -> Option<usize> {
        let secs = (at - self.start).num_seconds();
        if secs < 0 {
            return None;
        }
        let t = (secs / (self.interval_minutes as i64 * 60)) as usize;
        (t < self.count).then_some(t)
    }

    pub fn bucket_of(&self, t: usize) -> Result<Bucket> {
        if t >= self.count {
            return Err(Error::Domain(format!(
                "time point {t} outside grid of {} points",
                self.count
            )));
        }
        let local = self.instant(t) + Duration::minutes(self.bucket_offset_minutes as i64);
        let minute = local.hour() * 60 + local.minute();
        Ok(Bucket {
            weekday: local.weekday().num_days_from_monday() as u8,
            slot: (minute / self.interval_minutes) as u16,
        })
    }

    pub fn bucket_index(&self, b: Bucket) -> usize {
        b.weekday as usize * self.slots_per_day() + b.slot as usize
    }

    /// Bucket index of every time point.
    pub fn bucket_indices(&self) -> Vec<u16> {
        (0..self.count)
            .map(|t| self.bucket_index(self.bucket_of(t).expect("in range")) as u16)
            .collect()
    }
}

/// Unit loads per `(unit, time point)`, missing where nothing was recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadMatrix {
    grid: TimeGrid,
    n_units: usize,
    // unit-major; NaN marks a missing cell
    values: Vec<f64>,
}

impl LoadMatrix {
    pub fn empty(grid: TimeGrid, n_units: usize) -> Self {
        LoadMatrix {
            grid,
            n_units,
            values: vec![f64::NAN; n_units * grid.count],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn n_timepoints(&self) -> usize {
        self.grid.count
    }

    pub fn get(&self, u: UnitIdx, t: usize) -> Option<f64> {
        let v = self.values[u.index() * self.grid.count + t];
        (!v.is_nan()).then_some(v)
    }

    /// Sets a cell; `load` must lie in `[0, 1]`.
    pub fn set(&mut self, u: UnitIdx, t: usize, load: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&load) {
            return Err(Error::Domain(format!("unit load {load} outside [0, 1]")));
        }
        if u.index() >= self.n_units || t >= self.grid.count {
            return Err(Error::Contract(format!("cell ({}, {t}) outside matrix", u.0)));
        }
        self.values[u.index() * self.grid.count + t] = load;
        Ok(())
    }

    /// Raw row for one unit, NaN where missing.
    pub fn row(&self, u: UnitIdx) -> &[f64] {
        let n = self.grid.count;
        &self.values[u.index() * n..(u.index() + 1) * n]
    }

    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|v| !v.is_nan()).count()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub records: usize,
    pub unknown_units: usize,
    pub outside_grid: usize,
    pub duplicates: usize,
}

/// Collects speeds per cell. Duplicate cells are averaged after sorting, so
/// the outcome does not depend on record order.
pub struct SpeedAccumulator {
    grid: TimeGrid,
    n_units: usize,
    first: Vec<f64>,
    extra: HashMap<usize, Vec<f64>>,
    pub stats: IngestStats,
}

impl SpeedAccumulator {
    pub fn new(grid: TimeGrid, n_units: usize) -> Self {
        SpeedAccumulator {
            grid,
            n_units,
            first: vec![f64::NAN; n_units * grid.count],
            extra: HashMap::new(),
            stats: IngestStats::default(),
        }
    }

    pub fn push(&mut self, u: UnitIdx, t: usize, speed_kmh: f64) {
        self.stats.records += 1;
        if u.index() >= self.n_units {
            self.stats.unknown_units += 1;
            return;
        }
        if t >= self.grid.count {
            self.stats.outside_grid += 1;
            return;
        }
        let cell = u.index() * self.grid.count + t;
        if self.first[cell].is_nan() {
            self.first[cell] = speed_kmh;
        } else {
            self.stats.duplicates += 1;
            self.extra.entry(cell).or_default().push(speed_kmh);
        }
    }

    pub fn finish(self, g: &TransportGraph) -> Result<(LoadMatrix, IngestStats)> {
        if g.unit_count() != self.n_units {
            return Err(Error::Contract("graph does not match accumulator".into()));
        }
        let n = self.grid.count;
        let mut values = self.first;
        for (cell, mut rest) in self.extra {
            rest.push(values[cell]);
            rest.sort_by(f64::total_cmp);
            values[cell] = rest.iter().sum::<f64>() / rest.len() as f64;
        }
        for (i, v) in values.iter_mut().enumerate() {
            if v.is_nan() {
                continue;
            }
            let limit = g.units()[i / n.max(1)].speed_limit_kmh;
            *v = unit_load(limit, *v)?;
        }
        Ok((
            LoadMatrix {
                grid: self.grid,
                n_units: self.n_units,
                values,
            },
            self.stats,
        ))
    }
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s.trim())
        .ok()
        .map(|d| d.with_timezone(&Utc))
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

struct TrafficRow {
    unit_id: String,
    at: DateTime<Utc>,
    speed: f64,
}

fn for_each_record(path: &Path, mut f: impl FnMut(TrafficRow) -> Result<()>) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut line_no = 0u64;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let row = line.trim_end_matches(['\n', '\r']);
        if line_no == 1 {
            let header: Vec<&str> = row.split(',').map(str::trim).collect();
            if header != TRAFFIC_CSV_HEADER {
                return Err(Error::parse(
                    path,
                    1,
                    format!("expected header `{}`", TRAFFIC_CSV_HEADER.join(",")),
                ));
            }
            continue;
        }
        if row.trim().is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let (Some(unit_id), Some(ts), Some(speed), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::parse(path, line_no, "expected 3 fields"));
        };
        let at = parse_timestamp(ts)
            .ok_or_else(|| Error::parse(path, line_no, format!("bad timestamp `{ts}`")))?;
        let speed = speed
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|s| *s >= 0.0 && s.is_finite())
            .ok_or_else(|| Error::parse(path, line_no, format!("bad speed `{speed}`")))?;
        f(TrafficRow {
            unit_id: unit_id.trim().to_owned(),
            at,
            speed,
        })?;
    }
    Ok(())
}

/// Reads the traffic CSV onto `grid`. Records for unknown units or outside
/// the grid are counted and skipped.
pub fn ingest_records(
    path: impl AsRef<Path>,
    g: &TransportGraph,
    grid: TimeGrid,
) -> Result<(LoadMatrix, IngestStats)> {
    let path = path.as_ref();
    let mut acc = SpeedAccumulator::new(grid, g.unit_count());
    for_each_record(path, |row| {
        match (g.lookup(&row.unit_id), grid.index_of(row.at)) {
            (Ok(u), Some(t)) => acc.push(u, t, row.speed),
            (Err(_), _) => {
                acc.stats.records += 1;
                acc.stats.unknown_units += 1;
            }
            (Ok(_), None) => {
                acc.stats.records += 1;
                acc.stats.outside_grid += 1;
            }
        }
        Ok(())
    })?;
    let stats = acc.stats;
    if stats.unknown_units > 0 {
        warn!("{}: skipped {} records for unknown units", path.display(), stats.unknown_units);
    }
    if stats.outside_grid > 0 {
        warn!("{}: skipped {} records outside the time grid", path.display(), stats.outside_grid);
    }
    acc.finish(g)
}

/// Grid spanning the earliest to the latest record, start floored to the
/// interval. `None` for a file without records.
pub fn infer_grid(path: impl AsRef<Path>, interval_minutes: u32) -> Result<Option<TimeGrid>> {
    let path = path.as_ref();
    let mut span: Option<(DateTime<Utc>, DateTime<Utc>)> = None;
    for_each_record(path, |row| {
        span = Some(match span {
            None => (row.at, row.at),
            Some((lo, hi)) => (lo.min(row.at), hi.max(row.at)),
        });
        Ok(())
    })?;
    let Some((lo, hi)) = span else {
        return Ok(None);
    };
    let step = interval_minutes as i64 * 60;
    if step == 0 {
        return Err(Error::Domain("interval must be positive".into()));
    }
    let start_secs = lo.timestamp().div_euclid(step) * step;
    let start = DateTime::from_timestamp(start_secs, 0).expect("valid timestamp");
    let count = ((hi.timestamp() - start_secs) / step + 1) as usize;
    TimeGrid::new(start, interval_minutes, count).map(Some)
}

/// Writes `(unit, time point, speed)` records as traffic CSV.
pub fn write_traffic_csv<W: Write>(
    mut out: W,
    g: &TransportGraph,
    grid: &TimeGrid,
    records: impl IntoIterator<Item = (UnitIdx, usize, f64)>,
) -> std::io::Result<()> {
    writeln!(out, "{}", TRAFFIC_CSV_HEADER.join(","))?;
    let mut stamp_t = usize::MAX;
    let mut stamp = String::new();
    for (u, t, speed) in records {
        if t != stamp_t {
            stamp = format_timestamp(grid.instant(t));
            stamp_t = t;
        }
        writeln!(out, "{},{},{}", g.units()[u.index()].id, stamp, speed)?;
    }
    out.flush()
}
