//! CSV and JSON formats of the intermediate pipeline artifacts.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::clustering::{Cluster, ClusterId};
use crate::dependencies::DependencyPair;
use crate::error::{Error, Result};
use crate::eval::TruthPair;
use crate::merging::{SgId, Subgraph};
use crate::outliers::{AffectedSet, OutlierThresholds};
use crate::road_graph::{TransportGraph, UnitIdx};
use crate::tracking::TrackedCluster;
use crate::traffic::{format_timestamp, parse_timestamp, LoadMatrix, TimeGrid};

pub const THRESHOLDS_HEADER: [&str; 7] = ["unit_id", "weekday", "slot", "q1", "q3", "upper_bound", "n"];
pub const AFFECTED_HEADER: [&str; 2] = ["timepoint", "unit_id"];
pub const CLUSTERS_HEADER: [&str; 3] = ["timepoint", "cluster_id", "unit_id"];
pub const SUBGRAPHS_HEADER: [&str; 2] = ["sg_id", "unit_id"];
pub const SUBGRAPH_SOURCES_HEADER: [&str; 2] = ["sg_id", "timepoint"];
pub const RANKED_HEADER: [&str; 6] = ["rank", "sg1_id", "sg2_id", "mi_bits", "dist_m", "score"];
pub const TRACKS_HEADER: [&str; 6] = ["track_id", "birth_t", "death_t", "duration_steps", "mean_size", "peak_size"];
pub const TRACK_MEMBERS_HEADER: [&str; 4] = ["track_id", "timepoint", "cluster_id", "size"];
pub const TRUTH_HEADER: [&str; 3] = ["pair", "region", "unit_id"];

fn open(path: &Path, header: &[&str]) -> Result<csv::Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let got = r.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?;
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::parse(path, 1, format!("expected header `{}`", header.join(","))));
    }
    Ok(r)
}

/// Iterates the records of `path` with their line numbers.
fn each_record(
    path: &Path,
    header: &[&str],
    mut f: impl FnMut(&csv::StringRecord, u64) -> Result<()>,
) -> Result<()> {
    let mut r = open(path, header)?;
    let mut rec = csv::StringRecord::new();
    loop {
        let more = r.read_record(&mut rec).map_err(|e| {
            Error::parse(path, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        if !more {
            return Ok(());
        }
        let line = rec.position().map_or(0, |p| p.line());
        f(&rec, line)?;
    }
}

fn field<T: FromStr>(path: &Path, rec: &csv::StringRecord, line: u64, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::parse(path, line, format!("bad value `{raw}` in column {}", i + 1)))
}

fn unit(path: &Path, g: &TransportGraph, rec: &csv::StringRecord, line: u64, i: usize) -> Result<UnitIdx> {
    let id = rec.get(i).unwrap_or("");
    g.lookup(id)
        .map_err(|_| Error::parse(path, line, format!("unknown unit id `{id}`")))
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::Runtime(e.to_string()))?
        .flush()
        .map_err(|e| Error::io("<csv output>", e))
}

/// On-disk description of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub start: String,
    pub interval_minutes: u32,
    pub count: usize,
    pub bucket_offset_minutes: i32,
}

impl From<&TimeGrid> for GridFile {
    fn from(g: &TimeGrid) -> Self {
        GridFile {
            start: format_timestamp(g.start),
            interval_minutes: g.interval_minutes,
            count: g.count,
            bucket_offset_minutes: g.bucket_offset_minutes,
        }
    }
}

impl GridFile {
    pub fn to_grid(&self) -> Result<TimeGrid> {
        let start: DateTime<Utc> = parse_timestamp(&self.start)
            .ok_or_else(|| Error::Validation(format!("bad grid start `{}`", self.start)))?;
        Ok(TimeGrid::new(start, self.interval_minutes, self.count)?.with_bucket_offset(self.bucket_offset_minutes))
    }
}

pub fn write_grid(grid: &TimeGrid, mut out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &GridFile::from(grid))?;
    writeln!(out).map_err(|e| Error::io("<grid json>", e))
}

pub fn read_grid(path: &Path) -> Result<TimeGrid> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let gf: GridFile = serde_json::from_reader(BufReader::new(file))?;
    gf.to_grid()
}

/// Wide load table: one row per time point, one column per unit, empty
/// cells where the load is missing.
pub fn write_loads(g: &TransportGraph, m: &LoadMatrix, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["timestamp".to_owned()];
    header.extend(g.units().iter().map(|u| u.id.clone()));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for t in 0..m.n_timepoints() {
        row.clear();
        row.push(format_timestamp(m.grid().instant(t)));
        for u in g.unit_ids() {
            row.push(m.get(u, t).map_or_else(String::new, |v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn read_loads(path: &Path, g: &TransportGraph, grid: TimeGrid) -> Result<LoadMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().from_reader(BufReader::new(file));
    let header = r.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    if header.get(0) != Some("timestamp") {
        return Err(Error::parse(path, 1, "first column must be `timestamp`"));
    }
    let cols: Vec<UnitIdx> = header
        .iter()
        .skip(1)
        .map(|id| g.lookup(id).map_err(|_| Error::parse(path, 1, format!("unknown unit id `{id}`"))))
        .collect::<Result<_>>()?;
    let mut m = LoadMatrix::empty(grid, g.unit_count());
    let mut t = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::parse(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if t >= grid.count || parse_timestamp(&rec[0]) != Some(grid.instant(t)) {
            return Err(Error::parse(path, line, "rows do not follow the time grid"));
        }
        for (i, &u) in cols.iter().enumerate() {
            let raw = &rec[i + 1];
            if !raw.is_empty() {
                let v: f64 = field(path, &rec, line, i + 1)?;
                m.set(u, t, v).map_err(|e| Error::parse(path, line, e.to_string()))?;
            }
        }
        t += 1;
    }
    if t != grid.count {
        return Err(Error::parse(path, 0, format!("expected {} rows, found {t}", grid.count)));
    }
    Ok(m)
}

pub fn write_thresholds(g: &TransportGraph, th: &OutlierThresholds, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(THRESHOLDS_HEADER)?;
    let spd = th.grid().slots_per_day();
    for (u, b, bound) in th.iter() {
        w.write_record([
            g.units()[u.index()].id.clone(),
            (b / spd).to_string(),
            (b % spd).to_string(),
            bound.q1.to_string(),
            bound.q3.to_string(),
            bound.upper_bound.to_string(),
            bound.n.to_string(),
        ])?;
    }
    finish(w)
}

pub fn write_affected(g: &TransportGraph, sets: &[AffectedSet], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AFFECTED_HEADER)?;
    for s in sets {
        for &u in &s.units {
            w.write_record([s.timepoint.to_string().as_str(), &g.units()[u.index()].id])?;
        }
    }
    finish(w)
}

/// Reads affected sets for time points `0..n_timepoints`; time points
/// without rows get empty sets.
pub fn read_affected(path: &Path, g: &TransportGraph, n_timepoints: usize) -> Result<Vec<AffectedSet>> {
    let mut per_t: Vec<Vec<UnitIdx>> = vec![Vec::new(); n_timepoints];
    each_record(path, &AFFECTED_HEADER, |rec, line| {
        let t: usize = field(path, rec, line, 0)?;
        let u = unit(path, g, rec, line, 1)?;
        per_t
            .get_mut(t)
            .ok_or_else(|| Error::parse(path, line, format!("time point {t} outside grid")))?
            .push(u);
        Ok(())
    })?;
    Ok(per_t.into_iter().enumerate().map(|(t, us)| AffectedSet::new(t, us)).collect())
}

pub fn write_clusters(g: &TransportGraph, clusters: &[Cluster], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CLUSTERS_HEADER)?;
    for c in clusters {
        let (t, id) = (c.timepoint.to_string(), c.id.0.to_string());
        for &u in &c.units {
            w.write_record([t.as_str(), &id, &g.units()[u.index()].id])?;
        }
    }
    finish(w)
}

/// Clusters sorted by id.
pub fn read_clusters(path: &Path, g: &TransportGraph) -> Result<Vec<Cluster>> {
    let mut by_id: BTreeMap<u32, Cluster> = BTreeMap::new();
    each_record(path, &CLUSTERS_HEADER, |rec, line| {
        let t: usize = field(path, rec, line, 0)?;
        let id: u32 = field(path, rec, line, 1)?;
        let u = unit(path, g, rec, line, 2)?;
        let c = by_id.entry(id).or_insert_with(|| Cluster {
            id: ClusterId(id),
            timepoint: t,
            units: Vec::new(),
        });
        if c.timepoint != t {
            return Err(Error::parse(path, line, format!("cluster {id} spans several time points")));
        }
        c.units.push(u);
        Ok(())
    })?;
    Ok(by_id
        .into_values()
        .map(|mut c| {
            c.units.sort_unstable();
            c.units.dedup();
            c
        })
        .collect())
}

pub fn write_subgraphs(g: &TransportGraph, sgs: &[Subgraph], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUBGRAPHS_HEADER)?;
    for sg in sgs {
        let id = sg.id.0.to_string();
        for &u in &sg.units {
            w.write_record([id.as_str(), &g.units()[u.index()].id])?;
        }
    }
    finish(w)
}

pub fn write_subgraph_sources(sgs: &[Subgraph], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUBGRAPH_SOURCES_HEADER)?;
    for sg in sgs {
        let id = sg.id.0.to_string();
        for t in &sg.source_timepoints {
            w.write_record([id.as_str(), &t.to_string()])?;
        }
    }
    finish(w)
}

/// Subgraphs sorted by id, with source time points from `sources` when given.
pub fn read_subgraphs(path: &Path, sources: Option<&Path>, g: &TransportGraph) -> Result<Vec<Subgraph>> {
    let mut by_id: BTreeMap<u32, Subgraph> = BTreeMap::new();
    each_record(path, &SUBGRAPHS_HEADER, |rec, line| {
        let id: u32 = field(path, rec, line, 0)?;
        let u = unit(path, g, rec, line, 1)?;
        by_id
            .entry(id)
            .or_insert_with(|| Subgraph {
                id: SgId(id),
                units: Vec::new(),
                source_timepoints: Vec::new(),
            })
            .units
            .push(u);
        Ok(())
    })?;
    if let Some(sp) = sources {
        each_record(sp, &SUBGRAPH_SOURCES_HEADER, |rec, line| {
            let id: u32 = field(sp, rec, line, 0)?;
            let t: usize = field(sp, rec, line, 1)?;
            by_id
                .get_mut(&id)
                .ok_or_else(|| Error::parse(sp, line, format!("unknown subgraph {id}")))?
                .source_timepoints
                .push(t);
            Ok(())
        })?;
    }
    Ok(by_id
        .into_values()
        .map(|mut s| {
            s.units.sort_unstable();
            s.units.dedup();
            s.source_timepoints.sort_unstable();
            s.source_timepoints.dedup();
            s
        })
        .collect())
}

pub fn write_ranked(pairs: &[DependencyPair], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RANKED_HEADER)?;
    for (i, p) in pairs.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            p.sg1.0.to_string(),
            p.sg2.0.to_string(),
            p.mi.to_string(),
            p.dist_m.to_string(),
            p.score.to_string(),
        ])?;
    }
    finish(w)
}

/// Pairs in rank order.
pub fn read_ranked(path: &Path) -> Result<Vec<DependencyPair>> {
    let mut rows = Vec::new();
    each_record(path, &RANKED_HEADER, |rec, line| {
        let rank: usize = field(path, rec, line, 0)?;
        rows.push((
            rank,
            DependencyPair {
                sg1: SgId(field(path, rec, line, 1)?),
                sg2: SgId(field(path, rec, line, 2)?),
                mi: field(path, rec, line, 3)?,
                dist_m: field(path, rec, line, 4)?,
                score: field(path, rec, line, 5)?,
            },
        ));
        Ok(())
    })?;
    rows.sort_by_key(|(r, _)| *r);
    Ok(rows.into_iter().map(|(_, p)| p).collect())
}

pub fn write_tracks(tracks: &[TrackedCluster], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACKS_HEADER)?;
    for t in tracks {
        w.write_record([
            t.track_id.to_string(),
            t.birth_timepoint.to_string(),
            t.death_timepoint.to_string(),
            t.duration_steps().to_string(),
            t.mean_size().to_string(),
            t.peak_size().to_string(),
        ])?;
    }
    finish(w)
}

pub fn write_track_members(tracks: &[TrackedCluster], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACK_MEMBERS_HEADER)?;
    for t in tracks {
        for (i, (c, size)) in t.member_clusters.iter().zip(&t.sizes).enumerate() {
            w.write_record([
                t.track_id.to_string(),
                (t.birth_timepoint + i).to_string(),
                c.0.to_string(),
                size.to_string(),
            ])?;
        }
    }
    finish(w)
}

/// Tracks rebuilt from the member table, sorted by id.
pub fn read_tracks(path: &Path) -> Result<Vec<TrackedCluster>> {
    let mut by_id: BTreeMap<u32, TrackedCluster> = BTreeMap::new();
    each_record(path, &TRACK_MEMBERS_HEADER, |rec, line| {
        let id: u32 = field(path, rec, line, 0)?;
        let t: usize = field(path, rec, line, 1)?;
        let c: u32 = field(path, rec, line, 2)?;
        let size: usize = field(path, rec, line, 3)?;
        let tr = by_id.entry(id).or_insert_with(|| TrackedCluster {
            track_id: id,
            birth_timepoint: t,
            death_timepoint: t,
            member_clusters: Vec::new(),
            sizes: Vec::new(),
        });
        if t != tr.birth_timepoint + tr.sizes.len() {
            return Err(Error::parse(path, line, format!("track {id} is not contiguous")));
        }
        tr.death_timepoint = t;
        tr.member_clusters.push(ClusterId(c));
        tr.sizes.push(size);
        Ok(())
    })?;
    Ok(by_id.into_values().collect())
}

pub fn write_truth(rows: &[(usize, char, String)], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRUTH_HEADER)?;
    for (p, r, id) in rows {
        w.write_record([p.to_string().as_str(), &r.to_string(), id])?;
    }
    finish(w)
}

/// Planted pairs in pair order. Regions are `a` and `b`.
pub fn read_truth(path: &Path, g: &TransportGraph) -> Result<Vec<TruthPair>> {
    let mut pairs: BTreeMap<usize, TruthPair> = BTreeMap::new();
    each_record(path, &TRUTH_HEADER, |rec, line| {
        let p: usize = field(path, rec, line, 0)?;
        let u = unit(path, g, rec, line, 2)?;
        let tp = pairs.entry(p).or_insert_with(|| TruthPair { region_a: vec![], region_b: vec![] });
        match &rec[1] {
            "a" => tp.region_a.push(u),
            "b" => tp.region_b.push(u),
            other => return Err(Error::parse(path, line, format!("region must be `a` or `b`, got `{other}`"))),
        }
        Ok(())
    })?;
    Ok(pairs
        .into_values()
        .map(|mut t| {
            t.region_a.sort_unstable();
            t.region_b.sort_unstable();
            t
        })
        .collect())
}
