//! Transportation graph: junctions, directed units (road segments) and the
//! two distance notions used downstream.
//!
//! * [`TransportGraph::unit_hop_distance`] counts the *intermediate* units on
//!   the shortest undirected path between two unit sets. Units sharing a
//!   junction are at gap 0.
//! * [`TransportGraph::geo_distance`] is the smallest great-circle distance
//!   between any two geometry vertices of the two sets. It is a vertex-level
//!   approximation of the segment-to-segment distance.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use log::{debug, warn};

use crate::error::{Error, Result};

/// Mean Earth radius used by the haversine distance.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

pub const GRAPH_CSV_HEADER: [&str; 7] = [
    "unit_id",
    "from_node",
    "to_node",
    "road_class",
    "speed_limit_kmh",
    "length_m",
    "wkt_linestring",
];

/// The major-road classes retained in the transportation graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RoadClass {
    Motorway,
    MotorwayLink,
    Trunk,
    TrunkLink,
    Primary,
    PrimaryLink,
    Secondary,
    SecondaryLink,
    Tertiary,
    TertiaryLink,
}

impl RoadClass {
    pub const ALL: [RoadClass; 10] = [
        RoadClass::Motorway,
        RoadClass::MotorwayLink,
        RoadClass::Trunk,
        RoadClass::TrunkLink,
        RoadClass::Primary,
        RoadClass::PrimaryLink,
        RoadClass::Secondary,
        RoadClass::SecondaryLink,
        RoadClass::Tertiary,
        RoadClass::TertiaryLink,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoadClass::Motorway => "motorway",
            RoadClass::MotorwayLink => "motorway_link",
            RoadClass::Trunk => "trunk",
            RoadClass::TrunkLink => "trunk_link",
            RoadClass::Primary => "primary",
            RoadClass::PrimaryLink => "primary_link",
            RoadClass::Secondary => "secondary",
            RoadClass::SecondaryLink => "secondary_link",
            RoadClass::Tertiary => "tertiary",
            RoadClass::TertiaryLink => "tertiary_link",
        }
    }
}

impl fmt::Display for RoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoadClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RoadClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::Domain(format!("road class `{s}` is not a major road class")))
    }
}

/// WGS84 position in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub fn new(lon: f64, lat: f64) -> Self {
        LonLat { lon, lat }
    }

    pub fn is_valid(&self) -> bool {
        (-180.0..=180.0).contains(&self.lon) && (-90.0..=90.0).contains(&self.lat)
    }
}

/// Great-circle distance in meters.
pub fn haversine_m(a: LonLat, b: LonLat) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Dense index of a unit inside one [`TransportGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitIdx(pub u32);

impl UnitIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JunctionIdx(pub u32);

impl JunctionIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub id: String,
    pub position: LonLat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub id: String,
    pub from: JunctionIdx,
    pub to: JunctionIdx,
    pub road_class: RoadClass,
    pub speed_limit_kmh: f64,
    pub length_m: f64,
    pub geometry: Vec<LonLat>,
}

impl Unit {
    pub fn is_self_loop(&self) -> bool {
        self.from == self.to
    }
}

/// Shortest-path gap between two unit sets, counted in intermediate units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gap {
    Units(u32),
    Unreachable,
}

impl Gap {
    pub fn within(self, max_gap: u32) -> bool {
        matches!(self, Gap::Units(g) if g <= max_gap)
    }
}

/// A unit before it is attached to a graph; endpoints are junction ids.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSpec {
    pub id: String,
    pub from_node: String,
    pub to_node: String,
    pub road_class: RoadClass,
    pub speed_limit_kmh: f64,
    pub length_m: f64,
    pub geometry: Vec<LonLat>,
}

/// Bookkeeping from [`load_graph`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub dropped_by_class: usize,
    pub self_loops: usize,
}

/// Directed multigraph of junctions and units. Immutable once built.
#[derive(Debug, Clone)]
pub struct TransportGraph {
    junctions: Vec<Junction>,
    units: Vec<Unit>,
    incident: Vec<Vec<UnitIdx>>,
    unit_lookup: HashMap<String, UnitIdx>,
}

impl TransportGraph {
    /// Builds and validates a graph. Junctions missing from `junctions` are
    /// created from the first/last geometry vertex of the units that use them.
    pub fn build(junctions: Vec<Junction>, units: Vec<UnitSpec>) -> Result<Self> {
        Self::build_inner(junctions, units, true)
    }

    fn build_inner(
        junctions: Vec<Junction>,
        specs: Vec<UnitSpec>,
        create_missing_junctions: bool,
    ) -> Result<Self> {
        let mut junction_lookup: HashMap<String, JunctionIdx> = HashMap::new();
        let mut all_junctions = Vec::with_capacity(junctions.len());
        for j in junctions {
            if !j.position.is_valid() {
                return Err(Error::Validation(format!(
                    "junction `{}` has out-of-range coordinates",
                    j.id
                )));
            }
            let idx = JunctionIdx(all_junctions.len() as u32);
            if junction_lookup.insert(j.id.clone(), idx).is_some() {
                return Err(Error::Validation(format!("duplicate junction id `{}`", j.id)));
            }
            all_junctions.push(j);
        }

        let mut dangling = Vec::new();
        let mut units = Vec::with_capacity(specs.len());
        let mut unit_lookup = HashMap::with_capacity(specs.len());
        for spec in specs {
            validate_unit(&spec)?;
            let mut endpoint = |node: &str, at: LonLat| -> Option<JunctionIdx> {
                if let Some(&idx) = junction_lookup.get(node) {
                    return Some(idx);
                }
                if !create_missing_junctions {
                    return None;
                }
                let idx = JunctionIdx(all_junctions.len() as u32);
                all_junctions.push(Junction {
                    id: node.to_owned(),
                    position: at,
                });
                junction_lookup.insert(node.to_owned(), idx);
                Some(idx)
            };
            let first = spec.geometry[0];
            let last = *spec.geometry.last().expect("validated geometry");
            let (from, to) = match (endpoint(&spec.from_node, first), endpoint(&spec.to_node, last)) {
                (Some(f), Some(t)) => (f, t),
                _ => {
                    dangling.push(spec.id.clone());
                    continue;
                }
            };
            let idx = UnitIdx(units.len() as u32);
            if unit_lookup.insert(spec.id.clone(), idx).is_some() {
                return Err(Error::Validation(format!("duplicate unit id `{}`", spec.id)));
            }
            units.push(Unit {
                id: spec.id,
                from,
                to,
                road_class: spec.road_class,
                speed_limit_kmh: spec.speed_limit_kmh,
                length_m: spec.length_m,
                geometry: spec.geometry,
            });
        }
        if !dangling.is_empty() {
            return Err(Error::Validation(format!(
                "units with dangling endpoints: {}",
                dangling.join(", ")
            )));
        }

        let mut incident = vec![Vec::new(); all_junctions.len()];
        for (i, u) in units.iter().enumerate() {
            let idx = UnitIdx(i as u32);
            incident[u.from.index()].push(idx);
            if u.to != u.from {
                incident[u.to.index()].push(idx);
            }
        }

        Ok(TransportGraph {
            junctions: all_junctions,
            units,
            incident,
            unit_lookup,
        })
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    pub fn junction_count(&self) -> usize {
        self.junctions.len()
    }

    pub fn unit(&self, idx: UnitIdx) -> Result<&Unit> {
        self.units
            .get(idx.index())
            .ok_or_else(|| Error::UnknownUnit(format!("#{}", idx.0)))
    }

    pub fn unit_ids(&self) -> impl Iterator<Item = UnitIdx> {
        (0..self.units.len() as u32).map(UnitIdx)
    }

    pub fn lookup(&self, id: &str) -> Result<UnitIdx> {
        self.unit_lookup
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownUnit(id.to_owned()))
    }

    pub fn lookup_all<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<UnitIdx>> {
        ids.iter().map(|s| self.lookup(s.as_ref())).collect()
    }

    /// Units incident to the given junction.
    pub fn incident_units(&self, j: JunctionIdx) -> &[UnitIdx] {
        &self.incident[j.index()]
    }

    /// Units sharing at least one junction with `u`, excluding `u` itself.
    /// Parallel units may appear more than once.
    pub fn neighbours(&self, u: UnitIdx) -> impl Iterator<Item = UnitIdx> + '_ {
        let unit = &self.units[u.index()];
        let to = (unit.to != unit.from).then_some(unit.to);
        std::iter::once(unit.from)
            .chain(to)
            .flat_map(move |j| self.incident[j.index()].iter().copied())
            .filter(move |&v| v != u)
    }

    fn check_ids(&self, ids: &[UnitIdx]) -> Result<()> {
        match ids.iter().find(|u| u.index() >= self.units.len()) {
            Some(u) => Err(Error::UnknownUnit(format!("#{}", u.0))),
            None => Ok(()),
        }
    }

    /// Minimum number of intermediate units on any undirected path from a
    /// unit of `a` to a unit of `b`.
    pub fn unit_hop_distance(&self, a: &[UnitIdx], b: &[UnitIdx]) -> Result<Gap> {
        self.check_ids(a)?;
        self.check_ids(b)?;
        if a.is_empty() || b.is_empty() {
            return Err(Error::Contract("hop distance needs two non-empty unit sets".into()));
        }
        let targets: HashSet<UnitIdx> = b.iter().copied().collect();
        if a.iter().any(|u| targets.contains(u)) {
            return Err(Error::Contract("hop distance needs disjoint unit sets".into()));
        }

        let mut hops = vec![u32::MAX; self.units.len()];
        let mut queue = VecDeque::new();
        for &u in a {
            hops[u.index()] = 0;
            queue.push_back(u);
        }
        while let Some(u) = queue.pop_front() {
            let next = hops[u.index()] + 1;
            for v in self.neighbours(u) {
                if hops[v.index()] != u32::MAX {
                    continue;
                }
                if targets.contains(&v) {
                    return Ok(Gap::Units(next - 1));
                }
                hops[v.index()] = next;
                queue.push_back(v);
            }
        }
        Ok(Gap::Unreachable)
    }

    /// Shortest vertex-to-vertex great-circle distance between two unit sets.
    pub fn geo_distance(&self, sg1: &[UnitIdx], sg2: &[UnitIdx]) -> Result<f64> {
        self.check_ids(sg1)?;
        self.check_ids(sg2)?;
        if sg1.is_empty() || sg2.is_empty() {
            return Err(Error::Contract("geo distance needs two non-empty unit sets".into()));
        }
        let left: HashSet<UnitIdx> = sg1.iter().copied().collect();
        if sg2.iter().any(|u| left.contains(u)) {
            return Ok(0.0);
        }
        let a = self.vertices(sg1);
        let b = self.vertices(sg2);
        Ok(min_vertex_distance(&a, &b))
    }

    /// All geometry vertices of the given units.
    pub fn vertices(&self, units: &[UnitIdx]) -> Vec<LonLat> {
        units
            .iter()
            .flat_map(|u| self.units[u.index()].geometry.iter().copied())
            .collect()
    }
}

pub(crate) fn min_vertex_distance(a: &[LonLat], b: &[LonLat]) -> f64 {
    let mut best = f64::INFINITY;
    for &p in a {
        for &q in b {
            let d = haversine_m(p, q);
            if d < best {
                best = d;
            }
        }
    }
    best
}

fn validate_unit(u: &UnitSpec) -> Result<()> {
    let fail = |what: &str| Err(Error::Validation(format!("unit `{}`: {what}", u.id)));
    if u.id.is_empty() {
        return Err(Error::Validation("empty unit id".into()));
    }
    if !(u.speed_limit_kmh > 0.0 && u.speed_limit_kmh.is_finite()) {
        return fail("speed limit must be positive");
    }
    if !(u.length_m > 0.0 && u.length_m.is_finite()) {
        return fail("length must be positive");
    }
    if u.geometry.len() < 2 {
        return fail("geometry needs at least two vertices");
    }
    if u.geometry.iter().any(|p| !p.is_valid()) {
        return fail("geometry has out-of-range coordinates");
    }
    if u.from_node == u.to_node && u.geometry.first() != u.geometry.last() {
        return fail("self-loop whose geometry is not closed");
    }
    Ok(())
}

/// Parses `LINESTRING (lon lat, lon lat, ...)`.
pub fn parse_wkt_linestring(s: &str) -> Result<Vec<LonLat>, String> {
    let s = s.trim();
    let rest = s
        .get(..10)
        .filter(|head| head.eq_ignore_ascii_case("linestring"))
        .map(|_| s[10..].trim())
        .ok_or_else(|| format!("expected WKT LINESTRING, got `{s}`"))?;
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| "unbalanced parentheses in LINESTRING".to_string())?;
    inner
        .split(',')
        .map(|pair| {
            let mut it = pair.split_whitespace();
            let lon = it.next().and_then(|v| v.parse::<f64>().ok());
            let lat = it.next().and_then(|v| v.parse::<f64>().ok());
            match (lon, lat, it.next()) {
                (Some(lon), Some(lat), None) => Ok(LonLat { lon, lat }),
                _ => Err(format!("bad coordinate pair `{}`", pair.trim())),
            }
        })
        .collect()
}

pub fn format_wkt_linestring(points: &[LonLat]) -> String {
    let coords: Vec<String> = points.iter().map(|p| format!("{} {}", p.lon, p.lat)).collect();
    format!("LINESTRING ({})", coords.join(", "))
}

/// Reads the graph CSV. Units outside the major road classes are dropped
/// and counted in the returned stats.
pub fn load_graph(path: impl AsRef<Path>) -> Result<(TransportGraph, LoadStats)> {
    load_graph_with_junctions(path, None::<&Path>)
}

/// Like [`load_graph`], with an optional `node_id,lon,lat` junction file.
/// When given, every unit endpoint must appear in it.
pub fn load_graph_with_junctions(
    path: impl AsRef<Path>,
    junction_path: Option<impl AsRef<Path>>,
) -> Result<(TransportGraph, LoadStats)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != GRAPH_CSV_HEADER {
        return Err(Error::parse(
            path,
            1,
            format!("expected header `{}`", GRAPH_CSV_HEADER.join(",")),
        ));
    }

    let mut stats = LoadStats::default();
    let mut specs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |msg: String| Error::parse(path, line, msg);
        let road_class = match record[3].parse::<RoadClass>() {
            Ok(c) => c,
            Err(_) => {
                debug!("dropping unit `{}` with road class `{}`", &record[0], &record[3]);
                stats.dropped_by_class += 1;
                continue;
            }
        };
        let speed_limit_kmh = record[4]
            .parse::<f64>()
            .map_err(|_| bad(format!("bad speed limit `{}`", &record[4])))?;
        let length_m = record[5]
            .parse::<f64>()
            .map_err(|_| bad(format!("bad length `{}`", &record[5])))?;
        let geometry = parse_wkt_linestring(&record[6]).map_err(bad)?;
        let spec = UnitSpec {
            id: record[0].to_owned(),
            from_node: record[1].to_owned(),
            to_node: record[2].to_owned(),
            road_class,
            speed_limit_kmh,
            length_m,
            geometry,
        };
        validate_unit(&spec).map_err(|e| bad(e.to_string()))?;
        if spec.from_node == spec.to_node {
            stats.self_loops += 1;
        }
        specs.push(spec);
    }
    if stats.dropped_by_class > 0 {
        warn!(
            "{}: dropped {} units outside the major road classes",
            path.display(),
            stats.dropped_by_class
        );
    }

    let graph = match junction_path {
        Some(jp) => {
            let junctions = read_junctions(jp.as_ref())?;
            TransportGraph::build_inner(junctions, specs, false)?
        }
        None => TransportGraph::build_inner(Vec::new(), specs, true)?,
    };
    Ok((graph, stats))
}

fn read_junctions(path: &Path) -> Result<Vec<Junction>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            Error::parse(path, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::parse(path, line, "expected `node_id,lon,lat`"));
        }
        let coord = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("bad coordinate `{}`", &record[i])))
        };
        out.push(Junction {
            id: record[0].to_owned(),
            position: LonLat::new(coord(1)?, coord(2)?),
        });
    }
    Ok(out)
}

/// Writes the graph in the same CSV schema [`load_graph`] reads.
pub fn write_graph_csv(g: &TransportGraph, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GRAPH_CSV_HEADER)?;
    for u in g.units() {
        w.write_record([
            u.id.as_str(),
            g.junctions[u.from.index()].id.as_str(),
            g.junctions[u.to.index()].id.as_str(),
            u.road_class.as_str(),
            &u.speed_limit_kmh.to_string(),
            &u.length_m.to_string(),
            &format_wkt_linestring(&u.geometry),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<graph csv>", e))?;
    Ok(())
}

pub fn save_graph(g: &TransportGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_graph_csv(g, BufWriter::new(file))
}
