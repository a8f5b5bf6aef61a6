//! Synthetic grid networks and speed records with planted dependencies.
//!
//! A scenario is a rectangular street grid with a diurnal speed profile, per
//! cell Gaussian jitter and a number of planted region pairs. Each pair shares
//! one Bernoulli activation series; while active, both regions drive at a
//! fraction of their limit.

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::cluster_affected;
use crate::error::{Error, Result};
use crate::outliers::AffectedSet;
use crate::road_graph::{haversine_m, Gap, Junction, LonLat, RoadClass, TransportGraph, UnitIdx, UnitSpec};
use crate::traffic::{parse_timestamp, write_traffic_csv, LoadMatrix, SpeedAccumulator, TimeGrid};

const M_PER_DEG_LAT: f64 = 111_195.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Junction rows and columns.
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    /// Units per link between two neighbouring junctions.
    pub segments_per_link: usize,
    pub origin_lon: f64,
    pub origin_lat: f64,
    /// Every n-th row and column is a primary road.
    pub primary_every: usize,
    pub primary_limit_kmh: f64,
    pub secondary_limit_kmh: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            rows: 8,
            cols: 8,
            spacing_m: 300.0,
            segments_per_link: 5,
            origin_lon: 9.7,
            origin_lat: 52.37,
            primary_every: 4,
            primary_limit_kmh: 60.0,
            secondary_limit_kmh: 50.0,
        }
    }
}

pub fn junction_id(r: usize, c: usize) -> String {
    format!("j{r}_{c}")
}

/// Unit from junction `(r, c)` to `(r, c + 1)` on a grid with one unit per link.
pub fn horizontal_id(r: usize, c: usize) -> String {
    format!("h{r}_{c}")
}

/// Unit from junction `(r, c)` to `(r + 1, c)` on a grid with one unit per link.
pub fn vertical_id(r: usize, c: usize) -> String {
    format!("v{r}_{c}")
}

fn segment_id(horizontal: bool, r: usize, c: usize, s: usize, segments: usize) -> String {
    let base = if horizontal { horizontal_id(r, c) } else { vertical_id(r, c) };
    if segments == 1 {
        base
    } else {
        format!("{base}_{s}")
    }
}

fn segment_node(horizontal: bool, r: usize, c: usize, s: usize, segments: usize) -> String {
    match (s, horizontal) {
        (0, _) => junction_id(r, c),
        (s, true) if s == segments => junction_id(r, c + 1),
        (s, false) if s == segments => junction_id(r + 1, c),
        (s, true) => format!("mh{r}_{c}_{s}"),
        (s, false) => format!("mv{r}_{c}_{s}"),
    }
}

/// Unit ids along every grid row, then along every grid column, in order.
pub fn grid_lines(spec: &GridSpec) -> Vec<Vec<String>> {
    let k = spec.segments_per_link;
    let rows = (0..spec.rows).map(|r| {
        (0..spec.cols - 1)
            .flat_map(|c| (0..k).map(move |s| segment_id(true, r, c, s, k)))
            .collect()
    });
    let cols = (0..spec.cols).map(|c| {
        (0..spec.rows - 1)
            .flat_map(|r| (0..k).map(move |s| segment_id(false, r, c, s, k)))
            .collect()
    });
    rows.chain(cols).collect()
}

impl GridSpec {
    fn position(&self, r: usize, c: usize) -> LonLat {
        let dlat = self.spacing_m / M_PER_DEG_LAT;
        let dlon = dlat / self.origin_lat.to_radians().cos();
        LonLat::new(self.origin_lon + c as f64 * dlon, self.origin_lat + r as f64 * dlat)
    }

    fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::Validation("grid needs at least 2 rows and 2 columns".into()));
        }
        if !(self.spacing_m > 0.0) {
            return Err(Error::Validation("grid spacing_m must be positive".into()));
        }
        if self.segments_per_link == 0 {
            return Err(Error::Validation("grid segments_per_link must be at least 1".into()));
        }
        if self.primary_every == 0 {
            return Err(Error::Validation("grid primary_every must be at least 1".into()));
        }
        if !(self.primary_limit_kmh > 0.0 && self.secondary_limit_kmh > 0.0) {
            return Err(Error::Validation("grid speed limits must be positive".into()));
        }
        if !LonLat::new(self.origin_lon, self.origin_lat).is_valid() {
            return Err(Error::Validation("grid origin is not a valid coordinate".into()));
        }
        Ok(())
    }
}

/// Street grid with one unit per junction link. Units have three vertices.
pub fn grid_network(spec: &GridSpec) -> Result<TransportGraph> {
    spec.validate()?;
    let mut junctions = Vec::with_capacity(spec.rows * spec.cols);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            junctions.push(Junction {
                id: junction_id(r, c),
                position: spec.position(r, c),
            });
        }
    }
    let k = spec.segments_per_link;
    let lerp = |a: LonLat, b: LonLat, f: f64| LonLat::new(a.lon + (b.lon - a.lon) * f, a.lat + (b.lat - a.lat) * f);
    let mut units = Vec::new();
    let mut link = |horizontal: bool, r: usize, c: usize, primary: bool| {
        let pa = spec.position(r, c);
        let pb = if horizontal { spec.position(r, c + 1) } else { spec.position(r + 1, c) };
        for s in 0..k {
            let p0 = lerp(pa, pb, s as f64 / k as f64);
            let p1 = lerp(pa, pb, (s + 1) as f64 / k as f64);
            let mid = lerp(p0, p1, 0.5);
            units.push(UnitSpec {
                id: segment_id(horizontal, r, c, s, k),
                from_node: segment_node(horizontal, r, c, s, k),
                to_node: segment_node(horizontal, r, c, s + 1, k),
                road_class: if primary { RoadClass::Primary } else { RoadClass::Secondary },
                speed_limit_kmh: if primary { spec.primary_limit_kmh } else { spec.secondary_limit_kmh },
                length_m: haversine_m(p0, mid) + haversine_m(mid, p1),
                geometry: vec![p0, mid, p1],
            });
        }
    };
    for r in 0..spec.rows {
        for c in 0..spec.cols - 1 {
            link(true, r, c, r % spec.primary_every == 0);
        }
    }
    for r in 0..spec.rows - 1 {
        for c in 0..spec.cols {
            link(false, r, c, c % spec.primary_every == 0);
        }
    }
    TransportGraph::build(junctions, units)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RushPeak {
    /// Minute of the day of the deepest point.
    pub at_minute: f64,
    pub width_minutes: f64,
    /// Speed reduction at the peak as a fraction of the limit.
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiurnalProfile {
    /// Off-peak speed as a fraction of the limit.
    pub free_flow_fraction: f64,
    pub peaks: Vec<RushPeak>,
    /// Peak depth multiplier on Saturdays and Sundays.
    pub weekend_factor: f64,
}

impl Default for DiurnalProfile {
    fn default() -> Self {
        DiurnalProfile {
            free_flow_fraction: 0.9,
            peaks: vec![
                RushPeak { at_minute: 450.0, width_minutes: 60.0, depth: 0.25 },
                RushPeak { at_minute: 1020.0, width_minutes: 60.0, depth: 0.25 },
            ],
            weekend_factor: 0.3,
        }
    }
}

impl DiurnalProfile {
    /// Baseline speed fraction of the limit at a minute of the day.
    pub fn fraction(&self, minute_of_day: f64, weekend: bool) -> f64 {
        let scale = if weekend { self.weekend_factor } else { 1.0 };
        let dip: f64 = self
            .peaks
            .iter()
            .map(|p| {
                let z = (minute_of_day - p.at_minute) / p.width_minutes;
                p.depth * (-0.5 * z * z).exp()
            })
            .sum();
        (self.free_flow_fraction - scale * dip).max(0.0)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.5).contains(&self.free_flow_fraction) {
            return Err(Error::Validation("free_flow_fraction must lie in [0, 1.5]".into()));
        }
        if !(self.weekend_factor >= 0.0) {
            return Err(Error::Validation("weekend_factor must be non-negative".into()));
        }
        for p in &self.peaks {
            if !(p.width_minutes > 0.0 && p.depth >= 0.0 && (0.0..1440.0).contains(&p.at_minute)) {
                return Err(Error::Validation(
                    "rush peaks need a positive width, non-negative depth and a minute within the day".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A planted pair given by unit ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedPairSpec {
    pub region_a: Vec<String>,
    pub region_b: Vec<String>,
    pub activation_prob: Option<f64>,
    pub load_depth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub grid: GridSpec,
    pub n_days: usize,
    pub interval_minutes: u32,
    /// RFC 3339 start instant; weekday buckets count from this day.
    pub start: String,
    pub profile: DiurnalProfile,
    /// Pairs placed at random in addition to `pairs`.
    pub auto_pairs: usize,
    pub pairs: Vec<PlantedPairSpec>,
    pub activation_prob: f64,
    /// Load reached by an active region: speed drops to `(1 - depth) * limit`.
    pub load_depth: f64,
    /// Units per automatically placed region (a straight run).
    pub region_len: usize,
    pub min_pair_distance_m: f64,
    /// Minimum hop gap between automatically placed regions.
    pub min_region_gap: u32,
    pub noise_std_kmh: f64,
    /// Probability that a record is missing.
    pub dropout_prob: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            grid: GridSpec::default(),
            n_days: 90,
            interval_minutes: 15,
            start: "2024-01-01T00:00:00Z".into(),
            profile: DiurnalProfile::default(),
            auto_pairs: 5,
            pairs: Vec::new(),
            activation_prob: 0.05,
            load_depth: 0.8,
            region_len: 4,
            min_pair_distance_m: 1500.0,
            min_region_gap: 8,
            noise_std_kmh: 5.0,
            dropout_prob: 0.0,
            seed: 1,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.profile.validate()?;
        let mut bad = Vec::new();
        if self.n_days == 0 {
            bad.push("n_days must be at least 1");
        }
        if self.interval_minutes == 0 || 1440 % self.interval_minutes != 0 {
            bad.push("interval_minutes must divide a day");
        }
        if parse_timestamp(&self.start).is_none() {
            bad.push("start must be an RFC 3339 timestamp");
        }
        if !(0.0..=1.0).contains(&self.activation_prob) {
            bad.push("activation_prob must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.load_depth) {
            bad.push("load_depth must lie in [0, 1]");
        }
        if self.region_len == 0 {
            bad.push("region_len must be at least 1");
        }
        if !(self.min_pair_distance_m >= 0.0) {
            bad.push("min_pair_distance_m must be non-negative");
        }
        if !(self.noise_std_kmh >= 0.0 && self.noise_std_kmh.is_finite()) {
            bad.push("noise_std_kmh must be non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            bad.push("dropout_prob must lie in [0, 1)");
        }
        for p in &self.pairs {
            if p.activation_prob.is_some_and(|x| !(0.0..=1.0).contains(&x))
                || p.load_depth.is_some_and(|x| !(0.0..=1.0).contains(&x))
            {
                bad.push("planted pair activation_prob and load_depth must lie in [0, 1]");
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(format!("scenario: {}", bad.join("; "))))
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        let start: DateTime<Utc> = parse_timestamp(&self.start)
            .ok_or_else(|| Error::Validation(format!("scenario: bad start `{}`", self.start)))?;
        TimeGrid::new(start, self.interval_minutes, self.n_days * (1440 / self.interval_minutes as usize))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedPair {
    pub region_a: Vec<UnitIdx>,
    pub region_b: Vec<UnitIdx>,
    pub activation_prob: f64,
    pub load_depth: f64,
}

impl PlantedPair {
    /// Unit ids of both regions.
    pub fn region_ids(&self, g: &TransportGraph) -> (Vec<String>, Vec<String>) {
        let ids = |r: &[UnitIdx]| r.iter().map(|u| g.units()[u.index()].id.clone()).collect();
        (ids(&self.region_a), ids(&self.region_b))
    }
}

/// Generated scenario. Speeds are stored time-major; NaN marks a dropout.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: TransportGraph,
    pub grid: TimeGrid,
    pub planted: Vec<PlantedPair>,
    /// `activations[p][t]`: pair `p` active at `t`.
    pub activations: Vec<Vec<bool>>,
    speeds: Vec<f64>,
}

impl Scenario {
    pub fn speed(&self, u: UnitIdx, t: usize) -> Option<f64> {
        let v = self.speeds[t * self.graph.unit_count() + u.index()];
        (!v.is_nan()).then_some(v)
    }

    /// Present records as `(unit, time point, speed)`, time-major.
    pub fn records(&self) -> impl Iterator<Item = (UnitIdx, usize, f64)> + '_ {
        let n = self.graph.unit_count();
        self.speeds
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(move |(i, &v)| (UnitIdx((i % n) as u32), i / n, v))
    }

    /// Loads computed from the records, identical to ingesting the CSV.
    pub fn load_matrix(&self) -> Result<LoadMatrix> {
        let mut acc = SpeedAccumulator::new(self.grid, self.graph.unit_count());
        for (u, t, v) in self.records() {
            acc.push(u, t, v);
        }
        Ok(acc.finish(&self.graph)?.0)
    }

    pub fn write_traffic(&self, out: impl std::io::Write) -> std::io::Result<()> {
        write_traffic_csv(out, &self.graph, &self.grid, self.records())
    }

    /// Truth table rows `(pair, region, unit id)` with regions `a` and `b`.
    pub fn truth_rows(&self) -> Vec<(usize, char, String)> {
        let mut rows = Vec::new();
        for (p, pair) in self.planted.iter().enumerate() {
            let (a, b) = pair.region_ids(&self.graph);
            rows.extend(a.into_iter().map(|id| (p, 'a', id)));
            rows.extend(b.into_iter().map(|id| (p, 'b', id)));
        }
        rows
    }
}

fn is_connected(g: &TransportGraph, units: &[UnitIdx]) -> Result<bool> {
    Ok(cluster_affected(g, &AffectedSet::new(0, units.to_vec()), 0)?.len() == 1)
}

fn straight_run(lines: &[Vec<String>], g: &TransportGraph, rng: &mut impl Rng, len: usize) -> Option<Vec<UnitIdx>> {
    let line = &lines[rng.gen_range(0..lines.len())];
    if line.len() < len {
        return None;
    }
    let start = rng.gen_range(0..=line.len() - len);
    let mut units = g.lookup_all(&line[start..start + len]).ok()?;
    units.sort_unstable();
    Some(units)
}

fn far_enough(g: &TransportGraph, placed: &[Vec<UnitIdx>], cand: &[UnitIdx], min_gap: u32) -> Result<bool> {
    for other in placed {
        if cand.iter().any(|u| other.contains(u)) {
            return Ok(false);
        }
        if let Gap::Units(k) = g.unit_hop_distance(other, cand)? {
            if k < min_gap {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn place_pairs(spec: &ScenarioSpec, g: &TransportGraph) -> Result<Vec<PlantedPair>> {
    let mut pairs = Vec::new();
    let mut placed: Vec<Vec<UnitIdx>> = Vec::new();
    for (i, p) in spec.pairs.iter().enumerate() {
        let mut a = g.lookup_all(&p.region_a)?;
        let mut b = g.lookup_all(&p.region_b)?;
        a.sort_unstable();
        a.dedup();
        b.sort_unstable();
        b.dedup();
        if a.is_empty() || b.is_empty() {
            return Err(Error::Validation(format!("planted pair {i}: empty region")));
        }
        if !is_connected(g, &a)? || !is_connected(g, &b)? {
            return Err(Error::Validation(format!("planted pair {i}: regions must be connected")));
        }
        let d = g.geo_distance(&a, &b)?;
        if d <= spec.min_pair_distance_m {
            return Err(Error::Validation(format!(
                "planted pair {i}: regions are {d:.0} m apart, need more than {} m",
                spec.min_pair_distance_m
            )));
        }
        placed.push(a.clone());
        placed.push(b.clone());
        pairs.push(PlantedPair {
            region_a: a,
            region_b: b,
            activation_prob: p.activation_prob.unwrap_or(spec.activation_prob),
            load_depth: p.load_depth.unwrap_or(spec.load_depth),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);
    const ATTEMPTS: usize = 20_000;
    let lines = grid_lines(&spec.grid);
    if spec.auto_pairs > 0 && lines.iter().all(|l| l.len() < spec.region_len) {
        return Err(Error::Validation("region_len exceeds every grid line".into()));
    }
    for i in 0..spec.auto_pairs {
        let mut found = None;
        for _ in 0..ATTEMPTS {
            let Some(a) = straight_run(&lines, g, &mut rng, spec.region_len) else { continue };
            let Some(b) = straight_run(&lines, g, &mut rng, spec.region_len) else { continue };
            if g.geo_distance(&a, &b)? <= spec.min_pair_distance_m
                || !far_enough(g, &placed, &a, spec.min_region_gap)?
                || !far_enough(g, &placed, &b, spec.min_region_gap)?
            {
                continue;
            }
            found = Some((a, b));
            break;
        }
        let Some((a, b)) = found else {
            return Err(Error::Validation(format!(
                "could not place planted pair {} of {} on a {}x{} grid; lower auto_pairs, \
                 region_len, min_pair_distance_m or min_region_gap",
                i + 1,
                spec.auto_pairs,
                spec.grid.rows,
                spec.grid.cols
            )));
        };
        placed.push(a.clone());
        placed.push(b.clone());
        pairs.push(PlantedPair {
            region_a: a,
            region_b: b,
            activation_prob: spec.activation_prob,
            load_depth: spec.load_depth,
        });
    }
    Ok(pairs)
}

/// Deterministic scenario for a spec; the same seed gives identical speeds.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let graph = grid_network(&spec.grid)?;
    let grid = spec.time_grid()?;
    let planted = place_pairs(spec, &graph)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let activations: Vec<Vec<bool>> = planted
        .iter()
        .map(|p| (0..grid.count).map(|_| rng.gen_bool(p.activation_prob)).collect())
        .collect();

    let n = graph.unit_count();
    // Planted pair driving each unit, if any.
    let mut driver: Vec<Option<usize>> = vec![None; n];
    for (p, pair) in planted.iter().enumerate() {
        for u in pair.region_a.iter().chain(&pair.region_b) {
            driver[u.index()] = Some(p);
        }
    }
    let limits: Vec<f64> = graph.units().iter().map(|u| u.speed_limit_kmh).collect();
    let slots = grid.slots_per_day();
    let noise = Normal::new(0.0, spec.noise_std_kmh).map_err(|e| Error::Validation(e.to_string()))?;
    let weekday_of_day: Vec<u8> = (0..spec.n_days)
        .map(|d| grid.bucket_of(d * slots).map(|b| b.weekday))
        .collect::<Result<_>>()?;

    let mut speeds = vec![0.0f64; grid.count * n];
    speeds.par_chunks_mut(slots * n).enumerate().for_each(|(day, chunk)| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(2 + day as u64);
        let weekend = weekday_of_day[day] >= 5;
        for slot in 0..slots {
            let t = day * slots + slot;
            let minute = (slot as u32 * spec.interval_minutes) as f64;
            let base = spec.profile.fraction(minute, weekend);
            for u in 0..n {
                let fraction = match driver[u] {
                    Some(p) if activations[p][t] => 1.0 - planted[p].load_depth,
                    _ => base,
                };
                let jitter = if spec.noise_std_kmh > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                let dropped = spec.dropout_prob > 0.0 && rng.gen_bool(spec.dropout_prob);
                let v = (fraction * limits[u] + jitter).max(0.0);
                chunk[slot * n + u] = if dropped { f64::NAN } else { (v * 100.0).round() / 100.0 };
            }
        }
    });

    Ok(Scenario {
        graph,
        grid,
        planted,
        activations,
        speeds,
    })
}

/// Affected sets on a grid where congestion repeatedly grows out of a few
/// hotspot junctions along a random subset of their arms and recedes again.
#[derive(Debug, Clone)]
pub struct JunctionFixture {
    pub graph: TransportGraph,
    pub affected: Vec<AffectedSet>,
}

pub fn junction_fixture(seed: u64) -> Result<JunctionFixture> {
    const SIZE: usize = FIXTURE_SIZE;
    let spec = GridSpec {
        rows: SIZE,
        cols: SIZE,
        spacing_m: 200.0,
        segments_per_link: 1,
        ..GridSpec::default()
    };
    let g = grid_network(&spec)?;
    let id = |s: String| g.lookup(&s).ok();
    // Arm k (N, E, S, W), step i (0-based) away from junction (r, c).
    let arm_unit = |(r, c): (usize, usize), k: usize, i: usize| -> Option<UnitIdx> {
        match k {
            0 => id(vertical_id(r + i, c)),
            1 => id(horizontal_id(r, c + i)),
            2 => r.checked_sub(1 + i).and_then(|rr| id(vertical_id(rr, c))),
            _ => c.checked_sub(1 + i).and_then(|cc| id(horizontal_id(r, cc))),
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut affected = Vec::new();
    for _ in 0..FIXTURE_EPISODES {
        for _ in 0..rng.gen_range(1..=3) {
            affected.push(AffectedSet::new(affected.len(), Vec::new()));
        }
        let hub = FIXTURE_HUBS[rng.gen_range(0..FIXTURE_HUBS.len())];
        let mut arms: Vec<usize> = (0..4).filter(|_| rng.gen_bool(FIXTURE_ARM_PROB)).collect();
        if arms.is_empty() {
            arms.push(rng.gen_range(0..4));
        }
        let peak = rng.gen_range(1..=FIXTURE_MAX_RADIUS);
        let hold = rng.gen_range(1..=2);
        let radii: Vec<usize> = (1..=peak)
            .chain((1..peak).rev())
            .flat_map(|r| std::iter::repeat_n(r, hold))
            .collect();
        for r in radii {
            let mut units = Vec::new();
            for &k in &arms {
                for i in 0..r {
                    // Dropouts leave gaps that only a positive gap tolerance bridges.
                    if i > 0 && rng.gen_bool(FIXTURE_DROPOUT) {
                        continue;
                    }
                    units.extend(arm_unit(hub, k, i));
                }
            }
            units.sort_unstable();
            units.dedup();
            affected.push(AffectedSet::new(affected.len(), units));
        }
    }
    Ok(JunctionFixture { graph: g, affected })
}

const FIXTURE_SIZE: usize = 12;
const FIXTURE_HUBS: [(usize, usize); 4] = [(3, 3), (3, 8), (8, 3), (8, 8)];
const FIXTURE_EPISODES: usize = 80;
const FIXTURE_ARM_PROB: f64 = 0.5;
const FIXTURE_MAX_RADIUS: usize = 4;
const FIXTURE_DROPOUT: f64 = 0.15;
