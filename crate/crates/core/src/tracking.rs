//! Cluster tracking across consecutive time points by one-to-one assignment.
//!
//! Clusters at `t` and `t + 1` are matched so that the total number of shared
//! units is maximal. Matches without a shared unit are discarded. A track
//! dies at the first step where it finds no partner.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::clustering::{Cluster, ClusterId};
use crate::error::{Error, Result};

/// Shared-unit counts between clusters at `t` (rows) and `t + 1` (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentCosts {
    rows: usize,
    cols: usize,
    cells: Vec<u64>,
}

impl AssignmentCosts {
    pub fn new(rows: usize, cols: usize, cells: Vec<u64>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::Contract(format!(
                "{} cells for a {rows}x{cols} matrix",
                cells.len()
            )));
        }
        Ok(AssignmentCosts { rows, cols, cells })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Contract("ragged cost matrix".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Intersection sizes of two cluster lists.
    pub fn between(prev: &[Cluster], next: &[Cluster]) -> Self {
        let cells = prev
            .par_iter()
            .flat_map_iter(|a| next.iter().map(move |b| shared_units(&a.units, &b.units)))
            .collect();
        AssignmentCosts {
            rows: prev.len(),
            cols: next.len(),
            cells,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.cells[r * self.cols + c]
    }
}

fn shared_units<T: Ord>(a: &[T], b: &[T]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Minimum-cost perfect assignment on a square matrix (potentials method,
/// O(n^3)). Returns the column assigned to every row.
fn min_cost_assignment(n: usize, cost: impl Fn(usize, usize) -> i64) -> Vec<usize> {
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Maximum total-intersection matching. Returns `(row, col)` pairs sorted by
/// row; pairs with zero intersection are never returned.
///
/// Rows and columns only interact through positive cells, so each connected
/// component of the positive cells is solved on its own.
pub fn hungarian_assign(costs: &AssignmentCosts) -> Vec<(usize, usize)> {
    let (nr, nc) = (costs.rows, costs.cols);
    // Nodes 0..nr are rows, nr.. are columns.
    let mut parent: Vec<usize> = (0..nr + nc).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for r in 0..nr {
        for c in 0..nc {
            if costs.get(r, c) > 0 {
                let (a, b) = (find(&mut parent, r), find(&mut parent, nr + c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
    for x in 0..nr + nc {
        let root = find(&mut parent, x);
        let e = groups.entry(root).or_default();
        if x < nr {
            e.0.push(x);
        } else {
            e.1.push(x - nr);
        }
    }
    let mut out = Vec::new();
    for (rows, cols) in groups.into_values() {
        if rows.is_empty() || cols.is_empty() {
            continue;
        }
        let n = rows.len().max(cols.len());
        let weight = |i: usize, j: usize| {
            if i < rows.len() && j < cols.len() {
                costs.get(rows[i], cols[j]) as i64
            } else {
                0
            }
        };
        let max_w = (0..rows.len())
            .flat_map(|i| (0..cols.len()).map(move |j| (i, j)))
            .map(|(i, j)| weight(i, j))
            .max()
            .unwrap_or(0);
        for (i, j) in min_cost_assignment(n, |i, j| max_w - weight(i, j)).into_iter().enumerate() {
            if weight(i, j) > 0 {
                out.push((rows[i], cols[j]));
            }
        }
    }
    out.sort_unstable();
    out
}

pub type TrackId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedCluster {
    pub track_id: TrackId,
    pub birth_timepoint: usize,
    pub death_timepoint: usize,
    /// One cluster per lived time point, in time order.
    pub member_clusters: Vec<ClusterId>,
    pub sizes: Vec<usize>,
}

impl TrackedCluster {
    pub fn duration_steps(&self) -> usize {
        self.death_timepoint - self.birth_timepoint + 1
    }

    pub fn mean_size(&self) -> f64 {
        self.sizes.iter().sum::<usize>() as f64 / self.sizes.len() as f64
    }

    pub fn peak_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

/// Chains clusters into tracks. `per_timepoint[t]` lists the clusters of time
/// point `t`. Track ids are assigned in birth order.
pub fn track_clusters(per_timepoint: &[Vec<Cluster>]) -> Result<Vec<TrackedCluster>> {
    for (t, cs) in per_timepoint.iter().enumerate() {
        if let Some(c) = cs.iter().find(|c| c.timepoint != t) {
            return Err(Error::Contract(format!(
                "cluster {} has time point {} but is listed under {t}",
                c.id.0, c.timepoint
            )));
        }
    }
    let mut tracks: Vec<TrackedCluster> = Vec::new();
    // Track index of every cluster at the previous time point.
    let mut open: Vec<usize> = Vec::new();
    let mut prev: &[Cluster] = &[];
    for (t, current) in per_timepoint.iter().enumerate() {
        let mut next_open = vec![usize::MAX; current.len()];
        for (r, c) in hungarian_assign(&AssignmentCosts::between(prev, current)) {
            next_open[c] = open[r];
        }
        for (c, slot) in next_open.iter_mut().enumerate() {
            let cl = &current[c];
            if *slot == usize::MAX {
                *slot = tracks.len();
                tracks.push(TrackedCluster {
                    track_id: tracks.len() as TrackId,
                    birth_timepoint: t,
                    death_timepoint: t,
                    member_clusters: vec![cl.id],
                    sizes: vec![cl.len()],
                });
            } else {
                let tr = &mut tracks[*slot];
                tr.death_timepoint = t;
                tr.member_clusters.push(cl.id);
                tr.sizes.push(cl.len());
            }
        }
        open = next_open;
        prev = current;
    }
    Ok(tracks)
}

/// Mean existence time of the tracks whose mean size falls in each bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeBin {
    pub min_size: f64,
    pub max_size: f64,
    pub tracks: usize,
    pub mean_duration: f64,
}

/// Groups tracks by mean size into `[1, 2), [2, 4), [4, 8), ...`.
pub fn existence_by_size(tracks: &[TrackedCluster]) -> Vec<SizeBin> {
    let mut bins: Vec<(usize, usize)> = Vec::new();
    for tr in tracks {
        let b = tr.mean_size().max(1.0).log2().floor() as usize;
        if bins.len() <= b {
            bins.resize(b + 1, (0, 0));
        }
        bins[b].0 += 1;
        bins[b].1 += tr.duration_steps();
    }
    bins.into_iter()
        .enumerate()
        .filter(|(_, (n, _))| *n > 0)
        .map(|(b, (n, total))| SizeBin {
            min_size: (1u64 << b) as f64,
            max_size: (1u64 << (b + 1)) as f64,
            tracks: n,
            mean_duration: total as f64 / n as f64,
        })
        .collect()
}

fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// side is constant or fewer than two samples are given.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Rank correlation between track mean size and existence time.
pub fn size_duration_correlation(tracks: &[TrackedCluster]) -> Option<f64> {
    let sizes: Vec<f64> = tracks.iter().map(TrackedCluster::mean_size).collect();
    let durations: Vec<f64> = tracks.iter().map(|t| t.duration_steps() as f64).collect();
    spearman(&sizes, &durations)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::road_graph::UnitIdx;
    use rand::{Rng, SeedableRng};

    /// Best total over all injective row -> column maps.
    pub(crate) fn exhaustive_max(c: &AssignmentCosts) -> u64 {
        fn rec(c: &AssignmentCosts, r: usize, used: &mut Vec<bool>) -> u64 {
            if r == c.rows() {
                return 0;
            }
            let mut best = rec(c, r + 1, used);
            for col in 0..c.cols() {
                if !used[col] {
                    used[col] = true;
                    best = best.max(c.get(r, col) + rec(c, r + 1, used));
                    used[col] = false;
                }
            }
            best
        }
        rec(c, 0, &mut vec![false; c.cols()])
    }

    fn total(c: &AssignmentCosts, m: &[(usize, usize)]) -> u64 {
        m.iter().map(|&(r, k)| c.get(r, k)).sum()
    }

    #[test]
    fn assignment_examples() {
        let diag = AssignmentCosts::from_rows(&[vec![3, 0], vec![0, 5]]).unwrap();
        assert_eq!(hungarian_assign(&diag), vec![(0, 0), (1, 1)]);
        let cross = AssignmentCosts::from_rows(&[vec![1, 4], vec![3, 1]]).unwrap();
        let m = hungarian_assign(&cross);
        assert_eq!(m, vec![(0, 1), (1, 0)]);
        assert_eq!(total(&cross, &m), 7);
        let zero = AssignmentCosts::from_rows(&[vec![0, 0], vec![0, 0]]).unwrap();
        assert!(hungarian_assign(&zero).is_empty());
        let empty = AssignmentCosts::new(0, 3, vec![]).unwrap();
        assert!(hungarian_assign(&empty).is_empty());
        assert!(AssignmentCosts::from_rows(&[vec![1], vec![1, 2]]).is_err());
    }

    #[test]
    fn assignment_is_optimal_and_injective() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..400 {
            let (r, c) = (rng.gen_range(0..=6), rng.gen_range(0..=6));
            let cells = (0..r * c).map(|_| if rng.gen_bool(0.4) { 0 } else { rng.gen_range(0..9) }).collect();
            let costs = AssignmentCosts::new(r, c, cells).unwrap();
            let m = hungarian_assign(&costs);
            assert_eq!(total(&costs, &m), exhaustive_max(&costs));
            let mut rows: Vec<_> = m.iter().map(|p| p.0).collect();
            let mut cols: Vec<_> = m.iter().map(|p| p.1).collect();
            rows.dedup();
            cols.sort();
            cols.dedup();
            assert_eq!(rows.len(), m.len());
            assert_eq!(cols.len(), m.len());
            assert!(m.iter().all(|&(r, k)| costs.get(r, k) > 0));
        }
    }

    fn cl(id: u32, t: usize, units: &[u32]) -> Cluster {
        Cluster {
            id: ClusterId(id),
            timepoint: t,
            units: units.iter().map(|&u| UnitIdx(u)).collect(),
        }
    }

    #[test]
    fn persistent_cluster_is_one_track() {
        let per: Vec<Vec<Cluster>> = (0..7)
            .map(|t| if t < 5 { vec![cl(t as u32, t, &[1, 2])] } else { vec![] })
            .collect();
        let tracks = track_clusters(&per).unwrap();
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].duration_steps(), 5);
        assert_eq!(tracks[0].peak_size(), 2);
    }

    #[test]
    fn gap_starts_a_new_track() {
        let per = vec![vec![cl(0, 0, &[1, 2])], vec![], vec![cl(1, 2, &[1, 2])]];
        let tracks = track_clusters(&per).unwrap();
        assert_eq!(tracks.len(), 2);
        assert_ne!(tracks[0].track_id, tracks[1].track_id);
        assert!(tracks.iter().all(|t| t.duration_steps() == 1));
    }

    #[test]
    fn drifting_clusters_keep_their_tracks() {
        let per: Vec<Vec<Cluster>> = (0..6u32)
            .map(|t| {
                vec![
                    cl(2 * t, t as usize, &[t, t + 1, t + 2]),
                    cl(2 * t + 1, t as usize, &[100 + t, 101 + t, 102 + t]),
                ]
            })
            .collect();
        let tracks = track_clusters(&per).unwrap();
        assert_eq!(tracks.len(), 2);
        assert!(tracks.iter().all(|t| t.duration_steps() == 6));
        assert_eq!(tracks[0].member_clusters, vec![ClusterId(0), ClusterId(2), ClusterId(4), ClusterId(6), ClusterId(8), ClusterId(10)]);
    }

    #[test]
    fn track_count_equals_cluster_count() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut next_id = 0;
        let per: Vec<Vec<Cluster>> = (0..30)
            .map(|t| {
                (0..rng.gen_range(0..5))
                    .map(|_| {
                        let start = rng.gen_range(0..20u32);
                        next_id += 1;
                        cl(next_id, t, &(start..start + rng.gen_range(1..4)).collect::<Vec<_>>())
                    })
                    .collect()
            })
            .collect();
        let tracks = track_clusters(&per).unwrap();
        for (t, cs) in per.iter().enumerate() {
            let alive = tracks.iter().filter(|tr| tr.birth_timepoint <= t && t <= tr.death_timepoint).count();
            assert_eq!(alive, cs.len());
        }
        for tr in &tracks {
            assert_eq!(tr.member_clusters.len(), tr.duration_steps());
        }
    }

    #[test]
    fn rejects_misplaced_cluster() {
        assert!(track_clusters(&[vec![cl(0, 3, &[1])]]).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        // Ties use average ranks: x ranks (1.5, 1.5, 3), y ranks (1, 2, 3).
        let r = spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r - 0.8660254037844386).abs() < 1e-12);
    }

    #[test]
    fn size_bins() {
        let tr = |size: usize, dur: usize| TrackedCluster {
            track_id: 0,
            birth_timepoint: 0,
            death_timepoint: dur - 1,
            member_clusters: vec![ClusterId(0); dur],
            sizes: vec![size; dur],
        };
        let bins = existence_by_size(&[tr(1, 1), tr(1, 3), tr(5, 4)]);
        assert_eq!(bins.len(), 2);
        assert_eq!((bins[0].tracks, bins[0].mean_duration), (2, 2.0));
        assert_eq!((bins[1].min_size, bins[1].max_size, bins[1].mean_duration), (4.0, 8.0, 4.0));
    }

    proptest::proptest! {
        #[test]
        fn assignment_is_a_positive_matching(
            rows in proptest::collection::vec(proptest::collection::vec(0u64..4, 4), 1..5),
        ) {
            let c = AssignmentCosts::from_rows(&rows).unwrap();
            let pairs = hungarian_assign(&c);
            let total: u64 = pairs.iter().map(|&(r, k)| c.get(r, k)).sum();
            proptest::prop_assert_eq!(total, exhaustive_max(&c));
            let mut seen_c = std::collections::BTreeSet::new();
            for w in pairs.windows(2) {
                proptest::prop_assert!(w[0].0 < w[1].0);
            }
            for &(r, k) in &pairs {
                proptest::prop_assert!(c.get(r, k) > 0);
                proptest::prop_assert!(seen_c.insert(k));
            }
        }
    }
}
