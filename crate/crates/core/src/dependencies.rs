//! Occurrence matrix, mutual information and dependency ranking.

use std::cmp::Ordering;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::merging::{SgId, Subgraph};
use crate::outliers::AffectedSet;
use crate::road_graph::{min_vertex_distance, LonLat, TransportGraph, UnitIdx};

fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

/// Binary time point x subgraph matrix, stored as one bitset per subgraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceMatrix {
    n_timepoints: usize,
    words: usize,
    ids: Vec<SgId>,
    bits: Vec<u64>,
}

impl OccurrenceMatrix {
    pub fn n_timepoints(&self) -> usize {
        self.n_timepoints
    }

    /// Subgraph ids in column order (ascending).
    pub fn ids(&self) -> &[SgId] {
        &self.ids
    }

    pub fn column_of(&self, id: SgId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    fn column(&self, col: usize) -> &[u64] {
        &self.bits[col * self.words..(col + 1) * self.words]
    }

    pub fn get(&self, t: usize, id: SgId) -> Option<bool> {
        let col = self.column_of(id)?;
        if t >= self.n_timepoints {
            return None;
        }
        Some(self.column(col)[t / 64] >> (t % 64) & 1 == 1)
    }

    /// Occurrence row of one subgraph over all time points.
    pub fn series(&self, id: SgId) -> Option<Vec<bool>> {
        let col = self.column_of(id)?;
        let words = self.column(col);
        Some((0..self.n_timepoints).map(|t| words[t / 64] >> (t % 64) & 1 == 1).collect())
    }

    pub fn ones(&self, id: SgId) -> Option<u64> {
        let col = self.column_of(id)?;
        Some(popcount(self.column(col)))
    }
}

fn popcount(words: &[u64]) -> u64 {
    words.iter().map(|w| w.count_ones() as u64).sum()
}

fn and_count(a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as u64).sum()
}

/// Result of [`build_occurrence`]: the matrix plus subgraphs left out because
/// none of their units was ever affected.
#[derive(Debug, Clone)]
pub struct Occurrence {
    pub matrix: OccurrenceMatrix,
    pub excluded: Vec<SgId>,
}

/// `occ[t][sg] = 1` iff some unit of `sg` is affected at `t`.
pub fn build_occurrence(sgs: &[Subgraph], affected: &[AffectedSet]) -> Result<Occurrence> {
    let n = affected.len();
    if let Some((t, a)) = affected.iter().enumerate().find(|(t, a)| a.timepoint != *t) {
        return Err(Error::Contract(format!(
            "affected sets must be indexed by time point; position {t} holds time point {}",
            a.timepoint
        )));
    }
    let words = words_for(n);
    let n_units = affected
        .iter()
        .flat_map(|a| a.units.last())
        .chain(sgs.iter().flat_map(|s| s.units.last()))
        .map(|u| u.index() + 1)
        .max()
        .unwrap_or(0);
    let mut unit_bits = vec![0u64; n_units * words];
    for a in affected {
        for u in &a.units {
            unit_bits[u.index() * words + a.timepoint / 64] |= 1 << (a.timepoint % 64);
        }
    }

    let mut sorted: Vec<&Subgraph> = sgs.iter().collect();
    sorted.sort_by_key(|s| s.id);
    if sorted.windows(2).any(|w| w[0].id == w[1].id) {
        return Err(Error::Contract("duplicate subgraph ids".into()));
    }
    let columns: Vec<(SgId, Vec<u64>)> = sorted
        .par_iter()
        .map(|sg| {
            let mut col = vec![0u64; words];
            for u in &sg.units {
                let row = &unit_bits[u.index() * words..(u.index() + 1) * words];
                for (c, r) in col.iter_mut().zip(row) {
                    *c |= r;
                }
            }
            (sg.id, col)
        })
        .collect();

    let mut ids = Vec::with_capacity(columns.len());
    let mut bits = Vec::with_capacity(columns.len() * words);
    let mut excluded = Vec::new();
    for (id, col) in columns {
        if popcount(&col) == 0 {
            excluded.push(id);
        } else {
            ids.push(id);
            bits.extend(col);
        }
    }
    if !excluded.is_empty() {
        warn!("{} subgraphs are never affected and were left out of the occurrence matrix", excluded.len());
    }
    Ok(Occurrence {
        matrix: OccurrenceMatrix {
            n_timepoints: n,
            words,
            ids,
            bits,
        },
        excluded,
    })
}

fn plogp_term(joint: u64, n: u64, px: u64, py: u64) -> f64 {
    if joint == 0 {
        return 0.0;
    }
    let j = joint as f64;
    let n = n as f64;
    (j / n) * ((j * n) / (px as f64 * py as f64)).log2()
}

/// Mutual information in bits from the 2x2 contingency counts.
pub fn mi_from_counts(n11: u64, n10: u64, n01: u64, n00: u64) -> f64 {
    let n = n11 + n10 + n01 + n00;
    if n == 0 {
        return 0.0;
    }
    let x1 = n11 + n10;
    let x0 = n01 + n00;
    let y1 = n11 + n01;
    let y0 = n10 + n00;
    let mi = plogp_term(n11, n, x1, y1)
        + plogp_term(n10, n, x1, y0)
        + plogp_term(n01, n, x0, y1)
        + plogp_term(n00, n, x0, y0);
    mi.max(0.0)
}

/// Mutual information (bits) between two binary series of equal length.
pub fn mutual_information(x: &[bool], y: &[bool]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Contract(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Contract("mutual information of empty series".into()));
    }
    let mut c = [0u64; 4];
    for (&a, &b) in x.iter().zip(y) {
        c[(a as usize) << 1 | b as usize] += 1;
    }
    Ok(mi_from_counts(c[3], c[2], c[1], c[0]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependencyPair {
    /// Always the smaller of the two ids.
    pub sg1: SgId,
    pub sg2: SgId,
    pub mi: f64,
    pub dist_m: f64,
    pub score: f64,
}

fn gated_score(mi: f64, dist: f64, dist_min: f64) -> f64 {
    if dist <= dist_min {
        0.0
    } else {
        mi / dist
    }
}

fn check_dist_min(dist_min: f64) -> Result<()> {
    if !(dist_min >= 0.0 && dist_min.is_finite()) {
        return Err(Error::Domain(format!("dist_min must be a non-negative number, got {dist_min}")));
    }
    Ok(())
}

fn mi_of_columns(occ: &OccurrenceMatrix, a: usize, b: usize) -> f64 {
    let (ca, cb) = (occ.column(a), occ.column(b));
    let n = occ.n_timepoints as u64;
    let n11 = and_count(ca, cb);
    let x1 = popcount(ca);
    let y1 = popcount(cb);
    mi_from_counts(n11, x1 - n11, y1 - n11, n + n11 - x1 - y1)
}

/// Score of one pair. Argument order does not matter.
pub fn dependency_score(
    sg1: &Subgraph,
    sg2: &Subgraph,
    occ: &OccurrenceMatrix,
    g: &TransportGraph,
    dist_min: f64,
) -> Result<DependencyPair> {
    check_dist_min(dist_min)?;
    if sg1.id == sg2.id {
        return Err(Error::Contract(format!("self pair for subgraph {}", sg1.id.0)));
    }
    let col = |s: &Subgraph| {
        occ.column_of(s.id)
            .ok_or_else(|| Error::Contract(format!("subgraph {} is not in the occurrence matrix", s.id.0)))
    };
    let (a, b) = (col(sg1)?, col(sg2)?);
    let mi = mi_of_columns(occ, a, b);
    let dist = g.geo_distance(&sg1.units, &sg2.units)?;
    let (lo, hi) = if sg1.id < sg2.id { (sg1.id, sg2.id) } else { (sg2.id, sg1.id) };
    Ok(DependencyPair {
        sg1: lo,
        sg2: hi,
        mi,
        dist_m: dist,
        score: gated_score(mi, dist, dist_min),
    })
}

fn ranking_order(a: &DependencyPair, b: &DependencyPair) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.mi.total_cmp(&a.mi))
        .then(a.sg1.cmp(&b.sg1))
        .then(a.sg2.cmp(&b.sg2))
}

fn shares_unit(a: &[UnitIdx], b: &[UnitIdx]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => return true,
        }
    }
    false
}

/// Every co-affected pair, scored and sorted best first.
pub fn score_candidates(
    sgs: &[Subgraph],
    occ: &OccurrenceMatrix,
    g: &TransportGraph,
    dist_min: f64,
) -> Result<Vec<DependencyPair>> {
    check_dist_min(dist_min)?;
    // Column order follows ascending id; subgraphs without a column are skipped.
    let mut cols: Vec<Option<&Subgraph>> = vec![None; occ.ids.len()];
    for sg in sgs {
        if let Some(c) = occ.column_of(sg.id) {
            for u in &sg.units {
                g.unit(*u)?;
            }
            cols[c] = Some(sg);
        }
    }
    let present: Vec<(usize, &Subgraph, Vec<LonLat>)> = cols
        .into_iter()
        .enumerate()
        .filter_map(|(c, s)| s.map(|s| (c, s, g.vertices(&s.units))))
        .collect();

    let mut pairs: Vec<DependencyPair> = (0..present.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let present = &present;
            (i + 1..present.len()).filter_map(move |j| {
                let (ca, sa, va) = &present[i];
                let (cb, sb, vb) = &present[j];
                if and_count(occ.column(*ca), occ.column(*cb)) == 0 {
                    return None;
                }
                let mi = mi_of_columns(occ, *ca, *cb);
                let dist = if shares_unit(&sa.units, &sb.units) {
                    0.0
                } else {
                    min_vertex_distance(va, vb)
                };
                Some(DependencyPair {
                    sg1: sa.id,
                    sg2: sb.id,
                    mi,
                    dist_m: dist,
                    score: gated_score(mi, dist, dist_min),
                })
            })
        })
        .collect();
    let before = pairs.len();
    pairs.retain(|p| p.dist_m.is_finite());
    if pairs.len() < before {
        warn!("{} candidate pairs without a finite distance were dropped", before - pairs.len());
    }
    pairs.par_sort_unstable_by(ranking_order);
    Ok(pairs)
}

/// The `top_k` best co-affected pairs.
pub fn rank_dependencies(
    sgs: &[Subgraph],
    occ: &OccurrenceMatrix,
    g: &TransportGraph,
    dist_min: f64,
    top_k: usize,
) -> Result<Vec<DependencyPair>> {
    if top_k == 0 {
        return Err(Error::Domain("top_k must be at least 1".into()));
    }
    let mut pairs = score_candidates(sgs, occ, g, dist_min)?;
    pairs.truncate(top_k);
    Ok(pairs)
}
