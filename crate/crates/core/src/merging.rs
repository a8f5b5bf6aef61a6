//! Greedy incremental merging of overlapping affected subgraphs across time.
//!
//! Candidates are subgraph pairs sharing at least one unit, found through a
//! unit -> subgraphs index. Each outer iteration walks the candidates in
//! descending similarity (ties: smaller id, then larger id) and merges every
//! pair at or above the threshold whose members have not been touched yet in
//! this iteration. The merged subgraph keeps the smaller id. Iterations
//! repeat until one performs no merge.
//!
//! Only pairs involving a merged subgraph change between iterations, so the
//! ordered candidate set is maintained incrementally. Every key records the
//! versions of its two subgraphs; a merge bumps the survivor's version, which
//! turns all of its keys stale, and stale keys are skipped by the walk and
//! purged after it. The survivor's pairs are re-scored once the iteration is
//! over. A pair whose members are untouched keeps the similarity it had when
//! the iteration began, which makes this walk equivalent to sorting a fresh
//! snapshot every iteration.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::clustering::Cluster;
use crate::error::{Error, Result};
use crate::road_graph::UnitIdx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SgId(pub u32);

/// A persistent subgraph: union of clusters from one or more time points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    pub id: SgId,
    /// Sorted, non-empty.
    pub units: Vec<UnitIdx>,
    /// Sorted time points whose clusters were merged into this subgraph.
    pub source_timepoints: Vec<usize>,
}

impl Subgraph {
    pub fn from_cluster(c: &Cluster) -> Self {
        Subgraph {
            id: SgId(c.id.0),
            units: c.units.clone(),
            source_timepoints: vec![c.timepoint],
        }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

fn intersection_len(a: &[UnitIdx], b: &[UnitIdx]) -> usize {
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

fn sorted_union<T: Ord + Copy>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn overlap(a: &[UnitIdx], b: &[UnitIdx]) -> f64 {
    let common = intersection_len(a, b);
    if common == a.len().min(b.len()) {
        1.0
    } else {
        common as f64 / (a.len() + b.len() - common) as f64
    }
}

/// Jaccard similarity of two sorted unit sets, 1 when one contains the other.
pub fn similarity(a: &[UnitIdx], b: &[UnitIdx]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("similarity of an empty unit set".into()));
    }
    if !a.windows(2).all(|w| w[0] < w[1]) || !b.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Contract("unit sets must be sorted and duplicate-free".into()));
    }
    Ok(overlap(a, b))
}

/// Unit -> ids of the subgraphs containing it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnitIndex {
    map: HashMap<UnitIdx, BTreeSet<SgId>>,
}

impl UnitIndex {
    pub fn build<'a>(subgraphs: impl IntoIterator<Item = &'a Subgraph>) -> Self {
        let mut map: HashMap<UnitIdx, BTreeSet<SgId>> = HashMap::new();
        for sg in subgraphs {
            for &u in &sg.units {
                map.entry(u).or_default().insert(sg.id);
            }
        }
        UnitIndex { map }
    }

    pub fn containing(&self, u: UnitIdx) -> impl Iterator<Item = SgId> + '_ {
        self.map.get(&u).into_iter().flatten().copied()
    }

    /// Subgraphs sharing at least one of `units`, excluding `me`.
    pub fn partners(&self, me: SgId, units: &[UnitIdx]) -> BTreeSet<SgId> {
        units
            .iter()
            .flat_map(|&u| self.containing(u))
            .filter(|&s| s != me)
            .collect()
    }

    fn absorb(&mut self, keep: SgId, retire: SgId, retired_units: &[UnitIdx]) {
        for u in retired_units {
            let set = self.map.get_mut(u).expect("indexed unit");
            set.remove(&retire);
            set.insert(keep);
        }
    }
}

/// Candidate pair of dense slots, valid while both versions are current.
#[derive(Debug, Clone, Copy)]
struct PairKey {
    sim: f64,
    a: u32,
    b: u32,
    va: u32,
    vb: u32,
}

impl PartialEq for PairKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for PairKey {}

impl PartialOrd for PairKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PairKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .sim
            .total_cmp(&self.sim)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
            .then(self.va.cmp(&other.va))
            .then(self.vb.cmp(&other.vb))
    }
}

/// Stateful merge loop; [`merge_subgraphs`] runs it to completion.
#[derive(Debug, Clone)]
pub struct Merger {
    th_sim: f64,
    /// Ascending ids; slot `i` belongs to `ids[i]`, so slot order is id order.
    ids: Vec<SgId>,
    slots: Vec<Option<Subgraph>>,
    version: Vec<u32>,
    index: UnitIndex,
    /// Sorted keys at or above the threshold.
    order: Vec<PairKey>,
    iterations: usize,
    merges: usize,
    #[cfg(test)]
    verify_index: bool,
}

impl Merger {
    pub fn new(clusters: &[Cluster], th_sim: f64) -> Result<Self> {
        let subgraphs = clusters.iter().map(Subgraph::from_cluster).collect();
        Self::from_subgraphs(subgraphs, th_sim)
    }

    pub fn from_subgraphs(mut subgraphs: Vec<Subgraph>, th_sim: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&th_sim) {
            return Err(Error::Domain(format!("th_sim must lie in [0, 1], got {th_sim}")));
        }
        for sg in &subgraphs {
            if sg.units.is_empty() {
                return Err(Error::Contract(format!("subgraph {} has no units", sg.id.0)));
            }
            if !sg.units.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Contract(format!("subgraph {} units are not sorted", sg.id.0)));
            }
        }
        subgraphs.sort_by_key(|s| s.id);
        if let Some(w) = subgraphs.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Contract(format!("duplicate subgraph id {}", w[0].id.0)));
        }
        let ids: Vec<SgId> = subgraphs.iter().map(|s| s.id).collect();
        let index = UnitIndex::build(&subgraphs);
        let slot_of = |id: &SgId| ids.binary_search(id).expect("indexed id") as u32;

        let lists: Vec<Vec<u32>> = index
            .map
            .values()
            .filter(|s| s.len() > 1)
            .map(|s| s.iter().map(slot_of).collect())
            .collect();
        let mut keys: Vec<PairKey> = lists
            .par_iter()
            .flat_map_iter(|slots| {
                let subgraphs = &subgraphs;
                (0..slots.len()).flat_map(move |i| {
                    (i + 1..slots.len()).map(move |j| {
                        let (a, b) = (slots[i], slots[j]);
                        PairKey {
                            sim: overlap(&subgraphs[a as usize].units, &subgraphs[b as usize].units),
                            a,
                            b,
                            va: 0,
                            vb: 0,
                        }
                    })
                })
            })
            .collect();
        keys.retain(|k| k.sim >= th_sim);
        keys.par_sort_unstable();
        keys.dedup();
        let order = keys;

        Ok(Merger {
            th_sim,
            version: vec![0; ids.len()],
            ids,
            slots: subgraphs.into_iter().map(Some).collect(),
            index,
            order,
            iterations: 0,
            merges: 0,
            #[cfg(test)]
            verify_index: false,
        })
    }

    pub fn index(&self) -> &UnitIndex {
        &self.index
    }

    pub fn subgraphs(&self) -> impl Iterator<Item = &Subgraph> {
        self.slots.iter().flatten()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn merges(&self) -> usize {
        self.merges
    }

    /// Overlapping pairs at or above the threshold (all valid between iterations).
    pub fn candidate_count(&self) -> usize {
        self.order.len()
    }

    fn is_current(&self, k: &PairKey) -> bool {
        self.slots[k.a as usize].is_some()
            && self.slots[k.b as usize].is_some()
            && self.version[k.a as usize] == k.va
            && self.version[k.b as usize] == k.vb
    }

    fn merge_pair(&mut self, keep: u32, retire: u32) {
        let gone = self.slots[retire as usize].take().expect("live subgraph");
        let keep_id = self.ids[keep as usize];
        self.index.absorb(keep_id, gone.id, &gone.units);
        let sg = self.slots[keep as usize].as_mut().expect("live subgraph");
        sg.units = sorted_union(&sg.units, &gone.units);
        sg.source_timepoints = sorted_union(&sg.source_timepoints, &gone.source_timepoints);
        self.version[keep as usize] += 1;
        self.merges += 1;
        #[cfg(test)]
        if self.verify_index {
            assert_eq!(self.index, UnitIndex::build(self.subgraphs()));
        }
    }

    fn rescore(&self, s: u32, out: &mut Vec<PairKey>) {
        let units = &self.slots[s as usize].as_ref().expect("live subgraph").units;
        let mut partners: Vec<u32> = units
            .iter()
            .flat_map(|&u| self.index.containing(u))
            .map(|id| self.ids.binary_search(&id).expect("indexed id") as u32)
            .filter(|&p| p != s)
            .collect();
        partners.sort_unstable();
        partners.dedup();
        for p in partners {
            let (a, b) = if s < p { (s, p) } else { (p, s) };
            let key = PairKey {
                sim: overlap(units, &self.slots[p as usize].as_ref().expect("live subgraph").units),
                a,
                b,
                va: self.version[a as usize],
                vb: self.version[b as usize],
            };
            if key.sim >= self.th_sim {
                out.push(key);
            }
        }
    }

    /// One outer iteration. Returns whether anything merged.
    pub fn step(&mut self) -> bool {
        self.iterations += 1;
        let mut survivors = Vec::new();
        let order = std::mem::take(&mut self.order);
        for key in &order {
            // Keys of subgraphs merged earlier in this iteration are stale.
            if self.is_current(key) {
                self.merge_pair(key.a, key.b);
                survivors.push(key.a);
            }
        }
        self.order = order;
        if survivors.is_empty() {
            return false;
        }
        let mut order = std::mem::take(&mut self.order);
        order.retain(|k| self.is_current(k));
        survivors.sort_unstable();
        let mut fresh = Vec::new();
        for s in survivors {
            self.rescore(s, &mut fresh);
        }
        fresh.sort_unstable();
        fresh.dedup();
        order.extend(fresh);
        order.sort();
        self.order = order;
        true
    }

    pub fn run(mut self) -> Vec<Subgraph> {
        while self.step() {}
        self.slots.into_iter().flatten().collect()
    }
}

/// Merges clusters from all time points into subgraphs, sorted by id.
pub fn merge_subgraphs(clusters: &[Cluster], th_sim: f64) -> Result<Vec<Subgraph>> {
    Ok(Merger::new(clusters, th_sim)?.run())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub th_sim: f64,
    pub count: usize,
    pub mean_size: f64,
    pub max_size: usize,
}

pub fn mean_size(subgraphs: &[Subgraph]) -> f64 {
    if subgraphs.is_empty() {
        return 0.0;
    }
    subgraphs.iter().map(Subgraph::len).sum::<usize>() as f64 / subgraphs.len() as f64
}

/// Subgraph count and mean size for each threshold (ascending).
pub fn sweep_th_sim(clusters: &[Cluster], thresholds: &[f64]) -> Result<Vec<SweepPoint>> {
    if !thresholds.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::Contract("thresholds must be sorted ascending".into()));
    }
    thresholds
        .iter()
        .map(|&th| {
            let sgs = merge_subgraphs(clusters, th)?;
            Ok(SweepPoint {
                th_sim: th,
                count: sgs.len(),
                mean_size: mean_size(&sgs),
                max_size: sgs.iter().map(Subgraph::len).max().unwrap_or(0),
            })
        })
        .collect()
}
