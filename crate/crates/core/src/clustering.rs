//! Region growing of affected units into affected subgraphs.
//!
//! Every affected unit seeds a region. Two regions merge while the gap
//! between them (intermediate units on the shortest undirected path) is at
//! most `d_u_max`. The fixpoint of that process is the set of connected
//! components of the "pairwise gap <= d_u_max" relation on affected units,
//! which is what we compute, using a bounded breadth-first search per seed
//! and a union-find. Bridging units are not members of the result.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::outliers::AffectedSet;
use crate::road_graph::{TransportGraph, UnitIdx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClusterId(pub u32);

/// Affected subgraph at one time point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub id: ClusterId,
    pub timepoint: usize,
    /// Sorted, non-empty.
    pub units: Vec<UnitIdx>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins, keeps the result independent of visit order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Clusters the affected units of one time point. Cluster ids are local
/// (`0..n`), ordered by each cluster's smallest unit.
pub fn cluster_affected(g: &TransportGraph, affected: &AffectedSet, d_u_max: u32) -> Result<Vec<Cluster>> {
    if let Some(u) = affected.units.iter().find(|u| u.index() >= g.unit_count()) {
        return Err(Error::UnknownUnit(format!("#{}", u.0)));
    }
    let mut units = affected.units.clone();
    units.sort_unstable();
    units.dedup();
    let slot: HashMap<UnitIdx, usize> = units.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut sets = DisjointSets::new(units.len());

    // A gap of d intermediate units means d + 1 steps in the line graph.
    let max_steps = d_u_max + 1;
    let mut steps: HashMap<UnitIdx, u32> = HashMap::new();
    let mut queue = VecDeque::new();
    for (i, &seed) in units.iter().enumerate() {
        steps.clear();
        queue.clear();
        steps.insert(seed, 0);
        queue.push_back(seed);
        while let Some(u) = queue.pop_front() {
            let s = steps[&u];
            if s == max_steps {
                continue;
            }
            for v in g.neighbours(u) {
                if steps.contains_key(&v) {
                    continue;
                }
                steps.insert(v, s + 1);
                if let Some(&j) = slot.get(&v) {
                    sets.union(i, j);
                }
                queue.push_back(v);
            }
        }
    }

    let mut groups: Vec<Vec<UnitIdx>> = Vec::new();
    let mut group_of_root: HashMap<usize, usize> = HashMap::new();
    for (i, &u) in units.iter().enumerate() {
        let root = sets.find(i);
        let gi = *group_of_root.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[gi].push(u);
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(i, units)| Cluster {
            id: ClusterId(i as u32),
            timepoint: affected.timepoint,
            units,
        })
        .collect())
}

/// Clusters every time point; ids are global and follow `(timepoint, local order)`.
pub fn cluster_all(g: &TransportGraph, affected: &[AffectedSet], d_u_max: u32) -> Result<Vec<Cluster>> {
    let per_t: Vec<Vec<Cluster>> = affected
        .par_iter()
        .map(|a| cluster_affected(g, a, d_u_max))
        .collect::<Result<_>>()?;
    let mut next = 0u32;
    let mut out = Vec::with_capacity(per_t.iter().map(Vec::len).sum());
    for clusters in per_t {
        for mut c in clusters {
            c.id = ClusterId(next);
            next += 1;
            out.push(c);
        }
    }
    Ok(out)
}

/// Groups clusters into one list per time point `0..n_timepoints`.
pub fn by_timepoint(clusters: &[Cluster], n_timepoints: usize) -> Result<Vec<Vec<Cluster>>> {
    let mut out = vec![Vec::new(); n_timepoints];
    for c in clusters {
        out.get_mut(c.timepoint)
            .ok_or_else(|| Error::Contract(format!("cluster at time point {} outside grid", c.timepoint)))?
            .push(c.clone());
    }
    Ok(out)
}
