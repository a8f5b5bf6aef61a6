//! Evaluation against planted ground truth and summary statistics.

use std::collections::HashMap;
use std::fmt::Write as _;

use log::warn;

use crate::clustering::Cluster;
use crate::dependencies::DependencyPair;
use crate::error::{Error, Result};
use crate::merging::{SgId, Subgraph};
use crate::outliers::AffectedSet;
use crate::road_graph::UnitIdx;
use crate::tracking::{existence_by_size, size_duration_correlation, SizeBin, TrackedCluster};

/// Planted pair as two unit sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthPair {
    pub region_a: Vec<UnitIdx>,
    pub region_b: Vec<UnitIdx>,
}

fn touches(units: &[UnitIdx], region: &[UnitIdx]) -> bool {
    region.iter().any(|u| units.binary_search(u).is_ok())
}

/// A ranked pair is correct when its subgraphs overlap the two regions of
/// one planted pair, one region each.
pub fn is_correct(a: &[UnitIdx], b: &[UnitIdx], truth: &[TruthPair]) -> bool {
    truth.iter().any(|t| {
        (touches(a, &t.region_a) && touches(b, &t.region_b)) || (touches(a, &t.region_b) && touches(b, &t.region_a))
    })
}

/// Share of correct pairs among the first `min(k, len)` ranked pairs.
pub fn precision_at_k(
    ranked: &[DependencyPair],
    subgraphs: &[Subgraph],
    truth: &[TruthPair],
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if ranked.is_empty() {
        warn!("precision@{k} of an empty ranking is 0");
        return Ok(0.0);
    }
    let by_id: HashMap<SgId, &Subgraph> = subgraphs.iter().map(|s| (s.id, s)).collect();
    let top = &ranked[..k.min(ranked.len())];
    let mut correct = 0;
    for p in top {
        let get = |id: SgId| {
            by_id
                .get(&id)
                .ok_or_else(|| Error::Contract(format!("ranked subgraph {} is unknown", id.0)))
        };
        if is_correct(&get(p.sg1)?.units, &get(p.sg2)?.units, truth) {
            correct += 1;
        }
    }
    Ok(correct as f64 / top.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub mean: f64,
}

/// Min, median (mean of the middle two for even counts), max and mean.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
    Some(Summary {
        min: v[0],
        median,
        max: v[n - 1],
        mean: v.iter().sum::<f64>() / n as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterStats {
    pub count: usize,
    pub mean_size: f64,
    pub max_size: usize,
}

pub fn cluster_stats(clusters: &[Cluster]) -> ClusterStats {
    let count = clusters.len();
    let total: usize = clusters.iter().map(Cluster::len).sum();
    ClusterStats {
        count,
        mean_size: if count == 0 { 0.0 } else { total as f64 / count as f64 },
        max_size: clusters.iter().map(Cluster::len).max().unwrap_or(0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionStats {
    /// Affected units per time point.
    pub affected_series: Vec<usize>,
    pub affected_summary: Option<Summary>,
    pub clusters: ClusterStats,
    pub track_bins: Vec<SizeBin>,
    pub track_count: usize,
    pub size_duration_spearman: Option<f64>,
}

pub fn distribution_stats(
    affected: &[AffectedSet],
    clusters: &[Cluster],
    tracks: &[TrackedCluster],
) -> DistributionStats {
    let series: Vec<usize> = affected.iter().map(AffectedSet::len).collect();
    let as_f64: Vec<f64> = series.iter().map(|&x| x as f64).collect();
    DistributionStats {
        affected_summary: summarize(&as_f64),
        affected_series: series,
        clusters: cluster_stats(clusters),
        track_bins: existence_by_size(tracks),
        track_count: tracks.len(),
        size_duration_spearman: size_duration_correlation(tracks),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint {
    pub parameter: &'static str,
    pub value: f64,
    pub count: usize,
    pub mean_size: f64,
    pub max_size: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    /// `(k, precision)`; empty without ground truth.
    pub precision: Vec<(usize, f64)>,
    pub stats: Option<DistributionStats>,
    pub parameters: Vec<ParameterPoint>,
}

impl EvalReport {
    pub fn precision_csv(&self) -> String {
        let mut s = String::from("k,precision\n");
        for (k, p) in &self.precision {
            let _ = writeln!(s, "{k},{p}");
        }
        s
    }

    pub fn affected_csv(&self) -> String {
        let mut s = String::from("timepoint,affected_units\n");
        if let Some(st) = &self.stats {
            for (t, n) in st.affected_series.iter().enumerate() {
                let _ = writeln!(s, "{t},{n}");
            }
        }
        s
    }

    pub fn parameters_csv(&self) -> String {
        let mut s = String::from("parameter,value,count,mean_size,max_size\n");
        for p in &self.parameters {
            let _ = writeln!(s, "{},{},{},{},{}", p.parameter, p.value, p.count, p.mean_size, p.max_size);
        }
        s
    }

    pub fn track_bins_csv(&self) -> String {
        let mut s = String::from("min_size,max_size,tracks,mean_duration\n");
        if let Some(st) = &self.stats {
            for b in &st.track_bins {
                let _ = writeln!(s, "{},{},{},{}", b.min_size, b.max_size, b.tracks, b.mean_duration);
            }
        }
        s
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        if !self.precision.is_empty() {
            let _ = writeln!(s, "precision@k");
            for (k, p) in &self.precision {
                let _ = writeln!(s, "  k={k:<3} {p:.3}");
            }
        }
        if let Some(st) = &self.stats {
            if let Some(a) = st.affected_summary {
                let _ = writeln!(
                    s,
                    "affected units per time point: min {} median {} max {} mean {:.2}",
                    a.min, a.median, a.max, a.mean
                );
            }
            let _ = writeln!(
                s,
                "clusters: {} (mean size {:.2}, max {})",
                st.clusters.count, st.clusters.mean_size, st.clusters.max_size
            );
            let _ = writeln!(s, "tracks: {}", st.track_count);
            for b in &st.track_bins {
                let _ = writeln!(
                    s,
                    "  size [{}, {}): {} tracks, mean existence {:.2} steps",
                    b.min_size, b.max_size, b.tracks, b.mean_duration
                );
            }
            if let Some(r) = st.size_duration_spearman {
                let _ = writeln!(s, "size/existence rank correlation: {r:.3}");
            }
        }
        if !self.parameters.is_empty() {
            let _ = writeln!(s, "parameter sweep");
            for p in &self.parameters {
                let _ = writeln!(
                    s,
                    "  {}={}: {} (mean size {:.2}, max {})",
                    p.parameter, p.value, p.count, p.mean_size, p.max_size
                );
            }
        }
        s
    }
}
