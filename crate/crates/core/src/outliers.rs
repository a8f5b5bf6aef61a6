//! Interquartile-range outlier rule per `(unit, weekday, time of day)`.
//!
//! Thresholds are computed over the whole observation window; the value
//! being tested contributes to its own bucket's quartiles. Quartiles use
//! linear interpolation between closest ranks (R-7).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::road_graph::UnitIdx;
use crate::traffic::{LoadMatrix, TimeGrid};

pub const DEFAULT_K_IQR: f64 = 1.5;
pub const DEFAULT_MIN_SAMPLES: usize = 4;

/// First and third quartile of a non-empty sample.
pub fn quartiles(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Domain("quartiles of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quartiles_sorted(&sorted))
}

fn quartiles_sorted(sorted: &[f64]) -> (f64, f64) {
    (quantile_r7(sorted, 0.25), quantile_r7(sorted, 0.75))
}

fn quantile_r7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
        _ => sorted[lo],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketBound {
    pub q1: f64,
    pub q3: f64,
    pub upper_bound: f64,
    pub n: u32,
}

/// Upper load bounds for every testable `(unit, bucket)` pair.
#[derive(Debug, Clone)]
pub struct OutlierThresholds {
    grid: TimeGrid,
    n_units: usize,
    k_iqr: f64,
    min_samples: usize,
    bounds: Vec<Option<BucketBound>>,
    sample_counts: Vec<u32>,
}

impl OutlierThresholds {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn k_iqr(&self) -> f64 {
        self.k_iqr
    }

    pub fn min_samples(&self) -> usize {
        self.min_samples
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn buckets_per_unit(&self) -> usize {
        self.grid.bucket_count()
    }

    /// Bound for a bucket, `None` when the bucket is untestable.
    pub fn bound(&self, u: UnitIdx, bucket_index: usize) -> Option<&BucketBound> {
        self.bounds[u.index() * self.buckets_per_unit() + bucket_index].as_ref()
    }

    pub fn sample_count(&self, u: UnitIdx, bucket_index: usize) -> u32 {
        self.sample_counts[u.index() * self.buckets_per_unit() + bucket_index]
    }

    /// Buckets that had at least one sample but fewer than `min_samples`.
    pub fn untestable_count(&self) -> usize {
        self.sample_counts
            .iter()
            .zip(&self.bounds)
            .filter(|(n, b)| **n > 0 && b.is_none())
            .count()
    }

    /// `(unit, bucket index, bound)` for every testable bucket.
    pub fn iter(&self) -> impl Iterator<Item = (UnitIdx, usize, &BucketBound)> {
        let per = self.buckets_per_unit();
        self.bounds.iter().enumerate().filter_map(move |(i, b)| {
            b.as_ref().map(|b| (UnitIdx((i / per) as u32), i % per, b))
        })
    }
}

/// Quartile thresholds per `(unit, bucket)` from the present loads.
pub fn compute_thresholds(m: &LoadMatrix, k_iqr: f64, min_samples: usize) -> Result<OutlierThresholds> {
    if !(k_iqr >= 0.0 && k_iqr.is_finite()) {
        return Err(Error::Domain(format!("k_iqr must be non-negative, got {k_iqr}")));
    }
    let grid = *m.grid();
    let per_unit = grid.bucket_count();
    let bucket_of_t = grid.bucket_indices();
    let min_samples = min_samples.max(1);

    let per_unit_results: Vec<(Vec<Option<BucketBound>>, Vec<u32>)> = (0..m.n_units())
        .into_par_iter()
        .map(|u| {
            let mut samples: Vec<Vec<f64>> = vec![Vec::new(); per_unit];
            for (t, &v) in m.row(UnitIdx(u as u32)).iter().enumerate() {
                if !v.is_nan() {
                    samples[bucket_of_t[t] as usize].push(v);
                }
            }
            let mut bounds = Vec::with_capacity(per_unit);
            let mut counts = Vec::with_capacity(per_unit);
            for mut s in samples {
                counts.push(s.len() as u32);
                if s.len() < min_samples {
                    bounds.push(None);
                    continue;
                }
                s.sort_by(f64::total_cmp);
                let (q1, q3) = quartiles_sorted(&s);
                bounds.push(Some(BucketBound {
                    q1,
                    q3,
                    upper_bound: q3 + k_iqr * (q3 - q1),
                    n: s.len() as u32,
                }));
            }
            (bounds, counts)
        })
        .collect();

    let mut bounds = Vec::with_capacity(m.n_units() * per_unit);
    let mut sample_counts = Vec::with_capacity(m.n_units() * per_unit);
    for (b, c) in per_unit_results {
        bounds.extend(b);
        sample_counts.extend(c);
    }
    Ok(OutlierThresholds {
        grid,
        n_units: m.n_units(),
        k_iqr,
        min_samples,
        bounds,
        sample_counts,
    })
}

/// Units whose load strictly exceeds their bucket's upper bound at one time point.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AffectedSet {
    pub timepoint: usize,
    /// Sorted, without duplicates.
    pub units: Vec<UnitIdx>,
}

impl AffectedSet {
    pub fn new(timepoint: usize, mut units: Vec<UnitIdx>) -> Self {
        units.sort_unstable();
        units.dedup();
        AffectedSet { timepoint, units }
    }

    pub fn contains(&self, u: UnitIdx) -> bool {
        self.units.binary_search(&u).is_ok()
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

/// One affected set per time point of the matrix grid.
pub fn detect_affected(m: &LoadMatrix, th: &OutlierThresholds) -> Result<Vec<AffectedSet>> {
    if m.grid() != th.grid() || m.n_units() != th.n_units() {
        return Err(Error::Contract(
            "thresholds were computed on a different grid or graph".into(),
        ));
    }
    let bucket_of_t = m.grid().bucket_indices();
    Ok((0..m.n_timepoints())
        .into_par_iter()
        .map(|t| {
            let units = (0..m.n_units() as u32)
                .map(UnitIdx)
                .filter(|&u| match (m.get(u, t), th.bound(u, bucket_of_t[t] as usize)) {
                    (Some(load), Some(b)) => load > b.upper_bound,
                    _ => false,
                })
                .collect();
            AffectedSet { timepoint: t, units }
        })
        .collect())
}

/// `|affected(t)|` for every time point.
pub fn affected_counts(sets: &[AffectedSet]) -> Vec<usize> {
    sets.iter().map(AffectedSet::len).collect()
}
