//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roadcongest::clustering::{cluster_affected, cluster_all, Cluster, ClusterId};
use roadcongest::dependencies::{build_occurrence, mutual_information, score_candidates};
use roadcongest::eval::{precision_at_k, TruthPair};
use roadcongest::merging::{merge_subgraphs, similarity, Merger, Subgraph};
use roadcongest::outliers::{compute_thresholds, detect_affected, AffectedSet};
use roadcongest::pipeline::{Pipeline, PipelineConfig, Stage};
use roadcongest::road_graph::{LonLat, RoadClass, TransportGraph, UnitIdx, UnitSpec};
use roadcongest::synth::{generate_scenario, junction_fixture, ScenarioSpec};
use roadcongest::tracking::{hungarian_assign, AssignmentCosts};
use roadcongest::traffic::{LoadMatrix, TimeGrid};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed <= Duration::from_secs(limit_s), || {
        format!("took {:.2?}, limit {limit_s} s", elapsed)
    })
}

// 1. Mutual information against a direct 2x2 contingency computation.

fn mi_brute(x: &[bool], y: &[bool]) -> f64 {
    let n = x.len() as f64;
    let mut joint = [[0.0f64; 2]; 2];
    for (&a, &b) in x.iter().zip(y) {
        joint[a as usize][b as usize] += 1.0 / n;
    }
    let px = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let py = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let p = joint[a][b];
            if p > 0.0 {
                mi += p * (p / (px[a] * py[b])).log2();
            }
        }
    }
    mi
}

fn mi_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let len = rng.gen_range(1..=32);
        let bias_x = rng.gen_range(0.0..1.0);
        let bias_y = rng.gen_range(0.0..1.0);
        let x: Vec<bool> = (0..len).map(|_| rng.gen_bool(bias_x)).collect();
        let y: Vec<bool> = (0..len).map(|_| rng.gen_bool(bias_y)).collect();
        let got = mutual_information(&x, &y).map_err(|e| e.to_string())?;
        worst = worst.max((got - mi_brute(&x, &y)).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e} bits"))?;
    within(start.elapsed(), 1)?;
    Ok(format!("1000 pairs, max deviation {worst:.1e} bits"))
}

// 2. Clustering against connected components of the gap relation.

fn random_graph(rng: &mut ChaCha8Rng) -> TransportGraph {
    let n_junctions = rng.gen_range(2..=80);
    let n_units = rng.gen_range(1..=200);
    let pos: Vec<LonLat> = (0..n_junctions)
        .map(|_| LonLat::new(9.0 + rng.gen_range(0.0..0.1), 52.0 + rng.gen_range(0.0..0.1)))
        .collect();
    let units = (0..n_units)
        .map(|i| {
            let a = rng.gen_range(0..n_junctions);
            let b = rng.gen_range(0..n_junctions);
            UnitSpec {
                id: format!("u{i}"),
                from_node: format!("n{a}"),
                to_node: format!("n{b}"),
                road_class: RoadClass::Primary,
                speed_limit_kmh: 50.0,
                length_m: 100.0,
                geometry: vec![pos[a], pos[b]],
            }
        })
        .collect();
    TransportGraph::build(vec![], units).expect("random graph")
}

/// Unit adjacency by shared endpoint, ignoring direction.
fn unit_adjacency(g: &TransportGraph) -> Vec<Vec<usize>> {
    let mut by_junction: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, u) in g.units().iter().enumerate() {
        by_junction.entry(u.from.0).or_default().push(i);
        by_junction.entry(u.to.0).or_default().push(i);
    }
    let mut adj = vec![BTreeSet::new(); g.unit_count()];
    for us in by_junction.values() {
        for &a in us {
            for &b in us {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    adj.into_iter().map(|s| s.into_iter().collect()).collect()
}

fn components_brute(g: &TransportGraph, affected: &[usize], d: u32) -> BTreeSet<Vec<u32>> {
    let adj = unit_adjacency(g);
    let n = g.unit_count();
    // hops[a][b]: edges on the shortest unit path; gap = hops - 1.
    let hops = |from: usize| {
        let mut dist = vec![usize::MAX; n];
        dist[from] = 0;
        let mut q = VecDeque::from([from]);
        while let Some(x) = q.pop_front() {
            for &y in &adj[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    q.push_back(y);
                }
            }
        }
        dist
    };
    let dists: Vec<Vec<usize>> = affected.iter().map(|&a| hops(a)).collect();
    let mut seen = vec![false; affected.len()];
    let mut out = BTreeSet::new();
    for s in 0..affected.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![affected[s] as u32];
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for j in 0..affected.len() {
                let h = dists[i][affected[j]];
                if !seen[j] && h != usize::MAX && h >= 1 && (h - 1) as u32 <= d {
                    seen[j] = true;
                    comp.push(affected[j] as u32);
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.insert(comp);
    }
    out
}

fn clustering_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut checked = 0;
    for case in 0..200 {
        let g = random_graph(&mut rng);
        let n = g.unit_count();
        let density = rng.gen_range(0.05..0.6);
        let affected: Vec<usize> = (0..n).filter(|_| rng.gen_bool(density)).collect();
        let set = AffectedSet::new(0, affected.iter().map(|&u| UnitIdx(u as u32)).collect());
        for d in 0..=2 {
            let got: BTreeSet<Vec<u32>> = cluster_affected(&g, &set, d)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|c| c.units.iter().map(|u| u.0).collect())
                .collect();
            let want = components_brute(&g, &affected, d);
            ensure(got == want, || format!("graph {case}, d_u_max {d}: clusters differ from components"))?;
            checked += 1;
        }
    }
    within(start.elapsed(), 30)?;
    Ok(format!("{checked} graph/d_u_max cases agree"))
}

// 3. Merging termination, union preservation and fixpoint.

fn random_clusters(rng: &mut ChaCha8Rng) -> Vec<Cluster> {
    let universe = rng.gen_range(5..60u32);
    let count = rng.gen_range(1..80u32);
    (0..count)
        .map(|i| {
            let size = rng.gen_range(1..=universe.min(8));
            let mut units: Vec<UnitIdx> = (0..size).map(|_| UnitIdx(rng.gen_range(0..universe))).collect();
            units.sort_unstable();
            units.dedup();
            Cluster { id: ClusterId(i), timepoint: i as usize, units }
        })
        .collect()
}

fn merging_fixpoint() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut runs = 0;
    for case in 0..100 {
        let clusters = random_clusters(&mut rng);
        let union_in: BTreeSet<UnitIdx> = clusters.iter().flat_map(|c| c.units.iter().copied()).collect();
        for th in [0.0, 0.1, 0.3, 0.5] {
            let mut m = Merger::new(&clusters, th).map_err(|e| e.to_string())?;
            // Every productive iteration removes at least one subgraph.
            let mut steps = 0;
            while m.step() {
                steps += 1;
                ensure(steps <= clusters.len(), || format!("case {case}, th {th}: no termination"))?;
            }
            let out: Vec<Subgraph> = m.subgraphs().cloned().collect();
            let union_out: BTreeSet<UnitIdx> = out.iter().flat_map(|s| s.units.iter().copied()).collect();
            ensure(union_in == union_out, || format!("case {case}, th {th}: unit union changed"))?;
            for (i, a) in out.iter().enumerate() {
                for b in &out[i + 1..] {
                    let shares = a.units.iter().any(|u| b.units.binary_search(u).is_ok());
                    if !shares {
                        continue;
                    }
                    ensure(th > 0.0, || format!("case {case}: th 0 left overlapping subgraphs"))?;
                    let s = similarity(&a.units, &b.units).map_err(|e| e.to_string())?;
                    ensure(s < th, || {
                        format!("case {case}, th {th}: subgraphs {} and {} still have similarity {s}", a.id.0, b.id.0)
                    })?;
                }
            }
            runs += 1;
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!("{runs} merge runs reach a fixpoint"))
}

// 4. Hungarian assignment against exhaustive search.

fn exhaustive_max(c: &AssignmentCosts) -> u64 {
    let (small, large, transposed) = if c.rows() <= c.cols() {
        (c.rows(), c.cols(), false)
    } else {
        (c.cols(), c.rows(), true)
    };
    let get = |i: usize, j: usize| if transposed { c.get(j, i) } else { c.get(i, j) };
    fn rec(i: usize, small: usize, large: usize, used: &mut [bool], get: &dyn Fn(usize, usize) -> u64) -> u64 {
        if i == small {
            return 0;
        }
        let mut best = 0;
        for j in 0..large {
            if !used[j] {
                used[j] = true;
                best = best.max(get(i, j) + rec(i + 1, small, large, used, get));
                used[j] = false;
            }
        }
        best
    }
    rec(0, small, large, &mut vec![false; large], &get)
}

fn hungarian_optimality() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for case in 0..500 {
        let (r, c) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let zeros = rng.gen_range(0.0..0.8);
        let cells: Vec<u64> = (0..r * c)
            .map(|_| if rng.gen_bool(zeros) { 0 } else { rng.gen_range(1..20) })
            .collect();
        let costs = AssignmentCosts::new(r, c, cells).map_err(|e| e.to_string())?;
        let matches = hungarian_assign(&costs);
        let rows: BTreeSet<usize> = matches.iter().map(|m| m.0).collect();
        let cols: BTreeSet<usize> = matches.iter().map(|m| m.1).collect();
        ensure(rows.len() == matches.len() && cols.len() == matches.len(), || {
            format!("matrix {case}: assignment is not one-to-one")
        })?;
        ensure(matches.iter().all(|&(i, j)| costs.get(i, j) > 0), || {
            format!("matrix {case}: zero-intersection match")
        })?;
        let total: u64 = matches.iter().map(|&(i, j)| costs.get(i, j)).sum();
        let best = exhaustive_max(&costs);
        ensure(total == best, || format!("matrix {case}: total {total}, optimum {best}"))?;
    }
    within(start.elapsed(), 5)?;
    Ok("500 matrices match the exhaustive optimum".into())
}

// 5. Recovery of planted dependencies on the default scenario.

fn precision_curve(seed: u64) -> Result<Vec<f64>, String> {
    let e = |e: roadcongest::Error| e.to_string();
    let sc = generate_scenario(&ScenarioSpec { seed, ..ScenarioSpec::default() }).map_err(e)?;
    let m = sc.load_matrix().map_err(e)?;
    let th = compute_thresholds(&m, 1.5, 4).map_err(e)?;
    let affected = detect_affected(&m, &th).map_err(e)?;
    let clusters = cluster_all(&sc.graph, &affected, 1).map_err(e)?;
    let sgs = merge_subgraphs(&clusters, 0.1).map_err(e)?;
    let occ = build_occurrence(&sgs, &affected).map_err(e)?;
    let ranked = score_candidates(&sgs, &occ.matrix, &sc.graph, 500.0).map_err(e)?;
    let truth: Vec<TruthPair> = sc
        .planted
        .iter()
        .map(|p| TruthPair { region_a: p.region_a.clone(), region_b: p.region_b.clone() })
        .collect();
    (1..=20).map(|k| precision_at_k(&ranked, &sgs, &truth, k).map_err(e)).collect()
}

fn ols_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        sxy += (i as f64 - mx) * (y - my);
        sxx += (i as f64 - mx).powi(2);
    }
    sxy / sxx
}

fn planted_recovery() -> Check {
    let start = Instant::now();
    let mut curves = Vec::new();
    for seed in 1..=10 {
        curves.push(precision_curve(seed)?);
    }
    let p5: Vec<f64> = curves.iter().map(|c| c[4]).collect();
    let good = p5.iter().filter(|&&p| p >= 0.8).count();
    let mean: Vec<f64> = (0..20).map(|k| curves.iter().map(|c| c[k]).sum::<f64>() / 10.0).collect();
    let slope = ols_slope(&mean);
    ensure(good >= 8, || format!("precision@5 >= 0.8 in only {good}/10 seeds: {p5:?}"))?;
    ensure(slope <= 0.0, || format!("mean precision@k rises with k (slope {slope:.4})"))?;
    within(start.elapsed(), 300)?;
    Ok(format!(
        "precision@5 >= 0.8 in {good}/10 seeds, mean p@1 {:.2} p@20 {:.2}, slope {slope:.4}",
        mean[0], mean[19]
    ))
}

// 6. Parameter trends on the junction fixture.

fn mean_size(sgs: &[Subgraph]) -> f64 {
    sgs.iter().map(Subgraph::len).sum::<usize>() as f64 / sgs.len() as f64
}

/// Trends are read from the curves averaged over an ensemble of fixture
/// seeds; single fixtures show small upticks of the mean size at high
/// thresholds because merged subgraphs may overlap.
fn parameter_trends() -> Check {
    const SEEDS: u64 = 20;
    let start = Instant::now();
    let e = |e: roadcongest::Error| e.to_string();
    let ths: Vec<f64> = (0..=8).map(|i| i as f64 / 10.0).collect();
    let mut counts = vec![0.0; ths.len()];
    let mut sizes = vec![0.0; ths.len()];
    let mut single_monotone = 0;
    let mut by_d = [(0.0, 0.0); 4];
    for seed in 1..=SEEDS {
        let fx = junction_fixture(seed).map_err(e)?;
        let clusters = cluster_all(&fx.graph, &fx.affected, 1).map_err(e)?;
        let mut own = Vec::new();
        for (i, &th) in ths.iter().enumerate() {
            let sgs = merge_subgraphs(&clusters, th).map_err(e)?;
            counts[i] += sgs.len() as f64 / SEEDS as f64;
            sizes[i] += mean_size(&sgs) / SEEDS as f64;
            own.push(mean_size(&sgs));
        }
        if own.windows(2).all(|w| w[0] >= w[1]) {
            single_monotone += 1;
        }
        let mut prev: Option<(usize, usize)> = None;
        for d in 0..=3u32 {
            let cs = cluster_all(&fx.graph, &fx.affected, d).map_err(e)?;
            let here = (cs.len(), cs.iter().map(Cluster::len).max().unwrap_or(0));
            if let Some(p) = prev {
                ensure(here.0 <= p.0 && here.1 >= p.1, || {
                    format!("seed {seed}: d_u_max {d} gives {here:?} after {p:?}")
                })?;
            }
            prev = Some(here);
            by_d[d as usize].0 += here.0 as f64 / SEEDS as f64;
            by_d[d as usize].1 += here.1 as f64 / SEEDS as f64;
        }
    }
    let round = |v: &[f64]| v.iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>();
    ensure(counts.windows(2).all(|w| w[0] <= w[1]), || format!("mean subgraph count not non-decreasing: {:?}", round(&counts)))?;
    ensure(sizes.windows(2).all(|w| w[0] >= w[1]), || format!("mean size not non-increasing: {:?}", round(&sizes)))?;
    let drop_low = sizes[0] - sizes[4];
    let drop_high = sizes[4] - sizes[8];
    ensure(drop_low >= drop_high, || {
        format!("size drop over [0, 0.4] is {drop_low:.2}, over [0.4, 0.8] {drop_high:.2}")
    })?;
    within(start.elapsed(), 120)?;
    Ok(format!(
        "{SEEDS} fixtures; mean count {:?}; mean size {:?} (drop {drop_low:.1} vs {drop_high:.1}; {single_monotone}/{SEEDS} fixtures monotone alone); clusters by d_u_max {:?}",
        round(&counts),
        round(&sizes),
        by_d.iter().map(|x| x.0.round()).collect::<Vec<_>>()
    ))
}

// 7. Strict inequality of the outlier rule.

/// One unit; `history` goes into one weekly bucket, one value per week.
fn bucket_flags(history: &[f64]) -> (f64, Vec<bool>) {
    const WEEK: usize = 7 * 96;
    let start = Utc.with_ymd_and_hms(2024, 1, 1, 8, 0, 0).unwrap();
    let grid = TimeGrid::new(start, 15, WEEK * history.len()).unwrap();
    let mut m = LoadMatrix::empty(grid, 1);
    for (w, &v) in history.iter().enumerate() {
        m.set(UnitIdx(0), w * WEEK, v).unwrap();
    }
    let th = compute_thresholds(&m, 1.5, 4).unwrap();
    let bucket = grid.bucket_index(grid.bucket_of(0).unwrap());
    let bound = th.bound(UnitIdx(0), bucket).map_or(f64::NAN, |b| b.upper_bound);
    let aff = detect_affected(&m, &th).unwrap();
    (bound, (0..history.len()).map(|w| aff[w * WEEK].contains(UnitIdx(0))).collect())
}

fn iqr_exactness() -> Check {
    // Sixteenths keep every quartile and bound exact in binary floating point.
    // Base [1, 2, 3, 4, 5] / 16 plus a candidate c: Q1 = 2.25/16, Q3 = 4.75/16,
    // IQR = 2.5/16, bound = 8.5/16.
    let base = [1.0, 2.0, 3.0, 4.0, 5.0].map(|x| x / 16.0);
    let bound = 8.5 / 16.0;
    let tiny = 2f64.powi(-30);
    let mut cases: Vec<(Vec<f64>, usize, bool, &str)> = vec![
        ([base.as_slice(), &[bound]].concat(), 5, false, "at bound"),
        ([base.as_slice(), &[bound + tiny]].concat(), 5, true, "just above"),
        ([base.as_slice(), &[bound - tiny]].concat(), 5, false, "just below"),
        ([base.as_slice(), &[1.0]].concat(), 5, true, "far above"),
        // Zero spread: every value equals the bound.
        (vec![0.25; 9], 8, false, "flat at bound"),
        ([vec![0.25; 8], vec![0.25 + tiny]].concat(), 8, true, "flat just above"),
        // Below min_samples nothing is testable.
        (vec![0.0, 0.0, 1.0], 2, false, "three samples"),
    ];
    let mut agree = 0;
    let total = cases.len();
    for (history, idx, want, name) in cases.drain(..) {
        let (got_bound, flags) = bucket_flags(&history);
        if name.contains("bound") && !name.starts_with("flat") {
            ensure(got_bound == bound, || format!("{name}: bound {got_bound}, expected {bound}"))?;
        }
        ensure(flags[idx] == want, || format!("{name}: flagged {}, expected {want}", flags[idx]))?;
        let others = flags.iter().enumerate().filter(|(i, _)| *i != idx).any(|(_, f)| *f);
        ensure(!others, || format!("{name}: a base value was flagged"))?;
        agree += 1;
    }
    Ok(format!("{agree}/{total} hand-built buckets agree"))
}

// 8. Byte-identical ranked pairs across runs.

fn run_pipeline(dir: &Path) -> Result<Vec<u8>, String> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/synthetic.toml");
    let cfg = PipelineConfig::load(
        Some(&config),
        &[
            format!("paths.output_dir = {:?}", dir.display().to_string()),
            "synth.n_days = 28".into(),
        ],
    )
    .map_err(|e| e.to_string())?;
    let p = Pipeline::new(cfg).map_err(|e| e.to_string())?;
    for stage in [Stage::Synth, Stage::Ingest, Stage::Detect, Stage::Cluster, Stage::Merge, Stage::Discover] {
        p.run(stage).map_err(|e| e.to_string())?;
    }
    std::fs::read(dir.join("ranked_pairs.csv")).map_err(|e| e.to_string())
}

fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_pipeline(a.path())?;
    let second = run_pipeline(b.path())?;
    ensure(!first.is_empty() && first == second, || "ranked_pairs.csv differs between runs".into())?;
    let rows = first.iter().filter(|&&c| c == b'\n').count() - 1;
    Ok(format!("{rows} ranked rows, {} bytes identical", first.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("mutual information oracle", mi_oracle),
        ("clustering oracle", clustering_oracle),
        ("merging fixpoint", merging_fixpoint),
        ("hungarian optimality", hungarian_optimality),
        ("planted dependency recovery", planted_recovery),
        ("parameter trends", parameter_trends),
        ("iqr strict inequality", iqr_exactness),
        ("end-to-end determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name} ({secs:.1} s): {detail}", i + 1),
            Err(why) => {
                println!("FAIL [{}] {name} ({secs:.1} s): {why}", i + 1);
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn shuffled_cluster_order_merges_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let clusters = random_clusters(&mut rng);
    let mut shuffled = clusters.clone();
    shuffled.shuffle(&mut rng);
    assert_eq!(merge_subgraphs(&clusters, 0.3).unwrap(), merge_subgraphs(&shuffled, 0.3).unwrap());
}
