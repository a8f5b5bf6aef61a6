//! Stage orchestration over an output directory of flat artifacts.
//!
//! Every stage reads its inputs from files and writes its outputs through a
//! temporary file and a rename, so `all` is exactly the stages run one after
//! another. Each stage leaves `manifests/<stage>.json` with the config hash
//! and the sha256 of every input and output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts;
use crate::clustering::{by_timepoint, cluster_all};
use crate::dependencies::{build_occurrence, score_candidates};
use crate::error::{Error, Result};
use crate::eval::{cluster_stats, distribution_stats, precision_at_k, EvalReport, ParameterPoint};
use crate::geojson::{ranked_pairs_geojson, subgraphs_geojson};
use crate::merging::{merge_subgraphs, sweep_th_sim};
use crate::outliers::{compute_thresholds, detect_affected};
use crate::road_graph::{load_graph_with_junctions, write_graph_csv, TransportGraph};
use crate::synth::{generate_scenario, ScenarioSpec};
use crate::tracking::track_clusters;
use crate::traffic::{infer_grid, ingest_records};

pub const LOCK_FILE: &str = ".roadcongest.lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub output_dir: PathBuf,
    /// Graph and traffic inputs. When both are absent the pipeline runs on
    /// the synthetic scenario written by the `synth` stage.
    pub graph: Option<PathBuf>,
    pub junctions: Option<PathBuf>,
    pub traffic: Option<PathBuf>,
    /// Planted pairs for precision@k; defaults to the synthetic truth.
    pub truth: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            output_dir: PathBuf::from("out"),
            graph: None,
            junctions: None,
            traffic: None,
            truth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// precision@k is reported for `k = 1..=k_max`.
    pub k_max: usize,
    /// Ascending.
    pub th_sim_sweep: Vec<f64>,
    pub d_u_max_sweep: Vec<u32>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k_max: 20,
            th_sim_sweep: vec![0.0, 0.1, 0.2, 0.4, 0.6, 0.8],
            d_u_max_sweep: vec![0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seeds the synthetic scenario; overrides `synth.seed`.
    pub seed: u64,
    pub interval_minutes: u32,
    pub k_iqr: f64,
    pub min_samples: usize,
    pub d_u_max: u32,
    pub th_sim: f64,
    pub dist_min_m: f64,
    pub top_k: usize,
    pub paths: Paths,
    pub synth: ScenarioSpec,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            interval_minutes: 15,
            k_iqr: 1.5,
            min_samples: 4,
            d_u_max: 1,
            th_sim: 0.1,
            dist_min_m: 500.0,
            top_k: 10,
            paths: Paths::default(),
            synth: ScenarioSpec::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn set_dotted(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_owned(), value);
    Ok(())
}

/// TOML literal if it parses as one, otherwise a plain string.
fn override_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()))
}

impl PipelineConfig {
    /// Reads `path` (or starts from defaults), applies `key=value`
    /// overrides with dotted keys and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => fs::read_to_string(p)
                .map_err(|e| Error::io(p, e))?
                .parse::<toml::Table>()
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            set_dotted(&mut table, k.trim(), override_value(v.trim()))?;
        }
        let cfg: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_owned()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        if self.interval_minutes == 0 || 1440 % self.interval_minutes != 0 {
            bad.push(format!("interval_minutes = {} must divide a day", self.interval_minutes));
        }
        if !(self.k_iqr >= 0.0 && self.k_iqr.is_finite()) {
            bad.push(format!("k_iqr = {} must be non-negative", self.k_iqr));
        }
        if self.min_samples == 0 {
            bad.push("min_samples must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.th_sim) {
            bad.push(format!("th_sim = {} must lie in [0, 1]", self.th_sim));
        }
        if !(self.dist_min_m >= 0.0 && self.dist_min_m.is_finite()) {
            bad.push(format!("dist_min_m = {} must be non-negative", self.dist_min_m));
        }
        if self.top_k == 0 {
            bad.push("top_k must be at least 1".into());
        }
        if self.paths.graph.is_some() != self.paths.traffic.is_some() {
            bad.push("paths.graph and paths.traffic must be given together".into());
        }
        if self.eval.k_max == 0 {
            bad.push("eval.k_max must be at least 1".into());
        }
        let sweep = &self.eval.th_sim_sweep;
        if sweep.iter().any(|t| !(0.0..=1.0).contains(t)) || !sweep.windows(2).all(|w| w[0] < w[1]) {
            bad.push("eval.th_sim_sweep must be strictly ascending within [0, 1]".into());
        }
        if let Err(e) = self.synth.validate() {
            bad.push(format!("synth: {e}"));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad.join("; ")))
        }
    }

    pub fn synthetic(&self) -> bool {
        self.paths.graph.is_none()
    }

    /// Hex sha256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Synth,
    Ingest,
    Detect,
    Cluster,
    Merge,
    Discover,
    Track,
    Eval,
    All,
}

impl Stage {
    pub const ORDER: [Stage; 8] = [
        Stage::Synth,
        Stage::Ingest,
        Stage::Detect,
        Stage::Cluster,
        Stage::Merge,
        Stage::Discover,
        Stage::Track,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Detect => "detect",
            Stage::Cluster => "cluster",
            Stage::Merge => "merge",
            Stage::Discover => "discover",
            Stage::Track => "track",
            Stage::Eval => "eval",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ORDER
            .into_iter()
            .chain([Stage::All])
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageReport {
    pub stage: Stage,
    pub manifest: PathBuf,
    /// sha256 of the manifest file.
    pub manifest_sha256: String,
    pub outputs: Vec<PathBuf>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Writes through `<dir>/.<name>.tmp` and renames into place.
pub fn write_atomic(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.tmp"));
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    let written = f(&mut w).and_then(|()| {
        let file = w.into_inner().map_err(|e| Error::io(&tmp, e.into_error()))?;
        file.sync_all().map_err(|e| Error::io(&tmp, e))
    });
    if let Err(e) = written {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(RunLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Runtime(format!(
                "{} is held by another run; delete it if no run is active",
                path.display()
            ))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Bookkeeping of one stage execution.
struct StageRun<'a> {
    out: &'a Path,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    written: Vec<PathBuf>,
}

impl<'a> StageRun<'a> {
    fn new(out: &'a Path) -> Self {
        StageRun {
            out,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            written: Vec::new(),
        }
    }

    fn key(&self, path: &Path) -> String {
        path.strip_prefix(self.out)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned()
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.insert(self.key(path), digest);
        Ok(())
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.out.join(name);
        write_atomic(&path, f)?;
        self.outputs.insert(name.to_owned(), sha256_file(&path)?);
        self.written.push(path);
        Ok(())
    }

    fn finish(self, stage: Stage, config_sha256: String) -> Result<StageReport> {
        let manifest = Manifest {
            stage: stage.name().to_owned(),
            config_sha256,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let dir = self.out.join("manifests");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join(format!("{}.json", stage.name()));
        write_atomic(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest)?;
            writeln!(w).map_err(|e| Error::io("<manifest>", e))
        })?;
        Ok(StageReport {
            stage,
            manifest_sha256: sha256_file(&path)?,
            manifest: path,
            outputs: self.written,
        })
    }
}

pub struct Pipeline {
    cfg: PipelineConfig,
    out: PathBuf,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let out = cfg.paths.output_dir.clone();
        Ok(Pipeline { cfg, out })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    /// Runs one stage, or every stage in order for [`Stage::All`] (the
    /// `synth` stage only when no real inputs are configured).
    pub fn run(&self, stage: Stage) -> Result<Vec<StageReport>> {
        let _lock = RunLock::acquire(&self.out)?;
        let stages: Vec<Stage> = match stage {
            Stage::All => Stage::ORDER
                .into_iter()
                .filter(|s| *s != Stage::Synth || self.cfg.synthetic())
                .collect(),
            s => vec![s],
        };
        stages.into_iter().map(|s| self.run_one(s)).collect()
    }

    fn run_one(&self, stage: Stage) -> Result<StageReport> {
        info!("stage {stage}");
        let mut run = StageRun::new(&self.out);
        match stage {
            Stage::Synth => self.synth(&mut run)?,
            Stage::Ingest => self.ingest(&mut run)?,
            Stage::Detect => self.detect(&mut run)?,
            Stage::Cluster => self.cluster(&mut run)?,
            Stage::Merge => self.merge(&mut run)?,
            Stage::Discover => self.discover(&mut run)?,
            Stage::Track => self.track(&mut run)?,
            Stage::Eval => self.eval(&mut run)?,
            Stage::All => unreachable!("expanded by run"),
        }
        run.finish(stage, self.cfg.digest())
    }

    /// Artifact `name` of `stage`, or a prerequisite error naming the stage.
    fn need(&self, name: &str, stage: Stage) -> Result<PathBuf> {
        let path = self.out.join(name);
        if path.is_file() {
            Ok(path)
        } else {
            Err(Error::Prerequisite { stage: stage.name(), artifact: path })
        }
    }

    fn graph_path(&self) -> Result<PathBuf> {
        match &self.cfg.paths.graph {
            Some(p) => Ok(p.clone()),
            None => self.need("graph.csv", Stage::Synth),
        }
    }

    fn traffic_path(&self) -> Result<PathBuf> {
        match &self.cfg.paths.traffic {
            Some(p) => Ok(p.clone()),
            None => self.need("traffic.csv", Stage::Synth),
        }
    }

    fn truth_path(&self) -> Option<PathBuf> {
        match &self.cfg.paths.truth {
            Some(p) => Some(p.clone()),
            None if self.cfg.synthetic() => Some(self.out.join("truth.csv")).filter(|p| p.is_file()),
            None => None,
        }
    }

    fn graph(&self, run: &mut StageRun) -> Result<TransportGraph> {
        let path = self.graph_path()?;
        run.input(&path)?;
        if let Some(j) = &self.cfg.paths.junctions {
            run.input(j)?;
        }
        let (g, stats) = load_graph_with_junctions(&path, self.cfg.paths.junctions.as_deref())?;
        if stats.dropped_by_class > 0 {
            info!("graph: {} units kept, {} dropped by road class", g.unit_count(), stats.dropped_by_class);
        }
        Ok(g)
    }

    fn grid(&self, run: &mut StageRun) -> Result<crate::traffic::TimeGrid> {
        let path = self.need("grid.json", Stage::Ingest)?;
        run.input(&path)?;
        artifacts::read_grid(&path)
    }

    fn synth(&self, run: &mut StageRun) -> Result<()> {
        let spec = ScenarioSpec { seed: self.cfg.seed, ..self.cfg.synth.clone() };
        let sc = generate_scenario(&spec)?;
        info!(
            "synthetic scenario: {} units, {} time points, {} planted pairs",
            sc.graph.unit_count(),
            sc.grid.count,
            sc.planted.len()
        );
        run.write("graph.csv", |w| write_graph_csv(&sc.graph, w))?;
        run.write("traffic.csv", |w| sc.write_traffic(w).map_err(|e| Error::io("traffic.csv", e)))?;
        run.write("truth.csv", |w| artifacts::write_truth(&sc.truth_rows(), w))
    }

    fn ingest(&self, run: &mut StageRun) -> Result<()> {
        let g = self.graph(run)?;
        let traffic = self.traffic_path()?;
        run.input(&traffic)?;
        let grid = infer_grid(&traffic, self.cfg.interval_minutes)?
            .ok_or_else(|| Error::Validation(format!("{} has no records", traffic.display())))?;
        let (m, stats) = ingest_records(&traffic, &g, grid)?;
        info!(
            "ingested {} records onto {} time points, {} cells present",
            stats.records,
            grid.count,
            m.present_count()
        );
        run.write("grid.json", |w| artifacts::write_grid(&grid, w))?;
        run.write("loads.csv", |w| artifacts::write_loads(&g, &m, w))
    }

    fn detect(&self, run: &mut StageRun) -> Result<()> {
        let g = self.graph(run)?;
        let grid = self.grid(run)?;
        let loads = self.need("loads.csv", Stage::Ingest)?;
        run.input(&loads)?;
        let m = artifacts::read_loads(&loads, &g, grid)?;
        let th = compute_thresholds(&m, self.cfg.k_iqr, self.cfg.min_samples)?;
        if th.untestable_count() > 0 {
            warn!("{} unit buckets have fewer than {} samples", th.untestable_count(), self.cfg.min_samples);
        }
        let affected = detect_affected(&m, &th)?;
        info!("affected cells: {}", affected.iter().map(|a| a.len()).sum::<usize>());
        run.write("thresholds.csv", |w| artifacts::write_thresholds(&g, &th, w))?;
        run.write("affected.csv", |w| artifacts::write_affected(&g, &affected, w))
    }

    fn affected(&self, run: &mut StageRun, g: &TransportGraph, n: usize) -> Result<Vec<crate::outliers::AffectedSet>> {
        let path = self.need("affected.csv", Stage::Detect)?;
        run.input(&path)?;
        artifacts::read_affected(&path, g, n)
    }

    fn clusters(&self, run: &mut StageRun, g: &TransportGraph) -> Result<Vec<crate::clustering::Cluster>> {
        let path = self.need("clusters.csv", Stage::Cluster)?;
        run.input(&path)?;
        artifacts::read_clusters(&path, g)
    }

    fn subgraphs(&self, run: &mut StageRun, g: &TransportGraph) -> Result<Vec<crate::merging::Subgraph>> {
        let path = self.need("subgraphs.csv", Stage::Merge)?;
        let sources = self.need("subgraph_sources.csv", Stage::Merge)?;
        run.input(&path)?;
        run.input(&sources)?;
        artifacts::read_subgraphs(&path, Some(&sources), g)
    }

    fn cluster(&self, run: &mut StageRun) -> Result<()> {
        let g = self.graph(run)?;
        let grid = self.grid(run)?;
        let affected = self.affected(run, &g, grid.count)?;
        let clusters = cluster_all(&g, &affected, self.cfg.d_u_max)?;
        info!("{} clusters", clusters.len());
        run.write("clusters.csv", |w| artifacts::write_clusters(&g, &clusters, w))
    }

    fn merge(&self, run: &mut StageRun) -> Result<()> {
        let g = self.graph(run)?;
        let clusters = self.clusters(run, &g)?;
        let sgs = merge_subgraphs(&clusters, self.cfg.th_sim)?;
        info!("{} clusters merged into {} subgraphs", clusters.len(), sgs.len());
        run.write("subgraphs.csv", |w| artifacts::write_subgraphs(&g, &sgs, w))?;
        run.write("subgraph_sources.csv", |w| artifacts::write_subgraph_sources(&sgs, w))?;
        let geo = subgraphs_geojson(&g, &sgs)?;
        run.write("subgraphs.geojson", |w| Ok(serde_json::to_writer(w, &geo)?))
    }

    fn discover(&self, run: &mut StageRun) -> Result<()> {
        let g = self.graph(run)?;
        let grid = self.grid(run)?;
        let affected = self.affected(run, &g, grid.count)?;
        let sgs = self.subgraphs(run, &g)?;
        let occ = build_occurrence(&sgs, &affected)?;
        let scored = score_candidates(&sgs, &occ.matrix, &g, self.cfg.dist_min_m)?;
        let top = &scored[..self.cfg.top_k.min(scored.len())];
        if top.len() < self.cfg.top_k {
            warn!("only {} candidate pairs for top_k = {}", scored.len(), self.cfg.top_k);
        }
        info!("{} candidate pairs scored", scored.len());
        run.write("scored_pairs.csv", |w| artifacts::write_ranked(&scored, w))?;
        run.write("ranked_pairs.csv", |w| artifacts::write_ranked(top, w))?;
        let geo = ranked_pairs_geojson(&g, &sgs, top)?;
        run.write("ranked_pairs.geojson", |w| Ok(serde_json::to_writer(w, &geo)?))
    }

    fn track(&self, run: &mut StageRun) -> Result<()> {
        let g = self.graph(run)?;
        let grid = self.grid(run)?;
        let clusters = self.clusters(run, &g)?;
        let tracks = track_clusters(&by_timepoint(&clusters, grid.count)?)?;
        info!("{} tracks", tracks.len());
        run.write("tracks.csv", |w| artifacts::write_tracks(&tracks, w))?;
        run.write("track_members.csv", |w| artifacts::write_track_members(&tracks, w))
    }

    fn eval(&self, run: &mut StageRun) -> Result<()> {
        let g = self.graph(run)?;
        let grid = self.grid(run)?;
        let affected = self.affected(run, &g, grid.count)?;
        let clusters = self.clusters(run, &g)?;
        let sgs = self.subgraphs(run, &g)?;
        let scored_path = self.need("scored_pairs.csv", Stage::Discover)?;
        run.input(&scored_path)?;
        let scored = artifacts::read_ranked(&scored_path)?;
        let members = self.need("track_members.csv", Stage::Track)?;
        run.input(&members)?;
        let tracks = artifacts::read_tracks(&members)?;

        let mut report = EvalReport::default();
        match self.truth_path() {
            Some(tp) => {
                run.input(&tp)?;
                let truth = artifacts::read_truth(&tp, &g)?;
                for k in 1..=self.cfg.eval.k_max {
                    report.precision.push((k, precision_at_k(&scored, &sgs, &truth, k)?));
                }
            }
            None => warn!("no ground truth configured; skipping precision@k"),
        }
        report.stats = Some(distribution_stats(&affected, &clusters, &tracks));
        for p in sweep_th_sim(&clusters, &self.cfg.eval.th_sim_sweep)? {
            report.parameters.push(ParameterPoint {
                parameter: "th_sim",
                value: p.th_sim,
                count: p.count,
                mean_size: p.mean_size,
                max_size: p.max_size,
            });
        }
        for &d in &self.cfg.eval.d_u_max_sweep {
            let st = cluster_stats(&cluster_all(&g, &affected, d)?);
            report.parameters.push(ParameterPoint {
                parameter: "d_u_max",
                value: d as f64,
                count: st.count,
                mean_size: st.mean_size,
                max_size: st.max_size,
            });
        }
        let text = |s: String| move |w: &mut BufWriter<File>| w.write_all(s.as_bytes()).map_err(|e| Error::io("<eval>", e));
        run.write("precision.csv", text(report.precision_csv()))?;
        run.write("affected_counts.csv", text(report.affected_csv()))?;
        run.write("parameters.csv", text(report.parameters_csv()))?;
        run.write("track_bins.csv", text(report.track_bins_csv()))?;
        let summary = report.summary_text();
        info!("evaluation summary\n{summary}");
        run.write("summary.txt", text(summary))
    }
}
