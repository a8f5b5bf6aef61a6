use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use roadcongest::pipeline::{Manifest, Pipeline, PipelineConfig, Stage};
use roadcongest::road_graph::{load_graph, write_graph_csv};
use roadcongest::Error;

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/synthetic.toml")
}

fn small(out: &Path) -> PipelineConfig {
    PipelineConfig::load(
        Some(&bundled()),
        &[
            format!("paths.output_dir = {:?}", out.display().to_string()),
            "synth.n_days = 28".into(),
            "synth.auto_pairs = 2".into(),
            "eval.th_sim_sweep = [0.1, 0.4]".into(),
            "eval.d_u_max_sweep = [0, 1]".into(),
        ],
    )
    .unwrap()
}

/// Every artifact except manifests, keyed by file name.
fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn manifests(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    artifacts(&dir.join("manifests"))
}

#[test]
fn run_all_writes_top_k_rows_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(small(dir.path())).unwrap();
    let reports = p.run(Stage::All).unwrap();
    assert_eq!(reports.len(), 8);

    let ranked = fs::read_to_string(dir.path().join("ranked_pairs.csv")).unwrap();
    let mut lines = ranked.lines();
    assert_eq!(lines.next(), Some("rank,sg1_id,sg2_id,mi_bits,dist_m,score"));
    assert_eq!(lines.count(), p.config().top_k);
    let geo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ranked_pairs.geojson")).unwrap()).unwrap();
    assert_eq!(geo["features"].as_array().unwrap().len(), p.config().top_k);
    assert!(dir.path().join("summary.txt").is_file());
    assert!(!dir.path().join(roadcongest::pipeline::LOCK_FILE).exists());

    let first = manifests(dir.path());
    assert_eq!(first.len(), 8);
    // No stage writes another stage's artifacts.
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    for bytes in first.values() {
        let m: Manifest = serde_json::from_slice(bytes).unwrap();
        for out in m.outputs.keys() {
            assert!(owner.insert(out.clone(), m.stage.clone()).is_none(), "{out} written twice");
        }
    }
    let again = p.run(Stage::All).unwrap();
    assert_eq!(manifests(dir.path()), first);
    for (a, b) in reports.iter().zip(&again) {
        assert_eq!(a.manifest_sha256, b.manifest_sha256);
    }
}

#[test]
fn stages_run_one_by_one_equal_run_all() {
    let all = tempfile::tempdir().unwrap();
    Pipeline::new(small(all.path())).unwrap().run(Stage::All).unwrap();

    let steps = tempfile::tempdir().unwrap();
    let p = Pipeline::new(small(steps.path())).unwrap();
    for stage in Stage::ORDER {
        p.run(stage).unwrap();
    }
    let (a, b) = (artifacts(all.path()), artifacts(steps.path()));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (name, bytes) in &a {
        assert!(bytes == &b[name], "{name} differs");
    }
}

#[test]
fn missing_upstream_artifact_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(small(dir.path())).unwrap();
    match p.run(Stage::Merge) {
        Err(e @ Error::Prerequisite { stage: "synth", .. }) => assert_eq!(e.exit_code(), 3),
        other => panic!("expected a prerequisite error, got {other:?}"),
    }
    p.run(Stage::Synth).unwrap();
    match p.run(Stage::Merge) {
        Err(Error::Prerequisite { stage, artifact }) => {
            assert_eq!(stage, "cluster");
            assert!(artifact.ends_with("clusters.csv"));
        }
        other => panic!("expected a prerequisite error, got {other:?}"),
    }
}

#[test]
fn synthetic_graph_roundtrips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    Pipeline::new(small(dir.path())).unwrap().run(Stage::Synth).unwrap();
    let path = dir.path().join("graph.csv");
    let (g, stats) = load_graph(&path).unwrap();
    assert_eq!(stats.dropped_by_class, 0);
    let mut buf = Vec::new();
    write_graph_csv(&g, &mut buf).unwrap();
    assert_eq!(buf, fs::read(&path).unwrap());
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_roadcongest"))
        .args(args)
        .env("ROADCONGEST_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = format!("paths.output_dir={}", dir.path().display());
    let config = bundled();
    let config = config.to_str().unwrap();

    let printed = cli(&["print-config", "--config", config, "--override", "top_k=3"]);
    assert_eq!(printed.status.code(), Some(0));
    let text = String::from_utf8(printed.stdout).unwrap();
    let parsed: PipelineConfig = toml::from_str(&text).unwrap();
    assert_eq!(parsed.top_k, 3);

    let bad = cli(&["run", "detect", "--config", config, "--override", "th_sim=2", "--override", &out]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("th_sim"));

    let missing = cli(&["run", "merge", "--config", config, "--override", &out]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("`synth`"));

    assert_eq!(cli(&["run", "bogus"]).status.code(), Some(2));
}
