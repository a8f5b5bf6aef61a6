use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use roadcongest_ffi::*;

fn last_error() -> String {
    let p = rc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn bundled() -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/configs/synthetic.toml");
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn unit_load_clamps_and_reports_domain_errors() {
    let mut v = f64::NAN;
    unsafe {
        assert_eq!(rc_unit_load(50.0, 25.0, &mut v), RcStatus::Ok);
        assert_eq!(v, 0.5);
        assert!(rc_last_error_message().is_null());
        assert_eq!(rc_unit_load(50.0, 80.0, &mut v), RcStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(rc_unit_load(0.0, 10.0, &mut v), RcStatus::Validation);
        assert!(!last_error().is_empty());
        assert_eq!(rc_unit_load(50.0, 10.0, ptr::null_mut()), RcStatus::NullPointer);
    }
}

#[test]
fn mutual_information_of_identical_balanced_series_is_one_bit() {
    let x = [1u8, 0, 1, 0, 1, 0, 1, 0];
    let y = [0u8, 0, 0, 0, 1, 1, 1, 1];
    let mut mi = f64::NAN;
    unsafe {
        assert_eq!(rc_mutual_information(x.as_ptr(), x.as_ptr(), x.len(), &mut mi), RcStatus::Ok);
        assert!((mi - 1.0).abs() < 1e-12);
        assert_eq!(rc_mutual_information(x.as_ptr(), y.as_ptr(), x.len(), &mut mi), RcStatus::Ok);
        assert!(mi.abs() < 1e-12);
        assert_eq!(rc_mutual_information(ptr::null(), y.as_ptr(), 8, &mut mi), RcStatus::NullPointer);
    }
}

#[test]
fn graph_load_failure_leaves_null_handle() {
    let missing = CString::new("/nonexistent/graph.csv").unwrap();
    let mut g: *mut RcGraph = ptr::dangling_mut();
    unsafe {
        assert_eq!(rc_graph_load(missing.as_ptr(), &mut g), RcStatus::Io);
        assert!(g.is_null());
        assert!(last_error().contains("graph.csv"));
        rc_graph_free(ptr::null_mut());
        let mut n = 0usize;
        assert_eq!(rc_graph_unit_count(ptr::null(), &mut n), RcStatus::NullPointer);
    }
}

#[test]
fn pipeline_round_trip_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let config = bundled();
    let ov: Vec<CString> = [
        format!("paths.output_dir={}", dir.path().display()),
        "synth.n_days=28".into(),
        "synth.auto_pairs=2".into(),
        "top_k=4".into(),
    ]
    .into_iter()
    .map(|s| CString::new(s).unwrap())
    .collect();
    let ptrs: Vec<_> = ov.iter().map(|s| s.as_ptr()).collect();

    unsafe {
        let mut p: *mut RcPipeline = ptr::null_mut();
        assert_eq!(rc_pipeline_new(config.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut p), RcStatus::Ok);

        let mut d: *mut RcDiscovery = ptr::null_mut();
        assert_eq!(rc_pipeline_discovery(p, &mut d), RcStatus::Prerequisite);
        let merge = CString::new("merge").unwrap();
        assert_eq!(rc_pipeline_run(p, merge.as_ptr()), RcStatus::Prerequisite);
        assert!(last_error().contains("synth"));
        let bogus = CString::new("bogus").unwrap();
        assert_eq!(rc_pipeline_run(p, bogus.as_ptr()), RcStatus::Validation);

        for stage in ["synth", "ingest", "detect", "cluster", "merge", "discover"] {
            let s = CString::new(stage).unwrap();
            assert_eq!(rc_pipeline_run(p, s.as_ptr()), RcStatus::Ok, "{stage}: {}", last_error());
        }

        let graph_path = CString::new(dir.path().join("graph.csv").to_str().unwrap()).unwrap();
        let mut g: *mut RcGraph = ptr::null_mut();
        assert_eq!(rc_graph_load(graph_path.as_ptr(), &mut g), RcStatus::Ok);
        let mut n = 0usize;
        assert_eq!(rc_graph_unit_count(g, &mut n), RcStatus::Ok);
        assert!(n > 0);
        rc_graph_free(g);

        assert_eq!(rc_pipeline_discovery(p, &mut d), RcStatus::Ok);
        let mut len = 0usize;
        assert_eq!(rc_discovery_len(d, &mut len), RcStatus::Ok);
        assert_eq!(len, 4);
        let mut prev = f64::INFINITY;
        for i in 0..len {
            let mut pair = std::mem::zeroed::<RcPair>();
            assert_eq!(rc_discovery_get(d, i, &mut pair), RcStatus::Ok);
            assert!(pair.sg1_id < pair.sg2_id);
            assert!(pair.score <= prev);
            prev = pair.score;
        }
        let mut pair = std::mem::zeroed::<RcPair>();
        assert_eq!(rc_discovery_get(d, len, &mut pair), RcStatus::OutOfRange);
        rc_discovery_free(d);
        rc_pipeline_free(p);
    }
}

#[test]
fn invalid_override_is_a_validation_error() {
    let bad = CString::new("th_sim=2").unwrap();
    let ptrs = [bad.as_ptr()];
    let mut p: *mut RcPipeline = ptr::null_mut();
    unsafe {
        assert_eq!(rc_pipeline_new(ptr::null(), ptrs.as_ptr(), 1, &mut p), RcStatus::Validation);
    }
    assert!(p.is_null());
    assert!(last_error().contains("th_sim"));
}

#[test]
fn header_declares_the_api_and_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(include.join("roadcongest.h")).unwrap();
    for sym in [
        "rc_last_error_message",
        "rc_unit_load",
        "rc_mutual_information",
        "rc_graph_load",
        "rc_graph_unit_count",
        "rc_graph_free",
        "rc_pipeline_new",
        "rc_pipeline_run",
        "rc_pipeline_discovery",
        "rc_pipeline_free",
        "rc_discovery_len",
        "rc_discovery_get",
        "rc_discovery_free",
        "RC_STATUS_PREREQUISITE",
    ] {
        assert!(header.contains(sym), "{sym} missing from header");
    }

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        "#include \"roadcongest.h\"\nint main(void) { double v; return rc_unit_load(50, 25, &v) == RC_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    match Command::new("cc").arg("-fsyntax-only").arg("-I").arg(&include).arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler found; skipped syntax check"),
    }
}
