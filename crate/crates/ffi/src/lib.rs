//! C interface to the roadcongest pipeline.
//!
//! Every fallible function returns an [`RcStatus`]. On failure the message is
//! kept per thread and can be read with [`rc_last_error_message`]. Handles are
//! opaque and must be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use roadcongest::artifacts::read_ranked;
use roadcongest::dependencies::{mutual_information, DependencyPair};
use roadcongest::pipeline::{Pipeline, PipelineConfig, Stage};
use roadcongest::road_graph::{load_graph, TransportGraph};
use roadcongest::traffic::unit_load;
use roadcongest::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Prerequisite = 4,
    Io = 5,
    Runtime = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// One ranked dependency between two persistent subgraphs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcPair {
    pub sg1_id: u32,
    pub sg2_id: u32,
    pub mi_bits: f64,
    pub dist_m: f64,
    pub score: f64,
}

/// Road graph loaded from a unit CSV.
pub struct RcGraph(TransportGraph);

/// Configured pipeline bound to an output directory.
pub struct RcPipeline(Pipeline);

/// Ranked dependency pairs read back from a discover run.
pub struct RcDiscovery(Vec<RcPair>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(RcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Prerequisite { .. } => RcStatus::Prerequisite,
            Error::Io { .. } => RcStatus::Io,
            _ if e.exit_code() == 2 => RcStatus::Validation,
            _ => RcStatus::Runtime,
        };
        Fail(status, e.to_string())
    }
}

fn fail(status: RcStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RcStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(RcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RcStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(RcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| fail(RcStatus::NullPointer, format!("{what} is null")))
}

/// Message for the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Load of a unit with speed limit `limit_kmh` observed at `speed_kmh`, in [0, 1].
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn rc_unit_load(limit_kmh: f64, speed_kmh: f64, out: *mut f64) -> RcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = unit_load(limit_kmh, speed_kmh)?;
        Ok(())
    })
}

/// Mutual information in bits between two binary series of length `len`.
/// Any non-zero byte counts as true.
///
/// # Safety
/// `x` and `y` must each point to `len` readable bytes; `out` to one `double`.
#[no_mangle]
pub unsafe extern "C" fn rc_mutual_information(
    x: *const u8,
    y: *const u8,
    len: usize,
    out: *mut f64,
) -> RcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if len > 0 && (x.is_null() || y.is_null()) {
            return Err(fail(RcStatus::NullPointer, "series pointer is null"));
        }
        let read = |p: *const u8| -> Vec<bool> {
            if len == 0 {
                Vec::new()
            } else {
                std::slice::from_raw_parts(p, len).iter().map(|&b| b != 0).collect()
            }
        };
        *out = mutual_information(&read(x), &read(y))?;
        Ok(())
    })
}

/// Load a road graph from a unit CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_graph_load(path: *const c_char, out: *mut *mut RcGraph) -> RcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let (g, _) = load_graph(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(RcGraph(g)));
        Ok(())
    })
}

/// Number of units in the graph.
///
/// # Safety
/// `graph` must come from [`rc_graph_load`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_graph_unit_count(graph: *const RcGraph, out: *mut usize) -> RcStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(graph, "graph")?.0.unit_count();
        Ok(())
    })
}

/// Release a graph. Null is ignored.
///
/// # Safety
/// `graph` must come from [`rc_graph_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rc_graph_free(graph: *mut RcGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Build a pipeline from an optional TOML file and `n_overrides` dotted
/// `key=value` overrides. `config_path` may be null to start from defaults.
///
/// # Safety
/// Non-null strings must be NUL-terminated; `overrides` must hold
/// `n_overrides` string pointers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_pipeline_new(
    config_path: *const c_char,
    overrides: *const *const c_char,
    n_overrides: usize,
    out: *mut *mut RcPipeline,
) -> RcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = if config_path.is_null() {
            None
        } else {
            Some(PathBuf::from(str_arg(config_path, "config_path")?))
        };
        let mut ov = Vec::with_capacity(n_overrides);
        if n_overrides > 0 {
            if overrides.is_null() {
                return Err(fail(RcStatus::NullPointer, "overrides is null"));
            }
            for &p in std::slice::from_raw_parts(overrides, n_overrides) {
                ov.push(str_arg(p, "override")?.to_owned());
            }
        }
        let cfg = PipelineConfig::load(path.as_deref(), &ov)?;
        *out = Box::into_raw(Box::new(RcPipeline(Pipeline::new(cfg)?)));
        Ok(())
    })
}

/// Run one stage by name (`synth`, `ingest`, ..., `eval` or `all`).
///
/// # Safety
/// `pipeline` must come from [`rc_pipeline_new`]; `stage` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rc_pipeline_run(pipeline: *const RcPipeline, stage: *const c_char) -> RcStatus {
    guard(|| {
        let p = handle(pipeline, "pipeline")?;
        let stage: Stage = str_arg(stage, "stage")?.parse()?;
        p.0.run(stage)?;
        Ok(())
    })
}

/// Read the ranked pairs produced by the discover stage.
///
/// # Safety
/// `pipeline` must come from [`rc_pipeline_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_pipeline_discovery(
    pipeline: *const RcPipeline,
    out: *mut *mut RcDiscovery,
) -> RcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let p = handle(pipeline, "pipeline")?;
        let path = p.0.output_dir().join("ranked_pairs.csv");
        if !path.is_file() {
            return Err(Error::Prerequisite { stage: "discover", artifact: path }.into());
        }
        let pairs = read_ranked(&path)?.iter().map(to_pair).collect();
        *out = Box::into_raw(Box::new(RcDiscovery(pairs)));
        Ok(())
    })
}

fn to_pair(p: &DependencyPair) -> RcPair {
    RcPair {
        sg1_id: p.sg1.0,
        sg2_id: p.sg2.0,
        mi_bits: p.mi,
        dist_m: p.dist_m,
        score: p.score,
    }
}

/// Release a pipeline. Null is ignored.
///
/// # Safety
/// `pipeline` must come from [`rc_pipeline_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rc_pipeline_free(pipeline: *mut RcPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

/// Number of ranked pairs.
///
/// # Safety
/// `d` must come from [`rc_pipeline_discovery`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_discovery_len(d: *const RcDiscovery, out: *mut usize) -> RcStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(d, "discovery")?.0.len();
        Ok(())
    })
}

/// Pair at zero-based `rank`, best first.
///
/// # Safety
/// `d` must come from [`rc_pipeline_discovery`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_discovery_get(d: *const RcDiscovery, rank: usize, out: *mut RcPair) -> RcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let pairs = &handle(d, "discovery")?.0;
        *out = *pairs
            .get(rank)
            .ok_or_else(|| fail(RcStatus::OutOfRange, format!("rank {rank} >= {}", pairs.len())))?;
        Ok(())
    })
}

/// Release discovery results. Null is ignored.
///
/// # Safety
/// `d` must come from [`rc_pipeline_discovery`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rc_discovery_free(d: *mut RcDiscovery) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}
