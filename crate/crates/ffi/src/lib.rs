//! C interface to `trackgnn`.
//!
//! Every function returns a [`TgStatus`]. On failure the message is kept per
//! thread and can be read with [`tg_last_error_message`]. Handles are
//! opaque; free them with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trackgnn::alloc::{allocate_by_type, allocation_for, Variant, Workload};
use trackgnn::dfsim::{
    calibrated_cost_model, check_requirement, simulate, CostModel, DfsimError, SimConfig,
};
use trackgnn::geom::{self, GeomError};
use trackgnn::inet::{self, InetError, InferConfig, Mode, ModelShape};
use trackgnn::io::{self, IoError};
use trackgnn::synth::{self, Profile};
use trackgnn::{HitGraph, ModelParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    InvalidGraph = 4,
    IoError = 5,
    SimulationError = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgVariant {
    Mpa = 0,
    Geo = 1,
    GeoRsrc = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgMode {
    Real = 0,
    Fixed = 1,
}

/// Timing of one simulated configuration.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TgSimSummary {
    pub latency_cycles: u64,
    pub interval_cycles: u64,
    pub latency_us: f64,
    pub interval_us: f64,
    pub throughput_mgps: f64,
    /// 1 if throughput exceeds the trigger requirement.
    pub meets_requirement: i32,
}

/// Opaque hit graph.
pub struct TgGraph(HitGraph);

/// Opaque model parameters.
pub struct TgParams(ModelParams);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap());
}

struct Fail(TgStatus, String);

impl Fail {
    fn new(status: TgStatus, msg: impl Into<String>) -> Self {
        Fail(status, msg.into())
    }
}

fn geom_status(e: &GeomError) -> TgStatus {
    match e {
        GeomError::Invalid(_) => TgStatus::InvalidGraph,
        _ => TgStatus::InvalidArgument,
    }
}

impl From<IoError> for Fail {
    fn from(e: IoError) -> Self {
        let s = match e {
            IoError::File { .. } => TgStatus::IoError,
            _ => TgStatus::ParseError,
        };
        Fail(s, e.to_string())
    }
}

impl From<InetError> for Fail {
    fn from(e: InetError) -> Self {
        let s = match &e {
            InetError::Geom(g) => geom_status(g),
            _ => TgStatus::InvalidArgument,
        };
        Fail(s, e.to_string())
    }
}

impl From<GeomError> for Fail {
    fn from(e: GeomError) -> Self {
        Fail(geom_status(&e), e.to_string())
    }
}

impl From<DfsimError> for Fail {
    fn from(e: DfsimError) -> Self {
        Fail(TgStatus::SimulationError, e.to_string())
    }
}

/// Runs `f`, records its error and turns panics into [`TgStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TgStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            TgStatus::Panic
        }
    }
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(Fail::new(TgStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Fail::new(TgStatus::InvalidArgument, "path is not UTF-8"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail::new(TgStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::new(TgStatus::NullPointer, "output pointer is null"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

fn variant(v: TgVariant) -> Variant {
    match v {
        TgVariant::Mpa => Variant::Mpa,
        TgVariant::Geo => Variant::Geo,
        TgVariant::GeoRsrc => Variant::GeoRsrc,
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn tg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `file` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_graph_load(file: *const c_char, out: *mut *mut TgGraph) -> TgStatus {
    guard(|| {
        let g = io::load_graph(path(file)?)?;
        put(out, TgGraph(g))
    })
}

/// # Safety
/// `graph` must come from this library; `file` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tg_graph_save(graph: *const TgGraph, file: *const c_char) -> TgStatus {
    guard(|| {
        let g = get(graph, "graph")?;
        Ok(io::save_graph(&g.0, path(file)?)?)
    })
}

/// Synthetic graph. `n_nodes == 0` selects the nominal 739-node profile;
/// otherwise a random profile with about 1.7 edges per node.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_graph_generate(
    seed: u64,
    n_nodes: usize,
    out: *mut *mut TgGraph,
) -> TgStatus {
    guard(|| {
        let profile = if n_nodes == 0 {
            Profile::default()
        } else {
            Profile::random(n_nodes, 1.7, &mut ChaCha8Rng::seed_from_u64(seed))
        };
        let g = synth::generate(seed, &profile)
            .map_err(|e| Fail::new(TgStatus::InvalidArgument, e.to_string()))?;
        put(out, TgGraph(g))
    })
}

/// # Safety
/// `graph` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tg_graph_free(graph: *mut TgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must come from this library or be null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn tg_graph_num_nodes(graph: *const TgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n_nodes())
}

/// # Safety
/// `graph` must come from this library or be null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn tg_graph_num_edges(graph: *const TgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n_edges())
}

/// Stores the number of diagnostics in `n_diagnostics`. Returns
/// `INVALID_GRAPH` with the report as the error message if there are any.
///
/// # Safety
/// `graph` must come from this library; `n_diagnostics` may be null.
#[no_mangle]
pub unsafe extern "C" fn tg_graph_validate(
    graph: *const TgGraph,
    n_diagnostics: *mut usize,
) -> TgStatus {
    guard(|| {
        let report = geom::validate(&get(graph, "graph")?.0);
        if let Some(n) = n_diagnostics.as_mut() {
            *n = report.len();
        }
        if report.is_empty() {
            Ok(())
        } else {
            Err(Fail::new(TgStatus::InvalidGraph, report.to_string()))
        }
    })
}

/// Random weights for the default model shape.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_params_random(seed: u64, out: *mut *mut TgParams) -> TgStatus {
    guard(|| {
        let p = ModelParams::random(&ModelShape::default(), &mut ChaCha8Rng::seed_from_u64(seed));
        put(out, TgParams(p))
    })
}

/// # Safety
/// `file` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_params_load(file: *const c_char, out: *mut *mut TgParams) -> TgStatus {
    guard(|| {
        let p = io::load_weights(path(file)?)?;
        put(out, TgParams(p))
    })
}

/// # Safety
/// `params` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn tg_params_free(params: *mut TgParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn infer_impl(
    graph: *const TgGraph,
    params: *const TgParams,
    mode: TgMode,
    iterations: u32,
    partitioned: bool,
    scores: *mut f64,
    len: usize,
) -> Result<(), Fail> {
    let g = &get(graph, "graph")?.0;
    let p = &get(params, "params")?.0;
    if scores.is_null() && g.n_edges() > 0 {
        return Err(Fail::new(TgStatus::NullPointer, "score buffer is null"));
    }
    if len < g.n_edges() {
        return Err(Fail::new(
            TgStatus::BufferTooSmall,
            format!("score buffer holds {len}, graph has {} edges", g.n_edges()),
        ));
    }
    let cfg = InferConfig {
        shape: ModelShape {
            d_node: p.d_node(),
            d_edge: p.d_edge(),
            ..ModelShape::default()
        },
        iterations: iterations as usize,
        mode: match mode {
            TgMode::Real => Mode::Real,
            TgMode::Fixed => Mode::Fixed,
        },
    };
    let s = if partitioned {
        inet::run_partitioned(&geom::partition(g)?, p, &cfg)?
    } else {
        inet::run(g, p, &cfg)?
    };
    for (i, v) in s.to_f64().into_iter().enumerate() {
        *scores.add(i) = v;
    }
    Ok(())
}

/// Edge scores written to `scores[0..n_edges]`. Fixed-mode scores are exact
/// Q7.7 values.
///
/// # Safety
/// Handles must come from this library; `scores` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tg_infer(
    graph: *const TgGraph,
    params: *const TgParams,
    mode: TgMode,
    iterations: u32,
    scores: *mut f64,
    len: usize,
) -> TgStatus {
    guard(|| infer_impl(graph, params, mode, iterations, false, scores, len))
}

/// Like [`tg_infer`], group by group on the partitioned graph.
///
/// # Safety
/// As for [`tg_infer`].
#[no_mangle]
pub unsafe extern "C" fn tg_infer_partitioned(
    graph: *const TgGraph,
    params: *const TgParams,
    mode: TgMode,
    iterations: u32,
    scores: *mut f64,
    len: usize,
) -> TgStatus {
    guard(|| infer_impl(graph, params, mode, iterations, true, scores, len))
}

/// Simulates a variant on the nominal workload, or on `graph` if not null.
/// `pes == 0` picks 8 for MPA and 1 otherwise. `calibrated == 0` uses the
/// stock cost model.
///
/// # Safety
/// `graph` must be null or come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tg_simulate(
    v: TgVariant,
    graph: *const TgGraph,
    pes: u32,
    clock_mhz: f64,
    calibrated: i32,
    out: *mut TgSimSummary,
) -> TgStatus {
    guard(|| {
        let out = out
            .as_mut()
            .ok_or_else(|| Fail::new(TgStatus::NullPointer, "summary pointer is null"))?;
        let v = variant(v);
        let w = match graph.as_ref() {
            Some(g) => Workload::from_graph(&g.0, v)?,
            None => Workload::nominal(v),
        };
        let pes = match (pes, v) {
            (0, Variant::Mpa) => 8,
            (0, _) => 1,
            (p, _) => p,
        };
        let a = allocation_for(v, &w, pes)
            .map_err(|e| Fail::new(TgStatus::InvalidArgument, e.to_string()))?;
        let cfg = SimConfig {
            clock_mhz,
            cost: if calibrated != 0 {
                calibrated_cost_model()
            } else {
                CostModel::default()
            },
            ..SimConfig::default()
        };
        let t = simulate(v, &a, &w, &cfg)?.timing;
        *out = TgSimSummary {
            latency_cycles: t.latency_cycles,
            interval_cycles: t.interval_cycles,
            latency_us: t.latency_us(),
            interval_us: t.interval_us(),
            throughput_mgps: t.throughput_mgps(),
            meets_requirement: check_requirement(&t).pass as i32,
        };
        Ok(())
    })
}

/// Data-aware PEs per group type. `node_sizes` holds A, B; `edge_sizes`
/// holds A-A, A-B, B-B; `out` receives A, B, A-A, A-B, B-B.
///
/// # Safety
/// The arrays must hold 2, 3 and 5 elements.
#[no_mangle]
pub unsafe extern "C" fn tg_allocate_data_aware(
    node_sizes: *const usize,
    edge_sizes: *const usize,
    out: *mut u32,
) -> TgStatus {
    guard(|| {
        if node_sizes.is_null() || edge_sizes.is_null() || out.is_null() {
            return Err(Fail::new(TgStatus::NullPointer, "array is null"));
        }
        let n = std::slice::from_raw_parts(node_sizes, 2);
        let e = std::slice::from_raw_parts(edge_sizes, 3);
        let r = allocate_by_type([n[0], n[1]], [e[0], e[1], e[2]]);
        std::slice::from_raw_parts_mut(out, 5).copy_from_slice(&r);
        Ok(())
    })
}
