//! C interface to `paintwalk`.
//!
//! Every fallible function returns a [`PwStatus`]; on failure the message
//! is kept per thread and can be fetched with [`pw_last_error_message`].
//! Graphs are opaque handles owned by the caller and released with
//! [`pw_graph_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use paintwalk::batch::{simulate_batch, RunConfig};
use paintwalk::exact::{cached_hitting_table, predicted_variance};
use paintwalk::painter::{run_painting, PaintMode, PaintOptions, PaintingOutcome};
use paintwalk::walk::derive_stream;
use paintwalk::{Error, Graph, GraphSpec, Vertex, WalkConfig};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SizeCap = 3,
    InvalidVertex = 4,
    BufferTooSmall = 5,
    StepCap = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

/// Marking rule, passed as `uint32_t`.
pub const PW_MODE_FIRST_PAINTED: u32 = 0;
pub const PW_MODE_LAST_PAINTED: u32 = 1;

/// Opaque graph handle.
pub struct PwGraph {
    graph: Graph,
}

/// One painting run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PwOutcome {
    pub a1_count: u64,
    pub a2_count: u64,
    pub tie_count: u64,
    pub wins1: u64,
    pub wins2: u64,
    pub b_statistic: i64,
    pub cover_time: u64,
    pub boundary_edges: u64,
}

impl From<PaintingOutcome> for PwOutcome {
    fn from(o: PaintingOutcome) -> Self {
        PwOutcome {
            a1_count: o.a1_count,
            a2_count: o.a2_count,
            tie_count: o.tie_count,
            wins1: o.wins1,
            wins2: o.wins2,
            b_statistic: o.b_statistic,
            cover_time: o.cover_time,
            boundary_edges: o.boundary_edges,
        }
    }
}

/// Aggregate of a batch. Moments are NaN when fewer than two runs completed.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PwBatchSummary {
    pub runs_completed: u64,
    pub runs_missing: u64,
    pub a1_mean: f64,
    pub a1_variance: f64,
    pub b_variance: f64,
    pub tie_fraction_mean: f64,
    pub cover_time_mean: f64,
}

/// Exact hitting-table statistics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PwExactSummary {
    pub t_mix: u64,
    pub horizon: u64,
    pub f_bar: f64,
    pub f_statistic: f64,
    /// `F / 4`; NaN when `c < 2`.
    pub quarter_f: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PwStatus {
    match e {
        Error::SizeCap { .. } => PwStatus::SizeCap,
        Error::InvalidVertex { .. } => PwStatus::InvalidVertex,
        Error::StepCapExceeded { .. } => PwStatus::StepCap,
        Error::Numerical(_) | Error::IterationCap(_) => PwStatus::Numerical,
        Error::Io { .. } => PwStatus::Io,
        _ => PwStatus::InvalidArgument,
    }
}

/// Runs `f`, recording the error text and mapping panics to `Panic`.
fn guard(f: impl FnOnce() -> Result<(), (PwStatus, String)>) -> PwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PwStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PwStatus::Panic
        }
    }
}

fn lib<T>(r: paintwalk::Result<T>) -> Result<T, (PwStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PwStatus, String) {
    (PwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (PwStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (PwStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn graph_arg<'a>(g: *const PwGraph) -> Result<&'a Graph, (PwStatus, String)> {
    g.as_ref().map(|h| &h.graph).ok_or_else(|| null("graph"))
}

fn mode_arg(mode: u32) -> Result<PaintMode, (PwStatus, String)> {
    match mode {
        PW_MODE_FIRST_PAINTED => Ok(PaintMode::FirstPainted),
        PW_MODE_LAST_PAINTED => Ok(PaintMode::LastPainted),
        m => Err((PwStatus::InvalidArgument, format!("unknown mode {m}"))),
    }
}

/// Builds a graph from a spec string such as `"torus:d=3,n=8"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_graph_new(spec: *const c_char, out: *mut *mut PwGraph) -> PwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = lib(GraphSpec::parse(str_arg(spec, "spec")?))?;
        let graph = lib(Graph::build(spec))?;
        *out = Box::into_raw(Box::new(PwGraph { graph }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `g` must come from [`pw_graph_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pw_graph_free(g: *mut PwGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pw_graph_vertex_count(g: *const PwGraph, out: *mut u64) -> PwStatus {
    guard(|| {
        let graph = graph_arg(g)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = graph.vertex_count() as u64;
        Ok(())
    })
}

/// Degree of a regular graph; for irregular explicit graphs the maximum.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pw_graph_degree(g: *const PwGraph, out: *mut u32) -> PwStatus {
    guard(|| {
        let graph = graph_arg(g)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = graph.degree() as u32;
        Ok(())
    })
}

/// Writes the neighbors of `v` into `buf`. `written` always receives the
/// neighbor count; `BufferTooSmall` is returned when `capacity` is short.
///
/// # Safety
/// `buf` must hold `capacity` elements (it may be null when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn pw_graph_neighbors(g: *const PwGraph, v: u32, buf: *mut u32, capacity: usize, written: *mut usize) -> PwStatus {
    guard(|| {
        let graph = graph_arg(g)?;
        let written = written.as_mut().ok_or_else(|| null("written"))?;
        let ns = lib(graph.neighbors(Vertex(v)))?;
        *written = ns.len();
        if ns.len() > capacity {
            return Err((PwStatus::BufferTooSmall, format!("need {} slots, got {capacity}", ns.len())));
        }
        if buf.is_null() && !ns.is_empty() {
            return Err(null("buf"));
        }
        for (i, w) in ns.iter().enumerate() {
            *buf.add(i) = w.0;
        }
        Ok(())
    })
}

/// One painting with the stream `(seed, stream)`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pw_run_painting(g: *const PwGraph, laziness: f64, mode: u32, seed: u64, stream: u64, out: *mut PwOutcome) -> PwStatus {
    guard(|| {
        let graph = graph_arg(g)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cfg = lib(WalkConfig::lazy(laziness))?;
        let opts = PaintOptions::with_mode(mode_arg(mode)?);
        let o = lib(run_painting(graph, &cfg, &opts, &mut derive_stream(seed, stream)))?;
        *out = o.into();
        Ok(())
    })
}

/// Runs `runs` paintings with streams `(seed, 0..runs)`; `workers = 0`
/// uses one thread per core. The result does not depend on `workers`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pw_simulate_batch(
    spec: *const c_char,
    seed: u64,
    runs: u64,
    laziness: f64,
    mode: u32,
    workers: u32,
    out: *mut PwBatchSummary,
) -> PwStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let config = RunConfig {
            graph: str_arg(spec, "spec")?.to_string(),
            seed,
            runs,
            laziness,
            mode: mode_arg(mode)?,
            workers: workers as usize,
            ..Default::default()
        };
        let s = lib(simulate_batch(&config))?.summary;
        *out = PwBatchSummary {
            runs_completed: s.runs_completed,
            runs_missing: s.missing_runs.len() as u64,
            a1_mean: s.a1.map_or(f64::NAN, |a| a.mean),
            a1_variance: s.a1.map_or(f64::NAN, |a| a.variance),
            b_variance: s.b.map_or(f64::NAN, |b| b.variance),
            tie_fraction_mean: s.tie_fraction_mean.unwrap_or(f64::NAN),
            cover_time_mean: s.cover_time_mean.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Mixing time, hitting table and `F` for the horizon `c t_mix`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pw_exact_summary(g: *const PwGraph, laziness: f64, c: f64, out: *mut PwExactSummary) -> PwStatus {
    guard(|| {
        let graph = graph_arg(g)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if !(c >= 1.0 && c.is_finite()) {
            return Err((PwStatus::InvalidArgument, format!("c must be at least 1, got {c}")));
        }
        let cfg = lib(WalkConfig::lazy(laziness))?;
        let (table, _) = lib(cached_hitting_table(graph, &cfg, c, None))?;
        *out = PwExactSummary {
            t_mix: table.t_mix,
            horizon: table.horizon,
            f_bar: table.f_bar,
            f_statistic: table.f_statistic,
            quarter_f: predicted_variance(&table).map_or(f64::NAN, |p| p.quarter_f),
        };
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to fit) and returns its full length in bytes,
/// excluding the terminator. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must hold `capacity` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn pw_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
