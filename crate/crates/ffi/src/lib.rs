//! C interface to `vrjp-core`.
//!
//! Every function returns a [`VrjpStatus`]. On failure a message is kept per
//! thread and can be read with [`vrjp_last_error_message`]. Handles are opaque
//! and owned by the caller, who releases them with the matching `_free`.
//! Output arrays are caller-allocated; the required length is documented per
//! function and a short buffer yields `VRJP_STATUS_BUFFER_TOO_SMALL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vrjp_core::beta::sample_beta;
use vrjp_core::flow::{flow_step, moment_bound, sample_weights, FlowState, WeightDist};
use vrjp_core::graph::Graph;
use vrjp_core::inv_gauss::{frac_moment, log_moment};
use vrjp_core::linalg::effective_weights;
use vrjp_core::rng::{stream, Stream};
use vrjp_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VrjpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidInput = 3,
    DimensionMismatch = 4,
    Numeric = 5,
    Limit = 6,
    Parse = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Base graph with positive edge weights.
pub struct VrjpGraph {
    graph: Graph,
}

/// Renormalization flow state with its own random stream.
pub struct VrjpFlow {
    state: FlowState,
    rng: Stream,
}

/// Decay bounds; entries that do not apply are NaN (or -1 for `m0`, `m1`).
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct VrjpBounds {
    pub phase1: f64,
    pub combined: f64,
    pub log_bound: f64,
    pub m0: i64,
    pub m1: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Fail(VrjpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidGraph(_)
            | Error::InvalidWeights(_)
            | Error::IsolatedVertex(_)
            | Error::Absorbing(_)
            | Error::InvalidSubset(_)
            | Error::NotFound(_) => VrjpStatus::InvalidInput,
            Error::DimensionMismatch { .. } => VrjpStatus::DimensionMismatch,
            Error::NotPositiveDefinite { .. }
            | Error::NonPositiveUField { .. }
            | Error::InconsistentFlow(_)
            | Error::Domain(_) => VrjpStatus::Numeric,
            Error::Level { .. } | Error::Guard(_) => VrjpStatus::Limit,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Parse(_) => VrjpStatus::Parse,
        };
        Fail(code, e.to_string())
    }
}

fn fail<T>(code: VrjpStatus, msg: impl Into<String>) -> Result<T, Fail> {
    Err(Fail(code, msg.into()))
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> VrjpStatus {
    let (code, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (VrjpStatus::Ok, String::new()),
        Ok(Err(Fail(c, m))) => (c, m),
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            (VrjpStatus::Panic, m)
        }
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    code
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(VrjpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(VrjpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(VrjpStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len < need {
        return fail(VrjpStatus::BufferTooSmall, format!("{what} holds {len}, needs {need}"));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return fail(VrjpStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return fail(VrjpStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(VrjpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vrjp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns its full length in bytes,
/// excluding the terminator. `buf` may be null when `len` is 0.
///
/// # Safety
/// `buf` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn vrjp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a graph from the JSON schema `{"vertices": [...], "edges": [[u, v, w], ...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vrjp_graph_from_json(json: *const c_char, out: *mut *mut VrjpGraph) -> VrjpStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let graph = Graph::from_json_str(c_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(VrjpGraph { graph }));
        Ok(())
    })
}

/// Builds a graph on vertices `0..n_vertices` from `n_edges` edges
/// `(tails[k], heads[k], weights[k])`.
///
/// # Safety
/// The three arrays must hold `n_edges` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vrjp_graph_from_edges(
    n_vertices: usize,
    tails: *const u32,
    heads: *const u32,
    weights: *const f64,
    n_edges: usize,
    out: *mut *mut VrjpGraph,
) -> VrjpStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let t = slice(tails, n_edges, "tails")?;
        let h = slice(heads, n_edges, "heads")?;
        let w = slice(weights, n_edges, "weights")?;
        let edges: Vec<_> = (0..n_edges).map(|k| (t[k] as usize, h[k] as usize, w[k])).collect();
        let graph = Graph::from_indexed(n_vertices, &edges)?;
        *out = Box::into_raw(Box::new(VrjpGraph { graph }));
        Ok(())
    })
}

/// # Safety
/// `graph` must come from a `vrjp_graph_*` constructor and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn vrjp_graph_free(graph: *mut VrjpGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vrjp_graph_counts(graph: *const VrjpGraph, n_vertices: *mut usize, n_edges: *mut usize) -> VrjpStatus {
    guard(|| {
        let g = &as_ref(graph, "graph")?.graph;
        *as_mut(n_vertices, "n_vertices")? = g.n_vertices();
        *as_mut(n_edges, "n_edges")? = g.n_edges();
        Ok(())
    })
}

/// Draws `n_samples` β-fields; `out` receives them row-major,
/// `n_samples * n_vertices` values. Identical seeds give identical output.
///
/// # Safety
/// `graph` must be live; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vrjp_sample_beta(
    graph: *const VrjpGraph,
    seed: u64,
    n_samples: usize,
    out: *mut f64,
    out_len: usize,
) -> VrjpStatus {
    guard(|| {
        let g = &as_ref(graph, "graph")?.graph;
        let n = g.n_vertices();
        let need = n_samples.checked_mul(n).ok_or_else(|| Fail(VrjpStatus::InvalidArgument, "size overflow".into()))?;
        let dst = out_slice(out, out_len, need, "out")?;
        let w = g.weight_matrix();
        let mut rng = stream(seed, 0);
        for row in dst.chunks_mut(n.max(1)).take(n_samples) {
            row.copy_from_slice(&sample_beta(&w, &mut rng, None)?.beta);
        }
        Ok(())
    })
}

/// Effective weights on the vertex subset `subset` given a β on all vertices.
/// `out` receives the `k x k` matrix row-major, `k = subset_len`; the
/// diagonal holds the self-loop weights.
///
/// # Safety
/// `beta` must hold `n_vertices` doubles, `subset` `subset_len` indices and
/// `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vrjp_effective_weights(
    graph: *const VrjpGraph,
    beta: *const f64,
    beta_len: usize,
    subset: *const u32,
    subset_len: usize,
    out: *mut f64,
    out_len: usize,
) -> VrjpStatus {
    guard(|| {
        let g = &as_ref(graph, "graph")?.graph;
        let b = slice(beta, beta_len, "beta")?;
        let j: Vec<usize> = slice(subset, subset_len, "subset")?.iter().map(|&x| x as usize).collect();
        let dst = out_slice(out, out_len, subset_len * subset_len, "out")?;
        let wj = effective_weights(&g.weight_matrix(), b, &j)?;
        for a in 0..subset_len {
            for c in 0..subset_len {
                dst[a * subset_len + c] = wj.get(a, c);
            }
        }
        Ok(())
    })
}

/// Starts a flow at level `r` with i.i.d. weights drawn from `dist`
/// (`"gamma:a=<shape>"` or `"const:w=<value>"`).
///
/// # Safety
/// `graph` must be live, `dist` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vrjp_flow_new(
    graph: *const VrjpGraph,
    r: u32,
    dist: *const c_char,
    seed: u64,
    out: *mut *mut VrjpFlow,
) -> VrjpStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let g = &as_ref(graph, "graph")?.graph;
        let d: WeightDist = c_str(dist, "dist")?.parse()?;
        let mut rng = stream(seed, 0);
        let w = sample_weights(g, r, &d, &mut rng)?;
        let state = FlowState::fresh(g, r, &w)?;
        *out = Box::into_raw(Box::new(VrjpFlow { state, rng }));
        Ok(())
    })
}

/// Starts a flow at level `r` from explicit weights, `n_edges * 2^r` values
/// with the pieces of each base edge contiguous and in order.
///
/// # Safety
/// `graph` must be live, `weights` must hold `len` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vrjp_flow_from_weights(
    graph: *const VrjpGraph,
    r: u32,
    weights: *const f64,
    len: usize,
    seed: u64,
    out: *mut *mut VrjpFlow,
) -> VrjpStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let g = &as_ref(graph, "graph")?.graph;
        let state = FlowState::fresh(g, r, slice(weights, len, "weights")?)?;
        *out = Box::into_raw(Box::new(VrjpFlow { state, rng: stream(seed, 0) }));
        Ok(())
    })
}

/// # Safety
/// `flow` must come from a `vrjp_flow_*` constructor and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn vrjp_flow_free(flow: *mut VrjpFlow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// Lowers the flow by one level. Fails with `VRJP_STATUS_LIMIT` at level 0.
///
/// # Safety
/// `flow` must be live.
#[no_mangle]
pub unsafe extern "C" fn vrjp_flow_step(flow: *mut VrjpFlow) -> VrjpStatus {
    guard(|| {
        let f = as_mut(flow, "flow")?;
        f.state = flow_step(&f.state, &mut f.rng)?;
        Ok(())
    })
}

/// # Safety
/// `flow` must be live and `level` writable.
#[no_mangle]
pub unsafe extern "C" fn vrjp_flow_level(flow: *const VrjpFlow, level: *mut u32) -> VrjpStatus {
    guard(|| {
        *as_mut(level, "level")? = as_ref(flow, "flow")?.state.level();
        Ok(())
    })
}

/// Natural logs of the current weights, `n_edges * 2^level` values in the
/// layout of [`vrjp_flow_from_weights`]. Logs avoid underflow deep in the flow.
///
/// # Safety
/// `flow` must be live and `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vrjp_flow_log_weights(flow: *const VrjpFlow, out: *mut f64, out_len: usize) -> VrjpStatus {
    guard(|| {
        let lw = as_ref(flow, "flow")?.state.log_weights();
        out_slice(out, out_len, lw.len(), "out")?.copy_from_slice(&lw);
        Ok(())
    })
}

/// Decay bounds from level `r` to `l`. Pass NaN for a moment that is unknown;
/// at least one of `moment` (E[W^alpha]) and `mean_log` (E[ln W]) is needed.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vrjp_moment_bound(
    alpha: f64,
    moment: f64,
    mean_log: f64,
    r: u32,
    l: u32,
    out: *mut VrjpBounds,
) -> VrjpStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let m = (!moment.is_nan()).then_some(moment);
        let g = (!mean_log.is_nan()).then_some(mean_log);
        if m.is_none() && g.is_none() {
            return fail(VrjpStatus::InvalidArgument, "moment and mean_log are both NaN");
        }
        let b = moment_bound(alpha, m, g, r, l)?;
        *out = VrjpBounds {
            phase1: b.phase1.unwrap_or(f64::NAN),
            combined: b.combined.unwrap_or(f64::NAN),
            log_bound: b.log_bound.unwrap_or(f64::NAN),
            m0: b.m0.map_or(-1, i64::from),
            m1: b.m1.map_or(-1, i64::from),
        };
        Ok(())
    })
}

/// `E[X^alpha]` for the inverse Gaussian variable of parameter `w`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vrjp_frac_moment(w: f64, alpha: f64, out: *mut f64) -> VrjpStatus {
    guard(|| {
        *as_mut(out, "out")? = frac_moment(w, alpha)?;
        Ok(())
    })
}

/// `E[ln X]` for the inverse Gaussian variable of parameter `w`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vrjp_log_moment(w: f64, out: *mut f64) -> VrjpStatus {
    guard(|| {
        *as_mut(out, "out")? = log_moment(w)?;
        Ok(())
    })
}
