//! C ABI over `mfgnet`.
//!
//! Every function returns an [`MfgnetStatus`]; on anything other than
//! `MFGNET_STATUS_OK` the message is kept per thread and can be fetched with
//! [`mfgnet_last_error`]. Objects are opaque handles created by `*_new` /
//! `*_solve` functions and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mfgnet::epidemic::{stability_condition, EpidemicParams};
use mfgnet::mfg::{solve_itvp, ItvpConfig, ItvpSolution};
use mfgnet::stationary::{classify_equilibrium, stationary_equilibrium, stationary_y, ReducedCoefficients, Stability};
use mfgnet::{make_simplex, Congestion, CostWeights, Error, Graph};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfgnetStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad argument at the C boundary (length, encoding, index).
    InvalidArgument = 2,
    NotASimplex = 3,
    StepTooLarge = 4,
    /// The handle still holds the last iterate.
    NoConvergence = 5,
    Degenerate = 6,
    NoRealEquilibrium = 7,
    NotAnEquilibrium = 8,
    NoRoot = 9,
    DegenerateMapping = 10,
    HypothesisViolated = 11,
    OutOfRange = 12,
    InvalidGraph = 13,
    InvalidParameter = 14,
    Io = 15,
    Json = 16,
    Panic = 99,
}

/// Classification of a stationary point of the reduced value dynamics.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfgnetStability {
    StableNode = 0,
    UnstableNode = 1,
    Saddle = 2,
    CenterOrDegenerate = 3,
}

impl From<Stability> for MfgnetStability {
    fn from(s: Stability) -> Self {
        match s {
            Stability::StableNode => MfgnetStability::StableNode,
            Stability::UnstableNode => MfgnetStability::UnstableNode,
            Stability::Saddle => MfgnetStability::Saddle,
            Stability::CenterOrDegenerate => MfgnetStability::CenterOrDegenerate,
        }
    }
}

/// Stationary mean-field equilibrium.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MfgnetStationary {
    pub x_hat: [f64; 3],
    pub y_star: [f64; 2],
    pub kappa: f64,
    pub residual: f64,
    pub stability: MfgnetStability,
}

/// Cost weights.
pub struct MfgnetWeights(CostWeights);

/// Solved initial-terminal value problem.
pub struct MfgnetItvp(ItvpSolution);

/// Interaction graph.
pub struct MfgnetGraph(Graph);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.as_bytes().to_vec());
}

fn status_of(e: &Error) -> MfgnetStatus {
    match e {
        Error::NotASimplex { .. } => MfgnetStatus::NotASimplex,
        Error::StepTooLarge { .. } => MfgnetStatus::StepTooLarge,
        Error::NoConvergence { .. } => MfgnetStatus::NoConvergence,
        Error::Degenerate { .. } => MfgnetStatus::Degenerate,
        Error::NoRealEquilibrium { .. } => MfgnetStatus::NoRealEquilibrium,
        Error::NotAnEquilibrium { .. } => MfgnetStatus::NotAnEquilibrium,
        Error::NoRoot(_) => MfgnetStatus::NoRoot,
        Error::DegenerateMapping(_) => MfgnetStatus::DegenerateMapping,
        Error::HypothesisViolated(_) => MfgnetStatus::HypothesisViolated,
        Error::OutOfRange { .. } => MfgnetStatus::OutOfRange,
        Error::InvalidGraph(_) => MfgnetStatus::InvalidGraph,
        Error::InvalidParameter(_) => MfgnetStatus::InvalidParameter,
        Error::Io { .. } => MfgnetStatus::Io,
        Error::Json { .. } => MfgnetStatus::Json,
    }
}

enum Fail {
    Lib(Error),
    Arg(MfgnetStatus, String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn null() -> Fail {
    Fail::Arg(MfgnetStatus::NullPointer, "null pointer argument".into())
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MfgnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MfgnetStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Arg(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside mfgnet");
            MfgnetStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mfgnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// weights ---------------------------------------------------------------------

/// Unit costs on the four arcs, large costs on 1↔2, congestion `(1, 1, 2)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_weights_default(out_weights: *mut *mut MfgnetWeights) -> MfgnetStatus {
    guard(|| {
        *out(out_weights)? = boxed(MfgnetWeights(CostWeights::default()));
        Ok(())
    })
}

/// Cost `r` on every control arc, `gamma` on every disturbance arc and linear
/// congestion `q[i] * x_i`.
///
/// # Safety
/// `q` must point to 3 doubles, `out_weights` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_weights_uniform(
    r: f64,
    gamma: f64,
    q: *const f64,
    out_weights: *mut *mut MfgnetWeights,
) -> MfgnetStatus {
    guard(|| {
        let q = slice(q, 3)?;
        let w = CostWeights::uniform(r, gamma, Congestion::linear([q[0], q[1], q[2]]))?;
        *out(out_weights)? = boxed(MfgnetWeights(w));
        Ok(())
    })
}

/// Full matrices, row-major 3×3 each.
///
/// # Safety
/// `control` and `disturbance` must point to 9 doubles, `q` to 3.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_weights_new(
    control: *const f64,
    disturbance: *const f64,
    q: *const f64,
    out_weights: *mut *mut MfgnetWeights,
) -> MfgnetStatus {
    guard(|| {
        let (c, d, q) = (slice(control, 9)?, slice(disturbance, 9)?, slice(q, 3)?);
        let m = |s: &[f64]| [[s[0], s[1], s[2]], [s[3], s[4], s[5]], [s[6], s[7], s[8]]];
        let w = CostWeights::new(m(c), m(d), Congestion::linear([q[0], q[1], q[2]]))?;
        *out(out_weights)? = boxed(MfgnetWeights(w));
        Ok(())
    })
}

/// # Safety
/// `w` must come from an `mfgnet_weights_*` constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_weights_free(w: *mut MfgnetWeights) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

// itvp ------------------------------------------------------------------------

/// Solves the initial-terminal value problem on `[0, horizon]` from `x0`
/// (3 doubles) with congestion terminal values.
///
/// On `MFGNET_STATUS_NO_CONVERGENCE` `*out_solution` still receives the last
/// iterate and must be freed.
///
/// # Safety
/// Pointers must be valid; `x0` must point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_itvp_solve(
    weights: *const MfgnetWeights,
    x0: *const f64,
    horizon: f64,
    dt: f64,
    relaxation: f64,
    tolerance: f64,
    max_iterations: usize,
    out_solution: *mut *mut MfgnetItvp,
) -> MfgnetStatus {
    guard(|| {
        let w = &handle(weights)?.0;
        let x = slice(x0, 3)?;
        let slot = out(out_solution)?;
        *slot = ptr::null_mut();
        let cfg = ItvpConfig {
            horizon,
            dt,
            relaxation,
            tolerance,
            max_iterations,
            ..ItvpConfig::default()
        };
        match solve_itvp(make_simplex(x[0], x[1], x[2])?, w, &cfg) {
            Ok(sol) => {
                *slot = boxed(MfgnetItvp(sol));
                Ok(())
            }
            Err(Error::NoConvergence {
                iterations,
                last_change,
                last,
            }) => {
                *slot = boxed(MfgnetItvp(*last));
                Err(Fail::Arg(
                    MfgnetStatus::NoConvergence,
                    format!("no convergence after {iterations} iterations (last change {last_change:e})"),
                ))
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// Number of time points on the solution grid.
///
/// # Safety
/// `sol` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_itvp_len(sol: *const MfgnetItvp, out_len: *mut usize) -> MfgnetStatus {
    guard(|| {
        *out(out_len)? = handle(sol)?.0.trajectory.len();
        Ok(())
    })
}

/// Sweeps used and the final residual `sup |forward(v(x)) - x|`.
///
/// # Safety
/// `sol` must be a live handle; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_itvp_summary(
    sol: *const MfgnetItvp,
    out_iterations: *mut usize,
    out_residual: *mut f64,
) -> MfgnetStatus {
    guard(|| {
        let s = &handle(sol)?.0;
        *out(out_iterations)? = s.iterations;
        *out(out_residual)? = s.residual;
        Ok(())
    })
}

/// Time, distribution and values at grid index `k`; `x` and `v` receive 3
/// doubles each.
///
/// # Safety
/// `sol` must be a live handle; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_itvp_point(
    sol: *const MfgnetItvp,
    k: usize,
    out_t: *mut f64,
    out_x: *mut f64,
    out_v: *mut f64,
) -> MfgnetStatus {
    guard(|| {
        let s = &handle(sol)?.0;
        let traj = &s.trajectory;
        if k >= traj.len() {
            return Err(Fail::Arg(
                MfgnetStatus::InvalidArgument,
                format!("index {k} beyond {} grid points", traj.len()),
            ));
        }
        *out(out_t)? = traj.times[k];
        let x = traj.states[k].as_array();
        let v = s.values()[k].as_array();
        if out_x.is_null() || out_v.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(x.as_ptr(), out_x, 3);
        ptr::copy_nonoverlapping(v.as_ptr(), out_v, 3);
        Ok(())
    })
}

/// # Safety
/// `sol` must come from [`mfgnet_itvp_solve`], or be null.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_itvp_free(sol: *mut MfgnetItvp) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

// stationary ------------------------------------------------------------------

/// Third-quadrant stationary point of `ẏ = -½ a y² + c` and its class;
/// `a = (a11, a12, a21, a22)`, `c = (c1, c2)`, `out_y` receives 2 doubles.
///
/// # Safety
/// `a` must point to 4 doubles, `c` to 2, `out_y` to 2 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_stationary_point(
    a: *const f64,
    c: *const f64,
    out_y: *mut f64,
    out_stability: *mut MfgnetStability,
) -> MfgnetStatus {
    guard(|| {
        let (a, c) = (slice(a, 4)?, slice(c, 2)?);
        let k = ReducedCoefficients::new([a[0], a[1], a[2], a[3]], [c[0], c[1]])?;
        let y = stationary_y(&k)?;
        let class = classify_equilibrium(&y, &k)?;
        if out_y.is_null() {
            return Err(null());
        }
        *out_y = y.y1;
        *out_y.add(1) = y.y2;
        *out(out_stability)? = class.into();
        Ok(())
    })
}

/// Stationary equilibrium for the given weights.
///
/// # Safety
/// `weights` must be a live handle, `out_stationary` valid.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_stationary_equilibrium(
    weights: *const MfgnetWeights,
    out_stationary: *mut MfgnetStationary,
) -> MfgnetStatus {
    guard(|| {
        let s = stationary_equilibrium(&handle(weights)?.0)?;
        *out(out_stationary)? = MfgnetStationary {
            x_hat: s.x_hat.as_array(),
            y_star: [s.y_star.y1, s.y_star.y2],
            kappa: s.kappa,
            residual: s.residual,
            stability: s.stability.into(),
        };
        Ok(())
    })
}

// graphs and epidemics ----------------------------------------------------------

/// The bundled 11-bus network.
///
/// # Safety
/// `out_graph` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_graph_walpole(out_graph: *mut *mut MfgnetGraph) -> MfgnetStatus {
    guard(|| {
        *out(out_graph)? = boxed(MfgnetGraph(Graph::walpole()));
        Ok(())
    })
}

/// Undirected graph on nodes `1..=n` from `count` edges `(from[k], to[k], weight[k])`.
///
/// # Safety
/// The three arrays must hold `count` entries each.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_graph_from_edges(
    n: usize,
    from: *const u32,
    to: *const u32,
    weight: *const f64,
    count: usize,
    out_graph: *mut *mut MfgnetGraph,
) -> MfgnetStatus {
    guard(|| {
        let (f, t, w) = (slice(from, count)?, slice(to, count)?, slice(weight, count)?);
        let edges: Vec<(usize, usize, f64)> = (0..count).map(|k| (f[k] as usize, t[k] as usize, w[k])).collect();
        *out(out_graph)? = boxed(MfgnetGraph(Graph::from_undirected_edges(n, &edges)?));
        Ok(())
    })
}

/// Parses the `i j w` edge-list text format.
///
/// # Safety
/// `text` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_graph_parse(text: *const c_char, out_graph: *mut *mut MfgnetGraph) -> MfgnetStatus {
    guard(|| {
        if text.is_null() {
            return Err(null());
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Fail::Arg(MfgnetStatus::InvalidArgument, format!("edge list is not UTF-8: {e}")))?;
        *out(out_graph)? = boxed(MfgnetGraph(Graph::parse(s)?));
        Ok(())
    })
}

/// # Safety
/// `g` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_graph_node_count(g: *const MfgnetGraph, out_n: *mut usize) -> MfgnetStatus {
    guard(|| {
        *out(out_n)? = handle(g)?.0.node_count();
        Ok(())
    })
}

/// # Safety
/// `g` must come from an `mfgnet_graph_*` constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_graph_free(g: *mut MfgnetGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Per-node margins of the infection-free stability condition at `s_star`
/// (`n` entries); `out_stable` is 1 when every margin is positive.
/// `rates = (β13, β23, β31, β32)`.
///
/// # Safety
/// `s_star` and `out_margins` must hold `n` doubles, `rates` 4.
#[no_mangle]
pub unsafe extern "C" fn mfgnet_epidemic_stability(
    g: *const MfgnetGraph,
    rates: *const f64,
    s_star: *const f64,
    n: usize,
    out_margins: *mut f64,
    out_stable: *mut i32,
) -> MfgnetStatus {
    guard(|| {
        let graph = &handle(g)?.0;
        let r = slice(rates, 4)?;
        let s = slice(s_star, n)?;
        let p = EpidemicParams {
            beta13: r[0],
            beta23: r[1],
            beta31: r[2],
            beta32: r[3],
            graph: graph.clone(),
        };
        p.validate()?;
        let rep = stability_condition(s, &p)?;
        if n > 0 && out_margins.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(rep.margins.as_ptr(), out_margins, n);
        *out(out_stable)? = rep.stable as i32;
        Ok(())
    })
}
