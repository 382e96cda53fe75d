//! C interface to the `l4s-sim` simulator.
//!
//! Scenarios and results are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! an [`L4sStatus`]; on failure a description is kept per thread and can be
//! read with [`l4s_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use l4s_sim::aqm::QueueKind;
use l4s_sim::cc::QueueClass;
use l4s_sim::des::SimTime;
use l4s_sim::harness::{run_trial, FlowMetrics, FlowSpec, Scenario, TrialResult};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L4sStatus {
    Ok = 0,
    NullPointer = 1,
    /// A string was not UTF-8 or named no known queue or flow.
    InvalidArgument = 2,
    /// The scenario as a whole fails validation.
    InvalidScenario = 3,
    SimulationFailed = 4,
    OutOfRange = 5,
    /// The output buffer is too small; the required size was reported.
    BufferTooSmall = 6,
    Panic = 7,
}

/// How the Prague fallback detector is driven.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L4sFallbackForce {
    /// Let the detector decide from RTT measurements.
    Auto = 0,
    L4s = 1,
    Classic = 2,
}

/// Opaque scenario handle.
pub struct L4sScenario {
    inner: Scenario,
}

/// Opaque handle to the outcome of one trial.
pub struct L4sTrial {
    inner: TrialResult,
}

/// Per-flow summary of a trial.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct L4sFlowMetrics {
    /// Goodput, Mb/s.
    pub throughput_mbps: f64,
    pub mean_rtt_ms: f64,
    pub mean_qdelay_ms: f64,
    pub p99_qdelay_ms: f64,
    pub marks: u64,
    pub drops: u64,
    /// Fraction of the combined goodput.
    pub share: f64,
}

impl From<&FlowMetrics> for L4sFlowMetrics {
    fn from(m: &FlowMetrics) -> Self {
        L4sFlowMetrics {
            throughput_mbps: m.throughput,
            mean_rtt_ms: m.mean_rtt,
            mean_qdelay_ms: m.mean_qdelay,
            p99_qdelay_ms: m.p99_qdelay,
            marks: m.marks,
            drops: m.drops,
            share: m.share,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: L4sStatus, msg: impl Into<String>) -> L4sStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

/// Runs `f`, turning a panic into [`L4sStatus::Panic`].
fn guard(f: impl FnOnce() -> L4sStatus) -> L4sStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(L4sStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, L4sStatus> {
    if p.is_null() {
        return Err(fail(L4sStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(L4sStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copies `s` NUL-terminated into `buf`; `needed` always receives the size
/// including the terminator.
unsafe fn write_str(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> L4sStatus {
    match copy_str(s, buf, len, needed) {
        L4sStatus::BufferTooSmall => fail(L4sStatus::BufferTooSmall, format!("need {} bytes", s.len() + 1)),
        st => st,
    }
}

/// [`write_str`] without touching the last-error slot.
unsafe fn copy_str(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> L4sStatus {
    if !needed.is_null() {
        *needed = s.len() + 1;
    }
    if buf.is_null() || len < s.len() + 1 {
        return L4sStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    L4sStatus::Ok
}

/// Creates a two-flow (or one-flow) scenario with default network settings:
/// 100 Mb/s bottleneck, 10 ms base RTT, 60 s duration.
///
/// `queue` is one of `fifo`, `fifo-ecn`, `codel`, `fq`, `fq-codel`, `dualpi2`.
/// Flows are labels such as `prague`, `prague+fb`, `cubic-ecn`,
/// `bbr2-accecn`; `flow_b` may be null for a single flow.
///
/// # Safety
/// String arguments must be null or valid NUL-terminated strings; `out` must
/// be null or writable.
#[no_mangle]
pub unsafe extern "C" fn l4s_scenario_new(
    queue: *const c_char,
    buffer_bdp: f64,
    flow_a: *const c_char,
    flow_b: *const c_char,
    out: *mut *mut L4sScenario,
) -> L4sStatus {
    guard(|| {
        if out.is_null() {
            return fail(L4sStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let parse = || -> Result<Scenario, L4sStatus> {
            let q: QueueKind = str_arg(queue, "queue")?.parse().map_err(|e| fail(L4sStatus::InvalidArgument, format!("{e}")))?;
            let flow = |p, what| -> Result<FlowSpec, L4sStatus> {
                FlowSpec::parse_label(str_arg(p, what)?).map_err(|e| fail(L4sStatus::InvalidArgument, e.to_string()))
            };
            let a = flow(flow_a, "flow_a")?;
            let b = if flow_b.is_null() { None } else { Some(flow(flow_b, "flow_b")?) };
            let s = Scenario::new(q, buffer_bdp, a, b);
            s.validate().map_err(|e| fail(L4sStatus::InvalidScenario, e.to_string()))?;
            Ok(s)
        };
        match parse() {
            Ok(s) => {
                *out = Box::into_raw(Box::new(L4sScenario { inner: s }));
                L4sStatus::Ok
            }
            Err(st) => st,
        }
    })
}

/// # Safety
/// `s` must be null or a handle from [`l4s_scenario_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn l4s_scenario_free(s: *mut L4sScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Applies `f` to the scenario and re-validates; on rejection the scenario is
/// left unchanged.
unsafe fn edit(s: *mut L4sScenario, f: impl FnOnce(&mut Scenario)) -> L4sStatus {
    guard(|| {
        let Some(h) = s.as_mut() else {
            return fail(L4sStatus::NullPointer, "scenario is null");
        };
        let mut next = h.inner.clone();
        f(&mut next);
        match next.validate() {
            Ok(()) => {
                h.inner = next;
                L4sStatus::Ok
            }
            Err(e) => fail(L4sStatus::InvalidScenario, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn l4s_scenario_set_duration_ms(s: *mut L4sScenario, ms: u64) -> L4sStatus {
    edit(s, |sc| sc.duration = SimTime::from_millis(ms))
}

/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn l4s_scenario_set_base_rtt_us(s: *mut L4sScenario, us: u64) -> L4sStatus {
    edit(s, |sc| sc.base_rtt = SimTime::from_micros(us))
}

/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn l4s_scenario_set_bottleneck_bps(s: *mut L4sScenario, bps: u64) -> L4sStatus {
    edit(s, |sc| sc.bottleneck_rate = bps)
}

/// Step-marking threshold of the FIFO and FQ ECN queues.
///
/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn l4s_scenario_set_ecn_threshold_us(s: *mut L4sScenario, us: u64) -> L4sStatus {
    edit(s, |sc| sc.queue.ecn_threshold = SimTime::from_micros(us))
}

/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn l4s_scenario_set_fallback_force(s: *mut L4sScenario, force: L4sFallbackForce) -> L4sStatus {
    edit(s, |sc| {
        sc.fallback_forced = match force {
            L4sFallbackForce::Auto => None,
            L4sFallbackForce::L4s => Some(QueueClass::L4sQueue),
            L4sFallbackForce::Classic => Some(QueueClass::ClassicQueue),
        }
    })
}

/// Writes the scenario's id string into `buf`.
///
/// # Safety
/// `s` must be a live handle; `buf` must be null or hold `len` bytes;
/// `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn l4s_scenario_id(s: *const L4sScenario, buf: *mut c_char, len: usize, needed: *mut usize) -> L4sStatus {
    guard(|| match s.as_ref() {
        Some(h) => write_str(&h.inner.id(), buf, len, needed),
        None => fail(L4sStatus::NullPointer, "scenario is null"),
    })
}

/// Runs one seeded trial. Identical (scenario, seed) pairs give identical
/// results.
///
/// # Safety
/// `s` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn l4s_run_trial(s: *const L4sScenario, seed: u64, out: *mut *mut L4sTrial) -> L4sStatus {
    guard(|| {
        if out.is_null() {
            return fail(L4sStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(h) = s.as_ref() else {
            return fail(L4sStatus::NullPointer, "scenario is null");
        };
        match run_trial(&h.inner, seed) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(L4sTrial { inner: r }));
                L4sStatus::Ok
            }
            Err(e) => fail(L4sStatus::SimulationFailed, e.to_string()),
        }
    })
}

/// # Safety
/// `t` must be null or a handle from [`l4s_run_trial`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn l4s_trial_free(t: *mut L4sTrial) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of flows in the trial (1 or 2); 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live trial handle.
#[no_mangle]
pub unsafe extern "C" fn l4s_trial_flow_count(t: *const L4sTrial) -> usize {
    t.as_ref().map_or(0, |h| h.inner.flows.len())
}

/// # Safety
/// `t` must be a live trial handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn l4s_trial_flow(t: *const L4sTrial, index: usize, out: *mut L4sFlowMetrics) -> L4sStatus {
    guard(|| {
        let (Some(h), Some(o)) = (t.as_ref(), out.as_mut()) else {
            return fail(L4sStatus::NullPointer, "trial or out is null");
        };
        match h.inner.flows.get(index) {
            Some(m) => {
                *o = m.into();
                L4sStatus::Ok
            }
            None => fail(L4sStatus::OutOfRange, format!("flow {index} of {}", h.inner.flows.len())),
        }
    })
}

/// Copies the calling thread's most recent error message into `buf`.
///
/// # Safety
/// `buf` must be null or hold `len` bytes; `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn l4s_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> L4sStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    copy_str(&msg, buf, len, needed)
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn l4s_status_str(status: L4sStatus) -> *const c_char {
    let s: &'static CStr = match status {
        L4sStatus::Ok => c"ok",
        L4sStatus::NullPointer => c"null pointer",
        L4sStatus::InvalidArgument => c"invalid argument",
        L4sStatus::InvalidScenario => c"invalid scenario",
        L4sStatus::SimulationFailed => c"simulation failed",
        L4sStatus::OutOfRange => c"index out of range",
        L4sStatus::BufferTooSmall => c"buffer too small",
        L4sStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Library version, NUL-terminated.
#[no_mangle]
pub extern "C" fn l4s_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
