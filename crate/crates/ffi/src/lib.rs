//! C ABI for `pcn-rebalance`.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`PcnStatus`] and writes its result
//!   through an out-pointer. On failure the out-pointer is left untouched and
//!   [`pcn_last_error`] describes what went wrong on the calling thread.
//! * Handles (`PcnInstance`, `PcnReport`, `PcnDecomposition`, `PcnRun`) are
//!   opaque and owned by the caller, who releases them with the matching
//!   `*_free` function. Freeing `NULL` is a no-op.
//! * Strings passed in are NUL-terminated UTF-8. Strings handed out are
//!   allocated here and must be released with [`pcn_string_free`].
//! * Panics never cross the boundary; they surface as
//!   `PCN_STATUS_INTERNAL_ERROR`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pcn_rebalance::cycles::{decompose, Decomposition};
use pcn_rebalance::execution::AdversarySpec;
use pcn_rebalance::model::RebalancingInstance;
use pcn_rebalance::pipeline::{run_pipeline, verify_artifacts, PipelineError, RunConfig, RunOutput};
use pcn_rebalance::solver::{solve_rebalancing, SolveReport};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON or an argument the library rejects.
    InvalidInput = 3,
    /// A broken internal invariant or a caught panic.
    InternalError = 4,
}

/// A validated rebalancing instance.
pub struct PcnInstance {
    inner: RebalancingInstance,
}

/// Result of solving an instance.
pub struct PcnReport {
    inner: SolveReport,
}

/// Cycle decomposition of a solved circulation.
pub struct PcnDecomposition {
    inner: Decomposition,
}

/// All artifacts of a full pipeline run.
pub struct PcnRun {
    inner: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(text).expect("NULs removed")));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(PcnStatus, String);

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let status = if e.exit_code() == 2 { PcnStatus::InternalError } else { PcnStatus::InvalidInput };
        Failure(status, e.to_string())
    }
}

fn invalid(e: impl ToString) -> Failure {
    Failure(PcnStatus::InvalidInput, e.to_string())
}

/// Runs `body` with panic and error translation.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PcnStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PcnStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside pcn-rebalance");
            PcnStatus::InternalError
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PcnStatus::NullPointer, format!("{what} is NULL"))
}

/// # Safety
/// `p` must be NULL or a valid NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(PcnStatus::InvalidUtf8, format!("{what}: {e}")))
}

/// # Safety
/// `p` must be NULL or a valid NUL-terminated string.
unsafe fn read_opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        read_str(p, what).map(Some)
    }
}

/// # Safety
/// `p` must be NULL or point to a live `T`.
unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn out_ptr<T>(out: *mut *mut T) -> Result<*mut *mut T, Failure> {
    if out.is_null() {
        Err(null("out"))
    } else {
        Ok(out)
    }
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|e| Failure(PcnStatus::InternalError, e.to_string()))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pcn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pcn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn pcn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates an instance from JSON.
///
/// # Safety
/// `json` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcn_instance_from_json(json: *const c_char, out: *mut *mut PcnInstance) -> PcnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let text = read_str(json, "json")?;
        let inner = RebalancingInstance::from_json(text).map_err(invalid)?;
        *out = Box::into_raw(Box::new(PcnInstance { inner }));
        Ok(())
    })
}

/// # Safety
/// `instance` must be NULL or a handle from [`pcn_instance_from_json`].
#[no_mangle]
pub unsafe extern "C" fn pcn_instance_free(instance: *mut PcnInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of nodes; 0 for NULL.
///
/// # Safety
/// `instance` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcn_instance_node_count(instance: *const PcnInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.node_count())
}

/// Number of edges with positive capacity; 0 for NULL.
///
/// # Safety
/// `instance` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcn_instance_edge_count(instance: *const PcnInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.edge_count())
}

/// Solves for a max-weight circulation. A negative `iteration_bound` solves
/// to optimality; otherwise at most that many improving cycles are applied.
///
/// # Safety
/// `instance` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcn_solve(
    instance: *const PcnInstance,
    iteration_bound: i64,
    out: *mut *mut PcnReport,
) -> PcnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let instance = borrow(instance, "instance")?;
        let bound = usize::try_from(iteration_bound).ok();
        let inner = solve_rebalancing(&instance.inner, bound).map_err(|e| Failure(PcnStatus::InternalError, e.to_string()))?;
        *out = Box::into_raw(Box::new(PcnReport { inner }));
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a handle from [`pcn_solve`].
#[no_mangle]
pub unsafe extern "C" fn pcn_report_free(report: *mut PcnReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Objective `sum(w * f)`; 0 for NULL.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcn_report_objective(report: *const PcnReport) -> u64 {
    report.as_ref().map_or(0, |r| r.inner.objective)
}

/// Whether an iteration bound stopped the solve before optimality.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcn_report_terminated_early(report: *const PcnReport) -> bool {
    report.as_ref().is_some_and(|r| r.inner.terminated_early)
}

/// The circulation as JSON; free the result with [`pcn_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcn_report_circulation_json(report: *const PcnReport, out: *mut *mut c_char) -> PcnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let report = borrow(report, "report")?;
        *out = to_c_string(report.inner.circulation.to_json())?;
        Ok(())
    })
}

/// Splits the report's circulation into cycle flows.
///
/// # Safety
/// `report` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcn_decompose(report: *const PcnReport, out: *mut *mut PcnDecomposition) -> PcnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let report = borrow(report, "report")?;
        let inner = decompose(&report.inner.circulation).map_err(|e| Failure(PcnStatus::InternalError, e.to_string()))?;
        *out = Box::into_raw(Box::new(PcnDecomposition { inner }));
        Ok(())
    })
}

/// # Safety
/// `d` must be NULL or a handle from [`pcn_decompose`].
#[no_mangle]
pub unsafe extern "C" fn pcn_decomposition_free(d: *mut PcnDecomposition) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Number of cycles; 0 for NULL.
///
/// # Safety
/// `d` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcn_decomposition_cycle_count(d: *const PcnDecomposition) -> usize {
    d.as_ref().map_or(0, |d| d.inner.cycles.len())
}

/// The cycles as JSON; free the result with [`pcn_string_free`].
///
/// # Safety
/// `d` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcn_decomposition_json(d: *const PcnDecomposition, out: *mut *mut c_char) -> PcnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let d = borrow(d, "decomposition")?;
        *out = to_c_string(d.inner.to_json())?;
        Ok(())
    })
}

/// Graphviz rendering of the decomposition; free with [`pcn_string_free`].
///
/// # Safety
/// `d` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcn_decomposition_dot(d: *const PcnDecomposition, out: *mut *mut c_char) -> PcnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let d = borrow(d, "decomposition")?;
        *out = to_c_string(d.inner.to_dot())?;
        Ok(())
    })
}

/// Runs the full pipeline: solve (privately if `mpc`), decompose and execute
/// every cycle. `k` is the delegate count for the private solve, a negative
/// `iteration_bound` means no bound, and `adversary_json` may be NULL for an
/// all-honest run.
///
/// # Safety
/// `instance` must be a live handle, `adversary_json` NULL or a valid C
/// string, and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcn_run(
    instance: *const PcnInstance,
    seed: u64,
    mpc: bool,
    k: usize,
    iteration_bound: i64,
    adversary_json: *const c_char,
    out: *mut *mut PcnRun,
) -> PcnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let instance = borrow(instance, "instance")?;
        let adversary = match read_opt_str(adversary_json, "adversary_json")? {
            Some(text) => AdversarySpec::from_json(text).map_err(invalid)?,
            None => AdversarySpec::honest(),
        };
        let config = RunConfig { seed, mpc, k, iteration_bound: usize::try_from(iteration_bound).ok(), adversary };
        let inner = run_pipeline(&instance.inner, &config)?;
        *out = Box::into_raw(Box::new(PcnRun { inner }));
        Ok(())
    })
}

/// # Safety
/// `run` must be NULL or a handle from [`pcn_run`].
#[no_mangle]
pub unsafe extern "C" fn pcn_run_free(run: *mut PcnRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Objective of the run's circulation; 0 for NULL.
///
/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcn_run_objective(run: *const PcnRun) -> u64 {
    run.as_ref().map_or(0, |r| r.inner.report.objective)
}

/// Contents of one artifact by file name, e.g. `"ledger.json"`. Unknown
/// names (including `"transcript.txt"` on a plaintext run) are
/// `PCN_STATUS_INVALID_INPUT`.
///
/// # Safety
/// `run` must be a live handle, `name` a valid C string and `out` a writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pcn_run_artifact(run: *const PcnRun, name: *const c_char, out: *mut *mut c_char) -> PcnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let run = borrow(run, "run")?;
        let name = read_str(name, "name")?;
        let text = run.inner.artifacts.get(name).ok_or_else(|| invalid(format!("no artifact named {name}")))?;
        *out = to_c_string(text.clone())?;
        Ok(())
    })
}

/// Re-validates run artifacts. `decomposition_json` and `ledger_json` may be
/// NULL. Writes whether all checks passed to `ok` and, if `reasons` is not
/// NULL, a JSON array of failure reasons to free with [`pcn_string_free`].
///
/// # Safety
/// Pointers must be NULL where allowed, valid C strings otherwise; `ok` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn pcn_verify(
    instance: *const PcnInstance,
    circulation_json: *const c_char,
    decomposition_json: *const c_char,
    ledger_json: *const c_char,
    ok: *mut bool,
    reasons: *mut *mut c_char,
) -> PcnStatus {
    guard(|| {
        if ok.is_null() {
            return Err(null("ok"));
        }
        let instance = borrow(instance, "instance")?;
        let circulation = read_str(circulation_json, "circulation_json")?;
        let decomposition = read_opt_str(decomposition_json, "decomposition_json")?;
        let ledger = read_opt_str(ledger_json, "ledger_json")?;
        let verdict = verify_artifacts(&instance.inner, circulation, decomposition, ledger);
        if !reasons.is_null() {
            *reasons = to_c_string(serde_json::to_string(&verdict.reasons).expect("strings serialize"))?;
        }
        *ok = verdict.ok();
        Ok(())
    })
}
