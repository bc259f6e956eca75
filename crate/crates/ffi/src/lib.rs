//! C ABI over the `ris-isac` solver.
//!
//! Scenarios and reports are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Every entry point returns a
//! [`RisIsacStatus`]; on failure a human-readable message is available from
//! [`ris_isac_last_error_message`] on the same thread. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ris_isac::driver::{channels_for_seed, run_scheme, AoOptions, Scheme};
use ris_isac::output::report_json;
use ris_isac::scenario::{load_scenario, preset, Preset, ScenarioConfig};
use ris_isac::{RunReport, StopReason};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RisIsacStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The thresholds cannot be met; a report is still produced.
    Infeasible = 3,
    /// A solver failed numerically; a report with the last consistent iterate
    /// may still be produced.
    Numerical = 4,
    Panic = 5,
    /// The caller's buffer is smaller than the value written to `needed`.
    BufferTooSmall = 6,
}

pub const RIS_ISAC_PRESET_TABLE1: u32 = 0;
pub const RIS_ISAC_PRESET_DESK: u32 = 1;

pub const RIS_ISAC_SCHEME_PROPOSED: u32 = 0;
pub const RIS_ISAC_SCHEME_NO_RIS: u32 = 1;
pub const RIS_ISAC_SCHEME_RANDOM_PHASE: u32 = 2;

/// Opaque scenario handle.
pub struct RisIsacScenario {
    cfg: ScenarioConfig,
}

/// Opaque run report handle.
pub struct RisIsacReport {
    cfg: ScenarioConfig,
    report: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: RisIsacStatus, msg: impl Into<String>) -> RisIsacStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> RisIsacStatus) -> RisIsacStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(RisIsacStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

fn scheme_from(code: u32) -> Option<Scheme> {
    match code {
        RIS_ISAC_SCHEME_PROPOSED => Some(Scheme::Proposed),
        RIS_ISAC_SCHEME_NO_RIS => Some(Scheme::NoRis),
        RIS_ISAC_SCHEME_RANDOM_PHASE => Some(Scheme::RandomPhase),
        _ => None,
    }
}

unsafe fn emit<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Copies `src` into `buf` when `cap` allows; always reports the length.
unsafe fn copy_out<T: Copy>(
    src: &[T],
    buf: *mut T,
    cap: usize,
    needed: *mut usize,
) -> RisIsacStatus {
    if !needed.is_null() {
        *needed = src.len();
    }
    if cap < src.len() {
        return fail(
            RisIsacStatus::BufferTooSmall,
            format!("buffer holds {cap}, need {}", src.len()),
        );
    }
    if !src.is_empty() {
        if buf.is_null() {
            return fail(RisIsacStatus::NullPointer, "buf is null");
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    RisIsacStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ris_isac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next call into the library on this
/// thread.
#[no_mangle]
pub extern "C" fn ris_isac_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a named preset scenario with the given base RNG seed.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_scenario_from_preset(
    preset_code: u32,
    rng_seed: u64,
    out: *mut *mut RisIsacScenario,
) -> RisIsacStatus {
    guard(|| {
        if out.is_null() {
            return fail(RisIsacStatus::NullPointer, "out is null");
        }
        let p = match preset_code {
            RIS_ISAC_PRESET_TABLE1 => Preset::Table1,
            RIS_ISAC_PRESET_DESK => Preset::Desk,
            other => {
                return fail(
                    RisIsacStatus::InvalidArgument,
                    format!("unknown preset code {other}"),
                )
            }
        };
        emit(
            out,
            RisIsacScenario {
                cfg: preset(p, rng_seed),
            },
        );
        RisIsacStatus::Ok
    })
}

/// Parses a scenario document (UTF-8 JSON).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_scenario_from_json(
    json: *const c_char,
    out: *mut *mut RisIsacScenario,
) -> RisIsacStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(RisIsacStatus::NullPointer, "json or out is null");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(RisIsacStatus::InvalidArgument, "scenario is not UTF-8");
        };
        match load_scenario(text) {
            Ok(cfg) => {
                emit(out, RisIsacScenario { cfg });
                RisIsacStatus::Ok
            }
            Err(e) => fail(RisIsacStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Replaces the rate (bps/Hz) and sensing SNR (dB) thresholds. The scenario
/// is left unchanged when the new values are invalid.
///
/// # Safety
/// `scenario` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_scenario_set_thresholds(
    scenario: *mut RisIsacScenario,
    r_req_bps_hz: f64,
    gamma_req_db: f64,
) -> RisIsacStatus {
    guard(|| {
        let Some(s) = scenario.as_mut() else {
            return fail(RisIsacStatus::NullPointer, "scenario is null");
        };
        let mut cfg = s.cfg.clone();
        cfg.r_req_bps_hz = r_req_bps_hz;
        cfg.gamma_req_db = gamma_req_db;
        match cfg.validate() {
            Ok(()) => {
                s.cfg = cfg;
                RisIsacStatus::Ok
            }
            Err(e) => fail(RisIsacStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_scenario_free(scenario: *mut RisIsacScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs one scheme with default iteration settings. See [`ris_isac_run_with`].
///
/// # Safety
/// Same as [`ris_isac_run_with`].
#[no_mangle]
pub unsafe extern "C" fn ris_isac_run(
    scenario: *const RisIsacScenario,
    scheme: u32,
    seed: u64,
    out_report: *mut *mut RisIsacReport,
) -> RisIsacStatus {
    let d = AoOptions::default();
    ris_isac_run_with(
        scenario,
        scheme,
        seed,
        d.epsilon,
        d.max_iter as u32,
        out_report,
    )
}

/// Runs one scheme on the channel realization for `seed`.
///
/// On `OK`, `INFEASIBLE` and `NUMERICAL` with a recoverable iterate,
/// `*out_report` receives a report handle; otherwise it is set to null.
///
/// # Safety
/// `scenario` must be a live handle; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_run_with(
    scenario: *const RisIsacScenario,
    scheme: u32,
    seed: u64,
    epsilon: f64,
    max_iter: u32,
    out_report: *mut *mut RisIsacReport,
) -> RisIsacStatus {
    guard(|| {
        if out_report.is_null() {
            return fail(RisIsacStatus::NullPointer, "out_report is null");
        }
        *out_report = ptr::null_mut();
        let Some(s) = scenario.as_ref() else {
            return fail(RisIsacStatus::NullPointer, "scenario is null");
        };
        let Some(scheme) = scheme_from(scheme) else {
            return fail(
                RisIsacStatus::InvalidArgument,
                format!("unknown scheme code {scheme}"),
            );
        };
        if !(epsilon.is_finite() && epsilon > 0.0) || max_iter == 0 {
            return fail(
                RisIsacStatus::InvalidArgument,
                "epsilon must be positive and max_iter at least 1",
            );
        }
        let opts = AoOptions {
            epsilon,
            max_iter: max_iter as usize,
            ..AoOptions::default()
        };
        let result = channels_for_seed(&s.cfg, seed)
            .and_then(|ch| run_scheme(&s.cfg, &ch, scheme, &opts, seed));
        let report = match result {
            Ok(r) => r,
            Err(e) => {
                let status = if e.is_numerical() {
                    RisIsacStatus::Numerical
                } else {
                    RisIsacStatus::InvalidArgument
                };
                return fail(status, e.to_string());
            }
        };
        let status = match report.stop_reason {
            StopReason::InfeasibleFirstStep => fail(
                RisIsacStatus::Infeasible,
                report
                    .failure
                    .clone()
                    .unwrap_or_else(|| "infeasible".into()),
            ),
            StopReason::SolverFailure => fail(
                RisIsacStatus::Numerical,
                report
                    .failure
                    .clone()
                    .unwrap_or_else(|| "solver failure".into()),
            ),
            _ => RisIsacStatus::Ok,
        };
        emit(
            out_report,
            RisIsacReport {
                cfg: s.cfg.clone(),
                report,
            },
        );
        status
    })
}

/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_report_free(report: *mut RisIsacReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Final total transmit power in watts; NaN for infeasible runs or a null
/// handle.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_report_final_power(report: *const RisIsacReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.final_power())
}

/// Number of beamforming solves performed; 0 for a null handle.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_report_iterations(report: *const RisIsacReport) -> u32 {
    report.as_ref().map_or(0, |r| r.report.iterations as u32)
}

/// Stop reason as a static string such as `"converged"`; null for a null
/// handle.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_report_stop_reason(
    report: *const RisIsacReport,
) -> *const c_char {
    let Some(r) = report.as_ref() else {
        return ptr::null();
    };
    let s: &'static CStr = match r.report.stop_reason {
        StopReason::Converged => c"converged",
        StopReason::MaxIterations => c"max-iterations",
        StopReason::InfeasibleFirstStep => c"infeasible",
        StopReason::SolverFailure => c"solver-failure",
        StopReason::SingleSolve => c"single-solve",
    };
    s.as_ptr()
}

/// Worst rate margin (relative) and worst sensing SNR margin (dB) of the
/// final iterate.
///
/// # Safety
/// `report` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_report_margins(
    report: *const RisIsacReport,
    min_se_margin: *mut f64,
    min_snr_margin_db: *mut f64,
) -> RisIsacStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(RisIsacStatus::NullPointer, "report is null");
        };
        if min_se_margin.is_null() || min_snr_margin_db.is_null() {
            return fail(RisIsacStatus::NullPointer, "output pointer is null");
        }
        *min_se_margin = r.report.metrics.min_se_margin;
        *min_snr_margin_db = r.report.metrics.min_snr_margin_db;
        RisIsacStatus::Ok
    })
}

/// Copies the per-iteration power history (W). `*needed` receives the
/// length; pass `cap = 0` to query it.
///
/// # Safety
/// `buf` must hold `cap` doubles; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_report_power_history(
    report: *const RisIsacReport,
    buf: *mut f64,
    cap: usize,
    needed: *mut usize,
) -> RisIsacStatus {
    guard(|| match report.as_ref() {
        Some(r) => copy_out(&r.report.power_history, buf, cap, needed),
        None => fail(RisIsacStatus::NullPointer, "report is null"),
    })
}

/// Copies the final RIS phases in radians, in `[0, 2π)`. The no-RIS scheme
/// reports all zeros. Buffer semantics as in [`ris_isac_report_power_history`].
///
/// # Safety
/// `buf` must hold `cap` doubles; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_report_phases(
    report: *const RisIsacReport,
    buf: *mut f64,
    cap: usize,
    needed: *mut usize,
) -> RisIsacStatus {
    guard(|| match report.as_ref() {
        Some(r) => copy_out(&r.report.phases.phases(), buf, cap, needed),
        None => fail(RisIsacStatus::NullPointer, "report is null"),
    })
}

/// Writes the full report as a NUL-terminated JSON document. `*needed`
/// receives the size including the terminator.
///
/// # Safety
/// `buf` must hold `cap` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn ris_isac_report_json(
    report: *const RisIsacReport,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> RisIsacStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(RisIsacStatus::NullPointer, "report is null");
        };
        let mut bytes = report_json(&r.cfg, &r.report).to_string().into_bytes();
        bytes.push(0);
        copy_out(&bytes, buf.cast::<u8>(), cap, needed)
    })
}
