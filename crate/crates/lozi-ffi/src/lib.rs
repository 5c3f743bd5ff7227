//! C ABI over the lozi-core run surface.
//!
//! A run is configured by the same JSON the command-line tool's
//! `RunConfig` serializes to, and produces an opaque report handle
//! carrying a status code and a JSON report body. Handles own their
//! memory and must be released with `lozi_report_free`. The generated
//! header lives in `include/lozi.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lozi_core::cli::{exit_code, run, RunConfig};

/// The run completed and certified its claim, or finished its
/// numerical evidence.
pub const LOZI_OK: i32 = 0;
/// The configuration was unusable: malformed JSON, bad parameters, or
/// an input the command refuses.
pub const LOZI_USAGE: i32 = 1;
/// The run completed and certifiably refuted an asserted property.
pub const LOZI_REFUTED: i32 = 2;
/// The run could not decide: an exactness guard reported an
/// indeterminate verdict.
pub const LOZI_INDETERMINATE: i32 = 3;
/// A panic was caught at the boundary; no report was produced.
pub const LOZI_PANIC: i32 = 4;
/// A required pointer argument was null.
pub const LOZI_NULL_ARGUMENT: i32 = 5;

/// Opaque result of one run: a status code and a JSON report.
pub struct LoziReport {
    status: i32,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg)
        .unwrap_or_else(|_| CString::new("error text contained a NUL byte").expect("static text"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Run a command described by a `RunConfig` JSON document.
///
/// When a report is produced (certified, refuted, or indeterminate
/// outcomes) it is stored in `out_report` and the return value equals
/// its status. Otherwise `out_report` is left null, the return value
/// names the failure class, and `lozi_last_error` describes it.
///
/// # Safety
///
/// `config_json` must be null or point to a NUL-terminated string, and
/// `out_report` must be null or point to writable memory for one
/// pointer. Null arguments are rejected with `LOZI_NULL_ARGUMENT`.
#[no_mangle]
pub unsafe extern "C" fn lozi_run_json(
    config_json: *const c_char,
    out_report: *mut *mut LoziReport,
) -> i32 {
    clear_last_error();
    if out_report.is_null() {
        set_last_error("out_report must not be null".into());
        return LOZI_NULL_ARGUMENT;
    }
    *out_report = ptr::null_mut();
    if config_json.is_null() {
        set_last_error("config_json must not be null".into());
        return LOZI_NULL_ARGUMENT;
    }
    let text = match CStr::from_ptr(config_json).to_str() {
        Ok(t) => t.to_owned(),
        Err(_) => {
            set_last_error("config_json is not valid UTF-8".into());
            return LOZI_USAGE;
        }
    };
    let outcome = catch_unwind(AssertUnwindSafe(
        || -> Result<(i32, CString), (i32, String)> {
            let config: RunConfig =
                serde_json::from_str(&text).map_err(|e| (LOZI_USAGE, format!("config: {e}")))?;
            let out = run(&config).map_err(|e| (i32::from(exit_code(&e)), e.to_string()))?;
            let json = CString::new(out.report.to_json_pretty())
                .expect("report JSON never contains NUL bytes");
            Ok((i32::from(out.exit), json))
        },
    ));
    match outcome {
        Ok(Ok((status, json))) => {
            *out_report = Box::into_raw(Box::new(LoziReport { status, json }));
            status
        }
        Ok(Err((code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(_) => {
            set_last_error("panic caught at the C boundary".into());
            LOZI_PANIC
        }
    }
}

/// Status of a report handle: 0 certified, 2 refuted, 3 indeterminate.
/// Null handles report `LOZI_NULL_ARGUMENT`.
///
/// # Safety
///
/// `report` must be null or a live handle from `lozi_run_json`.
#[no_mangle]
pub unsafe extern "C" fn lozi_report_status(report: *const LoziReport) -> i32 {
    match report.as_ref() {
        Some(r) => r.status,
        None => LOZI_NULL_ARGUMENT,
    }
}

/// NUL-terminated report JSON, owned by the handle and valid until
/// `lozi_report_free`. Null for a null handle.
///
/// # Safety
///
/// `report` must be null or a live handle from `lozi_run_json`.
#[no_mangle]
pub unsafe extern "C" fn lozi_report_json(report: *const LoziReport) -> *const c_char {
    match report.as_ref() {
        Some(r) => r.json.as_ptr(),
        None => ptr::null(),
    }
}

/// Release a report handle. Null is a no-op.
///
/// # Safety
///
/// `report` must be null or a live handle from `lozi_run_json`; the
/// handle and its JSON pointer are invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn lozi_report_free(report: *mut LoziReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// The most recent error message on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn lozi_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lozi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
