//! C ABI for the superoptimal approximation solver.
//!
//! All functions are re-entrant. Handles returned by `superopt_solve_json`
//! must be released with `superopt_report_free`; strings returned by
//! `superopt_report_json` and `superopt_last_error` borrow the handle and
//! stay valid until it is freed.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use superopt::report::{self, RunConfig};
use superopt::solver::SolverConfig;
use superopt::SuperoptError;

/// Status codes returned by the solver entry points.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperoptStatus {
    Ok = 0,
    InvalidArgument = 1,
    ParseError = 2,
    HypothesisFailed = 3,
    NumericalFailure = 4,
}

pub struct SuperoptReport {
    json: CString,
    error: CString,
    status: SuperoptStatus,
}

fn status_of(err: &SuperoptError) -> SuperoptStatus {
    match report::exit_code_for(err) {
        1 => SuperoptStatus::ParseError,
        2 => SuperoptStatus::HypothesisFailed,
        _ => SuperoptStatus::NumericalFailure,
    }
}

fn lossy_cstring(s: String) -> CString {
    CString::new(s.replace('\0', " ")).unwrap_or_default()
}

/// Library version as a static string, e.g. "0.1.0".
#[no_mangle]
pub extern "C" fn superopt_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Solve a symbol given as input JSON and return a report handle.
///
/// `input_json` is the same document the CLI accepts. `seed` fixes the
/// search; `grid_size` of 0 selects the grid automatically. The returned
/// handle is non-null even on failure (query it for the status and error
/// message) and null only if `input_json` is null or not UTF-8.
#[no_mangle]
pub extern "C" fn superopt_solve_json(
    input_json: *const c_char,
    seed: u64,
    grid_size: usize,
) -> *mut SuperoptReport {
    if input_json.is_null() {
        return ptr::null_mut();
    }
    let text = match unsafe { CStr::from_ptr(input_json) }.to_str() {
        Ok(t) => t,
        Err(_) => return ptr::null_mut(),
    };
    let boxed = |status, json: String, error: String| {
        Box::into_raw(Box::new(SuperoptReport {
            json: lossy_cstring(json),
            error: lossy_cstring(error),
            status,
        }))
    };
    let parsed: report::SymbolInput = match serde_json::from_str(text) {
        Ok(p) => p,
        Err(e) => {
            return boxed(
                SuperoptStatus::ParseError,
                String::new(),
                format!("invalid input JSON: {e}"),
            )
        }
    };
    let sym = match report::symbol_from_input(&parsed) {
        Ok(s) => s,
        Err(e) => return boxed(SuperoptStatus::ParseError, String::new(), e.to_string()),
    };
    let cfg = RunConfig {
        solver: SolverConfig {
            seed,
            grid_size,
            ..SolverConfig::default()
        },
        ..RunConfig::default()
    };
    match report::build_report(&sym, &cfg) {
        Ok((rep, _)) => match report::to_json(&rep) {
            Ok(json) => boxed(SuperoptStatus::Ok, json, String::new()),
            Err(e) => boxed(SuperoptStatus::NumericalFailure, String::new(), e.to_string()),
        },
        Err(e) => boxed(status_of(&e), String::new(), e.to_string()),
    }
}

/// Status of a report handle. Null handles report InvalidArgument.
#[no_mangle]
pub extern "C" fn superopt_report_status(report: *const SuperoptReport) -> SuperoptStatus {
    if report.is_null() {
        return SuperoptStatus::InvalidArgument;
    }
    unsafe { &*report }.status
}

/// Report JSON, or an empty string when the solve failed. Borrowed from the
/// handle; do not free.
#[no_mangle]
pub extern "C" fn superopt_report_json(report: *const SuperoptReport) -> *const c_char {
    if report.is_null() {
        return ptr::null();
    }
    unsafe { &*report }.json.as_ptr()
}

/// Error message for a failed solve, empty on success. Borrowed from the
/// handle; do not free.
#[no_mangle]
pub extern "C" fn superopt_last_error(report: *const SuperoptReport) -> *const c_char {
    if report.is_null() {
        return ptr::null();
    }
    unsafe { &*report }.error.as_ptr()
}

/// Release a report handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn superopt_report_free(report: *mut SuperoptReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(input: &str) -> *mut SuperoptReport {
        let c = CString::new(input).unwrap();
        superopt_solve_json(c.as_ptr(), 0, 0)
    }

    #[test]
    fn version_is_nonempty() {
        let v = unsafe { CStr::from_ptr(superopt_version()) };
        assert!(!v.to_str().unwrap().is_empty());
    }

    #[test]
    fn solve_roundtrip() {
        let h = solve(
            r#"{"partition":{"m1":2,"m2":0,"n1":2,"n2":0},
                "coeffs":[{"k":-1,"re":[[1.0,0.0],[0.0,0.5]],
                           "im":[[0.0,0.0],[0.0,0.0]]}]}"#,
        );
        assert!(!h.is_null());
        assert_eq!(superopt_report_status(h), SuperoptStatus::Ok);
        let json = unsafe { CStr::from_ptr(superopt_report_json(h)) }
            .to_str()
            .unwrap();
        let v: serde_json::Value = serde_json::from_str(json).unwrap();
        assert_eq!(v["schema"], "superopt-report/1");
        let t0 = v["t_seq"][0].as_f64().unwrap();
        assert!((t0 - 1.0).abs() < 1e-8);
        superopt_report_free(h);
    }

    #[test]
    fn parse_error_status() {
        let h = solve("{not json");
        assert!(!h.is_null());
        assert_eq!(superopt_report_status(h), SuperoptStatus::ParseError);
        let msg = unsafe { CStr::from_ptr(superopt_last_error(h)) }
            .to_str()
            .unwrap();
        assert!(msg.contains("invalid input JSON"));
        superopt_report_free(h);
    }

    #[test]
    fn null_safety() {
        assert!(superopt_solve_json(ptr::null(), 0, 0).is_null());
        assert_eq!(
            superopt_report_status(ptr::null()),
            SuperoptStatus::InvalidArgument
        );
        assert!(superopt_report_json(ptr::null()).is_null());
        superopt_report_free(ptr::null_mut());
    }
}
