//! C ABI for the spraygeo library.
//!
//! Handles are opaque pointers owned by Rust; every function returns an
//! [`SgStatus`] code and writes results through out-parameters. Strings
//! returned to the caller are NUL-terminated and must be released with
//! [`sg_string_free`]. The last error message is kept per thread and
//! retrieved with [`sg_last_error_message`].
//!
//! The header `include/spraygeo.h` is generated by cbindgen at build time.

use spraygeo::atlas::DoubleTangentVector;
use spraygeo::connection::ConnectionMap;
use spraygeo::error::Error;
use spraygeo::geodesic::{self, IntegrateOpts, Method};
use spraygeo::manifold::{resolve_manifold, Manifold, ManifoldDef};
use spraygeo::suite::{run_suite, Suite, SuiteOptions};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Status codes returned by every FFI entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    SgOk = 0,
    /// Bad definition file, unresolved reference, or invalid configuration.
    SgErrConfig = 1,
    /// Runtime evaluation failure (division by zero, domain error, ...).
    SgErrEval = 2,
    /// A verification check failed (suite reports carry the details).
    SgErrCheckFailed = 3,
    /// Null pointer, bad UTF-8, or otherwise invalid argument.
    SgErrInvalidArgument = 4,
    /// A panic was caught at the FFI boundary.
    SgErrPanic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(msg: &str) {
    let cleaned: Vec<u8> = msg.bytes().filter(|b| *b != 0).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn status_for(e: &Error) -> SgStatus {
    if e.is_config() {
        SgStatus::SgErrConfig
    } else {
        SgStatus::SgErrEval
    }
}

fn guard<F: FnOnce() -> SgStatus>(f: F) -> SgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("panic caught at FFI boundary");
            SgStatus::SgErrPanic
        }
    }
}

/// Opaque manifold handle.
pub struct SgManifold {
    inner: Manifold,
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, SgStatus> {
    if ptr.is_null() {
        set_last_error("null string argument");
        return Err(SgStatus::SgErrInvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error("string argument is not valid UTF-8");
        SgStatus::SgErrInvalidArgument
    })
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Result<&'a [f64], SgStatus> {
    if ptr.is_null() {
        set_last_error("null array argument");
        return Err(SgStatus::SgErrInvalidArgument);
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

fn hand_out_string(s: String, out: *mut *mut c_char) -> SgStatus {
    let cleaned: Vec<u8> = s.into_bytes().into_iter().filter(|b| *b != 0).collect();
    match CString::new(cleaned) {
        Ok(cs) => {
            unsafe { *out = cs.into_raw() };
            SgStatus::SgOk
        }
        Err(_) => {
            set_last_error("internal string contained NUL");
            SgStatus::SgErrInvalidArgument
        }
    }
}

/// Copy the last error message for this thread into `buf` (truncating), and
/// return its full length in bytes (excluding the terminator).
///
/// # Safety
/// `buf` must point to at least `len` writable bytes (or be null with
/// `len` 0 to query the length).
#[no_mangle]
pub unsafe extern "C" fn sg_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Load a manifold from the embedded catalog or a definition file path.
///
/// # Safety
/// `name_or_path` must be a valid NUL-terminated string; `out` must be a
/// valid location to store the handle. The handle must be released with
/// [`sg_manifold_free`].
#[no_mangle]
pub unsafe extern "C" fn sg_manifold_load(
    name_or_path: *const c_char,
    out: *mut *mut SgManifold,
) -> SgStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("null output handle");
            return SgStatus::SgErrInvalidArgument;
        }
        let name = match cstr(name_or_path) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match resolve_manifold(name).and_then(|def| def.instantiate()) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(SgManifold { inner: m }));
                SgStatus::SgOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                status_for(&e)
            }
        }
    })
}

/// Load a manifold from TOML text rather than a file.
///
/// # Safety
/// As for [`sg_manifold_load`].
#[no_mangle]
pub unsafe extern "C" fn sg_manifold_load_toml(
    toml_text: *const c_char,
    out: *mut *mut SgManifold,
) -> SgStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("null output handle");
            return SgStatus::SgErrInvalidArgument;
        }
        let text = match cstr(toml_text) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match ManifoldDef::from_toml(text).and_then(|def| def.instantiate()) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(SgManifold { inner: m }));
                SgStatus::SgOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                status_for(&e)
            }
        }
    })
}

/// Release a manifold handle.
///
/// # Safety
/// `handle` must come from a load function and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sg_manifold_free(handle: *mut SgManifold) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Chart dimension of the manifold at its instantiated level.
///
/// # Safety
/// `handle` must be a live manifold handle.
#[no_mangle]
pub unsafe extern "C" fn sg_manifold_dim(handle: *const SgManifold) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).inner.dim()
}

/// Run a verification suite; on success `report_json_out` receives the JSON
/// report (free with [`sg_string_free`]). Returns `SgErrCheckFailed` when
/// the suite ran but some check failed; the report is still written.
///
/// # Safety
/// `handle` must be live; `suite` a valid string; `report_json_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_run_suite(
    handle: *const SgManifold,
    suite: *const c_char,
    seed: u64,
    report_json_out: *mut *mut c_char,
) -> SgStatus {
    guard(|| {
        if handle.is_null() || report_json_out.is_null() {
            set_last_error("null argument");
            return SgStatus::SgErrInvalidArgument;
        }
        let suite_name = match cstr(suite) {
            Ok(s) => s,
            Err(st) => return st,
        };
        let suite: Suite = match suite_name.parse() {
            Ok(s) => s,
            Err(e) => {
                let e: Error = e;
                set_last_error(&e.to_string());
                return SgStatus::SgErrConfig;
            }
        };
        let opts = SuiteOptions {
            seed: Some(seed),
            ..Default::default()
        };
        let report = run_suite(&(*handle).inner, suite, &opts);
        let pass = report.overall_pass;
        let status = hand_out_string(report.to_json(), report_json_out);
        if status != SgStatus::SgOk {
            return status;
        }
        if pass {
            SgStatus::SgOk
        } else {
            set_last_error("one or more checks failed; see the report");
            SgStatus::SgErrCheckFailed
        }
    })
}

/// Evaluate the bilinear map B(x; u, v) on a chart. `out` receives `dim`
/// values.
///
/// # Safety
/// Arrays must hold `dim` elements; `chart` may be null for the first chart.
#[no_mangle]
pub unsafe extern "C" fn sg_bilinear_eval(
    handle: *const SgManifold,
    chart: *const c_char,
    x: *const f64,
    u: *const f64,
    v: *const f64,
    out: *mut f64,
) -> SgStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_last_error("null argument");
            return SgStatus::SgErrInvalidArgument;
        }
        let m = &(*handle).inner;
        let dim = m.dim();
        let chart_name = if chart.is_null() {
            m.atlas.charts[0].name.clone()
        } else {
            match cstr(chart) {
                Ok(s) => s.to_string(),
                Err(st) => return st,
            }
        };
        let (x, u, v) = match (slice_arg(x, dim), slice_arg(u, dim), slice_arg(v, dim)) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            _ => return SgStatus::SgErrInvalidArgument,
        };
        match m.bilinear.get(&chart_name).and_then(|b| b.eval(x, u, v)) {
            Ok(vals) => {
                ptr::copy_nonoverlapping(vals.as_ptr(), out, dim);
                SgStatus::SgOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                status_for(&e)
            }
        }
    })
}

/// Apply the connection map K(x, u, v, w) = (x, w − B(x; u, v)); `out`
/// receives `dim` values (the tangent part).
///
/// # Safety
/// As for [`sg_bilinear_eval`], with four input arrays.
#[no_mangle]
pub unsafe extern "C" fn sg_connection_map_eval(
    handle: *const SgManifold,
    chart: *const c_char,
    x: *const f64,
    u: *const f64,
    v: *const f64,
    w: *const f64,
    out: *mut f64,
) -> SgStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_last_error("null argument");
            return SgStatus::SgErrInvalidArgument;
        }
        let m = &(*handle).inner;
        let dim = m.dim();
        let chart_name = if chart.is_null() {
            m.atlas.charts[0].name.clone()
        } else {
            match cstr(chart) {
                Ok(s) => s.to_string(),
                Err(st) => return st,
            }
        };
        let (x, u, v, w) = match (
            slice_arg(x, dim),
            slice_arg(u, dim),
            slice_arg(v, dim),
            slice_arg(w, dim),
        ) {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => (a, b, c, d),
            _ => return SgStatus::SgErrInvalidArgument,
        };
        let run = || -> Result<Vec<f64>, Error> {
            let b = m.bilinear.get(&chart_name)?;
            let k = ConnectionMap::new(b.clone());
            let xi =
                DoubleTangentVector::new(x.to_vec(), u.to_vec(), v.to_vec(), w.to_vec())?;
            Ok(k.apply(&xi)?.1)
        };
        match run() {
            Ok(vals) => {
                ptr::copy_nonoverlapping(vals.as_ptr(), out, dim);
                SgStatus::SgOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                status_for(&e)
            }
        }
    })
}

/// Integrate a geodesic and return the trajectory as CSV text
/// (free with [`sg_string_free`]). `method` is "rk4" or "euler"; null means
/// rk4. `chart` may be null for the first chart.
///
/// # Safety
/// `x0`/`v0` must hold `dim` elements; `csv_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_geodesic_csv(
    handle: *const SgManifold,
    chart: *const c_char,
    x0: *const f64,
    v0: *const f64,
    t1: f64,
    step: f64,
    method: *const c_char,
    csv_out: *mut *mut c_char,
) -> SgStatus {
    guard(|| {
        if handle.is_null() || csv_out.is_null() {
            set_last_error("null argument");
            return SgStatus::SgErrInvalidArgument;
        }
        let m = &(*handle).inner;
        let dim = m.dim();
        let chart_name = if chart.is_null() {
            m.atlas.charts[0].name.clone()
        } else {
            match cstr(chart) {
                Ok(s) => s.to_string(),
                Err(st) => return st,
            }
        };
        let method = if method.is_null() {
            Method::Rk4
        } else {
            match cstr(method).map(|s| s.parse::<Method>()) {
                Ok(Ok(mth)) => mth,
                Ok(Err(e)) => {
                    set_last_error(&e.to_string());
                    return SgStatus::SgErrConfig;
                }
                Err(st) => return st,
            }
        };
        let (x0, v0) = match (slice_arg(x0, dim), slice_arg(v0, dim)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return SgStatus::SgErrInvalidArgument,
        };
        let opts = IntegrateOpts {
            method,
            ..IntegrateOpts::default()
        };
        let run = || -> Result<String, Error> {
            let traj =
                geodesic::integrate(&m.atlas, &m.bilinear, &chart_name, x0, v0, t1, step, opts)?;
            geodesic::trajectory_csv(&traj, m.metrics.as_ref())
        };
        match run() {
            Ok(csv) => hand_out_string(csv, csv_out),
            Err(e) => {
                set_last_error(&e.to_string());
                status_for(&e)
            }
        }
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn load_run_and_free() {
        let name = c("poly1");
        let mut handle: *mut SgManifold = ptr::null_mut();
        let st = unsafe { sg_manifold_load(name.as_ptr(), &mut handle) };
        assert_eq!(st, SgStatus::SgOk);
        assert_eq!(unsafe { sg_manifold_dim(handle) }, 1);

        let suite = c("spray");
        let mut report: *mut c_char = ptr::null_mut();
        let st = unsafe { sg_run_suite(handle, suite.as_ptr(), 42, &mut report) };
        assert_eq!(st, SgStatus::SgOk);
        let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap();
        assert!(text.contains("\"overall_pass\": true"));
        unsafe { sg_string_free(report) };

        let mut out = [0.0f64];
        let st = unsafe {
            sg_bilinear_eval(
                handle,
                ptr::null(),
                [0.5].as_ptr(),
                [2.0].as_ptr(),
                [3.0].as_ptr(),
                out.as_mut_ptr(),
            )
        };
        assert_eq!(st, SgStatus::SgOk);
        assert!((out[0] - 6.0).abs() < 1e-12);

        let mut kout = [0.0f64];
        let st = unsafe {
            sg_connection_map_eval(
                handle,
                ptr::null(),
                [0.5].as_ptr(),
                [2.0].as_ptr(),
                [3.0].as_ptr(),
                [10.0].as_ptr(),
                kout.as_mut_ptr(),
            )
        };
        assert_eq!(st, SgStatus::SgOk);
        assert!((kout[0] - 4.0).abs() < 1e-12);

        let mut csv: *mut c_char = ptr::null_mut();
        let st = unsafe {
            sg_geodesic_csv(
                handle,
                ptr::null(),
                [0.0].as_ptr(),
                [0.5].as_ptr(),
                0.5,
                1e-2,
                ptr::null(),
                &mut csv,
            )
        };
        assert_eq!(st, SgStatus::SgOk);
        let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap();
        assert!(text.starts_with("t,chart,x0,v0"));
        unsafe { sg_string_free(csv) };

        unsafe { sg_manifold_free(handle) };
    }

    #[test]
    fn unknown_manifold_reports_config_error() {
        let name = c("no-such-manifold");
        let mut handle: *mut SgManifold = ptr::null_mut();
        let st = unsafe { sg_manifold_load(name.as_ptr(), &mut handle) };
        assert_eq!(st, SgStatus::SgErrConfig);
        let mut buf = [0i8; 256];
        let n = unsafe { sg_last_error_message(buf.as_mut_ptr() as *mut c_char, buf.len()) };
        assert!(n > 0);
    }

    #[test]
    fn null_arguments_are_rejected() {
        let mut handle: *mut SgManifold = ptr::null_mut();
        let st = unsafe { sg_manifold_load(ptr::null(), &mut handle) };
        assert_eq!(st, SgStatus::SgErrInvalidArgument);
    }
}
