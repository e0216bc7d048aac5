//! C ABI for the apconform engine.
//!
//! Spaces are opaque handles created from a JSON configuration (the same
//! schema the command line reads) or from explicit frame strings. Every call
//! returns an [`ApcStatus`]; on failure [`apc_last_error`] describes what went
//! wrong on the calling thread. Strings handed out by the library must be
//! released with [`apc_string_free`], handles with [`apc_space_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use apconform::cli::{SpaceConfig, TensorName};
use apconform::{transform_frame, ApSpace, ConformalFactor, PointGeometry};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Evaluation = 4,
    UnknownTensor = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque handle to a validated space configuration.
pub struct ApcSpace {
    config: SpaceConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: ApcStatus, msg: impl Into<String>) -> ApcStatus {
    set_error(msg);
    status
}

fn guarded(f: impl FnOnce() -> ApcStatus) -> ApcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(ApcStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, ApcStatus> {
    if p.is_null() {
        return Err(fail(ApcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ApcStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn apc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a space from a JSON configuration document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn apc_space_from_json(
    json: *const c_char,
    out: *mut *mut ApcSpace,
) -> ApcStatus {
    guarded(|| {
        if out.is_null() {
            return fail(ApcStatus::NullPointer, "out is null");
        }
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match SpaceConfig::from_json(text, "<json>") {
            Ok(config) => {
                *out = Box::into_raw(Box::new(ApcSpace { config }));
                ApcStatus::Ok
            }
            Err(e) => fail(ApcStatus::Config, e.to_string()),
        }
    })
}

/// Builds a space from `dimension`² frame expressions in row-major order
/// (row i holds the components of the i-th frame vector) and a conformal
/// factor expression.
///
/// # Safety
/// `frame` must point to `dimension * dimension` NUL-terminated strings,
/// `rho` must be NUL-terminated, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn apc_space_new(
    dimension: usize,
    frame: *const *const c_char,
    rho: *const c_char,
    out: *mut *mut ApcSpace,
) -> ApcStatus {
    guarded(|| {
        if out.is_null() || frame.is_null() {
            return fail(ApcStatus::NullPointer, "frame or out is null");
        }
        let rho = match read_str(rho, "rho") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let mut rows = Vec::with_capacity(dimension);
        for i in 0..dimension {
            let mut row = Vec::with_capacity(dimension);
            for mu in 0..dimension {
                match read_str(*frame.add(i * dimension + mu), "frame entry") {
                    Ok(t) => row.push(t),
                    Err(s) => return s,
                }
            }
            rows.push(row);
        }
        let space = match ApSpace::parse(dimension, &rows) {
            Ok(sp) => sp,
            Err(e) => return fail(ApcStatus::Config, format!("frame: {e}")),
        };
        let rho = match ConformalFactor::parse(rho, dimension) {
            Ok(r) => r,
            Err(e) => return fail(ApcStatus::Config, format!("rho: {e}")),
        };
        *out = Box::into_raw(Box::new(ApcSpace {
            config: SpaceConfig::new(space, rho),
        }));
        ApcStatus::Ok
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `space` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn apc_space_free(space: *mut ApcSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Dimension of the space, or 0 for a null handle.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apc_space_dimension(space: *const ApcSpace) -> usize {
    space.as_ref().map_or(0, |s| s.config.space.dim())
}

/// Evaluates a named object (the `eval --tensor` names, e.g. "C", "T",
/// "conn-circ") at `point` and writes its components row-major into `out`.
/// `written` receives the component count; if `out_len` is too small the
/// call returns `BufferTooSmall` and only `written` is set.
///
/// # Safety
/// `point` must hold `point_len` doubles, `out` must hold `out_len`
/// doubles, and `name`/`written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn apc_eval_tensor(
    space: *const ApcSpace,
    name: *const c_char,
    point: *const f64,
    point_len: usize,
    transformed: bool,
    out: *mut f64,
    out_len: usize,
    written: *mut usize,
) -> ApcStatus {
    guarded(|| {
        let Some(space) = space.as_ref() else {
            return fail(ApcStatus::NullPointer, "space is null");
        };
        if point.is_null() || written.is_null() {
            return fail(ApcStatus::NullPointer, "point or written is null");
        }
        let name = match read_str(name, "name") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let tensor: TensorName = match name.parse() {
            Ok(t) => t,
            Err(e) => return fail(ApcStatus::UnknownTensor, e),
        };
        let cfg = &space.config;
        let coords = std::slice::from_raw_parts(point, point_len);
        let target = if transformed {
            transform_frame(&cfg.space, &cfg.rho)
        } else {
            cfg.space.clone()
        };
        let geometry = match PointGeometry::compute(&target, coords, cfg.suite.conventions) {
            Ok(g) => g,
            Err(e) => return fail(ApcStatus::Evaluation, e.to_string()),
        };
        let values = tensor.select(&geometry);
        let comps = values.components();
        *written = comps.len();
        if out_len < comps.len() {
            return fail(
                ApcStatus::BufferTooSmall,
                format!("need {} doubles, got {out_len}", comps.len()),
            );
        }
        if out.is_null() {
            return fail(ApcStatus::NullPointer, "out is null");
        }
        ptr::copy_nonoverlapping(comps.as_ptr(), out, comps.len());
        ApcStatus::Ok
    })
}

/// Runs the verification suite. `report_json` receives a JSON report to be
/// released with [`apc_string_free`]; `all_pass` receives the overall flag.
/// A `points` of 0 keeps the configured sample count.
///
/// # Safety
/// `space` must be a live handle; `report_json` and `all_pass` writable.
#[no_mangle]
pub unsafe extern "C" fn apc_check(
    space: *const ApcSpace,
    seed: u64,
    points: usize,
    report_json: *mut *mut c_char,
    all_pass: *mut bool,
) -> ApcStatus {
    guarded(|| {
        let Some(space) = space.as_ref() else {
            return fail(ApcStatus::NullPointer, "space is null");
        };
        if report_json.is_null() || all_pass.is_null() {
            return fail(ApcStatus::NullPointer, "report_json or all_pass is null");
        }
        let mut cfg = space.config.clone();
        cfg.suite.seed = seed;
        if points > 0 {
            cfg.suite.points = points;
        }
        match cfg.run() {
            Ok(report) => {
                *all_pass = report.all_pass;
                *report_json = CString::new(report.to_json())
                    .expect("JSON has no NUL")
                    .into_raw();
                ApcStatus::Ok
            }
            Err(e) => fail(ApcStatus::Evaluation, e.to_string()),
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn apc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
