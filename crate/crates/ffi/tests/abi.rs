use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use apconform_ffi::*;

fn last_error() -> String {
    let p = apc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn e2() -> *mut ApcSpace {
    let cells: Vec<CString> = ["cos(x2)", "sin(x2)", "-sin(x2)", "cos(x2)"]
        .iter()
        .map(|s| CString::new(*s).unwrap())
        .collect();
    let ptrs: Vec<*const c_char> = cells.iter().map(|c| c.as_ptr()).collect();
    let rho = CString::new("x1").unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { apc_space_new(2, ptrs.as_ptr(), rho.as_ptr(), &mut out) };
    assert_eq!(st, ApcStatus::Ok);
    out
}

fn eval(
    space: *const ApcSpace,
    name: &str,
    point: &[f64],
    transformed: bool,
) -> (ApcStatus, Vec<f64>) {
    let name = CString::new(name).unwrap();
    let mut buf = vec![0.0; 256];
    let mut written = 0;
    let st = unsafe {
        apc_eval_tensor(
            space,
            name.as_ptr(),
            point.as_ptr(),
            point.len(),
            transformed,
            buf.as_mut_ptr(),
            buf.len(),
            &mut written,
        )
    };
    buf.truncate(written);
    (st, buf)
}

#[test]
fn eval_through_handle() {
    let sp = e2();
    assert_eq!(unsafe { apc_space_dimension(sp) }, 2);
    let p = [0.0, std::f64::consts::FRAC_PI_4];
    let (st, c) = eval(sp, "C", &p, false);
    assert_eq!(st, ApcStatus::Ok);
    assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12);
    let (_, cb) = eval(sp, "C", &p, true);
    assert!((cb[0] - 2.0).abs() < 1e-12);
    let (st, t) = eval(sp, "T", &p, false);
    assert_eq!(st, ApcStatus::Ok);
    assert_eq!(t.len(), 8);
    assert!(t.iter().all(|x| x.abs() < 1e-12));
    unsafe { apc_space_free(sp) };
}

#[test]
fn error_codes() {
    let sp = e2();
    let (st, _) = eval(sp, "nope", &[0.0, 0.0], false);
    assert_eq!(st, ApcStatus::UnknownTensor);
    assert!(last_error().contains("nope"));

    let (st, _) = eval(sp, "C", &[0.0], false);
    assert_eq!(st, ApcStatus::Evaluation);

    let name = CString::new("K").unwrap();
    let mut small = [0.0; 4];
    let mut written = 0;
    let st = unsafe {
        apc_eval_tensor(
            sp,
            name.as_ptr(),
            [0.0, 0.0].as_ptr(),
            2,
            false,
            small.as_mut_ptr(),
            4,
            &mut written,
        )
    };
    assert_eq!(st, ApcStatus::BufferTooSmall);
    assert_eq!(written, 16);

    let st = unsafe {
        apc_eval_tensor(
            ptr::null(),
            name.as_ptr(),
            ptr::null(),
            0,
            false,
            ptr::null_mut(),
            0,
            ptr::null_mut(),
        )
    };
    assert_eq!(st, ApcStatus::NullPointer);
    unsafe { apc_space_free(sp) };
    unsafe { apc_space_free(ptr::null_mut()) };
}

#[test]
fn config_errors_are_reported() {
    let json = CString::new(r#"{"dimension": 1, "frame": [["1"]]}"#).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { apc_space_from_json(json.as_ptr(), &mut out) };
    assert_eq!(st, ApcStatus::Config);
    assert!(out.is_null());
    assert!(last_error().contains("dimension must be ≥ 2"));

    let bad = [0xffu8, 0];
    let st = unsafe { apc_space_from_json(bad.as_ptr() as *const c_char, &mut out) };
    assert_eq!(st, ApcStatus::InvalidUtf8);
}

#[test]
fn check_returns_json() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/configs/e1.json");
    let json = CString::new(std::fs::read_to_string(path).unwrap()).unwrap();
    let mut sp = ptr::null_mut();
    assert_eq!(
        unsafe { apc_space_from_json(json.as_ptr(), &mut sp) },
        ApcStatus::Ok
    );
    let mut report = ptr::null_mut();
    let mut pass = false;
    let st = unsafe { apc_check(sp, 42, 0, &mut report, &mut pass) };
    assert_eq!(st, ApcStatus::Ok);
    assert!(pass);
    let text = unsafe { CStr::from_ptr(report) }
        .to_str()
        .unwrap()
        .to_string();
    assert!(text.contains("\"all_pass\": true"));
    assert!(text.contains("diagonal exponential frame"));
    unsafe {
        apc_string_free(report);
        apc_space_free(sp);
    }
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let lib = target_dir().join("libapconform_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!(
            "skipping: no C compiler or static library at {}",
            lib.display()
        );
        return;
    }
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(crate_dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
