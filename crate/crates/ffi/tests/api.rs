use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use selfsim_ffi::*;

fn problem(m: f64, p: f64, sigma: f64, n: u32) -> *mut SelfsimProblem {
    let mut pb = ptr::null_mut();
    assert_eq!(unsafe { selfsim_problem_new(m, p, sigma, n, false, &mut pb) }, SelfsimStatus::Ok);
    pb
}

fn last_error() -> String {
    let p = selfsim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn exponents_through_handle() {
    let pb = problem(3.0, 1.5, -1.5, 3);
    let mut ex = std::mem::MaybeUninit::<SelfsimExponents>::uninit();
    assert_eq!(unsafe { selfsim_problem_exponents(pb, ex.as_mut_ptr()) }, SelfsimStatus::Ok);
    let ex = unsafe { ex.assume_init() };
    assert!((ex.alpha - 0.25).abs() < 1e-12);
    assert!((ex.beta - 0.75).abs() < 1e-12);
    assert!((ex.p_c - 2.5).abs() < 1e-12);
    assert!(ex.uniqueness_guaranteed);
    unsafe { selfsim_problem_free(pb) };
}

#[test]
fn invalid_parameters_set_the_error() {
    let mut pb = ptr::null_mut();
    let st = unsafe { selfsim_problem_new(3.0, 1.9, -0.7, 3, false, &mut pb) };
    assert_eq!(st, SelfsimStatus::Validation);
    assert!(pb.is_null());
    assert!(last_error().contains("p_c"));
    // A successful call clears it.
    let pb = problem(3.0, 1.2, -0.7, 3);
    assert!(selfsim_last_error().is_null());
    unsafe { selfsim_problem_free(pb) };
}

#[test]
fn null_pointers_are_reported() {
    let st = unsafe { selfsim_problem_new(3.0, 1.2, -0.7, 3, false, ptr::null_mut()) };
    assert_eq!(st, SelfsimStatus::NullPointer);
    let mut shot = ptr::null_mut();
    assert_eq!(
        unsafe { selfsim_shoot(ptr::null(), 1.0, ptr::null(), &mut shot) },
        SelfsimStatus::NullPointer
    );
    unsafe {
        selfsim_problem_free(ptr::null_mut());
        selfsim_shot_free(ptr::null_mut());
        selfsim_string_free(ptr::null_mut());
    }
}

#[test]
fn shot_summary_and_trace() {
    let pb = problem(3.0, 1.2, -0.7, 3);
    let mut shot = ptr::null_mut();
    assert_eq!(unsafe { selfsim_shoot(pb, 1e-3, ptr::null(), &mut shot) }, SelfsimStatus::Ok);
    let mut sum = std::mem::MaybeUninit::<SelfsimShotSummary>::uninit();
    assert_eq!(unsafe { selfsim_shot_summary(shot, sum.as_mut_ptr()) }, SelfsimStatus::Ok);
    let sum = unsafe { sum.assume_init() };
    assert_eq!(sum.kind, SelfsimShotKind::SignChange);
    assert!(sum.xi0 > 0.0 && sum.xi_min.is_nan());
    assert!((sum.f0 - 1e-3f64.powf(1.0 / 1.8)).abs() < 1e-15);

    let n = sum.trace_len;
    let mut small = vec![0.0; n - 1];
    let st = unsafe { selfsim_shot_trace(shot, small.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), n - 1) };
    assert_eq!(st, SelfsimStatus::BufferTooSmall);
    let (mut xi, mut f) = (vec![0.0; n], vec![0.0; n]);
    let st = unsafe { selfsim_shot_trace(shot, xi.as_mut_ptr(), f.as_mut_ptr(), ptr::null_mut(), n) };
    assert_eq!(st, SelfsimStatus::Ok);
    assert!(xi.windows(2).all(|w| w[1] > w[0]));
    assert!(f[0] < sum.f0 && f[n - 1] < f[0]);
    assert!(xi[n - 1] <= sum.xi0);
    unsafe {
        selfsim_shot_free(shot);
        selfsim_problem_free(pb);
    }
}

#[test]
fn bad_options_are_validation_errors() {
    let pb = problem(3.0, 1.2, -0.7, 3);
    let mut opts = selfsim_options_default();
    opts.rel_tol = -1.0;
    let mut shot = ptr::null_mut();
    assert_eq!(unsafe { selfsim_shoot(pb, 1.0, &opts, &mut shot) }, SelfsimStatus::Validation);
    assert!(shot.is_null());
    assert_eq!(unsafe { selfsim_shoot(pb, -1.0, ptr::null(), &mut shot) }, SelfsimStatus::Validation);
    unsafe { selfsim_problem_free(pb) };
}

#[test]
fn interface_matches_library() {
    let pb = problem(3.0, 1.2, -0.7, 3);
    let mut out = std::mem::MaybeUninit::<SelfsimInterface>::uninit();
    assert_eq!(unsafe { selfsim_find_interface(pb, ptr::null(), out.as_mut_ptr()) }, SelfsimStatus::Ok);
    let r = unsafe { out.assume_init() };
    let lib = selfsim::shooting::find_interface(
        &selfsim::Problem::from_raw(3.0, 1.2, -0.7, 3.0, selfsim::Mode::Strict).unwrap(),
        &Default::default(),
    )
    .unwrap();
    assert_eq!(r.d_star, lib.d_star);
    assert_eq!(r.xi0, lib.xi0_star);
    assert!(r.d_lo < r.d_star && r.d_star < r.d_hi);
    unsafe { selfsim_problem_free(pb) };
}

#[test]
fn catalog_json_round_trips() {
    let pb = problem(3.0, 1.2, -0.7, 2);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { selfsim_catalog_json(pb, &mut s) }, SelfsimStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe {
        selfsim_string_free(s);
        selfsim_problem_free(pb);
    }
    assert!(text.contains("\"saddle_node\": true"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/selfsim.h")).unwrap();
    for name in [
        "typedef struct SelfsimProblem SelfsimProblem;",
        "typedef struct SelfsimShot SelfsimShot;",
        "SELFSIM_STATUS_PANIC",
        "selfsim_problem_new",
        "selfsim_shot_trace",
        "selfsim_find_interface",
        "selfsim_catalog_json",
        "selfsim_string_free",
        "selfsim_last_error",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

/// Directory holding the library artifacts of this build.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = artifact_dir().join("libselfsim_ffi.a");
    assert!(lib.exists(), "{}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
