//! The C ABI through its exported functions, and the generated header from C.

use std::ffi::{c_char, CStr};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use qarrival_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe { qa_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn fig2(alpha: f64) -> *mut QaArrival {
    let mut h = ptr::null_mut();
    let status = unsafe { qa_arrival_new(-4.0, 4.0, 0.0, alpha, qa_default_grids(), &mut h) };
    assert_eq!(status, QaStatus::QaOk, "{}", last_error());
    h
}

#[test]
fn arrival_handle_lifecycle() {
    let h = fig2(1.0);
    let n = unsafe { qa_arrival_len(h) };
    assert_eq!(n, 2048);
    let p_inf = unsafe { qa_arrival_p_inf(h) };
    assert!((p_inf - 0.199406).abs() < 1e-5, "{p_inf}");
    let (mut tau, mut p, mut cum) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let s = unsafe { qa_arrival_copy(h, tau.as_mut_ptr(), p.as_mut_ptr(), cum.as_mut_ptr(), n) };
    assert_eq!(s, QaStatus::QaOk);
    assert_eq!(tau[0], 0.0);
    assert!((cum[n - 1] - p_inf).abs() < 1e-6);
    assert!(p.iter().all(|v| *v >= 0.0));
    let short = unsafe { qa_arrival_copy(h, tau.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), n - 1) };
    assert_eq!(short, QaStatus::QaErrBuffer);
    assert!(last_error().contains("buffer"));
    unsafe { qa_arrival_free(h) };
    unsafe { qa_arrival_free(ptr::null_mut()) };
    assert_eq!(unsafe { qa_arrival_len(ptr::null()) }, 0);
    assert!(unsafe { qa_arrival_p_inf(ptr::null()) }.is_nan());
}

#[test]
fn sampling_is_seeded_and_matches_the_law() {
    let h = fig2(1.0);
    let n = 50_000;
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    let (mut da, mut db) = (0usize, 0usize);
    assert_eq!(unsafe { qa_sample_first_events(h, n, 5, a.as_mut_ptr(), &mut da) }, QaStatus::QaOk);
    assert_eq!(unsafe { qa_sample_first_events(h, n, 5, b.as_mut_ptr(), &mut db) }, QaStatus::QaOk);
    assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert_eq!(da, db);
    assert_eq!(a.iter().filter(|t| !t.is_nan()).count(), da);
    let p = unsafe { qa_arrival_p_inf(h) };
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((da as f64 / n as f64 - p).abs() < 3.0 * sigma);
    assert_eq!(unsafe { qa_sample_first_events(h, 1, 5, ptr::null_mut(), ptr::null_mut()) }, QaStatus::QaErrNull);
    assert_eq!(unsafe { qa_sample_first_events(h, 0, 5, ptr::null_mut(), ptr::null_mut()) }, QaStatus::QaOk);
    unsafe { qa_arrival_free(h) };
}

#[test]
fn studies_through_the_abi() {
    let (mut a, mut p) = (0.0, 0.0);
    assert_eq!(unsafe { qa_optimize_alpha(0.0, 0.0, 0.05, 4.0, &mut a, &mut p) }, QaStatus::QaOk);
    assert!((a - 1.3216).abs() < 5e-3 && (p - 0.725448).abs() < 1e-3);
    assert_eq!(unsafe { qa_optimize_alpha(0.0, 0.0, 3.0, 4.0, &mut a, &mut p) }, QaStatus::QaErrNumerical);
    assert!(last_error().contains("bracket"));
    let mut e = 0.0;
    assert_eq!(unsafe { qa_efficiency(0.0, 0.0, 0.0, &mut e) }, QaStatus::QaOk);
    assert_eq!(e, 0.0);
    assert_eq!(unsafe { qa_efficiency(0.0, 0.0, -1.0, &mut e) }, QaStatus::QaErrInvalid);
}

#[test]
fn invalid_arguments_leave_a_null_handle() {
    let mut h = ptr::dangling_mut::<QaArrival>();
    let s = unsafe { qa_arrival_new(f64::NAN, 4.0, 0.0, 1.0, qa_default_grids(), &mut h) };
    assert_eq!(s, QaStatus::QaErrInvalid);
    assert!(h.is_null());
    assert_eq!(unsafe { qa_arrival_new(0.0, 0.0, 0.0, 1.0, qa_default_grids(), ptr::null_mut()) }, QaStatus::QaErrNull);
}

#[test]
fn error_message_length_query() {
    let mut re = 0.0;
    unsafe { qa_faddeeva_w(0.0, 0.0, &mut re, ptr::null_mut()) };
    let full = unsafe { qa_last_error_message(ptr::null_mut(), 0) };
    assert!(full > 0);
    let mut tiny = [0 as c_char; 4];
    assert_eq!(unsafe { qa_last_error_message(tiny.as_mut_ptr(), tiny.len()) }, full);
    assert_eq!(unsafe { CStr::from_ptr(tiny.as_ptr()) }.to_bytes().len(), 3);
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "qarrival.h"

int main(void) {
    double re, im;
    if (qa_faddeeva_w(0.0, 1.0, &re, &im) != QA_OK) return 1;
    if (fabs(re - 0.42758357615580700) > 1e-14) return 2;
    QaArrival *h = NULL;
    if (qa_arrival_new(-4.0, 4.0, 0.0, 1.0, qa_default_grids(), &h) != QA_OK) return 3;
    size_t n = qa_arrival_len(h);
    double p_inf = qa_arrival_p_inf(h);
    qa_arrival_free(h);
    if (n != 2048 || fabs(p_inf - 0.199406) > 1e-5) return 4;
    printf("ok %s\n", qa_version());
    return 0;
}
"#;

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

/// The static archive built next to this test binary, if any.
fn static_archive() -> Option<PathBuf> {
    let target = Path::new(env!("CARGO_TARGET_TMPDIR")).parent()?.to_path_buf();
    ["debug", "release"].iter().map(|p| target.join(p).join("libqarrival_ffi.a")).find(|p| p.exists())
}

#[test]
fn header_compiles_and_links_from_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler available; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let syntax = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header_dir())
        .arg(&src)
        .output()
        .unwrap();
    assert!(syntax.status.success(), "{}", String::from_utf8_lossy(&syntax.stderr));
    let Some(archive) = static_archive() else {
        eprintln!("static archive not found; header checked for syntax only");
        return;
    };
    let exe = dir.path().join("smoke");
    let link = Command::new(&cc)
        .arg("-I")
        .arg(header_dir())
        .arg(&src)
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(link.status.success(), "{}", String::from_utf8_lossy(&link.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
