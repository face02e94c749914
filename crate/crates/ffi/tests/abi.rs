use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use paintwalk_ffi::*;

fn graph(spec: &str) -> *mut PwGraph {
    let s = CString::new(spec).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { pw_graph_new(s.as_ptr(), &mut g) }, PwStatus::Ok);
    assert!(!g.is_null());
    g
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { pw_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn graph_queries() {
    let g = graph("torus:d=3,n=4");
    let (mut count, mut degree) = (0u64, 0u32);
    unsafe {
        assert_eq!(pw_graph_vertex_count(g, &mut count), PwStatus::Ok);
        assert_eq!(pw_graph_degree(g, &mut degree), PwStatus::Ok);
    }
    assert_eq!((count, degree), (64, 6));
    let mut buf = [0u32; 6];
    let mut written = 0usize;
    assert_eq!(unsafe { pw_graph_neighbors(g, 0, buf.as_mut_ptr(), 6, &mut written) }, PwStatus::Ok);
    let mut got = buf.to_vec();
    got.sort();
    assert_eq!(got, vec![1, 3, 4, 12, 16, 48]);
    assert_eq!(unsafe { pw_graph_neighbors(g, 0, buf.as_mut_ptr(), 2, &mut written) }, PwStatus::BufferTooSmall);
    assert_eq!(written, 6);
    assert_eq!(unsafe { pw_graph_neighbors(g, 64, buf.as_mut_ptr(), 6, &mut written) }, PwStatus::InvalidVertex);
    assert!(last_error().contains("out of range"));
    unsafe { pw_graph_free(g) };
}

#[test]
fn errors_are_reported() {
    let bad = CString::new("torus:d=3").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { pw_graph_new(bad.as_ptr(), &mut g) }, PwStatus::InvalidArgument);
    assert!(g.is_null());
    assert!(last_error().contains("missing `n`"));
    let huge = CString::new("hypercube:n=40").unwrap();
    assert_eq!(unsafe { pw_graph_new(huge.as_ptr(), &mut g) }, PwStatus::SizeCap);
    assert_eq!(unsafe { pw_graph_new(ptr::null(), &mut g) }, PwStatus::NullPointer);
    assert_eq!(unsafe { pw_graph_vertex_count(ptr::null(), ptr::null_mut()) }, PwStatus::NullPointer);
    // length query without a buffer
    let n = unsafe { pw_last_error_message(ptr::null_mut(), 0) };
    assert_eq!(n, "graph is null".len());
    unsafe { pw_graph_free(ptr::null_mut()) };
}

#[test]
fn painting_is_deterministic_and_consistent() {
    let g = graph("hypercube:n=6");
    let (mut a, mut b) = (PwOutcome::default(), PwOutcome::default());
    unsafe {
        assert_eq!(pw_run_painting(g, 0.5, PW_MODE_FIRST_PAINTED, 9, 3, &mut a), PwStatus::Ok);
        assert_eq!(pw_run_painting(g, 0.5, PW_MODE_FIRST_PAINTED, 9, 3, &mut b), PwStatus::Ok);
    }
    assert_eq!(a, b);
    assert_eq!(a.a1_count + a.a2_count, 64);
    assert_eq!(a.b_statistic, a.wins1 as i64 - a.wins2 as i64);
    assert_eq!(unsafe { pw_run_painting(g, 0.5, 7, 9, 3, &mut b) }, PwStatus::InvalidArgument);
    assert_eq!(unsafe { pw_run_painting(g, 1.5, PW_MODE_LAST_PAINTED, 9, 3, &mut b) }, PwStatus::InvalidArgument);
    unsafe { pw_graph_free(g) };
}

#[test]
fn batch_and_exact_summaries() {
    let spec = CString::new("hypercube:n=5").unwrap();
    let (mut one, mut two) = (PwBatchSummary::default(), PwBatchSummary::default());
    unsafe {
        assert_eq!(pw_simulate_batch(spec.as_ptr(), 4, 300, 0.5, PW_MODE_FIRST_PAINTED, 1, &mut one), PwStatus::Ok);
        assert_eq!(pw_simulate_batch(spec.as_ptr(), 4, 300, 0.5, PW_MODE_FIRST_PAINTED, 3, &mut two), PwStatus::Ok);
    }
    assert_eq!(one, two);
    assert_eq!(one.runs_completed, 300);
    assert!((one.a1_mean - 16.0).abs() < 4.0 * (one.a1_variance / 300.0).sqrt());

    let g = graph("hypercube:n=6");
    let mut e = PwExactSummary::default();
    assert_eq!(unsafe { pw_exact_summary(g, 0.5, 2.0, &mut e) }, PwStatus::Ok);
    assert!(e.t_mix > 0 && e.horizon == 2 * e.t_mix);
    assert!(e.f_statistic > 0.0 && e.f_bar > 0.0 && e.f_bar < 1.0);
    assert_eq!(e.quarter_f, e.f_statistic / 4.0);
    assert_eq!(unsafe { pw_exact_summary(g, 0.5, 1.0, &mut e) }, PwStatus::Ok);
    assert!(e.quarter_f.is_nan());
    assert_eq!(unsafe { pw_exact_summary(g, 0.5, 0.5, &mut e) }, PwStatus::InvalidArgument);
    unsafe { pw_graph_free(g) };
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "paintwalk.h"

int main(void) {
    PwGraph *g = NULL;
    if (pw_graph_new("hypercube:n=4", &g) != PW_STATUS_OK) return 10;
    uint64_t n = 0;
    if (pw_graph_vertex_count(g, &n) != PW_STATUS_OK || n != 16) return 11;
    uint32_t buf[4];
    size_t written = 0;
    if (pw_graph_neighbors(g, 0, buf, 4, &written) != PW_STATUS_OK || written != 4) return 12;
    PwOutcome o;
    if (pw_run_painting(g, 0.5, PW_MODE_LAST_PAINTED, 1, 2, &o) != PW_STATUS_OK) return 13;
    if (o.a1_count + o.a2_count != 16) return 14;
    pw_graph_free(g);
    if (pw_graph_new("nonsense", &g) != PW_STATUS_INVALID_ARGUMENT) return 15;
    char msg[128];
    pw_last_error_message(msg, sizeof msg);
    printf("%s|%s\n", pw_version(), msg);
    return 0;
}
"#;

/// Compiles a C program against the generated header and the static
/// library. Skipped when no C compiler is on the path.
#[test]
fn header_compiles_and_links_from_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler, skipping");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test exe>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libpaintwalk_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(env!("CARGO_PKG_VERSION")), "{text}");
    assert!(text.contains("invalid graph spec"), "{text}");
}
