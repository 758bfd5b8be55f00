use std::ffi::{CStr, CString};
use std::ptr;

use gke_ffi::*;

fn last_error() -> String {
    let p = gke_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn diag_ensemble(diags: &[[f64; 2]]) -> *mut GkeEnsemble {
    let mut data = Vec::new();
    for d in diags {
        data.extend_from_slice(&[d[0], 0.0, 0.0, 0.0, 0.0, 0.0, d[1], 0.0]);
    }
    let mut out = ptr::null_mut();
    let s = unsafe { gke_ensemble_new(2, diags.len(), data.as_ptr(), ptr::null(), &mut out) };
    assert_eq!(s, GkeStatus::Ok);
    out
}

#[test]
fn affine_solution_is_the_average() {
    let e = diag_ensemble(&[[1.0, 4.0], [3.0, 2.0]]);
    let g = CString::new("affine").unwrap();
    let mut sol = ptr::null_mut();
    unsafe {
        assert_eq!(gke_solve(e, g.as_ptr(), 0.0, 0, &mut sol), GkeStatus::Ok);
        assert_eq!(gke_solution_dim(sol), 2);
        assert_eq!(gke_solution_converged(sol), 1);
        assert!(gke_solution_residual(sol) < 1e-10);
        let mut buf = [0.0; 8];
        assert_eq!(gke_solution_copy_matrix(sol, buf.as_mut_ptr(), buf.len()), GkeStatus::Ok);
        let expect = [2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0];
        for (a, b) in buf.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10, "{buf:?}");
        }
        let mut small = [0.0; 4];
        assert_eq!(
            gke_solution_copy_matrix(sol, small.as_mut_ptr(), small.len()),
            GkeStatus::DimensionMismatch
        );
        gke_solution_free(sol);
        gke_ensemble_free(e);
    }
}

#[test]
fn log_solution_of_commuting_pair_is_geometric() {
    let e = diag_ensemble(&[[1.0, 9.0], [4.0, 1.0]]);
    let g = CString::new("log").unwrap();
    let mut sol = ptr::null_mut();
    let mut buf = [0.0; 8];
    unsafe {
        assert_eq!(gke_solve(e, g.as_ptr(), 0.0, 0, &mut sol), GkeStatus::Ok);
        gke_solution_copy_matrix(sol, buf.as_mut_ptr(), 8);
        gke_solution_free(sol);
        gke_ensemble_free(e);
    }
    assert!((buf[0] - 2.0).abs() < 1e-9);
    assert!((buf[6] - 3.0).abs() < 1e-9);
}

#[test]
fn rejects_indefinite_input_with_message() {
    let data = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0];
    let mut out = ptr::null_mut();
    let s = unsafe { gke_ensemble_new(2, 1, data.as_ptr(), ptr::null(), &mut out) };
    assert_eq!(s, GkeStatus::NotPositiveDefinite);
    assert!(out.is_null());
    assert!(last_error().contains("positive definite"));
}

#[test]
fn rejects_bad_weights_and_null_pointers() {
    let data = [1.0, 0.0, 2.0, 0.0];
    let w = [0.3, 0.3];
    let mut out = ptr::null_mut();
    let s = unsafe { gke_ensemble_new(1, 2, data.as_ptr(), w.as_ptr(), &mut out) };
    assert_eq!(s, GkeStatus::InvalidArgument);
    let s = unsafe { gke_ensemble_new(1, 2, ptr::null(), w.as_ptr(), &mut out) };
    assert_eq!(s, GkeStatus::NullPointer);
    assert!(last_error().contains("data"));
    let g = CString::new("log").unwrap();
    let mut sol = ptr::null_mut();
    let s = unsafe { gke_solve(ptr::null(), g.as_ptr(), 0.0, 0, &mut sol) };
    assert_eq!(s, GkeStatus::NullPointer);
}

#[test]
fn unknown_generator_is_a_parse_error() {
    let e = diag_ensemble(&[[1.0, 2.0]]);
    let g = CString::new("cubic").unwrap();
    let mut sol = ptr::null_mut();
    unsafe {
        assert_eq!(gke_solve(e, g.as_ptr(), 0.0, 0, &mut sol), GkeStatus::Parse);
        gke_ensemble_free(e);
    }
    assert!(last_error().contains("cubic"));
}

#[test]
fn json_round_trip_through_handles() {
    let mut e = ptr::null_mut();
    let mut text = ptr::null_mut();
    let mut again = ptr::null_mut();
    let mut text2 = ptr::null_mut();
    unsafe {
        assert_eq!(gke_ensemble_generate(3, 4, 1.0, 10.0, 42, &mut e), GkeStatus::Ok);
        assert_eq!(gke_ensemble_dim(e), 3);
        assert_eq!(gke_ensemble_len(e), 4);
        assert_eq!(gke_ensemble_to_json(e, &mut text), GkeStatus::Ok);
        assert_eq!(gke_ensemble_from_json(text, &mut again), GkeStatus::Ok);
        assert_eq!(gke_ensemble_to_json(again, &mut text2), GkeStatus::Ok);
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(text2));
        gke_string_free(text);
        gke_string_free(text2);
        gke_ensemble_free(e);
        gke_ensemble_free(again);
    }
}

#[test]
fn malformed_json_reports_parse_error() {
    let bad = CString::new("{\"dim\": 2,").unwrap();
    let mut e = ptr::null_mut();
    let s = unsafe { gke_ensemble_from_json(bad.as_ptr(), &mut e) };
    assert_eq!(s, GkeStatus::Parse);
    assert!(last_error().contains("line"));
}

#[test]
fn checks_run_and_are_deterministic() {
    let id = CString::new("eq6_sandwich").unwrap();
    let g = CString::new("power:0.5").unwrap();
    let mut a = GkeCheckOutcome::default();
    let mut b = GkeCheckOutcome::default();
    unsafe {
        assert_eq!(
            gke_run_check(id.as_ptr(), g.as_ptr(), 3, 3, 1.0, 4.0, 9, 2, 0.0, &mut a),
            GkeStatus::Ok
        );
        assert_eq!(
            gke_run_check(id.as_ptr(), g.as_ptr(), 3, 3, 1.0, 4.0, 9, 2, 0.0, &mut b),
            GkeStatus::Ok
        );
    }
    assert_eq!(a.holds, 1);
    assert_eq!(a.margin.to_bits(), b.margin.to_bits());
    let bogus = CString::new("no_such_check").unwrap();
    let s = unsafe {
        gke_run_check(bogus.as_ptr(), ptr::null(), 3, 3, 1.0, 4.0, 0, 0, 0.0, &mut a)
    };
    assert_eq!(s, GkeStatus::Parse);
}

#[test]
fn kantorovich_constant_values() {
    assert_eq!(gke_kantorovich_constant(1.0), 1.0);
    assert!((gke_kantorovich_constant(4.0) - 25.0 / 16.0).abs() < 1e-15);
    assert!(gke_kantorovich_constant(0.5).is_nan());
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/gke.h");
    for name in [
        "gke_ensemble_new",
        "gke_ensemble_generate",
        "gke_ensemble_from_json",
        "gke_ensemble_to_json",
        "gke_ensemble_dim",
        "gke_ensemble_len",
        "gke_ensemble_free",
        "gke_solve",
        "gke_solution_dim",
        "gke_solution_copy_matrix",
        "gke_solution_iterations",
        "gke_solution_residual",
        "gke_solution_converged",
        "gke_solution_free",
        "gke_run_check",
        "gke_kantorovich_constant",
        "gke_last_error_message",
        "gke_string_free",
        "GKE_STATUS_NOT_CONVERGED",
        "typedef struct GkeEnsemble GkeEnsemble",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"gke.h\"\nint main(void) { GkeEnsemble *e = 0; return gke_ensemble_dim(e) == 0 ? 0 : 1; }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = match std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler found; skipping");
            return;
        }
    };
    assert!(status.success());
}
