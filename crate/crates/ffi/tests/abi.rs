use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qrl_core::env::MazeSpec;
use qrl_core::space::encode;
use qrl_ffi::*;

fn last_error() -> String {
    let p = qrl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn maze_lifecycle_and_counts() {
    let mut maze = ptr::null_mut();
    unsafe {
        assert_eq!(qrl_maze_line(2, 5, 5, &mut maze), QrlStatus::Ok);
        let (mut items, mut winners) = (0, 0);
        assert_eq!(
            qrl_maze_counts(maze, &mut items, &mut winners),
            QrlStatus::Ok
        );
        assert_eq!((items, winners), (32, 1));
        qrl_maze_free(maze);
        qrl_maze_free(ptr::null_mut());
    }
}

#[test]
fn bad_maze_reports_invalid_input() {
    let mut maze = ptr::null_mut();
    let s = unsafe { qrl_maze_line(2, 0, 0, &mut maze) };
    assert_eq!(s, QrlStatus::InvalidInput);
    assert!(maze.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn missing_maze_file_is_reported() {
    let path = CString::new("/nonexistent/maze.json").unwrap();
    let mut maze = ptr::null_mut();
    let s = unsafe { qrl_maze_load(path.as_ptr(), &mut maze) };
    assert_ne!(s, QrlStatus::Ok);
    assert!(maze.is_null());
}

#[test]
fn null_out_pointers_are_rejected() {
    unsafe {
        assert_eq!(
            qrl_maze_line(2, 3, 3, ptr::null_mut()),
            QrlStatus::NullPointer
        );
        assert_eq!(
            qrl_hijack_distance(2, QrlHijackMutation::None, ptr::null_mut()),
            QrlStatus::NullPointer
        );
        let mut out = QrlGroverResult::default();
        assert_eq!(
            qrl_grover_search(ptr::null(), 1, 0, &mut out),
            QrlStatus::NullPointer
        );
    }
    assert!(last_error().contains("null"));
}

#[test]
fn grover_finds_the_line_winner_within_budget() {
    let mut maze = ptr::null_mut();
    unsafe {
        assert_eq!(qrl_maze_line(2, 8, 8, &mut maze), QrlStatus::Ok);
        let winner = encode(&MazeSpec::line_winner(2, 8), 2) as u64;
        let mut found = 0;
        for seed in 0..50 {
            let mut out = QrlGroverResult::default();
            assert_eq!(qrl_grover_search(maze, 5, seed, &mut out), QrlStatus::Ok);
            assert!(out.oracle_games <= 5 * 16);
            if out.found {
                found += 1;
                assert_eq!(out.winner, winner);
            }
        }
        assert!(found >= 45, "found {found}/50");
        qrl_maze_free(maze);
    }
}

#[test]
fn hijack_distance_detects_the_mutation() {
    let (mut good, mut bad) = (f64::NAN, f64::NAN);
    unsafe {
        assert_eq!(
            qrl_hijack_distance(3, QrlHijackMutation::None, &mut good),
            QrlStatus::Ok
        );
        assert_eq!(
            qrl_hijack_distance(3, QrlHijackMutation::KeepPhiMinus, &mut bad),
            QrlStatus::Ok
        );
    }
    assert!(good <= 1e-9);
    assert!(bad > 1.0);
}

#[test]
fn experiment_summary_round_trips_as_json() {
    let cfg = CString::new(r#"{"schema_version": 1, "experiment": "p-bound", "env": {"kind": "line", "n": 2, "m": 6}, "k": 1, "trials": 100}"#).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(qrl_run_experiment(cfg.as_ptr(), &mut out), QrlStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        qrl_string_free(out);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["experiment"], "p-bound");
        assert_eq!(v["metrics"]["win_within_budget"]["n"], 100);
    }
    let bad = CString::new(r#"{"schema_version": 9}"#).unwrap();
    let s = unsafe { qrl_run_experiment(bad.as_ptr(), &mut out) };
    assert_eq!(s, QrlStatus::Config);
}

#[test]
fn verify_rejects_unknown_suite_ids() {
    let suite = CString::new("99").unwrap();
    let (mut passed, mut out) = (false, ptr::null_mut());
    let s = unsafe { qrl_verify(suite.as_ptr(), &mut passed, &mut out) };
    assert_eq!(s, QrlStatus::Config);
    assert!(out.is_null());
}

/// `target/<profile>` of the running test binary.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = profile_dir().join("libqrl_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile_dir();
    let exe = dir.join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C smoke exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn tempfile_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("qrl-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
