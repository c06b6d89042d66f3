//! C ABI over `qrl-core`.
//!
//! Every function returns a [`QrlStatus`]; results come back through out
//! pointers. On failure the message is available from
//! [`qrl_last_error_message`] on the same thread. Strings handed out by the
//! library must be released with [`qrl_string_free`], mazes with
//! [`qrl_maze_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use qrl_core::env::{ControllableEnv, MazeEnv, MazeSpec, PerceptMode};
use qrl_core::harness::acceptance::parse_suite;
use qrl_core::harness::{run_experiment, verify_acceptance, write_outputs, ExperimentConfig};
use qrl_core::qagent::{
    build_hermitian_extension, synthesized_map_distance, AqConfig, HijackMutation,
};
use qrl_core::qsim::{grover_search, SearchOracle, WinnerCount};
use qrl_core::rng::RngStream;
use qrl_core::Error;

/// Outcome of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad configuration, suite id or argument.
    Config = 3,
    /// Malformed maze, label space or history.
    InvalidInput = 4,
    /// The search budget ran out without a verified winner.
    NoWinner = 5,
    /// Any other library error.
    Failure = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Which deliberate defect to build into the hijack protocol.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QrlHijackMutation {
    None = 0,
    KeepPhiMinus = 1,
    NoKickback = 2,
}

/// Opaque maze handle.
pub struct QrlMaze {
    env: MazeEnv,
}

/// Result of [`qrl_grover_search`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QrlGroverResult {
    /// Encoded action sequence of the winner; valid when `found` is true.
    pub winner: u64,
    pub found: bool,
    /// Coherent queries plus classical checks, each billed as one game.
    pub oracle_games: u64,
    pub rounds: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QrlStatus {
    match e {
        Error::Config(_) => QrlStatus::Config,
        Error::NoWinnerExists { .. } => QrlStatus::NoWinner,
        Error::InvalidSpace(_)
        | Error::UnknownLabel { .. }
        | Error::AlternationViolation { .. }
        | Error::DisconnectedGraph(_)
        | Error::LabelInconsistentWithBfs { .. }
        | Error::InvalidMaze(_)
        | Error::LengthMismatch { .. }
        | Error::BadHyperparameter(_)
        | Error::Io(_) => QrlStatus::InvalidInput,
        Error::Trial { source, .. } => status_of(source),
        _ => QrlStatus::Failure,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), QrlStatus>) -> QrlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QrlStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            QrlStatus::Panic
        }
    }
}

fn fail(e: Error) -> QrlStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> QrlStatus {
    set_error(format!("null pointer: {what}"));
    QrlStatus::NullPointer
}

/// # Safety
/// `p` is null or a NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, QrlStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        QrlStatus::InvalidUtf8
    })
}

fn hand_out(text: String, out: *mut *mut c_char) -> Result<(), QrlStatus> {
    let c = CString::new(text).map_err(|_| {
        set_error("output contains NUL".into());
        QrlStatus::Failure
    })?;
    // SAFETY: checked non-null by the caller of `hand_out`.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qrl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or came from this library and has not been freed.
#[no_mangle]
pub unsafe extern "C" fn qrl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds the unique-path line maze with `n` actions, path length `m` and
/// epoch length `m_max`.
///
/// # Safety
/// `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrl_maze_line(
    n: usize,
    m: usize,
    m_max: usize,
    out: *mut *mut QrlMaze,
) -> QrlStatus {
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let env = MazeSpec::line(n, m, m_max)
            .and_then(|s| MazeEnv::with_mode(s, PerceptMode::WithId))
            .map_err(fail)?;
        *out = Box::into_raw(Box::new(QrlMaze { env }));
        Ok(())
    })
}

/// Loads a maze from a JSON file.
///
/// # Safety
/// `path` is a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrl_maze_load(path: *const c_char, out: *mut *mut QrlMaze) -> QrlStatus {
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let path = read_str(path, "path")?;
        let env = MazeSpec::load(Path::new(path))
            .and_then(|s| MazeEnv::with_mode(s, PerceptMode::WithId))
            .map_err(fail)?;
        *out = Box::into_raw(Box::new(QrlMaze { env }));
        Ok(())
    })
}

/// # Safety
/// `maze` is null or came from a maze constructor and has not been freed.
#[no_mangle]
pub unsafe extern "C" fn qrl_maze_free(maze: *mut QrlMaze) {
    if !maze.is_null() {
        drop(Box::from_raw(maze));
    }
}

/// Number of action sequences (search items) and of winning ones.
///
/// # Safety
/// `maze` is a live handle; `items` and `winners` are valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qrl_maze_counts(
    maze: *const QrlMaze,
    items: *mut u64,
    winners: *mut u64,
) -> QrlStatus {
    if maze.is_null() || items.is_null() || winners.is_null() {
        return null("argument");
    }
    guard(|| {
        let ctl = ControllableEnv::new((*maze).env.clone()).map_err(fail)?;
        *items = ctl.table().num_items() as u64;
        *winners = ctl.table().num_winners() as u64;
        Ok(())
    })
}

/// Grover search over the maze's action sequences with an unknown winner
/// count and a budget of `k·⌈√N⌉` oracle games.
///
/// # Safety
/// `maze` is a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrl_grover_search(
    maze: *const QrlMaze,
    k: u64,
    seed: u64,
    out: *mut QrlGroverResult,
) -> QrlStatus {
    if maze.is_null() || out.is_null() {
        return null("argument");
    }
    guard(|| {
        let ctl = ControllableEnv::new((*maze).env.clone()).map_err(fail)?;
        let budget = AqConfig::new(k).search_budget(ctl.num_items() as u64);
        let mut rng = RngStream::new(seed, 0);
        let r = grover_search(&ctl, WinnerCount::Unknown, budget, &mut rng).map_err(fail)?;
        *out = QrlGroverResult {
            winner: r.found.unwrap_or(0) as u64,
            found: r.found.is_some(),
            oracle_games: r.queries,
            rounds: r.rounds,
        };
        Ok(())
    })
}

/// Frobenius distance between the oracle synthesized by hijacking and
/// scavenging on the two-action line maze of length `m` and the ideal
/// phase-flip oracle.
///
/// # Safety
/// `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrl_hijack_distance(
    m: usize,
    mutation: QrlHijackMutation,
    out: *mut f64,
) -> QrlStatus {
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let mutation = match mutation {
            QrlHijackMutation::None => HijackMutation::None,
            QrlHijackMutation::KeepPhiMinus => HijackMutation::KeepPhiMinus,
            QrlHijackMutation::NoKickback => HijackMutation::NoKickback,
        };
        let task = MazeSpec::line(2, m, m)
            .and_then(|s| MazeEnv::with_mode(s, PerceptMode::ArrowOnly))
            .map_err(fail)?;
        let ext = build_hermitian_extension(&task).map_err(fail)?;
        *out = synthesized_map_distance(&ext, mutation).map_err(fail)?;
        Ok(())
    })
}

/// Runs the experiment described by `config_json`, writes its outputs when
/// the config names an output directory, and returns the summary as JSON.
///
/// # Safety
/// `config_json` is a NUL-terminated string and `summary_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrl_run_experiment(
    config_json: *const c_char,
    summary_json: *mut *mut c_char,
) -> QrlStatus {
    if summary_json.is_null() {
        return null("summary_json");
    }
    guard(|| {
        let cfg =
            ExperimentConfig::from_json(read_str(config_json, "config_json")?).map_err(fail)?;
        let res = run_experiment(&cfg).map_err(fail)?;
        if cfg.output.is_some() {
            write_outputs(&res, &cfg.output_dir()).map_err(fail)?;
        }
        let text = serde_json::to_string(&res.summary).map_err(|e| fail(e.into()))?;
        hand_out(text, summary_json)
    })
}

/// Runs the acceptance criteria in `suite` (`"all"` or `"1,4,8"`), sets
/// `passed`, and returns the report as JSON.
///
/// # Safety
/// `suite` is a NUL-terminated string; `passed` and `report_json` are valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qrl_verify(
    suite: *const c_char,
    passed: *mut bool,
    report_json: *mut *mut c_char,
) -> QrlStatus {
    if passed.is_null() || report_json.is_null() {
        return null("argument");
    }
    guard(|| {
        let ids = parse_suite(read_str(suite, "suite")?).map_err(fail)?;
        let report = verify_acceptance(&ids).map_err(fail)?;
        *passed = report.pass;
        let text = serde_json::to_string(&report).map_err(|e| fail(e.into()))?;
        hand_out(text, report_json)
    })
}
