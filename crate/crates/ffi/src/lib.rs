//! C ABI over the skinmon simulator.
//!
//! A simulation lives behind an opaque `SkinmonSim` handle created from a
//! config document and released with `skinmon_sim_free`. Every fallible call
//! returns a `SkinmonStatus`; on failure `skinmon_last_error` describes the
//! most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use skinmon::metrics::write_metrics;
use skinmon::render::write_svg;
use skinmon::{parse_config, Error, MetricsSeries, SimState};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkinmonStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Io = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque simulation handle.
pub struct SkinmonSim {
    state: SimState,
    series: MetricsSeries,
}

/// Measurements of the most recent round.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SkinmonRoundStats {
    /// Rounds completed so far.
    pub rounds_done: u32,
    pub energy_nj: f64,
    pub cum_energy_nj: f64,
    pub dead_nodes: u32,
    pub active_nodes: u32,
    pub status_msgs: u64,
    pub location_msgs: u64,
    pub change_msgs: u64,
    pub relay_msgs: u64,
    pub root_count: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: SkinmonStatus, msg: impl Into<String>) -> SkinmonStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> SkinmonStatus {
    let status = match e {
        Error::Config(_) => SkinmonStatus::InvalidConfig,
        _ => SkinmonStatus::Io,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> SkinmonStatus) -> SkinmonStatus {
    catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(SkinmonStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, SkinmonStatus> {
    if p.is_null() {
        return Err(fail(SkinmonStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SkinmonStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn sim_ref<'a>(sim: *const SkinmonSim) -> Result<&'a SkinmonSim, SkinmonStatus> {
    sim.as_ref()
        .ok_or_else(|| fail(SkinmonStatus::NullArgument, "simulation handle is null"))
}

unsafe fn sim_mut<'a>(sim: *mut SkinmonSim) -> Result<&'a mut SkinmonSim, SkinmonStatus> {
    sim.as_mut()
        .ok_or_else(|| fail(SkinmonStatus::NullArgument, "simulation handle is null"))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Creates a simulation from a config document (empty string for defaults).
///
/// # Safety
/// `config` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skinmon_sim_new(
    config: *const c_char,
    out: *mut *mut SkinmonSim,
) -> SkinmonStatus {
    guard(|| {
        if out.is_null() {
            return fail(SkinmonStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let text = tri!(str_arg(config, "config"));
        let state = match parse_config(text).and_then(SimState::new) {
            Ok(mut s) => {
                s.record_log = false;
                s
            }
            Err(e) => return fail(SkinmonStatus::InvalidConfig, e.to_string()),
        };
        *out = Box::into_raw(Box::new(SkinmonSim {
            state,
            series: MetricsSeries::default(),
        }));
        SkinmonStatus::Ok
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must come from `skinmon_sim_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn skinmon_sim_free(sim: *mut SkinmonSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances the simulation by `rounds` rounds.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn skinmon_sim_step(sim: *mut SkinmonSim, rounds: u32) -> SkinmonStatus {
    guard(|| {
        let sim = tri!(sim_mut(sim));
        for _ in 0..rounds {
            let m = sim.state.step_round();
            sim.series.rounds.push(m);
        }
        SkinmonStatus::Ok
    })
}

/// Advances until the configured round count is reached.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn skinmon_sim_run(sim: *mut SkinmonSim) -> SkinmonStatus {
    let left = match sim.as_ref() {
        Some(s) => s.state.config.run.rounds.saturating_sub(s.state.round),
        None => return fail(SkinmonStatus::NullArgument, "simulation handle is null"),
    };
    skinmon_sim_step(sim, left)
}

/// Rounds completed so far, or 0 for a null handle.
///
/// # Safety
/// `sim` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn skinmon_sim_round(sim: *const SkinmonSim) -> u32 {
    sim.as_ref().map_or(0, |s| s.state.round)
}

/// Fills `out` with the latest round's measurements (all zero before the first step).
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skinmon_sim_stats(
    sim: *const SkinmonSim,
    out: *mut SkinmonRoundStats,
) -> SkinmonStatus {
    guard(|| {
        let sim = tri!(sim_ref(sim));
        if out.is_null() {
            return fail(SkinmonStatus::NullArgument, "out is null");
        }
        let stats = match sim.series.last() {
            Some(m) => SkinmonRoundStats {
                rounds_done: sim.state.round,
                energy_nj: m.energy_nj,
                cum_energy_nj: m.cum_energy_nj,
                dead_nodes: m.dead_nodes,
                active_nodes: m.active_nodes,
                status_msgs: m.status_msgs,
                location_msgs: m.location_msgs,
                change_msgs: m.change_msgs,
                relay_msgs: m.relay_msgs,
                root_count: m.root_ids.len() as u32,
            },
            None => SkinmonRoundStats::default(),
        };
        *out = stats;
        SkinmonStatus::Ok
    })
}

/// Copies the latest round's root ids into `buf` and their count into `len`.
///
/// With `buf` null or `cap` too small, only `len` is written and
/// `BufferTooSmall` is returned.
///
/// # Safety
/// `sim` must be a live handle, `len` a valid pointer and `buf` valid for `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn skinmon_sim_root_ids(
    sim: *const SkinmonSim,
    buf: *mut u32,
    cap: usize,
    len: *mut usize,
) -> SkinmonStatus {
    guard(|| {
        let sim = tri!(sim_ref(sim));
        if len.is_null() {
            return fail(SkinmonStatus::NullArgument, "len is null");
        }
        let roots = sim
            .series
            .last()
            .map(|m| m.root_ids.as_slice())
            .unwrap_or(&[]);
        *len = roots.len();
        if roots.is_empty() {
            return SkinmonStatus::Ok;
        }
        if buf.is_null() || cap < roots.len() {
            return fail(
                SkinmonStatus::BufferTooSmall,
                format!("{} root ids do not fit in {cap}", roots.len()),
            );
        }
        for (i, r) in roots.iter().enumerate() {
            *buf.add(i) = r.0;
        }
        SkinmonStatus::Ok
    })
}

/// Writes the metrics CSV for all rounds stepped so far.
///
/// # Safety
/// `sim` must be a live handle and `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn skinmon_sim_write_metrics(
    sim: *const SkinmonSim,
    path: *const c_char,
) -> SkinmonStatus {
    guard(|| {
        let sim = tri!(sim_ref(sim));
        let path = tri!(str_arg(path, "path"));
        match write_metrics(&sim.series, Path::new(path)) {
            Ok(()) => SkinmonStatus::Ok,
            Err(e) => from_error(&e),
        }
    })
}

/// Writes an SVG of the current state.
///
/// # Safety
/// `sim` must be a live handle and `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn skinmon_sim_write_snapshot(
    sim: *const SkinmonSim,
    path: *const c_char,
) -> SkinmonStatus {
    guard(|| {
        let sim = tri!(sim_ref(sim));
        let path = tri!(str_arg(path, "path"));
        match write_svg(&sim.state.snapshot(), Path::new(path)) {
            Ok(()) => SkinmonStatus::Ok,
            Err(e) => from_error(&e),
        }
    })
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn skinmon_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn skinmon_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
