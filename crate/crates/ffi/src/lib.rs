//! C ABI for the cellhaul planner.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every function returns a
//! [`CellhaulStatus`]; on failure [`cellhaul_last_error`] describes the most
//! recent error on the calling thread. Panics never unwind into C: they are
//! reported as `CELLHAUL_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cellhaul::instance::{generate_instance, load_instance, save_instance, AreaSpec, ParamBundle};
use cellhaul::model::Scenario;
use cellhaul::report::{write_report, RunManifest};
use cellhaul::{solve_scenario, solve_single_tabu_scenario, Error, Instance, SolverConfig, SolverReport};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellhaulStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Schema = 4,
    Validation = 5,
    Config = 6,
    Infeasible = 7,
    GuardExceeded = 8,
    OutOfRange = 9,
    Internal = 10,
}

/// A validated instance with its derived coverage and backhaul tables.
pub struct CellhaulInstance {
    scenario: Scenario,
}

/// A solver run: the frontier plus bounds and traces.
pub struct CellhaulReport {
    report: SolverReport,
    scenario: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> CellhaulStatus {
    match err {
        Error::Io { .. } => CellhaulStatus::Io,
        Error::Schema(_) | Error::Csv(_) => CellhaulStatus::Schema,
        Error::Validation { .. } | Error::Domain(_) | Error::SizeMismatch(_) => CellhaulStatus::Validation,
        Error::Config(_) => CellhaulStatus::Config,
        Error::Infeasible(_) => CellhaulStatus::Infeasible,
        Error::GuardExceeded { .. } => CellhaulStatus::GuardExceeded,
    }
}

struct Fail(CellhaulStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Run `f`, translating errors and panics into a status.
fn guarded(f: impl FnOnce() -> Result<(), Fail>) -> CellhaulStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CellhaulStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal error: the solver panicked");
            CellhaulStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(CellhaulStatus::NullPointer, format!("`{name}` is NULL")));
    }
    // SAFETY: the caller passes a NUL-terminated string that outlives the call.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail(CellhaulStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    // SAFETY: non-NULL handles come from this library and are still live.
    unsafe { p.as_ref() }.ok_or_else(|| Fail(CellhaulStatus::NullPointer, format!("`{name}` is NULL")))
}

fn out_arg<T>(out: *mut *mut T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(CellhaulStatus::NullPointer, "`out` is NULL".into()));
    }
    Ok(())
}

fn hand_out<T>(out: *mut *mut T, value: T) {
    // SAFETY: `out` was checked non-NULL by `out_arg`.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

fn wrap(instance: Instance) -> Result<CellhaulInstance, Fail> {
    Ok(CellhaulInstance { scenario: Scenario::new(instance)? })
}

/// Message for the last failed call on this thread; empty when none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cellhaul_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cellhaul_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Load an instance JSON file.
///
/// # Safety
/// `path` must be NULL or a NUL-terminated string; `out` must be NULL or
/// point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cellhaul_instance_load(path: *const c_char, out: *mut *mut CellhaulInstance) -> CellhaulStatus {
    guarded(|| {
        out_arg(out)?;
        let path = unsafe { str_arg(path, "path") }?;
        hand_out(out, wrap(load_instance(path)?)?);
        Ok(())
    })
}

/// Parse an instance from JSON text.
///
/// # Safety
/// As for [`cellhaul_instance_load`].
#[no_mangle]
pub unsafe extern "C" fn cellhaul_instance_from_json(json: *const c_char, out: *mut *mut CellhaulInstance) -> CellhaulStatus {
    guarded(|| {
        out_arg(out)?;
        let json = unsafe { str_arg(json, "json") }?;
        hand_out(out, wrap(Instance::from_json(json)?)?);
        Ok(())
    })
}

/// Generate a random instance with default radio and traffic parameters.
///
/// # Safety
/// `out` must be NULL or point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cellhaul_instance_generate(
    width_m: f64,
    height_m: f64,
    subarea_side_m: f64,
    n_sc: usize,
    n_ban: usize,
    seed: u64,
    out: *mut *mut CellhaulInstance,
) -> CellhaulStatus {
    guarded(|| {
        out_arg(out)?;
        let area = AreaSpec::new(width_m, height_m, subarea_side_m)?;
        hand_out(out, wrap(generate_instance(area, n_sc, n_ban, seed, &ParamBundle::default())?)?);
        Ok(())
    })
}

/// Write the instance as JSON.
///
/// # Safety
/// `instance` must be NULL or a live handle; `path` NULL or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cellhaul_instance_save(instance: *const CellhaulInstance, path: *const c_char) -> CellhaulStatus {
    guarded(|| {
        let inst = unsafe { ref_arg(instance, "instance") }?;
        let path = unsafe { str_arg(path, "path") }?;
        save_instance(inst.scenario.instance(), path)?;
        Ok(())
    })
}

/// Subarea count of the planning grid, or 0 for a NULL handle.
///
/// # Safety
/// `instance` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cellhaul_instance_subarea_count(instance: *const CellhaulInstance) -> usize {
    unsafe { instance.as_ref() }.map_or(0, |i| i.scenario.subarea_count())
}

/// # Safety
/// `instance` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cellhaul_instance_free(instance: *mut CellhaulInstance) {
    if !instance.is_null() {
        // SAFETY: the handle was created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(instance) });
    }
}

unsafe fn solve_with(
    instance: *const CellhaulInstance,
    config_json: *const c_char,
    out: *mut *mut CellhaulReport,
    baseline: bool,
) -> CellhaulStatus {
    guarded(|| {
        out_arg(out)?;
        let inst = unsafe { ref_arg(instance, "instance") }?;
        let config = if config_json.is_null() {
            SolverConfig::default()
        } else {
            SolverConfig::from_json(unsafe { str_arg(config_json, "config_json") }?)?
        };
        let report = if baseline {
            solve_single_tabu_scenario(&inst.scenario, &config)?
        } else {
            solve_scenario(&inst.scenario, &config)?
        };
        hand_out(out, CellhaulReport { report, scenario: inst.scenario.clone() });
        Ok(())
    })
}

/// Run the two-level ε-constraint solver. `config_json` may be NULL for
/// defaults.
///
/// # Safety
/// `instance` must be NULL or a live handle, `config_json` NULL or
/// NUL-terminated, `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn cellhaul_solve(
    instance: *const CellhaulInstance,
    config_json: *const c_char,
    out: *mut *mut CellhaulReport,
) -> CellhaulStatus {
    unsafe { solve_with(instance, config_json, out, false) }
}

/// Run the single-level tabu comparator.
///
/// # Safety
/// As for [`cellhaul_solve`].
#[no_mangle]
pub unsafe extern "C" fn cellhaul_solve_single_tabu(
    instance: *const CellhaulInstance,
    config_json: *const c_char,
    out: *mut *mut CellhaulReport,
) -> CellhaulStatus {
    unsafe { solve_with(instance, config_json, out, true) }
}

/// Frontier size, or 0 for a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cellhaul_report_len(report: *const CellhaulReport) -> usize {
    unsafe { report.as_ref() }.map_or(0, |r| r.report.frontier.len())
}

/// Objectives of frontier point `index` (ascending cost).
///
/// # Safety
/// `report` must be NULL or a live handle; `cost` and `uncovered` NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cellhaul_report_point(
    report: *const CellhaulReport,
    index: usize,
    cost: *mut f64,
    uncovered: *mut u32,
) -> CellhaulStatus {
    guarded(|| {
        let r = unsafe { ref_arg(report, "report") }?;
        if cost.is_null() || uncovered.is_null() {
            return Err(Fail(CellhaulStatus::NullPointer, "output pointer is NULL".into()));
        }
        let entries = r.report.frontier.entries();
        let e = entries.get(index).ok_or_else(|| {
            Fail(CellhaulStatus::OutOfRange, format!("index {index} out of range for {} points", entries.len()))
        })?;
        // SAFETY: both pointers were checked non-NULL.
        unsafe {
            *cost = e.objective.cost;
            *uncovered = e.objective.uncovered;
        }
        Ok(())
    })
}

/// Write the report directory (frontier, solutions, bounds, trace, config,
/// manifest).
///
/// # Safety
/// `report` must be NULL or a live handle; `dir` NULL or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cellhaul_report_write(report: *const CellhaulReport, dir: *const c_char) -> CellhaulStatus {
    guarded(|| {
        let r = unsafe { ref_arg(report, "report") }?;
        let dir = unsafe { str_arg(dir, "dir") }?;
        let json = r.scenario.instance().to_json();
        let mut m = RunManifest::new(r.report.algorithm.name(), json.as_bytes(), r.scenario.subarea_count());
        m.command = vec!["cellhaul_report_write".to_string()];
        m.seed = Some(r.report.config.seed);
        m.epsilon0 = Some(r.report.epsilon0);
        m.delta_c = Some(r.report.delta_c);
        m.delta_eps = Some(r.report.delta_eps);
        m.wall_time_s = r.report.wall_time_s;
        write_report(Path::new(dir), &r.report, &r.scenario, &m)?;
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cellhaul_report_free(report: *mut CellhaulReport) {
    if !report.is_null() {
        // SAFETY: the handle was created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(report) });
    }
}
