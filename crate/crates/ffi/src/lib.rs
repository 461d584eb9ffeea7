//! C ABI over the evaflow library.
//!
//! Objects are exposed as opaque handles created by `*_new` functions and released by the
//! matching `*_free`. Every fallible call returns an [`EvaflowStatus`]; the message of the
//! last failure on the calling thread is available from [`evaflow_last_error`]. Panics are
//! caught at the boundary and reported as [`EvaflowStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use evaflow::cli::{run_suite, CliError, Subcommand};
use evaflow::report::Report;
use evaflow::simulator::{preset, ScenarioConfig, SimError, Simulation};

/// Result codes. The first four match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaflowStatus {
    Ok = 0,
    CheckFailed = 1,
    Config = 2,
    Runtime = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Opaque simulation handle.
pub struct EvaflowSimulation {
    sim: Simulation,
}

/// Opaque report handle; case names are cached as C strings owned by the handle.
pub struct EvaflowReport {
    report: Report,
    names: Vec<CString>,
}

/// Which verification suite to run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaflowSuite {
    Surface = 0,
    Transport = 1,
    Variational = 2,
    Mms = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(EvaflowStatus, String);

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match e.status() {
            3 => EvaflowStatus::Runtime,
            _ => EvaflowStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        CliError::from(e).into()
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Run `f`, translating failures and panics into status codes.
fn guard(f: impl FnOnce() -> Result<EvaflowStatus, Failure>) -> EvaflowStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => {
            if status == EvaflowStatus::Ok {
                set_error("");
            }
            status
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside evaflow");
            EvaflowStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(EvaflowStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(EvaflowStatus::InvalidUtf8, e.to_string()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(EvaflowStatus::NullPointer, "null handle".into()))
}

unsafe fn handle_mut<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(EvaflowStatus::NullPointer, "null handle".into()))
}

fn null_out() -> Failure {
    Failure(EvaflowStatus::NullPointer, "null output pointer".into())
}

/// Message of the last failure on this thread, or an empty string. Valid until the next
/// evaflow call on the same thread.
#[no_mangle]
pub extern "C" fn evaflow_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn new_simulation(config: ScenarioConfig, out: *mut *mut EvaflowSimulation) -> Result<EvaflowStatus, Failure> {
    if out.is_null() {
        return Err(null_out());
    }
    let sim = Simulation::new(config)?;
    unsafe { *out = Box::into_raw(Box::new(EvaflowSimulation { sim })) };
    Ok(EvaflowStatus::Ok)
}

/// Create a simulation from a scenario config in JSON.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evaflow_simulation_new(config_json: *const c_char, out: *mut *mut EvaflowSimulation) -> EvaflowStatus {
    guard(|| {
        let config = ScenarioConfig::from_json(text(config_json)?)?;
        new_simulation(config, out)
    })
}

/// Create a simulation from a built-in preset name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evaflow_simulation_from_preset(name: *const c_char, out: *mut *mut EvaflowSimulation) -> EvaflowStatus {
    guard(|| {
        let name = text(name)?;
        let config = preset(name).ok_or_else(|| Failure(EvaflowStatus::Config, format!("unknown preset '{name}'")))?;
        new_simulation(config, out)
    })
}

/// Advance by `steps` steps (stopping early at the configured end).
///
/// # Safety
/// `sim` must come from `evaflow_simulation_new` or `evaflow_simulation_from_preset`.
#[no_mangle]
pub unsafe extern "C" fn evaflow_simulation_step(sim: *mut EvaflowSimulation, steps: usize) -> EvaflowStatus {
    guard(|| {
        let s = &mut handle_mut(sim)?.sim;
        for _ in 0..steps {
            if s.steps_taken >= s.steps {
                break;
            }
            s.step()?;
        }
        Ok(EvaflowStatus::Ok)
    })
}

/// Run to the configured end.
///
/// # Safety
/// `sim` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn evaflow_simulation_run(sim: *mut EvaflowSimulation) -> EvaflowStatus {
    guard(|| {
        handle_mut(sim)?.sim.run()?;
        Ok(EvaflowStatus::Ok)
    })
}

/// Current time.
///
/// # Safety
/// `sim` must be a valid handle and `t` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evaflow_simulation_time(sim: *const EvaflowSimulation, t: *mut f64) -> EvaflowStatus {
    guard(|| {
        let s = &handle(sim)?.sim;
        *t.as_mut().ok_or_else(null_out)? = s.state.t;
        Ok(EvaflowStatus::Ok)
    })
}

/// Number of phase-B cells.
///
/// # Safety
/// `sim` must be a valid handle and `n` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evaflow_simulation_cells(sim: *const EvaflowSimulation, n: *mut usize) -> EvaflowStatus {
    guard(|| {
        *n.as_mut().ok_or_else(null_out)? = handle(sim)?.sim.state.rho_b.len();
        Ok(EvaflowStatus::Ok)
    })
}

/// Copy phase-B cell centers, densities, velocities and pressures into caller buffers of
/// length `len`, which must equal the cell count. Any buffer may be null to skip it.
///
/// # Safety
/// Non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn evaflow_simulation_phase_b(
    sim: *const EvaflowSimulation,
    len: usize,
    grid: *mut f64,
    rho: *mut f64,
    vel: *mut f64,
    pressure: *mut f64,
) -> EvaflowStatus {
    guard(|| {
        let s = &handle(sim)?.sim;
        let p = s.solver.phase_b(&s.state);
        if len != p.rho.len() {
            return Err(Failure(EvaflowStatus::OutOfRange, format!("buffer length {len} != cell count {}", p.rho.len())));
        }
        for (dst, src) in [(grid, &p.grid), (rho, &p.rho), (vel, &p.vel), (pressure, &p.pressure)] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
            }
        }
        Ok(EvaflowStatus::Ok)
    })
}

/// Mass-law residual and energy residual (relative to the kinetic-energy scale) over the
/// run so far.
///
/// # Safety
/// `sim` must be a valid handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn evaflow_simulation_residuals(sim: *const EvaflowSimulation, mass: *mut f64, energy: *mut f64) -> EvaflowStatus {
    guard(|| {
        let summary = handle(sim)?.sim.summary(1.0)?;
        *mass.as_mut().ok_or_else(null_out)? = summary.mass_residual;
        *energy.as_mut().ok_or_else(null_out)? = summary.energy_relative;
        Ok(EvaflowStatus::Ok)
    })
}

/// Evaluate the configured checks; returns `CheckFailed` if any fails.
///
/// # Safety
/// `sim` must be a valid handle; `tol_scale` must be positive.
#[no_mangle]
pub unsafe extern "C" fn evaflow_simulation_check(sim: *const EvaflowSimulation, tol_scale: f64) -> EvaflowStatus {
    guard(|| {
        let summary = handle(sim)?.sim.summary(tol_scale)?;
        Ok(if summary.passed() { EvaflowStatus::Ok } else { EvaflowStatus::CheckFailed })
    })
}

/// Release a simulation. Null is ignored.
///
/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evaflow_simulation_free(sim: *mut EvaflowSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Run the verification suite numbered as in [`EvaflowSuite`]. `config_json` may be null for
/// the defaults. On success `out` receives a report handle and the status is `Ok` or
/// `CheckFailed`.
///
/// # Safety
/// `config_json` must be null or NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn evaflow_suite_run(
    suite: u32,
    config_json: *const c_char,
    seed: u64,
    tol_scale: f64,
    out: *mut *mut EvaflowReport,
) -> EvaflowStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out());
        }
        let config = if config_json.is_null() { None } else { Some(text(config_json)?) };
        let sub = [Subcommand::VerifySurface, Subcommand::VerifyTransport, Subcommand::VerifyVariational, Subcommand::Mms]
            .get(suite as usize)
            .copied()
            .ok_or_else(|| Failure(EvaflowStatus::OutOfRange, format!("unknown suite {suite}")))?;
        let report = run_suite(sub, config, seed, tol_scale)?;
        let names = report.cases.iter().map(|c| CString::new(c.name.as_str()).unwrap_or_default()).collect();
        let passed = report.passed();
        *out = Box::into_raw(Box::new(EvaflowReport { report, names }));
        Ok(if passed { EvaflowStatus::Ok } else { EvaflowStatus::CheckFailed })
    })
}

/// Number of cases in a report.
///
/// # Safety
/// `report` must be a valid handle and `n` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evaflow_report_len(report: *const EvaflowReport, n: *mut usize) -> EvaflowStatus {
    guard(|| {
        *n.as_mut().ok_or_else(null_out)? = handle(report)?.report.cases.len();
        Ok(EvaflowStatus::Ok)
    })
}

/// Case `index`: its name (owned by the report), value, tolerance and pass flag. Null
/// output pointers are skipped.
///
/// # Safety
/// `report` must be a valid handle; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn evaflow_report_case(
    report: *const EvaflowReport,
    index: usize,
    name: *mut *const c_char,
    value: *mut f64,
    tolerance: *mut f64,
    pass: *mut bool,
) -> EvaflowStatus {
    guard(|| {
        let r = handle(report)?;
        let c = r
            .report
            .cases
            .get(index)
            .ok_or_else(|| Failure(EvaflowStatus::OutOfRange, format!("case {index} of {}", r.report.cases.len())))?;
        if let Some(p) = name.as_mut() {
            *p = r.names[index].as_ptr();
        }
        if let Some(p) = value.as_mut() {
            *p = c.value;
        }
        if let Some(p) = tolerance.as_mut() {
            *p = c.tolerance;
        }
        if let Some(p) = pass.as_mut() {
            *p = c.pass;
        }
        Ok(EvaflowStatus::Ok)
    })
}

/// Report as a JSON string; release it with [`evaflow_string_free`]. Returns null on error.
///
/// # Safety
/// `report` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn evaflow_report_json(report: *const EvaflowReport) -> *mut c_char {
    let mut json = ptr::null_mut();
    guard(|| {
        let s = serde_json::to_string(&handle(report)?.report).map_err(|e| Failure(EvaflowStatus::Runtime, e.to_string()))?;
        json = CString::new(s).map_err(|e| Failure(EvaflowStatus::Runtime, e.to_string()))?.into_raw();
        Ok(EvaflowStatus::Ok)
    });
    json
}

/// Release a report. Null is ignored.
///
/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evaflow_report_free(report: *mut EvaflowReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from `evaflow_report_json` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evaflow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
