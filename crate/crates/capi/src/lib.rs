//! C ABI for embedding the simulator from other languages.
//!
//! Handles are opaque: `DsimScenario` wraps a parsed scenario and `DsimRun`
//! a completed simulation. Every function returns a `DsimStatus`; on any
//! failure `dsim_last_error_message` exposes a human-readable diagnostic
//! for the calling thread. Strings returned through out-parameters are
//! owned by the caller and must be released with `dsim_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use daas_sim::engine::{self, RunOutput};
use daas_sim::metrics::metrics_csv;
use daas_sim::scenario::{parse_scenario, ScenarioConfig};
use daas_sim::scheduler::{Discipline, SchedulerPolicy};

/// Result code of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    RunError = 5,
}

/// Queue discipline selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsimDiscipline {
    Fifo = 0,
    Ira = 1,
}

/// Opaque parsed scenario.
pub struct DsimScenario {
    config: ScenarioConfig,
}

/// Opaque finished run.
pub struct DsimRun {
    output: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = CString::new(message.into().replace('\0', " ")).expect("nul stripped");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Message describing the most recent failure on this thread, or null.
/// The pointer stays valid until the next API call on the same thread.
#[no_mangle]
pub extern "C" fn dsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |text| text.as_ptr())
    })
}

/// Library version as a static string; never freed.
#[no_mangle]
pub extern "C" fn dsim_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Create a scenario with the built-in defaults.
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn dsim_scenario_default(out: *mut *mut DsimScenario) -> DsimStatus {
    clear_error();
    if out.is_null() {
        set_error("out pointer is null");
        return DsimStatus::NullPointer;
    }
    let handle = Box::new(DsimScenario {
        config: ScenarioConfig::default(),
    });
    *out = Box::into_raw(handle);
    DsimStatus::Ok
}

/// Parse scenario text (same `key = value` format as the CLI accepts).
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` valid for
/// writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn dsim_scenario_parse(
    text: *const c_char,
    out: *mut *mut DsimScenario,
) -> DsimStatus {
    clear_error();
    if text.is_null() || out.is_null() {
        set_error("text or out pointer is null");
        return DsimStatus::NullPointer;
    }
    let Ok(text) = CStr::from_ptr(text).to_str() else {
        set_error("scenario text is not valid UTF-8");
        return DsimStatus::InvalidUtf8;
    };
    match parse_scenario(text) {
        Ok(config) => {
            *out = Box::into_raw(Box::new(DsimScenario { config }));
            DsimStatus::Ok
        }
        Err(err) => {
            set_error(err.to_string());
            DsimStatus::ParseError
        }
    }
}

/// # Safety
/// `scenario` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn dsim_scenario_set_seed(
    scenario: *mut DsimScenario,
    seed: u64,
) -> DsimStatus {
    clear_error();
    let Some(scenario) = scenario.as_mut() else {
        set_error("scenario pointer is null");
        return DsimStatus::NullPointer;
    };
    scenario.config.set_seed(seed);
    DsimStatus::Ok
}

/// # Safety
/// `scenario` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn dsim_scenario_set_discipline(
    scenario: *mut DsimScenario,
    discipline: DsimDiscipline,
) -> DsimStatus {
    clear_error();
    let Some(scenario) = scenario.as_mut() else {
        set_error("scenario pointer is null");
        return DsimStatus::NullPointer;
    };
    scenario.config.discipline = match discipline {
        DsimDiscipline::Fifo => Discipline::Fifo,
        DsimDiscipline::Ira => Discipline::Ira,
    };
    DsimStatus::Ok
}

/// # Safety
/// `scenario` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn dsim_scenario_set_beta(
    scenario: *mut DsimScenario,
    beta: f64,
) -> DsimStatus {
    clear_error();
    let Some(scenario) = scenario.as_mut() else {
        set_error("scenario pointer is null");
        return DsimStatus::NullPointer;
    };
    if !beta.is_finite() || !(0.0..=1.0).contains(&beta) {
        set_error(format!("beta {beta} outside [0, 1]"));
        return DsimStatus::InvalidArgument;
    }
    scenario.config.beta = beta;
    DsimStatus::Ok
}

/// # Safety
/// `scenario` must be null or an owned handle from this library, not
/// freed before.
#[no_mangle]
pub unsafe extern "C" fn dsim_scenario_free(scenario: *mut DsimScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Simulate the scenario. On success the caller owns the returned run.
/// # Safety
/// `scenario` must be null or a live handle; `out` valid for writing a
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn dsim_run(
    scenario: *const DsimScenario,
    out: *mut *mut DsimRun,
) -> DsimStatus {
    clear_error();
    if out.is_null() {
        set_error("out pointer is null");
        return DsimStatus::NullPointer;
    }
    let Some(scenario) = scenario.as_ref() else {
        set_error("scenario pointer is null");
        return DsimStatus::NullPointer;
    };
    let config = scenario.config.clone();
    let result = catch_unwind(AssertUnwindSafe(|| -> Result<RunOutput, String> {
        let run_config = config.run_config().map_err(|e| e.to_string())?;
        engine::run(&config.workload, &run_config).map_err(|e| e.to_string())
    }));
    match result {
        Ok(Ok(output)) => {
            *out = Box::into_raw(Box::new(DsimRun { output }));
            DsimStatus::Ok
        }
        Ok(Err(message)) => {
            set_error(message);
            DsimStatus::RunError
        }
        Err(_) => {
            set_error("internal panic during simulation");
            DsimStatus::RunError
        }
    }
}

/// # Safety
/// `run` must be null or an owned handle from this library, not freed
/// before.
#[no_mangle]
pub unsafe extern "C" fn dsim_run_free(run: *mut DsimRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

fn export_string(text: String, out: *mut *mut c_char) -> DsimStatus {
    let owned = CString::new(text.replace('\0', " ")).expect("nul stripped");
    unsafe { *out = owned.into_raw() };
    DsimStatus::Ok
}

/// The event trace as CSV text; free with `dsim_string_free`.
/// # Safety
/// `run` must be null or a live handle; `out` valid for writing a
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn dsim_run_trace_csv(
    run: *const DsimRun,
    out: *mut *mut c_char,
) -> DsimStatus {
    clear_error();
    if out.is_null() {
        set_error("out pointer is null");
        return DsimStatus::NullPointer;
    }
    let Some(run) = run.as_ref() else {
        set_error("run pointer is null");
        return DsimStatus::NullPointer;
    };
    export_string(run.output.trace.to_csv(), out)
}

/// Per-class metrics as CSV text; free with `dsim_string_free`.
/// # Safety
/// `run` must be null or a live handle; `out` valid for writing a
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn dsim_run_metrics_csv(
    run: *const DsimRun,
    out: *mut *mut c_char,
) -> DsimStatus {
    clear_error();
    if out.is_null() {
        set_error("out pointer is null");
        return DsimStatus::NullPointer;
    }
    let Some(run) = run.as_ref() else {
        set_error("run pointer is null");
        return DsimStatus::NullPointer;
    };
    export_string(metrics_csv(&[("0".to_string(), &run.output.metrics)]), out)
}

unsafe fn class_metric(
    run: *const DsimRun,
    class: u8,
    out: *mut f64,
    pick: impl Fn(&DsimRun, usize) -> f64,
    aggregate: impl Fn(&DsimRun) -> f64,
) -> DsimStatus {
    clear_error();
    if out.is_null() {
        set_error("out pointer is null");
        return DsimStatus::NullPointer;
    }
    let Some(run_ref) = run.as_ref() else {
        set_error("run pointer is null");
        return DsimStatus::NullPointer;
    };
    match class {
        0 => {
            *out = aggregate(run_ref);
            DsimStatus::Ok
        }
        1..=6 => {
            *out = pick(run_ref, (class - 1) as usize);
            DsimStatus::Ok
        }
        _ => {
            set_error(format!("class {class} outside 0..=6"));
            DsimStatus::InvalidArgument
        }
    }
}

/// Mean wait in seconds for a priority class, or the aggregate for class 0.
/// # Safety
/// `run` must be null or a live handle; `out` valid for writing a double.
#[no_mangle]
pub unsafe extern "C" fn dsim_run_mean_wait(
    run: *const DsimRun,
    class: u8,
    out: *mut f64,
) -> DsimStatus {
    class_metric(
        run,
        class,
        out,
        |r, idx| r.output.metrics.per_class[idx].mean_wait,
        |r| r.output.metrics.aggregate.mean_wait,
    )
}

/// SLA violation rate for a priority class, or the aggregate for class 0.
/// # Safety
/// `run` must be null or a live handle; `out` valid for writing a double.
#[no_mangle]
pub unsafe extern "C" fn dsim_run_violation_rate(
    run: *const DsimRun,
    class: u8,
    out: *mut f64,
) -> DsimStatus {
    class_metric(
        run,
        class,
        out,
        |r, idx| r.output.metrics.per_class[idx].violation_rate,
        |r| r.output.metrics.aggregate.violation_rate,
    )
}

/// Requests in a priority class, or all requests for class 0.
/// # Safety
/// `run` must be null or a live handle; `out` valid for writing a u64.
#[no_mangle]
pub unsafe extern "C" fn dsim_run_request_count(
    run: *const DsimRun,
    class: u8,
    out: *mut u64,
) -> DsimStatus {
    clear_error();
    if out.is_null() {
        set_error("out pointer is null");
        return DsimStatus::NullPointer;
    }
    let Some(run_ref) = run.as_ref() else {
        set_error("run pointer is null");
        return DsimStatus::NullPointer;
    };
    match class {
        0 => {
            *out = run_ref.output.metrics.aggregate.count as u64;
            DsimStatus::Ok
        }
        1..=6 => {
            *out = run_ref.output.metrics.per_class[(class - 1) as usize].count as u64;
            DsimStatus::Ok
        }
        _ => {
            set_error(format!("class {class} outside 0..=6"));
            DsimStatus::InvalidArgument
        }
    }
}

/// Run-level utilization fractions.
/// # Safety
/// `run` must be null or a live handle; all out-pointers valid for
/// writing doubles.
#[no_mangle]
pub unsafe extern "C" fn dsim_run_utilization(
    run: *const DsimRun,
    reserved: *mut f64,
    actual: *mut f64,
    overload_fraction: *mut f64,
) -> DsimStatus {
    clear_error();
    if reserved.is_null() || actual.is_null() || overload_fraction.is_null() {
        set_error("out pointer is null");
        return DsimStatus::NullPointer;
    }
    let Some(run) = run.as_ref() else {
        set_error("run pointer is null");
        return DsimStatus::NullPointer;
    };
    let agg = &run.output.metrics.aggregate;
    *reserved = agg.mean_reserved_utilization;
    *actual = agg.mean_actual_utilization;
    *overload_fraction = agg.overload_time_fraction;
    DsimStatus::Ok
}

/// Release a string produced by this library.
/// # Safety
/// `text` must be null or a string returned by this library, not freed
/// before.
#[no_mangle]
pub unsafe extern "C" fn dsim_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Convenience: set the policy on an already-parsed scenario, run both
/// disciplines over the identical workload, and report whether the
/// priority discipline kept classes 1..3 at or below the baseline's
/// violation rates.
/// # Safety
/// `scenario` must be null or a live handle; `out` valid for writing a
/// bool.
#[no_mangle]
pub unsafe extern "C" fn dsim_compare_p123_not_worse(
    scenario: *const DsimScenario,
    out: *mut bool,
) -> DsimStatus {
    clear_error();
    if out.is_null() {
        set_error("out pointer is null");
        return DsimStatus::NullPointer;
    }
    let Some(scenario) = scenario.as_ref() else {
        set_error("scenario pointer is null");
        return DsimStatus::NullPointer;
    };
    let config = scenario.config.clone();
    let result = catch_unwind(AssertUnwindSafe(|| -> Result<bool, String> {
        let requests =
            daas_sim::workload::generate(&config.workload).map_err(|e| e.to_string())?;
        let run = |discipline| -> Result<RunOutput, String> {
            let mut cfg = config.run_config().map_err(|e| e.to_string())?;
            cfg.policy = SchedulerPolicy::new(discipline);
            engine::run_requests(&requests, config.seed(), &cfg).map_err(|e| e.to_string())
        };
        let fifo = run(Discipline::Fifo)?;
        let ira = run(Discipline::Ira)?;
        let report =
            daas_sim::metrics::compare(&fifo.metrics, &ira.metrics).map_err(|e| e.to_string())?;
        Ok(report.candidate_p123_not_worse)
    }));
    match result {
        Ok(Ok(flag)) => {
            *out = flag;
            DsimStatus::Ok
        }
        Ok(Err(message)) => {
            set_error(message);
            DsimStatus::RunError
        }
        Err(_) => {
            set_error("internal panic during simulation");
            DsimStatus::RunError
        }
    }
}
