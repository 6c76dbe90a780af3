//! C interface to the mfcl simulator.
//!
//! Every fallible call returns an [`MfclStatus`]; on failure the message is
//! available from [`mfcl_last_error`] on the same thread until the next call.
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Panics never unwind into C: they are
//! reported as [`MfclStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mfcl::diagnostics::ConvergenceReport;
use mfcl::experiments::Orchestrator;
use mfcl::model::{ExperimentConfig, SpaceTimeField, TestFunction};
use mfcl::pde::{exact_riemann_field, solve_viscous, PdeScheme};
use mfcl::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfclStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    Numerical = 5,
    OutOfRange = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfclTestFunction {
    Gauss = 0,
    Lorentz = 1,
    Tanh = 2,
}

impl From<TestFunction> for MfclTestFunction {
    fn from(t: TestFunction) -> Self {
        match t {
            TestFunction::Gauss => Self::Gauss,
            TestFunction::Lorentz => Self::Lorentz,
            TestFunction::Tanh => Self::Tanh,
        }
    }
}

/// One row of a sweep report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfclReportRow {
    pub epsilon: f64,
    pub theta: MfclTestFunction,
    pub p: f64,
    pub weak_star_error: f64,
    pub l1_mean_field: f64,
    pub mean_consistency: f64,
    pub oleinik_margin: f64,
    pub mass_defect: f64,
    pub n_mc: usize,
}

/// Opaque experiment configuration.
pub struct MfclConfig(ExperimentConfig);

/// Opaque space-time field on a uniform grid.
pub struct MfclField(SpaceTimeField);

/// Opaque zero-noise sweep report.
pub struct MfclReport(ConvergenceReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MfclStatus {
    match e {
        Error::Config { .. } | Error::UnknownConfigKey { .. } => MfclStatus::Config,
        Error::InvalidGrid(_) | Error::InvalidArgument(_) | Error::NotConvex(_) | Error::UnknownFigure(_) => {
            MfclStatus::InvalidArgument
        }
        Error::TimeOutOfRange { .. } | Error::MismatchedTimes(_) => MfclStatus::OutOfRange,
        Error::Io { .. } => MfclStatus::Io,
        _ => MfclStatus::Numerical,
    }
}

struct Failure(MfclStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: MfclStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

/// Runs `body`, records any failure and converts it to a status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MfclStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MfclStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {message}"));
            MfclStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(MfclStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(MfclStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(MfclStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(MfclStatus::NullPointer, "output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(MfclStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(fail(
            MfclStatus::OutOfRange,
            format!("buffer of {len} values, {} needed", src.len()),
        ));
    }
    if out.is_null() {
        return Err(fail(MfclStatus::NullPointer, "output buffer is null"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn mfcl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mfcl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Desk-scale default configuration.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcl_config_desk(out: *mut *mut MfclConfig) -> MfclStatus {
    guard(|| put(out, MfclConfig(ExperimentConfig::desk())))
}

/// Parses `key = value` lines on top of the desk-scale defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcl_config_parse(text_ptr: *const c_char, out: *mut *mut MfclConfig) -> MfclStatus {
    guard(|| {
        let src = text(text_ptr, "config text")?;
        let cfg = ExperimentConfig::parse_with_base(src, ExperimentConfig::desk())?;
        cfg.validate()?;
        put(out, MfclConfig(cfg))
    })
}

/// Sets one key as if it appeared in a config file.
///
/// # Safety
/// `config` must come from this library; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn mfcl_config_set(
    config: *mut MfclConfig,
    key: *const c_char,
    value: *const c_char,
) -> MfclStatus {
    guard(|| {
        let cfg = config
            .as_mut()
            .ok_or_else(|| fail(MfclStatus::NullPointer, "config is null"))?;
        let key = text(key, "key")?;
        let value = text(value, "value")?;
        let mut next = cfg.0.clone();
        next.set(key, value)?;
        next.validate()?;
        cfg.0 = next;
        Ok(())
    })
}

/// Configuration in `key = value` form; free with [`mfcl_string_free`].
///
/// # Safety
/// `config` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcl_config_to_text(config: *const MfclConfig, out: *mut *mut c_char) -> MfclStatus {
    guard(|| {
        let cfg = borrow(config, "config")?;
        if out.is_null() {
            return Err(fail(MfclStatus::NullPointer, "output pointer is null"));
        }
        let c = CString::new(cfg.0.to_text()).map_err(|e| fail(MfclStatus::InvalidArgument, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn mfcl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `config` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn mfcl_config_free(config: *mut MfclConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Solves the viscous mean-field equation for the configured data.
///
/// # Safety
/// `config` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcl_solve_viscous(config: *const MfclConfig, out: *mut *mut MfclField) -> MfclStatus {
    guard(|| {
        let cfg = &borrow(config, "config")?.0;
        cfg.validate()?;
        let grid = cfg.grid()?;
        let field = solve_viscous(
            &grid,
            &cfg.flux,
            cfg.epsilon,
            &cfg.initial.build(),
            cfg.final_time,
            &PdeScheme::with_safety(cfg.cfl_safety),
        )?;
        put(out, MfclField(field))
    })
}

/// Exact entropy solution of the configured Riemann data at `times`.
///
/// # Safety
/// `config` must come from this library, `times` must hold `n_times`
/// values and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcl_exact_riemann(
    config: *const MfclConfig,
    times: *const f64,
    n_times: usize,
    out: *mut *mut MfclField,
) -> MfclStatus {
    guard(|| {
        let cfg = &borrow(config, "config")?.0;
        let times = slice(times, n_times, "times")?;
        let field = exact_riemann_field(&cfg.flux, &cfg.initial.build(), &cfg.grid()?, times)?;
        put(out, MfclField(field))
    })
}

/// Number of grid nodes and stored time slices.
///
/// # Safety
/// `field` must come from this library; the outputs must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn mfcl_field_shape(field: *const MfclField, n_x: *mut usize, n_t: *mut usize) -> MfclStatus {
    guard(|| {
        let f = &borrow(field, "field")?.0;
        if n_x.is_null() || n_t.is_null() {
            return Err(fail(MfclStatus::NullPointer, "output pointer is null"));
        }
        *n_x = f.grid().n_points();
        *n_t = f.n_times();
        Ok(())
    })
}

/// Copies the grid nodes into `out`, which holds `len` values.
///
/// # Safety
/// `field` must come from this library and `out` hold `len` writable
/// values.
#[no_mangle]
pub unsafe extern "C" fn mfcl_field_nodes(field: *const MfclField, out: *mut f64, len: usize) -> MfclStatus {
    guard(|| copy_out(borrow(field, "field")?.0.grid().nodes(), out, len))
}

/// Copies the slice times into `out`, which holds `len` values.
///
/// # Safety
/// As for [`mfcl_field_nodes`].
#[no_mangle]
pub unsafe extern "C" fn mfcl_field_times(field: *const MfclField, out: *mut f64, len: usize) -> MfclStatus {
    guard(|| copy_out(borrow(field, "field")?.0.times(), out, len))
}

/// Copies slice `j` into `out`, which holds `len` values.
///
/// # Safety
/// As for [`mfcl_field_nodes`].
#[no_mangle]
pub unsafe extern "C" fn mfcl_field_row(field: *const MfclField, j: usize, out: *mut f64, len: usize) -> MfclStatus {
    guard(|| {
        let f = &borrow(field, "field")?.0;
        if j >= f.n_times() {
            return Err(fail(
                MfclStatus::OutOfRange,
                format!("slice {j} of {}", f.n_times()),
            ));
        }
        copy_out(f.row(j), out, len)
    })
}

/// # Safety
/// `field` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn mfcl_field_free(field: *mut MfclField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Zero-noise sweep over `n_eps` noise levels on `threads` workers
/// (0 uses every core). The report does not depend on `threads`.
///
/// # Safety
/// `config` must come from this library, `epsilons` must hold `n_eps`
/// values and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcl_sweep(
    config: *const MfclConfig,
    epsilons: *const f64,
    n_eps: usize,
    threads: usize,
    out: *mut *mut MfclReport,
) -> MfclStatus {
    guard(|| {
        let cfg = &borrow(config, "config")?.0;
        let eps = slice(epsilons, n_eps, "epsilons")?;
        let orch = Orchestrator::new((threads > 0).then_some(threads))?;
        let report = orch.run_zero_noise_sweep(cfg, eps)?;
        put(out, MfclReport(report))
    })
}

/// # Safety
/// `report` must come from this library and `n` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcl_report_len(report: *const MfclReport, n: *mut usize) -> MfclStatus {
    guard(|| {
        let r = &borrow(report, "report")?.0;
        if n.is_null() {
            return Err(fail(MfclStatus::NullPointer, "output pointer is null"));
        }
        *n = r.rows.len();
        Ok(())
    })
}

/// # Safety
/// `report` must come from this library and `row` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcl_report_row(report: *const MfclReport, i: usize, row: *mut MfclReportRow) -> MfclStatus {
    guard(|| {
        let r = &borrow(report, "report")?.0;
        let src = r
            .rows
            .get(i)
            .ok_or_else(|| fail(MfclStatus::OutOfRange, format!("row {i} of {}", r.rows.len())))?;
        if row.is_null() {
            return Err(fail(MfclStatus::NullPointer, "output pointer is null"));
        }
        *row = MfclReportRow {
            epsilon: src.epsilon,
            theta: src.theta.into(),
            p: src.p,
            weak_star_error: src.weak_star_error,
            l1_mean_field: src.l1_mean_field,
            mean_consistency: src.mean_consistency,
            oleinik_margin: src.oleinik_margin,
            mass_defect: src.mass_defect,
            n_mc: src.n_mc,
        };
        Ok(())
    })
}

/// Writes the report as CSV to `path`.
///
/// # Safety
/// `report` must come from this library and `path` be a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn mfcl_report_write_csv(report: *const MfclReport, path: *const c_char) -> MfclStatus {
    guard(|| {
        let r = &borrow(report, "report")?.0;
        let path = text(path, "path")?;
        let mut buf = Vec::new();
        r.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))?;
        Ok(())
    })
}

/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn mfcl_report_free(report: *mut MfclReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
