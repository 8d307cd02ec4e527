//! C ABI over `hexcryst`.
//!
//! Objects are opaque handles created by `hc_*_new`-style functions and
//! released with the matching `hc_*_free`. Every fallible call returns an
//! [`HcStatus`]; on failure [`hc_last_error`] describes the problem for the
//! calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hexcryst::cli::config::ShapeConfig;
use hexcryst::optimize::{self, MinimizerConfig, MinimizerResult};
use hexcryst::{energy, AtomicMeasure, DomainSpec, Error, Point};

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDomain = 3,
    InvalidMeasure = 4,
    NonConvergence = 5,
    CellTooLarge = 6,
    EmptyCell = 7,
    BufferTooSmall = 8,
    Internal = 9,
}

impl From<&Error> for HcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidDomain(_) | Error::InvalidPolygon(_) => Self::InvalidDomain,
            Error::InvalidMeasure(_) | Error::InvalidSites(_) => Self::InvalidMeasure,
            Error::NonConvergence { .. } => Self::NonConvergence,
            Error::CellTooLarge { .. } => Self::CellTooLarge,
            Error::EmptyCellUnrecoverable { .. } => Self::EmptyCell,
            Error::InvalidArgument(_) | Error::Config(_) | Error::InstanceTooLarge(_) | Error::DegenerateFit(_) => {
                Self::InvalidArgument
            }
            Error::Io(_) => Self::Internal,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (HcStatus, String)>) -> HcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HcStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            HcStatus::Internal
        }
    }
}

fn lib<T>(r: hexcryst::Result<T>) -> Result<T, (HcStatus, String)> {
    r.map_err(|e| ((&e).into(), e.to_string()))
}

fn null(what: &str) -> (HcStatus, String) {
    (HcStatus::NullPointer, format!("{what} is null"))
}

/// Message for the most recent failure on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn hc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Scaled domain handle.
pub struct HcDomain(DomainSpec);

/// Atomic measure handle.
pub struct HcMeasure(AtomicMeasure);

/// Minimizer output handle.
pub struct HcResult(MinimizerResult);

/// Energy decomposition.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HcEnergy {
    pub surface: f64,
    pub transport: f64,
    pub total: f64,
    pub v_lambda: f64,
    pub defect: f64,
}

impl From<&energy::EnergyReport> for HcEnergy {
    fn from(r: &energy::EnergyReport) -> Self {
        Self { surface: r.surface, transport: r.transport, total: r.total, v_lambda: r.v_lambda, defect: r.defect }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (HcStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `p` points at `len` readable values.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn points_from(xy: &[f64]) -> Vec<Point> {
    xy.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect()
}

fn put<T>(out: *mut *mut T, value: T) {
    // SAFETY: `out` was checked non-null by the caller of `put`.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Domain from a shape name such as `square`, `regular-hexagon`,
/// `regular-7-gon`, `disk-approx(64)` or `torus(1.0)`, scaled by `lambda`.
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_domain_named(name: *const c_char, lambda: f64, out: *mut *mut HcDomain) -> HcStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null; caller guarantees nul termination.
        let name = unsafe { CStr::from_ptr(name) }
            .to_str()
            .map_err(|_| (HcStatus::InvalidArgument, "name is not UTF-8".to_string()))?;
        let shape = lib(ShapeConfig::parse_name(name))?;
        let domain = match shape {
            ShapeConfig::Torus { gamma } => lib(DomainSpec::torus(gamma, lambda))?,
            ShapeConfig::CommensurateTorus { cols, rows } => lib(DomainSpec::commensurate_torus(cols, rows))?,
            other => lib(DomainSpec::polygon(lib(other.base_polygon())?.expect("polygonal"), lambda))?,
        };
        put(out, HcDomain(domain));
        Ok(())
    })
}

/// Domain from `n_vertices` counter-clockwise vertices `xy = [x0, y0, x1, …]`,
/// rescaled to unit area about the centroid, then scaled by `lambda`.
///
/// # Safety
/// `xy` must hold `2 * n_vertices` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_domain_polygon(
    xy: *const f64,
    n_vertices: usize,
    lambda: f64,
    out: *mut *mut HcDomain,
) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: forwarded caller contract.
        let xy = unsafe { slice(xy, 2 * n_vertices, "xy") }?;
        let vertices = xy.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let base = lib(ShapeConfig::Polygon { vertices }.base_polygon())?.expect("polygon");
        put(out, HcDomain(lib(DomainSpec::polygon(base, lambda))?));
        Ok(())
    })
}

/// Torus with periods `cols·a × rows·a√3` that holds the triangular lattice.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_domain_commensurate_torus(cols: usize, rows: usize, out: *mut *mut HcDomain) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, HcDomain(lib(DomainSpec::commensurate_torus(cols, rows))?));
        Ok(())
    })
}

/// `V_λ`, the area of the scaled domain; NaN for a null handle.
///
/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hc_domain_v_lambda(d: *const HcDomain) -> f64 {
    // SAFETY: caller contract.
    unsafe { d.as_ref() }.map_or(f64::NAN, |d| d.0.v_lambda())
}

/// # Safety
/// `d` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_domain_free(d: *mut HcDomain) {
    if !d.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(d) });
    }
}

/// Measure with `n` points. `masses` may be null for equal masses; otherwise
/// they are rescaled to total `V_λ`.
///
/// # Safety
/// `xy` must hold `2n` doubles, `masses` null or `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn hc_measure_new(
    domain: *const HcDomain,
    xy: *const f64,
    masses: *const f64,
    n: usize,
    out: *mut *mut HcMeasure,
) -> HcStatus {
    guard(|| {
        // SAFETY: caller contract.
        let d = unsafe { domain.as_ref() }.ok_or_else(|| null("domain"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: forwarded caller contract.
        let pts = points_from(unsafe { slice(xy, 2 * n, "xy") }?);
        let m = if masses.is_null() {
            lib(AtomicMeasure::uniform(&d.0, pts))?
        } else {
            // SAFETY: forwarded caller contract.
            lib(AtomicMeasure::normalized(&d.0, pts, unsafe { slice(masses, n, "masses") }?.to_vec()))?
        };
        put(out, HcMeasure(m));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_measure_free(m: *mut HcMeasure) {
    if !m.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Evaluates the energy by solving the transport problem to `tol_mass`.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hc_energy(
    domain: *const HcDomain,
    measure: *const HcMeasure,
    tol_mass: f64,
    out: *mut HcEnergy,
) -> HcStatus {
    guard(|| {
        // SAFETY: caller contract.
        let (d, m) = unsafe { (domain.as_ref(), measure.as_ref()) };
        let d = d.ok_or_else(|| null("domain"))?;
        let m = m.ok_or_else(|| null("measure"))?;
        // SAFETY: caller contract.
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = (&lib(energy::energy(&d.0, &m.0, tol_mass))?).into();
        Ok(())
    })
}

/// Minimizes with `n` points from a seeded low-discrepancy start. A run that
/// stops at `max_iters` still succeeds; see [`hc_result_converged`].
///
/// # Safety
/// `domain` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hc_minimize(
    domain: *const HcDomain,
    n: usize,
    seed: u64,
    max_iters: usize,
    out: *mut *mut HcResult,
) -> HcStatus {
    guard(|| {
        // SAFETY: caller contract.
        let d = unsafe { domain.as_ref() }.ok_or_else(|| null("domain"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = MinimizerConfig { seed, max_outer_iters: max_iters, ..Default::default() };
        put(out, HcResult(lib(optimize::minimize(&d.0, n, &cfg))?));
        Ok(())
    })
}

/// Number of points in a result; 0 for null.
///
/// # Safety
/// `r` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn hc_result_len(r: *const HcResult) -> usize {
    // SAFETY: caller contract.
    unsafe { r.as_ref() }.map_or(0, |r| r.0.measure.len())
}

/// 1 if the minimizer met its tolerances, 0 if not, -1 for null.
///
/// # Safety
/// `r` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn hc_result_converged(r: *const HcResult) -> i32 {
    // SAFETY: caller contract.
    unsafe { r.as_ref() }.map_or(-1, |r| i32::from(r.0.converged))
}

/// Copies `2·len` coordinates into `xy`, which has room for `cap` doubles.
///
/// # Safety
/// `r` must be live and `xy` writable for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn hc_result_points(r: *const HcResult, xy: *mut f64, cap: usize) -> HcStatus {
    guard(|| {
        // SAFETY: caller contract.
        let r = unsafe { r.as_ref() }.ok_or_else(|| null("result"))?;
        let pts = r.0.measure.points();
        if cap < 2 * pts.len() {
            return Err((HcStatus::BufferTooSmall, format!("need {} doubles, have {cap}", 2 * pts.len())));
        }
        if xy.is_null() {
            return Err(null("xy"));
        }
        for (k, p) in pts.iter().enumerate() {
            // SAFETY: bounds checked against cap above.
            unsafe {
                *xy.add(2 * k) = p.x;
                *xy.add(2 * k + 1) = p.y;
            }
        }
        Ok(())
    })
}

/// Copies the `len` masses into `masses`, which has room for `cap` doubles.
///
/// # Safety
/// `r` must be live and `masses` writable for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn hc_result_masses(r: *const HcResult, masses: *mut f64, cap: usize) -> HcStatus {
    guard(|| {
        // SAFETY: caller contract.
        let r = unsafe { r.as_ref() }.ok_or_else(|| null("result"))?;
        let m = r.0.measure.masses();
        if cap < m.len() {
            return Err((HcStatus::BufferTooSmall, format!("need {} doubles, have {cap}", m.len())));
        }
        if masses.is_null() {
            return Err(null("masses"));
        }
        // SAFETY: bounds checked against cap above.
        unsafe { ptr::copy_nonoverlapping(m.as_ptr(), masses, m.len()) };
        Ok(())
    })
}

/// # Safety
/// `r` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hc_result_energy(r: *const HcResult, out: *mut HcEnergy) -> HcStatus {
    guard(|| {
        // SAFETY: caller contract.
        let r = unsafe { r.as_ref() }.ok_or_else(|| null("result"))?;
        // SAFETY: caller contract.
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = (&r.0.report).into();
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_result_free(r: *mut HcResult) {
    if !r.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(r) });
    }
}

/// Runs every certificate check; `*all_passed` is set to 1 or 0.
///
/// # Safety
/// `all_passed` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_certify(all_passed: *mut i32) -> HcStatus {
    guard(|| {
        // SAFETY: caller contract.
        let out = unsafe { all_passed.as_mut() }.ok_or_else(|| null("all_passed"))?;
        *out = i32::from(lib(hexcryst::certify::certificate_report(10_000))?.all_passed());
        Ok(())
    })
}

/// `c_6 = 5√3/54`.
#[no_mangle]
pub extern "C" fn hc_c6() -> f64 {
    energy::c6()
}
