//! C interface to evohom.
//!
//! Every fallible function returns an [`EvohomStatus`]; on failure
//! [`evohom_last_error`] describes the problem. Objects are opaque handles
//! released with their `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, c_double, size_t};

use evohom::cli::parse_config;
use evohom::metrics::{distance, EhFeatures, PNorm};
use evohom::persistence::Bar;
use evohom::pipeline::{EhConfig, EhSystem, NodeEh};
use evohom::Error;

/// Status codes; the non-zero values match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvohomStatus {
    Ok = 0,
    Usage = 1,
    Input = 2,
    Numerical = 3,
    Budget = 4,
    /// A null pointer was passed where an object was required.
    NullPointer = 5,
    /// An internal panic was caught.
    Internal = 6,
}

/// A prepared network of coupled oscillators.
pub struct EvohomSystem {
    inner: EhSystem,
}

/// Result of perturbing one node.
pub struct EvohomResult {
    inner: NodeEh,
}

/// A set of bars in one dimension.
pub struct EvohomBarcode {
    inner: Vec<Bar>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EvohomStatus {
    match e.exit_code() {
        1 => EvohomStatus::Usage,
        2 => EvohomStatus::Input,
        4 => EvohomStatus::Budget,
        _ => EvohomStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (EvohomStatus, String)>) -> EvohomStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EvohomStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EvohomStatus::Internal
        }
    }
}

fn lib(e: Error) -> (EvohomStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (EvohomStatus, String) {
    (EvohomStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn evohom_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn evohom_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], (EvohomStatus, String)> {
    if len == 0 {
        Ok(&[])
    } else if data.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts(data, len))
    }
}

/// Builds a system from `n_points` points of `dim` coordinates each
/// (row-major). `config` is configuration text in the command-line format,
/// or null for the defaults.
///
/// # Safety
/// `points` must hold `n_points * dim` doubles; `config` must be null or a
/// NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evohom_system_new(
    points: *const c_double,
    n_points: size_t,
    dim: size_t,
    config: *const c_char,
    out: *mut *mut EvohomSystem,
) -> EvohomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if dim == 0 {
            return Err((EvohomStatus::Usage, "dim must be positive".into()));
        }
        let total = n_points.checked_mul(dim).ok_or_else(|| (EvohomStatus::Usage, "size overflow".to_string()))?;
        let flat = slice(points, total, "points")?;
        let cfg: EhConfig = if config.is_null() {
            EhConfig::default()
        } else {
            let text = CStr::from_ptr(config)
                .to_str()
                .map_err(|_| (EvohomStatus::Usage, "config is not UTF-8".to_string()))?;
            parse_config(text).map_err(lib)?.protein.eh
        };
        let rows: Vec<&[f64]> = flat.chunks_exact(dim).collect();
        let inner = EhSystem::prepare(&rows, cfg).map_err(lib)?;
        *out = Box::into_raw(Box::new(EvohomSystem { inner }));
        Ok(())
    })
}

/// # Safety
/// `system` must be null or a handle from [`evohom_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evohom_system_free(system: *mut EvohomSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `system` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn evohom_system_nodes(system: *const EvohomSystem) -> size_t {
    system.as_ref().map_or(0, |s| s.inner.nodes())
}

/// Perturbs node `node` (zero-based) and computes its barcodes and features.
///
/// # Safety
/// `system` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn evohom_node_eh(
    system: *const EvohomSystem,
    node: size_t,
    out: *mut *mut EvohomResult,
) -> EvohomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = system.as_ref().ok_or_else(|| null("system"))?;
        let inner = s.inner.node_eh(node).map_err(lib)?;
        *out = Box::into_raw(Box::new(EvohomResult { inner }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn evohom_result_free(result: *mut EvohomResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Writes the nine features, in the order `EH_inf_0, EH_inf_1, EH_inf_2,
/// EH_1_0, ..., EH_2_2`, to `out`.
///
/// # Safety
/// `result` must be a live handle and `out` must have room for 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn evohom_result_features(result: *const EvohomResult, out: *mut c_double) -> EvohomStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, 9).copy_from_slice(&r.inner.features.values);
        Ok(())
    })
}

/// Name of feature column `index` (0..9), or null.
#[no_mangle]
pub extern "C" fn evohom_feature_name(index: size_t) -> *const c_char {
    const NAMES: [&str; 9] = [
        "EH_inf_0\0", "EH_inf_1\0", "EH_inf_2\0", "EH_1_0\0", "EH_1_1\0", "EH_1_2\0", "EH_2_0\0", "EH_2_1\0",
        "EH_2_2\0",
    ];
    debug_assert!(NAMES.iter().zip(EhFeatures::NAMES).all(|(a, b)| a.trim_end_matches('\0') == b));
    NAMES.get(index).map_or(ptr::null(), |s| s.as_ptr() as *const c_char)
}

/// Global synchronization time, or NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn evohom_result_t_sync(result: *const EvohomResult) -> c_double {
    result.as_ref().map_or(f64::NAN, |r| r.inner.t_sync)
}

/// Size of the affected set, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn evohom_result_affected_count(result: *const EvohomResult) -> size_t {
    result.as_ref().map_or(0, |r| r.inner.affected.len())
}

/// Copies the dimension-`dim` bars into `births`/`deaths` (each of length
/// `capacity`) and stores the bar count in `count`. When `capacity` is too
/// small nothing is copied and only `count` is set, so callers can size
/// their buffers with a first call using `capacity = 0`.
///
/// # Safety
/// `result` must be a live handle, `count` writable, and the buffers valid
/// for `capacity` doubles when `capacity > 0`.
#[no_mangle]
pub unsafe extern "C" fn evohom_result_bars(
    result: *const EvohomResult,
    dim: size_t,
    births: *mut c_double,
    deaths: *mut c_double,
    capacity: size_t,
    count: *mut size_t,
) -> EvohomStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        if count.is_null() {
            return Err(null("count"));
        }
        let barcode = r
            .inner
            .barcodes
            .iter()
            .find(|b| b.dim == dim)
            .ok_or_else(|| (EvohomStatus::Usage, format!("no barcode for dimension {dim}")))?;
        *count = barcode.bars.len();
        if capacity < barcode.bars.len() || barcode.bars.is_empty() {
            return Ok(());
        }
        if births.is_null() || deaths.is_null() {
            return Err(null("births/deaths"));
        }
        let (b, d) = (
            std::slice::from_raw_parts_mut(births, capacity),
            std::slice::from_raw_parts_mut(deaths, capacity),
        );
        for (k, bar) in barcode.bars.iter().enumerate() {
            b[k] = bar.birth;
            d[k] = bar.death;
        }
        Ok(())
    })
}

/// The result as JSON. Release the string with [`evohom_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn evohom_result_json(result: *const EvohomResult, out: *mut *mut c_char) -> EvohomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let json = evohom::cli::output::to_json(&r.inner).map_err(lib)?;
        *out = CString::new(json).map_err(|e| (EvohomStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn evohom_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Barcode from `n` finite `(births[k], deaths[k])` pairs with
/// `births[k] <= deaths[k]`.
///
/// # Safety
/// `births` and `deaths` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evohom_barcode_new(
    births: *const c_double,
    deaths: *const c_double,
    n: size_t,
    out: *mut *mut EvohomBarcode,
) -> EvohomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let (b, d) = (slice(births, n, "births")?, slice(deaths, n, "deaths")?);
        let mut bars = Vec::with_capacity(n);
        for (k, (&birth, &death)) in b.iter().zip(d).enumerate() {
            if !(birth.is_finite() && death.is_finite() && birth <= death) {
                return Err((EvohomStatus::Usage, format!("bar {k} is not a finite interval: [{birth}, {death})")));
            }
            bars.push(Bar::new(birth, death));
        }
        *out = Box::into_raw(Box::new(EvohomBarcode { inner: bars }));
        Ok(())
    })
}

/// # Safety
/// `barcode` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn evohom_barcode_free(barcode: *mut EvohomBarcode) {
    if !barcode.is_null() {
        drop(Box::from_raw(barcode));
    }
}

/// p-Wasserstein distance for finite `p >= 1`, bottleneck distance for
/// `p = INFINITY`.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn evohom_distance(
    a: *const EvohomBarcode,
    b: *const EvohomBarcode,
    p: c_double,
    out: *mut c_double,
) -> EvohomStatus {
    guard(|| {
        let (a, b) = (a.as_ref().ok_or_else(|| null("a"))?, b.as_ref().ok_or_else(|| null("b"))?);
        if out.is_null() {
            return Err(null("out"));
        }
        let norm = if p == f64::INFINITY { PNorm::Infinity } else { PNorm::new(p).map_err(lib)? };
        *out = distance(&a.inner, &b.inner, norm).map_err(lib)?;
        Ok(())
    })
}
