//! C ABI for `qarrival`.
//!
//! Every fallible function returns a [`QaStatus`]; on failure a message is
//! kept per thread and can be read with [`qa_last_error_message`]. Arrival
//! laws live behind the opaque [`QaArrival`] handle, created by
//! [`qa_arrival_new`] and released by [`qa_arrival_free`]. Panics never cross
//! the boundary; they are reported as [`QaStatus::QaErrPanic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qarrival::arrival::{CounterArray, DeltaCounter};
use qarrival::dynamics::DimensionlessPacket;
use qarrival::events::{intensity_from_survival, sample_first_events, IntensityTrace, Sampler};
use qarrival::inversion::ArrivalDistribution;
use qarrival::studies::{counter_law, efficiency, optimize_alpha, TimeGrids};
use qarrival::{Complex64, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QaStatus {
    QaOk = 0,
    /// A required pointer argument was null.
    QaErrNull = 1,
    /// An argument was out of range or inconsistent.
    QaErrInvalid = 2,
    /// A value exceeded the floating-point range.
    QaErrOverflow = 3,
    /// A numerical method failed to converge or detected an inconsistency.
    QaErrNumerical = 4,
    /// A caller-provided buffer was too small.
    QaErrBuffer = 5,
    /// An internal panic was caught.
    QaErrPanic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> QaStatus {
    match e {
        Error::Overflow(_) => QaStatus::QaErrOverflow,
        Error::InvalidArgument(_) | Error::Domain(_) | Error::Config(_) => QaStatus::QaErrInvalid,
        _ => QaStatus::QaErrNumerical,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (QaStatus, String)>) -> QaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QaStatus::QaOk
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QaStatus::QaErrPanic
        }
    }
}

fn lib_err(e: Error) -> (QaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (QaStatus, String) {
    (QaStatus::QaErrNull, format!("{name} is null"))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len` bytes) and returns the full message
/// length excluding the terminator. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qa_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qa_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}

/// Faddeeva function `w(u) = exp(-u^2) erfc(-i u)`.
///
/// # Safety
/// `out_re` and `out_im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qa_faddeeva_w(re: f64, im: f64, out_re: *mut f64, out_im: *mut f64) -> QaStatus {
    guard(|| {
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output pointer"));
        }
        let w = qarrival::specfun::faddeeva_w(Complex64::new(re, im)).map_err(lib_err)?;
        *out_re = w.re;
        *out_im = w.im;
        Ok(())
    })
}

/// Detection probability `P(inf)` of a point counter of strength `alpha`
/// at the origin for the packet `(xi0, v)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qa_efficiency(xi0: f64, v: f64, alpha: f64, out: *mut f64) -> QaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = DimensionlessPacket::new(xi0, v).map_err(lib_err)?;
        *out = efficiency(&p, alpha).map_err(lib_err)?;
        Ok(())
    })
}

/// Coupling that maximizes `P(inf)` within `[lo, hi]`.
///
/// # Safety
/// `alpha_opt` and `p_max` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qa_optimize_alpha(
    xi0: f64,
    v: f64,
    lo: f64,
    hi: f64,
    alpha_opt: *mut f64,
    p_max: *mut f64,
) -> QaStatus {
    guard(|| {
        if alpha_opt.is_null() || p_max.is_null() {
            return Err(null("output pointer"));
        }
        let p = DimensionlessPacket::new(xi0, v).map_err(lib_err)?;
        let (a, pm) = optimize_alpha(&p, (lo, hi)).map_err(lib_err)?;
        *alpha_opt = a;
        *p_max = pm;
        Ok(())
    })
}

/// Spectral and time grids of an arrival computation.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QaGrids {
    pub y_max: f64,
    pub n_y: usize,
    pub tau_max: f64,
    pub n_tau: usize,
}

/// Default grids: `y_max = 400`, `n_y = 16384`, `tau_max = 4`, `n_tau = 2048`.
#[no_mangle]
pub extern "C" fn qa_default_grids() -> QaGrids {
    let g = TimeGrids::default();
    QaGrids { y_max: g.y_max, n_y: g.n_y, tau_max: g.tau_max, n_tau: g.n_tau }
}

/// Arrival-time law of one point counter; opaque to C.
pub struct QaArrival {
    law: ArrivalDistribution,
    trace: IntensityTrace,
}

/// Computes the arrival law of a counter at `xi_a` with strength `alpha`
/// for the packet `(xi0, v)`, storing a new handle in `*out`.
///
/// # Safety
/// `out` must be valid for writes. The handle must be released with
/// [`qa_arrival_free`].
#[no_mangle]
pub unsafe extern "C" fn qa_arrival_new(
    xi0: f64,
    v: f64,
    xi_a: f64,
    alpha: f64,
    grids: QaGrids,
    out: *mut *mut QaArrival,
) -> QaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let p = DimensionlessPacket::new(xi0, v).map_err(lib_err)?;
        let array = CounterArray::single(DeltaCounter::new(xi_a, alpha).map_err(lib_err)?);
        let g = TimeGrids { y_max: grids.y_max, n_y: grids.n_y, tau_max: grids.tau_max, n_tau: grids.n_tau };
        let law = counter_law(&p, &array, &g).map_err(lib_err)?.distribution;
        let trace = intensity_from_survival(&law).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(QaArrival { law, trace }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `h` must be null or a handle from [`qa_arrival_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qa_arrival_free(h: *mut QaArrival) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of time points; 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qa_arrival_len(h: *const QaArrival) -> usize {
    h.as_ref().map_or(0, |a| a.law.tau.len())
}

/// Detection probability `P(inf)`; NaN for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qa_arrival_p_inf(h: *const QaArrival) -> f64 {
    h.as_ref().map_or(f64::NAN, |a| a.law.p_inf)
}

/// Copies `tau`, `p` and `P_cum` into caller buffers of length `len`, which
/// must be at least [`qa_arrival_len`]. Any of the three may be null to
/// skip it.
///
/// # Safety
/// `h` must be a live handle; non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qa_arrival_copy(
    h: *const QaArrival,
    tau: *mut f64,
    p: *mut f64,
    p_cum: *mut f64,
    len: usize,
) -> QaStatus {
    guard(|| {
        let a = h.as_ref().ok_or_else(|| null("handle"))?;
        let n = a.law.tau.len();
        if len < n {
            return Err((QaStatus::QaErrBuffer, format!("buffer holds {len} values, law has {n}")));
        }
        for (dst, src) in [(tau, &a.law.tau), (p, &a.law.p), (p_cum, &a.law.p_cum)] {
            if !dst.is_null() {
                std::ptr::copy_nonoverlapping(src.as_ptr(), dst, n);
            }
        }
        Ok(())
    })
}

/// Draws `n` first-event times with the inverse-CDF sampler. Runs without
/// an event within the time grid are written as NaN. `*detected` (if not
/// null) receives the number of detections. Identical seeds give identical
/// draws.
///
/// # Safety
/// `h` must be a live handle; `times` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn qa_sample_first_events(
    h: *const QaArrival,
    n: usize,
    seed: u64,
    times: *mut f64,
    detected: *mut usize,
) -> QaStatus {
    guard(|| {
        let a = h.as_ref().ok_or_else(|| null("handle"))?;
        if times.is_null() && n > 0 {
            return Err(null("times"));
        }
        let outcomes = sample_first_events(&a.trace, n, seed, Sampler::InverseCdf);
        let mut count = 0;
        for (k, o) in outcomes.iter().enumerate() {
            let t = o.time();
            count += usize::from(t.is_some());
            *times.add(k) = t.unwrap_or(f64::NAN);
        }
        if !detected.is_null() {
            *detected = count;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let mut buf = vec![0 as c_char; 256];
        let n = unsafe { qa_last_error_message(buf.as_mut_ptr(), buf.len()) };
        let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
        assert_eq!(s.len(), n.min(255));
        s
    }

    #[test]
    fn faddeeva_at_origin() {
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(unsafe { qa_faddeeva_w(0.0, 0.0, &mut re, &mut im) }, QaStatus::QaOk);
        assert_eq!((re, im), (1.0, 0.0));
        assert_eq!(unsafe { qa_faddeeva_w(0.0, 0.0, std::ptr::null_mut(), &mut im) }, QaStatus::QaErrNull);
        assert!(last_error().contains("null"));
    }

    #[test]
    fn overflow_is_reported() {
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(unsafe { qa_faddeeva_w(0.0, -40.0, &mut re, &mut im) }, QaStatus::QaErrOverflow);
        assert!(!last_error().is_empty());
    }

    #[test]
    fn version_is_the_crate_version() {
        let v = unsafe { CStr::from_ptr(qa_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
