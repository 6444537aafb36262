//! C ABI for the keyed-npht library.
//!
//! Conventions:
//! - Every fallible function returns a [`KnStatus`]; results go through out
//!   pointers that are only written on `KN_OK`.
//! - Key bundles are opaque heap handles released with
//!   [`kn_key_bundle_free`]. Strings returned by the library are released
//!   with [`kn_string_free`].
//! - After a failure, [`kn_last_error`] returns a message for the calling
//!   thread. The pointer stays valid until the next failing call on that
//!   thread.
//! - Panics never cross the boundary; they are reported as `KN_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use keyed_npht::aggregate::{combine, Method};
use keyed_npht::detector::{detect_with, Decision};
use keyed_npht::keying::{generate_keys, KeyBundle};
use keyed_npht::randomness::{min_pair_distance, PointSet};
use keyed_npht::stats::{mann_whitney_u, SampleSet};
use keyed_npht::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnStatus {
    KnOk = 0,
    KnInvalidArgument = 1,
    KnDomain = 2,
    KnDegenerateVariance = 3,
    KnTransformOverflow = 4,
    KnParse = 5,
    KnIo = 6,
    KnNullPointer = 7,
    KnPanic = 8,
}

/// p-value aggregation method.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnMethod {
    KnStouffer = 0,
    KnFisher = 1,
    KnPearson = 2,
}

impl From<KnMethod> for Method {
    fn from(m: KnMethod) -> Method {
        match m {
            KnMethod::KnStouffer => Method::Stouffer,
            KnMethod::KnFisher => Method::Fisher,
            KnMethod::KnPearson => Method::Pearson,
        }
    }
}

/// Opaque bundle of secret polynomial keys.
pub struct KnKeyBundle {
    inner: KeyBundle,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KnMwuResult {
    pub n0: usize,
    pub n1: usize,
    pub r0: f64,
    pub r1: f64,
    pub u0: f64,
    pub u1: f64,
    pub u: f64,
    pub lambda_u: f64,
    pub sigma_u: f64,
    pub z: f64,
    pub p: f64,
    /// Number of tie groups; 0 means no tie correction was applied.
    pub ties: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KnMinDist {
    pub delta: f64,
    pub delta_sq: f64,
    pub i: usize,
    pub j: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> KnStatus {
    match e {
        Error::InvalidArgument(_) => KnStatus::KnInvalidArgument,
        Error::Domain(_) => KnStatus::KnDomain,
        Error::DegenerateVariance { .. } => KnStatus::KnDegenerateVariance,
        Error::TransformOverflow { .. } => KnStatus::KnTransformOverflow,
        Error::Parse { .. } => KnStatus::KnParse,
        Error::Io { .. } => KnStatus::KnIo,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KnStatus::KnOk,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            KnStatus::KnNullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic");
            KnStatus::KnPanic
        }
    }
}

/// Borrows `len` doubles; a null pointer is only allowed when `len` is 0.
unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn samples(p: *const f64, len: usize, what: &'static str) -> Result<SampleSet, Failure> {
    Ok(SampleSet::new(slice(p, len, what)?.to_vec())?)
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn bundle<'a>(p: *const KnKeyBundle) -> Result<&'a KeyBundle, Failure> {
    p.as_ref().map(|b| &b.inner).ok_or(Failure::Null("bundle"))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::Lib(Error::InvalidArgument("string contains NUL".into())))
}

/// Message describing the last failure on this thread (empty if none).
#[no_mangle]
pub extern "C" fn kn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Two-sided Mann-Whitney U test of `a[0..na]` against `b[0..nb]`.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` readable doubles; `out_result`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn kn_mann_whitney_u(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out_result: *mut KnMwuResult,
) -> KnStatus {
    guard(|| {
        let r = mann_whitney_u(&samples(a, na, "a")?, &samples(b, nb, "b")?)?;
        *out(out_result, "out_result")? = KnMwuResult {
            n0: r.n0,
            n1: r.n1,
            r0: r.r0,
            r1: r.r1,
            u0: r.u0,
            u1: r.u1,
            u: r.u,
            lambda_u: r.lambda_u,
            sigma_u: r.sigma_u,
            z: r.z,
            p: r.p,
            ties: r.ties,
        };
        Ok(())
    })
}

/// Combines `n` p-values into Δ; `out_statistic` may be null.
///
/// # Safety
/// `p` must point to `n` readable doubles; `out_delta` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kn_combine(
    method: KnMethod,
    p: *const f64,
    n: usize,
    out_delta: *mut f64,
    out_statistic: *mut f64,
) -> KnStatus {
    guard(|| {
        let r = combine(method.into(), slice(p, n, "p")?)?;
        *out(out_delta, "out_delta")? = r.delta;
        if let Some(s) = out_statistic.as_mut() {
            *s = r.statistic;
        }
        Ok(())
    })
}

/// Generates `count` keys of degree `degree` over the coefficient set
/// `coeffs[0..ncoeffs]`. Release the handle with [`kn_key_bundle_free`].
///
/// # Safety
/// `coeffs` must point to `ncoeffs` readable doubles; `out_bundle` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn kn_keygen(
    degree: usize,
    count: usize,
    coeffs: *const f64,
    ncoeffs: usize,
    seed: u64,
    out_bundle: *mut *mut KnKeyBundle,
) -> KnStatus {
    guard(|| {
        let slot = out(out_bundle, "out_bundle")?;
        let inner = generate_keys(degree, count, slice(coeffs, ncoeffs, "coeffs")?, seed)?;
        *slot = Box::into_raw(Box::new(KnKeyBundle { inner }));
        Ok(())
    })
}

/// Parses a key file produced by [`kn_key_bundle_to_json`] or the CLI.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_bundle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kn_key_bundle_from_json(
    json: *const c_char,
    out_bundle: *mut *mut KnKeyBundle,
) -> KnStatus {
    guard(|| {
        let slot = out(out_bundle, "out_bundle")?;
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Error::InvalidArgument(format!("key text is not UTF-8: {e}")))?;
        let inner = KeyBundle::from_json(text)?;
        *slot = Box::into_raw(Box::new(KnKeyBundle { inner }));
        Ok(())
    })
}

/// Serializes a bundle; release the string with [`kn_string_free`].
///
/// # Safety
/// `bundle` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kn_key_bundle_to_json(
    b: *const KnKeyBundle,
    out_json: *mut *mut c_char,
) -> KnStatus {
    guard(|| {
        let text = bundle(b)?.to_json();
        *out(out_json, "out_json")? = into_c_string(text)?;
        Ok(())
    })
}

/// Hex fingerprint of a bundle; release with [`kn_string_free`].
///
/// # Safety
/// `bundle` must be a live handle; `out_fingerprint` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kn_key_bundle_fingerprint(
    b: *const KnKeyBundle,
    out_fingerprint: *mut *mut c_char,
) -> KnStatus {
    guard(|| {
        let fp = bundle(b)?.fingerprint();
        *out(out_fingerprint, "out_fingerprint")? = into_c_string(fp)?;
        Ok(())
    })
}

/// Number of keys in a bundle (0 for a null handle).
///
/// # Safety
/// `bundle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kn_key_bundle_len(b: *const KnKeyBundle) -> usize {
    b.as_ref().map_or(0, |b| b.inner.len())
}

/// Releases a bundle handle. Null is ignored.
///
/// # Safety
/// `bundle` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kn_key_bundle_free(b: *mut KnKeyBundle) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Keyed poison detection. `out_per_key_p` may be null; otherwise it must
/// hold `kn_key_bundle_len(bundle)` doubles. `out_reject` receives 1 for
/// reject and 0 for accept.
///
/// # Safety
/// Array arguments must point to the stated number of elements; handles
/// must be live; output pointers must be writable or null where allowed.
#[no_mangle]
pub unsafe extern "C" fn kn_detect(
    b: *const KnKeyBundle,
    safe: *const f64,
    nsafe: usize,
    unknown: *const f64,
    nunknown: usize,
    threshold: f64,
    method: KnMethod,
    out_per_key_p: *mut f64,
    out_delta: *mut f64,
    out_reject: *mut i32,
) -> KnStatus {
    guard(|| {
        let keys = bundle(b)?;
        let v = detect_with(
            &samples(safe, nsafe, "safe")?,
            &samples(unknown, nunknown, "unknown")?,
            keys,
            threshold,
            method.into(),
        )?;
        let delta = out(out_delta, "out_delta")?;
        let reject = out(out_reject, "out_reject")?;
        if !out_per_key_p.is_null() {
            std::slice::from_raw_parts_mut(out_per_key_p, v.per_key_p.len())
                .copy_from_slice(&v.per_key_p);
        }
        *delta = v.delta;
        *reject = (v.decision == Decision::Reject) as i32;
        Ok(())
    })
}

/// Closest pair of `n` points stored as interleaved `x, y` doubles inside
/// the square `[0, side)²`.
///
/// # Safety
/// `xy` must point to `2 * n` readable doubles; `out_result` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn kn_min_pair_distance(
    xy: *const f64,
    n: usize,
    side: f64,
    out_result: *mut KnMinDist,
) -> KnStatus {
    guard(|| {
        let len = n
            .checked_mul(2)
            .ok_or(Error::InvalidArgument("point count overflows".into()))?;
        let flat = slice(xy, len, "xy")?;
        let points = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let r = min_pair_distance(&PointSet::new(points, side)?)?;
        *out(out_result, "out_result")? = KnMinDist {
            delta: r.delta,
            delta_sq: r.delta_sq,
            i: r.pair.0,
            j: r.pair.1,
        };
        Ok(())
    })
}
