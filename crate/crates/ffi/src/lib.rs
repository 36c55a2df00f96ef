//! C ABI over the factorization library.
//!
//! Fields and factorizations are opaque handles owned by the caller and
//! released with their `_free` function. Every fallible call returns an
//! [`NcfStatus`]; the message of the most recent failure on the calling
//! thread is available from [`ncf_last_error`]. Strings returned through
//! out-parameters are released with [`ncf_string_free`].

use ncfactor::error::{Error, Side};
use ncfactor::expr::{Formula, SPARSE_DEGREE_CAP};
use ncfactor::pipeline::{factor_polynomial, stable_associates, FactorOptions, Factorization};
use ncfactor::FieldCtx;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    BadField = 3,
    Parse = 4,
    ZeroPolynomial = 5,
    VerificationFailed = 6,
    Exhausted = 7,
    Internal = 8,
    OutOfRange = 9,
    Other = 10,
}

/// Opaque finite field.
pub struct NcfField(FieldCtx);

/// Opaque factorization result.
pub struct NcfFactorization {
    fact: Factorization,
    sparse: Option<Vec<String>>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NcfStatus {
    match e {
        Error::BadFieldSpec(_)
        | Error::NotPrime(_)
        | Error::ZeroDegree
        | Error::FieldTooLarge { .. } => NcfStatus::BadField,
        Error::Syntax { .. } | Error::UnknownVariable(_) | Error::BadCoefficient(_) => {
            NcfStatus::Parse
        }
        Error::ZeroPolynomial => NcfStatus::ZeroPolynomial,
        Error::Exhausted(_) => NcfStatus::Exhausted,
        Error::Internal(_) => NcfStatus::Internal,
        _ => NcfStatus::Other,
    }
}

/// Run `body`, turning errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), NcfStatus>) -> NcfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => NcfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            NcfStatus::Internal
        }
    }
}

fn fail(e: Error) -> NcfStatus {
    set_error(&e.to_string());
    status_of(&e)
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, NcfStatus> {
    if p.is_null() {
        set_error("null pointer argument");
        return Err(NcfStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not UTF-8");
        NcfStatus::InvalidUtf8
    })
}

unsafe fn field_ref<'a>(f: *const NcfField) -> Result<&'a FieldCtx, NcfStatus> {
    f.as_ref().map(|f| &f.0).ok_or_else(|| {
        set_error("null field handle");
        NcfStatus::NullPointer
    })
}

fn out_string(s: String, out: *mut *mut c_char) -> Result<(), NcfStatus> {
    let c = CString::new(s).map_err(|_| {
        set_error("string contains NUL");
        NcfStatus::Other
    })?;
    // SAFETY: callers check `out` for null before reaching here.
    unsafe { *out = c.into_raw() };
    Ok(())
}

fn null_check<T>(p: *mut T) -> Result<(), NcfStatus> {
    if p.is_null() {
        set_error("null out-pointer");
        Err(NcfStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Message of the last failure on this thread. Valid until the next call.
#[no_mangle]
pub extern "C" fn ncf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Create a field from a `p^k` spec.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ncf_field_new(spec: *const c_char, out: *mut *mut NcfField) -> NcfStatus {
    guard(|| {
        null_check(out)?;
        let ctx = FieldCtx::from_spec(text(spec)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(NcfField(ctx)));
        Ok(())
    })
}

/// # Safety
/// `f` must come from [`ncf_field_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ncf_field_free(f: *mut NcfField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Factor `expr` into irreducibles. `route` is 0 for left, 1 for right.
/// Returns `VerificationFailed` (with the handle still set) when the product
/// check fails.
///
/// # Safety
/// Pointers must be valid; `expr` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ncf_factor(
    field: *const NcfField,
    expr: *const c_char,
    seed: u64,
    route: u32,
    out: *mut *mut NcfFactorization,
) -> NcfStatus {
    guard(|| {
        null_check(out)?;
        let ctx = field_ref(field)?;
        let f = Formula::parse(text(expr)?, ctx).map_err(fail)?;
        let side = if route == 1 { Side::Right } else { Side::Left };
        let opts = FactorOptions {
            route: side,
            ..Default::default()
        };
        let fact = factor_polynomial(&f, seed, &opts).map_err(fail)?;
        let total: usize = fact.degrees().iter().sum();
        let sparse = if total <= SPARSE_DEGREE_CAP {
            let reference = f.to_sparse().ok();
            fact.sparse_factors(reference.as_ref())
                .ok()
                .map(|v| v.iter().map(|p| p.to_string()).collect())
        } else {
            None
        };
        let ok = fact.verification.ok;
        *out = Box::into_raw(Box::new(NcfFactorization { fact, sparse }));
        if ok {
            Ok(())
        } else {
            set_error("factor product does not match the input");
            Err(NcfStatus::VerificationFailed)
        }
    })
}

/// # Safety
/// `f` must come from [`ncf_factor`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ncf_factorization_free(f: *mut NcfFactorization) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Number of irreducible factors, or 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ncf_factorization_len(f: *const NcfFactorization) -> usize {
    f.as_ref().map_or(0, |f| f.fact.r())
}

/// 1 if the product check passed, 0 otherwise.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ncf_factorization_verified(f: *const NcfFactorization) -> i32 {
    f.as_ref().map_or(0, |f| f.fact.verification.ok as i32)
}

/// Factor `i` as a sum of monomials (or a size summary for large degree).
///
/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ncf_factorization_factor(
    f: *const NcfFactorization,
    i: usize,
    out: *mut *mut c_char,
) -> NcfStatus {
    guard(|| {
        null_check(out)?;
        let f = f.as_ref().ok_or(NcfStatus::NullPointer)?;
        if i >= f.fact.r() {
            set_error("factor index out of range");
            return Err(NcfStatus::OutOfRange);
        }
        let s = match &f.sparse {
            Some(v) => v[i].clone(),
            None => {
                let g = &f.fact.factors[i];
                format!(
                    "<branching program: degree {}, size {}>",
                    g.degree().unwrap_or(0),
                    g.size()
                )
            }
        };
        out_string(s, out)
    })
}

/// The factorization as JSON.
///
/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ncf_factorization_json(
    f: *const NcfFactorization,
    out: *mut *mut c_char,
) -> NcfStatus {
    guard(|| {
        null_check(out)?;
        let f = f.as_ref().ok_or(NcfStatus::NullPointer)?;
        let doc = f.fact.to_doc(None);
        let s = serde_json::to_string(&doc).map_err(|e| {
            set_error(&e.to_string());
            NcfStatus::Other
        })?;
        out_string(s, out)
    })
}

/// Write 1 to `out` if `expr` is irreducible, else 0.
///
/// # Safety
/// Pointers must be valid; `expr` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ncf_is_irreducible(
    field: *const NcfField,
    expr: *const c_char,
    seed: u64,
    out: *mut i32,
) -> NcfStatus {
    guard(|| {
        null_check(out)?;
        let ctx = field_ref(field)?;
        let f = Formula::parse(text(expr)?, ctx).map_err(fail)?;
        let fact = factor_polynomial(&f, seed, &FactorOptions::default()).map_err(fail)?;
        if !fact.verification.ok {
            set_error("factor product does not match the input");
            return Err(NcfStatus::VerificationFailed);
        }
        *out = (fact.r() == 1 && fact.degrees()[0] >= 1) as i32;
        Ok(())
    })
}

/// Write 1 to `out` if the two polynomials are stable associates, else 0.
///
/// # Safety
/// Pointers must be valid; expressions NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ncf_stable_associates(
    field: *const NcfField,
    expr1: *const c_char,
    expr2: *const c_char,
    seed: u64,
    out: *mut i32,
) -> NcfStatus {
    guard(|| {
        null_check(out)?;
        let ctx = field_ref(field)?;
        let f = Formula::parse(text(expr1)?, ctx).map_err(fail)?;
        let g = Formula::parse(text(expr2)?, ctx).map_err(fail)?;
        let n = f.nvars.max(g.nvars);
        let res = stable_associates(&f.with_nvars(n), &g.with_nvars(n), seed).map_err(fail)?;
        *out = res.associated as i32;
        Ok(())
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ncf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
