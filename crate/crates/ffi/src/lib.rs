//! C ABI for the exact-scalar and heavy-set machinery.
//!
//! Conventions, mirrored in `include/heavyset.h`:
//! - every function returns an `hs_status` code; results travel through out
//!   pointers that are written only on `HS_OK`;
//! - `hs_scalar` is an opaque handle owning one exact value, released with
//!   `hs_scalar_free`;
//! - strings returned through `char **` are NUL-terminated UTF-8 owned by
//!   the library, released with `hs_string_free`;
//! - panics never unwind across the boundary (`HS_ERR_PANIC`).

// C-style names are the point of this crate.
#![allow(non_camel_case_types)]

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;

use heavyset::diophantine::below_sequence;
use heavyset::error::Error;
use heavyset::exact::{ratio_to_f64, ExactScalar, Rational};
use heavyset::group::{GroupPoint, GroupSpace};
use heavyset::heavy::first_failure;
use heavyset::target::{IntervalUnion, TargetSet};
use num_bigint::BigInt;
use num_traits::ToPrimitive;

/// Status codes shared with the C header. Values are part of the ABI.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum hs_status {
    HS_OK = 0,
    HS_ERR_NULL_ARGUMENT = 1,
    HS_ERR_PARSE = 2,
    HS_ERR_DOMAIN = 3,
    HS_ERR_FIELD_MISMATCH = 4,
    HS_ERR_INVARIANT = 5,
    HS_ERR_RESOURCE = 6,
    HS_ERR_UTF8 = 7,
    HS_ERR_RANGE = 8,
    HS_ERR_PANIC = 9,
}

use hs_status::*;

/// Opaque exact scalar handle. The C side sees only the name.
pub struct hs_scalar(ExactScalar);

fn status_of(err: &Error) -> hs_status {
    match err {
        Error::Parse(_) => HS_ERR_PARSE,
        Error::FieldMismatch(_, _) => HS_ERR_FIELD_MISMATCH,
        Error::Domain(_) => HS_ERR_DOMAIN,
        Error::Invariant(_) => HS_ERR_INVARIANT,
        Error::ResourceCap(_) => HS_ERR_RESOURCE,
        Error::Insufficient(_) => HS_ERR_DOMAIN,
        Error::Config(_) => HS_ERR_DOMAIN,
        Error::Io(_) => HS_ERR_RESOURCE,
    }
}

/// Run `f` with unwinding contained; `f` must perform its own null checks.
fn guarded(f: impl FnOnce() -> hs_status) -> hs_status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => HS_ERR_PANIC,
    }
}

/// # Safety
/// `text` must be a NUL-terminated string; reads until the terminator.
unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, hs_status> {
    if text.is_null() {
        return Err(HS_ERR_NULL_ARGUMENT);
    }
    unsafe { CStr::from_ptr(text) }.to_str().map_err(|_| HS_ERR_UTF8)
}

unsafe fn read_scalar<'a>(x: *const hs_scalar) -> Result<&'a ExactScalar, hs_status> {
    if x.is_null() {
        return Err(HS_ERR_NULL_ARGUMENT);
    }
    Ok(unsafe { &(*x).0 })
}

fn give_scalar(out: *mut *mut hs_scalar, value: ExactScalar) -> hs_status {
    if out.is_null() {
        return HS_ERR_NULL_ARGUMENT;
    }
    unsafe { *out = Box::into_raw(Box::new(hs_scalar(value))) };
    HS_OK
}

fn give_string(out: *mut *mut c_char, value: String) -> hs_status {
    if out.is_null() {
        return HS_ERR_NULL_ARGUMENT;
    }
    match CString::new(value) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            HS_OK
        }
        Err(_) => HS_ERR_UTF8,
    }
}

/// Parse an exact scalar from text such as "1/3", "sqrt(2)-1",
/// "(sqrt(5)-1)/2", "0.25".
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_scalar_parse(
    text: *const c_char,
    out: *mut *mut hs_scalar,
) -> hs_status {
    guarded(|| {
        let s = match unsafe { read_str(text) } {
            Ok(s) => s,
            Err(st) => return st,
        };
        match ExactScalar::from_str(s) {
            Ok(v) => give_scalar(out, v),
            Err(e) => status_of(&e),
        }
    })
}

/// Release a scalar handle. Null is a no-op.
///
/// # Safety
/// `x` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hs_scalar_free(x: *mut hs_scalar) {
    if !x.is_null() {
        drop(unsafe { Box::from_raw(x) });
    }
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

macro_rules! binary_op {
    ($(#[$doc:meta])* $name:ident, $method:ident) => {
        $(#[$doc])*
        /// # Safety
        /// `a` and `b` must be live handles; `out` must be a valid pointer.
        #[no_mangle]
        pub unsafe extern "C" fn $name(
            a: *const hs_scalar,
            b: *const hs_scalar,
            out: *mut *mut hs_scalar,
        ) -> hs_status {
            guarded(|| {
                let (a, b) = match (unsafe { read_scalar(a) }, unsafe { read_scalar(b) }) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(s), _) | (_, Err(s)) => return s,
                };
                match a.$method(b) {
                    Ok(v) => give_scalar(out, v),
                    Err(e) => status_of(&e),
                }
            })
        }
    };
}

binary_op!(
    /// out = a + b. Fails with HS_ERR_FIELD_MISMATCH when the operands carry
    /// different radicands.
    hs_scalar_add,
    checked_add
);
binary_op!(
    /// out = a − b.
    hs_scalar_sub,
    checked_sub
);
binary_op!(
    /// out = a · b.
    hs_scalar_mul,
    checked_mul
);
binary_op!(
    /// out = a / b; division by zero is HS_ERR_DOMAIN.
    hs_scalar_div,
    checked_div
);

/// Exact comparison: writes −1, 0, or 1.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_scalar_cmp(
    a: *const hs_scalar,
    b: *const hs_scalar,
    out: *mut i32,
) -> hs_status {
    guarded(|| {
        let (a, b) = match (unsafe { read_scalar(a) }, unsafe { read_scalar(b) }) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if out.is_null() {
            return HS_ERR_NULL_ARGUMENT;
        }
        match a.compare(b) {
            Ok(ord) => {
                unsafe { *out = ord as i32 };
                HS_OK
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Exact sign of the value: −1, 0, or 1.
///
/// # Safety
/// `x` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_scalar_sign(x: *const hs_scalar, out: *mut i32) -> hs_status {
    guarded(|| {
        let x = match unsafe { read_scalar(x) } {
            Ok(x) => x,
            Err(s) => return s,
        };
        if out.is_null() {
            return HS_ERR_NULL_ARGUMENT;
        }
        unsafe { *out = x.sign() as i32 };
        HS_OK
    })
}

/// Fractional part in [0, 1).
///
/// # Safety
/// `x` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_scalar_mod1(
    x: *const hs_scalar,
    out: *mut *mut hs_scalar,
) -> hs_status {
    guarded(|| match unsafe { read_scalar(x) } {
        Ok(x) => give_scalar(out, x.mod1()),
        Err(s) => s,
    })
}

/// Exact floor as a 64-bit integer; HS_ERR_RANGE when it does not fit.
///
/// # Safety
/// `x` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_scalar_floor(x: *const hs_scalar, out: *mut i64) -> hs_status {
    guarded(|| {
        let x = match unsafe { read_scalar(x) } {
            Ok(x) => x,
            Err(s) => return s,
        };
        if out.is_null() {
            return HS_ERR_NULL_ARGUMENT;
        }
        match x.floor().to_i64() {
            Some(v) => {
                unsafe { *out = v };
                HS_OK
            }
            None => HS_ERR_RANGE,
        }
    })
}

/// Nearest double together with a rigorous error bound |x − value| ≤ bound.
///
/// # Safety
/// `x` must be a live handle; `value` and `bound` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hs_scalar_to_double(
    x: *const hs_scalar,
    value: *mut f64,
    bound: *mut f64,
) -> hs_status {
    guarded(|| {
        let x = match unsafe { read_scalar(x) } {
            Ok(x) => x,
            Err(s) => return s,
        };
        if value.is_null() || bound.is_null() {
            return HS_ERR_NULL_ARGUMENT;
        }
        let (v, b) = x.to_f64();
        unsafe {
            *value = v;
            *bound = b;
        }
        HS_OK
    })
}

/// Canonical text form; round-trips through hs_scalar_parse.
///
/// # Safety
/// `x` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_scalar_to_string(
    x: *const hs_scalar,
    out: *mut *mut c_char,
) -> hs_status {
    guarded(|| match unsafe { read_scalar(x) } {
        Ok(x) => give_string(out, x.to_string()),
        Err(s) => s,
    })
}

/// Certified below-approximation table for an irrational level γ in (0, 1),
/// returned as CSV text "index,p,q,gap" with exact gap strings.
///
/// # Safety
/// `gamma` must be NUL-terminated; `out_csv` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_below_sequence_csv(
    gamma: *const c_char,
    count: usize,
    out_csv: *mut *mut c_char,
) -> hs_status {
    guarded(|| {
        let text = match unsafe { read_str(gamma) } {
            Ok(s) => s,
            Err(st) => return st,
        };
        let gamma = match ExactScalar::from_str(text) {
            Ok(v) => v,
            Err(e) => return status_of(&e),
        };
        let seq = match below_sequence(&gamma, count) {
            Ok(s) => s,
            Err(e) => return status_of(&e),
        };
        let mut csv = String::from("index,p,q,gap\n");
        for (i, e) in seq.entries.iter().enumerate() {
            csv.push_str(&format!("{i},{},{},{}\n", e.p, e.q, e.gap));
        }
        give_string(out_csv, csv)
    })
}

/// The dimension bound for boundary exponent ψ = psi_num/psi_den, ambient
/// dimension d = dim_num/dim_den and approximation order k: ψ when the
/// level is rational (`rational_branch` nonzero), ψ + (d−ψ)/k otherwise.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hs_theorem_bound(
    psi_num: i64,
    psi_den: i64,
    dim_num: i64,
    dim_den: i64,
    k: u32,
    rational_branch: i32,
    out: *mut f64,
) -> hs_status {
    guarded(|| {
        if out.is_null() {
            return HS_ERR_NULL_ARGUMENT;
        }
        if psi_den == 0 || dim_den == 0 || k == 0 {
            return HS_ERR_DOMAIN;
        }
        let psi = Rational::new(BigInt::from(psi_num), BigInt::from(psi_den));
        let dim = Rational::new(BigInt::from(dim_num), BigInt::from(dim_den));
        if psi < Rational::new(BigInt::from(0), BigInt::from(1)) || psi >= dim {
            return HS_ERR_DOMAIN;
        }
        let bound = if rational_branch != 0 {
            psi
        } else {
            &psi + (&dim - &psi) / Rational::new(BigInt::from(k), BigInt::from(1))
        };
        unsafe { *out = ratio_to_f64(&bound) };
        HS_OK
    })
}

/// First failing horizon of the strict-positivity walk for x under step g
/// against the circle interval [a_start, a_end] at level gamma: writes the
/// least 1 ≤ j ≤ horizon with S_j ≤ 0, or 0 when the point stays heavy
/// through the whole horizon.
///
/// # Safety
/// All strings must be NUL-terminated; `out_first_failure` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hs_first_failure_interval(
    x: *const c_char,
    g: *const c_char,
    gamma: *const c_char,
    a_start: *const c_char,
    a_end: *const c_char,
    horizon: u64,
    out_first_failure: *mut u64,
) -> hs_status {
    guarded(|| {
        if out_first_failure.is_null() {
            return HS_ERR_NULL_ARGUMENT;
        }
        let parse = |p: *const c_char| -> Result<ExactScalar, hs_status> {
            let s = unsafe { read_str(p) }?;
            ExactScalar::from_str(s).map_err(|e| status_of(&e))
        };
        let (x, g, gamma, start, end) = match (
            parse(x),
            parse(g),
            parse(gamma),
            parse(a_start),
            parse(a_end),
        ) {
            (Ok(a), Ok(b), Ok(c), Ok(d), Ok(e)) => (a, b, c, d, e),
            (Err(s), ..) | (_, Err(s), ..) | (_, _, Err(s), ..)
            | (_, _, _, Err(s), _) | (_, _, _, _, Err(s)) => return s,
        };
        let run = || -> Result<Option<u64>, Error> {
            let space = GroupSpace::torus(1)?;
            let target = TargetSet::Intervals(IntervalUnion::from_endpoints(&[(start, end)])?);
            first_failure(
                &space,
                &GroupPoint::torus1(x),
                &GroupPoint::torus1(g),
                &target,
                &gamma,
                horizon,
            )
        };
        match run() {
            Ok(fail) => {
                unsafe { *out_first_failure = fail.unwrap_or(0) };
                HS_OK
            }
            Err(e) => status_of(&e),
        }
    })
}
