//! C ABI over `specflow`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Fallible calls return a
//! [`SpecflowStatus`]; on failure the message is kept per thread and read
//! back with [`specflow_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use specflow::aps::{flow_side, solve_index, ApsProblem, Convention, Variant};
use specflow::cplx::C64;
use specflow::eta::{eta_abel_oracle, eta_closed_form, CharacterSpectrum};
use specflow::family::Family;
use specflow::flow::equivariant_flow;
use specflow::linalg::ComplexMatrix;
use specflow::symmetry::{decompose, SymmetryAction};
use specflow::verify::identity_suite;
use specflow::SpecError;

/// Result of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecflowStatus {
    Ok = 0,
    NullArgument = 1,
    /// Invalid input, non-equivariant data or an unsupported request.
    Validation = 2,
    /// Partition, rank or extrapolation failure.
    Numerical = 3,
    /// Two routes that must agree did not.
    Inconsistent = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecflowVariant {
    Lorentzian = 0,
    Riemannian = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecflowConvention {
    Strict = 0,
    Inclusive = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpecflowComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for SpecflowComplex {
    fn from(z: C64) -> Self {
        SpecflowComplex { re: z.re, im: z.im }
    }
}

/// Operator family (sampled matrices, eigenvalue curves or mode blocks).
pub struct SpecflowFamily(Family);

/// Unitary symmetry with its character decomposition.
pub struct SpecflowAction(SymmetryAction);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &SpecError) -> SpecflowStatus {
    match e.exit_code() {
        2 => SpecflowStatus::Validation,
        3 => SpecflowStatus::Numerical,
        _ => SpecflowStatus::Inconsistent,
    }
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), (SpecflowStatus, String)>) -> SpecflowStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpecflowStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SpecflowStatus::Panic
        }
    }
}

fn lift(e: SpecError) -> (SpecflowStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SpecflowStatus, String) {
    (SpecflowStatus::NullArgument, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SpecflowStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            SpecflowStatus::Validation,
            format!("{what} is not valid UTF-8"),
        )
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn specflow_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn specflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a family from its JSON form into `*out`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn specflow_family_from_json(
    json: *const c_char,
    out: *mut *mut SpecflowFamily,
) -> SpecflowStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let fam = Family::from_json(text).map_err(lift)?;
        *out = Box::into_raw(Box::new(SpecflowFamily(fam)));
        Ok(())
    })
}

/// # Safety
/// `family` must come from [`specflow_family_from_json`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn specflow_family_free(family: *mut SpecflowFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Decomposes an `n × n` unitary given row-major as interleaved `re, im`
/// pairs (`2n²` doubles).
///
/// # Safety
/// `data` must point to `2·n·n` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn specflow_action_from_unitary(
    n: usize,
    data: *const f64,
    out: *mut *mut SpecflowAction,
) -> SpecflowStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let raw = std::slice::from_raw_parts(data, 2 * n * n);
        let entries = raw.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
        let m = ComplexMatrix::new(n, n, entries).map_err(lift)?;
        let action = decompose(&m).map_err(lift)?;
        *out = Box::into_raw(Box::new(SpecflowAction(action)));
        Ok(())
    })
}

/// Number of distinct characters of the action.
///
/// # Safety
/// `action` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn specflow_action_character_count(action: *const SpecflowAction) -> usize {
    action.as_ref().map_or(0, |a| a.0.characters().len())
}

/// # Safety
/// `action` must come from [`specflow_action_from_unitary`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn specflow_action_free(action: *mut SpecflowAction) {
    if !action.is_null() {
        drop(Box::from_raw(action));
    }
}

/// Equivariant spectral flow. `action` may be null (no symmetry, or the
/// family's own characters). `plain` receives the non-equivariant flow.
///
/// # Safety
/// Handles must be live; `value` and `plain` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn specflow_sfl(
    family: *const SpecflowFamily,
    action: *const SpecflowAction,
    value: *mut SpecflowComplex,
    plain: *mut i64,
) -> SpecflowStatus {
    guard(|| {
        let fam = family.as_ref().ok_or_else(|| null("family"))?;
        if value.is_null() || plain.is_null() {
            return Err(null("output"));
        }
        let r = equivariant_flow(&fam.0, action.as_ref().map(|a| &a.0)).map_err(lift)?;
        *value = r.value.value.into();
        *plain = r.total();
        Ok(())
    })
}

/// Equivariant APS index together with its spectral-flow expression.
///
/// # Safety
/// Handles must be live; `index` and `flow_side_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn specflow_index(
    family: *const SpecflowFamily,
    action: *const SpecflowAction,
    variant: SpecflowVariant,
    convention: SpecflowConvention,
    index: *mut SpecflowComplex,
    flow_side_value: *mut SpecflowComplex,
) -> SpecflowStatus {
    guard(|| {
        let fam = family.as_ref().ok_or_else(|| null("family"))?;
        if index.is_null() || flow_side_value.is_null() {
            return Err(null("output"));
        }
        let variant = match variant {
            SpecflowVariant::Lorentzian => Variant::Lorentzian,
            SpecflowVariant::Riemannian => Variant::Riemannian,
        };
        let convention = match convention {
            SpecflowConvention::Strict => Convention::Strict,
            SpecflowConvention::Inclusive => Convention::Inclusive,
        };
        let problem = ApsProblem::new(fam.0.clone(), variant, convention);
        let act = action.as_ref().map(|a| &a.0);
        let r = solve_index(&problem, act).map_err(lift)?;
        let s = flow_side(&problem, act).map_err(lift)?;
        *index = r.index.value.into();
        *flow_side_value = s.value.value.into();
        Ok(())
    })
}

/// η-invariant of a spectrum in JSON form: the closed form when available,
/// otherwise the Abel-summation estimate, whose error bound goes to
/// `error_estimate` (0 for the closed form).
///
/// # Safety
/// `json` must be NUL-terminated; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn specflow_eta(
    json: *const c_char,
    value: *mut SpecflowComplex,
    error_estimate: *mut f64,
) -> SpecflowStatus {
    guard(|| {
        if value.is_null() || error_estimate.is_null() {
            return Err(null("output"));
        }
        let text = read_str(json, "json")?;
        let spec: CharacterSpectrum = serde_json::from_str(text)
            .map_err(|e| (SpecflowStatus::Validation, format!("spectrum: {e}")))?;
        match eta_closed_form(&spec) {
            Ok(v) => {
                *value = v.value.into();
                *error_estimate = 0.0;
            }
            Err(SpecError::UseNumericOracle) => {
                let a = eta_abel_oracle(&spec, None).map_err(lift)?;
                *value = a.value.value.into();
                *error_estimate = a.error_estimate;
            }
            Err(e) => return Err(lift(e)),
        }
        Ok(())
    })
}

/// Seeded index/spectral-flow identity suite; `passed` receives the number
/// of instances that satisfied every check.
///
/// # Safety
/// `passed` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn specflow_verify_identity(
    seed: u64,
    n: usize,
    passed: *mut usize,
) -> SpecflowStatus {
    guard(|| {
        if passed.is_null() {
            return Err(null("passed"));
        }
        let s = identity_suite(seed, n).map_err(lift)?;
        *passed = s.passed;
        Ok(())
    })
}

/// JSON form of a family; free the result with [`specflow_string_free`].
///
/// # Safety
/// `family` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn specflow_family_to_json(
    family: *const SpecflowFamily,
    out: *mut *mut c_char,
) -> SpecflowStatus {
    guard(|| {
        let fam = family.as_ref().ok_or_else(|| null("family"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = CString::new(fam.0.to_json())
            .expect("JSON has no NUL")
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn specflow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_are_thread_local() {
        let mut out = ptr::null_mut();
        let st = unsafe { specflow_family_from_json(c"{".as_ptr(), &mut out) };
        assert_eq!(st, SpecflowStatus::Validation);
        assert!(!specflow_last_error_message().is_null());
        std::thread::spawn(|| assert!(specflow_last_error_message().is_null()))
            .join()
            .unwrap();
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(specflow_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
