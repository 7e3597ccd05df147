//! C ABI over `subreg`.
//!
//! Problems live behind an opaque `SubregProblem` handle created from a JSON spec. Every call
//! returns a `SubregStatus`; on failure the message is available from
//! `subreg_last_error_message` on the same thread until the next failing call. Panics are
//! caught at the boundary and reported as `SUBREG_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use subreg::criteria::{check_qualitative, check_quantitative, Evaluation, QuantityKey, Verdict};
use subreg::primal_slopes::{Family, StrictVariant};
use subreg::{Error, Problem};

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubregStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Input = 3,
    Dimension = 4,
    OffGraph = 5,
    Domain = 6,
    Unsupported = 7,
    Invariant = 8,
    Panic = 9,
}

/// Criteria family codes accepted by `family` parameters.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubregFamily {
    G = 1,
    Phi = 2,
}

/// Strict slope variant codes accepted by `variant` parameters.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubregStrictVariant {
    Plain = 0,
    Modified = 1,
    Uniform = 2,
}

/// Verdict codes written by `subreg_certify`; they match the CLI exit codes.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubregVerdict {
    Holds = 0,
    Fails = 1,
    Inconclusive = 2,
}

/// Opaque problem handle.
pub struct SubregProblem {
    problem: Problem,
}

/// Value with its bracket; infinities are IEEE infinities.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubregBracket {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SubregStatus {
    match e {
        Error::Dimension { .. } => SubregStatus::Dimension,
        Error::Input(_) => SubregStatus::Input,
        Error::OffGraph => SubregStatus::OffGraph,
        Error::Domain(_) => SubregStatus::Domain,
        Error::Unsupported(_) => SubregStatus::Unsupported,
        Error::Invariant(_) => SubregStatus::Invariant,
    }
}

/// Runs `f` behind the panic guard and records the error message on failure.
fn guard(f: impl FnOnce() -> Result<(), (SubregStatus, String)>) -> SubregStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SubregStatus::Ok,
        Ok(Err((s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("panic inside subreg");
            SubregStatus::Panic
        }
    }
}

fn lib(e: Error) -> (SubregStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SubregStatus, String) {
    (SubregStatus::NullPointer, format!("{what} is null"))
}

fn family(code: i32) -> Result<Family, (SubregStatus, String)> {
    match code {
        1 => Ok(Family::G),
        2 => Ok(Family::Phi),
        _ => Err((SubregStatus::Input, format!("unknown family code {code}"))),
    }
}

fn variant(code: i32) -> Result<StrictVariant, (SubregStatus, String)> {
    match code {
        0 => Ok(StrictVariant::Plain),
        1 => Ok(StrictVariant::Modified),
        2 => Ok(StrictVariant::Uniform),
        _ => Err((
            SubregStatus::Input,
            format!("unknown strict variant code {code}"),
        )),
    }
}

/// # Safety
/// `s` must be null or point to a NUL-terminated string valid for the duration of the call.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (SubregStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| (SubregStatus::InvalidUtf8, format!("{what}: {e}")))
}

/// # Safety
/// `p` must be null or a handle returned by `subreg_problem_from_json` and not yet freed.
unsafe fn handle<'a>(p: *const SubregProblem) -> Result<&'a Problem, (SubregStatus, String)> {
    p.as_ref()
        .map(|h| &h.problem)
        .ok_or_else(|| null("problem"))
}

/// Message of the last failed call on this thread, or null if none failed yet.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn subreg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn subreg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a problem spec and writes a new handle to `*out`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable. The handle must be
/// released with `subreg_problem_free`.
#[no_mangle]
pub unsafe extern "C" fn subreg_problem_from_json(
    json: *const c_char,
    out: *mut *mut SubregProblem,
) -> SubregStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let problem = Problem::from_json(text).map_err(lib)?;
        *out = Box::into_raw(Box::new(SubregProblem { problem }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `p` must be null or a live handle from `subreg_problem_from_json`; it must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn subreg_problem_free(p: *mut SubregProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Subregularity modulus inf g(y)/d(x, F⁻¹(ȳ)) at the final schedule step.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subreg_modulus(
    p: *const SubregProblem,
    out: *mut SubregBracket,
) -> SubregStatus {
    guard(|| {
        let problem = handle(p)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let e = subreg::primal_slopes::error_bound_modulus(problem).map_err(lib)?;
        *out = SubregBracket {
            value: e.value,
            lower: e.lower,
            upper: e.upper,
        };
        Ok(())
    })
}

/// Strict slope of the given family and variant.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subreg_strict_slope(
    p: *const SubregProblem,
    family_code: i32,
    variant_code: i32,
    out: *mut SubregBracket,
) -> SubregStatus {
    guard(|| {
        let problem = handle(p)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let e = subreg::primal_slopes::strict_slope(
            problem,
            family(family_code)?,
            variant(variant_code)?,
        )
        .map_err(lib)?;
        *out = SubregBracket {
            value: e.value,
            lower: e.lower,
            upper: e.upper,
        };
        Ok(())
    })
}

/// Verdict of one condition. `gamma <= 0` selects the qualitative tables.
///
/// # Safety
/// `p` must be a live handle, `condition` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subreg_certify(
    p: *const SubregProblem,
    family_code: i32,
    gamma: f64,
    condition: *const c_char,
    out: *mut SubregVerdict,
) -> SubregStatus {
    guard(|| {
        let problem = handle(p)?;
        let cond = read_str(condition, "condition")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let fam = family(family_code)?;
        let ev = Evaluation::new(problem).map_err(lib)?;
        let certs = if gamma > 0.0 {
            check_quantitative(&ev, fam, gamma)
        } else {
            check_qualitative(&ev, fam)
        }
        .map_err(lib)?;
        let c = certs
            .iter()
            .find(|c| c.criterion_id == cond)
            .ok_or_else(|| (SubregStatus::Input, format!("no condition ({cond})")))?;
        *out = match c.verdict {
            Verdict::Holds => SubregVerdict::Holds,
            Verdict::Fails => SubregVerdict::Fails,
            Verdict::Inconclusive => SubregVerdict::Inconclusive,
        };
        Ok(())
    })
}

/// Value of a named quantity such as "modulus" or "dual.phi.plain".
///
/// # Safety
/// `p` must be a live handle, `quantity` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subreg_quantity(
    p: *const SubregProblem,
    quantity: *const c_char,
    out: *mut SubregBracket,
) -> SubregStatus {
    guard(|| {
        let problem = handle(p)?;
        let key: QuantityKey = read_str(quantity, "quantity")?.parse().map_err(lib)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let ev = Evaluation::new(problem).map_err(lib)?;
        let s = ev.get(key).ok_or_else(|| {
            (
                SubregStatus::Unsupported,
                ev.dual_unsupported_reason()
                    .unwrap_or("quantity unavailable")
                    .to_string(),
            )
        })?;
        *out = SubregBracket {
            value: s.value,
            lower: s.lower,
            upper: s.upper,
        };
        Ok(())
    })
}

/// Full analysis report as JSON, written to `*out`; release it with `subreg_string_free`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subreg_analyze_json(
    p: *const SubregProblem,
    out: *mut *mut c_char,
) -> SubregStatus {
    guard(|| {
        let problem = handle(p)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let report = subreg::cli::analyze(problem).map_err(lib)?;
        let text =
            serde_json::to_string(&report).map_err(|e| (SubregStatus::Invariant, e.to_string()))?;
        *out = CString::new(text)
            .map_err(|e| (SubregStatus::Invariant, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a pointer obtained from `subreg_analyze_json`, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn subreg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY: &str = concat!(include_str!("../../core/problems/identity.json"), "\0");
    const SAMPLED: &str = concat!(include_str!("../../core/problems/sampled_small.json"), "\0");

    fn load(spec: &str) -> *mut SubregProblem {
        let mut p = ptr::null_mut();
        assert_eq!(
            unsafe { subreg_problem_from_json(spec.as_ptr().cast(), &mut p) },
            SubregStatus::Ok
        );
        p
    }

    fn last_error() -> String {
        unsafe { CStr::from_ptr(subreg_last_error_message()) }
            .to_string_lossy()
            .into_owned()
    }

    #[test]
    fn modulus_and_slopes_of_identity() {
        let p = load(IDENTITY);
        let mut b = SubregBracket {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
        };
        assert_eq!(unsafe { subreg_modulus(p, &mut b) }, SubregStatus::Ok);
        assert!((b.value - 1.0).abs() < 1e-9);
        assert_eq!(
            unsafe {
                subreg_strict_slope(
                    p,
                    SubregFamily::G as i32,
                    SubregStrictVariant::Uniform as i32,
                    &mut b,
                )
            },
            SubregStatus::Ok
        );
        assert!((b.value - 1.0).abs() < 1e-9);
        assert_eq!(
            unsafe { subreg_quantity(p, c"dual.g.modified".as_ptr(), &mut b) },
            SubregStatus::Ok
        );
        assert!((b.value - 1.0).abs() < 1e-9);
        let mut v = SubregVerdict::Inconclusive;
        assert_eq!(
            unsafe { subreg_certify(p, SubregFamily::G as i32, 0.5, c"a".as_ptr(), &mut v) },
            SubregStatus::Ok
        );
        assert_eq!(v, SubregVerdict::Holds);
        unsafe { subreg_problem_free(p) };
    }

    #[test]
    fn analyze_json_round_trip() {
        let p = load(IDENTITY);
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { subreg_analyze_json(p, &mut s) }, SubregStatus::Ok);
        let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], 1);
        unsafe {
            subreg_string_free(s);
            subreg_problem_free(p);
        }
    }

    #[test]
    fn errors_are_reported() {
        let mut p = ptr::null_mut();
        assert_eq!(
            unsafe { subreg_problem_from_json(c"{".as_ptr(), &mut p) },
            SubregStatus::Input
        );
        assert!(p.is_null());
        assert!(last_error().contains("invalid input"));
        assert_eq!(
            unsafe { subreg_problem_from_json(ptr::null(), &mut p) },
            SubregStatus::NullPointer
        );
        let mut b = SubregBracket {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
        };
        assert_eq!(
            unsafe { subreg_modulus(ptr::null(), &mut b) },
            SubregStatus::NullPointer
        );
        let q = load(SAMPLED);
        assert_eq!(
            unsafe { subreg_strict_slope(q, 7, 0, &mut b) },
            SubregStatus::Input
        );
        assert_eq!(
            unsafe { subreg_quantity(q, c"dual.g.plain".as_ptr(), &mut b) },
            SubregStatus::Unsupported
        );
        assert_eq!(
            unsafe { subreg_quantity(q, c"nonsense".as_ptr(), &mut b) },
            SubregStatus::Input
        );
        unsafe {
            subreg_problem_free(q);
            subreg_problem_free(ptr::null_mut());
        }
    }

    #[test]
    fn version_is_static() {
        let v = unsafe { CStr::from_ptr(subreg_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
