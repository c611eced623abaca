//! C ABI over `spac-core`.
//!
//! A `SpacPoint` handle carries one parameter point (selection, pointer,
//! coupling, trial count) and the default truncation policy. Every call
//! returns a `SpacStatus`; on failure the message is kept per thread and can
//! be copied out with `spac_last_error_message`. Results are written through
//! caller-provided out-pointers and left untouched on failure.
//!
//! The header `include/spac.h` is regenerated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spac_core::fock::{self, TruncationPolicy};
use spac_core::model::{weak_value, ComplexValue, Coupling, PointerParams, SelectionParams};
use spac_core::{analytic, metrology, Error};

/// Closed-form engine.
pub const SPAC_ENGINE_ANALYTIC: u32 = 0;
/// Truncated Fock-space oracle.
pub const SPAC_ENGINE_FOCK: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpacStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    OrthogonalSelection = 3,
    TruncationInsufficient = 4,
    DegenerateReference = 5,
    StepTooCoarse = 6,
    NonFinite = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpacComplex {
    pub re: f64,
    pub im: f64,
}

impl From<ComplexValue> for SpacComplex {
    fn from(z: ComplexValue) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Pointer shifts from one engine. `n_max` and `tail_mass` are zero for the
/// analytic engine.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpacShifts {
    pub dx: f64,
    pub dp: f64,
    pub transition_value: SpacComplex,
    pub beta_inv_sq: f64,
    pub n_max: usize,
    pub tail_mass: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpacSnr {
    pub chi: f64,
    pub r_p: f64,
    pub r_n: f64,
    pub p_s: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpacFisher {
    pub f: f64,
    pub f_fidelity: f64,
    pub f_q: f64,
    pub crb: f64,
    pub step: f64,
    pub n_max: usize,
}

/// Opaque parameter point.
pub struct SpacPoint {
    sel: SelectionParams,
    pointer: PointerParams,
    coupling: Coupling,
    n_trials: u64,
    policy: TruncationPolicy,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpacStatus {
    match e {
        Error::InvalidParameter { .. } => SpacStatus::InvalidParameter,
        Error::OrthogonalSelection { .. } => SpacStatus::OrthogonalSelection,
        Error::TruncationInsufficient { .. } => SpacStatus::TruncationInsufficient,
        Error::DegenerateReference { .. } => SpacStatus::DegenerateReference,
        Error::StepTooCoarse { .. } => SpacStatus::StepTooCoarse,
        Error::NonFinite(_) => SpacStatus::NonFinite,
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Engine(u32),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `body`, mapping errors and panics to a status and recording the message.
fn guard<F>(body: F) -> SpacStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SpacStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            SpacStatus::NullPointer
        }
        Ok(Err(Failure::Engine(code))) => {
            set_last_error(format!("unknown engine {code}"));
            SpacStatus::InvalidParameter
        }
        Err(_) => {
            set_last_error("internal panic".to_owned());
            SpacStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

/// Creates a point with `N = 1`. On success `*out` owns a handle to release
/// with `spac_point_free`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spac_point_new(
    phi: f64,
    delta: f64,
    r: f64,
    theta: f64,
    sigma: f64,
    gamma: f64,
    out: *mut *mut SpacPoint,
) -> SpacStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        let point = SpacPoint {
            sel: SelectionParams::new(phi, delta)?,
            pointer: PointerParams::new(r, theta, sigma)?,
            coupling: Coupling::new(gamma)?,
            n_trials: 1,
            policy: TruncationPolicy::default(),
        };
        *out = Box::into_raw(Box::new(point));
        Ok(())
    })
}

/// # Safety
/// `point` must be null or a handle from `spac_point_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spac_point_free(point: *mut SpacPoint) {
    if !point.is_null() {
        drop(Box::from_raw(point));
    }
}

/// # Safety
/// `point` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spac_point_set_coupling(point: *mut SpacPoint, gamma: f64) -> SpacStatus {
    guard(|| {
        let p = borrow_mut(point, "point")?;
        p.coupling = Coupling::new(gamma)?;
        Ok(())
    })
}

/// # Safety
/// `point` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spac_point_set_trials(point: *mut SpacPoint, n_trials: u64) -> SpacStatus {
    guard(|| {
        let p = borrow_mut(point, "point")?;
        if n_trials == 0 {
            return Err(Failure::Core(Error::InvalidParameter {
                name: "n_trials",
                reason: "must be at least 1".into(),
            }));
        }
        p.n_trials = n_trials;
        Ok(())
    })
}

/// Caps the Fock dimension the truncation may grow to (default 2048).
///
/// # Safety
/// `point` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spac_point_set_max_n_max(
    point: *mut SpacPoint,
    max_n_max: usize,
) -> SpacStatus {
    guard(|| {
        let p = borrow_mut(point, "point")?;
        let policy = TruncationPolicy {
            max_n_max,
            ..p.policy
        };
        policy.validate()?;
        p.policy = policy;
        Ok(())
    })
}

/// # Safety
/// `point` must be a live handle and `out` valid for writes (either may be null).
#[no_mangle]
pub unsafe extern "C" fn spac_weak_value(
    point: *const SpacPoint,
    out: *mut SpacComplex,
) -> SpacStatus {
    guard(|| {
        let p = borrow(point, "point")?;
        let out = borrow_mut(out, "out")?;
        *out = weak_value(&p.sel)?.into();
        Ok(())
    })
}

/// # Safety
/// As for `spac_weak_value`.
#[no_mangle]
pub unsafe extern "C" fn spac_transition_value(
    point: *const SpacPoint,
    engine: u32,
    out: *mut SpacComplex,
) -> SpacStatus {
    guard(|| {
        let p = borrow(point, "point")?;
        let out = borrow_mut(out, "out")?;
        let value = match engine {
            SPAC_ENGINE_ANALYTIC => analytic::transition_value(&p.sel, &p.pointer, &p.coupling)?,
            SPAC_ENGINE_FOCK => fock::transition_value(&p.sel, &p.pointer, &p.coupling, &p.policy)?,
            other => return Err(Failure::Engine(other)),
        };
        *out = value.into();
        Ok(())
    })
}

/// # Safety
/// As for `spac_weak_value`.
#[no_mangle]
pub unsafe extern "C" fn spac_pointer_shifts(
    point: *const SpacPoint,
    engine: u32,
    out: *mut SpacShifts,
) -> SpacStatus {
    guard(|| {
        let p = borrow(point, "point")?;
        let out = borrow_mut(out, "out")?;
        *out = match engine {
            SPAC_ENGINE_ANALYTIC => {
                let s = analytic::pointer_shifts(&p.sel, &p.pointer, &p.coupling)?;
                SpacShifts {
                    dx: s.dx,
                    dp: s.dp,
                    transition_value: s.transition_value.into(),
                    beta_inv_sq: s.beta_sq_inv,
                    n_max: 0,
                    tail_mass: 0.0,
                }
            }
            SPAC_ENGINE_FOCK => {
                let ev = fock::evaluate(&p.sel, &p.pointer, &p.coupling, &p.policy)?;
                SpacShifts {
                    dx: ev.dx,
                    dp: ev.dp,
                    transition_value: ev.transition_value.into(),
                    beta_inv_sq: ev.final_state.beta_inv_sq,
                    n_max: ev.n_max,
                    tail_mass: ev.tail_mass,
                }
            }
            other => return Err(Failure::Engine(other)),
        };
        Ok(())
    })
}

/// # Safety
/// As for `spac_weak_value`.
#[no_mangle]
pub unsafe extern "C" fn spac_snr(point: *const SpacPoint, out: *mut SpacSnr) -> SpacStatus {
    guard(|| {
        let p = borrow(point, "point")?;
        let out = borrow_mut(out, "out")?;
        let r = metrology::snr_ratio(&p.sel, &p.pointer, &p.coupling, p.n_trials, &p.policy)?;
        *out = SpacSnr {
            chi: r.chi,
            r_p: r.r_p,
            r_n: r.r_n,
            p_s: r.p_s,
        };
        Ok(())
    })
}

/// `step <= 0` selects the default finite-difference step.
///
/// # Safety
/// As for `spac_weak_value`.
#[no_mangle]
pub unsafe extern "C" fn spac_qfi(
    point: *const SpacPoint,
    step: f64,
    out: *mut SpacFisher,
) -> SpacStatus {
    guard(|| {
        let p = borrow(point, "point")?;
        let out = borrow_mut(out, "out")?;
        let step = if step > 0.0 {
            step
        } else {
            metrology::DEFAULT_STEP
        };
        let r = metrology::qfi(&p.sel, &p.pointer, &p.coupling, step, p.n_trials, &p.policy)?;
        *out = SpacFisher {
            f: r.f,
            f_fidelity: r.f_fidelity,
            f_q: r.f_q,
            crb: r.crb,
            step: r.step,
            n_max: r.n_max,
        };
        Ok(())
    })
}

/// Static description of a status code (never null).
#[no_mangle]
pub extern "C" fn spac_status_message(status: i32) -> *const c_char {
    let s: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"null pointer argument\0",
        2 => b"invalid parameter\0",
        3 => b"pre- and postselected states are orthogonal\0",
        4 => b"Fock truncation insufficient\0",
        5 => b"nonpostselected reference shift is zero\0",
        6 => b"finite-difference step too coarse\0",
        7 => b"non-finite result\0",
        8 => b"internal panic\0",
        _ => b"unknown status\0",
    };
    s.as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// excluding the NUL, or 0 when the last call succeeded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn spac_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}
