//! C ABI over `catalytic-tree`.
//!
//! Objects cross the boundary as opaque pointers created by `ct_*_new`-style
//! calls and released with the matching `ct_*_free`. Every call returns a
//! [`CtStatus`]; on failure `ct_last_error` copies a message for the calling
//! thread. Panics are caught and reported as [`CtStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use catalytic_tree::catalytic::{CatalyticState, TapeMode};
use catalytic_tree::modmath::PrimeBasis;
use catalytic_tree::mv_family::{verify_family, MvFamily, VerifyMode};
use catalytic_tree::tree_eval::{eval_catalytic, reduce_fanin, CatalyticOptions, TreeEvalInstance};
use catalytic_tree::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Infeasible = 4,
    NotRestored = 5,
    BufferTooSmall = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtTape {
    Zeros = 0,
    Max = 1,
    Alternating = 2,
    /// Seeded from the `seed` argument.
    Random = 3,
}

/// A tree evaluation instance.
pub struct CtInstance(TreeEvalInstance);

/// A matching-vector family.
pub struct CtFamily(MvFamily);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CtOutcome {
    pub value: u64,
    pub oracle_calls: u64,
    pub peak_free_bits: u64,
    pub catalytic_bits: u64,
    /// 1 when every register came back bit-exact.
    pub restored: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> CtStatus {
    match err {
        Error::Parse { .. } | Error::MalformedInstance(_) => CtStatus::Parse,
        Error::Infeasible(_) | Error::PrimeNotFound { .. } => CtStatus::Infeasible,
        Error::RestorationFailed(_) => CtStatus::NotRestored,
        Error::Invariant(_) | Error::Ledger(_) => CtStatus::Internal,
        _ => CtStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (CtStatus, String)>) -> CtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CtStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            CtStatus::Panic
        }
    }
}

fn lib<T>(r: catalytic_tree::Result<T>) -> Result<T, (CtStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (CtStatus, String) {
    (CtStatus::NullPointer, "null pointer argument".into())
}

unsafe fn basis_from(primes: *const u64, n_primes: usize) -> Result<PrimeBasis, (CtStatus, String)> {
    if primes.is_null() {
        return Err(null());
    }
    let slice = std::slice::from_raw_parts(primes, n_primes);
    lib(PrimeBasis::new(slice))
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to fit) and returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ct_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `out` must be null or valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn ct_instance_generate(
    h: usize,
    ell: u32,
    fanin: usize,
    seed: u64,
    out: *mut *mut CtInstance,
) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let inst = lib(TreeEvalInstance::generate(h, ell, fanin, seed))?;
        *out = Box::into_raw(Box::new(CtInstance(inst)));
        Ok(())
    })
}

/// Parses the text instance format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn ct_instance_parse(text: *const c_char, out: *mut *mut CtInstance) -> CtStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return Err(null());
        }
        let s =
            CStr::from_ptr(text).to_str().map_err(|_| (CtStatus::Parse, "instance text is not UTF-8".to_string()))?;
        let inst = lib(TreeEvalInstance::parse(s))?;
        *out = Box::into_raw(Box::new(CtInstance(inst)));
        Ok(())
    })
}

/// Writes the text format into `buf` (NUL-terminated) and its length into
/// `out_len`. With a short buffer nothing is written besides `out_len` and
/// `BufferTooSmall` is returned.
///
/// # Safety
/// `inst` must come from this library; `buf` must hold `len` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn ct_instance_serialize(
    inst: *const CtInstance,
    buf: *mut c_char,
    len: usize,
    out_len: *mut usize,
) -> CtStatus {
    guard(|| {
        if inst.is_null() || out_len.is_null() {
            return Err(null());
        }
        let text = (*inst).0.serialize();
        *out_len = text.len();
        if buf.is_null() || len <= text.len() {
            return Err((CtStatus::BufferTooSmall, format!("need {} bytes", text.len() + 1)));
        }
        ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

/// # Safety
/// `inst` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ct_instance_free(inst: *mut CtInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` must come from this library; `out_value` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ct_eval_bruteforce(inst: *const CtInstance, out_value: *mut u64) -> CtStatus {
    guard(|| {
        if inst.is_null() || out_value.is_null() {
            return Err(null());
        }
        *out_value = lib((*inst).0.eval_bruteforce())?;
        Ok(())
    })
}

/// Evaluates catalytically over the given primes. Fanin above 2 is reduced
/// first. A tape that fails to restore yields `NotRestored` with `out`
/// filled in as far as known.
///
/// # Safety
/// `inst` must come from this library; `primes` must hold `n_primes` values;
/// `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ct_eval_catalytic(
    inst: *const CtInstance,
    primes: *const u64,
    n_primes: usize,
    tape: CtTape,
    seed: u64,
    out: *mut CtOutcome,
) -> CtStatus {
    guard(|| {
        if inst.is_null() || out.is_null() {
            return Err(null());
        }
        let basis = basis_from(primes, n_primes)?;
        let inst = &(*inst).0;
        let binary = if inst.fanin > 2 { lib(reduce_fanin(inst))? } else { inst.clone() };
        let family = lib(MvFamily::for_ell(binary.ell, &basis))?;
        let mode = match tape {
            CtTape::Zeros => TapeMode::Zeros,
            CtTape::Max => TapeMode::Max,
            CtTape::Alternating => TapeMode::Alternating,
            CtTape::Random => TapeMode::Random(seed),
        };
        let mut state = lib(CatalyticState::new(basis, family.dim(), &mode))?;
        *out = CtOutcome { catalytic_bits: state.catalytic_bits(), ..CtOutcome::default() };
        let outcome = lib(eval_catalytic(&binary, &family, &mut state, CatalyticOptions::default()))?;
        *out = CtOutcome {
            value: outcome.value,
            oracle_calls: outcome.oracle_calls,
            peak_free_bits: outcome.peak_free_bits,
            catalytic_bits: state.catalytic_bits(),
            restored: u8::from(outcome.restore.passed()),
        };
        Ok(())
    })
}

/// # Safety
/// `primes` must hold `n_primes` values; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn ct_family_new(
    primes: *const u64,
    n_primes: usize,
    ell: u32,
    out: *mut *mut CtFamily,
) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let basis = basis_from(primes, n_primes)?;
        let fam = lib(MvFamily::for_ell(ell, &basis))?;
        *out = Box::into_raw(Box::new(CtFamily(fam)));
        Ok(())
    })
}

/// # Safety
/// `fam` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ct_family_free(fam: *mut CtFamily) {
    if !fam.is_null() {
        drop(Box::from_raw(fam));
    }
}

/// Family size `N` and dimension `d`.
///
/// # Safety
/// `fam` must come from this library; the outputs valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn ct_family_shape(fam: *const CtFamily, out_size: *mut u64, out_dim: *mut usize) -> CtStatus {
    guard(|| {
        if fam.is_null() || out_size.is_null() || out_dim.is_null() {
            return Err(null());
        }
        *out_size = (*fam).0.size();
        *out_dim = (*fam).0.dim();
        Ok(())
    })
}

/// Checks every pair; `out_passed` gets 1 when all axioms hold.
///
/// # Safety
/// `fam` must come from this library; `out_passed` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ct_family_verify(fam: *const CtFamily, out_passed: *mut u8) -> CtStatus {
    guard(|| {
        if fam.is_null() || out_passed.is_null() {
            return Err(null());
        }
        let report = verify_family(&(*fam).0, VerifyMode::Exhaustive);
        *out_passed = u8::from(report.passed());
        Ok(())
    })
}
