//! C interface to `povm-forge`.
//!
//! Observables and channels live behind opaque handles created by the
//! `pf_*_new` functions and released with the matching `pf_*_free`. Every
//! fallible call returns a [`PfStatus`]; on anything other than
//! `PF_STATUS_OK` a description is available from [`pf_last_error`] until
//! the next failing call on the same thread.
//!
//! Matrices cross the boundary as pairs of `double` arrays holding the real
//! and imaginary parts in row-major order. A list of `n` matrices of shape
//! `r × c` occupies `n·r·c` consecutive entries.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use num_complex::Complex64;
use povm_forge::analysis::{compare, is_extreme, Relation, SolverOptions};
use povm_forge::observables::minimal_sufficient_reduction;
use povm_forge::realization::{realize_channel_after_with, realize_observable_after_with, Realization};
use povm_forge::{least_disturbing, minimal_output_dimension, Channel, ComplexMatrix, Error, HermitianMatrix, Povm};

/// Opaque observable handle.
pub struct PfPovm(Povm);

/// Opaque channel handle.
pub struct PfChannel(Channel);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidObservable = 3,
    InvalidChannel = 4,
    DimensionMismatch = 5,
    /// A search proved that no solution exists.
    Infeasible = 6,
    /// A search ran out of budget without a certificate either way.
    Undecided = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfRelation {
    Below = 0,
    Above = 1,
    Equivalent = 2,
    Incomparable = 3,
    Undecided = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: PfStatus, msg: impl Into<String>) -> PfStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> PfStatus {
    let status = match e {
        Error::DimensionMismatch(_) | Error::OutcomeMismatch => PfStatus::DimensionMismatch,
        Error::NotTracePreserving { .. } | Error::SingularNormalizer { .. } => PfStatus::InvalidChannel,
        Error::NotHermitian { .. }
        | Error::NotPsd { .. }
        | Error::NotNormalized { .. }
        | Error::EmptyObservable
        | Error::DuplicateOutcome(_) => PfStatus::InvalidObservable,
        _ => PfStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into `PF_STATUS_INTERNAL`.
fn guard(f: impl FnOnce() -> Result<(), PfStatus> + UnwindSafe) -> PfStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => PfStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(PfStatus::Internal, "internal panic"),
    }
}

fn not_null<T>(p: *const T, what: &str) -> Result<(), PfStatus> {
    if p.is_null() {
        Err(fail(PfStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_matrices(re: *const f64, im: *const f64, count: usize, rows: usize, cols: usize) -> Result<Vec<ComplexMatrix>, PfStatus> {
    not_null(re, "real part")?;
    let size = rows * cols;
    let re = std::slice::from_raw_parts(re, count * size);
    let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, count * size)) };
    Ok((0..count)
        .map(|n| {
            ComplexMatrix::from_fn(rows, cols, |r, c| {
                let i = n * size + r * cols + c;
                Complex64::new(re[i], im.map_or(0.0, |v| v[i]))
            })
        })
        .collect())
}

unsafe fn write_matrix(m: &ComplexMatrix, re: *mut f64, im: *mut f64) -> Result<(), PfStatus> {
    not_null(re, "real output")?;
    let cols = m.ncols();
    for r in 0..m.nrows() {
        for c in 0..cols {
            let z = m[(r, c)];
            *re.add(r * cols + c) = z.re;
            if !im.is_null() {
                *im.add(r * cols + c) = z.im;
            }
        }
    }
    Ok(())
}

fn boxed<T>(value: T, out: *mut *mut T) {
    // SAFETY: callers check `out` before building the value.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Message of the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Observable with `count` effects of shape `dim × dim`; `im` may be null
/// for real effects.
///
/// # Safety
/// `re` (and `im` if non-null) must point to `count·dim·dim` doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_povm_new(dim: usize, count: usize, re: *const f64, im: *const f64, out: *mut *mut PfPovm) -> PfStatus {
    guard(|| {
        not_null(out, "out")?;
        if dim == 0 || count == 0 {
            return Err(fail(PfStatus::InvalidArgument, "dimension and effect count must be positive"));
        }
        let effects = read_matrices(re, im, count, dim, dim)?
            .into_iter()
            .map(HermitianMatrix::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(from_error)?;
        let povm = Povm::from_effects(effects).map_err(from_error)?;
        boxed(PfPovm(povm), out);
        Ok(())
    })
}

/// # Safety
/// `povm` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_povm_free(povm: *mut PfPovm) {
    if !povm.is_null() {
        drop(Box::from_raw(povm));
    }
}

/// # Safety
/// `povm` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_povm_dim(povm: *const PfPovm) -> usize {
    povm.as_ref().map_or(0, |p| p.0.dim())
}

/// # Safety
/// `povm` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_povm_len(povm: *const PfPovm) -> usize {
    povm.as_ref().map_or(0, |p| p.0.len())
}

/// Copies effect `index` into `dim·dim` doubles at `re` and `im` (which may
/// be null).
///
/// # Safety
/// `povm` must be a live handle and the outputs large enough.
#[no_mangle]
pub unsafe extern "C" fn pf_povm_effect(povm: *const PfPovm, index: usize, re: *mut f64, im: *mut f64) -> PfStatus {
    guard(|| {
        not_null(povm, "povm")?;
        let a = &(*povm).0;
        let e = a
            .effects()
            .get(index)
            .ok_or_else(|| fail(PfStatus::InvalidArgument, format!("no effect at index {index}")))?;
        write_matrix(e.as_matrix(), re, im)
    })
}

/// Channel with `count` Kraus operators of shape `out_dim × in_dim`.
///
/// # Safety
/// `re` (and `im` if non-null) must point to `count·out_dim·in_dim` doubles
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_channel_new(
    in_dim: usize,
    out_dim: usize,
    count: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut PfChannel,
) -> PfStatus {
    guard(|| {
        not_null(out, "out")?;
        if in_dim == 0 || out_dim == 0 || count == 0 {
            return Err(fail(PfStatus::InvalidArgument, "dimensions and Kraus count must be positive"));
        }
        let kraus = read_matrices(re, im, count, out_dim, in_dim)?;
        let ch = Channel::new(kraus).map_err(from_error)?;
        boxed(PfChannel(ch), out);
        Ok(())
    })
}

/// # Safety
/// `channel` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_channel_free(channel: *mut PfChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// # Safety
/// `channel` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_channel_in_dim(channel: *const PfChannel) -> usize {
    channel.as_ref().map_or(0, |c| c.0.in_dim())
}

/// # Safety
/// `channel` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_channel_out_dim(channel: *const PfChannel) -> usize {
    channel.as_ref().map_or(0, |c| c.0.out_dim())
}

/// Applies the channel to an `in_dim × in_dim` operator and writes the
/// `out_dim × out_dim` image.
///
/// # Safety
/// Inputs must hold `in_dim²` doubles, outputs `out_dim²`; imaginary
/// pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn pf_channel_apply(
    channel: *const PfChannel,
    re: *const f64,
    im: *const f64,
    re_out: *mut f64,
    im_out: *mut f64,
) -> PfStatus {
    guard(|| {
        not_null(channel, "channel")?;
        let ch = &(*channel).0;
        let x = read_matrices(re, im, 1, ch.in_dim(), ch.in_dim())?.remove(0);
        write_matrix(&ch.apply_operator(&x), re_out, im_out)
    })
}

/// Minimal output dimension of an instrument implementing the observable.
///
/// # Safety
/// `povm` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_min_outdim(povm: *const PfPovm, out: *mut usize) -> PfStatus {
    guard(|| {
        not_null(povm, "povm")?;
        not_null(out, "out")?;
        *out = minimal_output_dimension(&(*povm).0);
        Ok(())
    })
}

/// # Safety
/// `povm` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_is_extreme(povm: *const PfPovm, out: *mut bool) -> PfStatus {
    guard(|| {
        not_null(povm, "povm")?;
        not_null(out, "out")?;
        *out = is_extreme(&(*povm).0);
        Ok(())
    })
}

/// Minimally sufficient representative of the observable's equivalence
/// class, as a new handle.
///
/// # Safety
/// `povm` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_reduce(povm: *const PfPovm, out: *mut *mut PfPovm) -> PfStatus {
    guard(|| {
        not_null(povm, "povm")?;
        not_null(out, "out")?;
        let (reduced, _) = minimal_sufficient_reduction(&(*povm).0);
        boxed(PfPovm(reduced), out);
        Ok(())
    })
}

/// Least-disturbing channel of the observable, as a new handle.
///
/// # Safety
/// `povm` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_least_disturbing(povm: *const PfPovm, out: *mut *mut PfChannel) -> PfStatus {
    guard(|| {
        not_null(povm, "povm")?;
        not_null(out, "out")?;
        let (ch, _) = least_disturbing(&(*povm).0).map_err(from_error)?;
        boxed(PfChannel(ch), out);
        Ok(())
    })
}

/// Post-processing order between `a` and `b`: `Below` means `a` is a
/// post-processing of `b` and not conversely.
///
/// # Safety
/// `a`, `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_compare(a: *const PfPovm, b: *const PfPovm, out: *mut PfRelation) -> PfStatus {
    guard(|| {
        not_null(a, "a")?;
        not_null(b, "b")?;
        not_null(out, "out")?;
        let verdict = compare(&(*a).0, &(*b).0).map_err(from_error)?;
        *out = match verdict.relation {
            Relation::Below => PfRelation::Below,
            Relation::Above => PfRelation::Above,
            Relation::Equivalent => PfRelation::Equivalent,
            Relation::Incomparable => PfRelation::Incomparable,
            Relation::Undecided => PfRelation::Undecided,
        };
        Ok(())
    })
}

fn settle<T>(r: Realization<T>) -> Result<T, PfStatus> {
    match r.witness {
        Some(w) => Ok(w),
        None if r.refuted => Err(fail(PfStatus::Infeasible, "no realization exists")),
        None => Err(fail(
            PfStatus::Undecided,
            format!("budget exhausted after {} iterations, residual {:.3e}", r.iterations, r.residual),
        )),
    }
}

/// Observable `B'` on the minimal dilation space of `a` that reproduces `b`
/// after the least-disturbing measurement of `a`. Returns
/// `PF_STATUS_INFEASIBLE` or `PF_STATUS_UNDECIDED` when no witness is found.
///
/// # Safety
/// `a`, `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_realize_observable(a: *const PfPovm, b: *const PfPovm, budget: usize, out: *mut *mut PfPovm) -> PfStatus {
    guard(|| {
        not_null(a, "a")?;
        not_null(b, "b")?;
        not_null(out, "out")?;
        let opts = options(budget);
        let r = realize_observable_after_with(&(*a).0, &(*b).0, &opts).map_err(from_error)?;
        boxed(PfPovm(settle(r)?), out);
        Ok(())
    })
}

/// Channel `Γ` with `lambda = Γ∘Λ_A`, where `Λ_A` is the least-disturbing
/// channel of `a`. Status codes as for [`pf_realize_observable`].
///
/// # Safety
/// `a`, `lambda` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_realize_channel(a: *const PfPovm, lambda: *const PfChannel, budget: usize, out: *mut *mut PfChannel) -> PfStatus {
    guard(|| {
        not_null(a, "a")?;
        not_null(lambda, "lambda")?;
        not_null(out, "out")?;
        let opts = options(budget);
        let r = realize_channel_after_with(&(*a).0, &(*lambda).0, &opts).map_err(from_error)?;
        boxed(PfChannel(settle(r)?), out);
        Ok(())
    })
}

/// Zero selects the default budget.
fn options(budget: usize) -> SolverOptions {
    let mut opts = SolverOptions::default();
    if budget > 0 {
        opts.budget = budget;
    }
    opts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_status_codes() {
        assert_eq!(from_error(Error::OutcomeMismatch), PfStatus::DimensionMismatch);
        assert_eq!(from_error(Error::NotNormalized { deficit: 0.1 }), PfStatus::InvalidObservable);
        assert_eq!(from_error(Error::NotTracePreserving { deficit: 0.1 }), PfStatus::InvalidChannel);
        let msg = unsafe { std::ffi::CStr::from_ptr(pf_last_error()) };
        assert!(msg.to_str().unwrap().contains("trace preserving"));
    }

    #[test]
    fn panics_become_internal_errors() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, PfStatus::Internal);
    }
}
