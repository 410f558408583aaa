//! C ABI over the `qpme` simulator.
//!
//! Models, spectral decompositions and states cross the boundary as opaque
//! handles created by `*_new` functions and released with the matching
//! `*_free`. Every fallible call returns a [`QpmeStatus`]; on failure the
//! message is available from [`qpme_last_error`] on the same thread.
//! Panics are caught at the boundary and reported as `QPME_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use qpme::diagnostics::level_spacing_ratios;
use qpme::ensemble::sample_fields;
use qpme::evolution::decompose_terms;
use qpme::hilbert::transformed_terms;
use qpme::observables::{charge_sector_probs, charge_variance, entanglement_asymmetry};
use qpme::state::{tilted_ferromagnet, tilted_neel};
use qpme::{c64, decompose_model, propagate_imag, propagate_real, Error, ModelParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpmeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpmeStateKind {
    Ferro = 0,
    Neel = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpmeTimeKind {
    Real = 0,
    Imaginary = 1,
}

/// Chain couplings and disorder fields.
pub struct QpmeModel(ModelParams);

/// Eigen-decomposition of one Hamiltonian.
pub struct QpmeSpectrum(qpme::SpectralDecomposition);

/// Normalized state vector on `2^L` amplitudes.
pub struct QpmeState(qpme::StateVector);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QpmeStatus {
    match e {
        Error::DimensionMismatch { .. } => QpmeStatus::DimensionMismatch,
        Error::NotHermitian(_) | Error::Numerical(_) => QpmeStatus::Numerical,
        _ => QpmeStatus::InvalidArgument,
    }
}

struct Fail(QpmeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QpmeStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QpmeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QpmeStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("panic: {msg}"));
            QpmeStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn check_len(expected: usize, found: usize) -> Result<(), Fail> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found }.into());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qpme_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qpme_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Writes `sites` uniform fields on `[-disorder, disorder)` for one realization.
///
/// # Safety
/// `out` must point to `sites` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qpme_sample_fields(
    master_seed: u64,
    realization: u64,
    sites: usize,
    disorder: f64,
    out: *mut f64,
) -> QpmeStatus {
    guard(|| {
        let out = output(out, sites, "out")?;
        out.copy_from_slice(&sample_fields(master_seed, realization, sites, disorder));
        Ok(())
    })
}

/// Creates a model. `fields` holds `sites` values and may be null for a clean chain.
///
/// # Safety
/// `fields` must be null or point to `sites` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpme_model_new(
    sites: usize,
    gamma: f64,
    mu: f64,
    fields: *const f64,
    periodic: bool,
    out: *mut *mut QpmeModel,
) -> QpmeStatus {
    guard(|| {
        let mut p = ModelParams::new(sites, gamma).with_mu(mu);
        if !fields.is_null() {
            p = p.with_fields(input(fields, sites, "fields")?.to_vec());
        }
        p.periodic = periodic;
        p.validate()?;
        write(out, Box::into_raw(Box::new(QpmeModel(p))), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from [`qpme_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qpme_model_free(model: *mut QpmeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Diagonalizes the model Hamiltonian.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpme_spectrum_new(model: *const QpmeModel, out: *mut *mut QpmeSpectrum) -> QpmeStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let sd = decompose_model(&m.0)?;
        write(out, Box::into_raw(Box::new(QpmeSpectrum(sd))), "out")
    })
}

/// Diagonalizes the Hamiltonian conjugated by the global y-rotation of angle `theta`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpme_spectrum_new_transformed(
    model: *const QpmeModel,
    theta: f64,
    out: *mut *mut QpmeSpectrum,
) -> QpmeStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let sd = decompose_terms(&transformed_terms(&m.0, theta)?)?;
        write(out, Box::into_raw(Box::new(QpmeSpectrum(sd))), "out")
    })
}

/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qpme_spectrum_free(spectrum: *mut QpmeSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Hilbert-space dimension, or 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qpme_spectrum_dim(spectrum: *const QpmeSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies the ascending eigenvalues; `len` must equal the dimension.
///
/// # Safety
/// `spectrum` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qpme_spectrum_eigenvalues(
    spectrum: *const QpmeSpectrum,
    out: *mut f64,
    len: usize,
) -> QpmeStatus {
    guard(|| {
        let s = deref(spectrum, "spectrum")?;
        check_len(s.0.dim(), len)?;
        output(out, len, "out")?.copy_from_slice(s.0.eigenvalues());
        Ok(())
    })
}

/// Tilted ferromagnetic or Néel product state on `sites` spins.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpme_state_new_tilted(
    kind: QpmeStateKind,
    sites: usize,
    theta: f64,
    out: *mut *mut QpmeState,
) -> QpmeStatus {
    guard(|| {
        let psi = match kind {
            QpmeStateKind::Ferro => tilted_ferromagnet(sites, theta)?,
            QpmeStateKind::Neel => tilted_neel(sites, theta)?,
        };
        write(out, Box::into_raw(Box::new(QpmeState(psi))), "out")
    })
}

/// State from split real and imaginary parts, normalized on entry.
///
/// # Safety
/// `re` and `im` must each point to `dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpme_state_new_amplitudes(
    re: *const f64,
    im: *const f64,
    dim: usize,
    out: *mut *mut QpmeState,
) -> QpmeStatus {
    guard(|| {
        let re = input(re, dim, "re")?;
        let im = input(im, dim, "im")?;
        let amps = re.iter().zip(im).map(|(&a, &b)| c64::new(a, b)).collect();
        let psi = qpme::StateVector::new(amps)?.normalized()?;
        write(out, Box::into_raw(Box::new(QpmeState(psi))), "out")
    })
}

/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qpme_state_free(state: *mut QpmeState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of amplitudes, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qpme_state_dim(state: *const QpmeState) -> usize {
    state.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies the amplitudes into split real and imaginary arrays of length `len`.
///
/// # Safety
/// `state` must be a live handle; `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qpme_state_amplitudes(
    state: *const QpmeState,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> QpmeStatus {
    guard(|| {
        let s = deref(state, "state")?;
        check_len(s.0.dim(), len)?;
        let re = output(re, len, "re")?;
        let im = output(im, len, "im")?;
        for (k, a) in s.0.amplitudes().iter().enumerate() {
            re[k] = a.re;
            im[k] = a.im;
        }
        Ok(())
    })
}

/// Evolves `state` for time `t` under `spectrum` into a new handle.
/// Imaginary-time results are normalized.
///
/// # Safety
/// `state` and `spectrum` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpme_propagate(
    state: *const QpmeState,
    spectrum: *const QpmeSpectrum,
    t: f64,
    kind: QpmeTimeKind,
    out: *mut *mut QpmeState,
) -> QpmeStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let sd = deref(spectrum, "spectrum")?;
        let psi = match kind {
            QpmeTimeKind::Real => propagate_real(&s.0, &sd.0, t)?,
            QpmeTimeKind::Imaginary => propagate_imag(&s.0, &sd.0, t)?,
        };
        write(out, Box::into_raw(Box::new(QpmeState(psi))), "out")
    })
}

/// `<psi|H|psi>` for the Hamiltonian behind `spectrum`.
///
/// # Safety
/// `state` and `spectrum` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpme_energy(
    state: *const QpmeState,
    spectrum: *const QpmeSpectrum,
    out: *mut f64,
) -> QpmeStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let sd = deref(spectrum, "spectrum")?;
        write(out, sd.0.expectation(&s.0)?, "out")
    })
}

/// Entanglement asymmetry of the leading `subsystem` sites.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpme_entanglement_asymmetry(
    state: *const QpmeState,
    subsystem: usize,
    out: *mut f64,
) -> QpmeStatus {
    guard(|| {
        let s = deref(state, "state")?;
        write(out, entanglement_asymmetry(&s.0, subsystem)?, "out")
    })
}

/// Variance of the total charge.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpme_charge_variance(state: *const QpmeState, out: *mut f64) -> QpmeStatus {
    guard(|| {
        let s = deref(state, "state")?;
        write(out, charge_variance(&s.0), "out")
    })
}

/// Charge-sector probabilities for `Q = -L, -L + 2, ..., L`; `len` must be `L + 1`.
///
/// # Safety
/// `state` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qpme_charge_probabilities(
    state: *const QpmeState,
    out: *mut f64,
    len: usize,
) -> QpmeStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let dist = charge_sector_probs(&s.0);
        check_len(dist.probabilities().len(), len)?;
        output(out, len, "out")?.copy_from_slice(dist.probabilities());
        Ok(())
    })
}

/// Mean adjacent-gap ratio of an ascending spectrum of `len >= 3` levels.
///
/// # Safety
/// `energies` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpme_level_spacing_ratio(energies: *const f64, len: usize, out: *mut f64) -> QpmeStatus {
    guard(|| {
        let e = input(energies, len, "energies")?;
        write(out, level_spacing_ratios(e)?.r_mean, "out")
    })
}
