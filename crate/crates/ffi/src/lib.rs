//! C ABI over `lplab`.
//!
//! Objects are opaque handles created by `lab_*_new` style functions and
//! released with the matching `lab_*_free`. Every fallible call returns a
//! [`LabStatus`]; on failure, [`lab_last_error_message`] gives a readable
//! message for the calling thread. Complex arrays are passed as
//! interleaved `(re, im)` doubles.
//!
//! # Safety
//!
//! Every pointer argument must be null or valid for the access its
//! documentation describes: handles must come from this library and not
//! have been freed, arrays must hold at least the stated number of
//! elements, and strings must be NUL-terminated. Null pointers are reported
//! as [`LabStatus::NullPointer`].
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use lplab::criterion::{admissible_p_interval_for_ratio, dissipativity_gap, UpperBound};
use lplab::field::lp_norm;
use lplab::form::assemble_form;
use lplab::projection::project_onto_lp_ball;
use lplab::semigroup::{evolve_and_measure, Scheme, StepperConfig};
use lplab::{Family, FormMatrix, Grid, LabError, PExponent, VectorField};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    ShapeMismatch = 3,
    NonElliptic = 4,
    InfeasibleRatio = 5,
    NumericalFailure = 6,
    Format = 7,
    Io = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabScheme {
    ImplicitEuler = 0,
    CrankNicolson = 1,
}

/// Uniform grid handle.
pub struct LabGrid(Arc<Grid>);

/// Vector field handle.
pub struct LabField(VectorField);

/// Assembled form handle.
pub struct LabForm(FormMatrix);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &LabError) -> LabStatus {
    match e {
        LabError::InvalidInput(_) => LabStatus::InvalidInput,
        LabError::ShapeMismatch(_) => LabStatus::ShapeMismatch,
        LabError::NonElliptic { .. } => LabStatus::NonElliptic,
        LabError::InfeasibleRatio(_) => LabStatus::InfeasibleRatio,
        LabError::NumericalFailure { .. } => LabStatus::NumericalFailure,
        LabError::Format(_) | LabError::Json(_) => LabStatus::Format,
        LabError::Io(_) => LabStatus::Io,
    }
}

enum Failure {
    Null,
    Lab(LabError),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Lab(e)
    }
}

fn guard<F>(f: F) -> LabStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            LabStatus::Ok
        }
        Ok(Err(Failure::Null)) => {
            set_error("null pointer argument".into());
            LabStatus::NullPointer
        }
        Ok(Err(Failure::Lab(e))) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            LabStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null)
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn exponent(p: f64) -> Result<PExponent, Failure> {
    Ok(PExponent::new(p)?)
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the length the full message
/// needs including the terminator. `buf` may be null to query the length.
#[no_mangle]
pub unsafe extern "C" fn lab_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Grid with `d` axes of `nodes[k]` nodes; `lengths` may be null for the
/// unit box.
#[no_mangle]
pub unsafe extern "C" fn lab_grid_new(
    d: usize,
    nodes: *const usize,
    lengths: *const f64,
    out_grid: *mut *mut LabGrid,
) -> LabStatus {
    guard(|| {
        let o = out(out_grid)?;
        let n = slice(nodes, d)?;
        let g = if lengths.is_null() {
            Grid::unit(n)?
        } else {
            Grid::new(n, slice(lengths, d)?)?
        };
        *o = Box::into_raw(Box::new(LabGrid(Arc::new(g))));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lab_grid_free(grid: *mut LabGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of grid nodes, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn lab_grid_node_count(grid: *const LabGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.node_count())
}

/// Field from `len = 2 * node_count * m` interleaved doubles.
#[no_mangle]
pub unsafe extern "C" fn lab_field_new(
    grid: *const LabGrid,
    m: usize,
    values: *const f64,
    len: usize,
    out_field: *mut *mut LabField,
) -> LabStatus {
    guard(|| {
        let g = deref(grid)?;
        let o = out(out_field)?;
        let raw = slice(values, len)?;
        if !len.is_multiple_of(2) {
            return Err(LabError::ShapeMismatch("interleaved values need an even length".into()).into());
        }
        let vals = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let f = VectorField::new(g.0.clone(), m, vals)?;
        *o = Box::into_raw(Box::new(LabField(f)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lab_field_free(field: *mut LabField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of doubles needed by [`lab_field_values`], or 0 for null.
#[no_mangle]
pub unsafe extern "C" fn lab_field_len(field: *const LabField) -> usize {
    field.as_ref().map_or(0, |f| 2 * f.0.values().len())
}

/// Writes the interleaved values into `buf`, which must hold exactly
/// [`lab_field_len`] doubles.
#[no_mangle]
pub unsafe extern "C" fn lab_field_values(field: *const LabField, buf: *mut f64, len: usize) -> LabStatus {
    guard(|| {
        let f = deref(field)?;
        if len != 2 * f.0.values().len() {
            return Err(LabError::ShapeMismatch(format!("buffer needs {} doubles", 2 * f.0.values().len())).into());
        }
        if buf.is_null() {
            return Err(Failure::Null);
        }
        let dst = std::slice::from_raw_parts_mut(buf, len);
        for (c, z) in dst.chunks_exact_mut(2).zip(f.0.values()) {
            c[0] = z.re;
            c[1] = z.im;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lab_lp_norm(field: *const LabField, p: f64, out_norm: *mut f64) -> LabStatus {
    guard(|| {
        let f = deref(field)?;
        let o = out(out_norm)?;
        *o = lp_norm(&f.0, exponent(p)?)?;
        Ok(())
    })
}

/// Projection onto the unit L_p ball. `out_multiplier` (nullable) receives
/// the Lagrange multiplier, zero when the input is already in the ball.
#[no_mangle]
pub unsafe extern "C" fn lab_project(
    field: *const LabField,
    p: f64,
    tol: f64,
    out_field: *mut *mut LabField,
    out_multiplier: *mut f64,
) -> LabStatus {
    guard(|| {
        let f = deref(field)?;
        let o = out(out_field)?;
        let r = project_onto_lp_ball(&f.0, exponent(p)?, tol)?;
        if let Some(t) = out_multiplier.as_mut() {
            *t = r.multiplier;
        }
        *o = Box::into_raw(Box::new(LabField(r.projected)));
        Ok(())
    })
}

/// Admissible exponent interval for the ratio `mu / M`. An unbounded
/// interval is reported as `(1, +inf)`.
#[no_mangle]
pub unsafe extern "C" fn lab_admissible_interval(ratio: f64, out_p_minus: *mut f64, out_p_plus: *mut f64) -> LabStatus {
    guard(|| {
        let lo = out(out_p_minus)?;
        let hi = out(out_p_plus)?;
        let iv = admissible_p_interval_for_ratio(ratio)?;
        *lo = iv.p_minus;
        *hi = match iv.p_plus {
            UpperBound::Finite(v) => v,
            UpperBound::Unbounded => f64::INFINITY,
        };
        Ok(())
    })
}

/// Assembles the form for a coefficient family given as JSON, e.g.
/// `{"family": "antisymmetric", "b": 1.0}`.
#[no_mangle]
pub unsafe extern "C" fn lab_form_from_family(
    grid: *const LabGrid,
    m: usize,
    family_json: *const c_char,
    seed: u64,
    out_form: *mut *mut LabForm,
) -> LabStatus {
    guard(|| {
        let g = deref(grid)?;
        let o = out(out_form)?;
        if family_json.is_null() {
            return Err(Failure::Null);
        }
        let text = CStr::from_ptr(family_json)
            .to_str()
            .map_err(|_| LabError::Format("family JSON is not UTF-8".into()))?;
        let family: Family = serde_json::from_str(text).map_err(LabError::from)?;
        let c = lplab::coefficients::make_coefficients(g.0.clone(), m, &family, seed)?;
        let form = assemble_form(&c)?;
        *o = Box::into_raw(Box::new(LabForm(form)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lab_form_free(form: *mut LabForm) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}

#[no_mangle]
pub unsafe extern "C" fn lab_form_constants(form: *const LabForm, out_mu: *mut f64, out_big_m: *mut f64) -> LabStatus {
    guard(|| {
        let f = deref(form)?;
        let c = f.0.constants();
        *out(out_mu)? = c.mu;
        *out(out_big_m)? = c.big_m;
        Ok(())
    })
}

/// `Re a(u, ||u||^{p-2} u) / ||u||_p^p`.
#[no_mangle]
pub unsafe extern "C" fn lab_dissipativity_gap(
    form: *const LabForm,
    field: *const LabField,
    p: f64,
    out_gap: *mut f64,
) -> LabStatus {
    guard(|| {
        let a = deref(form)?;
        let u = deref(field)?;
        let o = out(out_gap)?;
        *o = dissipativity_gap(&a.0, &u.0, exponent(p)?)?;
        Ok(())
    })
}

/// Largest `||u(t)||_p / ||u_0||_p` over the trajectory up to `horizon`.
#[no_mangle]
pub unsafe extern "C" fn lab_evolve_worst_ratio(
    form: *const LabForm,
    field: *const LabField,
    p: f64,
    scheme: LabScheme,
    dt: f64,
    horizon: f64,
    out_ratio: *mut f64,
) -> LabStatus {
    guard(|| {
        let a = deref(form)?;
        let u = deref(field)?;
        let o = out(out_ratio)?;
        let scheme = match scheme {
            LabScheme::ImplicitEuler => Scheme::ImplicitEuler,
            LabScheme::CrankNicolson => Scheme::CrankNicolson,
        };
        let cfg = StepperConfig::new(scheme, dt, horizon)?;
        let rep = evolve_and_measure(&a.0, &u.0, &[exponent(p)?], &cfg)?;
        *o = rep.worst[0];
        Ok(())
    })
}
