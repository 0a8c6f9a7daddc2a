//! C ABI for the `oce-risk` engine.
//!
//! Probability spaces and utilities are opaque handles created and freed
//! through this interface. Every fallible call returns an [`OceStatus`];
//! on failure [`oce_last_error`] yields a message for the calling thread.
//! Extended real results use IEEE infinities, and empty intervals are
//! reported as NaN endpoints.
//!
//! Arrays are passed as a pointer plus a length. A null pointer with a zero
//! length is accepted as an empty array.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use oce_risk::hulls::{hull_dual, HullMode, HullSpec, RiskDescriptor};
use oce_risk::solver::AscentConfig;
use oce_risk::{oce, Interval, ProbSpace, RandomVariable, RiskError, Utility};

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EmptyDomain = 3,
    Infeasible = 4,
    NonConvergence = 5,
    NotFinite = 6,
    Panic = 7,
}

/// Probability space handle.
pub struct OceSpace(ProbSpace);

/// Utility function handle.
pub struct OceUtility(Utility);

pub const OCE_MODE_COMBINED: u32 = 0;
pub const OCE_MODE_MONOTONE: u32 = 1;
pub const OCE_MODE_INVARIANT: u32 = 2;

pub const OCE_DESC_LP_DEVIATION: u32 = 0;
pub const OCE_DESC_LP_SEMI_DEVIATION: u32 = 1;
pub const OCE_DESC_MEAN_LP: u32 = 2;
pub const OCE_DESC_LP_SEMI_MOMENT: u32 = 3;
pub const OCE_DESC_EXPONENTIAL: u32 = 4;
pub const OCE_DESC_LOGARITHMIC: u32 = 5;
pub const OCE_DESC_INF_DEVIATION: u32 = 6;

/// Risk function of a hull. `kind` is one of the `OCE_DESC_*` constants;
/// `p` and `c` are ignored where the function has no such parameter
/// (`c` for the inf-deviation, both for the exponential and log risks).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OceDescriptor {
    pub kind: u32,
    pub p: f64,
    pub c: f64,
}

/// Dual solver settings; a null pointer selects the defaults
/// (16 restarts, seed 0).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OceHullOptions {
    pub restarts: usize,
    pub seed: u64,
}

/// Optimized certainty equivalent at one payoff.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OceValue {
    pub value: f64,
    pub lambda_bar: f64,
    pub attained: bool,
    /// Set of minimizers of the scalar objective.
    pub argmin_lo: f64,
    pub argmin_hi: f64,
}

/// Primal and dual evaluation of a hull.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OceHull {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub primal_lower_bound: f64,
    pub slater: bool,
    pub dual_feasible: bool,
    pub converged: bool,
    pub residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Failure {
    Null(&'static str),
    Risk(RiskError),
    Argument(String),
}

impl From<RiskError> for Failure {
    fn from(e: RiskError) -> Self {
        Failure::Risk(e)
    }
}

fn status_of(e: &RiskError) -> OceStatus {
    match e {
        RiskError::EmptyDomain => OceStatus::EmptyDomain,
        RiskError::Infeasible(_) => OceStatus::Infeasible,
        RiskError::NonConvergence(_) => OceStatus::NonConvergence,
        RiskError::NotFinite(_) => OceStatus::NotFinite,
        _ => OceStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OceStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OceStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            OceStatus::NullPointer
        }
        Ok(Err(Failure::Risk(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Argument(msg))) => {
            set_error(msg);
            OceStatus::InvalidArgument
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("internal panic: {msg}"));
            OceStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn reference<'a, T>(ptr: *const T, what: &'static str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn variable(space: &ProbSpace, ptr: *const f64, len: usize, what: &'static str) -> Result<RandomVariable, Failure> {
    let x = RandomVariable::new(slice(ptr, len, what)?.to_vec())?;
    space.check(&x)?;
    Ok(x)
}

fn endpoints(iv: &Interval) -> (f64, f64) {
    if iv.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (iv.lo(), iv.hi())
    }
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `cap` bytes) and returns the untruncated length
/// in bytes, excluding the terminator. `buf` may be null when `cap` is 0.
///
/// # Safety
/// `buf` must be valid for `cap` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn oce_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn oce_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Creates a probability space from strictly positive weights summing to 1.
///
/// # Safety
/// `weights` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oce_space_new(weights: *const f64, n: usize, out: *mut *mut OceSpace) -> OceStatus {
    guard(|| {
        let w = slice(weights, n, "weights")?.to_vec();
        let space = ProbSpace::new(w)?;
        emit(out, OceSpace(space))
    })
}

/// Frees a space; null is ignored.
///
/// # Safety
/// `space` must come from `oce_space_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn oce_space_free(space: *mut OceSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of atoms, or 0 for a null handle.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn oce_space_len(space: *const OceSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.len())
}

fn new_utility(u: oce_risk::Result<Utility>, out: *mut *mut OceUtility) -> OceStatus {
    guard(|| {
        let u = u?;
        unsafe { emit(out, OceUtility(u)) }
    })
}

/// `gamma2 t` for `t <= 0` and `gamma1 t` for `t > 0`, with
/// `gamma2 < -1 < gamma1 <= 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oce_utility_two_slope(gamma1: f64, gamma2: f64, out: *mut *mut OceUtility) -> OceStatus {
    new_utility(Utility::two_slope(gamma1, gamma2), out)
}

/// The utility behind CVaR at level `beta` in (0, 1).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oce_utility_cvar(beta: f64, out: *mut *mut OceUtility) -> OceStatus {
    new_utility(Utility::cvar(beta), out)
}

/// `exp(-t) - 1`, the entropic utility.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oce_utility_exponential(out: *mut *mut OceUtility) -> OceStatus {
    new_utility(Ok(Utility::Exponential), out)
}

/// Indicator of `[0, +inf)`, the worst-case utility.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oce_utility_worst_case(out: *mut *mut OceUtility) -> OceStatus {
    new_utility(Ok(Utility::IndicatorNonneg), out)
}

/// Piecewise linear utility with `n_breaks` increasing breakpoints and
/// `n_breaks + 1` slopes; the leftmost slope may be `-inf`.
///
/// # Safety
/// `breaks` and `slopes` must point to `n_breaks` and `n_slopes` doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oce_utility_piecewise_linear(
    breaks: *const f64,
    n_breaks: usize,
    slopes: *const f64,
    n_slopes: usize,
    out: *mut *mut OceUtility,
) -> OceStatus {
    guard(|| {
        let b = slice(breaks, n_breaks, "breaks")?.to_vec();
        let s = slice(slopes, n_slopes, "slopes")?.to_vec();
        let u = Utility::piecewise_linear(b, s)?;
        emit(out, OceUtility(u))
    })
}

/// Frees a utility; null is ignored.
///
/// # Safety
/// `utility` must come from an `oce_utility_*` constructor and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn oce_utility_free(utility: *mut OceUtility) {
    if !utility.is_null() {
        drop(Box::from_raw(utility));
    }
}

/// `rho_v(X) = inf_l { l + E v(X + l) }` for the payoff `x` of length `n`.
///
/// # Safety
/// Handles must be live, `x` must point to `n` doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn oce_value(
    space: *const OceSpace,
    utility: *const OceUtility,
    x: *const f64,
    n: usize,
    out: *mut OceValue,
) -> OceStatus {
    guard(|| {
        let space = &reference(space, "space")?.0;
        let v = &reference(utility, "utility")?.0;
        let x = variable(space, x, n, "x")?;
        let r = oce::oce_value(space, v, &x)?;
        let (lo, hi) = endpoints(&r.minimizer_interval);
        write(
            out,
            OceValue {
                value: r.value.to_f64(),
                lambda_bar: r.lambda_bar,
                attained: r.attained,
                argmin_lo: lo,
                argmin_hi: hi,
            },
            "out",
        )
    })
}

/// Conjugate `rho_v*(X*)`; `+inf` outside the domain.
///
/// # Safety
/// Handles must be live, `xstar` must point to `n` doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn oce_conjugate(
    space: *const OceSpace,
    utility: *const OceUtility,
    xstar: *const f64,
    n: usize,
    out: *mut f64,
) -> OceStatus {
    guard(|| {
        let space = &reference(space, "space")?.0;
        let v = &reference(utility, "utility")?.0;
        let xs = variable(space, xstar, n, "xstar")?;
        write(out, oce::oce_conjugate(space, v, &xs)?.to_f64(), "out")
    })
}

/// Subdifferential of `rho_v` at `x`: per-atom bounds written to `lower`
/// and `upper` (length `n`), cut by `E(X*) = -1`. `nonempty` receives
/// whether the cut box has a point.
///
/// # Safety
/// Handles must be live; `x`, `lower` and `upper` must be valid for `n`
/// doubles; `nonempty` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oce_subdiff(
    space: *const OceSpace,
    utility: *const OceUtility,
    x: *const f64,
    n: usize,
    lower: *mut f64,
    upper: *mut f64,
    nonempty: *mut bool,
) -> OceStatus {
    guard(|| {
        let space = &reference(space, "space")?.0;
        let v = &reference(utility, "utility")?.0;
        let x = variable(space, x, n, "x")?;
        let bx = oce::oce_subdiff(space, v, &x)?;
        let lo = slice_mut(lower, n, "lower")?;
        let hi = slice_mut(upper, n, "upper")?;
        for (i, iv) in bx.intervals().iter().enumerate() {
            (lo[i], hi[i]) = endpoints(iv);
        }
        write(nonempty, bx.is_nonempty(space), "nonempty")
    })
}

fn descriptor(d: &OceDescriptor) -> Result<RiskDescriptor, Failure> {
    Ok(match d.kind {
        OCE_DESC_LP_DEVIATION => RiskDescriptor::lp_deviation(d.p, d.c)?,
        OCE_DESC_LP_SEMI_DEVIATION => RiskDescriptor::lp_semi_deviation(d.p, d.c)?,
        OCE_DESC_MEAN_LP => RiskDescriptor::mean_lp(d.p, d.c)?,
        OCE_DESC_LP_SEMI_MOMENT => RiskDescriptor::lp_semi_moment(d.p, d.c)?,
        OCE_DESC_EXPONENTIAL => RiskDescriptor::Exponential,
        OCE_DESC_LOGARITHMIC => RiskDescriptor::Logarithmic,
        OCE_DESC_INF_DEVIATION => RiskDescriptor::inf_deviation(d.p)?,
        k => return Err(Failure::Argument(format!("unknown descriptor kind {k}"))),
    })
}

fn mode(m: u32) -> Result<HullMode, Failure> {
    match m {
        OCE_MODE_COMBINED => Ok(HullMode::Combined),
        OCE_MODE_MONOTONE => Ok(HullMode::Monotone),
        OCE_MODE_INVARIANT => Ok(HullMode::Invariant),
        k => Err(Failure::Argument(format!("unknown hull mode {k}"))),
    }
}

/// Evaluates the hull of `desc` at `x` in `mode` (an `OCE_MODE_*`
/// constant), primally and through its dual. A null `numeraire` means the
/// constant 1. When `xstar` is not null the dual point is written to it
/// (length `n`).
///
/// # Safety
/// `space`, `desc` and `out` must be valid; `x` and a non-null `numeraire`
/// or `xstar` must be valid for `n` doubles; `options` may be null.
#[no_mangle]
pub unsafe extern "C" fn oce_hull(
    space: *const OceSpace,
    desc: *const OceDescriptor,
    mode_code: u32,
    numeraire: *const f64,
    x: *const f64,
    n: usize,
    options: *const OceHullOptions,
    out: *mut OceHull,
    xstar: *mut f64,
) -> OceStatus {
    guard(|| {
        let space = &reference(space, "space")?.0;
        let desc = descriptor(reference(desc, "desc")?)?;
        let mode = mode(mode_code)?;
        let x = variable(space, x, n, "x")?;
        let spec = if numeraire.is_null() {
            HullSpec::constant(space, 1.0)?
        } else {
            HullSpec::new(space, variable(space, numeraire, n, "numeraire")?)?
        };
        let mut cfg = AscentConfig::default();
        if let Some(o) = options.as_ref() {
            if o.restarts == 0 {
                return Err(Failure::Argument("restarts must be at least 1".into()));
            }
            cfg.restarts = o.restarts;
            cfg.seed = o.seed;
        }
        let sol = hull_dual(space, &desc, &spec, &x, mode, &cfg)?;
        if !xstar.is_null() {
            slice_mut(xstar, n, "xstar")?.copy_from_slice(sol.xstar.values());
        }
        write(
            out,
            OceHull {
                primal: sol.primal_value.to_f64(),
                dual: sol.dual_value.to_f64(),
                gap: sol.gap,
                primal_lower_bound: sol.primal_lower_bound,
                slater: sol.slater_ok,
                dual_feasible: sol.dual_feasible,
                converged: sol.converged,
                residual: sol.residual,
            },
            "out",
        )
    })
}
