use std::ffi::{c_char, CStr};
use std::ptr;

use oce_risk::hulls::{hull_dual, HullMode, HullSpec, RiskDescriptor};
use oce_risk::solver::AscentConfig;
use oce_risk::{oce, ProbSpace, RandomVariable, Utility};
use oce_risk_ffi::*;
use proptest::prelude::*;

struct Space(*mut OceSpace);

impl Space {
    fn new(w: &[f64]) -> Self {
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { oce_space_new(w.as_ptr(), w.len(), &mut s) }, OceStatus::Ok);
        Space(s)
    }
}

impl Drop for Space {
    fn drop(&mut self) {
        unsafe { oce_space_free(self.0) }
    }
}

struct Util(*mut OceUtility);

impl Drop for Util {
    fn drop(&mut self) {
        unsafe { oce_utility_free(self.0) }
    }
}

fn make(f: impl FnOnce(*mut *mut OceUtility) -> OceStatus) -> Util {
    let mut u = ptr::null_mut();
    assert_eq!(f(&mut u), OceStatus::Ok);
    Util(u)
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { oce_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn value(space: &Space, u: &Util, x: &[f64]) -> OceValue {
    let mut out = OceValue::default();
    assert_eq!(unsafe { oce_value(space.0, u.0, x.as_ptr(), x.len(), &mut out) }, OceStatus::Ok);
    out
}

#[test]
fn closed_forms_on_a_fair_coin() {
    let space = Space::new(&[0.5, 0.5]);
    let x = [1.0, -1.0];
    let exp = make(|o| unsafe { oce_utility_exponential(o) });
    let want = ((-1.0_f64).exp() + 1.0_f64.exp()).ln() - 2.0_f64.ln();
    assert!((value(&space, &exp, &x).value - want).abs() <= 1e-12);
    let cvar = make(|o| unsafe { oce_utility_cvar(0.5, o) });
    assert!((value(&space, &cvar, &x).value - 1.0).abs() <= 1e-12);
    let worst = make(|o| unsafe { oce_utility_worst_case(o) });
    assert!((value(&space, &worst, &x).value - 1.0).abs() <= 1e-12);
    assert_eq!(unsafe { oce_space_len(space.0) }, 2);
}

#[test]
fn validation_errors_carry_status_and_message() {
    let mut s = ptr::null_mut();
    let bad = [0.4, 0.4];
    assert_eq!(unsafe { oce_space_new(bad.as_ptr(), 2, &mut s) }, OceStatus::InvalidArgument);
    assert!(s.is_null());
    assert!(last_error().contains("weights"), "{}", last_error());

    assert_eq!(unsafe { oce_space_new(ptr::null(), 3, &mut s) }, OceStatus::NullPointer);
    assert!(last_error().contains("weights"));

    let mut u = ptr::null_mut();
    assert_eq!(unsafe { oce_utility_two_slope(0.0, -0.5, &mut u) }, OceStatus::InvalidArgument);
    assert_eq!(unsafe { oce_utility_cvar(1.5, &mut u) }, OceStatus::InvalidArgument);
    assert!(u.is_null());

    let space = Space::new(&[0.25, 0.75]);
    let exp = make(|o| unsafe { oce_utility_exponential(o) });
    let mut out = OceValue::default();
    let short = [1.0];
    let status = unsafe { oce_value(space.0, exp.0, short.as_ptr(), 1, &mut out) };
    assert_eq!(status, OceStatus::InvalidArgument);
    assert!(last_error().contains("dimension"));
    let x = [1.0, 2.0];
    let status = unsafe { oce_value(ptr::null(), exp.0, x.as_ptr(), 2, &mut out) };
    assert_eq!(status, OceStatus::NullPointer);
    let status = unsafe { oce_value(space.0, exp.0, x.as_ptr(), 2, ptr::null_mut()) };
    assert_eq!(status, OceStatus::NullPointer);
}

#[test]
fn error_message_truncates_and_reports_full_length() {
    let mut s = ptr::null_mut();
    let bad = [-1.0, 2.0];
    assert_eq!(unsafe { oce_space_new(bad.as_ptr(), 2, &mut s) }, OceStatus::InvalidArgument);
    let full = unsafe { oce_last_error(ptr::null_mut(), 0) };
    let mut buf = [1 as c_char; 8];
    let len = unsafe { oce_last_error(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(len, full);
    assert!(full > 7);
    let got = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len();
    assert_eq!(got, 7);
}

#[test]
fn subdifferential_member_satisfies_fenchel_equality() {
    let w = [0.2, 0.3, 0.5];
    let x = [-1.0, 0.5, 2.0];
    let space = Space::new(&w);
    let u = make(|o| unsafe { oce_utility_two_slope(-0.3, -4.0, o) });
    let rho = value(&space, &u, &x).value;
    let (mut lo, mut hi, mut nonempty) = ([0.0; 3], [0.0; 3], false);
    let status = unsafe {
        oce_subdiff(space.0, u.0, x.as_ptr(), 3, lo.as_mut_ptr(), hi.as_mut_ptr(), &mut nonempty)
    };
    assert_eq!(status, OceStatus::Ok);
    assert!(nonempty);
    // Walk each interval from its lower end until the mean reaches -1.
    let mut member = lo;
    let mut mean: f64 = w.iter().zip(&member).map(|(p, v)| p * v).sum();
    for i in 0..3 {
        let room = (hi[i] - member[i]) * w[i];
        let take = room.min(-1.0 - mean).max(0.0);
        member[i] += take / w[i];
        mean += take;
    }
    assert!((mean + 1.0).abs() <= 1e-12);
    let mut conj = 0.0;
    assert_eq!(
        unsafe { oce_conjugate(space.0, u.0, member.as_ptr(), 3, &mut conj) },
        OceStatus::Ok
    );
    let pairing: f64 = (0..3).map(|i| w[i] * member[i] * x[i]).sum();
    assert!((rho + conj - pairing).abs() <= 1e-9, "{rho} {conj} {pairing}");

    let off = [0.0, 0.0, 0.0];
    assert_eq!(unsafe { oce_conjugate(space.0, u.0, off.as_ptr(), 3, &mut conj) }, OceStatus::Ok);
    assert_eq!(conj, f64::INFINITY);
}

#[test]
fn hull_matches_the_engine() {
    let w = [0.1, 0.15, 0.2, 0.25, 0.2, 0.1];
    let x = [-2.5, -0.75, 0.4, 1.2, 2.0, 3.5];
    let pi = [0.8, 0.9, 1.0, 1.0, 1.1, 1.3];
    let space = Space::new(&w);
    let opts = OceHullOptions { restarts: 4, seed: 7 };
    let cases = [
        (OCE_DESC_LP_DEVIATION, 2.0, 0.5, OCE_MODE_MONOTONE, HullMode::Monotone),
        (OCE_DESC_LP_SEMI_DEVIATION, 2.0, 2.0, OCE_MODE_COMBINED, HullMode::Combined),
        (OCE_DESC_EXPONENTIAL, 0.0, 0.0, OCE_MODE_INVARIANT, HullMode::Invariant),
    ];
    let ps = ProbSpace::new(w.to_vec()).unwrap();
    let xv = RandomVariable::new(x.to_vec()).unwrap();
    let spec = HullSpec::new(&ps, RandomVariable::new(pi.to_vec()).unwrap()).unwrap();
    let cfg = AscentConfig {
        restarts: 4,
        seed: 7,
        ..AscentConfig::default()
    };
    for (kind, p, c, code, mode) in cases {
        let desc = OceDescriptor { kind, p, c };
        let mut out = OceHull::default();
        let mut xstar = [0.0; 6];
        let status = unsafe {
            oce_hull(space.0, &desc, code, pi.as_ptr(), x.as_ptr(), 6, &opts, &mut out, xstar.as_mut_ptr())
        };
        assert_eq!(status, OceStatus::Ok, "{}", last_error());
        let engine = match kind {
            OCE_DESC_LP_DEVIATION => RiskDescriptor::lp_deviation(p, c).unwrap(),
            OCE_DESC_LP_SEMI_DEVIATION => RiskDescriptor::lp_semi_deviation(p, c).unwrap(),
            _ => RiskDescriptor::Exponential,
        };
        let sol = hull_dual(&ps, &engine, &spec, &xv, mode, &cfg).unwrap();
        assert_eq!(out.primal, sol.primal_value.to_f64());
        assert_eq!(out.dual, sol.dual_value.to_f64());
        assert_eq!(&xstar[..], sol.xstar.values());
        assert!(out.gap.abs() <= 1e-4 * out.primal.abs().max(1.0));
    }
}

#[test]
fn hull_rejects_unknown_codes_and_reports_divergence() {
    let space = Space::new(&[0.5, 0.5]);
    let x = [1.0, -1.0];
    let mut out = OceHull::default();
    let desc = OceDescriptor {
        kind: 99,
        p: 2.0,
        c: 0.5,
    };
    let run = |d: &OceDescriptor, mode: u32, opts: *const OceHullOptions, out: &mut OceHull| unsafe {
        oce_hull(space.0, d, mode, ptr::null(), x.as_ptr(), 2, opts, out, ptr::null_mut())
    };
    assert_eq!(run(&desc, OCE_MODE_MONOTONE, ptr::null(), &mut out), OceStatus::InvalidArgument);
    assert!(last_error().contains("descriptor"));
    let inf_dev = OceDescriptor {
        kind: OCE_DESC_INF_DEVIATION,
        p: f64::INFINITY,
        c: 0.0,
    };
    assert_eq!(run(&inf_dev, 7, ptr::null(), &mut out), OceStatus::InvalidArgument);
    let zero = OceHullOptions { restarts: 0, seed: 0 };
    assert_eq!(run(&inf_dev, OCE_MODE_MONOTONE, &zero, &mut out), OceStatus::InvalidArgument);
    assert_eq!(run(&inf_dev, OCE_MODE_COMBINED, ptr::null(), &mut out), OceStatus::Ok);
    assert_eq!(out.primal, f64::NEG_INFINITY);
    assert_eq!(out.dual, f64::NEG_INFINITY);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(oce_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn catalog_handle(k: usize) -> Util {
    match k {
        0 => make(|o| unsafe { oce_utility_two_slope(0.0, -2.0, o) }),
        1 => make(|o| unsafe { oce_utility_exponential(o) }),
        2 => make(|o| unsafe { oce_utility_worst_case(o) }),
        3 => make(|o| unsafe { oce_utility_cvar(0.25, o) }),
        _ => {
            let b = [-1.0, 0.0, 2.0];
            let s = [-3.0, -1.5, -0.5, 0.0];
            make(|o| unsafe { oce_utility_piecewise_linear(b.as_ptr(), 3, s.as_ptr(), 4, o) })
        }
    }
}

fn catalog_engine(k: usize) -> Utility {
    match k {
        0 => Utility::two_slope(0.0, -2.0).unwrap(),
        1 => Utility::Exponential,
        2 => Utility::IndicatorNonneg,
        3 => Utility::cvar(0.25).unwrap(),
        _ => Utility::piecewise_linear(vec![-1.0, 0.0, 2.0], vec![-3.0, -1.5, -0.5, 0.0]).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn value_is_the_engine_value(
        raw in prop::collection::vec(0.05f64..1.0, 1..8),
        xs in prop::collection::vec(-5.0f64..5.0, 8),
        k in 0usize..5,
    ) {
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let Ok(ps) = ProbSpace::new(w.clone()) else { return Ok(()); };
        let x = &xs[..w.len()];
        let space = Space::new(&w);
        let got = value(&space, &catalog_handle(k), x);
        let want = oce::oce_value(&ps, &catalog_engine(k), &RandomVariable::new(x.to_vec()).unwrap()).unwrap();
        prop_assert_eq!(got.value, want.value.to_f64());
        prop_assert_eq!(got.lambda_bar, want.lambda_bar);
        prop_assert_eq!(got.attained, want.attained);
    }
}
