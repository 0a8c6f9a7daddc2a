//! Convex nonincreasing utility functions with closed-form conjugates.
//!
//! A utility `v` is normalized when `v(0) = 0` and `-1 ∈ ∂v(0)`. Every
//! variant here is lower semicontinuous and has an interval-valued
//! subdifferential, so all calculus is exact.

use crate::error::{Result, RiskError};
use crate::ext::{ExtReal, Interval};

/// A utility function from the supported catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum Utility {
    /// `gamma2 * t` for `t <= 0`, `gamma1 * t` for `t > 0`.
    TwoSlope { gamma1: f64, gamma2: f64 },
    /// `exp(-t) - 1`.
    Exponential,
    /// Indicator of `[0, +inf)`.
    IndicatorNonneg,
    PiecewiseLinear(PiecewiseLinear),
}

impl Utility {
    /// Two-slope utility; requires `gamma2 < -1 < gamma1 <= 0`.
    pub fn two_slope(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1.is_finite() && gamma2.is_finite()) {
            return Err(RiskError::param("gamma", "slopes must be finite"));
        }
        if !(gamma2 < -1.0 && -1.0 < gamma1 && gamma1 <= 0.0) {
            return Err(RiskError::param(
                "gamma",
                format!("need gamma2 < -1 < gamma1 <= 0, got gamma1 = {gamma1}, gamma2 = {gamma2}"),
            ));
        }
        Ok(Utility::TwoSlope { gamma1, gamma2 })
    }

    /// One representative of each variant, including a CVaR utility and a
    /// piecewise-linear utility with a domain bounded on the left.
    pub fn catalog() -> Vec<Utility> {
        vec![
            Utility::two_slope(0.0, -2.0).expect("valid"),
            Utility::two_slope(-0.3, -4.0).expect("valid"),
            Utility::Exponential,
            Utility::IndicatorNonneg,
            Utility::piecewise_linear(vec![-1.0, 0.0, 2.0], vec![-3.0, -1.5, -0.5, 0.0]).expect("valid"),
            Utility::piecewise_linear(vec![-0.5, 0.5], vec![f64::NEG_INFINITY, -1.0, -0.2]).expect("valid"),
        ]
    }

    /// The utility generating CVaR at level `beta`.
    pub fn cvar(beta: f64) -> Result<Self> {
        crate::prob_space::check_level(beta)?;
        Utility::two_slope(0.0, -1.0 / beta)
    }

    pub fn piecewise_linear(breaks: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        Ok(Utility::PiecewiseLinear(PiecewiseLinear::new(breaks, slopes)?))
    }

    pub fn eval(&self, t: f64) -> ExtReal {
        match self {
            Utility::TwoSlope { gamma1, gamma2 } => {
                ExtReal::Finite(if t <= 0.0 { gamma2 * t } else { gamma1 * t })
            }
            Utility::Exponential => ExtReal::from_f64((-t).exp() - 1.0),
            Utility::IndicatorNonneg => {
                if t >= 0.0 {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            Utility::PiecewiseLinear(p) => p.eval(t),
        }
    }

    pub fn conjugate(&self, s: f64) -> ExtReal {
        match self {
            Utility::TwoSlope { gamma1, gamma2 } => {
                if *gamma2 <= s && s <= *gamma1 {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            Utility::Exponential => {
                if s > 0.0 {
                    ExtReal::PosInf
                } else if s == 0.0 {
                    ExtReal::Finite(1.0)
                } else {
                    ExtReal::Finite(-s * (-s).ln() + s + 1.0)
                }
            }
            Utility::IndicatorNonneg => {
                if s <= 0.0 {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            Utility::PiecewiseLinear(p) => p.conjugate(s),
        }
    }

    pub fn subdiff(&self, t: f64) -> Interval {
        match self {
            Utility::TwoSlope { gamma1, gamma2 } => {
                if t < 0.0 {
                    Interval::point(*gamma2)
                } else if t == 0.0 {
                    Interval::new(*gamma2, *gamma1)
                } else {
                    Interval::point(*gamma1)
                }
            }
            Utility::Exponential => Interval::point(-(-t).exp()),
            Utility::IndicatorNonneg => {
                if t < 0.0 {
                    Interval::empty()
                } else if t == 0.0 {
                    Interval::new(f64::NEG_INFINITY, 0.0)
                } else {
                    Interval::point(0.0)
                }
            }
            Utility::PiecewiseLinear(p) => p.subdiff(t),
        }
    }

    /// Recession function `sup_{t>0} (v(t d) - v(0)) / t`.
    pub fn recession(&self, d: f64) -> ExtReal {
        if d == 0.0 {
            return ExtReal::ZERO;
        }
        match self {
            Utility::TwoSlope { gamma1, gamma2 } => {
                ExtReal::Finite(if d < 0.0 { gamma2 * d } else { gamma1 * d })
            }
            Utility::Exponential | Utility::IndicatorNonneg => {
                if d > 0.0 {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            Utility::PiecewiseLinear(p) => {
                let slope = if d < 0.0 { p.slopes[0] } else { *p.slopes.last().unwrap() };
                ExtReal::from_f64(slope * d)
            }
        }
    }

    /// Effective domain, always of the form `[lo, +inf)` (with `lo` possibly `-inf`).
    pub fn domain(&self) -> Interval {
        match self {
            Utility::IndicatorNonneg => Interval::new(0.0, f64::INFINITY),
            Utility::PiecewiseLinear(p) if p.slopes[0] == f64::NEG_INFINITY => {
                Interval::new(p.breaks[0], f64::INFINITY)
            }
            _ => Interval::real_line(),
        }
    }

    /// Points where `v` is not differentiable.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Utility::TwoSlope { .. } | Utility::IndicatorNonneg => vec![0.0],
            Utility::Exponential => Vec::new(),
            Utility::PiecewiseLinear(p) => p.breaks.clone(),
        }
    }

    /// Checks `v(0) = 0` with `-1 ∈ ∂v(0)`, and cross-checks the equivalent
    /// form `v(t) + t >= 0` on a grid that includes every kink.
    pub fn check_normalization(&self) -> bool {
        let subgradient_form = self.eval(0.0) == ExtReal::ZERO && self.subdiff(0.0).contains(-1.0);
        let grid_form = self.eval(0.0) == ExtReal::ZERO && self.normalization_grid().all(|t| {
            match self.eval(t) {
                ExtReal::Finite(v) => v + t >= -1e-12 * (1.0 + t.abs()),
                ExtReal::PosInf => true,
                ExtReal::NegInf => false,
            }
        });
        debug_assert_eq!(
            subgradient_form, grid_form,
            "normalization forms disagree for {self:?}"
        );
        subgradient_form && grid_form
    }

    fn normalization_grid(&self) -> impl Iterator<Item = f64> + '_ {
        let kinks = self.kinks();
        let far = kinks.iter().fold(1.0_f64, |m, k| m.max(k.abs())) * 1e3;
        (-400..=400)
            .map(move |i| far * f64::from(i) / 400.0)
            .chain((-200..=200).map(|i| f64::from(i) / 20.0))
            .chain(kinks.into_iter().flat_map(|k| [k - 1e-3, k, k + 1e-3]))
    }

    /// Closed-form test of `{d : v_inf(d) = -d} = {0}`.
    pub fn check_attainment_condition(&self) -> bool {
        match self {
            Utility::TwoSlope { gamma1, gamma2 } => *gamma1 != -1.0 && *gamma2 != -1.0,
            Utility::Exponential | Utility::IndicatorNonneg => true,
            // Recession is s_last * d on d > 0 and s_first * d on d < 0.
            Utility::PiecewiseLinear(p) => p.slopes[0] != -1.0 && *p.slopes.last().unwrap() != -1.0,
        }
    }
}

/// Convex nonincreasing piecewise-linear function anchored at `v(0) = 0`.
///
/// `slopes[k]` applies on `(breaks[k-1], breaks[k])` with `breaks[-1] = -inf`
/// and `breaks[len] = +inf`. A first slope of `-inf` makes the function
/// `+inf` left of `breaks[0]`, giving a domain bounded on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    breaks: Vec<f64>,
    slopes: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(breaks: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if slopes.len() != breaks.len() + 1 {
            return Err(RiskError::param(
                "slopes",
                format!("expected {} slopes for {} breakpoints", breaks.len() + 1, breaks.len()),
            ));
        }
        if breaks.iter().any(|b| !b.is_finite()) {
            return Err(RiskError::param("breaks", "breakpoints must be finite"));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RiskError::param("breaks", "breakpoints must be strictly increasing"));
        }
        if slopes.iter().any(|s| s.is_nan() || *s == f64::INFINITY) {
            return Err(RiskError::param("slopes", "slopes must be real or -inf"));
        }
        if slopes[1..].iter().any(|s| !s.is_finite()) {
            return Err(RiskError::param("slopes", "only the first slope may be -inf"));
        }
        if slopes.windows(2).any(|w| w[0] > w[1]) {
            return Err(RiskError::param("slopes", "slopes must be nondecreasing (convexity)"));
        }
        if slopes.iter().any(|s| *s > 0.0) {
            return Err(RiskError::param("slopes", "slopes must be <= 0 (nonincreasing)"));
        }
        if slopes[0] == f64::NEG_INFINITY && (breaks.is_empty() || breaks[0] > 0.0) {
            return Err(RiskError::param(
                "breaks",
                "a -inf first slope needs a first breakpoint at or left of 0",
            ));
        }
        Ok(PiecewiseLinear { breaks, slopes })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Integral of the slope function from 0 to `t`.
    pub fn eval(&self, t: f64) -> ExtReal {
        let (a, b, sign) = if t >= 0.0 { (0.0, t, 1.0) } else { (t, 0.0, -1.0) };
        let mut total = 0.0;
        for (k, &s) in self.slopes.iter().enumerate() {
            let left = if k == 0 { f64::NEG_INFINITY } else { self.breaks[k - 1] };
            let right = self.breaks.get(k).copied().unwrap_or(f64::INFINITY);
            let overlap = b.min(right) - a.max(left);
            if overlap > 0.0 {
                if s == f64::NEG_INFINITY {
                    return ExtReal::PosInf;
                }
                total += s * overlap;
            }
        }
        ExtReal::Finite(sign * total)
    }

    pub fn subdiff(&self, t: f64) -> Interval {
        if let Some(j) = self.breaks.iter().position(|&b| b == t) {
            return Interval::new(self.slopes[j], self.slopes[j + 1]);
        }
        let k = self.breaks.partition_point(|&b| b < t);
        let s = self.slopes[k];
        if s == f64::NEG_INFINITY {
            Interval::empty()
        } else {
            Interval::point(s)
        }
    }

    /// `sup_t (s t - v(t))`, finite exactly on `[slopes[0], slopes[last]]`,
    /// where the supremum is attained at a breakpoint (or at 0).
    pub fn conjugate(&self, s: f64) -> ExtReal {
        let first = self.slopes[0];
        let last = *self.slopes.last().unwrap();
        if s < first || s > last {
            return ExtReal::PosInf;
        }
        let best = self
            .breaks
            .iter()
            .copied()
            .chain(std::iter::once(0.0))
            .filter_map(|t| self.eval(t).finite().map(|v| s * t - v))
            .fold(f64::NEG_INFINITY, f64::max);
        ExtReal::Finite(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn values_at_zero_and_examples() {
        for v in Utility::catalog() {
            assert_eq!(v.eval(0.0), ExtReal::ZERO, "{v:?}");
        }
        let v1 = Utility::two_slope(0.0, -2.0).unwrap();
        assert_eq!(v1.eval(-1.0), ExtReal::Finite(2.0));
        assert_eq!(Utility::Exponential.eval(1.0), ExtReal::Finite((-1.0f64).exp() - 1.0));
        assert_eq!(Utility::IndicatorNonneg.eval(-1e-9), ExtReal::PosInf);
    }

    #[test]
    fn conjugate_examples() {
        let v1 = Utility::two_slope(-0.5, -3.0).unwrap();
        assert_eq!(v1.conjugate(-3.0), ExtReal::ZERO);
        assert_eq!(v1.conjugate(-1.0), ExtReal::ZERO);
        assert_eq!(v1.conjugate(-0.5), ExtReal::ZERO);
        assert_eq!(v1.conjugate(-0.4), ExtReal::PosInf);
        assert_eq!(v1.conjugate(-3.1), ExtReal::PosInf);
        assert_eq!(Utility::Exponential.conjugate(-1.0), ExtReal::ZERO);
        assert_eq!(Utility::Exponential.conjugate(0.0), ExtReal::Finite(1.0));
        assert_eq!(Utility::IndicatorNonneg.conjugate(0.5), ExtReal::PosInf);
        assert_eq!(Utility::IndicatorNonneg.conjugate(-7.0), ExtReal::ZERO);
    }

    #[test]
    fn subdiff_examples() {
        let v1 = Utility::two_slope(-0.2, -2.0).unwrap();
        assert_eq!(v1.subdiff(0.0), Interval::new(-2.0, -0.2));
        assert_eq!(v1.subdiff(1.0), Interval::point(-0.2));
        assert_eq!(Utility::Exponential.subdiff(0.0), Interval::point(-1.0));
        assert_eq!(
            Utility::IndicatorNonneg.subdiff(0.0),
            Interval::new(f64::NEG_INFINITY, 0.0)
        );
        assert!(Utility::IndicatorNonneg.subdiff(-1.0).is_empty());
        assert_eq!(Utility::IndicatorNonneg.subdiff(2.0), Interval::point(0.0));
    }

    #[test]
    fn recession_examples() {
        let v1 = Utility::two_slope(-0.2, -2.0).unwrap();
        assert_eq!(v1.recession(3.0), ExtReal::Finite(-0.6000000000000001));
        assert_eq!(v1.recession(-1.0), ExtReal::Finite(2.0));
        assert_eq!(Utility::Exponential.recession(-1.0), ExtReal::PosInf);
        for v in Utility::catalog() {
            assert_eq!(v.recession(0.0), ExtReal::ZERO);
        }
    }

    #[test]
    fn normalization() {
        for v in Utility::catalog() {
            assert!(v.check_normalization(), "{v:?}");
        }
        let flat = Utility::piecewise_linear(vec![0.0], vec![-0.5, -0.5]).unwrap();
        assert!(!flat.check_normalization());
        let steep = Utility::piecewise_linear(vec![], vec![-1.5]).unwrap();
        assert!(!steep.check_normalization());
    }

    #[test]
    fn attainment_condition() {
        for v in Utility::catalog() {
            assert!(v.check_attainment_condition(), "{v:?}");
        }
        let borderline = Utility::piecewise_linear(vec![0.0], vec![-2.0, -1.0]).unwrap();
        assert!(borderline.check_normalization());
        assert!(!borderline.check_attainment_condition());
    }

    #[test]
    fn pwl_validation() {
        assert!(Utility::piecewise_linear(vec![0.0], vec![-1.0]).is_err());
        assert!(Utility::piecewise_linear(vec![1.0, 0.0], vec![-2.0, -1.0, 0.0]).is_err());
        assert!(Utility::piecewise_linear(vec![0.0], vec![-0.5, -2.0]).is_err());
        assert!(Utility::piecewise_linear(vec![0.0], vec![-2.0, 0.5]).is_err());
        assert!(Utility::piecewise_linear(vec![1.0], vec![f64::NEG_INFINITY, -0.5]).is_err());
        assert!(Utility::two_slope(-1.0, -2.0).is_err());
        assert!(Utility::two_slope(0.1, -2.0).is_err());
    }

    #[test]
    fn two_slope_conjugate_matches_grid_sup() {
        // sup over t in [-1e3, 1e3] of t s - v(t), on a grid containing 0.
        let v = Utility::two_slope(-0.25, -3.0).unwrap();
        for k in 1..40 {
            let s = -3.0 + 2.75 * f64::from(k) / 40.0;
            let mut best = f64::NEG_INFINITY;
            for i in -20_000..=20_000 {
                let t = f64::from(i) * 0.05;
                best = best.max(t * s - v.eval(t).to_f64());
            }
            assert!((best - v.conjugate(s).to_f64()).abs() <= 1e-8, "s = {s}");
        }
    }

    fn arb_utility() -> impl Strategy<Value = Utility> {
        prop_oneof![
            (-0.95f64..=0.0, -6.0f64..-1.05).prop_map(|(g1, g2)| Utility::two_slope(g1, g2).unwrap()),
            Just(Utility::Exponential),
            Just(Utility::IndicatorNonneg),
            (
                prop::collection::vec(-3.0f64..3.0, 1..5),
                prop::collection::vec(0.0f64..1.0, 2..6),
                any::<bool>(),
            )
                .prop_filter_map("valid pwl", |(mut breaks, raw, bounded)| {
                    breaks.sort_by(f64::total_cmp);
                    breaks.dedup();
                    if !breaks.contains(&0.0) {
                        breaks.push(0.0);
                        breaks.sort_by(f64::total_cmp);
                    }
                    let zero = breaks.iter().position(|&b| b == 0.0).unwrap();
                    // slopes left of 0 at most -1, right of 0 at least -1
                    let mut slopes = vec![0.0; breaks.len() + 1];
                    let mut acc = -1.0;
                    for k in (0..=zero).rev() {
                        acc -= raw[k % raw.len()];
                        slopes[k] = acc;
                    }
                    let mut acc = -1.0;
                    for (k, slot) in slopes.iter_mut().enumerate().skip(zero + 1) {
                        acc = (acc + raw[k % raw.len()] * 0.3).min(0.0);
                        *slot = acc;
                    }
                    if bounded && breaks[0] <= 0.0 {
                        slopes[0] = f64::NEG_INFINITY;
                    }
                    Utility::piecewise_linear(breaks, slopes).ok()
                }),
        ]
    }

    proptest! {
        #[test]
        fn fenchel_young_scalar(v in arb_utility(), t in -6.0f64..6.0, s in -8.0f64..0.5) {
            let lhs = v.eval(t) + v.conjugate(s);
            if let ExtReal::Finite(total) = lhs {
                prop_assert!(total >= t * s - 1e-10);
                let tight = (total - t * s).abs() <= 1e-10;
                if v.subdiff(t).contains(s) {
                    prop_assert!(tight);
                }
                if tight {
                    // the exponential gap is quadratic in the distance to the gradient
                    prop_assert!(v.subdiff(t).contains_tol(s, 1e-4));
                }
            }
            // subgradients always give equality
            let g = v.subdiff(t);
            if !g.is_empty() {
                let s0 = g.clamp(-1.0);
                let total = (v.eval(t) + v.conjugate(s0)).to_f64();
                prop_assert!((total - t * s0).abs() <= 1e-10 * (1.0 + t.abs() * s0.abs()));
            }
        }

        #[test]
        fn conjugate_is_convex(v in arb_utility(), a in -8.0f64..0.5, b in -8.0f64..0.5, lam in 0.0f64..1.0) {
            let mid = v.conjugate(lam * a + (1.0 - lam) * b);
            let ca = v.conjugate(a);
            let cb = v.conjugate(b);
            if let (ExtReal::Finite(x), ExtReal::Finite(y)) = (ca, cb) {
                prop_assert!(mid.to_f64() <= lam * x + (1.0 - lam) * y + 1e-10);
            }
        }

        #[test]
        fn recession_dominates_minus_d(v in arb_utility(), d in -10.0f64..10.0) {
            prop_assume!(v.check_normalization());
            prop_assert!(v.recession(d) >= ExtReal::Finite(-d - 1e-12));
        }
    }
}
