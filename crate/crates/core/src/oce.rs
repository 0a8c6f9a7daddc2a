//! Optimized certainty equivalent risk measures.
//!
//! For a normalized utility `v` the risk of `X` is
//! `rho_v(X) = inf_l { l + E v(X + l) }`. Its conjugate is `E v*(X*)` on the
//! hyperplane `E(X*) = -1`, and its subdifferential at `X` is the set of `X*`
//! with `X*_i` in `dv(X_i + l*)` for a minimizer `l*` and `E(X*) = -1`.

use crate::error::{Result, RiskError};
use crate::ext::{ExtReal, Interval};
use crate::prob_space::{check_level, ProbSpace, RandomVariable};
use crate::solver::{minimize_scalar_convex, ScalarProblem, ScalarStatus};
use crate::utility::Utility;

/// Absolute tolerance on the constraint `E(X*) = -1`.
pub const MEAN_TOL: f64 = 1e-9;
/// Absolute tolerance for subdifferential membership of each atom.
pub const MEMBER_TOL: f64 = 1e-9;
/// Bracket width of the scalar minimization, relative to the payoff scale.
pub const LAMBDA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OceResult {
    pub value: ExtReal,
    /// A minimizer of the scalar objective (the midpoint of the argmin set when it is an interval).
    pub lambda_bar: f64,
    pub attained: bool,
    pub minimizer_interval: Interval,
}

/// Subdifferential of `rho_v` at `X`: a box of per-atom intervals cut by
/// the hyperplane `E(X*) = target`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdiffBox {
    intervals: Vec<Interval>,
    lambda_bar: f64,
    target: f64,
}

impl SubdiffBox {
    pub fn new(intervals: Vec<Interval>, lambda_bar: f64) -> Self {
        SubdiffBox {
            intervals,
            lambda_bar,
            target: -1.0,
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    /// Range of `E(X*)` over the box.
    pub fn mean_range(&self, space: &ProbSpace) -> Interval {
        space
            .weights()
            .iter()
            .zip(&self.intervals)
            .fold(Interval::point(0.0), |acc, (p, iv)| acc.add(&iv.scale(*p)))
    }

    pub fn is_nonempty(&self, space: &ProbSpace) -> bool {
        self.intervals.len() == space.len()
            && self.intervals.iter().all(|iv| !iv.is_empty())
            && self.mean_range(space).contains_tol(self.target, MEAN_TOL)
    }

    pub fn contains(&self, space: &ProbSpace, xstar: &RandomVariable) -> Result<bool> {
        space.check(xstar)?;
        if self.intervals.len() != space.len() {
            return Err(RiskError::DimensionMismatch {
                expected: space.len(),
                got: self.intervals.len(),
            });
        }
        let inside = self
            .intervals
            .iter()
            .zip(xstar.values())
            .all(|(iv, x)| iv.contains_tol(*x, MEMBER_TOL));
        Ok(inside && (space.expectation(xstar)? - self.target).abs() <= MEAN_TOL)
    }

    /// A member of the box: `clamp(mu)` per atom with `mu` set so that the
    /// mean hits the target.
    pub fn feasible_point(&self, space: &ProbSpace) -> Option<RandomVariable> {
        if !self.is_nonempty(space) {
            return None;
        }
        let w = space.weights();
        let at = |mu: f64| -> Vec<f64> { self.intervals.iter().map(|iv| iv.clamp(mu)).collect() };
        let mean = |mu: f64| -> f64 { w.iter().zip(at(mu)).map(|(p, x)| p * x).sum() };
        let mut lo = -1.0;
        let mut hi = 1.0;
        while mean(lo) > self.target && lo > -1e300 {
            lo *= 2.0;
        }
        while mean(hi) < self.target && hi < 1e300 {
            hi *= 2.0;
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mean(mid) < self.target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = at(0.5 * (lo + hi));
        // Spread the remaining mean error over atoms with slack.
        let err = self.target - w.iter().zip(&x).map(|(p, v)| p * v).sum::<f64>();
        let free: f64 = w
            .iter()
            .zip(&self.intervals)
            .zip(&x)
            .filter(|((_, iv), v)| iv.contains(**v + err))
            .map(|((p, _), _)| p)
            .sum();
        if free > 0.0 {
            for (iv, v) in self.intervals.iter().zip(x.iter_mut()) {
                if iv.contains(*v + err) {
                    *v = iv.clamp(*v + err / free);
                }
            }
        }
        RandomVariable::new(x).ok()
    }
}

fn check_normalized(v: &Utility) -> Result<()> {
    if v.check_normalization() {
        Ok(())
    } else {
        Err(RiskError::NotNormalized)
    }
}

fn scale_of(x: &RandomVariable) -> f64 {
    x.values().iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

/// The scalar objective `l + E v(X + l)`.
pub fn objective(space: &ProbSpace, v: &Utility, x: &RandomVariable, lambda: f64) -> ExtReal {
    space
        .weights()
        .iter()
        .zip(x.values())
        .fold(ExtReal::Finite(lambda), |acc, (p, xi)| acc + v.eval(xi + lambda) * *p)
}

fn objective_subgradient(space: &ProbSpace, v: &Utility, x: &RandomVariable, lambda: f64) -> Interval {
    space
        .weights()
        .iter()
        .zip(x.values())
        .fold(Interval::point(1.0), |acc, (p, xi)| acc.add(&v.subdiff(xi + lambda).scale(*p)))
}

/// `rho_v(X)` with a minimizing `lambda`.
pub fn oce_value(space: &ProbSpace, v: &Utility, x: &RandomVariable) -> Result<OceResult> {
    check_normalized(v)?;
    space.check(x)?;
    let scale = scale_of(x);
    let dom = v.domain();
    let domain = Interval::new(dom.lo() - x.min(), f64::INFINITY);
    let candidates: Vec<f64> = v
        .kinks()
        .iter()
        .flat_map(|k| x.values().iter().map(move |xi| k - xi))
        .collect();
    let obj = |l: f64| objective(space, v, x, l);
    let sub = |l: f64| objective_subgradient(space, v, x, l);
    let prob = ScalarProblem {
        objective: &obj,
        subgradient: &sub,
        domain,
        start: -space.expectation(x)?,
        candidates,
        scale,
    };
    let m = minimize_scalar_convex(&prob, LAMBDA_TOL * scale)?;
    match m.status {
        ScalarStatus::Attained => Ok(OceResult {
            value: m.value,
            lambda_bar: m.argmin,
            attained: true,
            minimizer_interval: m.flat_bracket,
        }),
        ScalarStatus::NotAttained => Ok(OceResult {
            value: m.value,
            lambda_bar: m.argmin,
            attained: false,
            minimizer_interval: Interval::empty(),
        }),
        ScalarStatus::Divergent => Err(RiskError::NonConvergence(
            "risk objective diverged although it is bounded below by -E(X)".into(),
        )),
    }
}

/// `rho_v*(X*)`: `E v*(X*)` if `E(X*) = -1` (within [`MEAN_TOL`]), `+inf` otherwise.
pub fn oce_conjugate(space: &ProbSpace, v: &Utility, xstar: &RandomVariable) -> Result<ExtReal> {
    check_normalized(v)?;
    if (space.expectation(xstar)? + 1.0).abs() > MEAN_TOL {
        return Ok(ExtReal::PosInf);
    }
    Ok(space
        .weights()
        .iter()
        .zip(xstar.values())
        .fold(ExtReal::ZERO, |acc, (p, s)| acc + v.conjugate(*s) * *p))
}

/// Moves `t` onto a kink it misses only by rounding in `x + lambda`.
fn snap_argument(t: f64, kinks: &[f64], magnitude: f64) -> f64 {
    let eps = 8.0 * f64::EPSILON * magnitude.max(1.0);
    kinks.iter().copied().find(|k| (t - k).abs() <= eps).unwrap_or(t)
}

fn box_at(v: &Utility, x: &RandomVariable, lambda: f64) -> SubdiffBox {
    let kinks = v.kinks();
    let intervals = x
        .values()
        .iter()
        .map(|xi| {
            let t = snap_argument(xi + lambda, &kinks, xi.abs().max(lambda.abs()));
            v.subdiff(t)
        })
        .collect();
    SubdiffBox::new(intervals, lambda)
}

/// Subdifferential of `rho_v` at `X`; requires the attainment condition.
pub fn oce_subdiff(space: &ProbSpace, v: &Utility, x: &RandomVariable) -> Result<SubdiffBox> {
    if !v.check_attainment_condition() {
        return Err(RiskError::AttainmentConditionFails);
    }
    let r = oce_value(space, v, x)?;
    Ok(box_at(v, x, r.lambda_bar))
}

/// Same box evaluated at a caller-supplied minimizer.
pub fn oce_subdiff_at(space: &ProbSpace, v: &Utility, x: &RandomVariable, lambda: f64) -> Result<SubdiffBox> {
    check_normalized(v)?;
    space.check(x)?;
    Ok(box_at(v, x, lambda))
}

/// Conditional value-at-risk at level `beta`.
///
/// Solved as an OCE with the two-slope utility `(0, -1/beta)`; the value is
/// then compared with the objective at `VaR_beta(X)`, where the infimum is
/// known to be attained.
pub fn cvar(space: &ProbSpace, x: &RandomVariable, beta: f64) -> Result<OceResult> {
    check_level(beta)?;
    let v = Utility::cvar(beta)?;
    let mut r = oce_value(space, &v, x)?;
    let var = space.var_beta(x, beta)?;
    let at_var = objective(space, &v, x, var);
    let (solved, at) = (r.value.to_f64(), at_var.to_f64());
    if (solved - at).abs() > 1e-9 * scale_of(x) {
        return Err(RiskError::NonConvergence(format!(
            "CVaR objective at VaR is {at}, solver minimum is {solved}"
        )));
    }
    if at < solved {
        r.value = at_var;
        r.lambda_bar = var;
    }
    Ok(r)
}

/// Subdifferential of CVaR: `-1/beta` strictly below `-VaR`, `[-1/beta, 0]`
/// at `-VaR`, `0` above, with `E(X*) = -1`.
pub fn cvar_subdiff(space: &ProbSpace, x: &RandomVariable, beta: f64) -> Result<SubdiffBox> {
    check_level(beta)?;
    let var = space.var_beta(x, beta)?;
    let tail = -1.0 / beta;
    let intervals = x
        .values()
        .iter()
        .map(|xi| {
            if *xi < -var {
                Interval::point(tail)
            } else if *xi == -var {
                Interval::new(tail, 0.0)
            } else {
                Interval::point(0.0)
            }
        })
        .collect();
    Ok(SubdiffBox::new(intervals, var))
}

/// Entropic risk `ln E exp(-X)`, evaluated in shifted log-sum-exp form.
pub fn entropic(space: &ProbSpace, x: &RandomVariable) -> Result<OceResult> {
    space.check(x)?;
    let shift = -x.min();
    let s: f64 = space
        .weights()
        .iter()
        .zip(x.values())
        .map(|(p, xi)| p * (-xi - shift).exp())
        .sum();
    let value = shift + s.ln();
    Ok(OceResult {
        value: ExtReal::Finite(value),
        lambda_bar: value,
        attained: true,
        minimizer_interval: Interval::point(value),
    })
}

/// Gradient of the entropic risk: `-exp(-X) / E exp(-X)`.
pub fn entropic_gradient(space: &ProbSpace, x: &RandomVariable) -> Result<RandomVariable> {
    let value = entropic(space, x)?.lambda_bar;
    RandomVariable::new(x.values().iter().map(|xi| -(-xi - value).exp()).collect())
}

/// Worst-case risk `-min X`.
pub fn worst_case(space: &ProbSpace, x: &RandomVariable) -> Result<OceResult> {
    let value = -space.ess_inf(x)?;
    Ok(OceResult {
        value: ExtReal::Finite(value),
        lambda_bar: value,
        attained: true,
        minimizer_interval: Interval::point(value),
    })
}

/// Atoms attaining the minimum get `(-inf, 0]`, the others `{0}`. Always
/// nonempty on a finite space.
pub fn worst_case_subdiff(space: &ProbSpace, x: &RandomVariable) -> Result<SubdiffBox> {
    let min = space.ess_inf(x)?;
    let intervals = x
        .values()
        .iter()
        .map(|xi| {
            if *xi == min {
                Interval::new(f64::NEG_INFINITY, 0.0)
            } else {
                Interval::point(0.0)
            }
        })
        .collect();
    Ok(SubdiffBox::new(intervals, -min))
}
