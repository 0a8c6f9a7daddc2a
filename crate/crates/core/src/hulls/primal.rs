//! Primal evaluation of the hulls as small convex programs.
//!
//! Monotone and combined hulls run the ellipsoid method over `(z, a)` with
//! cuts for `z >= 0` and for the logarithmic domain. The invariant hull is a
//! scalar problem in `a`.

use super::descriptor::RiskDescriptor;
use super::{positivity_interval, HullMode, HullSpec};
use crate::error::Result;
use crate::ext::{ExtReal, Interval};
use crate::prob_space::{ProbSpace, RandomVariable};
use crate::solver::{minimize_convex, minimize_scalar_convex, EllipsoidConfig, OracleAnswer, ScalarProblem, ScalarStatus};

/// Bracket width of the scalar search in `a`, relative to the payoff scale.
const SCALAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolution {
    pub value: ExtReal,
    /// Cone component `z >= 0` of the best point (zeros without the cone).
    pub z: Vec<f64>,
    /// Numeraire amount of the best point (0 without the numeraire).
    pub a: f64,
    /// Certified lower bound on the hull value; `-inf` when unavailable.
    pub lower_bound: f64,
    /// True when the solver confirmed the best point is a minimizer.
    pub certified: bool,
    pub iterations: usize,
}

impl PrimalSolution {
    fn constant(n: usize, value: ExtReal) -> Self {
        PrimalSolution {
            value,
            z: vec![0.0; n],
            a: 0.0,
            lower_bound: value.to_f64(),
            certified: true,
            iterations: 0,
        }
    }
}

fn payoff_scale(x: &[f64]) -> f64 {
    x.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

/// Starting amount of numeraire: inside the logarithmic domain when needed.
fn start_amount(desc: &RiskDescriptor, x: &[f64], pi: &[f64], scale: f64) -> f64 {
    if desc.has_full_domain() {
        return 0.0;
    }
    let (lo, hi) = positivity_interval(x, pi);
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + scale,
        (false, true) => hi - scale,
        (false, false) => 0.0,
    }
}

/// Evaluates a hull in the given mode. Without the numeraire `spec` is unused.
pub fn hull_primal(
    space: &ProbSpace,
    desc: &RiskDescriptor,
    spec: &HullSpec,
    x: &RandomVariable,
    mode: HullMode,
) -> Result<PrimalSolution> {
    desc.validate()?;
    space.check(x)?;
    if mode.has_numeraire() {
        space.check(spec.numeraire())?;
    }
    let n = space.len();
    if !super::slater_check_mode(space, desc, spec, x, mode)? {
        // Only the logarithmic risk has a restricted domain, and it is open:
        // without a Slater point no feasible point exists.
        return Ok(PrimalSolution::constant(n, ExtReal::PosInf));
    }
    match mode {
        HullMode::Invariant => invariant_scalar(space, desc, spec, x),
        HullMode::Monotone | HullMode::Combined => cone_ellipsoid(space, desc, spec, x, mode),
    }
}

fn invariant_scalar(space: &ProbSpace, desc: &RiskDescriptor, spec: &HullSpec, x: &RandomVariable) -> Result<PrimalSolution> {
    let w = space.weights();
    let xv = x.values();
    let pi = spec.numeraire().values();
    let n = xv.len();
    let scale = payoff_scale(xv) / pi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let shifted = |a: f64| -> Vec<f64> { xv.iter().zip(pi).map(|(v, p)| v - a * p).collect() };
    let objective = |a: f64| -> ExtReal { desc.eval_slice(w, &shifted(a)) + (-a) };
    let subgradient = |a: f64| -> Interval {
        match desc.subgradient_slice(w, &shifted(a)) {
            Some(g) => {
                let d: f64 = w.iter().zip(g.iter().zip(pi)).map(|(p, (gi, pii))| p * gi * pii).sum();
                Interval::point(-d - 1.0)
            }
            None => Interval::empty(),
        }
    };
    let domain = if desc.has_full_domain() {
        Interval::real_line()
    } else {
        let (lo, hi) = positivity_interval(xv, pi);
        Interval::new(lo, hi)
    };
    let prob = ScalarProblem {
        objective: &objective,
        subgradient: &subgradient,
        domain,
        start: start_amount(desc, xv, pi, scale),
        candidates: Vec::new(),
        scale,
    };
    let m = minimize_scalar_convex(&prob, SCALAR_TOL * scale)?;
    let (value, certified) = match m.status {
        ScalarStatus::Attained => (m.value, true),
        ScalarStatus::Divergent => (ExtReal::NegInf, true),
        ScalarStatus::NotAttained => (m.value, false),
    };
    Ok(PrimalSolution {
        value,
        z: vec![0.0; n],
        a: m.argmin,
        lower_bound: if value.is_neg_inf() { f64::NEG_INFINITY } else { value.to_f64() },
        certified,
        iterations: m.iterations,
    })
}

fn cone_ellipsoid(
    space: &ProbSpace,
    desc: &RiskDescriptor,
    spec: &HullSpec,
    x: &RandomVariable,
    mode: HullMode,
) -> Result<PrimalSolution> {
    let w = space.weights();
    let xv = x.values();
    let n = xv.len();
    let with_a = mode.has_numeraire();
    let pi: Vec<f64> = if with_a {
        spec.numeraire().values().to_vec()
    } else {
        vec![0.0; n]
    };
    let m = n + usize::from(with_a);
    // For a cash-invariant descriptor and a constant numeraire `k` the
    // objective is `f(X - z) + a (k - 1)`. Evaluating it in that form keeps
    // large amounts `a` from cancelling against the payoff.
    let constant_pi = match pi.first() {
        Some(&k) if with_a && desc.is_cash_invariant() && pi.iter().all(|v| *v == k) => Some(k),
        _ => None,
    };
    let oracle = |v: &[f64]| -> OracleAnswer {
        let (z, a) = (&v[..n], if with_a { v[n] } else { 0.0 });
        if let Some(i) = (0..n).filter(|&i| z[i] < 0.0).min_by(|&i, &j| z[i].total_cmp(&z[j])) {
            let mut normal = vec![0.0; m];
            normal[i] = -1.0;
            return OracleAnswer::Infeasible {
                violation: -z[i],
                normal,
            };
        }
        if let Some(k) = constant_pi {
            let y: Vec<f64> = (0..n).map(|i| xv[i] - z[i]).collect();
            if let (ExtReal::Finite(f), Some(g)) = (desc.eval_slice(w, &y), desc.subgradient_slice(w, &y)) {
                let mut sub: Vec<f64> = (0..n).map(|i| -w[i] * g[i]).collect();
                sub.push(k - 1.0);
                return OracleAnswer::Feasible {
                    value: f + a * (k - 1.0),
                    subgradient: sub,
                };
            }
        }
        let y: Vec<f64> = (0..n).map(|i| xv[i] - a * pi[i] - z[i]).collect();
        match (desc.eval_slice(w, &y), desc.subgradient_slice(w, &y)) {
            (ExtReal::Finite(f), Some(g)) => {
                let mut sub: Vec<f64> = (0..n).map(|i| -w[i] * g[i]).collect();
                if with_a {
                    sub.push(-(0..n).map(|i| w[i] * g[i] * pi[i]).sum::<f64>() - 1.0);
                }
                OracleAnswer::Feasible {
                    value: f - a,
                    subgradient: sub,
                }
            }
            _ => {
                // Logarithmic domain: cut on the smallest atom of y.
                let i = (0..n).min_by(|&i, &j| y[i].total_cmp(&y[j])).expect("nonempty");
                let mut normal = vec![0.0; m];
                normal[i] = 1.0;
                if with_a {
                    normal[n] = pi[i];
                }
                OracleAnswer::Infeasible {
                    violation: (-y[i]).max(0.0),
                    normal,
                }
            }
        }
    };
    let scale = payoff_scale(xv);
    let mut center = vec![0.0; m];
    if with_a {
        center[n] = start_amount(desc, xv, &pi, scale);
    }
    let cfg = EllipsoidConfig {
        radius: 4.0 * scale,
        ..EllipsoidConfig::default()
    };
    let r = minimize_convex(&oracle, &center, &cfg)?;
    Ok(PrimalSolution {
        value: r.value,
        z: r.x[..n].to_vec(),
        a: if with_a { r.x[n] } else { 0.0 },
        lower_bound: r.lower_bound,
        certified: r.certified,
        iterations: r.iterations,
    })
}

/// `inf_{z >= 0} f(X - z)`.
pub fn monotone_hull_primal(space: &ProbSpace, desc: &RiskDescriptor, x: &RandomVariable) -> Result<ExtReal> {
    let spec = HullSpec::constant(space, 1.0)?;
    Ok(hull_primal(space, desc, &spec, x, HullMode::Monotone)?.value)
}

/// `inf_a f(X - a Pi) - a`.
pub fn invariant_hull_primal(space: &ProbSpace, desc: &RiskDescriptor, spec: &HullSpec, x: &RandomVariable) -> Result<ExtReal> {
    Ok(hull_primal(space, desc, spec, x, HullMode::Invariant)?.value)
}

/// `inf { f(y) - a : y + a Pi <= X }`.
pub fn combined_hull_primal(space: &ProbSpace, desc: &RiskDescriptor, spec: &HullSpec, x: &RandomVariable) -> Result<ExtReal> {
    Ok(hull_primal(space, desc, spec, x, HullMode::Combined)?.value)
}
