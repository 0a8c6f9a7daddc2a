//! Scalar convex minimization by subgradient-sign bisection.

use super::DIVERGENCE_LEVEL;
use crate::error::{Result, RiskError};
use crate::ext::{ExtReal, Interval};

const MAX_ITER: usize = 10_000;
/// Subgradient intervals within this distance of zero count as containing it.
const ZERO_TOL: f64 = 1e-12;
/// Half-width beyond which a bracket search gives up, relative to the scale.
const FAR: f64 = 1e15;

/// A convex function of one real variable with its subdifferential.
pub struct ScalarProblem<'a> {
    pub objective: &'a dyn Fn(f64) -> ExtReal,
    pub subgradient: &'a dyn Fn(f64) -> Interval,
    /// Interval known to contain the effective domain.
    pub domain: Interval,
    pub start: f64,
    /// Points where the objective may have a kink; minimizers found within
    /// the final bracket are snapped onto them.
    pub candidates: Vec<f64>,
    /// Typical magnitude of the argument, used for initial steps.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarStatus {
    Attained,
    /// Objective fell below the divergence level: the infimum is `-inf`.
    Divergent,
    /// Objective kept decreasing along an unbounded ray without diverging.
    NotAttained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMinimum {
    pub argmin: f64,
    pub value: ExtReal,
    /// Points certified to be minimizers; degenerate when the minimizer is isolated.
    pub flat_bracket: Interval,
    pub status: ScalarStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    /// Every minimizer lies to the right.
    Below,
    Zero,
    /// Every minimizer lies to the left.
    Above,
}

struct Run<'p, 'a> {
    prob: &'p ScalarProblem<'a>,
    start: f64,
    iterations: usize,
}

impl Run<'_, '_> {
    fn side(&mut self, x: f64) -> Result<Side> {
        self.iterations += 1;
        if self.iterations > MAX_ITER {
            return Err(RiskError::NonConvergence(format!(
                "scalar minimization exceeded {MAX_ITER} iterations"
            )));
        }
        let g = (self.prob.subgradient)(x);
        if g.is_empty() {
            // Outside the domain or at an edge without subgradients.
            return Ok(if x < self.start { Side::Below } else { Side::Above });
        }
        Ok(if g.lo() > ZERO_TOL {
            Side::Above
        } else if g.hi() < -ZERO_TOL {
            Side::Below
        } else {
            Side::Zero
        })
    }

    fn value(&self, x: f64) -> ExtReal {
        (self.prob.objective)(x)
    }

    /// Shrinks `[lo, hi]` around the point where the side changes from `left`.
    fn boundary(&mut self, mut lo: f64, mut hi: f64, tol: f64, left: Side) -> Result<(f64, f64)> {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.side(mid)? == left {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo, hi))
    }

    fn snap(&mut self, x: f64, tol: f64) -> Result<f64> {
        let mut best = x;
        let mut dist = f64::INFINITY;
        let cands: Vec<f64> = self
            .prob
            .candidates
            .iter()
            .copied()
            .filter(|c| (c - x).abs() <= 4.0 * tol && self.prob.domain.contains(*c))
            .collect();
        for c in cands {
            if self.side(c)? == Side::Zero && (c - x).abs() < dist {
                best = c;
                dist = (c - x).abs();
            }
        }
        Ok(best)
    }
}

/// Minimizes a proper convex scalar function to bracket width `tol`.
///
/// Brackets the minimizer by doubling steps away from `start` following the
/// subgradient sign, then bisects. When some point has `0` in its
/// subdifferential, both ends of the flat region are located and the
/// midpoint is returned.
pub fn minimize_scalar_convex(prob: &ScalarProblem<'_>, tol: f64) -> Result<ScalarMinimum> {
    if !(tol > 0.0) {
        return Err(RiskError::param("tol", "tolerance must be positive"));
    }
    if prob.domain.is_empty() {
        return Err(RiskError::EmptyDomain);
    }
    let scale = prob.scale.abs().max(1.0);
    let step0 = scale;
    let far = FAR * scale;
    let dom = prob.domain;
    let x0 = dom.clamp(prob.start);
    let mut run = Run {
        prob,
        start: x0,
        iterations: 0,
    };
    if run.value(x0).is_pos_inf() {
        return Err(RiskError::EmptyDomain);
    }

    let divergent = |x: f64, run: &Run| -> Option<ScalarMinimum> {
        match run.value(x) {
            ExtReal::Finite(v) if v < DIVERGENCE_LEVEL => Some(ScalarMinimum {
                argmin: x,
                value: ExtReal::NegInf,
                flat_bracket: Interval::empty(),
                status: ScalarStatus::Divergent,
                iterations: run.iterations,
            }),
            ExtReal::NegInf => Some(ScalarMinimum {
                argmin: x,
                value: ExtReal::NegInf,
                flat_bracket: Interval::empty(),
                status: ScalarStatus::Divergent,
                iterations: run.iterations,
            }),
            _ => None,
        }
    };
    let not_attained = |x: f64, run: &Run| ScalarMinimum {
        argmin: x,
        value: run.value(x),
        flat_bracket: Interval::empty(),
        status: ScalarStatus::NotAttained,
        iterations: run.iterations,
    };

    // Locate a bracket [a, b] with a Below, b Above, or a Zero point.
    let mut zero: Option<f64> = None;
    let (mut a, mut b) = (x0, x0);
    match run.side(x0)? {
        Side::Zero => zero = Some(x0),
        Side::Below => {
            let mut h = step0;
            loop {
                let x = if x0 + h > dom.hi() { dom.hi() } else { x0 + h };
                if let Some(m) = divergent(x, &run) {
                    return Ok(m);
                }
                match run.side(x)? {
                    Side::Below if x < dom.hi() => a = x,
                    Side::Below => {
                        // Right edge of the domain is the minimizer.
                        zero = Some(x);
                        break;
                    }
                    Side::Zero => {
                        zero = Some(x);
                        break;
                    }
                    Side::Above => {
                        b = x;
                        break;
                    }
                }
                h *= 2.0;
                if h > far {
                    return Ok(not_attained(a, &run));
                }
            }
        }
        Side::Above => {
            let mut h = step0;
            loop {
                let x = if x0 - h < dom.lo() { dom.lo() } else { x0 - h };
                if let Some(m) = divergent(x, &run) {
                    return Ok(m);
                }
                match run.side(x)? {
                    Side::Above if x > dom.lo() => b = x,
                    Side::Above => {
                        zero = Some(x);
                        break;
                    }
                    Side::Zero => {
                        zero = Some(x);
                        break;
                    }
                    Side::Below => {
                        a = x;
                        break;
                    }
                }
                h *= 2.0;
                if h > far {
                    return Ok(not_attained(b, &run));
                }
            }
        }
    }

    if zero.is_none() {
        while b - a > tol {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            match run.side(m)? {
                Side::Below => a = m,
                Side::Above => b = m,
                Side::Zero => {
                    zero = Some(m);
                    break;
                }
            }
        }
    }

    let Some(m) = zero else {
        // Isolated minimizer inside a tiny bracket, typically at a kink.
        let mid = 0.5 * (a + b);
        let mut x = run.snap(mid, (b - a).max(tol))?;
        if x == mid {
            x = [a, mid, b]
                .into_iter()
                .min_by(|p, q| run.value(*p).partial_cmp(&run.value(*q)).unwrap())
                .unwrap();
        }
        return Ok(ScalarMinimum {
            argmin: x,
            value: run.value(x),
            flat_bracket: Interval::point(x),
            status: ScalarStatus::Attained,
            iterations: run.iterations,
        });
    };

    // Walk outward from the zero point to find both ends of the flat region.
    let left = if m <= dom.lo() {
        dom.lo()
    } else {
        let mut h = step0;
        let mut inner = m;
        loop {
            let x = (m - h).max(dom.lo());
            let s = run.side(x)?;
            if s == Side::Zero {
                inner = x;
                if x <= dom.lo() {
                    break dom.lo();
                }
            } else {
                let (_, hi) = run.boundary(x, inner, tol, Side::Below)?;
                break run.snap(hi, tol)?;
            }
            h *= 2.0;
            if h > far {
                break f64::NEG_INFINITY;
            }
        }
    };
    let right = if m >= dom.hi() {
        dom.hi()
    } else {
        let mut h = step0;
        let mut inner = m;
        loop {
            let x = (m + h).min(dom.hi());
            let s = run.side(x)?;
            if s == Side::Zero {
                inner = x;
                if x >= dom.hi() {
                    break dom.hi();
                }
            } else {
                let (lo, _) = run.boundary(inner, x, tol, Side::Zero)?;
                break run.snap(lo, tol)?;
            }
            h *= 2.0;
            if h > far {
                break f64::INFINITY;
            }
        }
    };
    let argmin = match (left.is_finite(), right.is_finite()) {
        (true, true) => 0.5 * (left + right),
        (true, false) => left,
        (false, true) => right,
        (false, false) => m,
    };
    Ok(ScalarMinimum {
        argmin,
        value: run.value(argmin),
        flat_bracket: Interval::new(left, right),
        status: ScalarStatus::Attained,
        iterations: run.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> Interval, cands: Vec<f64>) -> ScalarMinimum {
        let obj = |x: f64| ExtReal::from_f64(f(x));
        let prob = ScalarProblem {
            objective: &obj,
            subgradient: g,
            domain: Interval::real_line(),
            start: 0.0,
            candidates: cands,
            scale: 1.0,
        };
        minimize_scalar_convex(&prob, 1e-12).unwrap()
    }

    #[test]
    fn quadratic() {
        let m = solve(&|x| x * x, &|x| Interval::point(2.0 * x), vec![]);
        assert_eq!(m.argmin, 0.0);
        assert_eq!(m.value, ExtReal::ZERO);
        assert_eq!(m.flat_bracket, Interval::point(0.0));
    }

    #[test]
    fn shifted_quadratic() {
        let m = solve(&|x| (x - 3.7).powi(2), &|x| Interval::point(2.0 * (x - 3.7)), vec![]);
        assert!((m.argmin - 3.7).abs() < 1e-11);
        assert_eq!(m.status, ScalarStatus::Attained);
    }

    #[test]
    fn absolute_value_kink_is_snapped() {
        let g = |x: f64| {
            if x < 2.0 {
                Interval::point(-1.0)
            } else if x > 2.0 {
                Interval::point(1.0)
            } else {
                Interval::new(-1.0, 1.0)
            }
        };
        let m = solve(&|x| (x - 2.0).abs(), &g, vec![2.0]);
        assert_eq!(m.argmin, 2.0);
        assert!(m.flat_bracket.is_degenerate());
    }

    #[test]
    fn flat_region_reported() {
        // max(|x| - 1, 0) is flat on [-1, 1].
        let g = |x: f64| {
            if x < -1.0 {
                Interval::point(-1.0)
            } else if x == -1.0 {
                Interval::new(-1.0, 0.0)
            } else if x < 1.0 {
                Interval::point(0.0)
            } else if x == 1.0 {
                Interval::new(0.0, 1.0)
            } else {
                Interval::point(1.0)
            }
        };
        let m = solve(&|x| (x.abs() - 1.0).max(0.0), &g, vec![-1.0, 1.0]);
        assert_eq!(m.flat_bracket, Interval::new(-1.0, 1.0));
        assert_eq!(m.argmin, 0.0);
    }

    #[test]
    fn divergence_detected() {
        let m = solve(&|x| -x, &|_| Interval::point(-1.0), vec![]);
        assert_eq!(m.status, ScalarStatus::Divergent);
        assert_eq!(m.value, ExtReal::NegInf);
    }

    #[test]
    fn bounded_domain_edge() {
        // x on [1, inf): minimizer at the edge.
        let obj = |x: f64| if x >= 1.0 { ExtReal::Finite(x) } else { ExtReal::PosInf };
        let g = |x: f64| {
            if x > 1.0 {
                Interval::point(1.0)
            } else if x == 1.0 {
                Interval::new(f64::NEG_INFINITY, 1.0)
            } else {
                Interval::empty()
            }
        };
        let prob = ScalarProblem {
            objective: &obj,
            subgradient: &g,
            domain: Interval::new(1.0, f64::INFINITY),
            start: 5.0,
            candidates: vec![],
            scale: 1.0,
        };
        let m = minimize_scalar_convex(&prob, 1e-12).unwrap();
        assert_eq!(m.argmin, 1.0);
        assert_eq!(m.value, ExtReal::Finite(1.0));
    }

    #[test]
    fn empty_domain_rejected() {
        let obj = |_: f64| ExtReal::PosInf;
        let g = |_: f64| Interval::empty();
        let prob = ScalarProblem {
            objective: &obj,
            subgradient: &g,
            domain: Interval::real_line(),
            start: 0.0,
            candidates: vec![],
            scale: 1.0,
        };
        assert_eq!(minimize_scalar_convex(&prob, 1e-9), Err(RiskError::EmptyDomain));
    }
}
