//! Catalog of risk functions whose hulls are computed.

use std::fmt;

use crate::error::{Result, RiskError};
use crate::ext::ExtReal;
use crate::oce::MEAN_TOL;
use crate::prob_space::{ProbSpace, RandomVariable};
use crate::solver::wmean;

/// Relative slack accepted when comparing a witness norm with the unit ball.
pub const WITNESS_TOL: f64 = 1e-9;

/// Risk functions with closed-form values, conjugates and subgradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskDescriptor {
    /// `c ||X - E X||_p - E X`.
    LpDeviation { p: f64, c: f64 },
    /// `c ||(X - E X)_-||_p - E X`.
    LpSemiDeviation { p: f64, c: f64 },
    /// `(c/p) E|X|^p - E X`.
    MeanLp { p: f64, c: f64 },
    /// `(1/c) E (X_-)^p`.
    LpSemiMoment { p: f64, c: f64 },
    /// `E exp(-X) - 1`.
    Exponential,
    /// `-E ln X - 1` for `X > 0`, `+inf` otherwise.
    Logarithmic,
    /// `||X - E X||_p` for `p` in `[1, inf]`, with no mean term.
    InfDeviation { p: f64 },
}

/// How the conjugate is represented in the dual problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum DualForm {
    /// Separable conjugate of the dual variable itself.
    Direct,
    /// Indicator conjugate: `X* = c (Y - E Y) - kappa` for a witness `Y` in
    /// the `q`-ball, nonpositive when `nonpositive` is set.
    Witness { c: f64, kappa: f64, q: f64, nonpositive: bool },
}

fn check_p(p: f64, allow_inf: bool) -> Result<()> {
    let ok = p >= 1.0 && (p.is_finite() || (allow_inf && p == f64::INFINITY));
    if ok {
        Ok(())
    } else if allow_inf {
        Err(RiskError::param("p", format!("{p} is outside [1, inf]")))
    } else {
        Err(RiskError::param("p", format!("{p} must be finite and at least 1")))
    }
}

fn check_c(c: f64, min: f64) -> Result<()> {
    if c.is_finite() && c > min {
        Ok(())
    } else {
        Err(RiskError::param("c", format!("{c} must be finite and greater than {min}")))
    }
}

/// Hölder conjugate exponent.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p == f64::INFINITY {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub(crate) fn lp_norm(w: &[f64], v: &[f64], p: f64) -> f64 {
    if p == f64::INFINITY {
        return v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    }
    if p == 1.0 {
        return w.iter().zip(v).map(|(a, x)| a * x.abs()).sum();
    }
    // Scale by the largest entry so large powers do not overflow.
    let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = w.iter().zip(v).map(|(a, x)| a * (x.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// Element of the unit `q`-ball attaining `<h, v> = ||v||_p` (a subgradient of the norm).
fn norm_subgradient(w: &[f64], v: &[f64], p: f64) -> Vec<f64> {
    let n = lp_norm(w, v, p);
    if n == 0.0 {
        return vec![0.0; v.len()];
    }
    if p == 1.0 {
        return v.iter().map(|x| if *x == 0.0 { 0.0 } else { x.signum() }).collect();
    }
    if p == f64::INFINITY {
        let j = (0..v.len())
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .expect("nonempty");
        let mut h = vec![0.0; v.len()];
        h[j] = v[j].signum() / w[j];
        return h;
    }
    v.iter().map(|x| x.signum() * (x.abs() / n).powf(p - 1.0)).collect()
}

fn centered(w: &[f64], x: &[f64]) -> Vec<f64> {
    let m = wmean(w, x);
    x.iter().map(|v| v - m).collect()
}

impl RiskDescriptor {
    pub fn lp_deviation(p: f64, c: f64) -> Result<Self> {
        let d = RiskDescriptor::LpDeviation { p, c };
        d.validate()?;
        Ok(d)
    }

    pub fn lp_semi_deviation(p: f64, c: f64) -> Result<Self> {
        let d = RiskDescriptor::LpSemiDeviation { p, c };
        d.validate()?;
        Ok(d)
    }

    pub fn mean_lp(p: f64, c: f64) -> Result<Self> {
        let d = RiskDescriptor::MeanLp { p, c };
        d.validate()?;
        Ok(d)
    }

    pub fn lp_semi_moment(p: f64, c: f64) -> Result<Self> {
        let d = RiskDescriptor::LpSemiMoment { p, c };
        d.validate()?;
        Ok(d)
    }

    pub fn inf_deviation(p: f64) -> Result<Self> {
        let d = RiskDescriptor::InfDeviation { p };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RiskDescriptor::LpDeviation { p, c } | RiskDescriptor::MeanLp { p, c } | RiskDescriptor::LpSemiMoment { p, c } => {
                check_p(p, false)?;
                check_c(c, 0.0)
            }
            RiskDescriptor::LpSemiDeviation { p, c } => {
                check_p(p, false)?;
                check_c(c, 1.0)
            }
            RiskDescriptor::InfDeviation { p } => check_p(p, true),
            RiskDescriptor::Exponential | RiskDescriptor::Logarithmic => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RiskDescriptor::LpDeviation { .. } => "lp-deviation",
            RiskDescriptor::LpSemiDeviation { .. } => "lp-semi-deviation",
            RiskDescriptor::MeanLp { .. } => "mean-lp",
            RiskDescriptor::LpSemiMoment { .. } => "lp-semi-moment",
            RiskDescriptor::Exponential => "exponential",
            RiskDescriptor::Logarithmic => "logarithmic",
            RiskDescriptor::InfDeviation { .. } => "inf-deviation",
        }
    }

    /// Nonincreasing with respect to the pointwise order.
    pub fn is_monotone(&self) -> bool {
        matches!(
            self,
            RiskDescriptor::LpSemiMoment { .. } | RiskDescriptor::Exponential | RiskDescriptor::Logarithmic
        )
    }

    /// `f(X + a) = f(X) - a` for constants `a`.
    pub fn is_cash_invariant(&self) -> bool {
        matches!(self, RiskDescriptor::LpDeviation { .. } | RiskDescriptor::LpSemiDeviation { .. })
    }

    pub fn has_full_domain(&self) -> bool {
        !matches!(self, RiskDescriptor::Logarithmic)
    }

    pub(crate) fn dual_form(&self) -> DualForm {
        match *self {
            RiskDescriptor::LpDeviation { p, c } => DualForm::Witness {
                c,
                kappa: 1.0,
                q: conjugate_exponent(p),
                nonpositive: false,
            },
            RiskDescriptor::LpSemiDeviation { p, c } => DualForm::Witness {
                c,
                kappa: 1.0,
                q: conjugate_exponent(p),
                nonpositive: true,
            },
            RiskDescriptor::InfDeviation { p } => DualForm::Witness {
                c: 1.0,
                kappa: 0.0,
                q: conjugate_exponent(p),
                nonpositive: false,
            },
            _ => DualForm::Direct,
        }
    }

    /// Closed interval containing the effective domain of the conjugate per
    /// coordinate, for descriptors with a separable conjugate.
    pub(crate) fn conjugate_bounds(&self) -> (f64, f64) {
        match *self {
            RiskDescriptor::MeanLp { p, c } if p == 1.0 => (-1.0 - c, -1.0 + c),
            RiskDescriptor::MeanLp { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            RiskDescriptor::LpSemiMoment { p, c } if p == 1.0 => (-1.0 / c, 0.0),
            RiskDescriptor::LpSemiMoment { .. } | RiskDescriptor::Exponential => (f64::NEG_INFINITY, 0.0),
            RiskDescriptor::Logarithmic => (f64::NEG_INFINITY, 0.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn eval(&self, space: &ProbSpace, x: &RandomVariable) -> Result<ExtReal> {
        space.check(x)?;
        Ok(self.eval_slice(space.weights(), x.values()))
    }

    pub(crate) fn eval_slice(&self, w: &[f64], x: &[f64]) -> ExtReal {
        let mean = wmean(w, x);
        let value = match *self {
            RiskDescriptor::LpDeviation { p, c } => c * lp_norm(w, &centered(w, x), p) - mean,
            RiskDescriptor::LpSemiDeviation { p, c } => {
                let neg: Vec<f64> = x.iter().map(|v| (mean - v).max(0.0)).collect();
                c * lp_norm(w, &neg, p) - mean
            }
            RiskDescriptor::MeanLp { p, c } => {
                c / p * w.iter().zip(x).map(|(a, v)| a * v.abs().powf(p)).sum::<f64>() - mean
            }
            RiskDescriptor::LpSemiMoment { p, c } => {
                w.iter().zip(x).map(|(a, v)| a * (-v).max(0.0).powf(p)).sum::<f64>() / c
            }
            RiskDescriptor::Exponential => w.iter().zip(x).map(|(a, v)| a * (-v).exp()).sum::<f64>() - 1.0,
            RiskDescriptor::Logarithmic => {
                if x.iter().any(|v| !(*v > 0.0)) {
                    return ExtReal::PosInf;
                }
                -w.iter().zip(x).map(|(a, v)| a * v.ln()).sum::<f64>() - 1.0
            }
            RiskDescriptor::InfDeviation { p } => lp_norm(w, &centered(w, x), p),
        };
        ExtReal::from_f64(value)
    }

    /// A subgradient `g` with `f(X + d) >= f(X) + E(g d)`, or `None` outside the domain.
    pub fn subgradient(&self, space: &ProbSpace, x: &RandomVariable) -> Result<Option<RandomVariable>> {
        space.check(x)?;
        match self.subgradient_slice(space.weights(), x.values()) {
            Some(g) => Ok(Some(RandomVariable::new(g)?)),
            None => Ok(None),
        }
    }

    pub(crate) fn subgradient_slice(&self, w: &[f64], x: &[f64]) -> Option<Vec<f64>> {
        let centered_sub = |h: Vec<f64>, c: f64, kappa: f64| -> Vec<f64> {
            let m = wmean(w, &h);
            h.iter().map(|v| c * (v - m) - kappa).collect()
        };
        Some(match *self {
            RiskDescriptor::LpDeviation { p, c } => centered_sub(norm_subgradient(w, &centered(w, x), p), c, 1.0),
            RiskDescriptor::LpSemiDeviation { p, c } => {
                let mean = wmean(w, x);
                let neg: Vec<f64> = x.iter().map(|v| (mean - v).max(0.0)).collect();
                let h: Vec<f64> = norm_subgradient(w, &neg, p).into_iter().map(|v| -v).collect();
                centered_sub(h, c, 1.0)
            }
            RiskDescriptor::MeanLp { p, c } => x
                .iter()
                .map(|v| {
                    let s = if *v == 0.0 { 0.0 } else { v.signum() };
                    c * s * v.abs().powf(p - 1.0) - 1.0
                })
                .collect(),
            RiskDescriptor::LpSemiMoment { p, c } => x
                .iter()
                .map(|v| {
                    if *v >= 0.0 {
                        0.0
                    } else if p == 1.0 {
                        -1.0 / c
                    } else {
                        -(p / c) * (-v).powf(p - 1.0)
                    }
                })
                .collect(),
            RiskDescriptor::Exponential => x.iter().map(|v| -(-v).exp()).collect(),
            RiskDescriptor::Logarithmic => {
                if x.iter().any(|v| !(*v > 0.0)) {
                    return None;
                }
                x.iter().map(|v| -1.0 / v).collect()
            }
            RiskDescriptor::InfDeviation { p } => centered_sub(norm_subgradient(w, &centered(w, x), p), 1.0, 0.0),
        })
    }

    /// Fenchel conjugate under the pairing `<X*, X> = E(X* X)`.
    pub fn conjugate(&self, space: &ProbSpace, xstar: &RandomVariable) -> Result<ExtReal> {
        space.check(xstar)?;
        Ok(self.conjugate_slice(space.weights(), xstar.values()))
    }

    pub(crate) fn conjugate_slice(&self, w: &[f64], xs: &[f64]) -> ExtReal {
        match self.dual_form() {
            DualForm::Witness { c, kappa, q, nonpositive } => {
                if (wmean(w, xs) + kappa).abs() > MEAN_TOL {
                    return ExtReal::PosInf;
                }
                let u: Vec<f64> = xs.iter().map(|v| (v + kappa) / c).collect();
                if min_shifted_norm(w, &u, q, nonpositive) <= 1.0 + WITNESS_TOL {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            DualForm::Direct => {
                let (lo, hi) = self.conjugate_bounds();
                let strict_hi = matches!(self, RiskDescriptor::Logarithmic);
                if xs.iter().any(|v| *v < lo || *v > hi || (strict_hi && *v >= hi)) {
                    return ExtReal::PosInf;
                }
                ExtReal::from_f64(w.iter().zip(xs).map(|(a, v)| a * self.conjugate_atom(*v)).sum())
            }
        }
    }

    /// Per-atom conjugate of a separable descriptor inside its domain.
    fn conjugate_atom(&self, s: f64) -> f64 {
        match *self {
            RiskDescriptor::MeanLp { p, c } => {
                if p == 1.0 {
                    0.0
                } else {
                    let q = conjugate_exponent(p);
                    c.powf(1.0 - q) / q * (s + 1.0).abs().powf(q)
                }
            }
            RiskDescriptor::LpSemiMoment { p, c } => {
                if p == 1.0 {
                    0.0
                } else {
                    let q = conjugate_exponent(p);
                    (p - 1.0) / c * (c / p * s.abs()).powf(q)
                }
            }
            RiskDescriptor::Exponential => {
                let e = if s == 0.0 { 0.0 } else { -s * (-s).ln() };
                e + s + 1.0
            }
            RiskDescriptor::Logarithmic => -(-s).ln(),
            _ => unreachable!("witness descriptors have no separable conjugate"),
        }
    }

    /// Derivative of the per-atom conjugate, for descriptors where it is smooth.
    pub(crate) fn conjugate_atom_derivative(&self, s: f64) -> f64 {
        match *self {
            RiskDescriptor::MeanLp { p, c } => {
                if p == 1.0 {
                    0.0
                } else {
                    let q = conjugate_exponent(p);
                    let t = s + 1.0;
                    c.powf(1.0 - q) * t.abs().powf(q - 1.0) * t.signum()
                }
            }
            RiskDescriptor::LpSemiMoment { p, c } => {
                if p == 1.0 {
                    0.0
                } else {
                    let q = conjugate_exponent(p);
                    -(c / p * s.abs()).powf(q - 1.0)
                }
            }
            RiskDescriptor::Exponential => -(-s).ln(),
            RiskDescriptor::Logarithmic => -1.0 / s,
            _ => 0.0,
        }
    }

    /// Upper bound of the evaluated dual coordinates; strictly inside the
    /// conjugate domain where the conjugate blows up or has an infinite slope at 0.
    pub(crate) fn dual_upper_clamp(&self) -> f64 {
        match self {
            RiskDescriptor::Exponential => -1e-200,
            RiskDescriptor::Logarithmic => -1e-12,
            _ => self.conjugate_bounds().1,
        }
    }

    /// `<X*, X> - f*(X*)`, the quantity maximized by the dual problems.
    pub fn dual_objective(&self, space: &ProbSpace, xstar: &RandomVariable, x: &RandomVariable) -> Result<ExtReal> {
        let conj = self.conjugate(space, xstar)?;
        Ok(-conj + space.pairing(xstar, x)?)
    }
}

impl fmt::Display for RiskDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RiskDescriptor::LpDeviation { p, c }
            | RiskDescriptor::LpSemiDeviation { p, c }
            | RiskDescriptor::MeanLp { p, c }
            | RiskDescriptor::LpSemiMoment { p, c } => write!(f, "{}(p={p}, c={c})", self.name()),
            RiskDescriptor::InfDeviation { p } => write!(f, "{}(p={p})", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

/// `min_s ||u + s||_q`, with `s <= -max u` when the witness must be nonpositive.
///
/// The map `s -> ||u + s||_q` is convex with minimizers between `-max u` and
/// `-min u`, so under the sign constraint the minimum sits at `s = -max u`.
pub(crate) fn min_shifted_norm(w: &[f64], u: &[f64], q: f64, nonpositive: bool) -> f64 {
    let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let shifted = |s: f64| -> Vec<f64> { u.iter().map(|v| v + s).collect() };
    if nonpositive {
        return lp_norm(w, &shifted(-hi), q);
    }
    let s = if q == f64::INFINITY {
        -0.5 * (lo + hi)
    } else if q == 1.0 {
        -weighted_median(w, u)
    } else {
        // Root of the nondecreasing derivative E(sign(u + s) |u + s|^(q-1)).
        let span = (hi - lo).max(1.0);
        let deriv = |s: f64| -> f64 {
            w.iter()
                .zip(u)
                .map(|(a, v)| {
                    let t = (v + s) / span;
                    a * t.signum() * t.abs().powf(q - 1.0)
                })
                .sum()
        };
        let (mut a, mut b) = (-hi, -lo);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if deriv(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    lp_norm(w, &shifted(s), q)
}

/// Smallest `m` with `P(u <= m) >= 1/2`.
fn weighted_median(w: &[f64], u: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..u.len()).collect();
    idx.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    let mut cum = 0.0;
    for &i in &idx {
        cum += w[i];
        if cum >= 0.5 - 1e-15 {
            return u[i];
        }
    }
    u[idx[idx.len() - 1]]
}
