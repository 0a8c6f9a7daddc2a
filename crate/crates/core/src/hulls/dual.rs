//! Dual representation of the hulls.
//!
//! The dual maximizes `<X*, X> - f*(X*)` over `X* <= 0` (with the cone) and
//! `<X*, Pi> = -1` (with the numeraire). Separable conjugates are handled in
//! `X*` directly. Indicator conjugates are handled through their witness
//! `Y` with `X* = c (Y - E Y) - kappa`, which turns the constraints into
//!
//! - `||Y||_q <= 1`, and `Y <= 0` for the semi-deviation,
//! - `c (Y_i - E Y) <= kappa` with the cone,
//! - `E(Y (Pi - E Pi)) = (kappa E Pi - 1) / c` with the numeraire,
//!
//! and the objective into `c E(Y (X - E X)) - kappa E X`.

use super::descriptor::{lp_norm, DualForm, RiskDescriptor};
use super::primal::hull_primal;
use super::witness::{linear_max, linear_max_affine};
use super::{slater_check_mode, HullMode, HullSpec};
use crate::error::{Result, RiskError};
use crate::ext::ExtReal;
use crate::prob_space::{ProbSpace, RandomVariable};
use crate::solver::projection::box_affine_range;
use crate::solver::{maximize_concave_projected, wdot, wmean, AscentConfig, AscentProblem, FeasibleSet, QBall};

/// Weak duality must hold within this multiple of the payoff scale.
pub const WEAK_DUALITY_TOL: f64 = 1e-12;
/// Slack on constraint ranges when deciding dual feasibility.
const RANGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// Best dual point; zeros when the dual is infeasible.
    pub xstar: RandomVariable,
    /// Witness `Y` behind `xstar` for indicator conjugates.
    pub witness: Option<RandomVariable>,
    pub dual_value: ExtReal,
    pub primal_value: ExtReal,
    /// Certified lower bound from the primal solver.
    pub primal_lower_bound: f64,
    /// `primal - dual`; 0 when both are `-inf`, `+inf` when they disagree in kind.
    pub gap: f64,
    pub slater_ok: bool,
    pub dual_feasible: bool,
    pub iterations: usize,
    pub converged: bool,
    /// Largest constraint violation of the dual point.
    pub residual: f64,
}

struct DualPoint {
    xstar: Vec<f64>,
    witness: Option<Vec<f64>>,
    value: ExtReal,
    iterations: usize,
    converged: bool,
    residual: f64,
}

impl DualPoint {
    fn infeasible(n: usize) -> Self {
        DualPoint {
            xstar: vec![0.0; n],
            witness: None,
            value: ExtReal::NegInf,
            iterations: 0,
            converged: true,
            residual: 0.0,
        }
    }
}

fn gap_of(primal: ExtReal, dual: ExtReal) -> f64 {
    match (primal, dual) {
        (ExtReal::Finite(p), ExtReal::Finite(d)) => p - d,
        (ExtReal::NegInf, ExtReal::NegInf) | (ExtReal::PosInf, ExtReal::PosInf) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Solves the dual of a hull, together with the primal for the gap.
pub fn hull_dual(
    space: &ProbSpace,
    desc: &RiskDescriptor,
    spec: &HullSpec,
    x: &RandomVariable,
    mode: HullMode,
    cfg: &AscentConfig,
) -> Result<DualSolution> {
    desc.validate()?;
    space.check(x)?;
    space.check(spec.numeraire())?;
    let point = match desc.dual_form() {
        DualForm::Direct => direct_dual(space, desc, spec, x, mode, cfg)?,
        DualForm::Witness { c, kappa, q, nonpositive } => {
            witness_dual(space, spec, x, mode, cfg, Witness { c, kappa, q, nonpositive })?
        }
    };
    let primal = hull_primal(space, desc, spec, x, mode)?;
    Ok(DualSolution {
        xstar: RandomVariable::new(point.xstar)?,
        witness: point.witness.map(RandomVariable::new).transpose()?,
        gap: gap_of(primal.value, point.value),
        dual_feasible: !point.value.is_neg_inf(),
        dual_value: point.value,
        primal_value: primal.value,
        primal_lower_bound: primal.lower_bound,
        slater_ok: slater_check_mode(space, desc, spec, x, mode)?,
        iterations: point.iterations,
        converged: point.converged,
        residual: point.residual,
    })
}

/// `primal - dual` for a hull; errors when either side is not finite.
pub fn duality_gap(
    space: &ProbSpace,
    desc: &RiskDescriptor,
    spec: &HullSpec,
    x: &RandomVariable,
    mode: HullMode,
    cfg: &AscentConfig,
) -> Result<f64> {
    let sol = hull_dual(space, desc, spec, x, mode, cfg)?;
    if !(sol.primal_value.is_finite() && sol.dual_value.is_finite()) {
        return Err(RiskError::NotFinite(format!(
            "primal {} and dual {} must both be finite for a gap",
            sol.primal_value, sol.dual_value
        )));
    }
    Ok(sol.gap)
}

/// Gap within `tol_gap * max(1, |primal|)`; agreeing infinite values pass.
pub fn gap_passes(sol: &DualSolution, tol_gap: f64) -> bool {
    match sol.primal_value {
        ExtReal::Finite(p) => sol.gap.abs() <= tol_gap * p.abs().max(1.0),
        _ => sol.gap == 0.0,
    }
}

fn direct_dual(
    space: &ProbSpace,
    desc: &RiskDescriptor,
    spec: &HullSpec,
    x: &RandomVariable,
    mode: HullMode,
    cfg: &AscentConfig,
) -> Result<DualPoint> {
    let w = space.weights();
    let n = w.len();
    let xv = x.values();
    let pi = spec.numeraire().values();
    let (lo, mut hi) = desc.conjugate_bounds();
    hi = hi.min(desc.dual_upper_clamp());
    if mode.has_cone() {
        hi = hi.min(0.0);
    }
    let mut set = FeasibleSet::new(w);
    if lo.is_finite() || hi.is_finite() {
        set.bounds = Some((vec![lo; n], vec![hi; n]));
    }
    if mode.has_numeraire() {
        if let Some((l, h)) = &set.bounds {
            let (rlo, rhi) = box_affine_range(w, l, h, pi);
            if !(rlo <= -1.0 + RANGE_TOL && -1.0 - RANGE_TOL <= rhi) {
                return Ok(DualPoint::infeasible(n));
            }
        }
        set.affine = Some((pi.to_vec(), -1.0));
    }
    let objective = |s: &[f64]| -> f64 {
        match desc.conjugate_slice(w, s) {
            ExtReal::Finite(conj) => wdot(w, s, xv) - conj,
            _ => f64::NEG_INFINITY,
        }
    };
    let pi_opt = if mode.has_numeraire() { Some(pi) } else { None };
    if let Some(point) = separable_dual(desc, w, xv, pi_opt, lo, hi) {
        let value = objective(&point);
        if value.is_finite() {
            return Ok(DualPoint {
                value: ExtReal::Finite(value),
                residual: set.residual(&point),
                xstar: point,
                witness: None,
                iterations: 1,
                converged: true,
            });
        }
    }
    let gradient = |s: &[f64]| -> Vec<f64> {
        s.iter()
            .zip(xv)
            .map(|(si, xi)| xi - desc.conjugate_atom_derivative(*si))
            .collect()
    };
    let prob = AscentProblem {
        objective: &objective,
        gradient: &gradient,
        set: &set,
        start: None,
        scale: 1.0,
    };
    let r = maximize_concave_projected(&prob, cfg)?;
    Ok(DualPoint {
        value: ExtReal::from_f64(r.value),
        xstar: r.x,
        witness: None,
        iterations: r.iterations,
        converged: r.converged,
        residual: r.residual,
    })
}

/// Maximizer of the concave `s t - phi*(s)` over `[lo, hi]`, located by
/// bisection on the nondecreasing derivative of `phi*`. `None` when the
/// supremum is not attained at a finite point.
fn atom_argmax(desc: &RiskDescriptor, t: f64, lo: f64, hi: f64) -> Option<f64> {
    let slope = |s: f64| t - desc.conjugate_atom_derivative(s);
    if hi.is_finite() && slope(hi) >= 0.0 {
        return Some(hi);
    }
    if lo.is_finite() && slope(lo) <= 0.0 {
        return Some(lo);
    }
    // Bracket a sign change of the slope: positive at `a`, negative at `b`.
    let (mut a, mut b) = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo, hi),
        (true, false) => {
            let mut b = lo + 1.0;
            let mut step = 1.0;
            while slope(b) > 0.0 {
                step *= 2.0;
                b = lo + step;
                if !b.is_finite() || step > 1e300 {
                    return None;
                }
            }
            (lo, b)
        }
        (false, true) => {
            let mut a = hi - 1.0;
            let mut step = 1.0;
            while slope(a) < 0.0 {
                step *= 2.0;
                a = hi - step;
                if !a.is_finite() || step > 1e300 {
                    return None;
                }
            }
            (a, hi)
        }
        (false, false) => {
            let mut step = 1.0;
            let (mut a, mut b) = (-1.0, 1.0);
            while slope(a) < 0.0 || slope(b) > 0.0 {
                step *= 2.0;
                if step > 1e300 {
                    return None;
                }
                if slope(a) < 0.0 {
                    a = -step;
                }
                if slope(b) > 0.0 {
                    b = step;
                }
            }
            (a, b)
        }
    };
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if slope(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Exact dual for separable conjugates. Without the numeraire each atom is
/// maximized on its own; with it the Lagrangian in the multiplier `mu` of
/// `E(Pi X*) = -1` decouples into atoms with `t_i = X_i - mu Pi_i`, and
/// `E(Pi X*(mu))` is nonincreasing in `mu`, so `mu` is found by bisection.
/// A jump of `E(Pi X*(mu))` at the root (flat pieces of the conjugate) is
/// closed by interpolating between the two bracketing maximizers, both of
/// which maximize the Lagrangian at the root. `None` hands the problem to
/// the general ascent.
fn separable_dual(desc: &RiskDescriptor, w: &[f64], x: &[f64], pi: Option<&[f64]>, lo: f64, hi: f64) -> Option<Vec<f64>> {
    let at = |mu: f64| -> Option<Vec<f64>> {
        x.iter()
            .enumerate()
            .map(|(i, xi)| atom_argmax(desc, xi - mu * pi.map_or(0.0, |p| p[i]), lo, hi))
            .collect()
    };
    let pi = match pi {
        None => return at(0.0),
        Some(p) => p,
    };
    let eval = |mu: f64| -> Option<(Vec<f64>, f64)> {
        let s = at(mu)?;
        let m = wdot(w, pi, &s);
        Some((s, m))
    };
    // Some atom is unattained outside an interval of mu; past its upper end
    // E(Pi X*) has run off to -inf and past its lower end to +inf.
    let mut anchor = None;
    let mut probe = 0.0_f64;
    for _ in 0..90 {
        if let Some((s, m)) = eval(probe) {
            anchor = Some((probe, s, m));
            break;
        }
        probe = if probe > 0.0 { -2.0 * probe } else { 1.0 - 2.0 * probe };
    }
    let (mu0, s0, m0) = anchor?;
    if m0 == -1.0 {
        return Some(s0);
    }
    let above = |mu: f64| -> bool {
        match eval(mu) {
            Some((_, m)) => m > -1.0,
            None => mu < mu0,
        }
    };
    let mut step = 1.0_f64;
    let (mut ma, mut mb) = if m0 > -1.0 { (mu0, mu0 + step) } else { (mu0 - step, mu0) };
    loop {
        if m0 > -1.0 && !above(mb) || m0 < -1.0 && above(ma) {
            break;
        }
        step *= 2.0;
        if step > 1e12 {
            return None;
        }
        if m0 > -1.0 {
            ma = mb;
            mb += step;
        } else {
            mb = ma;
            ma -= step;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (ma + mb);
        if mid <= ma || mid >= mb {
            break;
        }
        if above(mid) {
            ma = mid;
        } else {
            mb = mid;
        }
    }
    match (eval(ma), eval(mb)) {
        (Some((sa, fa)), Some((sb, fb))) => {
            if fa == fb {
                return Some(sa);
            }
            let theta = ((fa + 1.0) / (fa - fb)).clamp(0.0, 1.0);
            Some(sa.iter().zip(&sb).map(|(a, b)| a + theta * (b - a)).collect())
        }
        (Some((s, f)), None) | (None, Some((s, f))) if (f + 1.0).abs() <= RANGE_TOL => Some(s),
        _ => None,
    }
}

/// Projection accuracy for witness climbs that end in an exact restoration.
const RESTORED_TOL: f64 = 1e-10;

struct Witness {
    c: f64,
    kappa: f64,
    q: f64,
    nonpositive: bool,
}

fn witness_dual(
    space: &ProbSpace,
    spec: &HullSpec,
    x: &RandomVariable,
    mode: HullMode,
    cfg: &AscentConfig,
    wit: Witness,
) -> Result<DualPoint> {
    let w = space.weights();
    let n = w.len();
    let xv = x.values();
    let mean_x = wmean(w, xv);
    let mut set = FeasibleSet::new(w);
    set.ball = Some(QBall { q: wit.q, radius: 1.0 });
    if wit.nonpositive {
        set.bounds = Some((vec![f64::NEG_INFINITY; n], vec![0.0; n]));
    }
    if mode.has_cone() {
        set.centered_upper = Some(wit.kappa / wit.c);
    }
    let mut rhs = 0.0;
    if mode.has_numeraire() {
        let pi = spec.numeraire().values();
        let mean_pi = wmean(w, pi);
        let tilt: Vec<f64> = pi.iter().map(|v| v - mean_pi).collect();
        rhs = (wit.kappa * mean_pi - 1.0) / wit.c;
        let pi_scale = pi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let flat = tilt.iter().all(|v| v.abs() <= 1e-14 * pi_scale);
        if flat {
            // E(Y (Pi - E Pi)) vanishes identically.
            if rhs.abs() > RANGE_TOL {
                return Ok(DualPoint::infeasible(n));
            }
            rhs = 0.0;
        } else if mode.has_cone() && wit.kappa == 0.0 {
            // Y - E Y <= 0 forces Y constant, so the constraint reads 0 = rhs.
            if rhs.abs() > RANGE_TOL {
                return Ok(DualPoint::infeasible(n));
            }
            set.affine = Some((tilt, 0.0));
            rhs = 0.0;
        } else {
            if rhs.abs() > RANGE_TOL {
                let (rlo, rhi) = slice_range(&set, &tilt, wit.q, cfg)?;
                let slack = RANGE_TOL * (1.0 + rhs.abs());
                if !(rlo <= rhs + slack && rhs - slack <= rhi) {
                    return Ok(DualPoint::infeasible(n));
                }
            }
            set.affine = Some((tilt, rhs));
        }
    }
    let centered_x: Vec<f64> = xv.iter().map(|v| wit.c * (v - mean_x)).collect();
    let objective = |y: &[f64]| -> f64 { wdot(w, y, &centered_x) - wit.kappa * mean_x };
    let gradient = |_: &[f64]| -> Vec<f64> { centered_x.clone() };
    let prob = AscentProblem {
        objective: &objective,
        gradient: &gradient,
        set: &set,
        start: None,
        scale: 1.0,
    };
    let cap = if wit.nonpositive { 0.0 } else { f64::INFINITY };
    let exact = match &set.affine {
        None => linear_max(w, &centered_x, wit.q, cap, set.centered_upper),
        Some((t, r)) => linear_max_affine(w, &centered_x, wit.q, cap, set.centered_upper, t, *r),
    };
    if let Some(mut y) = exact {
        if rhs == 0.0 {
            restore_witness(&set, &mut y, wit.kappa / wit.c);
        }
        let value = objective(&y);
        if value.is_finite() {
            let my = wmean(w, &y);
            let xstar: Vec<f64> = y.iter().map(|v| wit.c * (v - my) - wit.kappa).collect();
            return Ok(DualPoint {
                value: ExtReal::Finite(value),
                residual: set.residual(&y),
                xstar,
                witness: Some(y),
                iterations: 1,
                converged: true,
            });
        }
    }
    // With a zero right-hand side the final witness is made exactly feasible
    // afterwards, so the climb can work with coarser projections.
    let climb_cfg = if rhs == 0.0 {
        AscentConfig {
            tol: cfg.tol.max(RESTORED_TOL),
            projection_tol: cfg.projection_tol.max(RESTORED_TOL),
            ..*cfg
        }
    } else {
        *cfg
    };
    let r = maximize_concave_projected(&prob, &climb_cfg)?;
    let mut y = r.x;
    if rhs == 0.0 {
        restore_witness(&set, &mut y, wit.kappa / wit.c);
    }
    let my = wmean(w, &y);
    let xstar: Vec<f64> = y.iter().map(|v| wit.c * (v - my) - wit.kappa).collect();
    Ok(DualPoint {
        value: ExtReal::from_f64(objective(&y)),
        residual: set.residual(&y),
        xstar,
        witness: Some(y),
        iterations: r.iterations,
        converged: r.converged,
    })
}

/// Range of `E(Y t)` over the witness set without its affine constraint.
fn slice_range(set: &FeasibleSet, tilt: &[f64], q: f64, cfg: &AscentConfig) -> Result<(f64, f64)> {
    let w = &set.weights;
    if set.bounds.is_none() && set.centered_upper.is_none() {
        let m = lp_norm(w, tilt, super::conjugate_exponent(q));
        return Ok((-m, m));
    }
    let cap = match &set.bounds {
        Some((_, hi)) => hi.iter().fold(f64::INFINITY, |m, v| m.min(*v)),
        None => f64::INFINITY,
    };
    let mut ends = [0.0; 2];
    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
        let dir: Vec<f64> = tilt.iter().map(|v| sign * v).collect();
        if let Some(y) = linear_max(w, &dir, q, cap, set.centered_upper) {
            ends[k] = sign * wdot(w, &y, &dir);
            continue;
        }
        let objective = |y: &[f64]| wdot(w, y, &dir);
        let gradient = |_: &[f64]| dir.clone();
        let prob = AscentProblem {
            objective: &objective,
            gradient: &gradient,
            set,
            start: None,
            scale: 1.0,
        };
        ends[k] = sign * maximize_concave_projected(&prob, cfg)?.value;
    }
    Ok((ends[1], ends[0]))
}

/// Makes a near-feasible witness exactly feasible when the affine right-hand
/// side is 0. Each step keeps the constraints fixed by the previous ones:
/// the affine fix is followed by a constant shift (invisible to centered
/// quantities) and a scaling toward the feasible origin.
fn restore_witness(set: &FeasibleSet, y: &mut [f64], centered_bound: f64) {
    let w = &set.weights;
    if let Some((a, _)) = &set.affine {
        let aa = wdot(w, a, a);
        if aa > 0.0 {
            let k = wdot(w, y, a) / aa;
            for (yi, ai) in y.iter_mut().zip(a) {
                *yi -= k * ai;
            }
        }
    }
    if set.bounds.is_some() {
        let top = y.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        if top > 0.0 {
            y.iter_mut().for_each(|v| *v -= top);
        }
    }
    let mut t: f64 = 1.0;
    if let Some(ball) = &set.ball {
        let norm = ball.norm(w, y);
        if norm > ball.radius {
            t = t.min(ball.radius / norm);
        }
    }
    if set.centered_upper.is_some() {
        let m = wmean(w, y);
        let top = y.iter().fold(f64::NEG_INFINITY, |acc, v| acc.max(v - m));
        if top > centered_bound {
            t = t.min(if top > 0.0 { centered_bound.max(0.0) / top } else { 0.0 });
        }
    }
    if t < 1.0 {
        y.iter_mut().for_each(|v| *v *= t);
    }
}
