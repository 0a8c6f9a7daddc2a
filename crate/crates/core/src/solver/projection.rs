//! Projections in the weighted Euclidean norm `||x||^2 = sum_i p_i x_i^2`.
//!
//! Each primitive is exact (up to bisection on a scalar multiplier). The
//! composed [`FeasibleSet`] projects exactly when only a box and one affine
//! constraint are present, and by Dykstra's algorithm otherwise.

use super::{wdot, wmean, wnorm};
use crate::error::{Result, RiskError};

const BISECT_ITERS: usize = 200;
const BISECT_TOL: f64 = 1e-12;

pub fn project_orthant(x: &[f64], nonpositive: bool) -> Vec<f64> {
    if nonpositive {
        x.iter().map(|v| v.min(0.0)).collect()
    } else {
        x.iter().map(|v| v.max(0.0)).collect()
    }
}

pub fn project_box(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (l, h))| v.max(*l).min(*h))
        .collect()
}

/// Projection onto `{x : E(a x) = b}`; `a` must not vanish.
pub fn project_affine(w: &[f64], x: &[f64], a: &[f64], b: f64) -> Vec<f64> {
    let aa = wdot(w, a, a);
    assert!(aa > 0.0, "affine constraint with a zero normal");
    let t = (wdot(w, a, x) - b) / aa;
    x.iter().zip(a).map(|(v, ai)| v - t * ai).collect()
}

/// Projection onto `{lo <= x <= hi, E(a x) = b}`.
///
/// The minimizer is `clamp(y - mu a)` for the multiplier `mu` at which the
/// constraint holds; the constraint value is nonincreasing in `mu`.
pub fn project_box_affine(
    w: &[f64],
    y: &[f64],
    lo: &[f64],
    hi: &[f64],
    a: &[f64],
    b: f64,
) -> Result<Vec<f64>> {
    let range = box_affine_range(w, lo, hi, a);
    if !(range.0 - BISECT_TOL * (1.0 + b.abs()) <= b && b <= range.1 + BISECT_TOL * (1.0 + b.abs())) {
        return Err(RiskError::Infeasible(format!(
            "E(a x) = {b} unreachable on the box, attainable range [{}, {}]",
            range.0, range.1
        )));
    }
    let at = |mu: f64| -> Vec<f64> {
        y.iter()
            .zip(a)
            .zip(lo.iter().zip(hi))
            .map(|((yi, ai), (l, h))| (yi - mu * ai).max(*l).min(*h))
            .collect()
    };
    let g = |mu: f64| wdot(w, a, &at(mu)) - b;
    let g0 = g(0.0);
    if g0 == 0.0 {
        return Ok(at(0.0));
    }
    // Expand until the sign changes.
    let mut step = 1.0_f64;
    let (mut lo_mu, mut hi_mu) = if g0 > 0.0 { (0.0, step) } else { (-step, 0.0) };
    for _ in 0..2000 {
        if g0 > 0.0 && g(hi_mu) > 0.0 {
            lo_mu = hi_mu;
            step *= 2.0;
            hi_mu += step;
        } else if g0 < 0.0 && g(lo_mu) < 0.0 {
            hi_mu = lo_mu;
            step *= 2.0;
            lo_mu -= step;
        } else {
            break;
        }
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo_mu + hi_mu);
        if mid <= lo_mu || mid >= hi_mu {
            break;
        }
        if g(mid) > 0.0 {
            lo_mu = mid;
        } else {
            hi_mu = mid;
        }
    }
    let mut x = at(0.5 * (lo_mu + hi_mu));
    // Remove the bisection residue along free coordinates.
    let free: Vec<f64> = x
        .iter()
        .zip(lo.iter().zip(hi))
        .zip(a)
        .map(|((v, (l, h)), ai)| if *v > *l && *v < *h { *ai } else { 0.0 })
        .collect();
    let ff = wdot(w, &free, &free);
    if ff > 0.0 {
        let t = (wdot(w, a, &x) - b) / ff;
        for (v, (fi, (l, h))) in x.iter_mut().zip(free.iter().zip(lo.iter().zip(hi))) {
            *v = (*v - t * fi).max(*l).min(*h);
        }
    }
    Ok(x)
}

/// Projection onto a box intersected with a few affine equalities
/// `E(a_k x) = b_k`, by Newton ascent on the concave dual in the multipliers.
pub fn project_box_equalities(
    w: &[f64],
    y: &[f64],
    lo: &[f64],
    hi: &[f64],
    rows: &[(&[f64], f64)],
) -> Result<Vec<f64>> {
    let k = rows.len();
    let n = y.len();
    let at = |mu: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let shift: f64 = (0..k).map(|r| mu[r] * rows[r].0[i]).sum();
                (y[i] - shift).max(lo[i]).min(hi[i])
            })
            .collect()
    };
    let grad = |x: &[f64]| -> Vec<f64> { rows.iter().map(|(a, b)| wdot(w, a, x) - b).collect() };
    let dual = |mu: &[f64]| -> f64 {
        let x = at(mu);
        let g = grad(&x);
        let d: f64 = (0..n).map(|i| 0.5 * w[i] * (x[i] - y[i]).powi(2)).sum();
        d + (0..k).map(|r| mu[r] * g[r]).sum::<f64>()
    };
    let scale = 1.0 + rows.iter().map(|(_, b)| b.abs()).fold(0.0, f64::max);
    let mut mu = vec![0.0; k];
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..200 {
        let x = at(&mu);
        let g = grad(&x);
        let gmax = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        // Residuals at rounding level stop improving; three Newton steps
        // without any decrease mean the active set is settled.
        let magnitude = x.iter().fold(scale, |m, v| m.max(v.abs()));
        if gmax <= 1e-15 * scale || gmax <= 8.0 * f64::EPSILON * magnitude * (n as f64) {
            break;
        }
        if gmax < best {
            best = gmax;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        }
        // Negated dual Hessian restricted to free coordinates.
        let mut h = vec![vec![0.0; k]; k];
        for i in 0..n {
            if x[i] > lo[i] && x[i] < hi[i] {
                for r in 0..k {
                    for c in 0..k {
                        h[r][c] += w[i] * rows[r].0[i] * rows[c].0[i];
                    }
                }
            }
        }
        let trace: f64 = (0..k).map(|r| h[r][r]).sum();
        let reg = 1e-12 * trace.max(1e-12);
        for (r, row) in h.iter_mut().enumerate() {
            row[r] += reg;
        }
        let d = solve_small(h, g.clone());
        let slope: f64 = (0..k).map(|r| g[r] * d[r]).sum();
        let d0 = dual(&mu);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..80 {
            let trial: Vec<f64> = (0..k).map(|r| mu[r] + t * d[r]).collect();
            if dual(&trial) >= d0 + 1e-4 * t * slope {
                mu = trial;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let x = at(&mu);
    let worst = grad(&x).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if worst > 1e-9 * scale {
        return Err(RiskError::Infeasible(format!(
            "box with {k} equality constraints: residual {worst:e}"
        )));
    }
    Ok(x)
}

/// Gaussian elimination with partial pivoting for tiny systems.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        if d == 0.0 {
            continue;
        }
        for r in col + 1..k {
            let f = a[r][col] / d;
            for c in col..k {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * x[c]).sum();
        x[r] = if a[r][r] == 0.0 { 0.0 } else { (b[r] - s) / a[r][r] };
    }
    x
}

/// Range of `E(a x)` over the box, with infinite ends kept symbolic.
pub fn box_affine_range(w: &[f64], lo: &[f64], hi: &[f64], a: &[f64]) -> (f64, f64) {
    let mut min = 0.0;
    let mut max = 0.0;
    for i in 0..a.len() {
        if a[i] == 0.0 {
            continue;
        }
        let (u, v) = if a[i] > 0.0 {
            (a[i] * lo[i], a[i] * hi[i])
        } else {
            (a[i] * hi[i], a[i] * lo[i])
        };
        min += w[i] * u;
        max += w[i] * v;
    }
    (min, max)
}

/// Weighted `q`-norm ball `{x : (E |x|^q)^(1/q) <= radius}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QBall {
    pub q: f64,
    pub radius: f64,
}

impl QBall {
    pub fn norm(&self, w: &[f64], x: &[f64]) -> f64 {
        if self.q == f64::INFINITY {
            x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        } else if self.q == 1.0 {
            w.iter().zip(x).map(|(p, v)| p * v.abs()).sum()
        } else if self.q == 2.0 {
            wnorm(w, x)
        } else {
            let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if m == 0.0 {
                return 0.0;
            }
            let s: f64 = w.iter().zip(x).map(|(p, v)| p * (v.abs() / m).powf(self.q)).sum();
            m * s.powf(1.0 / self.q)
        }
    }

    pub fn project(&self, w: &[f64], y: &[f64]) -> Vec<f64> {
        if self.norm(w, y) <= self.radius {
            return y.to_vec();
        }
        let r = self.radius;
        if self.q == 2.0 {
            let k = r / wnorm(w, y);
            return y.iter().map(|v| v * k).collect();
        }
        if self.q == f64::INFINITY {
            return y.iter().map(|v| v.max(-r).min(r)).collect();
        }
        if self.q == 1.0 {
            // Common soft threshold: x_i = sign(y_i) (|y_i| - theta)_+.
            let soft = |t: f64| -> Vec<f64> {
                y.iter().map(|v| v.signum() * (v.abs() - t).max(0.0)).collect()
            };
            let mass = |t: f64| w.iter().zip(soft(t)).map(|(p, v)| p * v.abs()).sum::<f64>();
            let (mut lo, mut hi) = (0.0, y.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
            for _ in 0..BISECT_ITERS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if mass(mid) > r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return soft(hi);
        }
        // General q: t_i + theta q t_i^(q-1) = |y_i| per coordinate, with the
        // multiplier theta chosen so that the constraint is active.
        let q = self.q;
        // Newton on the increasing left side, kept inside a bracket and
        // replaced by bisection when a step leaves it.
        let coord = |yi: f64, theta: f64| -> f64 {
            let target = yi.abs();
            let (mut lo, mut hi) = (0.0, target);
            let mut t = target;
            for _ in 0..BISECT_ITERS {
                let f = t + theta * q * t.powf(q - 1.0) - target;
                if f == 0.0 {
                    return t;
                }
                if f > 0.0 {
                    hi = t;
                } else {
                    lo = t;
                }
                if hi - lo <= 4.0 * f64::EPSILON * target {
                    break;
                }
                let df = 1.0 + theta * q * (q - 1.0) * t.powf(q - 2.0);
                let next = t - f / df;
                t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            }
            t
        };
        let point = |theta: f64| -> Vec<f64> { y.iter().map(|v| v.signum() * coord(*v, theta)).collect() };
        let (mut lo, mut hi) = (0.0, 1.0);
        while self.norm(w, &point(hi)) > r && hi < 1e300 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..BISECT_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || (hi - lo) <= BISECT_TOL * hi {
                break;
            }
            if self.norm(w, &point(mid)) > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        point(hi)
    }
}

/// Intersection of the primitive sets used by the dual problems.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    pub weights: Vec<f64>,
    /// Per-coordinate bounds; infinite entries are allowed.
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
    /// `E(a x) = b`.
    pub affine: Option<(Vec<f64>, f64)>,
    /// Combined with `bounds` by composition, so bounds must then be a
    /// sign constraint of the form `x <= 0`.
    pub ball: Option<QBall>,
    /// `x_i - E(x) <= h` for every atom.
    pub centered_upper: Option<f64>,
}

/// Outcome of a projection onto a [`FeasibleSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projected {
    pub point: Vec<f64>,
    pub residual: f64,
    pub rounds: usize,
    /// False when the round budget ran out before the iterates settled.
    pub converged: bool,
}

impl FeasibleSet {
    pub fn new(weights: &[f64]) -> Self {
        FeasibleSet {
            weights: weights.to_vec(),
            bounds: None,
            affine: None,
            ball: None,
            centered_upper: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Largest constraint violation at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let w = &self.weights;
        let mut r: f64 = 0.0;
        if let Some((lo, hi)) = &self.bounds {
            for i in 0..x.len() {
                r = r.max(lo[i] - x[i]).max(x[i] - hi[i]);
            }
        }
        if let Some((a, b)) = &self.affine {
            r = r.max((wdot(w, a, x) - b).abs());
        }
        if let Some(ball) = &self.ball {
            r = r.max(ball.norm(w, x) - ball.radius);
        }
        if let Some(h) = self.centered_upper {
            let m = wmean(w, x);
            for v in x {
                r = r.max(v - m - h);
            }
        }
        r
    }

    fn project_bounds_ball(&self, y: &[f64]) -> Vec<f64> {
        let mut x = match &self.bounds {
            Some((lo, hi)) => project_box(y, lo, hi),
            None => y.to_vec(),
        };
        if let Some(ball) = &self.ball {
            x = ball.project(&self.weights, &x);
        }
        x
    }

    /// Whether the affine constraint only involves the centered part of `x`.
    fn affine_is_centered(&self) -> bool {
        match &self.affine {
            Some((a, _)) => {
                let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                wmean(&self.weights, a).abs() <= 1e-14 * scale
            }
            None => false,
        }
    }

    /// Projection onto `{x_i - E(x) <= h}`, together with the affine
    /// constraint when it has a centered normal. The mean is kept and the
    /// centered part is projected onto a box with `E(u) = 0`.
    fn project_centered(&self, y: &[f64], h: f64, with_affine: bool) -> Result<Vec<f64>> {
        let w = &self.weights;
        let m = wmean(w, y);
        let u: Vec<f64> = y.iter().map(|v| v - m).collect();
        let n = y.len();
        let lo = vec![f64::NEG_INFINITY; n];
        let hi = vec![h; n];
        let ones = vec![1.0; n];
        let u = match (&self.affine, with_affine) {
            (Some((a, b)), true) => project_box_equalities(w, &u, &lo, &hi, &[(&ones, 0.0), (a, *b)])?,
            _ => project_box_affine(w, &u, &lo, &hi, &ones, 0.0)?,
        };
        Ok(u.iter().map(|v| v + m).collect())
    }

    /// Exact projection for a 2-norm ball without bounds. With multiplier
    /// `nu` on the ball the minimizer is the polyhedral projection of
    /// `y / (1 + nu)`, whose norm is nonincreasing in `nu`, so `nu` is found
    /// by bisection. `None` when the set has another shape or the polyhedral
    /// part misses the ball.
    fn project_two_ball(&self, y: &[f64], merged: bool) -> Result<Option<Vec<f64>>> {
        let ball = match &self.ball {
            Some(b) if b.q == 2.0 && self.bounds.is_none() => *b,
            _ => return Ok(None),
        };
        if self.centered_upper.is_some() && self.affine.is_some() && !merged {
            return Ok(None);
        }
        let w = &self.weights;
        let poly = |v: &[f64]| -> Result<Vec<f64>> {
            match (self.centered_upper, &self.affine) {
                (Some(h), _) => self.project_centered(v, h, merged),
                (None, Some((a, b))) => Ok(project_affine(w, v, a, *b)),
                (None, None) => Ok(v.to_vec()),
            }
        };
        let full = poly(y)?;
        if wnorm(w, &full) <= ball.radius {
            return Ok(Some(full));
        }
        let origin = poly(&vec![0.0; y.len()])?;
        if wnorm(w, &origin) > ball.radius {
            return Ok(None);
        }
        // t = 1 / (1 + nu): norm at t = 0 is inside, at t = 1 outside.
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut inside = origin;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let scaled: Vec<f64> = y.iter().map(|v| mid * v).collect();
            let x = poly(&scaled)?;
            if wnorm(w, &x) <= ball.radius {
                lo = mid;
                inside = x;
            } else {
                hi = mid;
            }
        }
        Ok(Some(inside))
    }

    /// Projects `y`. Dykstra rounds stop once the residual is at most `tol`;
    /// callers inspect `residual` when the budget runs out first.
    pub fn project(&self, y: &[f64], max_rounds: usize, tol: f64) -> Result<Projected> {
        let w = &self.weights;
        let only_box_affine = self.ball.is_none() && self.centered_upper.is_none();
        if only_box_affine {
            let point = match (&self.bounds, &self.affine) {
                (Some((lo, hi)), Some((a, b))) => project_box_affine(w, y, lo, hi, a, *b)?,
                (Some((lo, hi)), None) => project_box(y, lo, hi),
                (None, Some((a, b))) => project_affine(w, y, a, *b),
                (None, None) => y.to_vec(),
            };
            let residual = self.residual(&point);
            return Ok(Projected {
                point,
                residual,
                rounds: 1,
                converged: true,
            });
        }
        let merged = self.centered_upper.is_some() && self.affine_is_centered();
        if let Some(point) = self.project_two_ball(y, merged)? {
            let residual = self.residual(&point);
            return Ok(Projected {
                point,
                residual,
                rounds: 1,
                converged: true,
            });
        }
        // Dykstra's algorithm over the parts present.
        let separate_affine = self.affine.is_some() && !merged;
        let parts = 1 + usize::from(self.centered_upper.is_some()) + usize::from(separate_affine);
        let mut corrections = vec![vec![0.0; y.len()]; parts];
        let mut x = y.to_vec();
        for round in 1..=max_rounds {
            let before = x.clone();
            let mut k = 0;
            let mut step = |x: &mut Vec<f64>, k: &mut usize, proj: &dyn Fn(&[f64]) -> Result<Vec<f64>>| -> Result<()> {
                let shifted: Vec<f64> = x.iter().zip(&corrections[*k]).map(|(a, b)| a + b).collect();
                let p = proj(&shifted)?;
                corrections[*k] = shifted.iter().zip(&p).map(|(a, b)| a - b).collect();
                *x = p;
                *k += 1;
                Ok(())
            };
            step(&mut x, &mut k, &|v| Ok(self.project_bounds_ball(v)))?;
            if let Some(h) = self.centered_upper {
                step(&mut x, &mut k, &|v| self.project_centered(v, h, merged))?;
            }
            if separate_affine {
                let (a, b) = self.affine.as_ref().unwrap();
                step(&mut x, &mut k, &|v| Ok(project_affine(w, v, a, *b)))?;
            }
            let residual = self.residual(&x);
            // A feasible iterate is not yet the projection: the corrections
            // must also have settled, which shows as a fixed point of the cycle.
            let moved = x.iter().zip(&before).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            let size = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            if residual <= tol && moved <= tol * size {
                return Ok(Projected {
                    point: x,
                    residual,
                    rounds: round,
                    converged: true,
                });
            }
        }
        let residual = self.residual(&x);
        Ok(Projected {
            point: x,
            residual,
            rounds: max_rounds,
            converged: false,
        })
    }
}
