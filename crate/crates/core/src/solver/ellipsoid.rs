//! Deep-cut ellipsoid method for small nonsmooth convex programs.
//!
//! The search runs inside a Euclidean ball. When the best point ends up
//! well inside the ball it is a global minimizer (a local minimizer of a
//! convex function); otherwise the ball is recentered and enlarged.

use super::DIVERGENCE_LEVEL;
use crate::error::{Result, RiskError};
use crate::ext::ExtReal;

/// Answer of a separation oracle at a query point.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleAnswer {
    /// Some constraint `h(x) <= 0` fails with `h(x) = violation > 0`;
    /// `normal` is a subgradient of `h`.
    Infeasible { violation: f64, normal: Vec<f64> },
    Feasible { value: f64, subgradient: Vec<f64> },
}

pub type Oracle<'a> = dyn Fn(&[f64]) -> OracleAnswer + 'a;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidConfig {
    pub radius: f64,
    pub max_radius: f64,
    /// Stop when the certified gap is below `rel_tol * max(1, |best|)`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for EllipsoidConfig {
    fn default() -> Self {
        EllipsoidConfig {
            radius: 10.0,
            max_radius: 1e12,
            rel_tol: 1e-11,
            max_iter: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidResult {
    pub x: Vec<f64>,
    /// Best objective value found; `-inf` when the divergence guard fired and
    /// `+inf` when no feasible point was found.
    pub value: ExtReal,
    /// Lower bound on the minimum over the final search ball.
    pub lower_bound: f64,
    pub iterations: usize,
    /// True when the minimizer was confirmed to lie inside the search ball.
    pub certified: bool,
}

struct BallRun {
    best: Option<(Vec<f64>, f64)>,
    lower: f64,
    iterations: usize,
    diverged: bool,
}

fn run_ball(oracle: &Oracle<'_>, center: &[f64], radius: f64, cfg: &EllipsoidConfig) -> BallRun {
    let m = center.len();
    let mf = m as f64;
    let max_iter = if cfg.max_iter > 0 {
        cfg.max_iter
    } else {
        4000 + 400 * m * m
    };
    let mut x = center.to_vec();
    // Shape kept in factored form `P = B B^T` so it stays positive
    // semidefinite when the ellipsoid becomes very flat.
    let mut bm = vec![vec![0.0; m]; m];
    for (i, row) in bm.iter_mut().enumerate() {
        row[i] = radius;
    }
    let mut out = BallRun {
        best: None,
        lower: f64::NEG_INFINITY,
        iterations: 0,
        diverged: false,
    };
    for _ in 0..max_iter {
        out.iterations += 1;
        let (a, alpha) = match oracle(&x) {
            OracleAnswer::Infeasible { violation, normal } => {
                let gamma = norm(&transpose_apply(&bm, &normal));
                if gamma == 0.0 {
                    break;
                }
                (normal, violation / gamma)
            }
            OracleAnswer::Feasible { value, subgradient } => {
                if value < DIVERGENCE_LEVEL {
                    out.diverged = true;
                    out.best = Some((x.clone(), value));
                    return out;
                }
                let best_value = match &out.best {
                    Some((_, b)) if *b <= value => *b,
                    _ => {
                        out.best = Some((x.clone(), value));
                        value
                    }
                };
                let gamma = norm(&transpose_apply(&bm, &subgradient));
                out.lower = out.lower.max((value - gamma).min(best_value));
                if gamma == 0.0 {
                    out.lower = best_value;
                    break;
                }
                if best_value - out.lower <= cfg.rel_tol * best_value.abs().max(1.0) {
                    break;
                }
                (subgradient, (value - best_value) / gamma)
            }
        };
        if alpha >= 1.0 {
            // No point of the ellipsoid improves on the incumbent.
            if let Some((_, b)) = &out.best {
                out.lower = *b;
            }
            break;
        }
        let bt_a = transpose_apply(&bm, &a);
        let gamma = norm(&bt_a);
        let u: Vec<f64> = bt_a.iter().map(|v| v / gamma).collect();
        let b: Vec<f64> = bm.iter().map(|row| dot(row, &u)).collect();
        if m == 1 {
            let half = bm[0][0].abs();
            let (mut lo, mut hi) = (x[0] - half, x[0] + half);
            let cut = x[0] - alpha * half * a[0].signum();
            if a[0] > 0.0 {
                hi = cut;
            } else {
                lo = cut;
            }
            x[0] = 0.5 * (lo + hi);
            bm[0][0] = 0.5 * (hi - lo);
        } else {
            let tau = (1.0 + mf * alpha) / (mf + 1.0);
            for i in 0..m {
                x[i] -= tau * b[i];
            }
            let sigma = 2.0 * (1.0 + mf * alpha) / ((mf + 1.0) * (1.0 + alpha));
            let delta = mf * mf / (mf * mf - 1.0) * (1.0 - alpha * alpha);
            // B (I - c u u^T) squares to B (I - sigma u u^T) B^T.
            let c = 1.0 - (1.0 - sigma).max(0.0).sqrt();
            let sd = delta.sqrt();
            for i in 0..m {
                for j in 0..m {
                    bm[i][j] = sd * (bm[i][j] - c * b[i] * u[j]);
                }
            }
        }
        let size: f64 = bm.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        if !(size > 1e-15 * (1.0 + norm(&x))) {
            break;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn transpose_apply(b: &[Vec<f64>], a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for (row, ai) in b.iter().zip(a) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += ai * v;
        }
    }
    out
}

/// Minimizes a convex function given by a separation oracle, starting from
/// a ball of radius `cfg.radius` around `center`.
pub fn minimize_convex(oracle: &Oracle<'_>, center: &[f64], cfg: &EllipsoidConfig) -> Result<EllipsoidResult> {
    if center.is_empty() {
        return Err(RiskError::param("center", "ellipsoid method needs at least one variable"));
    }
    let mut c = center.to_vec();
    let mut radius = cfg.radius.max(1e-8);
    let mut iterations = 0;
    let mut last: Option<(Vec<f64>, f64, f64)> = None;
    while radius <= cfg.max_radius {
        let run = run_ball(oracle, &c, radius, cfg);
        iterations += run.iterations;
        if run.diverged {
            let (x, _) = run.best.expect("divergence records the point");
            return Ok(EllipsoidResult {
                x,
                value: ExtReal::NegInf,
                lower_bound: f64::NEG_INFINITY,
                iterations,
                certified: true,
            });
        }
        match run.best {
            Some((x, v)) => {
                let dist = norm(&x.iter().zip(&c).map(|(a, b)| a - b).collect::<Vec<_>>());
                if dist <= 0.9 * radius {
                    return Ok(EllipsoidResult {
                        x,
                        value: ExtReal::Finite(v),
                        lower_bound: run.lower,
                        iterations,
                        certified: true,
                    });
                }
                c = x.clone();
                last = Some((x, v, run.lower));
            }
            None => {}
        }
        radius *= 4.0;
    }
    Ok(match last {
        Some((x, v, lb)) => EllipsoidResult {
            x,
            value: ExtReal::Finite(v),
            lower_bound: lb,
            iterations,
            certified: false,
        },
        None => EllipsoidResult {
            x: c,
            value: ExtReal::PosInf,
            lower_bound: f64::INFINITY,
            iterations,
            certified: false,
        },
    })
}
