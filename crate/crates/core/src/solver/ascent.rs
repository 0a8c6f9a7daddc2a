//! Projected gradient ascent for concave objectives over a [`FeasibleSet`].

use super::projection::FeasibleSet;
use super::{wdot, wnorm};
use crate::error::{Result, RiskError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct AscentProblem<'a> {
    /// Concave objective; may return `-inf` outside its domain.
    pub objective: &'a dyn Fn(&[f64]) -> f64,
    /// Supergradient in the weighted inner product.
    pub gradient: &'a dyn Fn(&[f64]) -> Vec<f64>,
    pub set: &'a FeasibleSet,
    /// Starting point of the first restart; the origin is used if absent.
    pub start: Option<Vec<f64>>,
    /// Magnitude of random starting points and of the first step.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Stop once the gradient mapping falls below `tol * (1 + |x|)`.
    pub tol: f64,
    pub projection_rounds: usize,
    pub projection_tol: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            restarts: 16,
            max_iter: 4000,
            seed: 0,
            tol: 1e-13,
            projection_rounds: 2000,
            projection_tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final value of each restart, in restart order.
    pub restart_values: Vec<f64>,
}

struct Track {
    x: Vec<f64>,
    value: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
}

fn climb(prob: &AscentProblem<'_>, cfg: &AscentConfig, start: &[f64]) -> Result<Track> {
    let w = &prob.set.weights;
    let proj = |y: &[f64]| prob.set.project(y, cfg.projection_rounds, cfg.projection_tol);
    let first = proj(start)?;
    let mut x = first.point;
    let mut residual = first.residual;
    let mut fx = (prob.objective)(&x);
    let g0 = (prob.gradient)(&x);
    let gn = wnorm(w, &g0);
    let mut eta = if gn > 0.0 { prob.scale.max(1e-6) / gn } else { 1.0 };
    // Larger steps only push projections further out and cost precision.
    let eta0 = eta;
    let eta_max = 1e6 * eta;
    let mut converged = false;
    let mut mark = fx;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let g = (prob.gradient)(&x);
        let mut accepted = false;
        for attempt in 0..80 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + eta * b).collect();
            let p = proj(&trial)?;
            let d: Vec<f64> = p.point.iter().zip(&x).map(|(a, b)| a - b).collect();
            let dd = wdot(w, &d, &d);
            let fy = (prob.objective)(&p.point);
            let model = fx + wdot(w, &g, &d) - dd / (2.0 * eta);
            let slack = 1e-14 * (1.0 + fx.abs());
            // A projection that ran out of rounds is not the projection, so
            // the step is retried shorter, where the projection is easier.
            if p.converged && fy.is_finite() && fy >= fx - slack && fy >= model - slack {
                // Stationarity is read off the gradient mapping |d| / eta, so a
                // short step after backtracking is not mistaken for a fixed point.
                converged = dd.sqrt() * (eta0 / eta) <= cfg.tol * (1.0 + wnorm(w, &x));
                x = p.point;
                residual = p.residual;
                fx = fy;
                accepted = true;
                // Growing again right after a cut would repeat the failed trial.
                if attempt == 0 {
                    eta = (2.0 * eta).min(eta_max);
                }
                break;
            }
            eta *= 0.5;
        }
        if !accepted || converged {
            break;
        }
        // A window of steps without measurable gain: stop without claiming
        // convergence.
        if iterations % 100 == 0 {
            if fx - mark <= 1e-10 * (1.0 + fx.abs()) {
                break;
            }
            mark = fx;
        }
    }
    Ok(Track {
        value: (prob.objective)(&x),
        x,
        residual,
        iterations,
        converged,
    })
}

/// Best of `cfg.restarts` projected ascents.
///
/// Restart `r` draws its start from the ChaCha stream `r` of `cfg.seed`, so
/// the result of each restart does not depend on the others.
pub fn maximize_concave_projected(prob: &AscentProblem<'_>, cfg: &AscentConfig) -> Result<AscentResult> {
    let n = prob.set.dim();
    if cfg.restarts == 0 {
        return Err(RiskError::param("restarts", "need at least one restart"));
    }
    let mut best: Option<Track> = None;
    let mut restart_values = Vec::with_capacity(cfg.restarts);
    let mut total = 0;
    for r in 0..cfg.restarts {
        let start = if r == 0 {
            prob.start.clone().unwrap_or_else(|| vec![0.0; n])
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let s = prob.scale.max(1e-6);
            (0..n).map(|_| rng.gen_range(-s..=s)).collect()
        };
        let t = climb(prob, cfg, &start)?;
        total += t.iterations;
        restart_values.push(t.value);
        let better = match &best {
            None => true,
            Some(b) => t.value >= b.value || b.value.is_nan(),
        };
        if better {
            best = Some(t);
        }
    }
    let b = best.expect("at least one restart ran");
    Ok(AscentResult {
        x: b.x,
        value: b.value,
        residual: b.residual,
        iterations: total,
        converged: b.converged,
        restart_values,
    })
}
