//! Brute-force reference minimizers used to verify the solvers.

use crate::error::{Result, RiskError};

pub const MAX_GRID_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    pub argmin: Vec<f64>,
    pub value: f64,
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Exhaustive grid search over a box with `steps` points per axis, followed by
/// three sweeps of coordinatewise golden-section polish within one grid cell.
/// Infeasible points should evaluate to `+inf`.
pub fn grid_oracle(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], steps: usize) -> Result<GridMinimum> {
    let dim = lo.len();
    if dim == 0 || dim > MAX_GRID_DIM || hi.len() != dim {
        return Err(RiskError::param("dim", format!("grid oracle supports 1..={MAX_GRID_DIM} dimensions, got {dim}")));
    }
    if steps < 2 {
        return Err(RiskError::param("steps", "need at least two grid points per axis"));
    }
    let h: Vec<f64> = (0..dim).map(|k| (hi[k] - lo[k]) / (steps - 1) as f64).collect();
    let mut idx = vec![0usize; dim];
    let mut point = lo.to_vec();
    let mut best = GridMinimum {
        argmin: lo.to_vec(),
        value: f64::INFINITY,
    };
    loop {
        for k in 0..dim {
            point[k] = lo[k] + h[k] * idx[k] as f64;
        }
        let v = f(&point);
        if v < best.value {
            best.value = v;
            best.argmin.copy_from_slice(&point);
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < steps {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == dim {
                return Ok(polish(f, best, lo, hi, &h));
            }
        }
    }
}

fn polish(f: &dyn Fn(&[f64]) -> f64, mut best: GridMinimum, lo: &[f64], hi: &[f64], h: &[f64]) -> GridMinimum {
    if !best.value.is_finite() {
        return best;
    }
    for _ in 0..3 {
        for k in 0..best.argmin.len() {
            let a = (best.argmin[k] - h[k]).max(lo[k]);
            let b = (best.argmin[k] + h[k]).min(hi[k]);
            let base = best.argmin.clone();
            let g = |t: f64| {
                let mut probe = base.clone();
                probe[k] = t;
                f(&probe)
            };
            let (t, v) = golden_section(&g, a, b, 200);
            if v < best.value {
                best.value = v;
                best.argmin[k] = t;
            }
        }
    }
    best
}
