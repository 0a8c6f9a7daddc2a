//! Exact maximization of a linear functional over the witness set:
//!
//! ```text
//! max E(g y)  s.t.  E|y|^q <= 1,  y <= cap,  y - E(y) <= h
//! ```
//!
//! for `1 < q <= inf`. With the mean `m = E(y)` held fixed the bounds merge
//! into `y <= b = min(cap, m + h)` and the mean is enforced by a multiplier
//! `alpha`. For the ball multiplier `theta` the maximizer is
//! `y_i = min(b, sign(u_i) (|u_i| / theta)^(1 / (q - 1)))` with
//! `u = g - alpha`. The ball mass falls with `theta`, the mean falls with
//! `alpha`, and the optimal value is concave in `m`, so every level is a
//! scalar search. For `q = inf` the ball is a box and the maximizer sits at
//! its corners, except for one atom fixed by the mean. An affine cut
//! `E(t y) = r` adds one more multiplier on top.

use crate::solver::wdot;

const ITERS: usize = 200;

struct Ball<'a> {
    w: &'a [f64],
    q: f64,
}

impl Ball<'_> {
    fn mass(&self, y: &[f64]) -> f64 {
        self.w.iter().zip(y).map(|(p, v)| p * v.abs().powf(self.q)).sum()
    }

    fn at(&self, u: &[f64], theta: f64, b: f64) -> Vec<f64> {
        let r = 1.0 / (self.q - 1.0);
        u.iter()
            .map(|ui| {
                let free = if *ui == 0.0 { 0.0 } else { ui.signum() * (ui.abs() / theta).powf(r) };
                free.min(b)
            })
            .collect()
    }

    /// Ball multiplier at which atom `u` starts or stops touching the cut
    /// `b`, when that happens at a finite positive `theta`.
    fn threshold(&self, u: f64, b: f64) -> Option<f64> {
        if u > 0.0 && b > 0.0 && b.is_finite() {
            Some(u / b.powf(self.q - 1.0))
        } else if u < 0.0 && b < 0.0 {
            Some(-u / (-b).powf(self.q - 1.0))
        } else {
            None
        }
    }

    /// Maximizer of `E(u y)` over the ball cut by `y <= b`; `None` when the
    /// cut misses the ball.
    ///
    /// The mass of `at(u, theta, b)` does not increase with `theta` and, with
    /// the set of cut atoms fixed, equals `C + theta^(-p) S` for the
    /// conjugate exponent `p`. So the multiplier is found segment by segment
    /// between the thresholds.
    fn argmax(&self, u: &[f64], b: f64) -> Option<Vec<f64>> {
        if self.q == f64::INFINITY {
            // The ball is the box [-1, 1]; every atom sits at an end of the cut box.
            if b < -1.0 {
                return None;
            }
            let top = b.min(1.0);
            return Some(u.iter().map(|v| if *v > 0.0 { top } else if *v < 0.0 { -1.0 } else { top.min(0.0) }).collect());
        }
        let floor = b.min(0.0);
        if floor.abs().powf(self.q) > 1.0 {
            return None;
        }
        if b.is_finite() && u.iter().all(|v| *v >= 0.0) {
            let corner: Vec<f64> = u.iter().map(|v| if *v > 0.0 { b } else { floor }).collect();
            if self.mass(&corner) <= 1.0 {
                return Some(corner);
            }
        }
        let p = self.q / (self.q - 1.0);
        let mut cuts: Vec<f64> = u.iter().filter_map(|ui| self.threshold(*ui, b)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mass_at = |theta: f64| self.mass(&self.at(u, theta, b));
        let j = cuts.partition_point(|c| mass_at(*c) > 1.0);
        let lo = if j == 0 { 0.0 } else { cuts[j - 1] };
        let hi = cuts.get(j).copied().unwrap_or(f64::INFINITY);
        let probe = match (lo > 0.0, hi.is_finite()) {
            (true, true) => (lo * hi).sqrt(),
            (true, false) => 2.0 * lo,
            (false, true) => 0.5 * hi,
            (false, false) => 1.0,
        };
        let y = self.at(u, probe, b);
        let (mut fixed, mut free) = (0.0, 0.0);
        for ((wi, ui), yi) in self.w.iter().zip(u).zip(&y) {
            if *yi == b {
                fixed += wi * b.abs().powf(self.q);
            } else {
                free += wi * ui.abs().powf(p);
            }
        }
        let mut theta = if free > 0.0 && fixed < 1.0 {
            (free / (1.0 - fixed)).powf(1.0 / p).clamp(lo, hi)
        } else {
            probe
        };
        if theta == 0.0 {
            theta = probe;
        }
        // Rounding can leave the mass a few ulps above 1.
        let mut bump = 4.0 * f64::EPSILON;
        for _ in 0..ITERS {
            let y = self.at(u, theta, b);
            if self.mass(&y) <= 1.0 {
                return Some(y);
            }
            theta *= 1.0 + bump;
            bump *= 2.0;
        }
        None
    }

    /// Maximizer of `E(g y)` over the ball cut by `y <= b` and `E(y) = m`.
    fn argmax_with_mean(&self, g: &[f64], b: f64, m: f64) -> Option<Vec<f64>> {
        let w = self.w;
        let eval = |alpha: f64| -> Option<(Vec<f64>, f64)> {
            let u: Vec<f64> = g.iter().map(|v| v - alpha).collect();
            let y = self.argmax(&u, b)?;
            let mean = w.iter().zip(&y).map(|(p, v)| p * v).sum::<f64>();
            Some((y, mean))
        };
        let (y0, f0) = eval(0.0)?;
        if f0 == m {
            return Some(y0);
        }
        // The mean falls as alpha grows; bracket m between `a` (above) and `c` (below).
        let up = f0 > m;
        let mut step = 1.0_f64;
        let (mut a, mut ya, mut fa) = (0.0, y0.clone(), f0);
        let (mut c, mut yc, mut fc) = (0.0, y0, f0);
        loop {
            let probe = if up { c + step } else { a - step };
            let (y, f) = eval(probe)?;
            if up {
                (a, ya, fa) = (c, yc, fc);
                (c, yc, fc) = (probe, y, f);
                if fc <= m {
                    break;
                }
            } else {
                (c, yc, fc) = (a, ya, fa);
                (a, ya, fa) = (probe, y, f);
                if fa >= m {
                    break;
                }
            }
            step *= 2.0;
            if step > 1e12 {
                return Some(if up { yc } else { ya });
            }
        }
        // Regula falsi with the Illinois rule; `ga` and `gc` are the possibly
        // halved residuals used for interpolation.
        let (mut ga, mut gc) = (fa - m, fc - m);
        let mut kept = 0i8;
        for _ in 0..ITERS {
            if c - a <= 1e-14 * (1.0 + a.abs().max(c.abs())) || fa - fc <= 1e-15 * (1.0 + m.abs()) {
                break;
            }
            let mut mid = a + ga / (ga - gc) * (c - a);
            if !(mid > a && mid < c) {
                mid = 0.5 * (a + c);
            }
            let (y, f) = eval(mid)?;
            if f == m {
                return Some(y);
            }
            if f > m {
                (a, ya, fa, ga) = (mid, y, f, f - m);
                if kept == 1 {
                    gc *= 0.5;
                }
                kept = 1;
            } else {
                (c, yc, fc, gc) = (mid, y, f, f - m);
                if kept == -1 {
                    ga *= 0.5;
                }
                kept = -1;
            }
        }
        if fa == fc {
            return Some(ya);
        }
        // Both ends lie in the cut ball, and so does the blend with mean m.
        let t = ((fa - m) / (fa - fc)).clamp(0.0, 1.0);
        Some(ya.iter().zip(&yc).map(|(p, v)| p + t * (v - p)).collect())
    }
}

/// Maximizer of `E(g y)` over `{E|y|^q <= 1, y <= cap, y - E(y) <= h}`,
/// the last constraint only when `centered` is `Some(h)`.
pub(super) fn linear_max(w: &[f64], g: &[f64], q: f64, cap: f64, centered: Option<f64>) -> Option<Vec<f64>> {
    if !(q > 1.0) {
        return None;
    }
    let ball = Ball { w, q };
    let h = match centered {
        None => return ball.argmax(g, cap),
        Some(h) => h,
    };
    // |E(y)| <= 1 on the ball, and E(y) <= cap on the cut.
    let (mut lo, mut hi) = (-1.0, cap.min(1.0));
    let value = |m: f64| -> Option<(Vec<f64>, f64)> {
        let y = ball.argmax_with_mean(g, cap.min(m + h), m)?;
        let v = wdot(w, g, &y);
        Some((y, v))
    };
    let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = value(x1)?;
    let mut f2 = value(x2)?;
    let mut best = if f1.1 >= f2.1 { f1.clone() } else { f2.clone() };
    for _ in 0..ITERS {
        if hi - lo <= 1e-12 {
            break;
        }
        if f1.1 >= f2.1 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = value(x1)?;
            if f1.1 > best.1 {
                best = f1.clone();
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = value(x2)?;
            if f2.1 > best.1 {
                best = f2.clone();
            }
        }
    }
    for m in [lo, hi] {
        let cand = value(m)?;
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Some(best.0)
}

/// Maximizer of `E(g y)` over the set of [`linear_max`] cut by
/// `E(t y) = r`. The cut is priced by a multiplier `beta`: `E(t y)` falls as
/// `beta` grows when `y` maximizes `E((g - beta t) y)`, and the two
/// maximizers bracketing `r` are blended. `None` when no finite `beta`
/// brackets `r`, which includes `r` outside the range of `E(t y)`.
pub(super) fn linear_max_affine(
    w: &[f64],
    g: &[f64],
    q: f64,
    cap: f64,
    centered: Option<f64>,
    t: &[f64],
    r: f64,
) -> Option<Vec<f64>> {
    let eval = |beta: f64| -> Option<(Vec<f64>, f64)> {
        let u: Vec<f64> = g.iter().zip(t).map(|(gi, ti)| gi - beta * ti).collect();
        let y = linear_max(w, &u, q, cap, centered)?;
        let h = wdot(w, t, &y);
        Some((y, h))
    };
    let (y0, h0) = eval(0.0)?;
    if h0 == r {
        return Some(y0);
    }
    let up = h0 > r;
    let mut step = 1.0_f64;
    let (mut a, mut ya, mut ha) = (0.0, y0.clone(), h0);
    let (mut c, mut yc, mut hc) = (0.0, y0, h0);
    loop {
        let probe = if up { c + step } else { a - step };
        let (y, h) = eval(probe)?;
        if up {
            (a, ya, ha) = (c, yc, hc);
            (c, yc, hc) = (probe, y, h);
            if hc <= r {
                break;
            }
        } else {
            (c, yc, hc) = (a, ya, ha);
            (a, ya, ha) = (probe, y, h);
            if ha >= r {
                break;
            }
        }
        step *= 2.0;
        if step > 1e12 {
            return None;
        }
    }
    let (mut ga, mut gc) = (ha - r, hc - r);
    let mut kept = 0i8;
    for _ in 0..ITERS {
        if c - a <= 1e-14 * (1.0 + a.abs().max(c.abs())) || ha - hc <= 1e-15 * (1.0 + r.abs()) {
            break;
        }
        let mut mid = a + ga / (ga - gc) * (c - a);
        if !(mid > a && mid < c) {
            mid = 0.5 * (a + c);
        }
        let (y, h) = eval(mid)?;
        if h == r {
            return Some(y);
        }
        if h > r {
            (a, ya, ha, ga) = (mid, y, h, h - r);
            if kept == 1 {
                gc *= 0.5;
            }
            kept = 1;
        } else {
            (c, yc, hc, gc) = (mid, y, h, h - r);
            if kept == -1 {
                ga *= 0.5;
            }
            kept = -1;
        }
    }
    if ha == hc {
        return Some(ya);
    }
    let s = ((ha - r) / (ha - hc)).clamp(0.0, 1.0);
    Some(ya.iter().zip(&yc).map(|(p, v)| p + s * (v - p)).collect())
}
