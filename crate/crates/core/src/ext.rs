//! Extended reals and closed real intervals.
//!
//! Infinite interval endpoints are stored as IEEE infinities. These are exact
//! symbols here: weighted sums with positive weights keep `-inf`/`+inf`
//! unchanged, and the only undefined combination, `inf - inf`, cannot occur
//! because a nonempty interval never has `lo = +inf` or `hi = -inf`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg};

/// A value in `R ∪ {-inf, +inf}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps IEEE infinities onto the symbolic variants. NaN is a program error.
    pub fn from_f64(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN cannot be represented as an extended real");
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_pos_inf(self) -> bool {
        matches!(self, ExtReal::PosInf)
    }

    pub fn is_neg_inf(self) -> bool {
        matches!(self, ExtReal::NegInf)
    }

    /// Sum following convex-analysis conventions; `+inf + -inf` is rejected.
    pub fn checked_add(self, other: ExtReal) -> Option<ExtReal> {
        use ExtReal::*;
        match (self, other) {
            (PosInf, NegInf) | (NegInf, PosInf) => None,
            (PosInf, _) | (_, PosInf) => Some(PosInf),
            (NegInf, _) | (_, NegInf) => Some(NegInf),
            (Finite(a), Finite(b)) => Some(ExtReal::from_f64(a + b)),
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, other: ExtReal) -> ExtReal {
        self.checked_add(other)
            .expect("undefined extended-real sum (+inf) + (-inf)")
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;

    fn add(self, other: f64) -> ExtReal {
        self + ExtReal::from_f64(other)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::Finite(x) => ExtReal::Finite(-x),
        }
    }
}

/// Multiplication by a strictly positive real keeps infinities.
impl Mul<f64> for ExtReal {
    type Output = ExtReal;

    fn mul(self, k: f64) -> ExtReal {
        assert!(k > 0.0, "extended reals are only scaled by positive factors");
        match self {
            ExtReal::Finite(x) => ExtReal::from_f64(x * k),
            other => other,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::PosInf => write!(f, "+inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
        }
    }
}

/// Closed, possibly unbounded, possibly empty subinterval of the reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
    empty: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(!lo.is_nan() && !hi.is_nan(), "interval endpoints must not be NaN");
        if lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            Interval::empty()
        } else {
            Interval {
                lo,
                hi,
                empty: false,
            }
        }
    }

    pub fn point(x: f64) -> Self {
        Interval::new(x, x)
    }

    pub fn empty() -> Self {
        Interval {
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
            empty: true,
        }
    }

    pub fn real_line() -> Self {
        Interval::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn lower(&self) -> ExtReal {
        ExtReal::from_f64(self.lo)
    }

    pub fn upper(&self) -> ExtReal {
        ExtReal::from_f64(self.hi)
    }

    pub fn is_degenerate(&self) -> bool {
        !self.empty && self.lo == self.hi
    }

    pub fn width(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        !self.empty && self.lo <= x && x <= self.hi
    }

    /// Membership with an absolute slack on both ends.
    pub fn contains_tol(&self, x: f64, tol: f64) -> bool {
        !self.empty && self.lo - tol <= x && x <= self.hi + tol
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        if self.empty || other.empty {
            return Interval::empty();
        }
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.empty || (!self.empty && self.lo <= other.lo && other.hi <= self.hi)
    }

    /// Minkowski sum.
    pub fn add(&self, other: &Interval) -> Interval {
        if self.empty || other.empty {
            return Interval::empty();
        }
        Interval::new(self.lo + other.lo, self.hi + other.hi)
    }

    pub fn shift(&self, c: f64) -> Interval {
        if self.empty {
            return *self;
        }
        Interval::new(self.lo + c, self.hi + c)
    }

    /// Scaling by a strictly positive factor.
    pub fn scale(&self, k: f64) -> Interval {
        assert!(k > 0.0);
        if self.empty {
            return *self;
        }
        Interval::new(self.lo * k, self.hi * k)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        assert!(!self.empty, "cannot clamp into an empty interval");
        x.max(self.lo).min(self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return write!(f, "{{}}");
        }
        if self.lo == self.hi {
            return write!(f, "{{{}}}", self.lo);
        }
        let l = if self.lo == f64::NEG_INFINITY {
            "(-inf".to_string()
        } else {
            format!("[{}", self.lo)
        };
        let r = if self.hi == f64::INFINITY {
            "+inf)".to_string()
        } else {
            format!("{}]", self.hi)
        };
        write!(f, "{l}, {r}")
    }
}
