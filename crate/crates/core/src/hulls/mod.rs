//! Monotone, numeraire-invariant and combined hulls of convex risk functions.
//!
//! For a risk function `f`, a numeraire `Pi` and the nonnegative orthant as
//! ordering cone:
//!
//! - monotone hull: `inf_{z >= 0} f(X - z)`
//! - invariant hull: `inf_a f(X - a Pi) - a`
//! - combined hull: `inf_{z >= 0, a} f(X - a Pi - z) - a`
//!
//! Each hull is also computed from its dual, the maximum of
//! `<X*, X> - f*(X*)` over `X* <= 0` (monotone part) and `<X*, Pi> = -1`
//! (invariant part), and the two are compared.

mod descriptor;
mod dual;
mod primal;
mod witness;

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, RiskError};
use crate::prob_space::{ProbSpace, RandomVariable};

pub use descriptor::{conjugate_exponent, RiskDescriptor, WITNESS_TOL};
pub use dual::{duality_gap, gap_passes, hull_dual, DualSolution, WEAK_DUALITY_TOL};
pub use primal::{
    combined_hull_primal, hull_primal, invariant_hull_primal, monotone_hull_primal, PrimalSolution,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HullMode {
    Combined,
    Monotone,
    Invariant,
}

impl HullMode {
    pub const ALL: [HullMode; 3] = [HullMode::Combined, HullMode::Monotone, HullMode::Invariant];

    pub fn has_cone(self) -> bool {
        matches!(self, HullMode::Combined | HullMode::Monotone)
    }

    pub fn has_numeraire(self) -> bool {
        matches!(self, HullMode::Combined | HullMode::Invariant)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HullMode::Combined => "combined",
            HullMode::Monotone => "monotone",
            HullMode::Invariant => "invariant",
        }
    }
}

impl fmt::Display for HullMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HullMode {
    type Err = RiskError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "combined" => Ok(HullMode::Combined),
            "monotone" | "monotone-only" | "monotone_only" => Ok(HullMode::Monotone),
            "invariant" | "invariant-only" | "invariant_only" => Ok(HullMode::Invariant),
            _ => Err(RiskError::param("mode", format!("unknown hull mode `{s}`"))),
        }
    }
}

/// The numeraire of the invariant part. The ordering cone is always the
/// nonnegative orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct HullSpec {
    numeraire: RandomVariable,
}

impl HullSpec {
    pub fn new(space: &ProbSpace, numeraire: RandomVariable) -> Result<Self> {
        space.check(&numeraire)?;
        if numeraire.values().iter().all(|v| *v == 0.0) {
            return Err(RiskError::param("numeraire", "must be nonzero"));
        }
        Ok(HullSpec { numeraire })
    }

    /// Constant numeraire `c` on `n` atoms.
    pub fn constant(space: &ProbSpace, c: f64) -> Result<Self> {
        HullSpec::new(space, RandomVariable::constant(space.len(), c))
    }

    pub fn numeraire(&self) -> &RandomVariable {
        &self.numeraire
    }

    pub fn is_constant(&self) -> bool {
        self.numeraire.is_constant()
    }
}

/// Open interval of `a` with `X - a Pi > 0` on every atom (possibly empty).
pub(crate) fn positivity_interval(x: &[f64], pi: &[f64]) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (xi, p) in x.iter().zip(pi) {
        if *p > 0.0 {
            hi = hi.min(xi / p);
        } else if *p < 0.0 {
            lo = lo.max(xi / p);
        } else if !(*xi > 0.0) {
            return (0.0, 0.0);
        }
    }
    (lo, hi)
}

/// Slater point for the combined hull: some `y` in the domain of `f` and some
/// `a` with `X - y - a Pi` strictly positive.
pub fn slater_check(space: &ProbSpace, desc: &RiskDescriptor, spec: &HullSpec, x: &RandomVariable) -> Result<bool> {
    slater_check_mode(space, desc, spec, x, HullMode::Combined)
}

/// Slater check for a given mode. Without the numeraire `a` is fixed to 0;
/// without the cone the condition reduces to `X - a Pi` in the domain
/// interior.
pub fn slater_check_mode(
    space: &ProbSpace,
    desc: &RiskDescriptor,
    spec: &HullSpec,
    x: &RandomVariable,
    mode: HullMode,
) -> Result<bool> {
    desc.validate()?;
    space.check(x)?;
    if desc.has_full_domain() {
        return Ok(true);
    }
    // The logarithmic domain is X > 0, open, so domain interior and strict
    // positivity of X - a Pi coincide.
    if !mode.has_numeraire() {
        return Ok(x.values().iter().all(|v| *v > 0.0));
    }
    let (lo, hi) = positivity_interval(x.values(), spec.numeraire().values());
    Ok(lo < hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_rejects_zero_numeraire() {
        let space = ProbSpace::uniform(3).unwrap();
        assert!(HullSpec::constant(&space, 0.0).is_err());
        assert!(HullSpec::new(&space, RandomVariable::new(vec![0.0, 1.0, 0.0]).unwrap()).is_ok());
    }

    #[test]
    fn slater_examples() {
        let space = ProbSpace::uniform(3).unwrap();
        let x = RandomVariable::new(vec![-2.0, 1.0, 0.5]).unwrap();
        let one = HullSpec::constant(&space, 1.0).unwrap();
        let dev = RiskDescriptor::lp_deviation(2.0, 1.0).unwrap();
        assert!(slater_check(&space, &dev, &one, &x).unwrap());
        let log = RiskDescriptor::Logarithmic;
        assert!(slater_check(&space, &log, &one, &x).unwrap());
        assert!(!slater_check_mode(&space, &log, &one, &x, HullMode::Monotone).unwrap());
        // a must satisfy a < -2 and a > 1/(-1): empty.
        let mixed = HullSpec::new(&space, RandomVariable::new(vec![1.0, -1.0, 0.0]).unwrap()).unwrap();
        assert!(!slater_check(&space, &log, &mixed, &x).unwrap());
        let zero_atom_negative = HullSpec::new(&space, RandomVariable::new(vec![1.0, 1.0, 0.0]).unwrap()).unwrap();
        let neg = RandomVariable::new(vec![1.0, 1.0, -0.5]).unwrap();
        assert!(!slater_check(&space, &log, &zero_atom_negative, &neg).unwrap());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("monotone".parse::<HullMode>().unwrap(), HullMode::Monotone);
        assert!("both".parse::<HullMode>().is_err());
        for m in HullMode::ALL {
            assert_eq!(m.as_str().parse::<HullMode>().unwrap(), m);
        }
    }
}
