//! Convex optimization kernels at desk scale.

pub mod ascent;
pub mod ellipsoid;
pub mod oracle;
pub mod projection;
pub mod scalar;

pub use ascent::{maximize_concave_projected, AscentConfig, AscentProblem, AscentResult};
pub use ellipsoid::{minimize_convex, EllipsoidConfig, EllipsoidResult, Oracle, OracleAnswer};
pub use oracle::{golden_section, grid_oracle, GridMinimum};
pub use projection::{FeasibleSet, QBall};
pub use scalar::{minimize_scalar_convex, ScalarMinimum, ScalarProblem, ScalarStatus};

/// Objective level below which a minimization is declared unbounded.
pub const DIVERGENCE_LEVEL: f64 = -1e8;

pub(crate) fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a.iter().zip(b)).map(|(p, (x, y))| p * x * y).sum()
}

pub(crate) fn wnorm(w: &[f64], a: &[f64]) -> f64 {
    wdot(w, a, a).sqrt()
}

pub(crate) fn wmean(w: &[f64], a: &[f64]) -> f64 {
    w.iter().zip(a).map(|(p, x)| p * x).sum()
}
