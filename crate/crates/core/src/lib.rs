//! Scenario-based optimized certainty equivalent (OCE) risk measures.
//!
//! The crate models random variables on a finite probability space and
//! provides:
//!
//! * [`utility`]: normalized convex nonincreasing utilities with exact
//!   conjugates, subdifferentials and recession functions;
//! * [`oce`]: the risk measure `rho_v(X) = inf_l { l + E v(X + l) }`, its
//!   conjugate and subdifferential, and the CVaR, entropic and worst-case
//!   specializations;
//! * [`hulls`]: monotone and numeraire-invariant hulls of a catalog of risk
//!   functions, evaluated primally and through their dual representation;
//! * [`solver`]: the small convex kernels behind both.

pub mod cli;
pub mod error;
pub mod ext;
pub mod hulls;
pub mod oce;
pub mod prob_space;
pub mod solver;
pub mod utility;

pub use error::{Result, RiskError};
pub use ext::{ExtReal, Interval};
pub use prob_space::{ProbSpace, RandomVariable};
pub use utility::{PiecewiseLinear, Utility};
