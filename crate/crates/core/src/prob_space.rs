//! Finite atomic probability spaces and scenario vectors.
//!
//! Every atom carries strictly positive mass, so "almost everywhere"
//! statements become exact per-atom statements and essential bounds are plain
//! minima and maxima.

use crate::error::{Result, RiskError};

/// Slack allowed on the total mass before weights are rescaled.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Cumulative probabilities within this distance of the level count as ties.
pub const QUANTILE_TIE_TOL: f64 = 1e-12;

/// A probability space with `n` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbSpace {
    weights: Vec<f64>,
}

impl ProbSpace {
    /// Builds a space from atom probabilities.
    ///
    /// Weights summing to within [`WEIGHT_SUM_TOL`] of one are rescaled to sum
    /// to one; anything else is rejected, as are zero or negative masses.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(RiskError::InvalidWeights("no atoms".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(RiskError::InvalidWeights(format!("weight {i} is not finite")));
            }
            if w <= 0.0 {
                return Err(RiskError::InvalidWeights(format!(
                    "weight {i} = {w} is not strictly positive"
                )));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(RiskError::InvalidWeights(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(ProbSpace { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(RiskError::InvalidWeights("no atoms".into()));
        }
        Ok(ProbSpace {
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn check(&self, x: &RandomVariable) -> Result<()> {
        if x.len() != self.len() {
            return Err(RiskError::DimensionMismatch {
                expected: self.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn expectation(&self, x: &RandomVariable) -> Result<f64> {
        self.check(x)?;
        Ok(self.mean_of(x.values()))
    }

    pub fn pairing(&self, xstar: &RandomVariable, x: &RandomVariable) -> Result<f64> {
        self.check(xstar)?;
        self.check(x)?;
        Ok(self.dot(xstar.values(), x.values()))
    }

    /// Weighted `L^p` norm; `p = f64::INFINITY` gives the sup norm.
    pub fn norm_p(&self, x: &RandomVariable, p: f64) -> Result<f64> {
        self.check(x)?;
        if p.is_nan() || p < 1.0 {
            return Err(RiskError::param("p", format!("norm exponent {p} is below 1")));
        }
        Ok(self.norm_of(x.values(), p))
    }

    pub fn ess_inf(&self, x: &RandomVariable) -> Result<f64> {
        self.check(x)?;
        Ok(x.min())
    }

    pub fn ess_sup(&self, x: &RandomVariable) -> Result<f64> {
        self.check(x)?;
        Ok(x.max())
    }

    /// Value-at-risk `-inf{a : P(X <= a) > beta}`.
    ///
    /// Atoms with equal values are merged before the cumulative scan. The
    /// inequality is strict; cumulative sums within [`QUANTILE_TIE_TOL`] of
    /// `beta` are treated as equal to it.
    pub fn var_beta(&self, x: &RandomVariable, beta: f64) -> Result<f64> {
        self.check(x)?;
        check_level(beta)?;
        let mut atoms: Vec<(f64, f64)> = x
            .values()
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += w,
                _ => merged.push((v, w)),
            }
        }
        let mut cumulative = 0.0;
        for &(v, w) in &merged {
            cumulative += w;
            if cumulative > beta + QUANTILE_TIE_TOL {
                return Ok(-v);
            }
        }
        // Total mass is one and beta < 1, so the scan always returns above;
        // this only guards against rounding in the last partial sum.
        Ok(-merged.last().map(|a| a.0).unwrap_or(0.0))
    }

    pub(crate) fn mean_of(&self, v: &[f64]) -> f64 {
        self.weights.iter().zip(v).map(|(w, x)| w * x).sum()
    }

    pub(crate) fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    pub(crate) fn norm_of(&self, v: &[f64], p: f64) -> f64 {
        if p == f64::INFINITY {
            return v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        }
        if p == 1.0 {
            return self.weights.iter().zip(v).map(|(w, x)| w * x.abs()).sum();
        }
        if p == 2.0 {
            return self.dot(v, v).sqrt();
        }
        // Scale by the largest modulus so large entries do not overflow.
        let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if m == 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(v)
            .map(|(w, x)| w * (x.abs() / m).powf(p))
            .sum();
        m * s.powf(1.0 / p)
    }
}

pub(crate) fn check_level(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(RiskError::param("beta", format!("{beta} is outside (0, 1)")));
    }
    Ok(())
}

/// Scenario-indexed payoff vector. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    values: Vec<f64>,
}

impl RandomVariable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RiskError::InvalidVariable(format!(
                "entry {i} = {} is not finite",
                values[i]
            )));
        }
        Ok(RandomVariable { values })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        assert!(c.is_finite());
        RandomVariable { values: vec![c; n] }
    }

    pub fn zeros(n: usize) -> Self {
        RandomVariable::constant(n, 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        RandomVariable {
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn shift(&self, a: f64) -> Self {
        self.map(|x| x + a)
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|x| k * x)
    }

    /// `self + k * other`, componentwise.
    pub fn axpy(&self, k: f64, other: &RandomVariable) -> Self {
        assert_eq!(self.len(), other.len(), "axpy on variables of different length");
        RandomVariable {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + k * y)
                .collect(),
        }
    }

    /// Pointwise `self >= other`.
    pub fn dominates(&self, other: &RandomVariable) -> bool {
        self.len() == other.len() && self.values.iter().zip(&other.values).all(|(a, b)| a >= b)
    }
}

impl From<RandomVariable> for Vec<f64> {
    fn from(x: RandomVariable) -> Self {
        x.values
    }
}
