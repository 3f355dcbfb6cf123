use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{probability_from_f64, rational_to_f64};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A probability vector over the alphabet `{0, …, len-1}`.
///
/// Each entry is held both as a double and as an exact rational. Entries
/// built from doubles are read as the simplest nearby fraction (see
/// [`probability_from_f64`]); entries parsed from strings are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    probs: Vec<f64>,
    exact: Vec<BigRational>,
}

impl FiniteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let exact = probs
            .iter()
            .map(|&p| probability_from_f64(p))
            .collect::<Result<Vec<_>>>()?;
        Self::checked(probs, exact)
    }

    pub fn from_exact(exact: Vec<BigRational>) -> Result<Self> {
        let probs = exact.iter().map(rational_to_f64).collect();
        Self::checked(probs, exact)
    }

    fn checked(probs: Vec<f64>, exact: Vec<BigRational>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("probs", "distribution over an empty alphabet"));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("probs", format!("entry {i} is {p}, must be a finite value >= 0")));
        }
        if exact.iter().any(|p| p.is_negative()) {
            return Err(Error::invalid("probs", "negative entry"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(
                "probs",
                format!("entries sum to {total}, expected 1 within {MASS_TOLERANCE:e}"),
            ));
        }
        Ok(FiniteDistribution { probs, exact })
    }

    pub fn point_mass(size: usize, symbol: usize) -> Result<Self> {
        if symbol >= size {
            return Err(Error::invalid("symbol", format!("{symbol} outside alphabet of size {size}")));
        }
        let mut probs = vec![0.0; size];
        probs[symbol] = 1.0;
        Self::new(probs)
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("size", "alphabet must be nonempty"));
        }
        let exact = vec![BigRational::new(1.into(), size.into()); size];
        Self::from_exact(exact)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn exact(&self) -> &[BigRational] {
        &self.exact
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    /// Whether `symbol` has strictly positive mass. No tolerance is applied.
    pub fn in_support(&self, symbol: usize) -> bool {
        !self.exact[symbol].is_zero()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.in_support(i)).collect()
    }
}

/// Empirical distribution of `x` over an alphabet of `alphabet_size`
/// symbols, computed exactly as counts over `n`.
pub fn empirical_distribution(x: &[usize], alphabet_size: usize) -> Result<FiniteDistribution> {
    if x.is_empty() {
        return Err(Error::invalid("x", "empirical distribution of an empty sequence"));
    }
    let mut counts = vec![0usize; alphabet_size];
    for (k, &s) in x.iter().enumerate() {
        if s >= alphabet_size {
            return Err(Error::invalid(
                "x",
                format!("symbol {s} at position {k} outside alphabet of size {alphabet_size}"),
            ));
        }
        counts[s] += 1;
    }
    let n = x.len();
    FiniteDistribution::from_exact(
        counts
            .into_iter()
            .map(|c| BigRational::new(c.into(), n.into()))
            .collect(),
    )
}
