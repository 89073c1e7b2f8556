use std::ops::Deref;

use crate::error::{Error, Result};

/// A point in ℝⁿ chosen by a learner. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector(Vec<f64>);

impl DecisionVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("decision vector coordinate {bad}"),
                iterate: coords,
            });
        }
        Ok(Self(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Wraps coordinates already known to be finite (solver outputs that
    /// were checked along the way).
    pub(crate) fn from_finite(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self(coords)
    }
}

impl Deref for DecisionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for DecisionVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_inf() {
        assert!(DecisionVector::new(vec![0.0, f64::NAN]).is_err());
        assert!(DecisionVector::new(vec![f64::INFINITY]).is_err());
        assert_eq!(DecisionVector::new(vec![1.0, -2.0]).unwrap().len(), 2);
    }
}
