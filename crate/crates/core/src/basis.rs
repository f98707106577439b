//! Mean functions `η(x, θ) = f(x)ᵀθ` that are linear in the parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `f(x) = x`; the support rows are the regressors themselves.
    Identity,
    /// `f(x) = (1, x, x²)` for scalar `x`.
    Quadratic,
    /// `f(x) = (1, x₁, x₂, x₁x₂)`.
    Interaction,
}

impl Basis {
    /// Number of coordinates each support point must have, if fixed.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            Basis::Identity => None,
            Basis::Quadratic => Some(1),
            Basis::Interaction => Some(2),
        }
    }

    pub fn param_dim(&self, input_dim: usize) -> usize {
        match self {
            Basis::Identity => input_dim,
            Basis::Quadratic => 3,
            Basis::Interaction => 4,
        }
    }

    pub fn row(&self, x: &[f64]) -> Result<Vector> {
        if let Some(s) = self.input_dim() {
            if x.len() != s {
                return Err(Error::Dimension {
                    context: "basis input",
                    expected: s,
                    got: x.len(),
                });
            }
        }
        Ok(match self {
            Basis::Identity => Vector::from_column_slice(x),
            Basis::Quadratic => Vector::from_vec(vec![1.0, x[0], x[0] * x[0]]),
            Basis::Interaction => Vector::from_vec(vec![1.0, x[0], x[1], x[0] * x[1]]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows() {
        assert_eq!(Basis::Quadratic.row(&[-1.0]).unwrap().as_slice(), &[1.0, -1.0, 1.0]);
        assert_eq!(Basis::Interaction.row(&[1.0, 1.0]).unwrap().as_slice(), &[1.0; 4]);
        assert_eq!(Basis::Identity.row(&[1.0, 0.0]).unwrap().as_slice(), &[1.0, 0.0]);
        assert!(Basis::Quadratic.row(&[1.0, 2.0]).is_err());
    }
}
