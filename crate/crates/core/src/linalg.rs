//! Small dense symmetric-matrix helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Condition numbers above this flag an information matrix as numerically singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}

/// Eigenvalues of the symmetric part, ascending.
pub fn eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn is_psd(m: &Matrix, tol: f64) -> bool {
    if !is_symmetric(m, 1e-9) {
        return false;
    }
    let ev = eigenvalues(m);
    let top = ev.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    ev.first().is_none_or(|&lo| lo >= -tol * top)
}

pub fn condition_number(m: &Matrix) -> f64 {
    let ev = eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky factor.
pub fn spd_inverse(m: &Matrix, what: &str) -> Result<Matrix> {
    let cond = condition_number(m);
    if !(cond.is_finite() && cond <= SINGULAR_CONDITION) {
        return Err(Error::Singular(format!("{what} has condition number {cond:.3e}")));
    }
    let chol = symmetrize(m)
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))?;
    Ok(symmetrize(&chol.inverse()))
}

/// Serde adapter writing a matrix as a list of rows.
pub mod rows {
    use super::Matrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Matrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("matrix rows have unequal lengths"));
        }
        Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
    }
}

pub fn quad_form(m: &Matrix, x: &Vector) -> f64 {
    x.dot(&(m * x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_spd() {
        let m = Matrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 2.0]);
        let inv = spd_inverse(&m, "m").unwrap();
        let id = &m * &inv;
        assert!((id - Matrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(spd_inverse(&m, "m"), Err(Error::Singular(_))));
        assert!(is_psd(&m, 1e-12));
        assert!(!is_psd(&Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]), 1e-12));
    }
}
