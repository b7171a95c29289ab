//! Ordinary least squares with a tiny ridge term.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const DEFAULT_RIDGE: f64 = 1e-8;

const REFINEMENT_STEPS: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearModel<T> {
    pub coefficients: Vec<T>,
    pub intercept: T,
}

impl<T: Scalar> LinearModel<T> {
    pub fn predict_row(&self, row: &[T]) -> T {
        row.iter()
            .zip(&self.coefficients)
            .fold(self.intercept, |acc, (&x, &b)| acc + x * b)
    }

    pub fn predict(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        if x.cols() != self.coefficients.len() {
            return Err(Error::InvalidInput(format!(
                "model has {} coefficients, matrix has {} columns",
                self.coefficients.len(),
                x.cols()
            )));
        }
        Ok((0..x.rows()).map(|r| self.predict_row(x.row(r))).collect())
    }
}

pub(crate) fn check_xy<T: Scalar>(x: &Matrix<T>, y: &[T]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} targets",
            x.rows(),
            y.len()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::Insufficient("empty training matrix".into()));
    }
    if !x.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(
            "training data contains NaN or infinity".into(),
        ));
    }
    Ok(())
}

/// Least squares on internally standardized columns. The ridge is added to
/// the diagonal of the standardized Gram matrix; constant columns get a zero
/// coefficient. The ridge grows tenfold if the factorization fails. Two
/// refinement steps against the unregularized system follow the solve.
pub fn fit_ols<T: Scalar>(x: &Matrix<T>, y: &[T], ridge: f64) -> Result<LinearModel<T>> {
    check_xy(x, y)?;
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "ridge must be finite and >= 0, got {ridge}"
        )));
    }
    let n = x.rows();
    let p = x.cols();
    let nf = n as f64;
    let ys: Vec<f64> = y.iter().map(|v| v.f64()).collect();
    let y_mean = ys.iter().sum::<f64>() / nf;

    let mut means = vec![0.0; p];
    let mut scales = vec![0.0; p];
    for j in 0..p {
        let col: Vec<f64> = (0..n).map(|r| x.get(r, j).f64()).collect();
        let m = col.iter().sum::<f64>() / nf;
        let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
        means[j] = m;
        scales[j] = (ss / nf).sqrt();
    }
    let active: Vec<usize> = (0..p)
        .filter(|&j| scales[j] > 1e-12 * (1.0 + means[j].abs()))
        .collect();

    let mut coefficients = vec![T::zero(); p];
    if !active.is_empty() {
        let q = active.len();
        let z = DMatrix::from_fn(n, q, |r, k| {
            let j = active[k];
            (x.get(r, j).f64() - means[j]) / scales[j]
        });
        let yc = DVector::from_iterator(n, ys.iter().map(|v| v - y_mean));
        let gram = z.tr_mul(&z);
        let rhs = z.tr_mul(&yc);
        let mut lambda = ridge;
        let beta = loop {
            let mut a = gram.clone();
            for k in 0..q {
                a[(k, k)] += lambda;
            }
            if let Some(ch) = a.cholesky() {
                let mut beta = ch.solve(&rhs);
                for _ in 0..REFINEMENT_STEPS {
                    let resid = &rhs - &gram * &beta;
                    beta += ch.solve(&resid);
                }
                break beta;
            }
            lambda = if lambda == 0.0 {
                1e-10 * nf
            } else {
                lambda * 10.0
            };
            if lambda > nf {
                return Err(Error::NonConvergence {
                    iterations: 0,
                    message: "normal equations could not be factorized".into(),
                });
            }
        };
        for (k, &j) in active.iter().enumerate() {
            coefficients[j] = T::of(beta[k] / scales[j]);
        }
    }
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&means)
            .map(|(b, m)| b.f64() * m)
            .sum::<f64>();
    let model = LinearModel {
        coefficients,
        intercept: T::of(intercept),
    };
    if !model.intercept.is_finite() || model.coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite(
            "OLS produced non-finite coefficients".into(),
        ));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.37 - 2.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let m = fit_ols(&Matrix::column_vector(&xs), &ys, DEFAULT_RIDGE).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-9);
        assert!((m.intercept - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_target_and_column() {
        let x = Matrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let m = fit_ols(&x, &[4.0f64, 4.0, 4.0], DEFAULT_RIDGE).unwrap();
        assert_eq!(m.coefficients[1], 0.0);
        assert!(m.coefficients[0].abs() < 1e-12);
        assert!((m.intercept - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nan() {
        let x = Matrix::column_vector(&[1.0, f64::NAN]);
        assert!(matches!(
            fit_ols(&x, &[1.0, 2.0], 1e-8),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn single_precision() {
        let xs: Vec<f32> = (0..10).map(|i| i as f32).collect();
        let ys: Vec<f32> = xs.iter().map(|x| 0.5 * x - 3.0).collect();
        let m = fit_ols(&Matrix::column_vector(&xs), &ys, DEFAULT_RIDGE).unwrap();
        assert!((m.coefficients[0] - 0.5).abs() < 1e-5);
        assert!((m.intercept + 3.0).abs() < 1e-4);
    }
}
