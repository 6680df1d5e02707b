//! Linear fallback learners: ridge regression and L2-regularized logistic
//! regression. Both include an unpenalized intercept and solve their normal
//! equations by Cholesky factorization, so fits are exactly deterministic.

use crate::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use ndarray::Array2;

#[derive(Debug, Clone)]
pub(crate) struct LinearModel {
    intercept: f64,
    coefs: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut out = self.intercept;
        for (c, v) in self.coefs.iter().zip(x) {
            out += c * v;
        }
        out
    }
}

/// Shared factorization for ridge fits that reuse one design matrix with many
/// target vectors (one conditional-density regression per grid point).
pub(crate) struct RidgeSolver {
    /// n x (p+1) design with a leading intercept column.
    design: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl RidgeSolver {
    pub fn new(features: &Array2<f64>, penalty: f64) -> Result<Self> {
        let n = features.nrows();
        let p = features.ncols();
        if n == 0 {
            return Err(Error::Data("ridge fit on an empty training set".into()));
        }
        let design = DMatrix::from_fn(n, p + 1, |i, j| {
            if j == 0 {
                1.0
            } else {
                features[(i, j - 1)]
            }
        });
        let mut gram = design.transpose() * &design;
        for j in 1..=p {
            gram[(j, j)] += penalty;
        }
        let chol = Cholesky::new(gram).ok_or_else(|| {
            Error::Numeric("ridge normal equations are not positive definite".into())
        })?;
        Ok(Self { design, chol })
    }

    pub fn solve(&self, targets: &[f64]) -> Result<LinearModel> {
        if targets.len() != self.design.nrows() {
            return Err(Error::Data(format!(
                "ridge targets have {} rows, design has {}",
                targets.len(),
                self.design.nrows()
            )));
        }
        let y = DVector::from_column_slice(targets);
        let rhs = self.design.transpose() * y;
        let beta = self.chol.solve(&rhs);
        Ok(LinearModel {
            intercept: beta[0],
            coefs: beta.as_slice()[1..].to_vec(),
        })
    }
}

pub(crate) fn fit_ridge(
    features: &Array2<f64>,
    targets: &[f64],
    penalty: f64,
) -> Result<LinearModel> {
    RidgeSolver::new(features, penalty)?.solve(targets)
}

#[derive(Debug, Clone)]
pub(crate) struct LogisticModel {
    intercept: f64,
    coefs: Vec<f64>,
}

impl LogisticModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut eta = self.intercept;
        for (c, v) in self.coefs.iter().zip(x) {
            eta += c * v;
        }
        sigmoid(eta)
    }
}

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta.clamp(-30.0, 30.0)).exp())
}

/// Newton iterations for the penalized logistic log-likelihood. The L2 term
/// (intercept excluded) keeps the Hessian positive definite even under
/// complete separation.
pub(crate) fn fit_logistic(
    features: &Array2<f64>,
    targets: &[f64],
    penalty: f64,
) -> Result<LogisticModel> {
    let n = features.nrows();
    let p = features.ncols();
    if n == 0 {
        return Err(Error::Data("logistic fit on an empty training set".into()));
    }
    if targets.len() != n {
        return Err(Error::Data(format!(
            "logistic targets have {} rows, design has {n}",
            targets.len()
        )));
    }
    let design = DMatrix::from_fn(n, p + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            features[(i, j - 1)]
        }
    });
    let y = DVector::from_column_slice(targets);
    let mut beta = DVector::zeros(p + 1);
    for _ in 0..50 {
        let eta = &design * &beta;
        let mu = eta.map(sigmoid);
        let w = mu.map(|m: f64| (m * (1.0 - m)).max(1e-10));
        // Gradient and Hessian of the penalized log-likelihood.
        let mut grad = design.transpose() * (&y - &mu);
        let mut hess = design.transpose() * DMatrix::from_diagonal(&w) * &design;
        for j in 1..=p {
            grad[j] -= penalty * beta[j];
            hess[(j, j)] += penalty;
        }
        let chol = Cholesky::new(hess).ok_or_else(|| {
            Error::Numeric("logistic Hessian is not positive definite".into())
        })?;
        let step = chol.solve(&grad);
        beta += &step;
        if step.amax() < 1e-10 {
            break;
        }
    }
    Ok(LogisticModel {
        intercept: beta[0],
        coefs: beta.as_slice()[1..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridge_recovers_linear_signal() {
        // y = 1 + 2x with a tiny penalty: coefficients close to truth.
        let n = 200;
        let features = Array2::from_shape_fn((n, 1), |(i, _)| i as f64 / n as f64);
        let targets: Vec<f64> = (0..n).map(|i| 1.0 + 2.0 * (i as f64 / n as f64)).collect();
        let model = fit_ridge(&features, &targets, 1e-8).unwrap();
        assert!((model.intercept - 1.0).abs() < 1e-5);
        assert!((model.coefs[0] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn ridge_constant_target_gives_constant_prediction() {
        let features = Array2::from_shape_fn((20, 3), |(i, j)| (i * 3 + j) as f64);
        let targets = vec![2.0; 20];
        let model = fit_ridge(&features, &targets, 1.0).unwrap();
        assert!((model.predict(&[100.0, -3.0, 0.5]) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn logistic_monotone_in_signal() {
        let n = 400;
        let features = Array2::from_shape_fn((n, 1), |(i, _)| -2.0 + 4.0 * i as f64 / n as f64);
        let targets: Vec<f64> = (0..n)
            .map(|i| f64::from(-2.0 + 4.0 * (i as f64) / (n as f64) > 0.0))
            .collect();
        let model = fit_logistic(&features, &targets, 1e-3).unwrap();
        assert!(model.predict(&[-1.5]) < 0.1);
        assert!(model.predict(&[1.5]) > 0.9);
        assert!(model.predict(&[-1.0]) < model.predict(&[1.0]));
    }
}
