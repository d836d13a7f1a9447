use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceSpec;
use crate::error::{domain, Result};
use crate::noise::ou_variance_sum;
use crate::spectral::lambda;

/// Smooth test functionals with globally bounded first and second derivatives.
///
/// * `CosineMode`: `phi(x) = cos(<x, h_k>)`; `|D phi| <= 1`, `|D^2 phi| <= 1`.
/// * `GaussianNorm`: `phi(x) = exp(-a ||x||^2)`; `|D phi| <= sqrt(2a/e)`,
///   `|D^2 phi| <= 2a`.
/// * `LinearBounded`: `phi(x) = tanh(<x, h_k>)`; `|D phi| <= 1`,
///   `|D^2 phi| <= 4 / (3 sqrt 3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunctional {
    CosineMode { k: usize },
    GaussianNorm { a: f64 },
    LinearBounded { k: usize },
}

impl TestFunctional {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TestFunctional::CosineMode { k } | TestFunctional::LinearBounded { k } if k == 0 => {
                domain("test functional mode index must be >= 1")
            }
            TestFunctional::GaussianNorm { a } if !(a >= 0.0 && a.is_finite()) => {
                domain(format!("Gaussian weight must be >= 0, got {a}"))
            }
            _ => Ok(()),
        }
    }

    /// Evaluates on sine coefficients (modes beyond `x.len()` are zero).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mode = |k: usize| x.get(k - 1).copied().unwrap_or(0.0);
        match *self {
            TestFunctional::CosineMode { k } => mode(k).cos(),
            TestFunctional::GaussianNorm { a } => (-a * x.iter().map(|v| v * v).sum::<f64>()).exp(),
            TestFunctional::LinearBounded { k } => mode(k).tanh(),
        }
    }
}

/// `E exp(-a ||Y_M(t)||^2) = prod_k (1 + 2 a sigma_k^2(t))^{-1/2}` for the
/// stochastic convolution started at zero, `sigma_k^2` its mode variances.
pub fn gaussian_norm_expectation(q: &CovarianceSpec, t: f64, m: usize, a: f64) -> Result<f64> {
    // validates diagonality and t
    ou_variance_sum(q, t, m)?;
    let d = q.diag().expect("checked diagonal");
    Ok(d.iter()
        .take(m)
        .enumerate()
        .map(|(i, v)| {
            let l = lambda(i + 1);
            let s2 = v * (-(-2.0 * l * t).exp_m1()) / (2.0 * l);
            (1.0 + 2.0 * a * s2).powf(-0.5)
        })
        .product())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        assert_eq!(TestFunctional::CosineMode { k: 1 }.eval(&[0.0, 5.0]), 1.0);
        assert_eq!(TestFunctional::CosineMode { k: 3 }.eval(&[1.0]), 1.0);
        assert!((TestFunctional::GaussianNorm { a: 0.5 }.eval(&[1.0, 1.0]) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(TestFunctional::LinearBounded { k: 2 }.eval(&[3.0, 0.0]), 0.0);
        assert!(TestFunctional::CosineMode { k: 0 }.validate().is_err());
        assert!(TestFunctional::GaussianNorm { a: -1.0 }.validate().is_err());
    }

    #[test]
    fn gaussian_expectation_limits() {
        let q = CovarianceSpec::diagonal(vec![1.0, 0.5]).unwrap();
        assert_eq!(gaussian_norm_expectation(&q, 0.0, 2, 1.0).unwrap(), 1.0);
        assert_eq!(gaussian_norm_expectation(&q, 1.0, 2, 0.0).unwrap(), 1.0);
        let v = gaussian_norm_expectation(&q, 1e3, 1, 1.0).unwrap();
        let s2 = 1.0 / (2.0 * lambda(1));
        assert!((v - (1.0 + 2.0 * s2).powf(-0.5)).abs() < 1e-15);
    }
}
