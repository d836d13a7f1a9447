//! Dirichlet-Laplacian eigenbasis on (0, 1).
//!
//! Fields are stored as coefficients in the orthonormal basis
//! `h_k = sqrt(2) sin(k pi z)`, so every norm below is Euclidean in the
//! coefficient vector. Index `i` of a coefficient vector holds mode `k = i + 1`.

pub mod dst;

use std::f64::consts::PI;

use crate::error::{domain, LabError, Result};

pub use dst::SineTransform;

/// Default grid oversampling used for sup-norm estimates.
pub const DEFAULT_SUP_OVERSAMPLING: usize = 4;

/// Eigenvalue `(pi k)^2` of `-A` on `h_k`.
pub fn eigenvalue(k: i64) -> Result<f64> {
    if k < 1 {
        return domain(format!("eigenvalue index must be >= 1, got {k}"));
    }
    Ok(lambda(k as usize))
}

/// Unchecked `(pi k)^2` for internal loops (`k >= 1`).
#[inline]
pub(crate) fn lambda(k: usize) -> f64 {
    let x = PI * k as f64;
    x * x
}

/// An element of `H_M = span(h_1, ..., h_M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(LabError::Validation("truncation M must be >= 1".into()));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(LabError::Validation(format!(
                "coefficient of mode {} is not finite",
                i + 1
            )));
        }
        Ok(SpectralField { coeffs })
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        SpectralField { coeffs }
    }

    pub fn zeros(m: usize) -> Self {
        assert!(m >= 1);
        SpectralField { coeffs: vec![0.0; m] }
    }

    /// The basis vector `h_k` inside `H_M`.
    pub fn basis(k: usize, m: usize) -> Result<Self> {
        if k < 1 || k > m {
            return domain(format!("basis index {k} outside 1..={m}"));
        }
        let mut f = SpectralField::zeros(m);
        f.coeffs[k - 1] = 1.0;
        Ok(f)
    }

    /// Truncation level `M`.
    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient `<x, h_k>`; zero beyond the truncation.
    pub fn mode(&self, k: usize) -> f64 {
        if k >= 1 && k <= self.coeffs.len() {
            self.coeffs[k - 1]
        } else {
            0.0
        }
    }

    /// `P_M x`: truncation or zero-padding to `m` modes.
    pub fn project(&self, m: usize) -> SpectralField {
        assert!(m >= 1);
        let mut c = vec![0.0; m];
        let n = m.min(self.m());
        c[..n].copy_from_slice(&self.coeffs[..n]);
        SpectralField { coeffs: c }
    }

    pub fn dot(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `x - y` on the larger of the two truncations.
    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let m = self.m().max(other.m());
        let c = (1..=m).map(|k| self.mode(k) - other.mode(k)).collect();
        SpectralField { coeffs: c }
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        SpectralField {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `(-A)^alpha x`; negative powers act as the smoothing adjoint extension.
    pub fn apply_fractional_power(&self, alpha: f64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * lambda(i + 1).powf(alpha))
            .collect();
        SpectralField { coeffs }
    }

    /// `e^{tA} x`.
    pub fn semigroup_apply(&self, t: f64) -> Result<SpectralField> {
        if !(t >= 0.0) {
            return domain(format!("semigroup time must be >= 0, got {t}"));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * (-lambda(i + 1) * t).exp())
            .collect();
        Ok(SpectralField { coeffs })
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `||(-A)^alpha x||_{L2}`.
    pub fn h_alpha_norm(&self, alpha: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let w = lambda(i + 1).powf(alpha) * c;
                w * w
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `||grad x||^2 = ||(-A)^{1/2} x||^2 = sum (pi k)^2 a_k^2`.
    pub fn gradient_norm_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| lambda(i + 1) * c * c)
            .sum()
    }

    /// Point values on the `grid`-node interior grid.
    pub fn to_grid(&self, grid: usize) -> Result<GridField> {
        if grid < 1 {
            return domain("grid size must be >= 1");
        }
        if grid < self.m() {
            return domain(format!("grid size {grid} below truncation {}", self.m()));
        }
        let mut plan = SineTransform::new(grid);
        let mut values = vec![0.0; grid];
        plan.synthesize(&self.coeffs, &mut values);
        Ok(GridField { values })
    }

    /// Sup-norm estimate on a grid of `grid >= 4 M` nodes.
    pub fn sup_norm(&self, grid: usize) -> Result<f64> {
        if grid < DEFAULT_SUP_OVERSAMPLING * self.m() {
            return domain(format!(
                "sup_norm needs at least {} grid nodes for M = {}",
                DEFAULT_SUP_OVERSAMPLING * self.m(),
                self.m()
            ));
        }
        Ok(self.to_grid(grid)?.max_abs())
    }
}

/// Values at the nodes `z_j = j / (G + 1)`, `j = 1..=G`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return domain("grid size must be >= 1");
        }
        Ok(GridField { values })
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

    /// Node positions `z_j`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = 1.0 / (self.len() + 1) as f64;
        (1..=self.len()).map(|j| j as f64 * h).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Discrete projection onto the first `m` sine modes.
    pub fn from_grid(&self, m: usize) -> Result<SpectralField> {
        if m < 1 || m > self.len() {
            return domain(format!("truncation {m} must lie in 1..={}", self.len()));
        }
        let mut plan = SineTransform::new(self.len());
        let mut coeffs = vec![0.0; m];
        plan.analyze(&self.values, &mut coeffs);
        SpectralField::new(coeffs)
    }
}
