//! The Galerkin nonlinearity `B_M(x) = P_M B[x, x]` with
//! `B[x, y] = x y' + y x'`, so `B(x) = 2 x x'`.
//!
//! The reference path is the exact product-to-sum convolution
//! `sin(m pi z) cos(n pi z) = (sin((m + n) pi z) + sin((m - n) pi z)) / 2`.
//! The fast path is pseudospectral on `G = 3M - 1` nodes: the product of two
//! degree-`M` factors has degree `2M`, and the sine aliases of degree `m`
//! land on `2(G + 1) - m >= 4M`, so no alias reaches the first `M` modes and
//! both paths agree to roundoff.

use std::f64::consts::{PI, SQRT_2};

use crate::spectral::{SineTransform, SpectralField};

/// `P_M (x y')` by direct convolution, `x, y` on the same truncation.
fn product_with_derivative_reference(a: &[f64], b: &[f64], out: &mut [f64]) {
    // x y' = sum_{m,n} a_m b_n (n pi / sqrt 2) [h_{m+n} + sgn(m - n) h_{|m - n|}]
    let m_max = out.len();
    for (i, &am) in a.iter().enumerate() {
        if am == 0.0 {
            continue;
        }
        let m = i + 1;
        for (j, &bn) in b.iter().enumerate() {
            let n = j + 1;
            let w = am * bn * n as f64 * PI / SQRT_2;
            if m + n <= m_max {
                out[m + n - 1] += w;
            }
            if m > n {
                out[m - n - 1] += w;
            } else if n > m && n - m <= m_max {
                out[n - m - 1] -= w;
            }
        }
    }
}

/// Exact `B_M(x)` by the `O(M^2)` convolution (the oracle).
pub fn nonlinearity_reference(x: &SpectralField) -> SpectralField {
    let mut out = vec![0.0; x.m()];
    product_with_derivative_reference(x.coeffs(), x.coeffs(), &mut out);
    for v in &mut out {
        *v *= 2.0;
    }
    SpectralField::from_vec_unchecked(out)
}

/// Exact `B_M[x, y]` by convolution; `x`, `y` on the same truncation.
pub fn bilinear_reference(x: &SpectralField, y: &SpectralField) -> SpectralField {
    assert_eq!(x.m(), y.m(), "bilinear form needs equal truncations");
    let mut out = vec![0.0; x.m()];
    product_with_derivative_reference(x.coeffs(), y.coeffs(), &mut out);
    product_with_derivative_reference(y.coeffs(), x.coeffs(), &mut out);
    SpectralField::from_vec_unchecked(out)
}

/// Pseudospectral evaluator with a cached transform plan for one truncation.
#[derive(Debug, Clone)]
pub struct BurgersNonlinearity {
    m: usize,
    plan: SineTransform,
    values: Vec<f64>,
    derivs: Vec<f64>,
    values_b: Vec<f64>,
    derivs_b: Vec<f64>,
}

impl BurgersNonlinearity {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1);
        let grid = Self::grid_for(m);
        BurgersNonlinearity {
            m,
            plan: SineTransform::new(grid),
            values: vec![0.0; grid],
            derivs: vec![0.0; grid],
            values_b: vec![0.0; grid],
            derivs_b: vec![0.0; grid],
        }
    }

    /// Dealiased quadrature grid size for truncation `m`.
    pub fn grid_for(m: usize) -> usize {
        3 * m - 1
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `out = B_M(coeffs)`.
    pub fn apply(&mut self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert!(coeffs.len() == self.m && out.len() == self.m);
        self.plan
            .synthesize_with_derivative(coeffs, &mut self.values, &mut self.derivs);
        for (v, d) in self.values.iter_mut().zip(&self.derivs) {
            *v = 2.0 * *v * d;
        }
        self.plan.analyze(&self.values, out);
    }

    /// `out = B_M[x, y]`.
    pub fn apply_bilinear(&mut self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.plan
            .synthesize_with_derivative(x, &mut self.values, &mut self.derivs);
        self.plan
            .synthesize_with_derivative(y, &mut self.values_b, &mut self.derivs_b);
        for i in 0..self.values.len() {
            self.values[i] = self.values[i] * self.derivs_b[i] + self.values_b[i] * self.derivs[i];
        }
        self.plan.analyze(&self.values, out);
    }
}

/// `B_M(x)` through the pseudospectral path.
pub fn nonlinearity_fast(x: &SpectralField) -> SpectralField {
    let mut nl = BurgersNonlinearity::new(x.m());
    let mut out = vec![0.0; x.m()];
    nl.apply(x.coeffs(), &mut out);
    SpectralField::from_vec_unchecked(out)
}
