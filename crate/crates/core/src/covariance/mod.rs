//! Positive self-adjoint trace-class covariance operators on a truncated
//! sine basis, their square roots, Karhunen-Loeve truncations, and the
//! weighted Schatten distances
//!
//! * `||(-A)^{-alpha} (Q1 - Q2)||_{L1}` (weak-error weight), and
//! * `||(-A)^{-alpha/2} |Q1^{1/2} - Q2^{1/2}| ||_{L2}` (strong-error weight).

pub mod series;
mod source;

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{domain, LabError, Result};
use crate::spectral::lambda;

pub use source::CovarianceSource;

/// Absolute tolerance on `|a_ij - a_ji|` for dense input.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_TOL` are clipped to zero; below it the input is rejected.
pub const PSD_TOL: f64 = 1e-10;

/// A covariance on the first `K` sine modes.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    /// `Q h_k = q_k h_k`.
    DiagonalInSine { q: Vec<f64> },
    /// Symmetric PSD matrix `<Q h_j, h_i>`.
    DensePsd { matrix: DMatrix<f64> },
}

impl CovarianceSpec {
    pub fn diagonal(q: Vec<f64>) -> Result<Self> {
        let c = CovarianceSpec::DiagonalInSine { q };
        c.validate()?;
        Ok(c)
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        let c = CovarianceSpec::DensePsd { matrix };
        c.validate()?;
        Ok(c)
    }

    /// The zero operator on `k` modes.
    pub fn zero(k: usize) -> Self {
        CovarianceSpec::DiagonalInSine { q: vec![0.0; k] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CovarianceSpec::DiagonalInSine { q } => {
                if q.is_empty() {
                    return Err(LabError::Validation("covariance needs K >= 1".into()));
                }
                if let Some(i) = q.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(LabError::Validation(format!(
                        "variance of mode {} must be finite and >= 0, got {}",
                        i + 1,
                        q[i]
                    )));
                }
                Ok(())
            }
            CovarianceSpec::DensePsd { matrix } => {
                check_symmetric(matrix)?;
                let min = SymmetricEigen::new(matrix.clone()).eigenvalues.min();
                if min < -PSD_TOL {
                    return Err(LabError::Validation(format!(
                        "dense covariance is not PSD: smallest eigenvalue {min:e}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Truncation `K`.
    pub fn k(&self) -> usize {
        match self {
            CovarianceSpec::DiagonalInSine { q } => q.len(),
            CovarianceSpec::DensePsd { matrix } => matrix.nrows(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, CovarianceSpec::DiagonalInSine { .. })
    }

    /// Per-mode variances for the diagonal variant.
    pub fn diag(&self) -> Option<&[f64]> {
        match self {
            CovarianceSpec::DiagonalInSine { q } => Some(q),
            CovarianceSpec::DensePsd { .. } => None,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            CovarianceSpec::DiagonalInSine { q } => DMatrix::from_diagonal(&q.clone().into()),
            CovarianceSpec::DensePsd { matrix } => matrix.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            CovarianceSpec::DiagonalInSine { q } => q.iter().sum(),
            CovarianceSpec::DensePsd { matrix } => matrix.trace(),
        }
    }

    /// `||Q||_{L(L2)}`, the largest eigenvalue.
    pub fn op_norm(&self) -> f64 {
        match self {
            CovarianceSpec::DiagonalInSine { q } => q.iter().fold(0.0, |m: f64, v| m.max(*v)),
            CovarianceSpec::DensePsd { matrix } => {
                let e = SymmetricEigen::new(matrix.clone()).eigenvalues;
                e.max().max(0.0)
            }
        }
    }

    /// `S` with `S S = Q`, of the same variant.
    pub fn sqrt(&self) -> Result<CovarianceSpec> {
        match self {
            CovarianceSpec::DiagonalInSine { q } => {
                self.validate()?;
                Ok(CovarianceSpec::DiagonalInSine {
                    q: q.iter().map(|v| v.sqrt()).collect(),
                })
            }
            CovarianceSpec::DensePsd { matrix } => {
                check_symmetric(matrix)?;
                let eig = KlBasis::of(matrix)?;
                let roots: Vec<f64> = eig.values.iter().map(|v| v.sqrt()).collect();
                Ok(CovarianceSpec::DensePsd {
                    matrix: eig.reassemble(&roots, eig.values.len()),
                })
            }
        }
    }

    /// `Q_N`: the `N` leading Karhunen-Loeve modes (descending eigenvalue,
    /// ties broken by index).
    pub fn kl_truncate(&self, n: usize) -> Result<CovarianceSpec> {
        let k = self.k();
        if n > k {
            return domain(format!("KL truncation {n} exceeds K = {k}"));
        }
        match self {
            CovarianceSpec::DiagonalInSine { q } => {
                let mut out = vec![0.0; k];
                for i in descending_order(q).into_iter().take(n) {
                    out[i] = q[i];
                }
                Ok(CovarianceSpec::DiagonalInSine { q: out })
            }
            CovarianceSpec::DensePsd { matrix } => {
                let eig = KlBasis::of(matrix)?;
                Ok(CovarianceSpec::DensePsd {
                    matrix: eig.reassemble(&eig.values, n),
                })
            }
        }
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues_desc(&self) -> Result<Vec<f64>> {
        match self {
            CovarianceSpec::DiagonalInSine { q } => {
                Ok(descending_order(q).into_iter().map(|i| q[i]).collect())
            }
            CovarianceSpec::DensePsd { matrix } => Ok(KlBasis::of(matrix)?.values),
        }
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(LabError::Validation(format!(
            "dense covariance must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Validation("dense covariance has non-finite entries".into()));
    }
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(LabError::Validation(format!(
                    "dense covariance is not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// Indices sorted by descending value, ties broken by ascending index.
fn descending_order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

/// Eigenpairs of a symmetric PSD matrix in KL order, negative roundoff clipped.
struct KlBasis {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl KlBasis {
    fn of(matrix: &DMatrix<f64>) -> Result<Self> {
        let sym = (matrix + matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        if let Some(min) = raw.iter().copied().reduce(f64::min) {
            if min < -PSD_TOL {
                return Err(LabError::Validation(format!(
                    "dense covariance is not PSD: smallest eigenvalue {min:e}"
                )));
            }
        }
        let order = descending_order(&raw);
        let n = raw.len();
        let mut vectors = DMatrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (col, &i) in order.iter().enumerate() {
            values.push(raw[i].max(0.0));
            vectors.set_column(col, &eig.eigenvectors.column(i));
        }
        Ok(KlBasis { values, vectors })
    }

    /// `sum_{j < n} f_j v_j v_j^T`.
    fn reassemble(&self, f: &[f64], n: usize) -> DMatrix<f64> {
        let dim = self.vectors.nrows();
        let mut out = DMatrix::zeros(dim, dim);
        for j in 0..n {
            let v = self.vectors.column(j);
            out += f[j] * &v * v.transpose();
        }
        out
    }
}

fn check_same_k(q1: &CovarianceSpec, q2: &CovarianceSpec) -> Result<usize> {
    if q1.k() != q2.k() {
        return domain(format!(
            "covariances live on different truncations ({} vs {})",
            q1.k(),
            q2.k()
        ));
    }
    Ok(q1.k())
}

/// `||(-A)^{-alpha} (Q1 - Q2)||_{L1}`.
pub fn weighted_trace_distance(q1: &CovarianceSpec, q2: &CovarianceSpec, alpha: f64) -> Result<f64> {
    let k = check_same_k(q1, q2)?;
    match (q1.diag(), q2.diag()) {
        (Some(a), Some(b)) => Ok((0..k)
            .map(|i| lambda(i + 1).powf(-alpha) * (a[i] - b[i]).abs())
            .sum()),
        _ => {
            let mut diff = q1.to_dense() - q2.to_dense();
            for i in 0..k {
                let w = lambda(i + 1).powf(-alpha);
                diff.row_mut(i).scale_mut(w);
            }
            Ok(diff.singular_values().iter().sum())
        }
    }
}

/// `||(-A)^{-alpha/2} |Q1^{1/2} - Q2^{1/2}| ||_{L2}`.
pub fn weighted_hs_sqrt_distance(
    q1: &CovarianceSpec,
    q2: &CovarianceSpec,
    alpha: f64,
) -> Result<f64> {
    let k = check_same_k(q1, q2)?;
    match (q1.diag(), q2.diag()) {
        (Some(a), Some(b)) => {
            q1.validate()?;
            q2.validate()?;
            Ok((0..k)
                .map(|i| {
                    let d = a[i].sqrt() - b[i].sqrt();
                    lambda(i + 1).powf(-alpha) * d * d
                })
                .sum::<f64>()
                .sqrt())
        }
        _ => {
            let diff = q1.sqrt()?.to_dense() - q2.sqrt()?.to_dense();
            let eig = SymmetricEigen::new((&diff + diff.transpose()) * 0.5);
            let abs_vals = eig.eigenvalues.map(f64::abs);
            let mut abs =
                &eig.eigenvectors * DMatrix::from_diagonal(&abs_vals) * eig.eigenvectors.transpose();
            for i in 0..k {
                let w = lambda(i + 1).powf(-alpha / 2.0);
                abs.row_mut(i).scale_mut(w);
            }
            Ok(abs.norm())
        }
    }
}

/// Partial Schatten norms of `(-A)^{-alpha}` over `k` modes: for `p = 1`
/// `sum (pi k)^{-2 alpha}`, for `p = 2` its square root
/// (`||(-A)^{-alpha/2}||_{L2}^2 = ||(-A)^{-alpha}||_{L1}`).
pub fn laplacian_schatten_norm(alpha: f64, p: u32, k: usize) -> Result<f64> {
    if !(alpha > 0.0) {
        return domain(format!("alpha must be > 0, got {alpha}"));
    }
    let s: f64 = (1..=k).map(|j| lambda(j).powf(-alpha)).sum();
    match p {
        1 => Ok(s),
        2 => Ok(s.sqrt()),
        _ => domain(format!("Schatten index must be 1 or 2, got {p}")),
    }
}

/// The full-series value `sum_{k >= 1} (pi k)^{-2 alpha}` (finite iff `alpha > 1/2`).
pub fn laplacian_trace_norm_infinite(alpha: f64) -> Option<f64> {
    if alpha > 0.5 {
        Some(PI.powf(-2.0 * alpha) * series::zeta(2.0 * alpha))
    } else {
        None
    }
}

/// Per-mode variance law used to materialize an infinite-rank covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecayLaw {
    /// `q_k = c k^{-beta}`.
    Polynomial { c: f64, beta: f64, k: usize },
    /// `q_k = c rho^k`.
    Exponential { c: f64, rho: f64, k: usize },
}

impl DecayLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DecayLaw::Polynomial { c, beta, k } => {
                if !(c > 0.0) || !(beta > 1.0) || k == 0 {
                    return Err(LabError::Validation(format!(
                        "polynomial law needs c > 0, beta > 1, K >= 1 (got c={c}, beta={beta}, K={k})"
                    )));
                }
            }
            DecayLaw::Exponential { c, rho, k } => {
                if !(c > 0.0) || !(rho > 0.0 && rho < 1.0) || k == 0 {
                    return Err(LabError::Validation(format!(
                        "exponential law needs c > 0, 0 < rho < 1, K >= 1 (got c={c}, rho={rho}, K={k})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        match *self {
            DecayLaw::Polynomial { k, .. } | DecayLaw::Exponential { k, .. } => k,
        }
    }

    /// `q_j` for `j >= 1` (not limited to the materialized truncation).
    pub fn q(&self, j: usize) -> f64 {
        match *self {
            DecayLaw::Polynomial { c, beta, .. } => c * (j as f64).powf(-beta),
            DecayLaw::Exponential { c, rho, .. } => c * rho.powi(j as i32),
        }
    }

    pub fn materialize(&self) -> Result<CovarianceSpec> {
        self.validate()?;
        CovarianceSpec::diagonal((1..=self.k()).map(|j| self.q(j)).collect())
    }

    /// Trace of the untruncated operator.
    pub fn infinite_trace(&self) -> f64 {
        match *self {
            DecayLaw::Polynomial { c, beta, .. } => c * series::zeta(beta),
            DecayLaw::Exponential { c, rho, .. } => c * rho / (1.0 - rho),
        }
    }

    /// Trace discarded by materializing only `K` modes.
    pub fn discarded_trace(&self) -> f64 {
        match *self {
            DecayLaw::Polynomial { c, beta, k } => c * series::power_tail(beta, k + 1),
            DecayLaw::Exponential { c, rho, k } => c * rho.powi(k as i32 + 1) / (1.0 - rho),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k_inv_sq(k: usize) -> CovarianceSpec {
        CovarianceSpec::diagonal((1..=k).map(|j| 1.0 / (j * j) as f64).collect()).unwrap()
    }

    #[test]
    fn trace_and_op_norm() {
        let q = CovarianceSpec::diagonal(vec![1.0, 0.25]).unwrap();
        assert_eq!(q.trace(), 1.25);
        assert_eq!(q.op_norm(), 1.0);
        let z = CovarianceSpec::zero(3);
        assert_eq!((z.trace(), z.op_norm()), (0.0, 0.0));
        let d = CovarianceSpec::dense(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((d.op_norm() - 3.0).abs() < 1e-12);
        assert!((d.trace() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_trace_converges_to_zeta() {
        let target = PI * PI / 6.0;
        let mut prev_gap = f64::INFINITY;
        for k in [10, 100, 1000, 10000] {
            let law = DecayLaw::Polynomial { c: 1.0, beta: 2.0, k };
            let q = law.materialize().unwrap();
            let gap = target - q.trace();
            assert!(gap > 0.0 && gap < prev_gap);
            assert!((gap - law.discarded_trace()).abs() < 1e-12);
            prev_gap = gap;
        }
        assert!((DecayLaw::Polynomial { c: 1.0, beta: 2.0, k: 1 }.infinite_trace() - target).abs() < 1e-14);
    }

    #[test]
    fn sqrt_cases() {
        let q = CovarianceSpec::diagonal(vec![4.0, 9.0]).unwrap();
        assert_eq!(q.sqrt().unwrap().diag().unwrap(), &[2.0, 3.0]);
        let id = CovarianceSpec::dense(DMatrix::identity(3, 3)).unwrap();
        let s = id.sqrt().unwrap().to_dense();
        assert!((s - DMatrix::<f64>::identity(3, 3)).norm() < 1e-12);

        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = CovarianceSpec::dense(m.clone()).unwrap().sqrt().unwrap().to_dense();
        assert!((&s * &s - &m).norm() < 1e-10);
        let v1 = nalgebra::DVector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
        let v2 = nalgebra::DVector::from_vec(vec![1.0, -1.0]) / 2f64.sqrt();
        assert!((&s * &v1 - 3f64.sqrt() * &v1).norm() < 1e-12);
        assert!((&s * &v2 - &v2).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_dense() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(CovarianceSpec::dense(m.clone()), Err(LabError::Validation(_))));
        let raw = CovarianceSpec::DensePsd { matrix: m };
        assert!(matches!(raw.sqrt(), Err(LabError::Validation(_))));
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(CovarianceSpec::dense(neg).is_err());
        // roundoff-level negative eigenvalue is clipped, not rejected
        let tiny = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-13]);
        let s = CovarianceSpec::dense(tiny).unwrap().sqrt().unwrap().to_dense();
        assert_eq!(s[(1, 1)], 0.0);
    }

    #[test]
    fn kl_truncation() {
        let q = CovarianceSpec::diagonal(vec![1.0, 0.5, 0.25]).unwrap();
        assert_eq!(q.kl_truncate(1).unwrap().diag().unwrap(), &[1.0, 0.0, 0.0]);
        assert_eq!(q.kl_truncate(3).unwrap(), q);
        assert!(q.kl_truncate(4).is_err());
        assert!(q.kl_truncate(2).unwrap().trace() <= q.trace());

        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let t = CovarianceSpec::dense(m).unwrap().kl_truncate(1).unwrap().to_dense();
        // leading KL mode keeps eigenvalue 3 on v = (1, 1)/sqrt(2)
        let expect = DMatrix::from_row_slice(2, 2, &[1.5, 1.5, 1.5, 1.5]);
        assert!((t - expect).norm() < 1e-12);
    }

    #[test]
    fn hand_summed_distances() {
        let q1 = k_inv_sq(3);
        let q2 = q1.kl_truncate(1).unwrap();
        let wt = weighted_trace_distance(&q1, &q2, 1.0).unwrap();
        let expect = 97.0 / (1296.0 * PI * PI);
        assert!((wt - expect).abs() < 1e-12);
        assert!((wt - 0.007_583_4).abs() < 1e-7);
        let hs = weighted_hs_sqrt_distance(&q1, &q2, 1.0).unwrap();
        assert!((hs - (97.0f64 / 1296.0).sqrt() / PI).abs() < 1e-12);
        assert!((hs - 0.087_083).abs() < 1e-6);
        assert_eq!(weighted_trace_distance(&q1, &q1, 0.5).unwrap(), 0.0);
        assert_eq!(weighted_hs_sqrt_distance(&q1, &q1, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn unweighted_distances() {
        let a = CovarianceSpec::diagonal(vec![1.0, 0.3, 0.2]).unwrap();
        let b = CovarianceSpec::diagonal(vec![0.5, 0.4, 0.0]).unwrap();
        let plain: f64 = 0.5 + 0.1 + 0.2;
        assert!((weighted_trace_distance(&a, &b, 0.0).unwrap() - plain).abs() < 1e-15);
        let hs: f64 = [(1.0f64, 0.5f64), (0.3, 0.4), (0.2, 0.0)]
            .iter()
            .map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((weighted_hs_sqrt_distance(&a, &b, 0.0).unwrap() - hs).abs() < 1e-15);
    }

    #[test]
    fn mismatched_truncations() {
        let a = CovarianceSpec::zero(3);
        let b = CovarianceSpec::zero(4);
        assert!(matches!(weighted_trace_distance(&a, &b, 1.0), Err(LabError::Domain(_))));
        assert!(matches!(weighted_hs_sqrt_distance(&a, &b, 1.0), Err(LabError::Domain(_))));
    }

    #[test]
    fn laplacian_norms() {
        let inf = laplacian_trace_norm_infinite(1.0).unwrap();
        assert!((inf - 1.0 / 6.0).abs() < 1e-14);
        let partial = laplacian_schatten_norm(1.0, 1, 100_000).unwrap();
        assert!((partial - 1.0 / 6.0).abs() < 2e-6);
        let hs = laplacian_schatten_norm(1.0, 2, 100_000).unwrap();
        assert!((hs - 1.0 / 6f64.sqrt()).abs() < 1e-5);
        // alpha = 1/4: partial sums grow without bound
        let mut prev = 0.0;
        for k in [10, 100, 1000, 10000, 100000] {
            let s = laplacian_schatten_norm(0.25, 1, k).unwrap();
            assert!(s > prev);
            prev = s;
        }
        assert!(prev > 50.0);
        assert!(laplacian_trace_norm_infinite(0.5).is_none());
        assert!(laplacian_schatten_norm(0.0, 1, 3).is_err());
        assert!(laplacian_schatten_norm(1.0, 3, 3).is_err());
    }

    #[test]
    fn decay_law_validation() {
        assert!(DecayLaw::Polynomial { c: 1.0, beta: 1.0, k: 4 }.materialize().is_err());
        assert!(DecayLaw::Exponential { c: 1.0, rho: 1.0, k: 4 }.materialize().is_err());
        let e = DecayLaw::Exponential { c: 2.0, rho: 0.5, k: 30 };
        let q = e.materialize().unwrap();
        assert!((q.trace() + e.discarded_trace() - e.infinite_trace()).abs() < 1e-12);
    }
}
