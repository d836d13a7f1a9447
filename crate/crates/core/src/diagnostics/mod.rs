//! Monte Carlo and randomized checks of the analytic estimates the error
//! bounds rest on: exponential and moment bounds for the Galerkin system,
//! moment scaling of the stochastic convolution, the exact OU identity, and
//! the deterministic functional inequalities.

mod invariants;

use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceSpec;
use crate::dynamics::{simulate_convolution_with, Ensemble, SimConfig};
use crate::error::{domain, LabError, Result};
use crate::noise::{ou_pair_distance_sq, ou_variance_sum, NoiseStream, SUBSTREAM_INPUTS};
use crate::spectral::{lambda, SpectralField};
use crate::stats::{linear_fit, mean, par_indexed, standard_error};

pub use invariants::{run_invariant_suite, InvariantCheck, InvariantReport};

/// Slack, in standard errors, granted to the Monte Carlo side.
pub const SE_SLACK: f64 = 3.0;
/// Scaling factors of the `theta Q` family used by the scaling checks.
pub const THETA_FAMILY: [f64; 3] = [1.0, 0.25, 0.0625];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `lhs - 3 SE <= rhs`.
    OneSided,
    /// `|lhs - rhs| <= 3 SE`.
    Equality,
    /// `lhs` (a fitted exponent) within a relative band of `rhs`.
    Scaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub lhs_estimate: f64,
    pub lhs_std_error: f64,
    pub rhs_value: f64,
    pub satisfied: bool,
    pub n_samples: usize,
    pub detail: String,
}

impl BoundCheckResult {
    fn one_sided(name: &str, lhs: f64, se: f64, rhs: f64, n: usize, detail: String) -> Self {
        BoundCheckResult {
            name: name.into(),
            kind: CheckKind::OneSided,
            lhs_estimate: lhs,
            lhs_std_error: se,
            rhs_value: rhs,
            satisfied: lhs - SE_SLACK * se <= rhs,
            n_samples: n,
            detail,
        }
    }

    fn equality(name: &str, lhs: f64, se: f64, rhs: f64, n: usize, detail: String) -> Self {
        BoundCheckResult {
            name: name.into(),
            kind: CheckKind::Equality,
            lhs_estimate: lhs,
            lhs_std_error: se,
            rhs_value: rhs,
            satisfied: (lhs - rhs).abs() <= SE_SLACK * se,
            n_samples: n,
            detail,
        }
    }
}

/// `F_{p,T}(x) = 2 (1 + (19/4) p^2 T x + (19/4) p^2 T x (1 + e^{p^2 T x / 4})^2)`,
/// the explicit growth function of the moment bound.
pub fn moment_bound_f(p: f64, t: f64, x: f64) -> f64 {
    let a = 19.0 / 4.0 * p * p * t * x;
    let e = (p * p * t * x / 4.0).exp();
    2.0 * (1.0 + a + a * (1.0 + e) * (1.0 + e))
}

/// Trapezoid rule on a uniform grid.
fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => dt * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

fn gradient_sq(y: &[f64]) -> f64 {
    y.iter().enumerate().map(|(i, v)| lambda(i + 1) * v * v).sum()
}

fn norm_sq(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum()
}

/// Drops divergent replications; more than 1% of them is an error.
fn converged<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    let total = results.len();
    let mut ok = Vec::with_capacity(total);
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(LabError::Divergence { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let bad = total - ok.len();
    if bad as f64 > crate::error_lab::MAX_DIVERGENCE_FRACTION * total as f64 {
        return Err(LabError::DivergenceRate { diverged: bad, total });
    }
    Ok(ok)
}

fn check_reps(n_reps: usize) -> Result<()> {
    if n_reps < 2 || n_reps > u32::MAX as usize {
        return domain(format!("replication count {n_reps} outside 2..=2^32-1"));
    }
    Ok(())
}

/// `E exp(alpha sup_t ||Y_M||^2 + alpha int_0^T ||grad Y_M||^2) <= 2 e^{alpha T tr Q}`
/// for `0 < alpha < 1 / (2 ||Q||)`.
pub fn check_exp_bound_y(
    q: &CovarianceSpec,
    alpha: f64,
    cfg: &SimConfig,
    n_reps: usize,
    seed: u64,
) -> Result<BoundCheckResult> {
    check_reps(n_reps)?;
    let norm = q.op_norm();
    let limit = if norm > 0.0 { 0.5 / norm } else { f64::INFINITY };
    if !(alpha > 0.0 && alpha < limit) {
        return Err(LabError::Hypothesis(format!(
            "exponential bound needs 0 < alpha < 1/(2||Q||) = {limit}, got {alpha}"
        )));
    }
    let samples = converged(par_indexed(n_reps, || (), |_, i| {
        let stream = NoiseStream::new(seed, i as u32);
        let mut sup = 0.0f64;
        let mut grad = Vec::with_capacity(cfg.n_steps() + 1);
        simulate_convolution_with(cfg, q, &stream, |_, y| {
            sup = sup.max(norm_sq(y));
            grad.push(gradient_sq(y));
        })?;
        Ok((alpha * (sup + trapezoid(&grad, cfg.dt))).exp())
    }))?;
    let lhs = mean(&samples);
    let se = standard_error(&samples);
    let rhs = 2.0 * (alpha * cfg.t_final * q.trace()).exp();
    Ok(BoundCheckResult::one_sided(
        "exp_bound_Y",
        lhs,
        se,
        rhs,
        samples.len(),
        format!("alpha={alpha}, ||Q||={norm:.6e}, trQ={:.6e}, M={}, T={}", q.trace(), cfg.m, cfg.t_final),
    ))
}

/// `E[sup_t ||X_M||^p + 2p int ||X_M||^{p-2} ||grad X_M||^2] <= F_{p,T}(tr Q) (E||X_0||^p + 1)`.
pub fn check_moment_bound_x(
    q: &CovarianceSpec,
    p: f64,
    cfg: &SimConfig,
    n_reps: usize,
    seed: u64,
) -> Result<BoundCheckResult> {
    check_reps(n_reps)?;
    if !(p >= 4.0) {
        return Err(LabError::Hypothesis(format!("moment bound needs p >= 4, got {p}")));
    }
    let proto = Ensemble::new(&[(cfg.clone(), q.clone())])?;
    let samples = converged(par_indexed(n_reps, || proto.clone(), |ens, i| {
        let stream = NoiseStream::new(seed, i as u32);
        let mut sup = 0.0f64;
        let mut x0 = 0.0;
        let mut integrand = Vec::with_capacity(ens.n_steps() + 1);
        ens.run(&stream, |n, states| {
            let x = &states[0];
            let n2 = norm_sq(x);
            if n == 0 {
                x0 = n2.powf(p / 2.0);
            }
            sup = sup.max(n2);
            integrand.push(n2.powf(p / 2.0 - 1.0) * gradient_sq(x));
        })?;
        Ok((sup.powf(p / 2.0) + 2.0 * p * trapezoid(&integrand, cfg.dt), x0))
    }))?;
    let lhs_vals: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let x0_vals: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let lhs = mean(&lhs_vals);
    let se = standard_error(&lhs_vals);
    let f = moment_bound_f(p, cfg.t_final, q.trace());
    let rhs = f * (mean(&x0_vals) + 1.0);
    Ok(BoundCheckResult::one_sided(
        "moment_bound_X",
        lhs,
        se,
        rhs,
        samples.len(),
        format!("p={p}, T={}, trQ={:.6e}, F={f:.6e}, M={}", cfg.t_final, q.trace(), cfg.m),
    ))
}

fn check_alpha_half_open(alpha: f64) -> Result<()> {
    if !(0.0..0.5).contains(&alpha) {
        return Err(LabError::Hypothesis(format!("need alpha in [0, 1/2), got {alpha}")));
    }
    Ok(())
}

/// Scaling surrogate for `E||Y_M(T)||^p <= C T^{(1-2 alpha)p/2} ||(-A)^{-alpha} Q^{1/2}||_HS^p`:
/// over `theta Q`, `theta in {1, 1/4, 1/16}`, the fitted log-log exponent of
/// `E||Y(T)||^p` must lie within 10% of `p / 2`.
pub fn check_stoch_conv_moment(
    q: &CovarianceSpec,
    alpha: f64,
    p: f64,
    cfg: &SimConfig,
    n_reps: usize,
    seed: u64,
) -> Result<BoundCheckResult> {
    check_alpha_half_open(alpha)?;
    scaling_check("stoch_conv_moment", q, alpha, p, cfg, n_reps, seed, |y| norm_sq(y).sqrt())
}

/// The same `theta`-scaling check for `E sup_t ||Y_M(t)||_{L^inf}^p`, with
/// the sup norm read on the oversampled grid at every step.
pub fn check_linf_scaling_y(
    q: &CovarianceSpec,
    p: f64,
    cfg: &SimConfig,
    n_reps: usize,
    seed: u64,
) -> Result<BoundCheckResult> {
    let grid = cfg.oversampling.max(4) * cfg.m;
    scaling_check("linf_scaling_Y", q, 0.0, p, cfg, n_reps, seed, move |y| {
        SpectralField::from_vec_unchecked(y.to_vec())
            .sup_norm(grid)
            .expect("oversampled grid")
    })
}

#[allow(clippy::too_many_arguments)]
fn scaling_check<F>(
    name: &str,
    q: &CovarianceSpec,
    alpha: f64,
    p: f64,
    cfg: &SimConfig,
    n_reps: usize,
    seed: u64,
    measure: F,
) -> Result<BoundCheckResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    check_reps(n_reps)?;
    if !(p >= 1.0) {
        return domain(format!("moment order must be >= 1, got {p}"));
    }
    let sup_based = name.starts_with("linf");
    let mut points = Vec::new();
    let mut worst_se = 0.0f64;
    for theta in THETA_FAMILY {
        let scaled = scale_covariance(q, theta)?;
        let vals = converged(par_indexed(n_reps, || (), |_, i| {
            let stream = NoiseStream::new(seed, i as u32);
            let mut acc = 0.0f64;
            let y = simulate_convolution_with(cfg, &scaled, &stream, |_, y| {
                if sup_based {
                    acc = acc.max(measure(y));
                }
            })?;
            if !sup_based {
                acc = measure(y.coeffs());
            }
            Ok(acc.powf(p))
        }))?;
        let m = mean(&vals);
        if !(m > 0.0) {
            return domain("scaling check needs a nonzero covariance");
        }
        worst_se = worst_se.max(standard_error(&vals) / m);
        points.push((theta.ln(), m.ln()));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    let (slope, _, _) = linear_fit(&x, &y)?;
    let target = p / 2.0;
    let hs = hs_weighted_sqrt(q, alpha)?;
    Ok(BoundCheckResult {
        name: name.into(),
        kind: CheckKind::Scaling,
        lhs_estimate: slope,
        lhs_std_error: worst_se,
        rhs_value: target,
        satisfied: (slope - target).abs() <= 0.1 * target,
        n_samples: n_reps,
        detail: format!(
            "theta in {THETA_FAMILY:?}, p={p}, alpha={alpha}, T^{{(1-2a)p/2}} ||(-A)^-a Q^1/2||_HS^p = {:.6e}",
            cfg.t_final.powf((1.0 - 2.0 * alpha) * p / 2.0) * hs.powf(p)
        ),
    })
}

/// `||(-A)^{-alpha} Q^{1/2}||_HS = (sum_k (pi k)^{-4 alpha} q_k)^{1/2}` (diagonal `Q`).
fn hs_weighted_sqrt(q: &CovarianceSpec, alpha: f64) -> Result<f64> {
    let d = q
        .diag()
        .ok_or_else(|| LabError::Unsupported("scaling checks need a diagonal covariance".into()))?;
    Ok(d.iter()
        .enumerate()
        .map(|(i, v)| lambda(i + 1).powf(-2.0 * alpha) * v)
        .sum::<f64>()
        .sqrt())
}

fn scale_covariance(q: &CovarianceSpec, theta: f64) -> Result<CovarianceSpec> {
    match q.diag() {
        Some(d) => CovarianceSpec::diagonal(d.iter().map(|v| theta * v).collect()),
        None => Err(LabError::Unsupported("scaling checks need a diagonal covariance".into())),
    }
}

/// `p = 2` companion of the scaling check: `E||Y_M(T)||^2` against the
/// Ito-isometry sum (equality oracle).
pub fn check_stoch_conv_second_moment(
    q: &CovarianceSpec,
    cfg: &SimConfig,
    n_reps: usize,
    seed: u64,
) -> Result<BoundCheckResult> {
    check_reps(n_reps)?;
    let vals = converged(par_indexed(n_reps, || (), |_, i| {
        let y = simulate_convolution_with(cfg, q, &NoiseStream::new(seed, i as u32), |_, _| {})?;
        Ok(y.l2_norm_sq())
    }))?;
    let exact = ou_variance_sum(q, cfg.t_final, cfg.m)?;
    Ok(BoundCheckResult::equality(
        "stoch_conv_second_moment",
        mean(&vals),
        standard_error(&vals),
        exact,
        vals.len(),
        format!("M={}, T={}", cfg.m, cfg.t_final),
    ))
}

/// `E||Y^{Q1}(t) - Y^{Q2}(t)||^2` by coupled exact OU paths against the
/// Ito-isometry sum `sum_k (sqrt q1_k - sqrt q2_k)^2 (1 - e^{-2 lambda_k t}) / (2 lambda_k)`.
/// Paths run on all `K` modes; `cfg.m` is ignored and `cfg.t_final` is `t`.
pub fn check_ou_sharpness(
    q1: &CovarianceSpec,
    q2: &CovarianceSpec,
    t: f64,
    cfg: &SimConfig,
    n_reps: usize,
    seed: u64,
) -> Result<BoundCheckResult> {
    check_reps(n_reps)?;
    let exact = ou_pair_distance_sq(q1, q2, t)?;
    let run_cfg = SimConfig {
        m: q1.k(),
        t_final: t,
        ..cfg.clone()
    };
    let vals = converged(par_indexed(n_reps, || (), |_, i| {
        let stream = NoiseStream::new(seed, i as u32);
        let a = simulate_convolution_with(&run_cfg, q1, &stream, |_, _| {})?;
        let b = simulate_convolution_with(&run_cfg, q2, &stream, |_, _| {})?;
        Ok(a.sub(&b).l2_norm_sq())
    }))?;
    Ok(BoundCheckResult::equality(
        "ou_sharpness",
        mean(&vals),
        standard_error(&vals),
        exact,
        vals.len(),
        format!("K={}, t={t}, dt={}", q1.k(), cfg.dt),
    ))
}

/// A random diagonal pair `(Q1, Q2, t)` for the OU identity, drawn from the
/// input substream of stream `(seed, j)`: `K in 2..=16`,
/// `q1_k = k^{-beta}` with `beta in [1.5, 3.5)`, `q2_k = u_k^2 q1_k` and
/// `t in [0.01, 1)`.
pub fn random_ou_configuration(seed: u64, j: usize) -> Result<(CovarianceSpec, CovarianceSpec, f64)> {
    let stream = NoiseStream::new(seed, u32::try_from(j).map_err(|_| LabError::Domain("index too large".into()))?);
    let u = |slot: usize| stream.uniform(SUBSTREAM_INPUTS, 1, slot);
    let k = 2 + (15.0 * u(0)) as usize;
    let beta = 1.5 + 2.0 * u(1);
    let t = 0.01 + 0.99 * u(2);
    let q1: Vec<f64> = (1..=k).map(|i| (i as f64).powf(-beta)).collect();
    let q2: Vec<f64> = q1.iter().enumerate().map(|(i, q)| u(3 + i).powi(2) * q).collect();
    Ok((CovarianceSpec::diagonal(q1)?, CovarianceSpec::diagonal(q2)?, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::DecayLaw;
    use std::f64::consts::{E, PI};

    fn poly(k: usize) -> CovarianceSpec {
        DecayLaw::Polynomial { c: 1.0, beta: 4.0, k }.materialize().unwrap()
    }

    #[test]
    fn growth_function_values() {
        assert_eq!(moment_bound_f(4.0, 0.25, 0.0), 2.0);
        let expect = 2.0 * (20.0 + 19.0 * (1.0 + E).powi(2));
        assert!((moment_bound_f(4.0, 0.25, 1.0) - expect).abs() < 1e-10);
        assert!((moment_bound_f(4.0, 0.25, 1.0) - 565.373_55).abs() < 1e-4);
    }

    #[test]
    fn trapezoid_rule() {
        assert_eq!(trapezoid(&[1.0, 1.0, 1.0], 0.5), 1.0);
        assert_eq!(trapezoid(&[0.0, 1.0], 1.0), 0.5);
        assert_eq!(trapezoid(&[3.0], 1.0), 0.0);
    }

    #[test]
    fn zero_noise_bounds() {
        let cfg = SimConfig::new(8, 0.1, 1e-2);
        let zero = CovarianceSpec::zero(8);
        let r = check_exp_bound_y(&zero, 1.0, &cfg, 4, 0).unwrap();
        assert_eq!(r.lhs_estimate, 1.0);
        assert_eq!(r.rhs_value, 2.0);
        assert!(r.satisfied);
        let r = check_moment_bound_x(&zero, 4.0, &cfg, 4, 0).unwrap();
        assert_eq!(r.lhs_estimate, 0.0);
        assert_eq!(r.rhs_value, 2.0);
        assert!(r.satisfied);
    }

    #[test]
    fn hypotheses_are_enforced() {
        let q = poly(8);
        let cfg = SimConfig::new(8, 0.1, 1e-2);
        assert!(matches!(check_exp_bound_y(&q, 0.5, &cfg, 4, 0), Err(LabError::Hypothesis(_))));
        assert!(matches!(check_moment_bound_x(&q, 3.0, &cfg, 4, 0), Err(LabError::Hypothesis(_))));
        assert!(matches!(check_stoch_conv_moment(&q, 0.5, 2.0, &cfg, 4, 0), Err(LabError::Hypothesis(_))));
    }

    #[test]
    fn single_mode_sharpness() {
        let q1 = CovarianceSpec::diagonal(vec![1.0, 1.0]).unwrap();
        let q2 = CovarianceSpec::diagonal(vec![1.0, 0.0]).unwrap();
        let cfg = SimConfig::new(2, 1.0, 0.05);
        let r = check_ou_sharpness(&q1, &q2, 1.0, &cfg, 10_000, 12).unwrap();
        let exact = (1.0 - (-8.0 * PI * PI).exp()) / (8.0 * PI * PI);
        assert!((r.rhs_value - exact).abs() < 1e-15);
        assert!((exact - 0.012_665_1).abs() < 1e-7);
        assert!(r.satisfied, "{r:?}");
        assert!((r.lhs_estimate / r.rhs_value - 1.0).abs() < 0.1);
        let same = check_ou_sharpness(&q1, &q1, 1.0, &cfg, 4, 12).unwrap();
        assert_eq!((same.lhs_estimate, same.rhs_value), (0.0, 0.0));
        assert!(same.satisfied);
    }

    #[test]
    fn random_ou_configurations_are_keyed() {
        let (a1, a2, t) = random_ou_configuration(5, 3).unwrap();
        let (b1, b2, s) = random_ou_configuration(5, 3).unwrap();
        assert_eq!((a1.clone(), a2.clone(), t), (b1, b2, s));
        assert!((2..=16).contains(&a1.k()) && a1.k() == a2.k());
        assert!((0.01..1.0).contains(&t));
        assert!(a1.diag().unwrap().iter().zip(a2.diag().unwrap()).all(|(x, y)| y <= x));
        assert_ne!(random_ou_configuration(5, 4).unwrap().2, t);
    }

    #[test]
    fn convolution_scaling_is_exact() {
        let q = poly(16);
        let cfg = SimConfig::new(16, 0.1, 1e-2);
        let r = check_stoch_conv_moment(&q, 0.25, 4.0, &cfg, 64, 3).unwrap();
        assert!((r.lhs_estimate - 2.0).abs() < 1e-9 && r.satisfied);
        let r = check_linf_scaling_y(&q, 2.0, &cfg, 64, 3).unwrap();
        assert!((r.lhs_estimate - 1.0).abs() < 1e-9 && r.satisfied);
        let r = check_stoch_conv_second_moment(&q, &cfg, 4000, 3).unwrap();
        assert!(r.satisfied, "{r:?}");
    }
}
