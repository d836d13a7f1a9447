//! Keyed Gaussian draws, Q-Wiener increments and exact Ornstein-Uhlenbeck
//! transitions.
//!
//! # Key schema (frozen)
//!
//! Every standard normal `xi` is a pure function of
//! `(master_seed, replication, substream, mode k, step n)`:
//!
//! * Philox4x32-10 key: `[master_seed & 0xffff_ffff, master_seed >> 32]`
//! * counter: `[(k - 1) / 2, n, replication, substream]`
//! * the four output words give two uniforms
//!   `u1 = ((w1 << 32 | w0) >> 11 + 1) 2^-53` in (0, 1] and
//!   `u2 = ((w3 << 32 | w2) >> 11) 2^-53` in [0, 1), mapped by Box-Muller to
//!   `r cos(2 pi u2)` (odd mode `k`) and `r sin(2 pi u2)` (even mode `k`).
//!
//! Because a draw never depends on generation order, on the covariance that
//! consumes it or on the Galerkin truncation, the same scalar Brownian
//! motions `W^(k)` drive every covariance and every truncation level within
//! one replication.

pub mod philox;

use std::f64::consts::PI;

use crate::covariance::CovarianceSpec;
use crate::error::{domain, LabError, Result};
use crate::spectral::{lambda, SpectralField};

use philox::philox4x32_10;

/// Substream carrying the Wiener increments.
pub const SUBSTREAM_WIENER: u32 = 0;
/// Substream carrying random initial conditions.
pub const SUBSTREAM_INITIAL: u32 = 1;
/// Substream for randomized test inputs of the invariant suite.
pub const SUBSTREAM_INPUTS: u32 = 2;

/// Immutable addressing of one replication's random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    pub master_seed: u64,
    pub replication: u32,
}

impl NoiseStream {
    pub fn new(master_seed: u64, replication: u32) -> Self {
        NoiseStream {
            master_seed,
            replication,
        }
    }

    fn key(&self) -> [u32; 2] {
        [self.master_seed as u32, (self.master_seed >> 32) as u32]
    }

    // Never inlined: a caller that keeps only one Box-Muller output must not
    // let the optimizer swap `sin_cos` for a lone `sin`/`cos`, whose last bit
    // can differ, or single draws would stop matching block draws.
    #[inline(never)]
    fn pair(&self, substream: u32, pair: u32, step: u32) -> (f64, f64) {
        let w = philox4x32_10([pair, step, self.replication, substream], self.key());
        let a = (((w[1] as u64) << 32) | w[0] as u64) >> 11;
        let b = (((w[3] as u64) << 32) | w[2] as u64) >> 11;
        let u1 = (a + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = b as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        (r * c, r * s)
    }

    /// The standard normal `xi_{k,n}` on a substream (`k >= 1`).
    pub fn normal(&self, substream: u32, k: usize, step: usize) -> f64 {
        assert!(k >= 1);
        let (a, b) = self.pair(substream, ((k - 1) / 2) as u32, step as u32);
        if (k - 1) % 2 == 0 {
            a
        } else {
            b
        }
    }

    /// Fills `out[i] = xi_{i+1, step}`.
    pub fn fill_normals(&self, substream: u32, step: usize, out: &mut [f64]) {
        let step = u32::try_from(step).expect("step index exceeds the 32-bit key field");
        let mut chunks = out.chunks_exact_mut(2);
        let mut p = 0u32;
        for c in &mut chunks {
            let (a, b) = self.pair(substream, p, step);
            c[0] = a;
            c[1] = b;
            p += 1;
        }
        if let [last] = chunks.into_remainder() {
            *last = self.pair(substream, p, step).0;
        }
    }

    /// A uniform in `[0, 1)` from the block of pair `(k - 1) / 2` (its `u2`
    /// word), for drawing test parameters rather than noise.
    pub fn uniform(&self, substream: u32, k: usize, step: usize) -> f64 {
        assert!(k >= 1);
        let w = philox4x32_10([((k - 1) / 2) as u32, step as u32, self.replication, substream], self.key());
        ((((w[3] as u64) << 32) | w[2] as u64) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normals(&self, substream: u32, step: usize, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        self.fill_normals(substream, step, &mut v);
        v
    }
}

/// Increments of `<W^Q, h_k>`, `k = 1..=M`, over one step.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBatch {
    pub dw: Vec<f64>,
    pub dt: f64,
}

/// Maps one step's keyed normals `xi_{1..K}` to increments on the first `M` modes.
#[derive(Debug, Clone)]
pub(crate) enum IncrementMap {
    /// `dW_k = sd_k xi_k`.
    Diagonal { sd: Vec<f64> },
    /// `dW = S xi` with `S = sqrt(dt) P_M Q^{1/2}` stored row-major (`M x K`).
    Dense { rows: usize, cols: usize, s: Vec<f64> },
}

impl IncrementMap {
    pub(crate) fn wiener(q: &CovarianceSpec, dt: f64, m: usize) -> Result<Self> {
        check_dt(dt)?;
        // modes above K carry no noise
        match q {
            CovarianceSpec::DiagonalInSine { q } => Ok(IncrementMap::Diagonal {
                sd: (0..m).map(|i| q.get(i).map_or(0.0, |v| (v * dt).sqrt())).collect(),
            }),
            CovarianceSpec::DensePsd { .. } => {
                let root = q.sqrt()?.to_dense();
                let k = root.ncols();
                let sdt = dt.sqrt();
                let mut s = Vec::with_capacity(m * k);
                for i in 0..m {
                    for j in 0..k {
                        s.push(if i < k { sdt * root[(i, j)] } else { 0.0 });
                    }
                }
                Ok(IncrementMap::Dense { rows: m, cols: k, s })
            }
        }
    }

    /// Number of keyed modes consumed per step.
    pub(crate) fn modes_needed(&self) -> usize {
        match self {
            IncrementMap::Diagonal { sd } => sd.len(),
            IncrementMap::Dense { cols, .. } => *cols,
        }
    }

    #[inline]
    pub(crate) fn apply(&self, xi: &[f64], out: &mut [f64]) {
        match self {
            IncrementMap::Diagonal { sd } => {
                for ((o, s), x) in out.iter_mut().zip(sd).zip(xi) {
                    *o = s * x;
                }
            }
            IncrementMap::Dense { rows, cols, s } => {
                for i in 0..*rows {
                    let row = &s[i * cols..(i + 1) * cols];
                    out[i] = row.iter().zip(&xi[..*cols]).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return domain(format!("time step must be > 0, got {dt}"));
    }
    Ok(())
}

/// One step of `<W^Q, h_k>` increments on the first `m` modes.
pub fn wiener_increment(
    stream: &NoiseStream,
    q: &CovarianceSpec,
    step: usize,
    dt: f64,
    m: usize,
) -> Result<IncrementBatch> {
    let map = IncrementMap::wiener(q, dt, m)?;
    let xi = stream.normals(SUBSTREAM_WIENER, step, map.modes_needed());
    let mut dw = vec![0.0; m];
    map.apply(&xi, &mut dw);
    Ok(IncrementBatch { dw, dt })
}

/// Exact per-mode transition of the stochastic convolution over `dt`:
/// `y'_k = e^{-lambda_k dt} y_k + sd_k xi_k`,
/// `sd_k^2 = q_k (1 - e^{-2 lambda_k dt}) / (2 lambda_k)`.
#[derive(Debug, Clone)]
pub(crate) struct OuTransition {
    pub decay: Vec<f64>,
    pub sd: Vec<f64>,
}

impl OuTransition {
    pub(crate) fn new(q: &CovarianceSpec, dt: f64, m: usize) -> Result<Self> {
        check_dt(dt)?;
        let diag = q.diag().ok_or_else(|| {
            LabError::Unsupported(
                "exact OU transitions need a diagonal covariance; use wiener_increment with a small dt"
                    .into(),
            )
        })?;
        let mut decay = Vec::with_capacity(m);
        let mut sd = Vec::with_capacity(m);
        for k in 1..=m {
            let l = lambda(k);
            decay.push((-l * dt).exp());
            let q = diag.get(k - 1).copied().unwrap_or(0.0);
            sd.push((q * (-(-2.0 * l * dt).exp_m1()) / (2.0 * l)).sqrt());
        }
        Ok(OuTransition { decay, sd })
    }
}

/// Exact OU step of `y` on its own truncation, driven by step `n`'s keyed draws.
pub fn ou_exact_step(
    y: &SpectralField,
    stream: &NoiseStream,
    q: &CovarianceSpec,
    step: usize,
    dt: f64,
) -> Result<SpectralField> {
    let tr = OuTransition::new(q, dt, y.m())?;
    let xi = stream.normals(SUBSTREAM_WIENER, step, y.m());
    let coeffs = y
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, &v)| tr.decay[i] * v + tr.sd[i] * xi[i])
        .collect();
    Ok(SpectralField::from_vec_unchecked(coeffs))
}

/// `E ||Y^{Q1}(t) - Y^{Q2}(t)||^2 = sum_k (sqrt q1_k - sqrt q2_k)^2 (1 - e^{-2 lambda_k t}) / (2 lambda_k)`
/// for coupled diagonal covariances.
pub fn ou_pair_distance_sq(q1: &CovarianceSpec, q2: &CovarianceSpec, t: f64) -> Result<f64> {
    let (a, b) = match (q1.diag(), q2.diag()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(LabError::Unsupported(
                "the OU pair distance is closed-form only for diagonal covariances".into(),
            ))
        }
    };
    if a.len() != b.len() {
        return domain("covariances live on different truncations");
    }
    if !(t >= 0.0) {
        return domain(format!("time must be >= 0, got {t}"));
    }
    Ok(a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            let l = lambda(i + 1);
            let d = x.sqrt() - y.sqrt();
            d * d * (-(-2.0 * l * t).exp_m1()) / (2.0 * l)
        })
        .sum())
}

/// `E ||Y^Q_M(t)||^2 = sum_{k <= m} q_k (1 - e^{-2 lambda_k t}) / (2 lambda_k)` (Ito isometry).
pub fn ou_variance_sum(q: &CovarianceSpec, t: f64, m: usize) -> Result<f64> {
    let d = q.diag().ok_or_else(|| {
        LabError::Unsupported("the OU variance is closed-form only for diagonal covariances".into())
    })?;
    Ok(d.iter()
        .take(m)
        .enumerate()
        .map(|(i, v)| {
            let l = lambda(i + 1);
            v * (-(-2.0 * l * t).exp_m1()) / (2.0 * l)
        })
        .sum())
}
