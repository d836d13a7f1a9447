//! Monte Carlo estimation of strong and weak errors between coupled
//! Burgers paths, with log-log rate fits.
//!
//! Coupled paths are advanced in lockstep inside one replication, so they
//! consume the very same keyed normals: equal covariances give bit-identical
//! paths, and a KL truncation drops exactly the discarded modes' Brownian
//! motions.

mod functional;

use serde::{Deserialize, Serialize};

use crate::covariance::{weighted_hs_sqrt_distance, weighted_trace_distance, CovarianceSpec, DecayLaw};
use crate::dynamics::{Ensemble, SimConfig};
use crate::error::{domain, LabError, Result};
use crate::noise::NoiseStream;
use crate::stats::{linear_fit, mean, par_indexed, standard_error};

pub use functional::{gaussian_norm_expectation, TestFunctional};

/// Exponent of `(-A)^{-alpha}` in the weak bound, `1 - eps` with `eps = 0.01`.
pub const DEFAULT_WEAK_ALPHA: f64 = 0.99;
/// Weight exponent of the strong bound: `(-A)^{-(1/2 - eps)}` on the
/// square-root difference, i.e. `alpha = 1 - 2 eps` in
/// [`weighted_hs_sqrt_distance`].
pub const DEFAULT_STRONG_ALPHA: f64 = 0.98;
/// More than this fraction of divergent replications invalidates a run.
pub const MAX_DIVERGENCE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    Strong,
    Weak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub q1: String,
    pub q2: String,
    pub m: usize,
    /// KL truncation or Galerkin level the pair represents.
    pub level: Option<usize>,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub n_diverged: usize,
    /// Moment order (strong reports only).
    pub r: Option<f64>,
    /// Signed paired mean (weak reports only); `estimate` is its modulus.
    pub signed_mean: Option<f64>,
    pub bound_rhs: f64,
    pub ratio: f64,
    pub meta: ReportMeta,
}

impl ErrorReport {
    /// Sets the bound and recomputes `ratio = estimate / bound_rhs`.
    pub fn with_bound(mut self, rhs: f64) -> Self {
        self.bound_rhs = rhs;
        self.ratio = if rhs > 0.0 {
            self.estimate / rhs
        } else if self.estimate == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

/// Least squares on `(log s, log e)`.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.iter().any(|&(s, e)| !(s > 0.0 && e > 0.0 && s.is_finite() && e.is_finite())) {
        return domain("rate fits need positive, finite scales and errors");
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r_squared) = linear_fit(&x, &y)?;
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}

/// Per-replication measurements of a coupled ensemble.
#[derive(Debug, Clone, PartialEq)]
struct RepSample {
    /// Per pair: `sup_t ||X_a(t) - X_b(t)||` over the observation grid.
    sup: Vec<f64>,
    /// Per pair: `||X_a(T) - X_b(T)||`.
    terminal: Vec<f64>,
    /// Per path: `phi(X(T))`.
    phi: Vec<f64>,
}

/// L2 distance of two coefficient vectors, the shorter one zero-padded.
fn padded_distance(a: &[f64], b: &[f64]) -> f64 {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let head: f64 = short.iter().zip(long).map(|(x, y)| (x - y) * (x - y)).sum();
    let tail: f64 = long[short.len()..].iter().map(|y| y * y).sum();
    (head + tail).sqrt()
}

/// Coupled simulations of several paths over many replications.
///
/// Replication `i` uses the stream `(seed, i)`, so the first `n` replications
/// of a larger run coincide exactly with a run of `n` replications.
#[derive(Debug, Clone)]
pub struct CoupledSamples {
    /// Indexed by replication; `None` marks a divergent one.
    samples: Vec<Option<RepSample>>,
    seed: u64,
}

impl CoupledSamples {
    /// `pairs` index into `paths`; `phi` is evaluated on every path at `T`.
    /// The distance sup runs over every `snapshot_every`-th step (default 1)
    /// of the first path's config, plus the terminal time.
    pub fn run(
        paths: &[(SimConfig, CovarianceSpec)],
        pairs: &[(usize, usize)],
        phi: Option<&TestFunctional>,
        n_reps: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_reps < 2 {
            return domain("Monte Carlo estimates need at least two replications");
        }
        if n_reps > u32::MAX as usize {
            return domain("replication count exceeds the 32-bit noise key");
        }
        if pairs.iter().any(|&(a, b)| a >= paths.len() || b >= paths.len()) {
            return domain("pair index out of range");
        }
        if let Some(f) = phi {
            f.validate()?;
        }
        let proto = Ensemble::new(paths)?;
        let cadence = paths[0].0.snapshot_every.unwrap_or(1);
        let n_steps = proto.n_steps();
        let results = par_indexed(
            n_reps,
            || proto.clone(),
            |ens, i| {
                let stream = NoiseStream::new(seed, i as u32);
                let mut sup = vec![0.0f64; pairs.len()];
                ens.run(&stream, |n, states| {
                    if n % cadence == 0 || n == n_steps {
                        for (s, &(a, b)) in sup.iter_mut().zip(pairs) {
                            *s = s.max(padded_distance(&states[a], &states[b]));
                        }
                    }
                })
                .map(|()| {
                    let states = ens.states();
                    RepSample {
                        sup,
                        terminal: pairs
                            .iter()
                            .map(|&(a, b)| padded_distance(&states[a], &states[b]))
                            .collect(),
                        phi: phi
                            .map(|f| states.iter().map(|x| f.eval(x)).collect())
                            .unwrap_or_default(),
                    }
                })
            },
        );
        let samples = results
            .into_iter()
            .map(|r| match r {
                Ok(s) => Ok(Some(s)),
                Err(LabError::Divergence { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CoupledSamples { samples, seed })
    }

    pub fn n_reps(&self) -> usize {
        self.samples.len()
    }

    pub fn n_diverged(&self) -> usize {
        self.samples.iter().filter(|s| s.is_none()).count()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Converged samples among the first `n` replications; fails when more
    /// than 1% diverged.
    fn prefix(&self, n: usize) -> Result<(Vec<&RepSample>, usize)> {
        let n = n.min(self.n_reps());
        let ok: Vec<&RepSample> = self.samples[..n].iter().flatten().collect();
        let bad = n - ok.len();
        if bad as f64 > MAX_DIVERGENCE_FRACTION * n as f64 {
            return Err(LabError::DivergenceRate { diverged: bad, total: n });
        }
        if ok.len() < 2 {
            return domain("fewer than two converged replications");
        }
        Ok((ok, bad))
    }

    /// `(E sup_t ||X_a - X_b||^r)^{1/r}` over the first `n` replications
    /// (`at_terminal` replaces the sup by the value at `T`).
    pub fn strong(&self, pair: usize, r: f64, n: usize, at_terminal: bool) -> Result<(f64, f64, usize, usize)> {
        if !(r >= 1.0) {
            return domain(format!("moment order r must be >= 1, got {r}"));
        }
        let (ok, bad) = self.prefix(n)?;
        let powers: Vec<f64> = ok
            .iter()
            .map(|s| if at_terminal { s.terminal[pair] } else { s.sup[pair] }.powf(r))
            .collect();
        let m = mean(&powers);
        if m == 0.0 {
            return Ok((0.0, 0.0, ok.len(), bad));
        }
        let est = m.powf(1.0 / r);
        // delta method: d/dm m^{1/r} = m^{1/r - 1} / r
        let se = standard_error(&powers) * est / (r * m);
        Ok((est, se, ok.len(), bad))
    }

    /// Paired mean of `phi(X_a(T)) - phi(X_b(T))` over the first `n` replications.
    pub fn weak(&self, a: usize, b: usize, n: usize) -> Result<(f64, f64, usize, usize)> {
        let (ok, bad) = self.prefix(n)?;
        if ok[0].phi.is_empty() {
            return domain("no test functional was evaluated on this run");
        }
        let d: Vec<f64> = ok.iter().map(|s| s.phi[a] - s.phi[b]).collect();
        Ok((mean(&d), standard_error(&d), ok.len(), bad))
    }

    /// `phi(X_a(T))` of the converged replications in `range`.
    fn phi_values(&self, a: usize, range: std::ops::Range<usize>) -> Vec<f64> {
        self.samples[range].iter().flatten().map(|s| s.phi[a]).collect()
    }
}

fn describe(q: &CovarianceSpec) -> String {
    let kind = if q.is_diagonal() { "diagonal" } else { "dense" };
    format!("{kind}(K={}, tr={:.6e})", q.k(), q.trace())
}

fn meta(q1: &CovarianceSpec, q2: &CovarianceSpec, cfg: &SimConfig, level: Option<usize>, seed: u64) -> ReportMeta {
    ReportMeta {
        q1: describe(q1),
        q2: describe(q2),
        m: cfg.m,
        level,
        dt: cfg.dt,
        t_final: cfg.t_final,
        seed,
    }
}

fn check_same_k(q1: &CovarianceSpec, q2: &CovarianceSpec) -> Result<()> {
    if q1.k() != q2.k() {
        return domain(format!("covariances on different truncations: {} vs {}", q1.k(), q2.k()));
    }
    Ok(())
}

fn strong_report(
    samples: &CoupledSamples,
    pair: usize,
    r: f64,
    n: usize,
    at_terminal: bool,
    meta: ReportMeta,
) -> Result<ErrorReport> {
    let (estimate, std_error, n_samples, n_diverged) = samples.strong(pair, r, n, at_terminal)?;
    Ok(ErrorReport {
        estimate,
        std_error,
        n_samples,
        n_diverged,
        r: Some(r),
        signed_mean: None,
        bound_rhs: f64::NAN,
        ratio: f64::NAN,
        meta,
    })
}

fn weak_report(samples: &CoupledSamples, a: usize, b: usize, n: usize, meta: ReportMeta) -> Result<ErrorReport> {
    let (m, std_error, n_samples, n_diverged) = samples.weak(a, b, n)?;
    Ok(ErrorReport {
        estimate: m.abs(),
        std_error,
        n_samples,
        n_diverged,
        r: None,
        signed_mean: Some(m),
        bound_rhs: f64::NAN,
        ratio: f64::NAN,
        meta,
    })
}

/// `sup_t ||X^{Q1}(t) - X^{Q2}(t)||_{L^r(Omega; L^2)}` under shared noise.
pub fn strong_error(
    q1: &CovarianceSpec,
    q2: &CovarianceSpec,
    cfg: &SimConfig,
    r: f64,
    n_reps: usize,
    seed: u64,
) -> Result<ErrorReport> {
    check_same_k(q1, q2)?;
    if !(r >= 1.0) {
        return domain(format!("moment order r must be >= 1, got {r}"));
    }
    let paths = [(cfg.clone(), q1.clone()), (cfg.clone(), q2.clone())];
    let s = CoupledSamples::run(&paths, &[(0, 1)], None, n_reps, seed)?;
    let rhs = weighted_hs_sqrt_distance(q1, q2, DEFAULT_STRONG_ALPHA)?;
    Ok(strong_report(&s, 0, r, n_reps, false, meta(q1, q2, cfg, None, seed))?.with_bound(rhs))
}

/// `|E phi(X^{Q1}(T)) - E phi(X^{Q2}(T))|` by common random numbers.
pub fn weak_error(
    q1: &CovarianceSpec,
    q2: &CovarianceSpec,
    phi: &TestFunctional,
    cfg: &SimConfig,
    n_reps: usize,
    seed: u64,
) -> Result<ErrorReport> {
    check_same_k(q1, q2)?;
    let paths = [(cfg.clone(), q1.clone()), (cfg.clone(), q2.clone())];
    let s = CoupledSamples::run(&paths, &[(0, 1)], Some(phi), n_reps, seed)?;
    let rhs = weighted_trace_distance(q1, q2, DEFAULT_WEAK_ALPHA)?;
    Ok(weak_report(&s, 0, 1, n_reps, meta(q1, q2, cfg, None, seed))?.with_bound(rhs))
}

/// The same weak difference from independent samples: `Q1` on replications
/// `0..n`, `Q2` on `n..2n`. Reference for the CRN variance reduction.
pub fn weak_error_independent(
    q1: &CovarianceSpec,
    q2: &CovarianceSpec,
    phi: &TestFunctional,
    cfg: &SimConfig,
    n_reps: usize,
    seed: u64,
) -> Result<ErrorReport> {
    check_same_k(q1, q2)?;
    let both = CoupledSamples::run(&[(cfg.clone(), q1.clone()), (cfg.clone(), q2.clone())], &[], Some(phi), 2 * n_reps, seed)?;
    both.prefix(2 * n_reps)?;
    let a = both.phi_values(0, 0..n_reps);
    let b = both.phi_values(1, n_reps..2 * n_reps);
    let m = mean(&a) - mean(&b);
    let se = (standard_error(&a).powi(2) + standard_error(&b).powi(2)).sqrt();
    let n_diverged = both.n_diverged();
    let rhs = weighted_trace_distance(q1, q2, DEFAULT_WEAK_ALPHA)?;
    Ok(ErrorReport {
        estimate: m.abs(),
        std_error: se,
        n_samples: a.len().min(b.len()),
        n_diverged,
        r: None,
        signed_mean: Some(m),
        bound_rhs: f64::NAN,
        ratio: f64::NAN,
        meta: meta(q1, q2, cfg, None, seed),
    }
    .with_bound(rhs))
}

/// A KL or Galerkin sweep: one report per level and the fitted rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub mode: ErrorMode,
    /// `(level, scale, report)`; scale is `q_{N+1}` (KL) or `M` (Galerkin).
    pub points: Vec<(usize, f64, ErrorReport)>,
    pub fit: Option<RateFit>,
    pub warnings: Vec<String>,
}

impl Sweep {
    fn fitted(mode: ErrorMode, points: Vec<(usize, f64, ErrorReport)>, mut warnings: Vec<String>) -> Self {
        let usable: Vec<(f64, f64)> = points
            .iter()
            .filter(|(_, _, r)| r.estimate > 0.0)
            .map(|(_, s, r)| (*s, r.estimate))
            .collect();
        let fit = match rate_fit(&usable) {
            Ok(f) => Some(f),
            Err(e) => {
                warnings.push(format!("no rate fit: {e}"));
                None
            }
        };
        Sweep {
            mode,
            points,
            fit,
            warnings,
        }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.slope)
    }

    /// Coefficient of variation of `estimate / bound_rhs` over the points.
    pub fn ratio_cv(&self) -> f64 {
        let ratios: Vec<f64> = self
            .points
            .iter()
            .map(|p| p.2.ratio)
            .filter(|r| r.is_finite() && *r > 0.0)
            .collect();
        if ratios.len() < 2 {
            return 0.0;
        }
        crate::stats::sample_variance(&ratios).sqrt() / mean(&ratios)
    }
}

/// Coupled samples for a KL sweep: path 0 carries `Q`, path `i` carries
/// `Q_{N_i}`. Levels with `N = K` are dropped with a warning.
#[derive(Debug, Clone)]
pub struct KlSweepRun {
    law: DecayLaw,
    q: CovarianceSpec,
    levels: Vec<usize>,
    truncated: Vec<CovarianceSpec>,
    cfg: SimConfig,
    samples: CoupledSamples,
    warnings: Vec<String>,
}

impl KlSweepRun {
    pub fn run(
        law: &DecayLaw,
        ns: &[usize],
        cfg: &SimConfig,
        phi: Option<&TestFunctional>,
        n_reps: usize,
        seed: u64,
    ) -> Result<Self> {
        if ns.windows(2).any(|w| w[0] >= w[1]) {
            return domain("KL levels must be strictly increasing");
        }
        let q = law.materialize()?;
        let mut warnings = Vec::new();
        let mut levels = Vec::new();
        for &n in ns {
            if n == 0 || n > q.k() {
                return domain(format!("KL level {n} outside 1..={}", q.k()));
            }
            if n == q.k() {
                warnings.push(format!("N = {n} equals K: full-rank truncation has zero error; excluded"));
            } else {
                levels.push(n);
            }
        }
        let truncated = levels.iter().map(|&n| q.kl_truncate(n)).collect::<Result<Vec<_>>>()?;
        let mut paths = vec![(cfg.clone(), q.clone())];
        paths.extend(truncated.iter().map(|qn| (cfg.clone(), qn.clone())));
        let pairs: Vec<(usize, usize)> = (1..paths.len()).map(|i| (0, i)).collect();
        let samples = CoupledSamples::run(&paths, &pairs, phi, n_reps, seed)?;
        Ok(KlSweepRun {
            law: *law,
            q,
            levels,
            truncated,
            cfg: cfg.clone(),
            samples,
            warnings,
        })
    }

    pub fn n_reps(&self) -> usize {
        self.samples.n_reps()
    }

    /// Strong sweep over the first `n` replications.
    pub fn strong(&self, r: f64, n: usize, alpha: f64) -> Result<Sweep> {
        let mut pts = Vec::new();
        for (i, (&lvl, qn)) in self.levels.iter().zip(&self.truncated).enumerate() {
            let rep = strong_report(&self.samples, i, r, n, false, meta(&self.q, qn, &self.cfg, Some(lvl), self.samples.seed))?
                .with_bound(weighted_hs_sqrt_distance(&self.q, qn, alpha)?);
            pts.push((lvl, self.law.q(lvl + 1), rep));
        }
        Ok(Sweep::fitted(ErrorMode::Strong, pts, self.warnings.clone()))
    }

    /// Weak sweep over the first `n` replications.
    pub fn weak(&self, n: usize, alpha: f64) -> Result<Sweep> {
        let mut pts = Vec::new();
        for (i, (&lvl, qn)) in self.levels.iter().zip(&self.truncated).enumerate() {
            let rep = weak_report(&self.samples, 0, i + 1, n, meta(&self.q, qn, &self.cfg, Some(lvl), self.samples.seed))?
                .with_bound(weighted_trace_distance(&self.q, qn, alpha)?);
            pts.push((lvl, self.law.q(lvl + 1), rep));
        }
        Ok(Sweep::fitted(ErrorMode::Weak, pts, self.warnings.clone()))
    }
}

/// Error of `Q_N` against `Q` for each `N`, fitted against `q_{N+1}`.
#[allow(clippy::too_many_arguments)]
pub fn kl_rate_experiment(
    law: &DecayLaw,
    ns: &[usize],
    cfg: &SimConfig,
    mode: ErrorMode,
    phi: &TestFunctional,
    r: f64,
    n_reps: usize,
    seed: u64,
) -> Result<Sweep> {
    match mode {
        ErrorMode::Strong => KlSweepRun::run(law, ns, cfg, None, n_reps, seed)?.strong(r, n_reps, DEFAULT_STRONG_ALPHA),
        ErrorMode::Weak => KlSweepRun::run(law, ns, cfg, Some(phi), n_reps, seed)?.weak(n_reps, DEFAULT_WEAK_ALPHA),
    }
}

/// Error of `X_M` against `X_{M_ref}` at `T` for each `M`, fitted against `M`.
/// `cfg.m` is ignored; every level shares the rest of `cfg` and the noise keys.
#[allow(clippy::too_many_arguments)]
/// Coupled samples for a Galerkin sweep: path `i` runs at `M_i`, the last
/// path at the reference level `M_ref`, all on the same covariance.
#[derive(Debug, Clone)]
pub struct GalerkinSweepRun {
    q: CovarianceSpec,
    levels: Vec<usize>,
    ref_cfg: SimConfig,
    samples: CoupledSamples,
}

impl GalerkinSweepRun {
    pub fn run(
        q: &CovarianceSpec,
        ms: &[usize],
        m_ref: usize,
        cfg: &SimConfig,
        phi: Option<&TestFunctional>,
        n_reps: usize,
        seed: u64,
    ) -> Result<Self> {
        let Some(&max_m) = ms.iter().max() else {
            return domain("no Galerkin levels given");
        };
        if m_ref < 4 * max_m {
            return domain(format!("reference level {m_ref} must be at least 4 x max M = {}", 4 * max_m));
        }
        if ms.windows(2).any(|w| w[0] >= w[1]) {
            return domain("Galerkin levels must be strictly increasing");
        }
        if q.k() < m_ref {
            return domain(format!("covariance has K = {} < M_ref = {m_ref}", q.k()));
        }
        let mut paths: Vec<(SimConfig, CovarianceSpec)> = ms
            .iter()
            .map(|&m| (SimConfig { m, ..cfg.clone() }, q.clone()))
            .collect();
        let ref_cfg = SimConfig { m: m_ref, ..cfg.clone() };
        paths.push((ref_cfg.clone(), q.clone()));
        let r_idx = ms.len();
        let pairs: Vec<(usize, usize)> = (0..ms.len()).map(|i| (i, r_idx)).collect();
        let samples = CoupledSamples::run(&paths, &pairs, phi, n_reps, seed)?;
        Ok(GalerkinSweepRun {
            q: q.clone(),
            levels: ms.to_vec(),
            ref_cfg,
            samples,
        })
    }

    pub fn n_reps(&self) -> usize {
        self.samples.n_reps()
    }

    fn meta(&self, m: usize) -> ReportMeta {
        ReportMeta {
            m,
            level: Some(m),
            ..meta(&self.q, &self.q, &self.ref_cfg, Some(m), self.samples.seed)
        }
    }

    /// Strong sweep at the terminal time over the first `n` replications;
    /// the nominal rate is `M^{-alpha}`.
    pub fn strong(&self, r: f64, n: usize, alpha: f64) -> Result<Sweep> {
        let mut pts = Vec::new();
        for (i, &m) in self.levels.iter().enumerate() {
            let rep = strong_report(&self.samples, i, r, n, true, self.meta(m))?;
            pts.push((m, m as f64, rep.with_bound((m as f64).powf(-alpha))));
        }
        Ok(Sweep::fitted(ErrorMode::Strong, pts, Vec::new()))
    }

    /// Weak sweep over the first `n` replications; nominal rate `M^{-2 alpha}`.
    pub fn weak(&self, n: usize, alpha: f64) -> Result<Sweep> {
        let r_idx = self.levels.len();
        let mut pts = Vec::new();
        for (i, &m) in self.levels.iter().enumerate() {
            let rep = weak_report(&self.samples, i, r_idx, n, self.meta(m))?;
            pts.push((m, m as f64, rep.with_bound((m as f64).powf(-2.0 * alpha))));
        }
        Ok(Sweep::fitted(ErrorMode::Weak, pts, Vec::new()))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn galerkin_rate_experiment(
    q: &CovarianceSpec,
    ms: &[usize],
    m_ref: usize,
    cfg: &SimConfig,
    mode: ErrorMode,
    phi: &TestFunctional,
    r: f64,
    n_reps: usize,
    seed: u64,
) -> Result<Sweep> {
    // alpha = 1 - eps with eps = 0.01
    match mode {
        ErrorMode::Strong => GalerkinSweepRun::run(q, ms, m_ref, cfg, None, n_reps, seed)?.strong(r, n_reps, DEFAULT_WEAK_ALPHA),
        ErrorMode::Weak => GalerkinSweepRun::run(q, ms, m_ref, cfg, Some(phi), n_reps, seed)?.weak(n_reps, DEFAULT_WEAK_ALPHA),
    }
}
