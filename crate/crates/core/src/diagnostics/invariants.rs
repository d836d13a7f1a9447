//! Randomized checks of the deterministic identities and inequalities.
//!
//! Case `i` draws its inputs from the `(seed, i)` stream on the input
//! substream and runs on truncation `M = [8, 64, 256][i % 3]`. Random fields
//! have coefficients `xi_k / k` with `xi_k` standard normal.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::covariance::series::zeta;
use crate::dynamics::{bilinear_reference, nonlinearity_reference, BurgersNonlinearity};
use crate::noise::{NoiseStream, SUBSTREAM_INPUTS};
use crate::spectral::{SpectralField, DEFAULT_SUP_OVERSAMPLING};

pub const CASES: usize = 100;
pub const TRUNCATIONS: [usize; 3] = [8, 64, 256];

pub const ENERGY_TOL: f64 = 1e-11;
pub const SKEW_TOL: f64 = 1e-11;
pub const ROUNDTRIP_TOL: f64 = 1e-12;
pub const ORACLE_TOL: f64 = 1e-10;
/// Relative slack on the inequality checks (pure roundoff allowance).
pub const INEQUALITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed `violation / tolerance` (below 1 passes).
    pub worst: f64,
    pub tolerance: f64,
}

impl InvariantCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub seed: u64,
    pub checks: Vec<InvariantCheck>,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(InvariantCheck::passed)
    }
}

/// Uniform draws in `(0, 1)` and fields keyed on the input substream.
struct Inputs {
    stream: NoiseStream,
    next: usize,
}

impl Inputs {
    fn new(seed: u64, case: usize) -> Self {
        Inputs {
            stream: NoiseStream::new(seed, case as u32),
            next: 0,
        }
    }

    fn field(&mut self, m: usize) -> SpectralField {
        let xi = self.stream.normals(SUBSTREAM_INPUTS, self.next, m);
        self.next += 1;
        SpectralField::new(xi.iter().enumerate().map(|(i, x)| x / (i + 1) as f64).collect())
            .expect("finite normals")
    }

    fn uniform(&mut self) -> f64 {
        let u = self.stream.uniform(SUBSTREAM_INPUTS, 1, self.next);
        self.next += 1;
        // (0, 1]: keeps t and alpha strictly positive
        1.0 - u
    }
}

struct Tally {
    check: InvariantCheck,
}

impl Tally {
    fn new(name: &str, tolerance: f64) -> Self {
        Tally {
            check: InvariantCheck {
                name: name.into(),
                cases: 0,
                failures: 0,
                worst: 0.0,
                tolerance,
            },
        }
    }

    /// Records a case whose violation (in the unit of `tolerance`) is `v`.
    fn record(&mut self, v: f64) {
        let ratio = v / self.check.tolerance;
        self.check.cases += 1;
        if !(ratio <= 1.0) {
            self.check.failures += 1;
        }
        if ratio > self.check.worst || ratio.is_nan() {
            self.check.worst = ratio;
        }
    }
}

fn embedding_constant(delta: f64) -> f64 {
    SQRT_2 * (PI.powf(-(1.0 + delta)) * zeta(1.0 + delta)).sqrt()
}

/// Runs every randomized check over [`CASES`] cases each.
pub fn run_invariant_suite(seed: u64) -> InvariantReport {
    let mut energy = Tally::new("energy_cancellation", ENERGY_TOL);
    let mut skew = Tally::new("skew_identity", SKEW_TOL);
    let mut poincare = Tally::new("poincare", INEQUALITY_SLACK);
    let mut poincare_sharp = Tally::new("poincare_spectral", INEQUALITY_SLACK);
    let mut smoothing = Tally::new("semigroup_smoothing", INEQUALITY_SLACK);
    let mut embedding = Tally::new("sobolev_embedding", INEQUALITY_SLACK);
    let mut roundtrip = Tally::new("transform_roundtrip", ROUNDTRIP_TOL);
    let mut oracle = Tally::new("nonlinearity_oracle", ORACLE_TOL);
    let mut monotone = Tally::new("parseval_monotonicity", INEQUALITY_SLACK);
    let mut compose = Tally::new("fractional_composition", ROUNDTRIP_TOL);

    let mut nls: Vec<BurgersNonlinearity> = TRUNCATIONS.iter().map(|&m| BurgersNonlinearity::new(m)).collect();

    for case in 0..CASES {
        let slot = case % TRUNCATIONS.len();
        let m = TRUNCATIONS[slot];
        let nl = &mut nls[slot];
        let mut inp = Inputs::new(seed, case);
        let x = inp.field(m);
        let y = inp.field(m);
        let nx = x.l2_norm();

        let mut bx = vec![0.0; m];
        nl.apply(x.coeffs(), &mut bx);
        let bx = SpectralField::from_vec_unchecked(bx);
        energy.record(bx.dot(&x).abs() / (nx * nx * nx));

        let mut bxy = vec![0.0; m];
        nl.apply_bilinear(x.coeffs(), y.coeffs(), &mut bxy);
        let bxy = SpectralField::from_vec_unchecked(bxy);
        let lhs = x.dot(&bxy);
        let rhs = -0.5 * y.dot(&bx);
        let scale = lhs.abs().max(rhs.abs()).max(nx * nx * y.l2_norm());
        skew.record((lhs - rhs).abs() / scale);

        let h_half = x.h_alpha_norm(0.5);
        poincare.record(((nx - h_half / SQRT_2) / nx).max(0.0));
        poincare_sharp.record(((nx - h_half / PI) / nx).max(0.0));

        let alpha = 2.0 * inp.uniform();
        let t = inp.uniform();
        let lhs = x.semigroup_apply(t).expect("t > 0").h_alpha_norm(alpha);
        let bound = (alpha * (alpha.ln() - 1.0)).exp() * t.powf(-alpha) * nx;
        smoothing.record(((lhs - bound) / bound).max(0.0));

        let delta = inp.uniform();
        let sup = x.sup_norm(DEFAULT_SUP_OVERSAMPLING * m).expect("oversampled grid");
        let bound = embedding_constant(delta) * x.h_alpha_norm((1.0 + delta) / 4.0);
        embedding.record(((sup - bound) / bound).max(0.0));

        let grid = m + (inp.uniform() * 3.0 * m as f64) as usize;
        let back = x
            .to_grid(grid)
            .and_then(|g| g.from_grid(m))
            .expect("grid >= M");
        roundtrip.record(max_abs_diff(&back, &x));

        let refb = nonlinearity_reference(&x);
        oracle.record(max_abs_diff(&refb, &bx));
        // the bilinear fast path against its own convolution oracle
        oracle.record(max_abs_diff(&bilinear_reference(&x, &y), &bxy));

        let a = 2.0 * inp.uniform() - 1.0;
        let b = a + inp.uniform();
        monotone.record(((x.h_alpha_norm(a) - x.h_alpha_norm(b)) / x.h_alpha_norm(b)).max(0.0));
        let ab = x.apply_fractional_power(a).apply_fractional_power(b - a);
        let direct = x.apply_fractional_power(b);
        compose.record(max_abs_diff(&ab, &direct) / direct.coeffs().iter().fold(0.0f64, |s, v| s.max(v.abs())));
    }

    // the single-mode instances quoted with the inequalities
    let h1 = SpectralField::basis(1, 1).expect("valid");
    poincare.record(((1.0 - h1.h_alpha_norm(0.5) / SQRT_2) / 1.0).max(0.0));

    InvariantReport {
        seed,
        checks: vec![
            energy.check,
            skew.check,
            poincare.check,
            poincare_sharp.check,
            smoothing.check,
            embedding.check,
            roundtrip.check,
            oracle.check,
            monotone.check,
            compose.check,
        ],
    }
}

fn max_abs_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
