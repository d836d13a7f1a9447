//! Experiment execution and persistence: config in, one run directory out.
//!
//! A run directory holds `config.toml` (the exact input bytes), the result
//! CSVs, `summary.json` and `manifest.json`. Nothing written there depends on
//! the wall clock or the thread count; the timestamp lives only in the
//! directory name.

mod config;
mod run;

use serde::{Deserialize, Serialize};

pub use config::{
    Assumptions, DiagnosticsSection, ErrorSection, ExperimentConfig, GalerkinSection, GateSection,
    InitialSection, KlSection, Plan, SimSection,
};
pub use run::{
    execute, reproduce, run_config, Gate, Manifest, Outcome, RateRow, Reproduction, RunRequest, RunResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    KlRate,
    GalerkinRate,
    PerturbationPair,
    Diagnostics,
    Invariants,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::KlRate,
        ExperimentKind::GalerkinRate,
        ExperimentKind::PerturbationPair,
        ExperimentKind::Diagnostics,
        ExperimentKind::Invariants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::KlRate => "kl_rate",
            ExperimentKind::GalerkinRate => "galerkin_rate",
            ExperimentKind::PerturbationPair => "perturbation_pair",
            ExperimentKind::Diagnostics => "diagnostics",
            ExperimentKind::Invariants => "invariants",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether the kind reads (and requires) the named config table.
    pub(crate) fn uses(self, section: &str) -> bool {
        use ExperimentKind::*;
        match section {
            "sim" | "covariance" => self != Invariants,
            "perturbed" => self == PerturbationPair,
            "kl" => self == KlRate,
            "galerkin" => self == GalerkinRate,
            "diagnostics" => self == Diagnostics,
            _ => false,
        }
    }

    /// `(strong, weak, weak/strong)` slope windows used when the config sets none.
    pub fn default_gates(self) -> [Option<[f64; 2]>; 3] {
        match self {
            ExperimentKind::KlRate => [Some([0.4, 0.6]), Some([0.7, 1.2]), Some([1.5, 2.5])],
            ExperimentKind::GalerkinRate => [Some([-1.15, -0.75]), Some([-2.3, -1.4]), None],
            _ => [None, None, None],
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentKind::KlRate => "strong and weak error of Karhunen-Loeve noise truncation Q_N against Q",
            ExperimentKind::GalerkinRate => "strong and weak error of the spectral Galerkin truncation X_M",
            ExperimentKind::PerturbationPair => "strong and weak error between solutions driven by two covariances",
            ExperimentKind::Diagnostics => "Monte Carlo checks of the exponential, moment and OU estimates",
            ExperimentKind::Invariants => "randomized checks of the deterministic identities and inequalities",
        }
    }

    /// Long-form documentation: the estimate targeted and the config schema.
    pub fn describe(self) -> String {
        let body = match self {
            ExperimentKind::KlRate => KL_DOC,
            ExperimentKind::GalerkinRate => GALERKIN_DOC,
            ExperimentKind::PerturbationPair => PAIR_DOC,
            ExperimentKind::Diagnostics => DIAGNOSTICS_DOC,
            ExperimentKind::Invariants => INVARIANTS_DOC,
        };
        format!("{}: {}\n\n{}\n{}", self.name(), self.summary(), body.trim(), COMMON_DOC)
    }
}

const COMMON_DOC: &str = r#"
Common keys:
  kind = "<kind>"          seed = <u64>          n_reps = <int, default 1000>
  id = "<label>"           output_dir = "<dir>"  (parent of the run directory)
  [sim]          m, t_final, dt, scheme = "exponential_euler" | "semi_implicit_euler",
                 oversampling = 4, linear = false, snapshot_every = <steps>
  [sim.initial]  type = "zero" | "deterministic" (coeffs = [...]) |
                 "random_smooth" (c, s, delta0; needs s > 3/2 + 2 delta0)
  [covariance]   type = "polynomial" (c, beta, k) | "exponential" (c, rho, k) |
                 "diagonal" (q = [...]) | "matrix" (rows = [[...]]) | "matrix_csv" (path)
  [errors]       modes = ["strong", "weak"], r = 2.0, strong_reps = <prefix>,
                 functional = { kind = "cosine_mode", k = 1 } | { kind = "gaussian_norm", a = 1.0 }
                 | { kind = "linear_bounded", k = 1 }
  [assumptions]  epsilon = 0.01 (bound weights alpha = 1 - epsilon weak, 1 - 2 epsilon strong),
                 gamma0, p (recorded only)
  [gates]        strong_slope = [lo, hi], weak_slope = [lo, hi], slope_ratio = [lo, hi]
"#;

const KL_DOC: &str = r#"
Targets, for q_k the eigenvalues of Q (decreasing) and Q_N its N-term truncation:
  strong  sup_t ||X^Q(t) - X^{Q_N}(t)||_{L^r(Omega; L^2)} = O( sqrt(q_{N+1}) )
          bound column: ||(-A)^{-(1/2 - eps)} (Q^{1/2} - Q_N^{1/2})||_HS
  weak    |E phi(X^Q(T)) - E phi(X^{Q_N}(T))| = O( q_{N+1} )
          bound column: tr((-A)^{-(1 - eps)} (Q - Q_N))
Paths for every N share the Brownian motions of the retained modes (common
random numbers). Slopes are fitted in log-log against q_{N+1}; the default
gates are strong [0.4, 0.6], weak [0.7, 1.2] and weak/strong [1.5, 2.5].
Keys: covariance must be "polynomial" or "exponential";
  [kl] levels = [N_1, N_2, ...] (strictly increasing, N = K is dropped).
"#;

const GALERKIN_DOC: &str = r#"
Targets, for the spectral Galerkin system X_M on the first M sine modes:
  strong  ||X(T) - X_M(T)||_{L^r(Omega; L^2)} = O( M^{-alpha} ),   alpha = 1 - eps
  weak    |E phi(X(T)) - E phi(X_M(T))|       = O( M^{-2 alpha} )
with X replaced by a reference run at M_ref >= 4 max M on the same noise.
Slopes are fitted in log-log against M; default gates are strong
[-1.15, -0.75] and weak [-2.3, -1.4]. sim.m is ignored.
Keys: [galerkin] levels = [M_1, ...], reference = M_ref (covariance needs K >= M_ref).
"#;

const PAIR_DOC: &str = r#"
Targets, for two covariances Q1 ([covariance]) and Q2 ([perturbed]) on K modes:
  strong  sup_t ||X^{Q1} - X^{Q2}||_{L^r} <~ ||(-A)^{-(1/2 - eps)} (Q1^{1/2} - Q2^{1/2})||_HS
  weak    |E phi(X^{Q1}(T)) - E phi(X^{Q2}(T))| <~ tr((-A)^{-(1 - eps)} (Q1 - Q2))
The scale and bound columns carry the right-hand sides; no gate applies.
"#;

const DIAGNOSTICS_DOC: &str = r#"
Checks (each enabled by its key in [diagnostics]):
  exp_alpha_fraction = f   E exp(alpha sup||Y_M||^2 + alpha int||grad Y_M||^2) <= 2 e^{alpha T trQ},
                           alpha = f / (2 ||Q||)
  moment_p = p             E[sup||X_M||^p + 2p int||X_M||^{p-2}||grad X_M||^2]
                           <= F_{p,T}(trQ) (E||X_0||^p + 1), p >= 4
  conv_moment = [a, p]     E||Y_M(T)||^p scales as (theta)^{p/2} over theta Q
  linf_p = p               E sup_t ||Y_M||_inf^p scales as (theta)^{p/2} over theta Q
  second_moment = true     E||Y_M(T)||^2 equals the exact OU variance sum
  ou_configurations = n    E||Y^{Q1}(t) - Y^{Q2}(t)||^2 equals
                           sum_k (sqrt q1_k - sqrt q2_k)^2 (1 - e^{-2 lambda_k t}) / (2 lambda_k)
                           on n random diagonal pairs
One-sided checks pass when MC - 3 SE <= RHS, equalities when |MC - exact| <= 3 SE.
The run exits 1 when any check fails.
"#;

const INVARIANTS_DOC: &str = r#"
Checks over 100 random cases each, M in {8, 64, 256}:
  <B_M(x), x> = 0, <x, B[x, y]> = -1/2 <y, B(x)>, Poincare (1/sqrt2 and 1/pi),
  ||(-A)^a e^{tA} x|| <= e^{a(log a - 1)} t^{-a} ||x||, sup|x| <= C_delta ||x||_{H^{(1+delta)/4}},
  sine transform roundtrip, fast vs convolution nonlinearity, norm monotonicity in the
  Sobolev index, composition of fractional powers.
Only seed is read. The run exits 1 when any check fails.
"#;
