//! The experiment file schema. Every table rejects unknown keys, and
//! [`ExperimentConfig::plan`] validates the whole file before any
//! computation starts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentKind;
use crate::covariance::{CovarianceSource, CovarianceSpec, DecayLaw};
use crate::dynamics::{InitialCondition, Scheme, SimConfig};
use crate::error::{LabError, Result};
use crate::error_lab::{ErrorMode, TestFunctional};
use crate::spectral::{SpectralField, DEFAULT_SUP_OVERSAMPLING};

fn default_reps() -> usize {
    1000
}

fn default_r() -> f64 {
    2.0
}

fn default_modes() -> Vec<ErrorMode> {
    vec![ErrorMode::Strong]
}

fn default_functional() -> TestFunctional {
    TestFunctional::CosineMode { k: 1 }
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_oversampling() -> usize {
    DEFAULT_SUP_OVERSAMPLING
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Label written to the `experiment_id` column; defaults to the kind.
    pub id: Option<String>,
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub n_reps: usize,
    /// Parent of the run directory when `--out` is not given.
    pub output_dir: Option<String>,
    pub sim: Option<SimSection>,
    /// `Q`, or `Q1` for a perturbation pair.
    pub covariance: Option<CovarianceSource>,
    /// `Q2` of a perturbation pair.
    pub perturbed: Option<CovarianceSource>,
    #[serde(default)]
    pub errors: ErrorSection,
    pub kl: Option<KlSection>,
    pub galerkin: Option<GalerkinSection>,
    pub diagnostics: Option<DiagnosticsSection>,
    #[serde(default)]
    pub assumptions: Assumptions,
    #[serde(default)]
    pub gates: GateSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    /// Truncation `M` (ignored by Galerkin sweeps and the OU check).
    pub m: Option<usize>,
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_oversampling")]
    pub oversampling: usize,
    #[serde(default)]
    pub linear: bool,
    /// Observation cadence of the supremum over time (every step if unset).
    pub snapshot_every: Option<usize>,
    #[serde(default)]
    pub initial: InitialSection,
}

fn default_scheme() -> Scheme {
    Scheme::ExponentialEuler
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    #[default]
    Zero,
    /// Sine coefficients `a_1, a_2, ...`.
    Deterministic { coeffs: Vec<f64> },
    RandomSmooth { c: f64, s: f64, delta0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSection {
    #[serde(default = "default_modes")]
    pub modes: Vec<ErrorMode>,
    /// Strong moment order.
    #[serde(default = "default_r")]
    pub r: f64,
    /// Strong estimates use only the first `strong_reps` replications.
    pub strong_reps: Option<usize>,
    #[serde(default = "default_functional")]
    pub functional: TestFunctional,
}

impl Default for ErrorSection {
    fn default() -> Self {
        ErrorSection {
            modes: default_modes(),
            r: default_r(),
            strong_reps: None,
            functional: default_functional(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlSection {
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalerkinSection {
    pub levels: Vec<usize>,
    pub reference: usize,
}

/// Each present key enables one check.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Exponential bound at `alpha = exp_alpha_fraction / (2 ||Q||)`.
    pub exp_alpha_fraction: Option<f64>,
    /// Moment bound order `p >= 4`.
    pub moment_p: Option<f64>,
    /// Stochastic convolution moment scaling at `(alpha, p)`.
    pub conv_moment: Option<[f64; 2]>,
    /// Sup-norm scaling order.
    pub linf_p: Option<f64>,
    #[serde(default)]
    pub second_moment: bool,
    /// Number of random diagonal OU configurations.
    pub ou_configurations: Option<usize>,
}

/// Hypothesis knobs. `epsilon` sets the bound weights (`alpha = 1 - epsilon`
/// weak, `1 - 2 epsilon` strong); `gamma0` and `p` are recorded only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assumptions {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub gamma0: Option<f64>,
    pub p: Option<f64>,
}

impl Default for Assumptions {
    fn default() -> Self {
        Assumptions {
            epsilon: default_epsilon(),
            gamma0: None,
            p: None,
        }
    }
}

impl Assumptions {
    pub fn weak_alpha(&self) -> f64 {
        1.0 - self.epsilon
    }

    pub fn strong_alpha(&self) -> f64 {
        1.0 - 2.0 * self.epsilon
    }
}

/// Windows enforced by `--check`; unset windows fall back to the kind's
/// defaults (see [`ExperimentKind::default_gates`]).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    pub strong_slope: Option<[f64; 2]>,
    pub weak_slope: Option<[f64; 2]>,
    /// Window on fitted weak slope / fitted strong slope.
    pub slope_ratio: Option<[f64; 2]>,
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub kind: ExperimentKind,
    pub id: String,
    pub seed: u64,
    pub n_reps: usize,
    pub sim: Option<SimConfig>,
    pub q: Option<CovarianceSpec>,
    pub q2: Option<CovarianceSpec>,
    pub law: Option<DecayLaw>,
    pub config: ExperimentConfig,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Config(msg.into()))
}

fn as_config(e: LabError) -> LabError {
    match e {
        LabError::Config(_) => e,
        other => LabError::Config(other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Validates everything and materializes covariances; relative CSV paths
    /// resolve against `base`.
    pub fn plan(&self, base: &Path) -> Result<Plan> {
        self.plan_inner(base).map_err(as_config)
    }

    fn plan_inner(&self, base: &Path) -> Result<Plan> {
        use ExperimentKind::*;
        let kind = self.kind;
        if self.n_reps < 2 || self.n_reps > u32::MAX as usize {
            return config_err(format!("n_reps = {} outside 2..=2^32-1", self.n_reps));
        }
        if !(self.assumptions.epsilon > 0.0 && self.assumptions.epsilon < 0.5) {
            return config_err("epsilon must lie in (0, 1/2)");
        }
        if !(self.errors.r >= 1.0 && self.errors.r.is_finite()) {
            return config_err("r must be >= 1");
        }
        if self.errors.modes.is_empty() {
            return config_err("errors.modes is empty");
        }
        if let Some(n) = self.errors.strong_reps {
            if n < 2 || n > self.n_reps {
                return config_err(format!("strong_reps = {n} outside 2..=n_reps"));
            }
        }
        self.errors.functional.validate()?;
        for (name, w) in [
            ("strong_slope", self.gates.strong_slope),
            ("weak_slope", self.gates.weak_slope),
            ("slope_ratio", self.gates.slope_ratio),
        ] {
            if let Some([lo, hi]) = w {
                if !(lo <= hi) {
                    return config_err(format!("gate {name} needs lo <= hi"));
                }
            }
        }

        let expect = |present: bool, what: &str| -> Result<()> {
            match (present, kind.uses(what)) {
                (true, false) => config_err(format!("[{what}] is not used by kind {}", kind.name())),
                (false, true) => config_err(format!("kind {} needs [{what}]", kind.name())),
                _ => Ok(()),
            }
        };
        expect(self.sim.is_some(), "sim")?;
        expect(self.covariance.is_some(), "covariance")?;
        expect(self.perturbed.is_some(), "perturbed")?;
        expect(self.kl.is_some(), "kl")?;
        expect(self.galerkin.is_some(), "galerkin")?;
        expect(self.diagnostics.is_some(), "diagnostics")?;

        let q = self.covariance.as_ref().map(|c| c.build(base)).transpose()?;
        let q2 = self.perturbed.as_ref().map(|c| c.build(base)).transpose()?;
        let law = self.covariance.as_ref().and_then(CovarianceSource::decay_law);

        let sim = match &self.sim {
            Some(s) => {
                let m = match (s.m, kind) {
                    (Some(m), _) => m,
                    (None, GalerkinRate) => self.galerkin.as_ref().map_or(1, |g| g.reference),
                    (None, Diagnostics) => q.as_ref().map_or(1, CovarianceSpec::k),
                    (None, _) => return config_err("sim.m is required"),
                };
                let initial = match &s.initial {
                    InitialSection::Zero => InitialCondition::zero(),
                    InitialSection::Deterministic { coeffs } => InitialCondition::Deterministic {
                        field: SpectralField::new(coeffs.clone())?,
                    },
                    &InitialSection::RandomSmooth { c, s, delta0 } => InitialCondition::RandomSmooth { c, s, delta0 },
                };
                let cfg = SimConfig {
                    m,
                    t_final: s.t_final,
                    dt: s.dt,
                    scheme: s.scheme,
                    oversampling: s.oversampling,
                    initial,
                    linear: s.linear,
                    snapshot_every: s.snapshot_every,
                };
                cfg.validate()?;
                Some(cfg)
            }
            None => None,
        };

        match kind {
            KlRate => {
                let Some(law) = law else {
                    return config_err("kl_rate needs a polynomial or exponential covariance law");
                };
                let levels = &self.kl.as_ref().expect("checked").levels;
                if levels.len() < 2 {
                    return config_err("kl.levels needs at least two entries");
                }
                if levels.windows(2).any(|w| w[0] >= w[1]) || levels[0] == 0 || *levels.last().unwrap() > law.k() {
                    return config_err(format!("kl.levels must increase strictly within 1..={}", law.k()));
                }
            }
            GalerkinRate => {
                let g = self.galerkin.as_ref().expect("checked");
                if g.levels.len() < 2 || g.levels.windows(2).any(|w| w[0] >= w[1]) || g.levels[0] == 0 {
                    return config_err("galerkin.levels must be >= 2 strictly increasing positive integers");
                }
                let max = *g.levels.last().unwrap();
                if g.reference < 4 * max {
                    return config_err(format!("galerkin.reference must be >= 4 x {max}"));
                }
                if q.as_ref().expect("checked").k() < g.reference {
                    return config_err("covariance needs K >= galerkin.reference");
                }
            }
            PerturbationPair => {
                if q.as_ref().expect("checked").k() != q2.as_ref().expect("checked").k() {
                    return config_err("covariance and perturbed need the same K");
                }
            }
            Diagnostics => {
                let d = self.diagnostics.as_ref().expect("checked");
                if *d == DiagnosticsSection::default() {
                    return config_err("[diagnostics] enables no check");
                }
                if let Some(f) = d.exp_alpha_fraction {
                    if !(f > 0.0 && f < 1.0) {
                        return config_err("exp_alpha_fraction must lie in (0, 1)");
                    }
                }
                if d.moment_p.is_some_and(|p| !(p >= 4.0)) {
                    return config_err("moment_p must be >= 4");
                }
                if let Some([a, p]) = d.conv_moment {
                    if !((0.0..0.5).contains(&a) && p > 0.0) {
                        return config_err("conv_moment needs alpha in [0, 1/2) and p > 0");
                    }
                }
                if d.linf_p.is_some_and(|p| !(p > 0.0)) {
                    return config_err("linf_p must be > 0");
                }
                if d.ou_configurations == Some(0) {
                    return config_err("ou_configurations must be >= 1");
                }
            }
            Invariants => {}
        }

        Ok(Plan {
            kind,
            id: self.id.clone().unwrap_or_else(|| kind.name().to_string()),
            seed: self.seed,
            n_reps: self.n_reps,
            sim,
            q,
            q2,
            law,
            config: self.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KL: &str = r#"
kind = "kl_rate"
seed = 7
n_reps = 10

[sim]
m = 16
t_final = 0.01
dt = 0.001

[covariance]
type = "polynomial"
c = 1.0
beta = 4.0
k = 32

[kl]
levels = [2, 4]
"#;

    #[test]
    fn parses_and_plans() {
        let cfg = ExperimentConfig::from_toml(KL).unwrap();
        let plan = cfg.plan(Path::new(".")).unwrap();
        assert_eq!(plan.id, "kl_rate");
        assert_eq!(plan.sim.unwrap().n_steps(), 10);
        assert_eq!(plan.law.unwrap().k(), 32);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let bad = KL.replace("seed = 7", "seed = 7\nsed = 8");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(LabError::Config(_))));
        let bad = KL.replace("dt = 0.001", "dt = 0.001\nstep = 1");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let extra = format!("{KL}\n[galerkin]\nlevels = [2, 4]\nreference = 16\n");
        let cfg = ExperimentConfig::from_toml(&extra).unwrap();
        assert!(matches!(cfg.plan(Path::new(".")), Err(LabError::Config(_))));
    }

    #[test]
    fn domain_errors_become_config_errors() {
        let bad = KL.replace("dt = 0.001", "dt = 0.003");
        let cfg = ExperimentConfig::from_toml(&bad).unwrap();
        assert!(matches!(cfg.plan(Path::new(".")), Err(LabError::Config(_))));
        let bad = KL.replace("levels = [2, 4]", "levels = [4, 2]");
        assert!(ExperimentConfig::from_toml(&bad).unwrap().plan(Path::new(".")).is_err());
    }
}
