use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, Plan};
use super::ExperimentKind;
use crate::covariance::{weighted_hs_sqrt_distance, weighted_trace_distance};
use crate::diagnostics::{
    check_exp_bound_y, check_linf_scaling_y, check_moment_bound_x, check_ou_sharpness,
    check_stoch_conv_moment, check_stoch_conv_second_moment, random_ou_configuration, run_invariant_suite,
    BoundCheckResult, InvariantReport,
};
use crate::dynamics::SimConfig;
use crate::error::{LabError, Result};
use crate::error_lab::{
    strong_error, weak_error, ErrorMode, ErrorReport, GalerkinSweepRun, KlSweepRun, RateFit, Sweep,
};

pub const CONFIG_FILE: &str = "config.toml";
pub const RESULTS_FILE: &str = "results.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const INVARIANTS_FILE: &str = "invariants.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// One line of the rate CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub experiment_id: String,
    pub mode: ErrorMode,
    #[serde(rename = "N_or_M")]
    pub level: usize,
    pub scale: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub bound_rhs: f64,
    pub ratio: f64,
    pub n_reps: usize,
    pub seed: u64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub passed: bool,
}

impl Gate {
    fn window(name: &str, value: Option<f64>, window: [f64; 2]) -> Self {
        let passed = value.is_some_and(|v| v >= window[0] && v <= window[1]);
        Gate {
            name: name.into(),
            value,
            window: Some(window),
            passed,
        }
    }

    fn flag(name: &str, value: f64, passed: bool) -> Self {
        Gate {
            name: name.into(),
            value: Some(value),
            window: None,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub experiment_id: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub n_reps: usize,
    pub rows: Vec<RateRow>,
    pub fits: BTreeMap<String, RateFit>,
    pub sweeps: Vec<Sweep>,
    pub pair_reports: Vec<ErrorReport>,
    pub checks: Vec<BoundCheckResult>,
    pub invariants: Option<InvariantReport>,
    pub gates: Vec<Gate>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn gates_passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    /// Diagnostics and invariant runs fail on any failed check; rate runs
    /// only when gates are enforced.
    pub fn failed(&self, enforce: bool) -> bool {
        let always = matches!(self.kind, ExperimentKind::Diagnostics | ExperimentKind::Invariants);
        (enforce || always) && !self.gates_passed()
    }
}

fn rows_of(id: &str, seed: u64, points: &[(usize, f64, ErrorReport)], mode: ErrorMode) -> Vec<RateRow> {
    points
        .iter()
        .map(|(level, scale, r)| RateRow {
            experiment_id: id.into(),
            mode,
            level: *level,
            scale: *scale,
            estimate: r.estimate,
            std_error: r.std_error,
            bound_rhs: r.bound_rhs,
            ratio: r.ratio,
            n_reps: r.n_samples,
            seed,
            dt: r.meta.dt,
            t_final: r.meta.t_final,
        })
        .collect()
}

fn mode_name(mode: ErrorMode) -> &'static str {
    match mode {
        ErrorMode::Strong => "strong",
        ErrorMode::Weak => "weak",
    }
}

/// Runs a validated plan on the current rayon pool.
pub fn execute(plan: &Plan) -> Result<Outcome> {
    let cfg = &plan.config;
    let mut out = Outcome {
        experiment_id: plan.id.clone(),
        kind: plan.kind,
        seed: plan.seed,
        n_reps: plan.n_reps,
        rows: Vec::new(),
        fits: BTreeMap::new(),
        sweeps: Vec::new(),
        pair_reports: Vec::new(),
        checks: Vec::new(),
        invariants: None,
        gates: Vec::new(),
        warnings: Vec::new(),
    };
    let wants = |m: ErrorMode| cfg.errors.modes.contains(&m);
    let strong_n = cfg.errors.strong_reps.unwrap_or(plan.n_reps);
    let phi = wants(ErrorMode::Weak).then_some(&cfg.errors.functional);
    let (sa, wa) = (cfg.assumptions.strong_alpha(), cfg.assumptions.weak_alpha());

    match plan.kind {
        ExperimentKind::KlRate => {
            let law = plan.law.as_ref().expect("planned");
            let levels = &cfg.kl.as_ref().expect("planned").levels;
            let run = KlSweepRun::run(law, levels, sim(plan), phi, plan.n_reps, plan.seed)?;
            if wants(ErrorMode::Strong) {
                out.sweeps.push(run.strong(cfg.errors.r, strong_n, sa)?);
            }
            if wants(ErrorMode::Weak) {
                out.sweeps.push(run.weak(plan.n_reps, wa)?);
            }
        }
        ExperimentKind::GalerkinRate => {
            let g = cfg.galerkin.as_ref().expect("planned");
            let q = plan.q.as_ref().expect("planned");
            let run = GalerkinSweepRun::run(q, &g.levels, g.reference, sim(plan), phi, plan.n_reps, plan.seed)?;
            if wants(ErrorMode::Strong) {
                out.sweeps.push(run.strong(cfg.errors.r, strong_n, wa)?);
            }
            if wants(ErrorMode::Weak) {
                out.sweeps.push(run.weak(plan.n_reps, wa)?);
            }
        }
        ExperimentKind::PerturbationPair => {
            let (q1, q2) = (plan.q.as_ref().expect("planned"), plan.q2.as_ref().expect("planned"));
            let sc = sim(plan);
            if wants(ErrorMode::Strong) {
                let rhs = weighted_hs_sqrt_distance(q1, q2, sa)?;
                let r = strong_error(q1, q2, sc, cfg.errors.r, strong_n, plan.seed)?.with_bound(rhs);
                out.rows.extend(rows_of(&plan.id, plan.seed, &[(sc.m, rhs, r.clone())], ErrorMode::Strong));
                out.pair_reports.push(r);
            }
            if let Some(phi) = phi {
                let rhs = weighted_trace_distance(q1, q2, wa)?;
                let r = weak_error(q1, q2, phi, sc, plan.n_reps, plan.seed)?.with_bound(rhs);
                out.rows.extend(rows_of(&plan.id, plan.seed, &[(sc.m, rhs, r.clone())], ErrorMode::Weak));
                out.pair_reports.push(r);
            }
        }
        ExperimentKind::Diagnostics => {
            out.checks = run_diagnostics(plan)?;
            for c in &out.checks {
                out.gates.push(Gate::flag(&c.name, c.lhs_estimate, c.satisfied));
            }
        }
        ExperimentKind::Invariants => {
            let rep = run_invariant_suite(plan.seed);
            for c in &rep.checks {
                out.gates.push(Gate::flag(&c.name, c.worst, c.passed()));
            }
            out.invariants = Some(rep);
        }
    }

    let sweeps = std::mem::take(&mut out.sweeps);
    for s in &sweeps {
        out.rows.extend(rows_of(&plan.id, plan.seed, &s.points, s.mode));
        if let Some(f) = &s.fit {
            out.fits.insert(mode_name(s.mode).into(), f.clone());
        }
        out.warnings.extend(s.warnings.iter().cloned());
    }
    out.sweeps = sweeps;
    out.warnings.dedup();

    if matches!(plan.kind, ExperimentKind::KlRate | ExperimentKind::GalerkinRate) {
        let [ds, dw, dr] = plan.kind.default_gates();
        let g = &cfg.gates;
        let slope = |m: &str| out.fits.get(m).map(|f| f.slope);
        let (s, w) = (slope("strong"), slope("weak"));
        if wants(ErrorMode::Strong) {
            if let Some(win) = g.strong_slope.or(ds) {
                out.gates.push(Gate::window("strong_slope", s, win));
            }
        }
        if wants(ErrorMode::Weak) {
            if let Some(win) = g.weak_slope.or(dw) {
                out.gates.push(Gate::window("weak_slope", w, win));
            }
        }
        if wants(ErrorMode::Strong) && wants(ErrorMode::Weak) {
            if let Some(win) = g.slope_ratio.or(dr) {
                let ratio = s.zip(w).map(|(s, w)| w / s);
                out.gates.push(Gate::window("slope_ratio", ratio, win));
            }
        }
    }
    Ok(out)
}

fn sim(plan: &Plan) -> &SimConfig {
    plan.sim.as_ref().expect("planned")
}

fn run_diagnostics(plan: &Plan) -> Result<Vec<BoundCheckResult>> {
    let d = plan.config.diagnostics.as_ref().expect("planned");
    let q = plan.q.as_ref().expect("planned");
    let cfg = sim(plan);
    let (n, seed) = (plan.n_reps, plan.seed);
    let mut checks = Vec::new();
    if let Some(f) = d.exp_alpha_fraction {
        let norm = q.op_norm();
        let alpha = if norm > 0.0 { f * 0.5 / norm } else { f };
        checks.push(check_exp_bound_y(q, alpha, cfg, n, seed)?);
    }
    if let Some(p) = d.moment_p {
        checks.push(check_moment_bound_x(q, p, cfg, n, seed)?);
    }
    if let Some([alpha, p]) = d.conv_moment {
        checks.push(check_stoch_conv_moment(q, alpha, p, cfg, n, seed)?);
    }
    if let Some(p) = d.linf_p {
        checks.push(check_linf_scaling_y(q, p, cfg, n, seed)?);
    }
    if d.second_moment {
        checks.push(check_stoch_conv_second_moment(q, cfg, n, seed)?);
    }
    for j in 0..d.ou_configurations.unwrap_or(0) {
        let (q1, q2, t) = random_ou_configuration(seed, j)?;
        let steps = ((t / cfg.dt).round() as usize).max(1);
        let run_cfg = SimConfig {
            t_final: t,
            dt: t / steps as f64,
            ..cfg.clone()
        };
        let mut c = check_ou_sharpness(&q1, &q2, t, &run_cfg, n, seed)?;
        c.name = format!("ou_sharpness_{j}");
        checks.push(c);
    }
    Ok(checks)
}

/// Provenance written next to the outputs; enough to rerun bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub kind: ExperimentKind,
    pub experiment_id: String,
    /// Effective seed (after any command-line override).
    pub seed: u64,
    pub config_file: String,
    pub config_sha256: String,
    /// Directory that relative paths in the config resolve against.
    pub config_base: String,
    /// Output file name to SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct RunRequest {
    pub config: PathBuf,
    /// Parent of the run directory; falls back to `output_dir`, then `runs`.
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub dir: PathBuf,
    pub outcome: Outcome,
    pub manifest: Manifest,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_config(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Parses, validates, runs and persists one experiment. Nothing touches the
/// disk until the config has been fully validated.
pub fn run_config(req: &RunRequest) -> Result<RunResult> {
    let text = read_config(&req.config)?;
    let base = absolute(req.config.parent().unwrap_or(Path::new(".")));
    let parent = req.out.clone();
    run_text(&text, &base, parent, req.seed)
}

fn run_text(text: &str, base: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<RunResult> {
    let mut cfg = ExperimentConfig::from_toml(text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let plan = cfg.plan(base)?;
    let outcome = execute(&plan)?;
    let parent = out
        .or_else(|| cfg.output_dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let dir = create_run_dir(&parent, &plan.id)?;
    let manifest = write_outputs(&dir, text, base, &outcome)?;
    Ok(RunResult { dir, outcome, manifest })
}

fn create_run_dir(parent: &Path, id: &str) -> Result<PathBuf> {
    fs::create_dir_all(parent)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let stem = format!("{id}_{stamp}");
    for n in 0.. {
        let name = if n == 0 { stem.clone() } else { format!("{stem}_{n}") };
        let dir = parent.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| LabError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| LabError::Io(e.to_string()))
}

#[derive(Serialize)]
struct InvariantRow<'a> {
    name: &'a str,
    cases: usize,
    failures: usize,
    worst: f64,
    tolerance: f64,
    passed: bool,
}

fn write_outputs(dir: &Path, text: &str, base: &Path, outcome: &Outcome) -> Result<Manifest> {
    let mut files: Vec<(&str, Vec<u8>)> = Vec::new();
    match outcome.kind {
        ExperimentKind::Diagnostics => files.push((DIAGNOSTICS_FILE, csv_bytes(&outcome.checks)?)),
        ExperimentKind::Invariants => {
            let rows: Vec<InvariantRow> = outcome
                .invariants
                .iter()
                .flat_map(|r| &r.checks)
                .map(|c| InvariantRow {
                    name: &c.name,
                    cases: c.cases,
                    failures: c.failures,
                    worst: c.worst,
                    tolerance: c.tolerance,
                    passed: c.passed(),
                })
                .collect();
            files.push((INVARIANTS_FILE, csv_bytes(&rows)?));
        }
        _ => files.push((RESULTS_FILE, csv_bytes(&outcome.rows)?)),
    }
    let mut summary = serde_json::to_vec_pretty(outcome).map_err(|e| LabError::Io(e.to_string()))?;
    summary.push(b'\n');
    files.push((SUMMARY_FILE, summary));

    fs::write(dir.join(CONFIG_FILE), text)?;
    let mut outputs = BTreeMap::new();
    for (name, bytes) in &files {
        fs::write(dir.join(name), bytes)?;
        outputs.insert(name.to_string(), sha256_hex(bytes));
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: outcome.kind,
        experiment_id: outcome.experiment_id.clone(),
        seed: outcome.seed,
        config_file: CONFIG_FILE.into(),
        config_sha256: sha256_hex(text.as_bytes()),
        config_base: base.display().to_string(),
        outputs,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| LabError::Io(e.to_string()))?;
    bytes.push(b'\n');
    fs::write(dir.join(MANIFEST_FILE), bytes)?;
    Ok(manifest)
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub run: RunResult,
    /// Output files whose bytes differ from the recorded hashes.
    pub mismatches: Vec<String>,
}

/// Reruns the experiment recorded by `manifest` into a fresh run directory
/// under `out` (default: the original run's parent) and compares hashes.
pub fn reproduce(manifest: &Path, out: Option<PathBuf>) -> Result<Reproduction> {
    let raw = read_config(manifest)?;
    let m: Manifest = serde_json::from_str(&raw).map_err(|e| LabError::Config(format!("bad manifest: {e}")))?;
    let run_dir = manifest.parent().unwrap_or(Path::new("."));
    let text = read_config(&run_dir.join(&m.config_file))?;
    if sha256_hex(text.as_bytes()) != m.config_sha256 {
        return Err(LabError::Config("config bytes do not match the manifest hash".into()));
    }
    let parent = out.unwrap_or_else(|| run_dir.parent().unwrap_or(Path::new(".")).to_path_buf());
    let run = run_text(&text, Path::new(&m.config_base), Some(parent), Some(m.seed))?;
    let mismatches = m
        .outputs
        .iter()
        .filter(|(name, hash)| run.manifest.outputs.get(*name) != Some(*hash))
        .map(|(name, _)| name.clone())
        .collect();
    Ok(Reproduction { run, mismatches })
}
