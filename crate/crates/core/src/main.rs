use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use burgers_lab::error::LabError;
use burgers_lab::orchestrator::{reproduce, run_config, ExperimentKind, RunRequest};

/// Noise-covariance perturbation experiments for the stochastic Burgers equation.
#[derive(Parser)]
#[command(name = "burgers-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Parent directory of the timestamped run directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (outputs never depend on this).
        #[arg(long)]
        threads: Option<usize>,
        /// Exit 1 unless every acceptance gate passes.
        #[arg(long)]
        check: bool,
        /// Replace the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rerun a recorded run and compare its outputs byte for byte.
    Reproduce {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the experiment kinds.
    ListExperiments,
    /// Print the schema and target estimate of one kind.
    Describe { kind: String },
}

const EXIT_GATE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

fn exit_for(e: &LabError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        LabError::Divergence { .. } | LabError::DivergenceRate { .. } => ExitCode::from(EXIT_DIVERGENCE),
        _ => ExitCode::from(EXIT_CONFIG),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, LabError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(LabError::Config("--threads must be >= 1".into()));
        }
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| LabError::Config(e.to_string()))?;
    Ok(pool.install(f))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<18} {}", k.name(), k.summary());
            }
            ExitCode::SUCCESS
        }
        Command::Describe { kind } => match ExperimentKind::parse(&kind) {
            Some(k) => {
                println!("{}", k.describe());
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("unknown experiment kind '{kind}'; see list-experiments");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run { config, out, threads, check, seed } => {
            let req = RunRequest { config, out, seed };
            let res = match with_threads(threads, || run_config(&req)).and_then(|r| r) {
                Ok(r) => r,
                Err(e) => return exit_for(&e),
            };
            let o = &res.outcome;
            println!("run directory: {}", res.dir.display());
            for (mode, fit) in &o.fits {
                println!("{mode} slope {:.4} (r^2 {:.4}, {} points)", fit.slope, fit.r_squared, fit.points.len());
            }
            for g in &o.gates {
                let win = g.window.map(|[a, b]| format!(" in [{a}, {b}]")).unwrap_or_default();
                let val = g.value.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "none".into());
                println!("{} {}{win}: {val}", if g.passed { "PASS" } else { "FAIL" }, g.name);
            }
            for w in &o.warnings {
                eprintln!("warning: {w}");
            }
            if o.failed(check) {
                ExitCode::from(EXIT_GATE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Reproduce { manifest, out, threads } => {
            let rep = match with_threads(threads, || reproduce(&manifest, out)).and_then(|r| r) {
                Ok(r) => r,
                Err(e) => return exit_for(&e),
            };
            println!("run directory: {}", rep.run.dir.display());
            if rep.mismatches.is_empty() {
                println!("all outputs byte-identical to the manifest");
                ExitCode::SUCCESS
            } else {
                for m in &rep.mismatches {
                    println!("MISMATCH {m}");
                }
                ExitCode::from(EXIT_GATE)
            }
        }
    }
}
