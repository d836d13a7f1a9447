use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_burgers-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_dirs(parent: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(parent)
        .map(|it| it.map(|e| e.unwrap().path()).collect())
        .unwrap_or_default();
    v.sort();
    v
}

fn run_config(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

const TINY_KL: &str = r#"
kind = "kl_rate"
seed = 5
n_reps = 12

[sim]
m = 16
t_final = 0.02
dt = 0.001

[covariance]
type = "polynomial"
c = 1.0
beta = 4.0
k = 32

[kl]
levels = [2, 4, 8]

[errors]
modes = ["strong", "weak"]
functional = { kind = "gaussian_norm", a = 1.0 }
"#;

#[test]
fn lists_exactly_five_kinds() {
    let o = run(&["list-experiments"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert_eq!(names, ["kl_rate", "galerkin_rate", "perturbation_pair", "diagnostics", "invariants"]);
}

#[test]
fn describe_names_the_targeted_rates() {
    let kl = stdout(&run(&["describe", "kl_rate"]));
    assert!(kl.contains("sqrt(q_{N+1})") && kl.contains("O( q_{N+1} )"));
    let g = stdout(&run(&["describe", "galerkin_rate"]));
    assert!(g.contains("M^{-alpha}") && g.contains("M^{-2 alpha}"));
    for kind in ["perturbation_pair", "diagnostics", "invariants"] {
        assert!(run(&["describe", kind]).status.success());
    }
    assert_eq!(run(&["describe", "kl"]).status.code(), Some(2));
}

#[test]
fn invariants_run_writes_a_complete_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "kind = \"invariants\"\nseed = 99\n";
    let cfg = write(tmp.path(), "inv.toml", text);
    let out = tmp.path().join("runs");
    let o = run_config(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dirs = run_dirs(&out);
    assert_eq!(dirs.len(), 1);
    let name = dirs[0].file_name().unwrap().to_string_lossy().into_owned();
    assert!(name.starts_with("invariants_") && name.ends_with('Z'), "{name}");
    for f in ["config.toml", "invariants.csv", "summary.json", "manifest.json"] {
        assert!(dirs[0].join(f).is_file(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dirs[0].join("manifest.json")).unwrap()).unwrap();
    let hash: String = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(manifest["config_sha256"], hash);
    assert_eq!(manifest["seed"], 99);
    assert_eq!(fs::read_to_string(dirs[0].join("config.toml")).unwrap(), text);
    let csv = fs::read_to_string(dirs[0].join("invariants.csv")).unwrap();
    assert!(csv.starts_with("name,cases,failures,worst,tolerance,passed\n"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn kl_run_emits_the_rate_csv_and_fits() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "kl.toml", TINY_KL);
    let out = tmp.path().join("runs");
    let o = run_config(&cfg, &out, &["--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = &run_dirs(&out)[0];
    let csv = fs::read_to_string(dir.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("experiment_id,mode,N_or_M,scale,estimate,std_error,bound_rhs,ratio,n_reps,seed,dt,T")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows.iter().filter(|r| r[1] == "strong").count(), 3);
    assert_eq!(rows[0][2], "2");
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 1.0 / 81.0);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
    assert!(summary["fits"]["strong"]["slope"].as_f64().unwrap() > 0.0);
    assert!(summary["fits"]["weak"]["slope"].as_f64().unwrap() > 0.0);
}

#[test]
fn check_mode_enforces_gates() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{TINY_KL}\n[gates]\nstrong_slope = [10.0, 11.0]\nweak_slope = [-1.0, 100.0]\nslope_ratio = [-100.0, 100.0]\n");
    let cfg = write(tmp.path(), "kl.toml", &text);
    let o = run_config(&cfg, &tmp.path().join("a"), &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("FAIL strong_slope"));
    let o = run_config(&cfg, &tmp.path().join("b"), &["--check"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run_dirs(&tmp.path().join("b")).len(), 1, "outputs are still written");
}

#[test]
fn config_errors_exit_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let cases = [
        ("unknown.toml", TINY_KL.replace("seed = 5", "seed = 5\ncolour = 1")),
        ("nested.toml", TINY_KL.replace("dt = 0.001", "dt = 0.001\nsteps = 20")),
        ("steps.toml", TINY_KL.replace("dt = 0.001", "dt = 0.0015")),
        ("kind.toml", TINY_KL.replace("kl_rate", "kl")),
        ("missing.toml", TINY_KL.replace("[kl]\nlevels = [2, 4, 8]", "")),
        ("levels.toml", TINY_KL.replace("[2, 4, 8]", "[2, 64]")),
        ("syntax.toml", "kind = ".to_string()),
        ("rough.toml", TINY_KL.replace("[sim]", "[sim.initial]\ntype = \"random_smooth\"\nc = 1.0\ns = 1.0\ndelta0 = 0.1\n\n[sim]")),
    ];
    for (name, text) in &cases {
        let cfg = write(tmp.path(), name, text);
        let o = run_config(&cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run_config(&tmp.path().join("absent.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write(tmp.path(), "ok.toml", TINY_KL);
    assert_eq!(run_config(&cfg, &out, &["--threads", "0"]).status.code(), Some(2));
    assert!(run_dirs(&out).is_empty());
}

#[test]
fn divergence_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
kind = "perturbation_pair"
seed = 1
n_reps = 10

[sim]
m = 4
t_final = 0.01
dt = 0.001

[sim.initial]
type = "deterministic"
coeffs = [1.0e7]

[covariance]
type = "diagonal"
q = [1.0, 0.5]

[perturbed]
type = "diagonal"
q = [1.0, 0.0]
"#;
    let cfg = write(tmp.path(), "blowup.toml", text);
    let out = tmp.path().join("runs");
    assert_eq!(run_config(&cfg, &out, &[]).status.code(), Some(3));
    assert!(run_dirs(&out).is_empty());
}

#[test]
fn seed_override_and_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "kl.toml", TINY_KL);
    let read = |sub: &str, extra: &[&str]| {
        let out = tmp.path().join(sub);
        assert!(run_config(&cfg, &out, extra).status.success());
        let d = run_dirs(&out).pop().unwrap();
        (
            fs::read(d.join("results.csv")).unwrap(),
            fs::read(d.join("summary.json")).unwrap(),
            fs::read(d.join("manifest.json")).unwrap(),
        )
    };
    let one = read("t1", &["--threads", "1"]);
    let four = read("t4", &["--threads", "4"]);
    assert_eq!(one, four);
    let other = read("s", &["--seed", "6"]);
    assert_ne!(one.0, other.0);
    let m: serde_json::Value = serde_json::from_slice(&other.2).unwrap();
    assert_eq!(m["seed"], 6);
}

#[test]
fn reproduce_reruns_a_manifest_bit_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let rows = "1.0, 0.1\n0.1, 0.5\n";
    write(tmp.path(), "q.csv", rows);
    let text = r#"
kind = "perturbation_pair"
seed = 21
n_reps = 40

[sim]
m = 8
t_final = 0.02
dt = 0.001

[covariance]
type = "matrix_csv"
path = "q.csv"

[perturbed]
type = "diagonal"
q = [1.0, 0.4]

[errors]
modes = ["strong", "weak"]
"#;
    let cfg = write(tmp.path(), "pair.toml", text);
    let out = tmp.path().join("runs");
    assert!(run_config(&cfg, &out, &[]).status.success());
    let first = run_dirs(&out).pop().unwrap();
    let o = bin()
        .args(["reproduce", "--manifest"])
        .arg(first.join("manifest.json"))
        .arg("--out")
        .arg(tmp.path().join("again"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let second = run_dirs(&tmp.path().join("again")).pop().unwrap();
    for f in ["results.csv", "summary.json", "manifest.json", "config.toml"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
    // a tampered config is refused
    fs::write(first.join("config.toml"), text.replace("seed = 21", "seed = 22")).unwrap();
    let o = bin().args(["reproduce", "--manifest"]).arg(first.join("manifest.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn diagnostics_run_writes_check_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
kind = "diagnostics"
seed = 4
n_reps = 200

[sim]
m = 8
t_final = 0.05
dt = 0.001

[covariance]
type = "polynomial"
c = 1.0
beta = 3.0
k = 8

[diagnostics]
exp_alpha_fraction = 0.5
second_moment = true
ou_configurations = 1
"#;
    let cfg = write(tmp.path(), "diag.toml", text);
    let out = tmp.path().join("runs");
    let o = run_config(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let d = run_dirs(&out).pop().unwrap();
    let csv = fs::read_to_string(d.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("name,kind,lhs_estimate,lhs_std_error,rhs_value,satisfied,n_samples,detail")
    );
    let names: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["exp_bound_Y", "stoch_conv_second_moment", "ou_sharpness_0"]);
}
