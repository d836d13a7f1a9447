use burgers_lab::covariance::{CovarianceSpec, DecayLaw};
use burgers_lab::dynamics::{
    simulate_convolution, simulate_path, write_snapshots_csv, write_snapshots_grid_csv, Ensemble, InitialCondition,
    Scheme, SimConfig,
};
use burgers_lab::error::LabError;
use burgers_lab::noise::NoiseStream;
use burgers_lab::spectral::SpectralField;

fn bump(m: usize) -> InitialCondition {
    let coeffs = (1..=m).map(|k| if k <= 4 { 1.0 / k as f64 } else { 0.0 }).collect();
    InitialCondition::Deterministic {
        field: SpectralField::new(coeffs).unwrap(),
    }
}

fn deterministic(m: usize, t: f64, dt: f64, scheme: Scheme) -> SpectralField {
    let cfg = SimConfig::new(m, t, dt).with_scheme(scheme).with_initial(bump(m));
    simulate_path(&cfg, &CovarianceSpec::zero(m), &NoiseStream::new(0, 0))
        .unwrap()
        .terminal
}

#[test]
fn unforced_energy_decays_monotonically() {
    let m = 32;
    for scheme in [Scheme::ExponentialEuler, Scheme::SemiImplicitEuler] {
        let cfg = SimConfig::new(m, 0.2, 1e-3)
            .with_scheme(scheme)
            .with_initial(bump(m))
            .with_snapshots(1);
        let tr = simulate_path(&cfg, &CovarianceSpec::zero(m), &NoiseStream::new(1, 0)).unwrap();
        let norms: Vec<f64> = tr.snapshots.iter().map(|s| s.field.l2_norm()).collect();
        assert_eq!(norms.len(), 201);
        assert!(norms.windows(2).all(|w| w[1] <= w[0]), "{scheme:?}");
        // the slowest mode decays at least like e^{-pi^2 t}
        assert!(norms[200] <= norms[0] * (-std::f64::consts::PI.powi(2) * 0.2).exp() * 1.01);
    }
}

#[test]
fn schemes_agree_as_dt_shrinks() {
    let a = deterministic(32, 0.1, 1e-4, Scheme::ExponentialEuler);
    let b = deterministic(32, 0.1, 1e-4, Scheme::SemiImplicitEuler);
    assert!(a.sub(&b).l2_norm() < 1e-3 * a.l2_norm());
}

#[test]
fn time_stepping_converges_at_first_order() {
    let reference = deterministic(32, 0.1, 1.25e-5, Scheme::SemiImplicitEuler);
    let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&dt| deterministic(32, 0.1, dt, Scheme::SemiImplicitEuler).sub(&reference).l2_norm())
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..2.4).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn galerkin_refinement_converges() {
    let fine = deterministic(128, 0.05, 1e-4, Scheme::ExponentialEuler);
    let errs: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&m| {
            let x = deterministic(m, 0.05, 1e-4, Scheme::ExponentialEuler);
            SpectralField::new(x.coeffs().to_vec()).unwrap().project(128).sub(&fine).l2_norm()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn exponential_euler_is_exact_for_the_linear_problem() {
    let m = 8;
    let x0 = SpectralField::new(vec![1.0, -0.5, 0.25, 0.0, 0.0, 0.0, 0.0, 0.1]).unwrap();
    let cfg = SimConfig::new(m, 0.3, 0.01)
        .with_linear(true)
        .with_initial(InitialCondition::Deterministic { field: x0.clone() });
    let tr = simulate_path(&cfg, &CovarianceSpec::zero(m), &NoiseStream::new(0, 0)).unwrap();
    let exact = x0.semigroup_apply(0.3).unwrap();
    assert!(tr.terminal.sub(&exact).l2_norm() < 1e-14);
}

#[test]
fn linear_mode_reproduces_the_stochastic_convolution() {
    let q = DecayLaw::Polynomial { c: 1.0, beta: 2.0, k: 16 }.materialize().unwrap();
    let cfg = SimConfig::new(16, 0.1, 1e-3).with_linear(true);
    let s = NoiseStream::new(9, 4);
    let x = simulate_path(&cfg, &q, &s).unwrap().terminal;
    let y = simulate_convolution(&cfg, &q, &s).unwrap();
    assert!(x.sub(&y).l2_norm() <= 1e-14 * y.l2_norm());
}

#[test]
fn ensemble_paths_match_solo_runs() {
    let q = DecayLaw::Polynomial { c: 1.0, beta: 3.0, k: 32 }.materialize().unwrap();
    let qn = q.kl_truncate(4).unwrap();
    let cfg = SimConfig::new(32, 0.05, 1e-3);
    let s = NoiseStream::new(3, 7);
    let mut ens = Ensemble::new(&[(cfg.clone(), q.clone()), (cfg.clone(), qn.clone())]).unwrap();
    ens.run(&s, |_, _| {}).unwrap();
    let t = ens.terminal();
    assert_eq!(t[0], simulate_path(&cfg, &q, &s).unwrap().terminal);
    assert_eq!(t[1], simulate_path(&cfg, &qn, &s).unwrap().terminal);
    assert_ne!(t[0], t[1]);
}

#[test]
fn dense_noise_matches_diagonal_second_moment() {
    // written densely, a diagonal covariance takes the increment path instead
    // of the exact OU draw; the terminal energy must agree in mean
    let q = DecayLaw::Polynomial { c: 1.0, beta: 2.0, k: 8 }.materialize().unwrap();
    let dense = CovarianceSpec::dense(q.to_dense()).unwrap();
    let cfg = SimConfig::new(8, 0.05, 1e-3);
    let n = 400;
    let energy = |q: &CovarianceSpec| -> f64 {
        (0..n)
            .map(|i| simulate_path(&cfg, q, &NoiseStream::new(5, i)).unwrap().terminal.l2_norm_sq())
            .sum::<f64>()
            / n as f64
    };
    let (a, b) = (energy(&q), energy(&dense));
    assert!((a / b - 1.0).abs() < 0.15, "{a} vs {b}");
}

#[test]
fn divergence_is_reported() {
    let cfg = SimConfig::new(4, 0.01, 1e-3).with_initial(InitialCondition::Deterministic {
        field: SpectralField::new(vec![1e7]).unwrap(),
    });
    match simulate_path(&cfg, &CovarianceSpec::zero(4), &NoiseStream::new(0, 0)) {
        Err(LabError::Divergence { .. }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let q = CovarianceSpec::zero(4);
    let s = NoiseStream::new(0, 0);
    assert!(simulate_path(&SimConfig::new(0, 0.1, 0.01), &q, &s).is_err());
    assert!(simulate_path(&SimConfig::new(4, 0.1, 0.03), &q, &s).is_err());
    assert!(simulate_path(&SimConfig::new(4, 0.1, -0.01), &q, &s).is_err());
    let rough = SimConfig::new(4, 0.1, 0.01).with_initial(InitialCondition::RandomSmooth { c: 1.0, s: 1.6, delta0: 0.1 });
    assert!(simulate_path(&rough, &q, &s).is_err());
}

#[test]
fn snapshot_csvs_have_expected_shape() {
    let cfg = SimConfig::new(4, 0.02, 1e-2).with_initial(bump(4)).with_snapshots(1);
    let tr = simulate_path(&cfg, &CovarianceSpec::zero(4), &NoiseStream::new(0, 0)).unwrap();
    let mut buf = Vec::new();
    write_snapshots_csv(&mut buf, &tr.snapshots).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("t,k,coeff"));
    assert_eq!(text.lines().count(), 1 + 3 * 4);
    let mut buf = Vec::new();
    write_snapshots_grid_csv(&mut buf, &tr.snapshots, 16).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("t,z,value"));
    assert_eq!(text.lines().count(), 1 + 3 * 16);
}
