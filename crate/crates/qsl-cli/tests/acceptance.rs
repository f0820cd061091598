//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured figures (run with `--nocapture` to see them).

use std::time::Instant;

use qsl_cli::experiment::{experiment_csv, run_random_experiment, ExperimentConfig};
use qsl_cli::verify::{verify_metric, MetricTolerances};
use qsl_core::bounds::{
    evaluate_generator, max_grid_purity, tau_const_alpha, tau_f1, tau_f2, tau_f3, tau_general,
    GridPolicy, QuadratureConfig,
};
use qsl_core::dynamics::{
    CompositeUnitary, Depolarize, Generator, GeodesicPath, QubitMixtureUnitary, Schedule,
};
use qsl_core::linalg::{random_density, random_diag_hamiltonian, random_pure, RngStream};
use qsl_core::metric::{distance, embed, purity, speed, AlternativeFunction};
use rand::Rng;

const SEED: u64 = 1;
const TAU: f64 = 1.0;

fn quad() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn grid() -> GridPolicy {
    GridPolicy::default()
}

fn random_composite(stream_base: u64, ensemble_pure: bool) -> CompositeUnitary {
    let draw = |n: usize, s: u64| {
        if ensemble_pure {
            random_pure(n, &RngStream::new(SEED, s))
        } else {
            random_density(n, &RngStream::new(SEED, s))
        }
    };
    let rho_s = draw(2, stream_base);
    let rho_e = draw(2, stream_base + 1);
    let h = random_diag_hamiltonian(
        4,
        &RngStream::new(SEED, stream_base + 2),
        2.0 * std::f64::consts::PI,
    );
    CompositeUnitary::new(&rho_s, &rho_e, &h, TAU).unwrap()
}

#[test]
fn criterion_1_metric_axioms() {
    let start = Instant::now();
    let report = verify_metric(SEED, 10_000, &MetricTolerances::default());
    let elapsed = start.elapsed();
    for name in [
        "triangle-inequality",
        "symmetry",
        "identity-of-indiscernibles",
    ] {
        let suite = report.suites.iter().find(|s| s.name == name).unwrap();
        assert!(
            suite.passed(),
            "criterion 1: FAIL ({name}: {})",
            suite.first_failure.as_deref().unwrap_or("-")
        );
    }
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "criterion 1: runtime {elapsed:?} exceeds 30 s"
    );
    println!(
        "criterion 1 (metric axioms, 1e4 triples x N x f-kind): PASS in {:.2} s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_2_embedding_invariants() {
    let mut worst_norm: f64 = 0.0;
    let mut worst_lat: f64 = 0.0;
    for k in 0..10_000u64 {
        let n = 2 + (k % 3) as usize;
        let rho = random_density(n, &RngStream::new(SEED, 100_000 + k));
        let f = match k % 3 {
            0 => AlternativeFunction::ConstantAlpha2(1.0 + (k % 11) as f64 * 0.07),
            1 => AlternativeFunction::PurityPlusInvN(n),
            _ => AlternativeFunction::FrozenMaxPurity(purity(&rho)),
        };
        let e = embed(&rho, &f).unwrap();
        worst_norm = worst_norm.max((e.norm_sqr() - 1.0).abs());
        worst_lat = worst_lat.max((e.latitude_inner() - e.latitude_inner_predicted()).abs());
    }
    assert!(
        worst_norm <= 1e-10,
        "criterion 2: unit-norm residual {worst_norm:e}"
    );
    assert!(
        worst_lat <= 1e-10,
        "criterion 2: latitude residual {worst_lat:e}"
    );
    println!(
        "criterion 2 (embedding invariants, 1e4 pairs): PASS \
         (max |TrF^2 - 1| = {worst_norm:.2e}, max latitude residual = {worst_lat:.2e})"
    );
}

#[test]
fn criterion_3_metric_distance_consistency() {
    let mut worst_factor = f64::INFINITY;
    for k in 0..20u64 {
        let gen = random_composite(200_000 + 3 * k, false);
        let mut rng = RngStream::new(SEED, 210_000 + k).rng();
        let t = 0.05 + 0.8 * rng.random::<f64>();
        let f = if k % 2 == 0 {
            AlternativeFunction::ConstantAlpha2(1.2)
        } else {
            AlternativeFunction::PurityPlusInvN(2)
        };
        let residual = |h: f64| {
            let d = distance(&gen.state_at(t), &gen.state_at(t + h), &f).unwrap();
            let v = speed(&gen.state_at(t), &gen.deriv_at(t), &f).unwrap();
            (d - v * h).abs()
        };
        let r0 = residual(2e-3);
        let r1 = residual(1e-3);
        if r0 <= 1e-10 {
            continue; // residual already at noise floor
        }
        let factor = r0 / r1;
        worst_factor = worst_factor.min(factor);
        assert!(
            factor >= 3.5,
            "criterion 3: probe {k} factor {factor:.2} < 3.5 (residuals {r0:.3e} -> {r1:.3e})"
        );
    }
    println!(
        "criterion 3 (metric-distance consistency, 20 probes): PASS \
         (worst halving factor {worst_factor:.2})"
    );
}

#[test]
fn criterion_4_specialization_oracle_equivalence() {
    let mut cases: Vec<(&str, qsl_core::dynamics::Trajectory)> = Vec::new();
    for k in 0..5u64 {
        cases.push((
            "composite",
            random_composite(300_000 + 3 * k, false).sample(512),
        ));
    }
    for k in 0..3u64 {
        let rho0 = random_density(2 + (k as usize % 3), &RngStream::new(SEED, 310_000 + k));
        let gen = Depolarize::new(&rho0, Schedule::cosine(1.0, 0.2, TAU), TAU).unwrap();
        cases.push(("depolarize", gen.sample(512)));
    }
    cases.push((
        "qubit-unitary",
        QubitMixtureUnitary::new(0.85, 0.4, TAU)
            .unwrap()
            .sample(512),
    ));

    let mut worst = [0.0f64; 4];
    for (name, traj) in &cases {
        let n = traj.dim();
        let max_p = max_grid_purity(traj);

        for alpha2 in [max_p + 0.1, 2.0] {
            let g =
                tau_general(traj, &AlternativeFunction::ConstantAlpha2(alpha2), &quad()).unwrap();
            let s = tau_const_alpha(traj, alpha2, &quad()).unwrap();
            worst[0] = worst[0].max((g - s).abs());
            assert!(
                (g - s).abs() <= 1e-10,
                "criterion 4 [{name}]: const-alpha {g} vs {s}"
            );
        }

        let g2 = tau_general(traj, &AlternativeFunction::PurityPlusInvN(n), &quad()).unwrap();
        let s2 = tau_f2(traj, &quad()).unwrap();
        worst[1] = worst[1].max((g2 - s2).abs());
        assert!(
            (g2 - s2).abs() <= 1e-8,
            "criterion 4 [{name}]: f2 {g2} vs {s2}"
        );

        let g3 = tau_general(traj, &AlternativeFunction::FrozenMaxPurity(max_p), &quad()).unwrap();
        let s3 = tau_f3(traj, &quad()).unwrap();
        worst[2] = worst[2].max((g3 - s3).abs());
        assert!(
            (g3 - s3).abs() <= 1e-8,
            "criterion 4 [{name}]: f3 {g3} vs {s3}"
        );

        let ca = tau_const_alpha(traj, 1e6, &quad()).unwrap();
        let f1 = tau_f1(traj, &quad()).unwrap();
        let rel = (ca - f1).abs() / f1.abs().max(1e-300);
        worst[3] = worst[3].max(rel);
        assert!(
            rel <= 1e-3,
            "criterion 4 [{name}]: alpha-limit {ca} vs f1 {f1}"
        );
    }
    println!(
        "criterion 4 (oracle equivalence, {} trajectories): PASS \
         (worst dev: const-alpha {:.1e}, f2 {:.1e}, f3 {:.1e}, alpha-limit rel {:.1e})",
        cases.len(),
        worst[0],
        worst[1],
        worst[2],
        worst[3]
    );
}

#[test]
fn criterion_5_bound_validity() {
    let start = Instant::now();
    let trials = 1000u64;
    let mut worst_ratio: f64 = 0.0;
    let mut check = |name: &str, k: u64, report: &qsl_core::bounds::BoundReport| {
        let cap = report.tau_actual * (1.0 + 1e-6);
        for (which, v) in [
            ("f1", report.tau_f1),
            ("f2", report.tau_f2),
            ("f3", report.tau_f3),
            ("combined", report.tau_combined),
        ] {
            assert!(
                v <= cap,
                "criterion 5: {name} trial {k}: tau_{which} = {v} exceeds {cap}"
            );
            worst_ratio = worst_ratio.max(v / report.tau_actual);
        }
    };

    for k in 0..trials {
        let gen = random_composite(400_000 + 3 * k, k % 2 == 0);
        let report = evaluate_generator(&gen, &grid(), None, &quad()).unwrap();
        check("composite", k, &report);
    }
    let mut rng = RngStream::new(SEED, 490_000).rng();
    for k in 0..trials {
        let n = 2 + (k as usize % 3);
        let rho0 = random_density(n, &RngStream::new(SEED, 500_000 + k));
        let p_end = 0.9 * rng.random::<f64>();
        let sched = if k % 2 == 0 {
            Schedule::linear(1.0, p_end, TAU)
        } else {
            Schedule::cosine(1.0, p_end, TAU)
        };
        let gen = Depolarize::new(&rho0, sched, TAU).unwrap();
        let report = evaluate_generator(&gen, &grid(), None, &quad()).unwrap();
        check("depolarize", k, &report);
    }
    for k in 0..trials {
        let n = 2 + (k as usize % 3);
        let rho0 = random_density(n, &RngStream::new(SEED, 600_000 + k));
        let beta_end = -0.2 - 0.8 * rng.random::<f64>();
        let sched = if k % 2 == 0 {
            Schedule::linear(0.0, beta_end, TAU)
        } else {
            Schedule::cosine(0.0, beta_end, TAU)
        };
        let gen = GeodesicPath::new(&rho0, sched, TAU).unwrap();
        let report = evaluate_generator(&gen, &grid(), None, &quad()).unwrap();
        check("geodesic", k, &report);
    }
    for k in 0..trials {
        let lambda = 1.0 - 0.499 * rng.random::<f64>();
        let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let tau_k = 0.3 + 1.2 * rng.random::<f64>();
        let gen = QubitMixtureUnitary::new(lambda, phi, tau_k).unwrap();
        let report = evaluate_generator(&gen, &grid(), None, &quad()).unwrap();
        check("qubit-unitary", k, &report);
    }
    println!(
        "criterion 5 (bound validity, 1e3 trajectories per generator): PASS \
         (max bound/tau = {:.9}, {:.1} s)",
        worst_ratio,
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_6_saturation_nonunitary() {
    let mut worst_ratio_dev: f64 = 0.0;
    let mut worst_arc_dev: f64 = 0.0;
    for n in [2usize, 3, 4] {
        for k in 0..10u64 {
            let stream = 700_000 + (n as u64) * 100 + k;
            let rho0 = random_density(n, &RngStream::new(SEED, stream));
            let gen = Depolarize::new(&rho0, Schedule::linear(1.0, 0.0, TAU), TAU).unwrap();
            let report = evaluate_generator(&gen, &grid(), None, &quad()).unwrap();
            let ratio = report.tau_f3 / report.tau_actual;
            assert!(
                (0.999..=1.0 + 1e-6).contains(&ratio),
                "criterion 6: N={n} stream {stream}: ratio {ratio}"
            );
            worst_ratio_dev = worst_ratio_dev.max((ratio - 1.0).abs());
            // Appendix-level closed form: the speed integral equals
            // arccos(1 - beta_tau), beta_tau = 1 - p(tau) = 1 here
            let integral = report.mean_speed * report.tau_actual;
            let dev = (integral - std::f64::consts::FRAC_PI_2).abs();
            assert!(
                dev <= 1e-6,
                "criterion 6: N={n} stream {stream}: integral {integral}"
            );
            worst_arc_dev = worst_arc_dev.max(dev);
        }
    }
    println!(
        "criterion 6 (depolarizing saturation): PASS \
         (max |ratio-1| = {worst_ratio_dev:.2e}, max arc deviation = {worst_arc_dev:.2e})"
    );
}

#[test]
fn criterion_7_saturation_unitary() {
    let mut worst_ratio_dev: f64 = 0.0;
    let mut worst_agree: f64 = 0.0;
    for k in 0..100u64 {
        let mut rng = RngStream::new(SEED, 800_000 + k).rng();
        let lambda = 1.0 - 0.5 * rng.random::<f64>();
        let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let gen = QubitMixtureUnitary::new(lambda, phi, TAU).unwrap();
        let report = evaluate_generator(&gen, &grid(), None, &quad()).unwrap();
        let uni = report.tau_uni_p0.expect("non-degenerate initial state");
        let ratio = uni / report.tau_actual;
        assert!(
            (ratio - 1.0).abs() <= 1e-3,
            "criterion 7: trial {k} lambda {lambda:.4}: ratio {ratio}"
        );
        worst_ratio_dev = worst_ratio_dev.max((ratio - 1.0).abs());
        let agree = (report.tau_f3 - uni).abs();
        assert!(
            agree <= 1e-6,
            "criterion 7: trial {k}: tau_f3 {} vs tau_uni {uni}",
            report.tau_f3
        );
        worst_agree = worst_agree.max(agree);
    }
    println!(
        "criterion 7 (unitary attainability, 100 pairs): PASS \
         (max |ratio-1| = {worst_ratio_dev:.2e}, max |f3-uni| = {worst_agree:.2e})"
    );
}

#[test]
fn criterion_8_label_fractions() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    assert_eq!(cfg.samples, 1000);
    assert_eq!(cfg.tau, 1.0);
    let (_, summary) = run_random_experiment(&cfg).unwrap();
    let elapsed = start.elapsed();
    let f = summary.fractions;
    assert!(
        (0.50..=0.85).contains(&f.f3),
        "criterion 8: F3 fraction {} outside [0.50, 0.85]",
        f.f3
    );
    assert!(
        (0.10..=0.45).contains(&f.f2),
        "criterion 8: F2 fraction {} outside [0.10, 0.45]",
        f.f2
    );
    assert!(
        (0.00..=0.10).contains(&f.f1),
        "criterion 8: F1 fraction {} outside [0.00, 0.10]",
        f.f1
    );
    assert!(
        f.f3 > f.f2 && f.f2 > f.f1,
        "criterion 8: ordering violated: F1 {} F2 {} F3 {}",
        f.f1,
        f.f2,
        f.f3
    );
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "criterion 8: runtime {elapsed:?} exceeds 60 s"
    );
    println!(
        "criterion 8 (label fractions, 1000 samples): PASS \
         (F1 {:.3} : F2 {:.3} : F3 {:.3} in {:.2} s)",
        f.f1,
        f.f2,
        f.f3,
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_9_determinism() {
    let cfg = ExperimentConfig::default();
    let (rec1, _) = run_random_experiment(&cfg).unwrap();
    let (rec2, _) = run_random_experiment(&cfg).unwrap();
    let csv1 = experiment_csv(&rec1, false);
    let csv2 = experiment_csv(&rec2, false);
    assert_eq!(csv1.as_bytes(), csv2.as_bytes(), "criterion 9: CSV differs");
    println!(
        "criterion 9 (determinism): PASS (two runs, {} identical bytes)",
        csv1.len()
    );
}
