//! Verification suites: metric axioms and embedding invariants on random
//! ensembles, and attainability of the saturable bounds by the dynamics
//! built to achieve them.

use qsl_core::bounds::{evaluate_generator, GridPolicy, QuadratureConfig};
use qsl_core::dynamics::{CompositeUnitary, Depolarize, Generator, QubitMixtureUnitary, Schedule};
use qsl_core::linalg::{random_density, random_diag_hamiltonian, random_unitary, RngStream};
use qsl_core::metric::{distance, embed, embedding_inner, purity, speed, AlternativeFunction};
use qsl_core::Error;
use rand::Rng;

/// Outcome of one verification suite.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: usize,
    pub violations: usize,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            violations: 0,
            first_failure: None,
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            if s.passed() {
                out.push_str(&format!("PASS  {:<32} {} checks\n", s.name, s.checks));
            } else {
                out.push_str(&format!(
                    "FAIL  {:<32} {} of {} checks violated; first: {}\n",
                    s.name,
                    s.violations,
                    s.checks,
                    s.first_failure.as_deref().unwrap_or("-")
                ));
            }
        }
        out
    }
}

/// Tolerances of the metric suites, each overridable from the CLI.
#[derive(Debug, Clone, Copy)]
pub struct MetricTolerances {
    /// Allowed negative slack in the triangle inequality.
    pub triangle_slack: f64,
    /// Embedding invariants and unitary invariance.
    pub invariant: f64,
    /// Required residual shrink factor when h halves.
    pub consistency_factor: f64,
}

impl Default for MetricTolerances {
    fn default() -> Self {
        Self {
            triangle_slack: 1e-10,
            invariant: 1e-10,
            consistency_factor: 3.5,
        }
    }
}

fn triple_functions(n: usize, p_max: f64) -> Vec<(&'static str, AlternativeFunction)> {
    vec![
        ("constant", AlternativeFunction::ConstantAlpha2(1.0)),
        ("purity-local", AlternativeFunction::PurityPlusInvN(n)),
        ("frozen", AlternativeFunction::FrozenMaxPurity(p_max)),
    ]
}

/// Metric axioms, embedding invariants, and the infinitesimal-vs-finite
/// distance consistency check, on seeded random ensembles. `trials` is the
/// triple count per (dimension, f-kind) pair for the triangle suite and the
/// sample count for the others.
pub fn verify_metric(seed: u64, trials: usize, tol: &MetricTolerances) -> VerifyReport {
    let mut triangle = SuiteResult::new("triangle-inequality");
    let mut symmetry = SuiteResult::new("symmetry");
    let mut identity = SuiteResult::new("identity-of-indiscernibles");
    let mut invariance = SuiteResult::new("unitary-invariance");
    let mut unit_norm = SuiteResult::new("embedding-unit-norm");
    let mut latitude = SuiteResult::new("latitude-formula");
    let mut range = SuiteResult::new("overlap-range");
    let mut consistency = SuiteResult::new("finite-difference-consistency");
    let mut injection = SuiteResult::new("constraint-injection");

    for (ni, n) in [2usize, 3, 4].into_iter().enumerate() {
        for t in 0..trials {
            // four disjoint substreams per triple, disjoint across dimensions
            let base = ((ni * trials + t) * 4) as u64;
            let a = random_density(n, &RngStream::new(seed, base));
            let b = random_density(n, &RngStream::new(seed, base + 1));
            let c = random_density(n, &RngStream::new(seed, base + 2));
            let p_max = purity(&a).max(purity(&b)).max(purity(&c));
            for (fname, f) in triple_functions(n, p_max) {
                let dab = distance(&a, &b, &f).unwrap();
                let dbc = distance(&b, &c, &f).unwrap();
                let dac = distance(&a, &c, &f).unwrap();
                triangle.check(dab + dbc >= dac - tol.triangle_slack, || {
                    format!("seed {seed} trial {t} N={n} f={fname}: {dab} + {dbc} < {dac}")
                });
                symmetry.check(
                    distance(&b, &a, &f).unwrap().to_bits() == dab.to_bits(),
                    || format!("seed {seed} trial {t} N={n} f={fname}"),
                );
            }

            // the remaining suites sample once per triple to stay O(trials)
            let f = AlternativeFunction::ConstantAlpha2(1.0 + (t % 7) as f64 * 0.1);
            identity.check(distance(&a, &a, &f).unwrap() == 0.0, || {
                format!("seed {seed} trial {t} N={n}: D(rho, rho) != 0")
            });
            identity.check(distance(&a, &b, &f).unwrap() > 1e-10, || {
                format!("seed {seed} trial {t} N={n}: distinct states at distance 0")
            });

            let ea = embed(&a, &f).unwrap();
            let eb = embed(&b, &f).unwrap();
            unit_norm.check((ea.norm_sqr() - 1.0).abs() <= tol.invariant, || {
                format!("seed {seed} trial {t} N={n}: |F|^2 = {}", ea.norm_sqr())
            });
            latitude.check(
                (ea.latitude_inner() - ea.latitude_inner_predicted()).abs() <= tol.invariant,
                || format!("seed {seed} trial {t} N={n}"),
            );
            let inner = embedding_inner(&ea, &eb);
            range.check((-1.0 - 1e-12..=1.0 + 1e-12).contains(&inner), || {
                format!("seed {seed} trial {t} N={n}: inner = {inner}")
            });

            let u = random_unitary(n, &mut RngStream::new(seed, base + 3).rng()).unwrap();
            let d0 = distance(&a, &b, &f).unwrap();
            let d1 = distance(&a.conjugate_by(&u), &b.conjugate_by(&u), &f).unwrap();
            invariance.check((d0 - d1).abs() <= tol.invariant, || {
                format!("seed {seed} trial {t} N={n}: {d0} vs {d1}")
            });
        }
    }

    // D(rho_t, rho_{t+h}) vs speed * h on smooth composite dynamics
    let probes = 20;
    for k in 0..probes {
        let rho_s = random_density(2, &RngStream::new(seed, 1_000_000 + 3 * k));
        let rho_e = random_density(2, &RngStream::new(seed, 1_000_001 + 3 * k));
        let h4 = random_diag_hamiltonian(
            4,
            &RngStream::new(seed, 1_000_002 + 3 * k),
            2.0 * std::f64::consts::PI,
        );
        let gen = CompositeUnitary::new(&rho_s, &rho_e, &h4, 1.0).unwrap();
        let mut rng = RngStream::new(seed, 2_000_000 + k).rng();
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
        let h0 = 2e-3;
        let r0 = residual(h0);
        let r1 = residual(h0 / 2.0);
        let ok = r0 <= 1e-10 || r0 / r1 >= tol.consistency_factor;
        consistency.check(ok, || {
            format!("seed {seed} probe {k} t={t:.3}: residuals {r0:.3e} -> {r1:.3e}")
        });
    }

    // a non-metric f must be rejected loudly, not produce a silent number
    let rho = random_density(2, &RngStream::new(seed, 3_000_000));
    let sigma = random_density(2, &RngStream::new(seed, 3_000_001));
    let bad = AlternativeFunction::custom(|x| x - 0.1, |_| 1.0, |_| 0.0);
    injection.check(
        matches!(
            distance(&rho, &sigma, &bad),
            Err(Error::ConstraintViolated { .. })
        ),
        || "f(x) = x - 0.1 was not rejected".to_string(),
    );

    VerifyReport {
        suites: vec![
            triangle,
            symmetry,
            identity,
            invariance,
            unit_norm,
            latitude,
            range,
            consistency,
            injection,
        ],
    }
}

/// Tolerances of the attainability suites.
#[derive(Debug, Clone, Copy)]
pub struct AttainTolerances {
    /// Acceptance band for the depolarizing tau_f3 / tau ratio.
    pub depol_low: f64,
    pub depol_high: f64,
    /// |ratio - 1| band for the unitary qubit construction.
    pub unitary: f64,
    /// Required agreement between tau_f3 and tau_uni_p0 on unitary orbits.
    pub agreement: f64,
    /// Generic dynamics must sit below 1 by at least this margin.
    pub generic_margin: f64,
}

impl Default for AttainTolerances {
    fn default() -> Self {
        Self {
            depol_low: 0.999,
            depol_high: 1.0 + 1e-6,
            unitary: 1e-3,
            agreement: 1e-6,
            generic_margin: 1e-3,
        }
    }
}

/// Saturation checks: pure depolarizing attains tau_f3, the qubit-mixture
/// unitary attains tau_uni_p0 (with tau_f3 agreeing), and generic composite
/// dynamics stay strictly below their bounds.
pub fn verify_attainability(seed: u64, trials: usize, tol: &AttainTolerances) -> VerifyReport {
    let quad = QuadratureConfig::default();
    let grid = GridPolicy::default();

    let mut depol = SuiteResult::new("depolarize-saturates-f3");
    let mut arc = SuiteResult::new("depolarize-arc-length");
    let mut unitary = SuiteResult::new("qubit-unitary-saturates-uni-p0");
    let mut agree = SuiteResult::new("unitary-f3-equals-uni-p0");
    let mut generic = SuiteResult::new("generic-composite-below-bound");

    let per_dim = trials.div_ceil(10).max(3);
    for n in [2usize, 3, 4] {
        for k in 0..per_dim {
            let stream = (n as u64) << 32 | k as u64;
            let rho0 = random_density(n, &RngStream::new(seed, stream));
            let gen = Depolarize::new(&rho0, Schedule::linear(1.0, 0.0, 1.0), 1.0).unwrap();
            match evaluate_generator(&gen, &grid, None, &quad) {
                Ok(report) => {
                    let ratio = report.tau_f3 / report.tau_actual;
                    depol.check(ratio >= tol.depol_low && ratio <= tol.depol_high, || {
                        format!("seed {seed} stream {stream} N={n}: ratio {ratio}")
                    });
                    // closed form of the speed integral: arccos(1 - beta_tau)
                    // with beta_tau = 1 - p(tau) = 1
                    let integral = report.mean_speed * report.tau_actual;
                    let want = std::f64::consts::FRAC_PI_2;
                    arc.check((integral - want).abs() <= 1e-6, || {
                        format!("seed {seed} stream {stream} N={n}: integral {integral}")
                    });
                }
                Err(e) => depol.check(false, || format!("stream {stream}: {e}")),
            }
        }
    }

    for k in 0..trials {
        let mut rng = RngStream::new(seed, 4_000_000 + k as u64).rng();
        let lambda = 1.0 - 0.5 * rng.random::<f64>(); // (1/2, 1]
        let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let gen = QubitMixtureUnitary::new(lambda, phi, 1.0).unwrap();
        match evaluate_generator(&gen, &grid, None, &quad) {
            Ok(report) => {
                let uni = report.tau_uni_p0.expect("lambda > 1/2 is non-degenerate");
                let ratio = uni / report.tau_actual;
                unitary.check((ratio - 1.0).abs() <= tol.unitary, || {
                    format!("seed {seed} trial {k} lambda={lambda:.4}: ratio {ratio}")
                });
                agree.check((report.tau_f3 - uni).abs() <= tol.agreement, || {
                    format!("seed {seed} trial {k}: f3 {} vs uni {uni}", report.tau_f3)
                });
            }
            Err(e) => unitary.check(false, || format!("trial {k}: {e}")),
        }
    }

    for k in 0..16u64 {
        let rho_s = random_density(2, &RngStream::new(seed, 5_000_000 + 3 * k));
        let rho_e = random_density(2, &RngStream::new(seed, 5_000_001 + 3 * k));
        let h = random_diag_hamiltonian(
            4,
            &RngStream::new(seed, 5_000_002 + 3 * k),
            2.0 * std::f64::consts::PI,
        );
        let gen = CompositeUnitary::new(&rho_s, &rho_e, &h, 1.0).unwrap();
        match evaluate_generator(&gen, &grid, None, &quad) {
            Ok(report) => {
                let ratio = report.tau_combined / report.tau_actual;
                generic.check(ratio < 1.0 - tol.generic_margin, || {
                    format!("seed {seed} trial {k}: ratio {ratio}")
                });
            }
            Err(e) => generic.check(false, || format!("trial {k}: {e}")),
        }
    }

    VerifyReport {
        suites: vec![depol, arc, unitary, agree, generic],
    }
}
