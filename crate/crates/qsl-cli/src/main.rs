use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qsl_cli::experiment::{
    experiment_csv, experiment_json, run_random_experiment, ExperimentConfig, StateEnsemble,
};
use qsl_cli::verify::{verify_attainability, verify_metric, AttainTolerances, MetricTolerances};
use qsl_cli::{HarnessError, Result};
use qsl_core::bounds::{evaluate_trajectory, BoundReport, QuadratureConfig};
use qsl_core::dynamics::text::{parse_trajectory, write_trajectory};
use qsl_core::dynamics::{
    composite_unitary, depolarize, geodesic, qubit_mixture_unitary, Schedule, Trajectory,
};
use qsl_core::linalg::text::{parse_density, parse_hermitian};
use qsl_core::linalg::{random_density, random_diag_hamiltonian, DensityMatrix, RngStream};

#[derive(Parser)]
#[command(
    name = "qsl",
    version,
    about = "Geometric quantum speed limit bounds: random experiments, verification suites, \
             and trajectory evaluation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sched {
    Linear,
    Cosine,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Ensemble {
    Pure,
    Ginibre,
}

impl From<Ensemble> for StateEnsemble {
    fn from(e: Ensemble) -> Self {
        match e {
            Ensemble::Pure => StateEnsemble::Pure,
            Ensemble::Ginibre => StateEnsemble::Ginibre,
        }
    }
}

impl Sched {
    fn build(self, from: f64, to: f64, tau: f64) -> Schedule {
        match self {
            Self::Linear => Schedule::linear(from, to, tau),
            Self::Cosine => Schedule::cosine(from, to, tau),
        }
    }
}

/// Report emission options shared by `bounds` and the generators.
#[derive(Debug, Args)]
struct ReportOpts {
    /// Also evaluate the constant-f bound at this alpha^2
    #[arg(long)]
    alpha2: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative tolerance of the quadrature convergence test
    #[arg(long = "tol-quad", default_value_t = 1e-6)]
    tol_quad: f64,
}

impl ReportOpts {
    fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            rel_tol: self.tol_quad,
            ..QuadratureConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct GridOpts {
    /// Evolution duration
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Grid intervals of the emitted trajectory
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Dump the sampled trajectory in the text format
    #[arg(long)]
    dump_trajectory: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Random bound-comparison experiment over composite-unitary dynamics
    Experiment {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Upper end of the uniform diagonal Hamiltonian entries
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        scale: f64,
        /// Also evaluate the constant-f bound at this alpha^2
        #[arg(long)]
        alpha2: Option<f64>,
        /// Distribution of the random initial states
        #[arg(long, value_enum, default_value_t = Ensemble::Pure)]
        ensemble: Ensemble,
        /// Draw one environment state and reuse it for every trial
        #[arg(long)]
        fixed_environment: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write records here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "tol-quad", default_value_t = 1e-6)]
        tol_quad: f64,
    },
    /// Metric-axiom and embedding-invariant verification suites
    VerifyMetric {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Triples per (dimension, f-kind) in the triangle suite
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(
            long = "tol-triangle",
            default_value_t = 1e-10,
            allow_negative_numbers = true
        )]
        tol_triangle: f64,
        #[arg(long = "tol-invariant", default_value_t = 1e-10)]
        tol_invariant: f64,
        #[arg(long = "tol-consistency", default_value_t = 3.5)]
        tol_consistency: f64,
    },
    /// Bound-saturation verification suites
    VerifyAttainability {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Random (lambda, phi) pairs for the unitary suite
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long = "tol-depol-low", default_value_t = 0.999)]
        tol_depol_low: f64,
        #[arg(long = "tol-unitary", default_value_t = 1e-3)]
        tol_unitary: f64,
        #[arg(long = "tol-agreement", default_value_t = 1e-6)]
        tol_agreement: f64,
    },
    /// Evaluate every bound for a trajectory file
    Bounds {
        trajectory: PathBuf,
        #[command(flatten)]
        report: ReportOpts,
    },
    /// Generate a trajectory from a named generator and report its bounds
    Generate {
        #[command(subcommand)]
        generator: GenCmd,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Pure depolarizing dynamics p_t rho0 + (1 - p_t) I/N
    Depolarize {
        /// State dimension for the random initial state
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Initial state file (matrix text format); overrides --n/--seed
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Sched::Linear)]
        schedule: Sched,
        /// Final value of p (starts at 1)
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        p_end: f64,
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        report: ReportOpts,
    },
    /// Convex geodesic rho0 + beta_t (rho0 - I/N) with beta_0 = 0
    Geodesic {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Sched::Linear)]
        schedule: Sched,
        /// Final value of beta
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        beta_end: f64,
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        report: ReportOpts,
    },
    /// Reduced dynamics of a 2x2 composite under a diagonal Hamiltonian
    Composite {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Upper end of the uniform diagonal Hamiltonian entries
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        scale: f64,
        /// System state file; random when omitted
        #[arg(long)]
        state_s: Option<PathBuf>,
        /// Environment state file; random when omitted
        #[arg(long)]
        state_e: Option<PathBuf>,
        /// Hamiltonian file (4x4, Hermitian); random diagonal when omitted
        #[arg(long)]
        hamiltonian: Option<PathBuf>,
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        report: ReportOpts,
    },
    /// Unitary orbit of lambda |0><0| + (1-lambda) |1><1|
    QubitUnitary {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi: f64,
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        report: ReportOpts,
    },
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(HarnessError::from)
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(HarnessError::from),
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

fn render_report(report: &BoundReport, format: Format) -> String {
    match format {
        Format::Json => {
            serde_json::to_string_pretty(report).expect("report serialization is infallible")
        }
        Format::Csv => format!(
            "{}\n{}\n",
            BoundReport::csv_header(report.tau_const_alpha.is_some()),
            report.csv_row()
        ),
    }
}

fn load_state(path: &Option<PathBuf>, n: usize, seed: u64, stream: u64) -> Result<DensityMatrix> {
    match path {
        Some(p) => Ok(parse_density(&read_to_string(p)?)?),
        None => Ok(random_density(n, &RngStream::new(seed, stream))),
    }
}

fn finish_generate(traj: &Trajectory, grid: &GridOpts, report_opts: &ReportOpts) -> Result<()> {
    if let Some(path) = &grid.dump_trajectory {
        std::fs::write(path, write_trajectory(traj))?;
    }
    let report = evaluate_trajectory(traj, report_opts.alpha2, &report_opts.quadrature())?;
    emit(
        &render_report(&report, report_opts.format),
        &report_opts.out,
    )
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Experiment {
            samples,
            seed,
            tau,
            grid,
            scale,
            alpha2,
            ensemble,
            fixed_environment,
            format,
            out,
            tol_quad,
        } => {
            let cfg = ExperimentConfig {
                samples,
                seed,
                tau,
                grid_m: grid,
                hamiltonian_scale: scale,
                ensemble: ensemble.into(),
                fixed_environment,
                alpha2,
                quad_rel_tol: tol_quad,
            };
            let (records, summary) = run_random_experiment(&cfg)?;
            let text = match format {
                Format::Csv => experiment_csv(&records, alpha2.is_some()),
                Format::Json => serde_json::to_string_pretty(&experiment_json(&records, &summary))
                    .expect("experiment serialization is infallible"),
            };
            emit(&text, &out)?;
            eprintln!(
                "samples {}: fractions F1 {:.3} F2 {:.3} F3 {:.3}; combined/tau mean {:.4}",
                summary.samples,
                summary.fractions.f1,
                summary.fractions.f2,
                summary.fractions.f3,
                summary.combined_ratio.mean,
            );
            Ok(0)
        }
        Cmd::VerifyMetric {
            seed,
            trials,
            tol_triangle,
            tol_invariant,
            tol_consistency,
        } => {
            let tol = MetricTolerances {
                triangle_slack: tol_triangle,
                invariant: tol_invariant,
                consistency_factor: tol_consistency,
            };
            let report = verify_metric(seed, trials, &tol);
            print!("{}", report.render());
            Ok(if report.passed() { 0 } else { 1 })
        }
        Cmd::VerifyAttainability {
            seed,
            trials,
            tol_depol_low,
            tol_unitary,
            tol_agreement,
        } => {
            let tol = AttainTolerances {
                depol_low: tol_depol_low,
                unitary: tol_unitary,
                agreement: tol_agreement,
                ..AttainTolerances::default()
            };
            let report = verify_attainability(seed, trials, &tol);
            print!("{}", report.render());
            Ok(if report.passed() { 0 } else { 1 })
        }
        Cmd::Bounds { trajectory, report } => {
            let traj = parse_trajectory(&read_to_string(&trajectory)?)?;
            let bound_report = evaluate_trajectory(&traj, report.alpha2, &report.quadrature())?;
            emit(&render_report(&bound_report, report.format), &report.out)?;
            Ok(0)
        }
        Cmd::Generate { generator } => {
            match generator {
                GenCmd::Depolarize {
                    n,
                    seed,
                    state,
                    schedule,
                    p_end,
                    grid,
                    report,
                } => {
                    let rho0 = load_state(&state, n, seed, 0)?;
                    let sched = schedule.build(1.0, p_end, grid.tau);
                    let traj = depolarize(&rho0, sched, grid.tau, grid.grid)?;
                    finish_generate(&traj, &grid, &report)?;
                }
                GenCmd::Geodesic {
                    n,
                    seed,
                    state,
                    schedule,
                    beta_end,
                    grid,
                    report,
                } => {
                    let rho0 = load_state(&state, n, seed, 0)?;
                    let sched = schedule.build(0.0, beta_end, grid.tau);
                    let traj = geodesic(&rho0, sched, grid.tau, grid.grid)?;
                    finish_generate(&traj, &grid, &report)?;
                }
                GenCmd::Composite {
                    seed,
                    scale,
                    state_s,
                    state_e,
                    hamiltonian,
                    grid,
                    report,
                } => {
                    let rho_s = load_state(&state_s, 2, seed, 0)?;
                    let rho_e = load_state(&state_e, 2, seed, 1)?;
                    let h = match &hamiltonian {
                        Some(p) => parse_hermitian(&read_to_string(p)?)?,
                        None => random_diag_hamiltonian(4, &RngStream::new(seed, 2), scale),
                    };
                    let traj = composite_unitary(&rho_s, &rho_e, &h, grid.tau, grid.grid)?;
                    finish_generate(&traj, &grid, &report)?;
                }
                GenCmd::QubitUnitary {
                    lambda,
                    phi,
                    grid,
                    report,
                } => {
                    let traj = qubit_mixture_unitary(lambda, phi, grid.tau, grid.grid)?;
                    finish_generate(&traj, &grid, &report)?;
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
