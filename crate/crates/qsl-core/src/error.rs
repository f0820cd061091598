use thiserror::Error;

/// Errors surfaced by the linear algebra, metric, dynamics and bound layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimensionMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },

    #[error("matrix entries must be finite")]
    NonFiniteEntries,

    #[error("matrix is not Hermitian: max |A - A^dag| entry = {max_dev:.3e}")]
    NotHermitian { max_dev: f64 },

    #[error("density matrix must have unit trace, got {trace}")]
    NotUnitTrace { trace: f64 },

    #[error("density matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("derivative must be traceless, got trace {trace:.3e}")]
    NotTraceless { trace: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    EigNonConvergence { sweeps: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("alternative function violates f(x) >= x at x = {x}: f(x) = {fx}")]
    ConstraintViolated { x: f64, fx: f64 },

    #[error("negative radicand {value:.3e} in speed evaluation")]
    NegativeRadicand { value: f64 },

    #[error("quadrature did not converge: last two estimates {last:.12e}, {previous:.12e}")]
    NonConvergence { last: f64, previous: f64 },

    #[error("state is not positive semidefinite at t = {t}: min eigenvalue {min_eigenvalue:.3e}")]
    PsdViolationAt { t: f64, min_eigenvalue: f64 },

    #[error("schedule value {value} out of range at t = {t}")]
    ScheduleOutOfRange { t: f64, value: f64 },

    #[error("schedule is not monotone near t = {t}")]
    NonMonotoneSchedule { t: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid parameter {name} = {value}: {msg}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        msg: &'static str,
    },

    #[error("alpha^2 = {alpha2} is below the maximum purity {max_purity} along the trajectory")]
    AlphaBelowPurity { alpha2: f64, max_purity: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
