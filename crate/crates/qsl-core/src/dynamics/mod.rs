//! Trajectory representation and the dynamics generators: global unitary
//! evolution of a qubit-plus-environment composite, pure depolarizing
//! dynamics, the convex geodesic toward the maximally mixed state, the
//! attainability construction for qubit mixtures, and ingestion of external
//! trajectory samples with finite-difference derivatives.

pub mod text;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig, partial_trace_herm, ComplexMatrix, DensityMatrix, HermitianMatrix, Subsystem, PSD_TOL,
};

/// How the derivatives of a trajectory were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    FiniteDifference,
}

/// Time grid over [0, tau] with a state and a traceless derivative per point.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
    derivs: Vec<HermitianMatrix>,
    provenance: Provenance,
}

const DERIV_TRACE_TOL: f64 = 1e-10;

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        states: Vec<DensityMatrix>,
        derivs: Vec<HermitianMatrix>,
        provenance: Provenance,
    ) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidTrajectory(
                "need at least 2 grid points".into(),
            ));
        }
        if times.len() != states.len() || times.len() != derivs.len() {
            return Err(Error::InvalidTrajectory(format!(
                "length mismatch: {} times, {} states, {} derivatives",
                times.len(),
                states.len(),
                derivs.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidTrajectory(format!(
                "grid must start at t = 0, got {}",
                times[0]
            )));
        }
        for k in 1..times.len() {
            if !times[k].is_finite() || times[k] <= times[k - 1] {
                return Err(Error::InvalidTrajectory(format!(
                    "times must increase strictly: t[{}] = {} after t[{}] = {}",
                    k,
                    times[k],
                    k - 1,
                    times[k - 1]
                )));
            }
        }
        let dim = states[0].dim();
        for (k, (s, d)) in states.iter().zip(derivs.iter()).enumerate() {
            if s.dim() != dim || d.dim() != dim {
                return Err(Error::InvalidTrajectory(format!(
                    "inconsistent dimension at grid index {k}"
                )));
            }
            let tr = d.trace_re();
            if tr.abs() > DERIV_TRACE_TOL {
                return Err(Error::NotTraceless { trace: tr });
            }
        }
        Ok(Self {
            times,
            states,
            derivs,
            provenance,
        })
    }

    pub fn points(&self) -> usize {
        self.times.len()
    }

    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn state(&self, k: usize) -> &DensityMatrix {
        &self.states[k]
    }

    pub fn deriv(&self, k: usize) -> &HermitianMatrix {
        &self.derivs[k]
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.states[0]
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().unwrap()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Uniform within a relative tolerance on the step.
    pub fn is_uniform(&self) -> bool {
        let h = self.duration() / self.intervals() as f64;
        self.times
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - k as f64 * h).abs() <= 1e-9 * self.duration())
    }

    /// Runs the full PSD validation on every grid state.
    pub fn validate_states(&self) -> Result<()> {
        for s in &self.states {
            s.validate_full()?;
        }
        Ok(())
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Linear,
    Cosine,
    Custom,
}

/// Monotone scalar schedule on [0, tau] with an analytic derivative.
#[derive(Clone)]
pub struct Schedule {
    kind: ScheduleKind,
    eval: ScalarFn,
    deriv: ScalarFn,
}

impl std::fmt::Debug for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Schedule({:?})", self.kind)
    }
}

impl Schedule {
    /// Straight line from `from` at t = 0 to `to` at t = tau.
    pub fn linear(from: f64, to: f64, tau: f64) -> Self {
        let slope = (to - from) / tau;
        Self {
            kind: ScheduleKind::Linear,
            eval: Arc::new(move |t| from + slope * t),
            deriv: Arc::new(move |_| slope),
        }
    }

    /// Half-cosine ramp from `from` at t = 0 to `to` at t = tau; its slope
    /// vanishes at both endpoints.
    pub fn cosine(from: f64, to: f64, tau: f64) -> Self {
        let amp = from - to;
        Self {
            kind: ScheduleKind::Cosine,
            eval: Arc::new(move |t| {
                to + amp * (1.0 + (std::f64::consts::PI * t / tau).cos()) / 2.0
            }),
            deriv: Arc::new(move |t| {
                -amp * std::f64::consts::PI * (std::f64::consts::PI * t / tau).sin() / (2.0 * tau)
            }),
        }
    }

    pub fn custom(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: ScheduleKind::Custom,
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
        }
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn slope(&self, t: f64) -> f64 {
        (self.deriv)(t)
    }

    /// Monotonicity check by sampling 1000 points on [0, tau].
    pub fn check_monotone(&self, tau: f64) -> Result<()> {
        const SAMPLES: usize = 1000;
        let mut prev = self.value(0.0);
        let mut dir = 0.0f64;
        for k in 1..=SAMPLES {
            let t = tau * k as f64 / SAMPLES as f64;
            let v = self.value(t);
            let step = v - prev;
            if step * dir < -1e-12 {
                return Err(Error::NonMonotoneSchedule { t });
            }
            if step.abs() > 1e-12 {
                dir = step.signum();
            }
            prev = v;
        }
        Ok(())
    }

    /// Checks value(t) stays within [lo, hi] by sampling, and the start value.
    fn check_range(&self, tau: f64, lo: f64, hi: f64) -> Result<()> {
        const SAMPLES: usize = 1000;
        for k in 0..=SAMPLES {
            let t = tau * k as f64 / SAMPLES as f64;
            let v = self.value(t);
            if v < lo - 1e-12 || v > hi + 1e-12 {
                return Err(Error::ScheduleOutOfRange { t, value: v });
            }
        }
        Ok(())
    }
}

/// Continuous-time dynamics that can be evaluated at any instant and
/// sampled onto a uniform grid. All implementations are pure: the same
/// generator yields the same trajectory every time.
pub trait Generator: Send + Sync {
    fn dim(&self) -> usize;
    fn duration(&self) -> f64;
    fn state_at(&self, t: f64) -> DensityMatrix;
    fn deriv_at(&self, t: f64) -> HermitianMatrix;

    /// Samples onto the uniform grid t_k = k tau / m, k = 0..=m.
    fn sample(&self, m: usize) -> Trajectory {
        assert!(m >= 1, "need at least one interval");
        let tau = self.duration();
        let times: Vec<f64> = (0..=m).map(|k| tau * k as f64 / m as f64).collect();
        let states = times.iter().map(|&t| self.state_at(t)).collect();
        let derivs = times.iter().map(|&t| self.deriv_at(t)).collect();
        Trajectory {
            times,
            states,
            derivs,
            provenance: Provenance::Analytic,
        }
    }
}

/// rho0 - I/N, the direction shared by the depolarizing and geodesic
/// generators.
fn identity_direction(rho0: &DensityMatrix) -> HermitianMatrix {
    let n = rho0.dim();
    let n_inv = 1.0 / n as f64;
    HermitianMatrix::new_unchecked(ComplexMatrix::from_fn(n, |i, j| {
        let mut z = rho0.get(i, j);
        if i == j {
            z -= n_inv;
        }
        z
    }))
}

/// I/N + c (rho0 - I/N); a valid state whenever the eigenvalue window allows.
fn mix_toward_identity(dir: &HermitianMatrix, c: f64) -> DensityMatrix {
    let n = dir.dim();
    let n_inv = 1.0 / n as f64;
    let m = ComplexMatrix::from_fn(n, |i, j| {
        let mut z = dir.get(i, j) * c;
        if i == j {
            z += n_inv;
        }
        z
    });
    DensityMatrix::new_unchecked(HermitianMatrix::new_unchecked(m))
}

/// Unitary evolution of a 2 (x) 2 composite under a fixed Hamiltonian,
/// reduced to the system qubit by tracing out the environment.
pub struct CompositeUnitary {
    dim_s: usize,
    dim_e: usize,
    tau: f64,
    evals: Vec<f64>,
    /// None when H is diagonal in the computational basis.
    evecs: Option<ComplexMatrix>,
    /// Initial composite state expressed in the eigenbasis of H.
    rho0_eig: ComplexMatrix,
}

impl CompositeUnitary {
    pub fn new(
        rho_s: &DensityMatrix,
        rho_e: &DensityMatrix,
        h: &HermitianMatrix,
        tau: f64,
    ) -> Result<Self> {
        if rho_s.dim() != 2 || rho_e.dim() != 2 {
            return Err(Error::DimensionMismatch {
                op: "composite_unitary",
                left: rho_s.dim(),
                right: rho_e.dim(),
            });
        }
        if h.dim() != 4 {
            return Err(Error::DimensionMismatch {
                op: "composite_unitary",
                left: h.dim(),
                right: 4,
            });
        }
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
                msg: "must be positive",
            });
        }
        let rho0 = DensityMatrix::tensor(rho_s, rho_e);
        let (evals, evecs, rho0_eig) = if h.matrix().is_diagonal() {
            let evals = (0..4).map(|i| h.get(i, i).re).collect();
            (evals, None, rho0.matrix().clone())
        } else {
            let eig = herm_eig(h)?;
            let v = eig.vectors;
            let rotated = v.adjoint().matmul(rho0.matrix()).matmul(&v);
            (eig.values, Some(v), rotated)
        };
        Ok(Self {
            dim_s: 2,
            dim_e: 2,
            tau,
            evals,
            evecs,
            rho0_eig,
        })
    }

    fn composite_eig_at(&self, t: f64) -> ComplexMatrix {
        ComplexMatrix::from_fn(4, |a, b| {
            self.rho0_eig.get(a, b) * Complex64::cis(-(self.evals[a] - self.evals[b]) * t)
        })
    }

    fn to_computational(&self, m: ComplexMatrix) -> ComplexMatrix {
        match &self.evecs {
            None => m,
            Some(v) => v.matmul(&m).matmul(&v.adjoint()),
        }
    }

    /// Full composite state at time t (unitary orbit of rho_S (x) rho_E).
    pub fn composite_state_at(&self, t: f64) -> DensityMatrix {
        let m = self.to_computational(self.composite_eig_at(t));
        DensityMatrix::new_unchecked(HermitianMatrix::new_unchecked(m))
    }

    /// -i [H, rho_SE(t)] in the computational basis.
    pub fn composite_deriv_at(&self, t: f64) -> HermitianMatrix {
        let m = ComplexMatrix::from_fn(4, |a, b| {
            let gap = self.evals[a] - self.evals[b];
            self.rho0_eig.get(a, b) * Complex64::cis(-gap * t) * Complex64::new(0.0, -gap)
        });
        HermitianMatrix::new_unchecked(self.to_computational(m))
    }
}

impl Generator for CompositeUnitary {
    fn dim(&self) -> usize {
        self.dim_s
    }

    fn duration(&self) -> f64 {
        self.tau
    }

    fn state_at(&self, t: f64) -> DensityMatrix {
        let full = self.composite_state_at(t);
        partial_trace_herm(full.hermitian(), self.dim_s, self.dim_e, Subsystem::System)
            .map(DensityMatrix::new_unchecked)
            .expect("dimensions fixed at construction")
    }

    fn deriv_at(&self, t: f64) -> HermitianMatrix {
        let full = self.composite_deriv_at(t);
        partial_trace_herm(&full, self.dim_s, self.dim_e, Subsystem::System)
            .expect("dimensions fixed at construction")
    }
}

/// rho_S(t_k) = Tr_E[U(t_k) (rho_S (x) rho_E) U(t_k)^dag] on a uniform grid,
/// with analytic derivatives Tr_E[-i [H, rho_SE(t)]].
pub fn composite_unitary(
    rho_s: &DensityMatrix,
    rho_e: &DensityMatrix,
    h: &HermitianMatrix,
    tau: f64,
    m: usize,
) -> Result<Trajectory> {
    if m < 64 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: m as f64,
            msg: "composite_unitary requires at least 64 grid intervals",
        });
    }
    Ok(CompositeUnitary::new(rho_s, rho_e, h, tau)?.sample(m))
}

/// Pure depolarizing dynamics rho_t = p_t rho0 + (1 - p_t) I/N.
pub struct Depolarize {
    dir: HermitianMatrix,
    schedule: Schedule,
    tau: f64,
    dim: usize,
}

impl Depolarize {
    pub fn new(rho0: &DensityMatrix, p: Schedule, tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
                msg: "must be positive",
            });
        }
        let p0 = p.value(0.0);
        if (p0 - 1.0).abs() > 1e-9 {
            return Err(Error::ScheduleOutOfRange { t: 0.0, value: p0 });
        }
        p.check_range(tau, 0.0, 1.0)?;
        p.check_monotone(tau)?;
        // non-increasing
        if p.value(tau) > p0 + 1e-12 {
            return Err(Error::NonMonotoneSchedule { t: tau });
        }
        Ok(Self {
            dir: identity_direction(rho0),
            schedule: p,
            tau,
            dim: rho0.dim(),
        })
    }
}

impl Generator for Depolarize {
    fn dim(&self) -> usize {
        self.dim
    }

    fn duration(&self) -> f64 {
        self.tau
    }

    fn state_at(&self, t: f64) -> DensityMatrix {
        mix_toward_identity(&self.dir, self.schedule.value(t))
    }

    fn deriv_at(&self, t: f64) -> HermitianMatrix {
        self.dir.scale_re(self.schedule.slope(t))
    }
}

/// Depolarizing trajectory with analytic derivatives p_dot (rho0 - I/N).
pub fn depolarize(rho0: &DensityMatrix, p: Schedule, tau: f64, m: usize) -> Result<Trajectory> {
    Ok(Depolarize::new(rho0, p, tau)?.sample(m))
}

/// Convex geodesic rho_t = rho0 + beta_t (rho0 - I/N) with beta_0 = 0;
/// reduces to depolarizing dynamics under beta = p - 1.
pub struct GeodesicPath {
    dir: HermitianMatrix,
    schedule: Schedule,
    tau: f64,
    dim: usize,
}

impl GeodesicPath {
    pub fn new(rho0: &DensityMatrix, beta: Schedule, tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
                msg: "must be positive",
            });
        }
        let b0 = beta.value(0.0);
        if b0.abs() > 1e-9 {
            return Err(Error::ScheduleOutOfRange { t: 0.0, value: b0 });
        }
        beta.check_monotone(tau)?;
        // PSD window: the state eigenvalues are (1 + beta) lambda_i - beta/N,
        // so the eigendecomposition of rho0 settles validity for every t.
        let eig = herm_eig(rho0.hermitian())?;
        let n_inv = 1.0 / rho0.dim() as f64;
        const SAMPLES: usize = 1000;
        for k in 0..=SAMPLES {
            let t = tau * k as f64 / SAMPLES as f64;
            let c = 1.0 + beta.value(t);
            let min = eig
                .values
                .iter()
                .map(|&l| c * l + (1.0 - c) * n_inv)
                .fold(f64::INFINITY, f64::min);
            if min < PSD_TOL {
                return Err(Error::PsdViolationAt {
                    t,
                    min_eigenvalue: min,
                });
            }
        }
        Ok(Self {
            dir: identity_direction(rho0),
            schedule: beta,
            tau,
            dim: rho0.dim(),
        })
    }
}

impl Generator for GeodesicPath {
    fn dim(&self) -> usize {
        self.dim
    }

    fn duration(&self) -> f64 {
        self.tau
    }

    fn state_at(&self, t: f64) -> DensityMatrix {
        mix_toward_identity(&self.dir, 1.0 + self.schedule.value(t))
    }

    fn deriv_at(&self, t: f64) -> HermitianMatrix {
        self.dir.scale_re(self.schedule.slope(t))
    }
}

/// Geodesic trajectory; errors with the first offending grid time when the
/// schedule drives the state out of the PSD cone.
pub fn geodesic(rho0: &DensityMatrix, beta: Schedule, tau: f64, m: usize) -> Result<Trajectory> {
    let gen = GeodesicPath::new(rho0, beta, tau)?;
    // exact check on the grid actually emitted
    let eig = herm_eig(rho0.hermitian())?;
    let n_inv = 1.0 / rho0.dim() as f64;
    for k in 0..=m {
        let t = tau * k as f64 / m as f64;
        let c = 1.0 + gen.schedule.value(t);
        let min = eig
            .values
            .iter()
            .map(|&l| c * l + (1.0 - c) * n_inv)
            .fold(f64::INFINITY, f64::min);
        if min < PSD_TOL {
            return Err(Error::PsdViolationAt {
                t,
                min_eigenvalue: min,
            });
        }
    }
    Ok(gen.sample(m))
}

/// Exact unitary orbit of the qubit mixture
/// rho0 = lambda |0><0| + (1 - lambda) |1><1| under
/// H = e^{i phi} |0><1| + e^{-i phi} |1><0| (so H^2 = I and
/// U(t) = cos(t) I - i sin(t) H in closed form).
pub struct QubitMixtureUnitary {
    lambda: f64,
    h: HermitianMatrix,
    rho0: DensityMatrix,
    tau: f64,
}

impl QubitMixtureUnitary {
    pub fn new(lambda: f64, phi: f64, tau: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.5 || lambda > 1.0 {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                msg: "must lie in (1/2, 1]",
            });
        }
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
                msg: "must be positive",
            });
        }
        let h = HermitianMatrix::new_unchecked(ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.0, 0.0), Complex64::cis(phi)],
            vec![Complex64::cis(-phi), Complex64::new(0.0, 0.0)],
        ])?);
        let rho0 = DensityMatrix::new_unchecked(HermitianMatrix::diagonal(&[lambda, 1.0 - lambda]));
        Ok(Self {
            lambda,
            h,
            rho0,
            tau,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn unitary(&self, t: f64) -> ComplexMatrix {
        let c = Complex64::new(t.cos(), 0.0);
        let ms = Complex64::new(0.0, -t.sin());
        ComplexMatrix::from_fn(2, |i, j| {
            let mut z = self.h.get(i, j) * ms;
            if i == j {
                z += c;
            }
            z
        })
    }
}

impl Generator for QubitMixtureUnitary {
    fn dim(&self) -> usize {
        2
    }

    fn duration(&self) -> f64 {
        self.tau
    }

    fn state_at(&self, t: f64) -> DensityMatrix {
        self.rho0.conjugate_by(&self.unitary(t))
    }

    fn deriv_at(&self, t: f64) -> HermitianMatrix {
        HermitianMatrix::minus_i_commutator(&self.h, self.state_at(t).hermitian())
    }
}

/// Unitary attainability trajectory for a qubit mixture; purity is constant
/// along the orbit.
pub fn qubit_mixture_unitary(lambda: f64, phi: f64, tau: f64, m: usize) -> Result<Trajectory> {
    Ok(QubitMixtureUnitary::new(lambda, phi, tau)?.sample(m))
}

/// Derivative weights of the quadratic through (xs[0..3], f) evaluated at
/// xs[self_idx]; the self weight is the negative sum of the others, so a
/// constant function differentiates to exactly zero.
fn three_point_weights(xs: [f64; 3], self_idx: usize) -> [f64; 3] {
    let x = xs[self_idx];
    let mut w = [0.0; 3];
    for i in 0..3 {
        if i == self_idx {
            continue;
        }
        let node = xs[i];
        let o1 = xs[(i + 1) % 3];
        let o2 = xs[(i + 2) % 3];
        // derivative of the Lagrange basis of `node` at x
        w[i] = (2.0 * x - o1 - o2) / ((node - o1) * (node - o2));
    }
    w[self_idx] = -(w[(self_idx + 1) % 3] + w[(self_idx + 2) % 3]);
    w
}

/// Builds a trajectory from external samples; derivatives by second-order
/// finite differences (central in the interior, one-sided at the ends).
/// States are fully validated.
pub fn from_samples(times: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Trajectory> {
    if times.len() < 3 {
        return Err(Error::InvalidTrajectory(format!(
            "need at least 3 samples, got {}",
            times.len()
        )));
    }
    if times.len() != states.len() {
        return Err(Error::InvalidTrajectory(format!(
            "{} times vs {} states",
            times.len(),
            states.len()
        )));
    }
    for (k, s) in states.iter().enumerate() {
        s.validate_full()
            .map_err(|e| Error::InvalidTrajectory(format!("state at sample index {k}: {e}")))?;
    }
    let m = times.len() - 1;
    let mut derivs = Vec::with_capacity(times.len());
    for k in 0..=m {
        let (i0, self_idx) = if k == 0 {
            (0, 0)
        } else if k == m {
            (m - 2, 2)
        } else {
            (k - 1, 1)
        };
        let xs = [times[i0], times[i0 + 1], times[i0 + 2]];
        let w = three_point_weights(xs, self_idx);
        // sum w_i rho_i rearranged as differences against the sample itself
        // (exact since the weights sum to zero): constant samples yield an
        // exactly zero derivative and near-constant ones avoid cancellation
        let me = states[i0 + self_idx].hermitian();
        let o1 = (self_idx + 1) % 3;
        let o2 = (self_idx + 2) % 3;
        let d = states[i0 + o1]
            .hermitian()
            .sub(me)
            .scale_re(w[o1])
            .add(&states[i0 + o2].hermitian().sub(me).scale_re(w[o2]));
        derivs.push(d);
    }
    Trajectory::new(times, states, derivs, Provenance::FiniteDifference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hs_inner, kron, random_density, random_diag_hamiltonian, RngStream};
    use crate::metric::purity;

    fn max_dev(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
        a.matrix().sub(b.matrix()).max_abs()
    }

    #[test]
    fn composite_with_zero_hamiltonian_is_constant() {
        let rho_s = random_density(2, &RngStream::new(21, 0));
        let rho_e = random_density(2, &RngStream::new(21, 1));
        let h = HermitianMatrix::zeros(4);
        let traj = composite_unitary(&rho_s, &rho_e, &h, 1.0, 64).unwrap();
        for k in 0..traj.points() {
            assert!(max_dev(traj.state(k), &rho_s) < 1e-14);
            assert!(traj.deriv(k).frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn composite_requires_64_intervals() {
        let rho_s = random_density(2, &RngStream::new(21, 2));
        let rho_e = random_density(2, &RngStream::new(21, 3));
        let h = HermitianMatrix::zeros(4);
        assert!(matches!(
            composite_unitary(&rho_s, &rho_e, &h, 1.0, 32),
            Err(Error::InvalidParameter { name: "m", .. })
        ));
    }

    #[test]
    fn analytic_derivs_match_midpoint_differences_at_second_order() {
        let rho_s = random_density(2, &RngStream::new(27, 0));
        let rho_e = random_density(2, &RngStream::new(27, 1));
        let h = random_diag_hamiltonian(4, &RngStream::new(27, 2), 2.0 * std::f64::consts::PI);
        let gen = CompositeUnitary::new(&rho_s, &rho_e, &h, 1.0).unwrap();
        let err_at = |m: usize| -> f64 {
            let traj = gen.sample(m);
            let dt = 1.0 / m as f64;
            (0..m)
                .map(|k| {
                    let fd = traj
                        .state(k + 1)
                        .hermitian()
                        .sub(traj.state(k).hermitian())
                        .scale_re(1.0 / dt);
                    let mid = gen.deriv_at((traj.time(k) + traj.time(k + 1)) / 2.0);
                    fd.sub(&mid).frobenius_norm()
                })
                .fold(0.0, f64::max)
        };
        let coarse = err_at(64);
        let fine = err_at(128);
        assert!(coarse / fine >= 3.0, "{coarse} -> {fine}");
    }

    #[test]
    fn composite_local_hamiltonian_preserves_reduced_purity() {
        let rho_s = random_density(2, &RngStream::new(22, 0));
        let rho_e = random_density(2, &RngStream::new(22, 1));
        // H = H_S (x) I acts on the system alone
        let h_s = crate::linalg::random_hermitian(2, &mut RngStream::new(22, 2).rng());
        let h = HermitianMatrix::new(kron(h_s.matrix(), &ComplexMatrix::identity(2))).unwrap();
        let traj = composite_unitary(&rho_s, &rho_e, &h, 1.0, 128).unwrap();
        let p0 = purity(traj.state(0));
        for k in 0..traj.points() {
            assert!((purity(traj.state(k)) - p0).abs() < 1e-12);
        }
    }

    #[test]
    fn composite_preserves_trace_and_composite_purity() {
        let rho_s = random_density(2, &RngStream::new(23, 0));
        let rho_e = random_density(2, &RngStream::new(23, 1));
        let h = random_diag_hamiltonian(4, &RngStream::new(23, 2), 2.0 * std::f64::consts::PI);
        let gen = CompositeUnitary::new(&rho_s, &rho_e, &h, 1.0).unwrap();
        let traj = gen.sample(128);
        let full_p0 = gen.composite_state_at(0.0).purity_raw();
        for k in 0..traj.points() {
            assert!((traj.state(k).hermitian().trace_re() - 1.0).abs() < 1e-12);
            let p = purity(traj.state(k));
            assert!((0.5..=1.0 + 1e-12).contains(&p));
            let full = gen.composite_state_at(traj.time(k)).purity_raw();
            assert!((full - full_p0).abs() < 1e-12);
        }
    }

    #[test]
    fn depolarize_constant_schedule_is_constant() {
        let rho0 = random_density(3, &RngStream::new(24, 0));
        let traj = depolarize(&rho0, Schedule::linear(1.0, 1.0, 1.0), 1.0, 32).unwrap();
        for k in 0..traj.points() {
            assert!(max_dev(traj.state(k), &rho0) < 1e-15);
            assert!(traj.deriv(k).frobenius_norm() == 0.0);
        }
    }

    #[test]
    fn depolarize_reaches_maximally_mixed() {
        let rho0 = random_density(2, &RngStream::new(24, 1));
        let traj = depolarize(&rho0, Schedule::linear(1.0, 0.0, 1.0), 1.0, 32).unwrap();
        assert_eq!(
            traj.final_state().matrix(),
            DensityMatrix::maximally_mixed(2).matrix()
        );
    }

    #[test]
    fn depolarize_purity_follows_closed_form_and_decreases() {
        let rho0 = random_density(4, &RngStream::new(24, 2));
        let p0 = purity(&rho0);
        let tau = 2.0;
        let sched = Schedule::cosine(1.0, 0.0, tau);
        let traj = depolarize(&rho0, sched.clone(), tau, 64).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..traj.points() {
            let pt = sched.value(traj.time(k));
            let want = 0.25 + pt * pt * (p0 - 0.25);
            let got = purity(traj.state(k));
            assert!((got - want).abs() < 1e-12);
            assert!(got <= prev + 1e-12);
            prev = got;
        }
    }

    #[test]
    fn depolarize_rejects_bad_schedules() {
        let rho0 = random_density(2, &RngStream::new(24, 3));
        // does not start at 1
        assert!(matches!(
            depolarize(&rho0, Schedule::linear(0.5, 0.0, 1.0), 1.0, 16),
            Err(Error::ScheduleOutOfRange { .. })
        ));
        // leaves [0, 1]
        assert!(matches!(
            depolarize(&rho0, Schedule::linear(1.0, -0.5, 1.0), 1.0, 16),
            Err(Error::ScheduleOutOfRange { .. })
        ));
    }

    #[test]
    fn geodesic_zero_schedule_is_constant() {
        let rho0 = random_density(3, &RngStream::new(25, 0));
        let traj = geodesic(&rho0, Schedule::linear(0.0, 0.0, 1.0), 1.0, 32).unwrap();
        for k in 0..traj.points() {
            assert!(max_dev(traj.state(k), &rho0) < 1e-15);
        }
    }

    #[test]
    fn geodesic_matches_depolarize_bitwise_under_beta_shift() {
        let rho0 = random_density(2, &RngStream::new(25, 1));
        let tau = 1.5;
        let m = 64;
        let depo = depolarize(&rho0, Schedule::linear(1.0, 0.0, tau), tau, m).unwrap();
        let geo = geodesic(&rho0, Schedule::linear(0.0, -1.0, tau), tau, m).unwrap();
        for k in 0..depo.points() {
            assert_eq!(depo.state(k).matrix(), geo.state(k).matrix());
            assert_eq!(depo.deriv(k).matrix(), geo.deriv(k).matrix());
        }
    }

    #[test]
    fn geodesic_passes_through_maximally_mixed() {
        let rho0 = random_density(2, &RngStream::new(25, 2));
        let traj = geodesic(&rho0, Schedule::linear(0.0, -1.0, 1.0), 1.0, 32).unwrap();
        assert_eq!(
            traj.final_state().matrix(),
            DensityMatrix::maximally_mixed(2).matrix()
        );
    }

    #[test]
    fn geodesic_reports_first_psd_violation() {
        let rho0 = DensityMatrix::basis_state(2, 0);
        // beta = -2 is the PSD edge for a pure qubit; -2.5 overshoots at t = 0.8
        match geodesic(&rho0, Schedule::linear(0.0, -2.5, 1.0), 1.0, 100) {
            Err(Error::PsdViolationAt { t, .. }) => {
                assert!((t - 0.8).abs() < 0.05, "violation reported at t = {t}")
            }
            other => panic!("expected PSD violation, got {other:?}"),
        }
    }

    #[test]
    fn qubit_mixture_full_flip_at_half_period() {
        // lambda = 1: rho0 = |0><0|; rotation angle 2t = pi flips it to |1><1|
        let traj = qubit_mixture_unitary(1.0, 0.7, std::f64::consts::PI / 2.0, 64).unwrap();
        assert!(max_dev(traj.final_state(), &DensityMatrix::basis_state(2, 1)) < 1e-12);
    }

    #[test]
    fn qubit_mixture_purity_and_overlap_invariants() {
        let lambda = 0.83;
        let traj = qubit_mixture_unitary(lambda, -0.4, 1.0, 64).unwrap();
        let want = lambda * lambda + (1.0 - lambda) * (1.0 - lambda);
        for k in 0..traj.points() {
            assert!((purity(traj.state(k)) - want).abs() < 1e-13);
            let trrd = hs_inner(traj.state(k).hermitian(), traj.deriv(k)).unwrap();
            assert!(trrd.abs() < 1e-13);
        }
    }

    #[test]
    fn qubit_mixture_rejects_balanced_lambda() {
        assert!(matches!(
            qubit_mixture_unitary(0.5, 0.0, 1.0, 16),
            Err(Error::InvalidParameter { name: "lambda", .. })
        ));
    }

    #[test]
    fn from_samples_constant_gives_exactly_zero_derivs() {
        let rho = random_density(2, &RngStream::new(26, 0));
        let times = vec![0.0, 0.5, 1.0, 1.5];
        let states = vec![rho.clone(), rho.clone(), rho.clone(), rho.clone()];
        let traj = from_samples(times, states).unwrap();
        for k in 0..traj.points() {
            assert_eq!(traj.deriv(k).frobenius_norm(), 0.0);
        }
    }

    #[test]
    fn from_samples_derivs_converge_at_second_order() {
        let rho0 = random_density(2, &RngStream::new(26, 1));
        let tau = 1.0;
        let gen = Depolarize::new(&rho0, Schedule::cosine(1.0, 0.0, tau), tau).unwrap();
        let err_at = |m: usize| -> f64 {
            let exact = gen.sample(m);
            let fd = from_samples(
                exact.times().to_vec(),
                (0..exact.points())
                    .map(|k| exact.state(k).clone())
                    .collect(),
            )
            .unwrap();
            (0..fd.points())
                .map(|k| fd.deriv(k).sub(exact.deriv(k)).frobenius_norm())
                .fold(0.0, f64::max)
        };
        let coarse = err_at(32);
        let fine = err_at(64);
        assert!(
            coarse / fine >= 3.0,
            "second-order convergence violated: {coarse} -> {fine}"
        );
    }

    #[test]
    fn from_samples_rejects_two_points() {
        let rho = random_density(2, &RngStream::new(26, 2));
        assert!(matches!(
            from_samples(vec![0.0, 1.0], vec![rho.clone(), rho]),
            Err(Error::InvalidTrajectory(_))
        ));
    }

    #[test]
    fn trajectory_rejects_non_increasing_times() {
        let rho = random_density(2, &RngStream::new(26, 3));
        let err = from_samples(vec![0.0, 0.5, 0.5], vec![rho.clone(), rho.clone(), rho]);
        assert!(matches!(err, Err(Error::InvalidTrajectory(_))));
    }
}
