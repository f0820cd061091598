//! QSL-time evaluators: the general speed integrator and every closed-form
//! specialization, the combined bound, and batch report evaluation.
//!
//! Each closed-form bound evaluates its printed formula directly from the
//! trajectory's scalar moments; the general integrator goes through the
//! metric kernel instead. Their agreement is asserted by the oracle
//! equivalence tests rather than by sharing formula code.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{Generator, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::hs_inner_unchecked;
use crate::metric::{
    self, distance, interaction_ratio, speed_kernel, AlternativeFunction, Interaction, EPS_SINGULAR,
};

/// Composite rule for the speed integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    Midpoint,
    Trapezoid,
}

/// Quadrature behaviour knobs. `max_levels` caps the number of trajectory
/// refinements a generator-backed evaluation may perform.
#[derive(Debug, Clone)]
pub struct QuadratureConfig {
    pub rule: QuadratureRule,
    pub refinement_factor: usize,
    pub rel_tol: f64,
    pub max_levels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::Trapezoid,
            refinement_factor: 2,
            rel_tol: 1e-6,
            max_levels: 8,
        }
    }
}

/// Grid sizes for generator-backed evaluation: start at `initial_m`
/// intervals and double while unconverged, capped at `max_m`.
#[derive(Debug, Clone)]
pub struct GridPolicy {
    pub initial_m: usize,
    pub max_m: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            initial_m: 512,
            max_m: 1 << 16,
        }
    }
}

/// Converged speed integral with its diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct SpeedIntegral {
    pub value: f64,
    pub converged: bool,
    /// An integrable endpoint singularity forced the open midpoint rule.
    pub singular_endpoint: bool,
    /// Grid intervals of the trajectory the integral was evaluated on.
    pub resolution: usize,
    /// Difference between the last two ladder estimates.
    pub last_delta: f64,
    prev_estimate: f64,
}

/// Scalar moments of a trajectory: everything the bound formulas consume.
#[derive(Debug, Clone)]
struct Moments {
    n: usize,
    tau: f64,
    times: Vec<f64>,
    tr_dd: Vec<f64>,
    tr_rd: Vec<f64>,
    purity: Vec<f64>,
    tr_r0_rtau: f64,
    max_purity: f64,
}

impl Moments {
    fn compute(traj: &Trajectory) -> Self {
        let points = traj.points();
        let mut tr_dd = Vec::with_capacity(points);
        let mut tr_rd = Vec::with_capacity(points);
        let mut purity = Vec::with_capacity(points);
        for k in 0..points {
            let d = traj.deriv(k);
            tr_dd.push(hs_inner_unchecked(d, d));
            tr_rd.push(hs_inner_unchecked(traj.state(k).hermitian(), d));
            purity.push(metric::purity(traj.state(k)));
        }
        let tr_r0_rtau =
            hs_inner_unchecked(traj.initial().hermitian(), traj.final_state().hermitian());
        let max_purity = purity.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            n: traj.dim(),
            tau: traj.duration(),
            times: traj.times().to_vec(),
            tr_dd,
            tr_rd,
            purity,
            tr_r0_rtau,
            max_purity,
        }
    }

    fn n_inv(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// True when the derivative vanishes on the whole grid.
    fn is_zero_dynamics(&self) -> bool {
        self.tr_dd.iter().all(|&v| v <= 1e-24)
    }
}

/// Largest Tr(rho_t^2) over the trajectory grid.
pub fn max_grid_purity(traj: &Trajectory) -> f64 {
    (0..traj.points())
        .map(|k| metric::purity(traj.state(k)))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn arccos_clamped(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}

/// One integrand sample; `value` may be +infinity at a flagged singularity.
#[derive(Debug, Clone, Copy)]
struct PointEval {
    value: f64,
    zero_conv: bool,
}

impl PointEval {
    fn finite(v: f64) -> Self {
        Self {
            value: v,
            zero_conv: false,
        }
    }
}

/// Replaces isolated convention-valued or singular interior points by the
/// continuous limit their neighbors determine.
///
/// The 0/0 convention is exact for purity-preserving dynamics (where whole
/// stretches of the grid carry the flag), but at an isolated grid point that
/// straddles a purity maximum of non-unitary dynamics the true integrand is
/// finite and continuous; linear inter/extrapolation from the neighbors
/// restores it to O(h^2).
fn repair_points(pts: &mut [PointEval]) {
    let m = pts.len() - 1;
    if m < 2 {
        return;
    }
    let orig: Vec<PointEval> = pts.to_vec();
    let usable = |p: &PointEval| p.value.is_finite() && !p.zero_conv;
    for k in 0..=m {
        let p = &orig[k];
        if p.value.is_infinite() && k > 0 && k < m {
            if orig[k - 1].value.is_finite() && orig[k + 1].value.is_finite() {
                pts[k].value = 0.5 * (orig[k - 1].value + orig[k + 1].value);
            }
        } else if p.zero_conv {
            if k == 0 && usable(&orig[1]) && usable(&orig[2]) {
                pts[k].value = (2.0 * orig[1].value - orig[2].value).max(0.0);
            } else if k == m && usable(&orig[m - 1]) && usable(&orig[m - 2]) {
                pts[k].value = (2.0 * orig[m - 1].value - orig[m - 2].value).max(0.0);
            } else if k > 0 && k < m && usable(&orig[k - 1]) && usable(&orig[k + 1]) {
                pts[k].value = 0.5 * (orig[k - 1].value + orig[k + 1].value);
            }
        }
    }
}

fn trapezoid_sum(times: &[f64], vals: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 0..times.len() - 1 {
        acc += (times[k + 1] - times[k]) * 0.5 * (vals[k] + vals[k + 1]);
    }
    acc
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Open composite midpoint estimate with `cells` cells over a uniform grid
/// of `m` intervals; the sample for cell j sits at grid index
/// (m / (2 cells)) (2j + 1), so endpoints are never evaluated.
fn midpoint_rung(vals: &[f64], tau: f64, m: usize, cells: usize) -> f64 {
    let stride = m / (2 * cells);
    let w = tau / cells as f64;
    (0..cells).map(|j| vals[stride * (2 * j + 1)]).sum::<f64>() * w
}

/// Eliminates the sqrt(h) error term of midpoint estimates at cell widths
/// (w, w/2); the residual is O(h^{3/2}) for t^{-1/2}-type integrands and
/// still O(h^2)-convergent for smooth ones.
fn sqrt_richardson(coarse: f64, fine: f64) -> f64 {
    (SQRT_2 * fine - coarse) / (SQRT_2 - 1.0)
}

fn integrate_points(
    times: &[f64],
    mut pts: Vec<PointEval>,
    cfg: &QuadratureConfig,
    uniform: bool,
) -> Result<SpeedIntegral> {
    let m = pts.len() - 1;
    let tau = times[m] - times[0];
    repair_points(&mut pts);

    let endpoint_singular = pts[0].value.is_infinite() || pts[m].value.is_infinite();
    if pts[1..m].iter().any(|p| p.value.is_infinite()) {
        // an interior singularity survived repair: the grid cannot resolve it
        return Err(Error::NonConvergence {
            last: f64::INFINITY,
            previous: f64::INFINITY,
        });
    }

    let use_midpoint = endpoint_singular || cfg.rule == QuadratureRule::Midpoint;
    if use_midpoint {
        if uniform && m.is_multiple_of(8) {
            let vals: Vec<f64> = pts.iter().map(|p| p.value).collect();
            let i1 = midpoint_rung(&vals, tau, m, m / 2);
            let i2 = midpoint_rung(&vals, tau, m, m / 4);
            let i3 = midpoint_rung(&vals, tau, m, m / 8);
            let fine = sqrt_richardson(i2, i1);
            let prev = sqrt_richardson(i3, i2);
            let delta = (fine - prev).abs();
            let converged = delta <= cfg.rel_tol * fine.abs().max(1e-12);
            return Ok(SpeedIntegral {
                value: fine,
                converged,
                singular_endpoint: endpoint_singular,
                resolution: m,
                last_delta: delta,
                prev_estimate: prev,
            });
        }
        // open fallback for grids the dyadic ladder cannot subsample:
        // interior cells between interval midpoints, plus end caps over the
        // leftover half-intervals (integrated sqrt model when singular,
        // rectangle otherwise)
        let mut acc = 0.0;
        for k in 1..m {
            acc += pts[k].value * 0.5 * (times[k + 1] - times[k - 1]);
        }
        let d0 = times[1] - times[0];
        acc += if pts[0].value.is_infinite() {
            // c/sqrt(t - t0) with c fitted at t1: integral over the cap
            // [t0, t0 + d0/2] is sqrt(2) v1 d0
            SQRT_2 * pts[1].value * d0
        } else {
            0.5 * d0 * pts[0].value
        };
        let dm = times[m] - times[m - 1];
        acc += if pts[m].value.is_infinite() {
            SQRT_2 * pts[m - 1].value * dm
        } else {
            0.5 * dm * pts[m].value
        };
        return Ok(SpeedIntegral {
            value: acc,
            converged: false,
            singular_endpoint: endpoint_singular,
            resolution: m,
            last_delta: f64::NAN,
            prev_estimate: f64::NAN,
        });
    }

    let vals: Vec<f64> = pts.iter().map(|p| p.value).collect();
    let full = trapezoid_sum(times, &vals);
    if uniform && m.is_multiple_of(2) && m >= 4 {
        let half_times: Vec<f64> = times.iter().copied().step_by(2).collect();
        let half_vals: Vec<f64> = vals.iter().copied().step_by(2).collect();
        let half = trapezoid_sum(&half_times, &half_vals);
        let delta = (full - half).abs();
        let converged = delta <= cfg.rel_tol * full.abs().max(1e-12);
        Ok(SpeedIntegral {
            value: full,
            converged,
            singular_endpoint: false,
            resolution: m,
            last_delta: delta,
            prev_estimate: half,
        })
    } else {
        Ok(SpeedIntegral {
            value: full,
            converged: false,
            singular_endpoint: false,
            resolution: m,
            last_delta: f64::NAN,
            prev_estimate: f64::NAN,
        })
    }
}

/// Integral of the instantaneous speed ds/dt over the trajectory, via the
/// general metric kernel with the alternative function `f`.
///
/// When the speed flags an integrable endpoint singularity the integration
/// switches to the open composite midpoint rule (which never evaluates the
/// endpoints) with a sqrt(h)-aware Richardson extrapolation across its
/// dyadic rungs; the flag is recorded on the result.
pub fn integrate_speed(
    traj: &Trajectory,
    f: &AlternativeFunction,
    cfg: &QuadratureConfig,
) -> Result<SpeedIntegral> {
    let mom = Moments::compute(traj);
    integrate_speed_from(&mom, f, cfg, traj.is_uniform())
}

fn integrate_speed_from(
    mom: &Moments,
    f: &AlternativeFunction,
    cfg: &QuadratureConfig,
    uniform: bool,
) -> Result<SpeedIntegral> {
    let mut pts = Vec::with_capacity(mom.times.len());
    for k in 0..mom.times.len() {
        let p = mom.purity[k];
        let fv = f.checked_eval(p)?;
        let eval = speed_kernel(mom.tr_dd[k], mom.tr_rd[k], p, fv, f.deriv1(p), mom.n)?;
        pts.push(PointEval {
            value: eval.value,
            zero_conv: eval.zero_convention,
        });
    }
    integrate_points(&mom.times, pts, cfg, uniform)
}

/// Frozen-constant-f integrand sqrt(tr_dd + tr_rd^2/(alpha2 - p)), shared
/// shape of the alpha-family denominators; `scale` divides inside the root.
fn frozen_integrand(mom: &Moments, alpha2: f64, scale: f64) -> Vec<PointEval> {
    (0..mom.times.len())
        .map(
            |k| match interaction_ratio(alpha2 - mom.purity[k], mom.tr_rd[k]) {
                Interaction::Value(r) => {
                    PointEval::finite(((mom.tr_dd[k] + r) / scale).max(0.0).sqrt())
                }
                Interaction::ZeroConvention => PointEval {
                    value: (mom.tr_dd[k] / scale).max(0.0).sqrt(),
                    zero_conv: true,
                },
                Interaction::Singular => PointEval {
                    value: f64::INFINITY,
                    zero_conv: false,
                },
            },
        )
        .collect()
}

struct TauEval {
    tau: f64,
    numerator: f64,
    mean_speed: f64,
    integral: SpeedIntegral,
    zero_flagged: bool,
}

fn tau_from(numerator: f64, integral: SpeedIntegral, tau_actual: f64) -> TauEval {
    let mean_speed = integral.value / tau_actual;
    if mean_speed.abs() < 1e-15 {
        // 0/0 convention: identical endpoints with a vanishing speed
        // integral evaluate to 0, flagged, so batch callers stay total
        return TauEval {
            tau: 0.0,
            numerator,
            mean_speed: 0.0,
            integral,
            zero_flagged: true,
        };
    }
    TauEval {
        tau: numerator / mean_speed,
        numerator,
        mean_speed,
        integral,
        zero_flagged: false,
    }
}

fn zero_integral(mom: &Moments) -> SpeedIntegral {
    SpeedIntegral {
        value: 0.0,
        converged: true,
        singular_endpoint: false,
        resolution: mom.times.len() - 1,
        last_delta: 0.0,
        prev_estimate: 0.0,
    }
}

fn tau_general_eval(
    traj: &Trajectory,
    mom: &Moments,
    f: &AlternativeFunction,
    cfg: &QuadratureConfig,
) -> Result<TauEval> {
    let num = distance(traj.initial(), traj.final_state(), f)?;
    let integral = if mom.is_zero_dynamics() {
        zero_integral(mom)
    } else {
        integrate_speed_from(mom, f, cfg, traj.is_uniform())?
    };
    Ok(tau_from(num, integral, mom.tau))
}

/// General QSL time: endpoint distance over mean evolution speed, both under
/// the same alternative function. Returns 0 (flagged internally) for a
/// constant trajectory.
pub fn tau_general(
    traj: &Trajectory,
    f: &AlternativeFunction,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let mom = Moments::compute(traj);
    Ok(tau_general_eval(traj, &mom, f, cfg)?.tau)
}

fn tau_f1_eval(mom: &Moments, uniform: bool, cfg: &QuadratureConfig) -> Result<TauEval> {
    // sqrt(Tr(rho0 - rho_tau)^2) = sqrt(P0 + Ptau - 2 Tr rho0 rho_tau)
    let p0 = mom.purity[0];
    let pt = *mom.purity.last().unwrap();
    let num = (p0 + pt - 2.0 * mom.tr_r0_rtau).max(0.0).sqrt();
    let integral = if mom.is_zero_dynamics() {
        zero_integral(mom)
    } else {
        let pts = mom
            .tr_dd
            .iter()
            .map(|&v| PointEval::finite(v.max(0.0).sqrt()))
            .collect();
        integrate_points(&mom.times, pts, cfg, uniform)?
    };
    Ok(tau_from(num, integral, mom.tau))
}

/// Hilbert-Schmidt bound: ||rho0 - rho_tau|| over the mean of sqrt(Tr rho_dot^2).
pub fn tau_f1(traj: &Trajectory, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(tau_f1_eval(&Moments::compute(traj), traj.is_uniform(), cfg)?.tau)
}

fn tau_f2_eval(mom: &Moments, uniform: bool, cfg: &QuadratureConfig) -> Result<TauEval> {
    let p0 = mom.purity[0];
    let pt = *mom.purity.last().unwrap();
    let num = arccos_clamped(mom.tr_r0_rtau / (p0 * pt).sqrt());
    let integral = if mom.is_zero_dynamics() {
        zero_integral(mom)
    } else {
        let pts = (0..mom.times.len())
            .map(|k| {
                let p = mom.purity[k];
                let radicand = (mom.tr_dd[k] * p - mom.tr_rd[k] * mom.tr_rd[k]).max(0.0);
                PointEval::finite(radicand.sqrt() / p)
            })
            .collect();
        integrate_points(&mom.times, pts, cfg, uniform)?
    };
    Ok(tau_from(num, integral, mom.tau))
}

/// Purity-local bound: overlap angle over the purity-normalized speed.
pub fn tau_f2(traj: &Trajectory, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(tau_f2_eval(&Moments::compute(traj), traj.is_uniform(), cfg)?.tau)
}

fn frozen_numerator_arg(mom: &Moments, alpha2: f64) -> Result<f64> {
    let gap = alpha2 - mom.n_inv();
    if gap <= EPS_SINGULAR {
        return Err(Error::DegenerateGeometry(format!(
            "frozen f = {alpha2} within {EPS_SINGULAR} of 1/N at N = {}",
            mom.n
        )));
    }
    let p0 = mom.purity[0];
    let pt = *mom.purity.last().unwrap();
    let cross = ((alpha2 - p0).max(0.0) * (alpha2 - pt).max(0.0)).sqrt();
    Ok((mom.tr_r0_rtau - mom.n_inv() + cross) / gap)
}

fn tau_f3_eval(mom: &Moments, uniform: bool, cfg: &QuadratureConfig) -> Result<TauEval> {
    if mom.is_zero_dynamics() {
        // a constant trajectory never leaves its initial latitude; the
        // frozen geometry may even be degenerate (rho0 = I/N), so short
        // circuit before evaluating it
        return Ok(tau_from(0.0, zero_integral(mom), mom.tau));
    }
    let f3 = mom.max_purity;
    let gap = f3 - mom.n_inv();
    let num = arccos_clamped(frozen_numerator_arg(mom, f3)?);
    let pts = frozen_integrand(mom, f3, gap);
    let integral = integrate_points(&mom.times, pts, cfg, uniform)?;
    Ok(tau_from(num, integral, mom.tau))
}

/// Frozen-max-purity bound: f is the largest Tr(rho_t^2) along the
/// trajectory; the integrand may carry an integrable endpoint singularity.
pub fn tau_f3(traj: &Trajectory, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(tau_f3_eval(&Moments::compute(traj), traj.is_uniform(), cfg)?.tau)
}

fn tau_const_alpha_eval(
    mom: &Moments,
    alpha2: f64,
    uniform: bool,
    cfg: &QuadratureConfig,
) -> Result<TauEval> {
    if alpha2 < mom.max_purity - 1e-12 {
        return Err(Error::AlphaBelowPurity {
            alpha2,
            max_purity: mom.max_purity,
        });
    }
    if mom.is_zero_dynamics() {
        return Ok(tau_from(0.0, zero_integral(mom), mom.tau));
    }
    let gap = alpha2 - mom.n_inv();
    let num = gap.max(0.0).sqrt() * arccos_clamped(frozen_numerator_arg(mom, alpha2)?);
    // the sqrt(gap) factor sits in the numerator here, not the integrand
    let pts = frozen_integrand(mom, alpha2, 1.0);
    let integral = integrate_points(&mom.times, pts, cfg, uniform)?;
    Ok(tau_from(num, integral, mom.tau))
}

/// Constant-f bound at f = alpha^2 >= max purity along the trajectory.
pub fn tau_const_alpha(traj: &Trajectory, alpha2: f64, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(tau_const_alpha_eval(&Moments::compute(traj), alpha2, traj.is_uniform(), cfg)?.tau)
}

fn tau_uni_p0_eval(mom: &Moments, uniform: bool, cfg: &QuadratureConfig) -> Result<TauEval> {
    let gap0 = mom.purity[0] - mom.n_inv();
    if gap0 < 1e-12 {
        return Err(Error::DegenerateGeometry(format!(
            "initial purity {} within 1e-12 of 1/N at N = {}",
            mom.purity[0], mom.n
        )));
    }
    let num = arccos_clamped((mom.tr_r0_rtau - mom.n_inv()) / gap0);
    let integral = if mom.is_zero_dynamics() {
        zero_integral(mom)
    } else {
        let pts = mom
            .tr_dd
            .iter()
            .map(|&v| PointEval::finite((v / gap0).max(0.0).sqrt()))
            .collect();
        integrate_points(&mom.times, pts, cfg, uniform)?
    };
    Ok(tau_from(num, integral, mom.tau))
}

/// Unitary-family bound frozen at the initial purity; saturable by unitary
/// dynamics, computable (but not asserted valid) on any trajectory.
pub fn tau_uni_p0(traj: &Trajectory, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(tau_uni_p0_eval(&Moments::compute(traj), traj.is_uniform(), cfg)?.tau)
}

/// Which component bound achieved the combined maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundLabel {
    F1,
    F2,
    F3,
}

impl std::fmt::Display for BoundLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::F1 => write!(f, "F1"),
            Self::F2 => write!(f, "F2"),
            Self::F3 => write!(f, "F3"),
        }
    }
}

/// Ties within 1e-12 resolve in favor of F3, then F2.
fn argmax_label(f1: f64, f2: f64, f3: f64) -> (f64, BoundLabel) {
    let max = f1.max(f2).max(f3);
    let label = if f3 >= max - 1e-12 {
        BoundLabel::F3
    } else if f2 >= max - 1e-12 {
        BoundLabel::F2
    } else {
        BoundLabel::F1
    };
    (max, label)
}

/// The combined bound max(tau_f1, tau_f2, tau_f3) with its argmax label.
#[derive(Debug, Clone, Copy)]
pub struct CombinedBound {
    pub value: f64,
    pub label: BoundLabel,
    pub tau_f1: f64,
    pub tau_f2: f64,
    pub tau_f3: f64,
}

pub fn tau_combined(traj: &Trajectory, cfg: &QuadratureConfig) -> Result<CombinedBound> {
    let mom = Moments::compute(traj);
    let uniform = traj.is_uniform();
    let f1 = tau_f1_eval(&mom, uniform, cfg)?.tau;
    let f2 = tau_f2_eval(&mom, uniform, cfg)?.tau;
    let f3 = tau_f3_eval(&mom, uniform, cfg)?.tau;
    let (value, label) = argmax_label(f1, f2, f3);
    Ok(CombinedBound {
        value,
        label,
        tau_f1: f1,
        tau_f2: f2,
        tau_f3: f3,
    })
}

/// Optional constant-alpha evaluation attached to a report.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstAlphaBound {
    pub alpha2: f64,
    pub value: f64,
}

/// Every bound value for one trajectory plus distance and mean-speed
/// diagnostics (taken from the frozen-max-purity evaluation).
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundReport {
    pub tau_actual: f64,
    pub distance: f64,
    pub mean_speed: f64,
    pub tau_f1: f64,
    pub tau_f2: f64,
    pub tau_f3: f64,
    pub tau_uni_p0: Option<f64>,
    pub tau_combined: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_const_alpha: Option<ConstAlphaBound>,
    pub argmax_label: BoundLabel,
    pub quadrature_resolution: usize,
    pub singular_endpoint_flag: bool,
}

impl BoundReport {
    /// Column names of the CSV row form; `with_alpha` appends the optional
    /// constant-alpha pair.
    pub fn csv_header(with_alpha: bool) -> String {
        let mut s = "tauActual,distance,meanSpeed,tauF1,tauF2,tauF3,tauUniP0,tauCombined,\
                     argmaxLabel,quadratureResolution,singularEndpointFlag"
            .to_string();
        if with_alpha {
            s.push_str(",alpha2,tauConstAlpha");
        }
        s
    }

    pub fn csv_row(&self) -> String {
        let num = |v: f64| format!("{v:.16e}");
        let mut s = format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            num(self.tau_actual),
            num(self.distance),
            num(self.mean_speed),
            num(self.tau_f1),
            num(self.tau_f2),
            num(self.tau_f3),
            self.tau_uni_p0.map(num).unwrap_or_default(),
            num(self.tau_combined),
            self.argmax_label,
            self.quadrature_resolution,
            self.singular_endpoint_flag,
        );
        if let Some(ca) = &self.tau_const_alpha {
            s.push_str(&format!(",{},{}", num(ca.alpha2), num(ca.value)));
        }
        s
    }
}

struct ReportParts {
    report: BoundReport,
    all_converged: bool,
    worst: SpeedIntegral,
}

fn report_parts(
    traj: &Trajectory,
    alpha2: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<ReportParts> {
    let mom = Moments::compute(traj);
    let uniform = traj.is_uniform();
    let f1 = tau_f1_eval(&mom, uniform, cfg)?;
    let f2 = tau_f2_eval(&mom, uniform, cfg)?;
    let f3 = tau_f3_eval(&mom, uniform, cfg)?;
    let uni = match tau_uni_p0_eval(&mom, uniform, cfg) {
        Ok(e) => Some(e),
        Err(Error::DegenerateGeometry(_)) => None,
        Err(e) => return Err(e),
    };
    let const_alpha = match alpha2 {
        Some(a) => Some(tau_const_alpha_eval(&mom, a, uniform, cfg)?),
        None => None,
    };

    let (combined, label) = argmax_label(f1.tau, f2.tau, f3.tau);
    let mut all_converged = true;
    let mut worst = f3.integral;
    let mut singular = false;
    {
        let mut consider = |e: &TauEval| {
            if !e.zero_flagged {
                singular |= e.integral.singular_endpoint;
                if !e.integral.converged {
                    all_converged = false;
                    worst = e.integral;
                }
            }
        };
        consider(&f1);
        consider(&f2);
        consider(&f3);
        if let Some(u) = &uni {
            consider(u);
        }
        if let Some(c) = &const_alpha {
            consider(c);
        }
    }

    let report = BoundReport {
        tau_actual: mom.tau,
        distance: f3.numerator,
        mean_speed: f3.mean_speed,
        tau_f1: f1.tau,
        tau_f2: f2.tau,
        tau_f3: f3.tau,
        tau_uni_p0: uni.map(|e| e.tau),
        tau_combined: combined,
        tau_const_alpha: alpha2
            .zip(const_alpha.as_ref())
            .map(|(a, e)| ConstAlphaBound {
                alpha2: a,
                value: e.tau,
            }),
        argmax_label: label,
        quadrature_resolution: traj.intervals(),
        singular_endpoint_flag: singular,
    };
    Ok(ReportParts {
        report,
        all_converged,
        worst,
    })
}

/// Evaluates every bound on a fixed trajectory. Convergence is assessed on
/// the trajectory's own grid; for externally supplied samples no refinement
/// is possible, so the result is best-effort at the given resolution.
pub fn evaluate_trajectory(
    traj: &Trajectory,
    alpha2: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<BoundReport> {
    Ok(report_parts(traj, alpha2, cfg)?.report)
}

/// Evaluates every bound for a generator, doubling the grid until every
/// speed integral converges (relative tolerance `cfg.rel_tol`) or the grid
/// cap is hit, in which case the last two estimates are reported.
pub fn evaluate_generator(
    gen: &dyn Generator,
    grid: &GridPolicy,
    alpha2: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<BoundReport> {
    let mut m = grid.initial_m;
    for _ in 0..cfg.max_levels {
        let traj = gen.sample(m);
        let parts = report_parts(&traj, alpha2, cfg)?;
        if parts.all_converged {
            return Ok(parts.report);
        }
        let next = m * cfg.refinement_factor;
        if next > grid.max_m {
            return Err(Error::NonConvergence {
                last: parts.worst.value,
                previous: parts.worst.prev_estimate,
            });
        }
        m = next;
    }
    let traj = gen.sample(m);
    let parts = report_parts(&traj, alpha2, cfg)?;
    if parts.all_converged {
        Ok(parts.report)
    } else {
        Err(Error::NonConvergence {
            last: parts.worst.value,
            previous: parts.worst.prev_estimate,
        })
    }
}

/// Evaluates many fixed trajectories in parallel; results keep input order
/// and are deterministic per trajectory.
pub fn evaluate_many(
    trajs: &[Trajectory],
    alpha2: Option<f64>,
    cfg: &QuadratureConfig,
) -> Vec<Result<BoundReport>> {
    trajs
        .par_iter()
        .map(|t| evaluate_trajectory(t, alpha2, cfg))
        .collect()
}
