//! The geometric core: alternative-function abstraction, the embedding of
//! density matrices onto the unit sphere of Hermitian matrices, the arc
//! distance between embeddings, and the instantaneous evolution speed.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{hs_inner_unchecked, ComplexMatrix, DensityMatrix, HermitianMatrix};

/// Below this value of f - 1/N the embedding geometry degenerates.
pub const EPS_DEGENERATE: f64 = 1e-14;
/// Below this value of f - Tr(rho^2) the interaction term is singular.
pub const EPS_SINGULAR: f64 = 1e-12;
/// Grace band for the f(x) >= x constraint before erroring.
const CONSTRAINT_TOL: f64 = 1e-12;
/// Tolerance on Tr(rho_dot) for the trace-preservation precondition.
const TRACELESS_TOL: f64 = 1e-10;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tag identifying which member of the alternative-function family is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    ConstantAlpha2,
    PurityPlusInvN,
    FrozenMaxPurity,
    Custom,
}

/// Scalar function f with f(x) >= x, together with its first two
/// derivatives. Each valid f induces a valid state distance and speed.
///
/// For the constant kinds the same frozen scalar applies to every state;
/// `PurityPlusInvN` is state-local (evaluated at each state's own purity).
#[derive(Clone)]
pub enum AlternativeFunction {
    ConstantAlpha2(f64),
    PurityPlusInvN(usize),
    FrozenMaxPurity(f64),
    Custom {
        eval: ScalarFn,
        deriv1: ScalarFn,
        deriv2: ScalarFn,
    },
}

impl fmt::Debug for AlternativeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConstantAlpha2(a) => write!(f, "ConstantAlpha2({a})"),
            Self::PurityPlusInvN(n) => write!(f, "PurityPlusInvN({n})"),
            Self::FrozenMaxPurity(v) => write!(f, "FrozenMaxPurity({v})"),
            Self::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl AlternativeFunction {
    pub fn custom(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::Custom {
            eval: Arc::new(eval),
            deriv1: Arc::new(deriv1),
            deriv2: Arc::new(deriv2),
        }
    }

    pub fn kind(&self) -> FunctionKind {
        match self {
            Self::ConstantAlpha2(_) => FunctionKind::ConstantAlpha2,
            Self::PurityPlusInvN(_) => FunctionKind::PurityPlusInvN,
            Self::FrozenMaxPurity(_) => FunctionKind::FrozenMaxPurity,
            Self::Custom { .. } => FunctionKind::Custom,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::ConstantAlpha2(a) => *a,
            Self::PurityPlusInvN(n) => x + 1.0 / *n as f64,
            Self::FrozenMaxPurity(v) => *v,
            Self::Custom { eval, .. } => eval(x),
        }
    }

    pub fn deriv1(&self, x: f64) -> f64 {
        match self {
            Self::ConstantAlpha2(_) | Self::FrozenMaxPurity(_) => 0.0,
            Self::PurityPlusInvN(_) => 1.0,
            Self::Custom { deriv1, .. } => deriv1(x),
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match self {
            Self::ConstantAlpha2(_) | Self::FrozenMaxPurity(_) | Self::PurityPlusInvN(_) => 0.0,
            Self::Custom { deriv2, .. } => deriv2(x),
        }
    }

    /// Evaluates f enforcing f(x) >= x (within a float grace band) and
    /// finiteness of f, f' and f'' at x.
    pub fn checked_eval(&self, x: f64) -> Result<f64> {
        let fx = self.eval(x);
        if !fx.is_finite() || !self.deriv1(x).is_finite() || !self.deriv2(x).is_finite() {
            return Err(Error::ConstraintViolated { x, fx });
        }
        if fx < x - CONSTRAINT_TOL {
            return Err(Error::ConstraintViolated { x, fx });
        }
        Ok(fx)
    }
}

/// Tr(rho^2), clamped into [1/N, 1] when within 1e-12 outside the range.
pub fn purity(rho: &DensityMatrix) -> f64 {
    let n_inv = 1.0 / rho.dim() as f64;
    let p = rho.purity_raw();
    if p < n_inv {
        debug_assert!(p > n_inv - 1e-12, "purity {p} below 1/N");
        n_inv
    } else if p > 1.0 {
        debug_assert!(p < 1.0 + 1e-12, "purity {p} above 1");
        1.0
    } else {
        p
    }
}

/// Image of a density matrix under the sphere embedding: a unit-norm
/// Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EmbeddedState {
    matrix: HermitianMatrix,
    source_purity: f64,
    f_value: f64,
}

impl EmbeddedState {
    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn source_purity(&self) -> f64 {
        self.source_purity
    }

    pub fn f_value(&self) -> f64 {
        self.f_value
    }

    /// Hilbert-Schmidt norm squared of the embedded matrix; 1 analytically.
    pub fn norm_sqr(&self) -> f64 {
        hs_inner_unchecked(&self.matrix, &self.matrix)
    }

    /// <I/N, F(rho)>, the unnormalized overlap with the north pole.
    pub fn latitude_inner(&self) -> f64 {
        let n = self.matrix.dim();
        (0..n).map(|i| self.matrix.get(i, i).re).sum::<f64>() / n as f64
    }

    /// Closed form sqrt(f - Tr rho^2) / (sqrt(N) sqrt(f - 1/N)) that
    /// `latitude_inner` must reproduce.
    pub fn latitude_inner_predicted(&self) -> f64 {
        let n = self.matrix.dim() as f64;
        ((self.f_value - self.source_purity).max(0.0) / (self.f_value - 1.0 / n)).sqrt() / n.sqrt()
    }

    /// Cosine of the intersection angle with I/N: 1 at the north pole
    /// (maximally mixed state), 0 on the equator (f = Tr rho^2).
    pub fn latitude_cosine(&self) -> f64 {
        let n = self.matrix.dim() as f64;
        self.latitude_inner() * n.sqrt()
    }
}

/// Maps a density matrix onto the unit sphere:
/// F(rho) = [rho + (sqrt(N) sqrt(f - Tr rho^2) - 1) I/N] / sqrt(f - 1/N)
/// with f evaluated at Tr rho^2.
pub fn embed(rho: &DensityMatrix, f: &AlternativeFunction) -> Result<EmbeddedState> {
    let n = rho.dim();
    let n_f = n as f64;
    let p = purity(rho);
    let fv = f.checked_eval(p)?;
    let gap = fv - 1.0 / n_f;
    if gap <= EPS_DEGENERATE {
        return Err(Error::DegenerateGeometry(format!(
            "f(Tr rho^2) = {fv} within {EPS_DEGENERATE} of 1/N at N = {n}"
        )));
    }
    let shift = (n_f.sqrt() * (fv - p).max(0.0).sqrt() - 1.0) / n_f;
    let inv_norm = 1.0 / gap.sqrt();
    let m = ComplexMatrix::from_fn(n, |i, j| {
        let mut z = rho.get(i, j);
        if i == j {
            z += shift;
        }
        z * inv_norm
    });
    Ok(EmbeddedState {
        matrix: HermitianMatrix::new_unchecked(m),
        source_purity: p,
        f_value: fv,
    })
}

/// Distance D(rho, sigma) = arccos <F(rho), F(sigma)> in radians, in [0, pi].
///
/// Evaluated through the chord identity arccos(1 - d^2/2) = 2 asin(d/2) with
/// d = ||F(rho) - F(sigma)||: exactly symmetric, exactly zero for identical
/// inputs, and well conditioned at small separations. The chord length
/// subsumes the +/-1 clamping of the inner product.
pub fn distance(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    f: &AlternativeFunction,
) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            op: "distance",
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let fa = embed(rho, f)?;
    let fb = embed(sigma, f)?;
    Ok(distance_of_embeddings(&fa, &fb))
}

pub fn distance_of_embeddings(fa: &EmbeddedState, fb: &EmbeddedState) -> f64 {
    let n = fa.matrix.dim();
    let mut chord_sqr = 0.0;
    let mut anti_chord_sqr = 0.0;
    for i in 0..n {
        for j in 0..n {
            chord_sqr += (fa.matrix.get(i, j) - fb.matrix.get(i, j)).norm_sqr();
            anti_chord_sqr += (fa.matrix.get(i, j) + fb.matrix.get(i, j)).norm_sqr();
        }
    }
    // chord^2 = 2 - 2<F,G>: acute angles come from the difference chord,
    // obtuse ones from the chord to the antipode, so neither asin argument
    // ever sits near 1
    if chord_sqr <= 2.0 {
        2.0 * (chord_sqr.sqrt() / 2.0).min(1.0).asin()
    } else {
        std::f64::consts::PI - 2.0 * (anti_chord_sqr.sqrt() / 2.0).min(1.0).asin()
    }
}

/// Raw Hilbert-Schmidt overlap of two embeddings (unclamped).
pub fn embedding_inner(fa: &EmbeddedState, fb: &EmbeddedState) -> f64 {
    hs_inner_unchecked(&fa.matrix, &fb.matrix)
}

/// Pointwise speed evaluation produced by the metric kernel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SpeedEval {
    /// ds/dt; `f64::INFINITY` flags the integrable endpoint singularity.
    pub value: f64,
    /// True when the 0/0 convention for purity-preserving dynamics at the
    /// frozen-purity point suppressed the interaction term.
    pub zero_convention: bool,
}

/// Status of the (Tr rho rho_dot)^2 / (f - Tr rho^2) ratio.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Interaction {
    Value(f64),
    /// 0/0 of purity-preserving dynamics at the frozen-purity point.
    ZeroConvention,
    /// Integrable endpoint singularity; resolved by the quadrature layer.
    Singular,
}

/// The singular-term convention shared by the general speed kernel and the
/// frozen-f closed-form integrands.
pub(crate) fn interaction_ratio(f_minus_p: f64, tr_rd: f64) -> Interaction {
    if f_minus_p < EPS_SINGULAR {
        if tr_rd.abs() < EPS_SINGULAR.sqrt() {
            Interaction::ZeroConvention
        } else {
            Interaction::Singular
        }
    } else {
        Interaction::Value(tr_rd * tr_rd / f_minus_p)
    }
}

/// Speed kernel over scalar moments: computes
/// sqrt{ [tr_dd + ((f'-1)^2/(f-p) - f'^2/(f-1/N)) tr_rd^2] / (f-1/N) },
/// the second-order expansion of arccos<F(rho), F(rho + drho)> in drho.
/// For constant f the interaction coefficient reduces to 1/(f-p); for
/// f(x) = x + 1/N it reduces to -1/p.
///
/// Singular-term convention: when f - p < EPS_SINGULAR the interaction term
/// contributes 0 if |tr_rd| < sqrt(EPS_SINGULAR) (purity-preserving 0/0
/// case) and the whole speed is flagged +infinity otherwise (integrable
/// endpoint singularity, resolved by the quadrature layer).
pub(crate) fn speed_kernel(
    tr_dd: f64,
    tr_rd: f64,
    p: f64,
    fv: f64,
    f_prime: f64,
    n: usize,
) -> Result<SpeedEval> {
    let gap = fv - 1.0 / n as f64;
    if gap <= EPS_DEGENERATE {
        return Err(Error::DegenerateGeometry(format!(
            "f = {fv} within {EPS_DEGENERATE} of 1/N at N = {n}"
        )));
    }
    let c1 = -(f_prime * f_prime) / gap;
    let c2 = (f_prime - 1.0) * (f_prime - 1.0);
    let mut zero_convention = false;
    let interaction = if c2 == 0.0 {
        0.0
    } else {
        match interaction_ratio(fv - p, tr_rd) {
            Interaction::Value(r) => c2 * r,
            Interaction::ZeroConvention => {
                zero_convention = true;
                0.0
            }
            Interaction::Singular => {
                return Ok(SpeedEval {
                    value: f64::INFINITY,
                    zero_convention: false,
                });
            }
        }
    };
    let bracket = tr_dd + c1 * tr_rd * tr_rd + interaction;
    if bracket < -1e-10 {
        return Err(Error::NegativeRadicand { value: bracket });
    }
    Ok(SpeedEval {
        value: (bracket.max(0.0) / gap).sqrt(),
        zero_convention,
    })
}

/// Instantaneous evolution speed ds/dt at a state with derivative rho_dot.
///
/// Returns `f64::INFINITY` when the integrable endpoint singularity of the
/// frozen-purity case is hit (see [`speed_kernel`]).
pub fn speed(
    rho: &DensityMatrix,
    rho_dot: &HermitianMatrix,
    f: &AlternativeFunction,
) -> Result<f64> {
    if rho.dim() != rho_dot.dim() {
        return Err(Error::DimensionMismatch {
            op: "speed",
            left: rho.dim(),
            right: rho_dot.dim(),
        });
    }
    let tr = rho_dot.trace_re();
    if tr.abs() > TRACELESS_TOL {
        return Err(Error::NotTraceless { trace: tr });
    }
    let p = purity(rho);
    let fv = f.checked_eval(p)?;
    let tr_dd = hs_inner_unchecked(rho_dot, rho_dot);
    let tr_rd = hs_inner_unchecked(rho.hermitian(), rho_dot);
    Ok(speed_kernel(tr_dd, tr_rd, p, fv, f.deriv1(p), rho.dim())?.value)
}
