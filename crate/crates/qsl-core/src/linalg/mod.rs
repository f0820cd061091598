//! Dense complex linear algebra for small matrices (N <= ~16).
//!
//! Provides the Hermitian / density-matrix types with their validity
//! invariants, Hilbert-Schmidt inner products, Kronecker products, partial
//! traces, a cyclic Jacobi eigensolver, matrix exponentials for time
//! evolution, and seeded random-object generation.

mod eig;
pub mod text;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub use eig::Eigen;

/// Absolute per-entry tolerance for the Hermiticity check.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Absolute tolerance for the unit-trace check.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues above this (negative) floor count as positive semidefinite.
pub const PSD_TOL: f64 = -1e-10;

/// Dense square complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from row-major rows; every row must have length `dim`.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    op: "from_rows",
                    left: dim,
                    right: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(rhs.data.iter()) {
            *a += *b;
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(rhs.data.iter()) {
            *a -= *b;
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= c;
        }
        out
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + aik * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// U A U^dag.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest |A_ij - conj(A_ji)| over all entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j && self.get(i, j) != Complex64::new(0.0, 0.0) {
                    return false;
                }
            }
        }
        true
    }
}

/// Hermitian matrix: A = A^dag within [`HERMITICITY_TOL`] per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFiniteEntries);
        }
        let dev = m.hermiticity_deviation();
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian { max_dev: dev });
        }
        Ok(Self(m))
    }

    /// Caller guarantees Hermiticity (checked in debug builds only).
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        debug_assert!(m.hermiticity_deviation() <= 1e-9, "not Hermitian");
        Self(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = ComplexMatrix::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        Self(m)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0.get(i, j)
    }

    pub fn trace_re(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i).re).sum()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self(self.0.add(&rhs.0))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self(self.0.sub(&rhs.0))
    }

    pub fn scale_re(&self, c: f64) -> Self {
        Self(self.0.scale_re(c))
    }

    /// -i [A, B]; Hermitian whenever A and B are.
    pub fn minus_i_commutator(a: &Self, b: &Self) -> Self {
        let comm = a.0.matmul(&b.0).sub(&b.0.matmul(&a.0));
        Self::new_unchecked(comm.scale(Complex64::new(0.0, -1.0)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// U A U^dag stays Hermitian for unitary U.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self::new_unchecked(self.0.conjugate_by(u))
    }
}

/// Density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    /// Full validation: Hermiticity, unit trace, PSD (via eigensolve).
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let tr = h.trace_re();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotUnitTrace { trace: tr });
        }
        let eig = herm_eig(&h)?;
        let min = eig.values[0];
        if min < PSD_TOL {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(Self(h))
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    /// For states valid by construction (convex mixtures, unitary conjugates,
    /// partial traces of valid states). Trace and Hermiticity are still
    /// asserted in debug builds.
    pub(crate) fn new_unchecked(h: HermitianMatrix) -> Self {
        debug_assert!((h.trace_re() - 1.0).abs() <= 1e-9, "trace drift");
        Self(h)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianMatrix::identity(dim).scale_re(1.0 / dim as f64))
    }

    /// |psi><psi| for a normalized ket.
    pub fn pure(ket: &[Complex64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotUnitTrace { trace: norm });
        }
        let n = ket.len();
        let m = ComplexMatrix::from_fn(n, |i, j| ket[i] * ket[j].conj());
        Ok(Self(HermitianMatrix::new_unchecked(m)))
    }

    /// Computational-basis pure state |k><k|.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        m.set(k, k, Complex64::new(1.0, 0.0));
        Self(HermitianMatrix::new_unchecked(m))
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.0.matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0.get(i, j)
    }

    /// Tr(rho^2) without range clamping; see `metric::purity` for the
    /// clamped variant.
    pub fn purity_raw(&self) -> f64 {
        hs_inner_unchecked(&self.0, &self.0)
    }

    /// rho_S (x) rho_E, valid by construction.
    pub fn tensor(a: &Self, b: &Self) -> Self {
        Self(HermitianMatrix::new_unchecked(kron(a.matrix(), b.matrix())))
    }

    /// U rho U^dag, valid for unitary U.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self::new_unchecked(self.0.conjugate_by(u))
    }

    /// Validates the PSD invariant explicitly (used at trust boundaries).
    pub fn validate_full(&self) -> Result<()> {
        let eig = herm_eig(&self.0)?;
        if eig.values[0] < PSD_TOL {
            return Err(Error::NotPositive {
                min_eigenvalue: eig.values[0],
            });
        }
        Ok(())
    }
}

/// Seeded, stream-addressable randomness: one independent substream per
/// Monte Carlo trial. The same (seed, stream) pair reproduces identical
/// output bit-for-bit on one build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Hilbert-Schmidt inner product Tr(AB) of two Hermitian matrices.
///
/// Accumulated over the upper triangle as
/// sum_i A_ii B_ii + sum_{i<j} 2 Re(A_ij conj(B_ij)),
/// which is exactly real and exactly symmetric in (A, B); the imaginary
/// residue never forms.
pub fn hs_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            op: "hs_inner",
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(hs_inner_unchecked(a, b))
}

pub(crate) fn hs_inner_unchecked(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        acc += a.get(i, i).re * b.get(i, i).re;
        for j in (i + 1)..n {
            let x = a.get(i, j);
            let y = b.get(i, j);
            acc += 2.0 * (x.re * y.re + x.im * y.im);
        }
    }
    acc
}

/// Kronecker product with the system (left) factor on the slow index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    ComplexMatrix::from_fn(da * db, |i, j| {
        a.get(i / db, j / db) * b.get(i % db, j % db)
    })
}

/// Which tensor factor `partial_trace` keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    System,
    Environment,
}

/// Reduces a composite-system Hermitian matrix to one factor.
pub fn partial_trace_herm(
    m: &HermitianMatrix,
    dim_s: usize,
    dim_e: usize,
    keep: Subsystem,
) -> Result<HermitianMatrix> {
    if m.dim() != dim_s * dim_e {
        return Err(Error::DimensionMismatch {
            op: "partial_trace",
            left: m.dim(),
            right: dim_s * dim_e,
        });
    }
    let out = match keep {
        Subsystem::System => ComplexMatrix::from_fn(dim_s, |i, j| {
            (0..dim_e)
                .map(|e| m.get(i * dim_e + e, j * dim_e + e))
                .sum()
        }),
        Subsystem::Environment => ComplexMatrix::from_fn(dim_e, |a, b| {
            (0..dim_s)
                .map(|s| m.get(s * dim_e + a, s * dim_e + b))
                .sum()
        }),
    };
    Ok(HermitianMatrix::new_unchecked(out))
}

/// Reduced state on the kept factor; trace preserved to [`TRACE_TOL`].
pub fn partial_trace(
    rho: &DensityMatrix,
    dim_s: usize,
    dim_e: usize,
    keep: Subsystem,
) -> Result<DensityMatrix> {
    let h = partial_trace_herm(rho.hermitian(), dim_s, dim_e, keep)?;
    Ok(DensityMatrix::new_unchecked(h))
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
/// Eigenvalues ascend; eigenvectors are the columns of a unitary matrix.
pub fn herm_eig(a: &HermitianMatrix) -> Result<Eigen> {
    eig::jacobi_hermitian(a)
}

/// exp(-i H t), unitary; elementwise phases when H is exactly diagonal.
pub fn unitary_at(h: &HermitianMatrix, t: f64) -> Result<ComplexMatrix> {
    let n = h.dim();
    if h.matrix().is_diagonal() {
        let mut u = ComplexMatrix::zeros(n);
        for i in 0..n {
            u.set(i, i, Complex64::cis(-h.get(i, i).re * t));
        }
        return Ok(u);
    }
    let eig = herm_eig(h)?;
    let v = &eig.vectors;
    // V diag(exp(-i lambda t)) V^dag
    let mut phased = ComplexMatrix::zeros(n);
    for j in 0..n {
        let ph = Complex64::cis(-eig.values[j] * t);
        for i in 0..n {
            phased.set(i, j, v.get(i, j) * ph);
        }
    }
    Ok(phased.matmul(&v.adjoint()))
}

/// Ginibre construction G G^dag / Tr(G G^dag) with i.i.d. standard complex
/// normal entries (Hilbert-Schmidt measure).
pub fn random_density(n: usize, stream: &RngStream) -> DensityMatrix {
    assert!(n >= 2, "random_density requires N >= 2");
    let mut rng = stream.rng();
    let g = ComplexMatrix::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let w = g.matmul(&g.adjoint());
    let tr = w.trace().re;
    DensityMatrix::new_unchecked(HermitianMatrix::new_unchecked(w.scale_re(1.0 / tr)))
}

/// Haar-random pure state |psi><psi| from a normalized complex Gaussian ket.
pub fn random_pure(n: usize, stream: &RngStream) -> DensityMatrix {
    assert!(n >= 2, "random_pure requires N >= 2");
    let mut rng = stream.rng();
    let mut ket: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in ket.iter_mut() {
        *z /= norm;
    }
    let m = ComplexMatrix::from_fn(n, |i, j| ket[i] * ket[j].conj());
    DensityMatrix::new_unchecked(HermitianMatrix::new_unchecked(m))
}

/// Diagonal Hamiltonian with entries i.i.d. uniform on [0, scale].
pub fn random_diag_hamiltonian(n: usize, stream: &RngStream, scale: f64) -> HermitianMatrix {
    assert!(scale > 0.0, "scale must be positive");
    let mut rng = stream.rng();
    let entries: Vec<f64> = (0..n).map(|_| scale * rng.random::<f64>()).collect();
    HermitianMatrix::diagonal(&entries)
}

/// Random Hermitian matrix (G + G^dag)/2 with Ginibre G; test plumbing.
pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let g = ComplexMatrix::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    HermitianMatrix::new_unchecked(g.add(&g.adjoint()).scale_re(0.5))
}

/// Haar-ish random unitary as the eigenvector matrix of a random Hermitian.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> Result<ComplexMatrix> {
    Ok(herm_eig(&random_hermitian(n, rng))?.vectors)
}
