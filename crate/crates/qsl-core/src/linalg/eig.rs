//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first phase-rotates the pivot pair so the off-diagonal
//! entry becomes real, then applies the classical real Jacobi angle that
//! annihilates it. Robust and simply quadratic-convergent at the small
//! dimensions this crate targets.

use num_complex::Complex64;

use super::{ComplexMatrix, HermitianMatrix};
use crate::error::{Error, Result};

/// Maximum number of full sweeps before giving up.
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition A = V diag(values) V^dag with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub vectors: ComplexMatrix,
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            acc += 2.0 * a.get(p, q).norm_sqr();
        }
    }
    acc.sqrt()
}

pub(crate) fn jacobi_hermitian(h: &HermitianMatrix) -> Result<Eigen> {
    let n = h.dim();
    let mut a = h.matrix().clone();
    let mut v = ComplexMatrix::identity(n);

    let scale = a.frobenius_norm();
    let tol = scale * 1e-15 + f64::MIN_POSITIVE;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r <= tol / (n * n) as f64 {
                    continue;
                }
                // phase that makes the pivot real: diag(1, e^{-i phi})
                let phase = apq / r; // e^{i phi}
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // J = I except J_pp = c, J_pq = s,
                //              J_qp = -s e^{-i phi}, J_qq = c e^{-i phi}
                let jqp = -s * phase.conj();
                let jqq = c * phase.conj();

                // columns: M = A J
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * c + akq * jqp);
                    a.set(k, q, akp * s + akq * jqq);
                }
                // rows: A' = J^dag M
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, apk * c + aqk * jqp.conj());
                    a.set(q, k, apk * s + aqk * jqq.conj());
                }
                // clean the pivot pair and keep the diagonal exactly real
                a.set(p, q, Complex64::new(0.0, 0.0));
                a.set(q, p, Complex64::new(0.0, 0.0));
                a.set(p, p, Complex64::new(a.get(p, p).re, 0.0));
                a.set(q, q, Complex64::new(a.get(q, q).re, 0.0));

                // accumulate V <- V J
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * c + vkq * jqp);
                    v.set(k, q, vkp * s + vkq * jqq);
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > tol {
        return Err(Error::EigNonConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).re.partial_cmp(&a.get(j, j).re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v.get(i, order[j]));
    Ok(Eigen { values, vectors })
}
