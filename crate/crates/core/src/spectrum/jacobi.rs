//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation annihilates one off-diagonal pair `(p, q)`. Writing
//! `a_pq = r·e^{iψ}`, the unitary
//!
//! ```text
//!   U = [[ c,           s·e^{iψ} ],
//!        [ −s·e^{−iψ},  c        ]]
//! ```
//!
//! acting on rows/columns p, q reduces the pair to the real symmetric case,
//! where `(c, s)` is the classic symmetric Schur rotation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Input Hermiticity tolerance, relative to the Frobenius norm.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
/// Sweeps stop once the off-diagonal norm is below this fraction of ‖H‖.
pub const CONVERGENCE: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn vector(&self, j: usize) -> Vec<Complex64> {
        self.vectors.column(j)
    }
}

fn off_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn check_hermitian(h: &ComplexMatrix) -> Result<()> {
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

fn diagonalize(h: &ComplexMatrix, want_vectors: bool) -> (ComplexMatrix, Option<ComplexMatrix>) {
    let n = h.dim();
    // symmetrize so round-off in the input cannot accumulate
    let mut a = ComplexMatrix::zeros(n);
    for i in 0..n {
        a[(i, i)] = Complex64::new(h[(i, i)].re, 0.0);
        for j in i + 1..n {
            let v = 0.5 * (h[(i, j)] + h[(j, i)].conj());
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
    let mut v = want_vectors.then(|| ComplexMatrix::identity(n));
    let threshold = CONVERGENCE * h.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let e = apq / r;
                let u_pp = Complex64::new(c, 0.0);
                let u_pq = e * s;
                let u_qp = -e.conj() * s;
                let u_qq = Complex64::new(c, 0.0);

                // A <- A U
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * u_pp + akq * u_qp;
                    a[(k, q)] = akp * u_pq + akq * u_qq;
                }
                // A <- U^H A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * u_pp + vkq * u_qp;
                        v[(k, q)] = vkp * u_pq + vkq * u_qq;
                    }
                }
            }
        }
    }
    (a, v)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<Eigen> {
    check_hermitian(h)?;
    let n = h.dim();
    let (a, v) = diagonalize(h, true);
    let v = v.expect("vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only (ascending).
pub fn eigvals_hermitian(h: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    let (a, _) = diagonalize(h, false);
    let mut values: Vec<f64> = (0..h.dim()).map(|i| a[(i, i)].re).collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}
