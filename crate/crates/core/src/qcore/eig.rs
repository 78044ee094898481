//! Complex Hermitian eigendecomposition via cyclic Jacobi rotations.
//!
//! Each sweep annihilates every off-diagonal entry once with a unitary plane
//! rotation; the accumulated product of rotations is the eigenvector matrix,
//! so orthonormality holds to machine precision regardless of degeneracies.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::matrix::{ComplexMatrix, C_ZERO};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues (descending) and orthonormal eigenvector columns of a
/// Hermitian matrix: `m = vectors · diag(values) · vectors†`.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_real_diag(&self.values);
        let v = &self.vectors;
        v.matmul(&d).matmul(&v.adjoint())
    }

    /// Projector onto the span of eigenvectors selected by `pick(value)`.
    pub fn eigenspace_projector(&self, pick: impl Fn(f64) -> bool) -> ComplexMatrix {
        let n = self.values.len();
        let mut p = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            if pick(lambda) {
                for r in 0..n {
                    for c in 0..n {
                        let v = p.get(r, c) + self.vectors.get(r, k) * self.vectors.get(c, k).conj();
                        p.set(r, c, v);
                    }
                }
            }
        }
        p
    }

    pub fn eigenvector(&self, k: usize) -> ComplexMatrix {
        let n = self.values.len();
        let mut v = ComplexMatrix::zeros(n, 1);
        for r in 0..n {
            v.set(r, 0, self.vectors.get(r, k));
        }
        v
    }
}

/// Decomposes a Hermitian matrix. Errors if the input is not Hermitian
/// within `tol`; tolerance-level asymmetry is symmetrized away first.
pub fn hermitian_eig(m: &ComplexMatrix, tol: f64) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch("eigendecomposition needs a square matrix".into()));
    }
    let scale = m.max_abs_entry().max(1.0);
    let defect = m.hermitian_defect();
    if defect > tol * scale {
        return Err(Error::NotHermitian { defect, tol: tol * scale });
    }
    let n = m.rows();
    if n == 0 {
        return Ok(HermitianEig { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }

    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let fro = a.frobenius_norm();
    if fro == 0.0 {
        return Ok(HermitianEig { values: vec![0.0; n], vectors: v });
    }

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off2 = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off2 += a.get(p, q).norm_sqr();
            }
        }
        if off2.sqrt() <= 1e-14 * fro {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        // One last check: the final sweep may have finished the job.
        let mut off2 = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off2 += a.get(p, q).norm_sqr();
            }
        }
        if off2.sqrt() > 1e-12 * fro {
            return Err(Error::Numerical(format!(
                "Jacobi did not converge in {} sweeps (off-diagonal {:.3e})",
                MAX_SWEEPS,
                off2.sqrt()
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).re.partial_cmp(&a.get(i, i).re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, new_col, v.get(r, old_col));
        }
    }
    Ok(HermitianEig { values, vectors })
}

/// Annihilates a[p,q] with the unitary rotation R = [[c, s·u], [−s·ū, c]],
/// where u carGies the phase of a[p,q] and (c, s) solve the real Jacobi
/// condition for the dephased 2x2 block.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = a.rows();
    let h = a.get(p, q);
    let habs = h.norm();
    let alpha = a.get(p, p).re;
    let beta = a.get(q, q).re;
    if habs <= 1e-18 * (alpha.abs() + beta.abs()).max(f64::MIN_POSITIVE) {
        a.set(p, q, C_ZERO);
        a.set(q, p, C_ZERO);
        return;
    }
    let u = h / Complex64::new(habs, 0.0);
    let theta = (beta - alpha) / (2.0 * habs);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let su = Complex64::new(s, 0.0) * u;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        let new_kp = akp * c - akq * su.conj();
        let new_kq = akp * su + akq * c;
        a.set(k, p, new_kp);
        a.set(k, q, new_kq);
        a.set(p, k, new_kp.conj());
        a.set(q, k, new_kq.conj());
    }
    a.set(p, p, Complex64::new(alpha - t * habs, 0.0));
    a.set(q, q, Complex64::new(beta + t * habs, 0.0));
    a.set(p, q, C_ZERO);
    a.set(q, p, C_ZERO);

    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * c - vkq * su.conj());
        v.set(k, q, vkp * su + vkq * c);
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix, tol: f64) -> Result<f64> {
    let eig = hermitian_eig(m, tol)?;
    Ok(*eig.values.last().expect("non-empty spectrum"))
}
