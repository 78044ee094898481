//! Seeded random matrix generators used by the optimizer and the test
//! suites. Everything is a pure function of the supplied RNG, so runs are
//! reproducible from a single u64 seed.

use num_complex::Complex64;
use rand::Rng;

use crate::qcore::matrix::{outer, ComplexMatrix};

/// Standard complex Gaussian via Box-Muller.
pub fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(r * phi.cos(), r * phi.sin()) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

/// Haar-like random unitary: modified Gram-Schmidt on a Gaussian matrix,
/// run twice for orthogonality at machine precision.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, n);
    let q = orthonormalize_columns(&g);
    orthonormalize_columns(&q)
}

fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    let cols = m.cols();
    let mut q = m.clone();
    for c in 0..cols {
        for prev in 0..c {
            let mut proj = Complex64::new(0.0, 0.0);
            for r in 0..n {
                proj += q.get(r, prev).conj() * q.get(r, c);
            }
            for r in 0..n {
                let v = q.get(r, c) - proj * q.get(r, prev);
                q.set(r, c, v);
            }
        }
        let norm: f64 = (0..n).map(|r| q.get(r, c).norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for r in 0..n {
                let v = q.get(r, c) / norm;
                q.set(r, c, v);
            }
        }
    }
    q
}

/// Random rank-`rank` orthogonal projector on dimension `n`.
pub fn random_projector(rng: &mut impl Rng, n: usize, rank: usize) -> ComplexMatrix {
    assert!(rank <= n);
    let u = random_unitary(rng, n);
    let mut diag = vec![0.0; n];
    for d in diag.iter_mut().take(rank) {
        *d = 1.0;
    }
    let d = ComplexMatrix::from_real_diag(&diag);
    u.matmul(&d).matmul(&u.adjoint())
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, n);
    g.add(&g.adjoint()).scale_re(0.5)
}

/// Random density matrix (Wishart: GG† normalized to unit trace).
pub fn random_density(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, n);
    let w = g.matmul(&g.adjoint());
    let t = w.trace().re;
    w.scale_re(1.0 / t)
}

/// Random normalized pure-state projector.
pub fn random_pure_projector(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let mut v = gaussian_matrix(rng, n, 1);
    let norm: f64 = (0..n).map(|r| v.get(r, 0).norm_sqr()).sum::<f64>().sqrt();
    for r in 0..n {
        let x = v.get(r, 0) / norm;
        v.set(r, 0, x);
    }
    outer(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1usize, 2, 5, 9] {
            let u = random_unitary(&mut rng, n);
            let utu = u.adjoint().matmul(&u);
            assert!(utu.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-13);
        }
    }

    #[test]
    fn projector_is_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_projector(&mut rng, 6, 2);
        assert!(p.matmul(&p).max_abs_diff(&p) < 1e-13);
        assert!(p.hermitian_defect() < 1e-14);
        assert!((p.trace().re - 2.0).abs() < 1e-13);
    }

    #[test]
    fn density_is_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(&mut rng, 4);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert!(rho.hermitian_defect() < 1e-14);
    }
}
