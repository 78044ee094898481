//! Reference states and measurement assemblies used across tests, benches,
//! and the bundled CLI fixtures.

use num_complex::Complex64;

use crate::qcore::matrix::{ComplexMatrix, C_ONE};
use crate::qcore::state::{BinaryPovm, MeasurementAssembly, QuantumState};

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::new(
        2,
        2,
        vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ],
    )
    .unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&[1.0, -1.0])
}

/// (|01> − |10>)/√2.
pub fn singlet() -> QuantumState {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let mut ket = ComplexMatrix::zeros(4, 1);
    ket.set(1, 0, Complex64::new(inv, 0.0));
    ket.set(2, 0, Complex64::new(-inv, 0.0));
    QuantumState::pure(vec![2, 2], &ket).unwrap()
}

/// p·singlet + (1−p)·I/4.
pub fn werner(p: f64) -> QuantumState {
    let s = singlet();
    let mixed = ComplexMatrix::identity(4).scale_re((1.0 - p) / 4.0);
    let rho = s.rho().scale_re(p).add(&mixed);
    QuantumState::new(vec![2, 2], rho).unwrap()
}

/// (|0...0> + |1...1>)/√2 on n qubits.
pub fn ghz(n: usize) -> QuantumState {
    let dim = 1usize << n;
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let mut ket = ComplexMatrix::zeros(dim, 1);
    ket.set(0, 0, Complex64::new(inv, 0.0));
    ket.set(dim - 1, 0, Complex64::new(inv, 0.0));
    QuantumState::pure(vec![2; n], &ket).unwrap()
}

/// Both parties measure Z for both settings.
pub fn zz_assembly() -> MeasurementAssembly {
    let z = BinaryPovm::from_observable(&pauli_z()).unwrap();
    MeasurementAssembly::new(vec![[z.clone(), z.clone()], [z.clone(), z]]).unwrap()
}

/// The canonical CHSH-optimal settings for the singlet: party 1 measures Z
/// and X, party 2 measures (Z+X)/√2 and (Z−X)/√2.
pub fn chsh_assembly() -> MeasurementAssembly {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let zpx = pauli_z().add(&pauli_x()).scale_re(inv);
    let zmx = pauli_z().sub(&pauli_x()).scale_re(inv);
    let party1 = [
        BinaryPovm::from_observable(&pauli_z()).unwrap(),
        BinaryPovm::from_observable(&pauli_x()).unwrap(),
    ];
    let party2 = [
        BinaryPovm::from_observable(&zpx).unwrap(),
        BinaryPovm::from_observable(&zmx).unwrap(),
    ];
    MeasurementAssembly::new(vec![party1, party2]).unwrap()
}

/// X as setting 1 and Y as setting 2 on every one of n parties.
pub fn xy_assembly(n: usize) -> MeasurementAssembly {
    let x = BinaryPovm::from_observable(&pauli_x()).unwrap();
    let y = BinaryPovm::from_observable(&pauli_y()).unwrap();
    MeasurementAssembly::new(vec![[x, y]; n]).unwrap()
}

/// The standard 3⊗3 PPT entangled state family (parameter a ∈ (0, 1)):
/// entangled for every a in the open interval, yet with positive partial
/// transpose, hence undistillable.
pub fn ppt_entangled_3x3(a: f64) -> QuantumState {
    assert!(a > 0.0 && a < 1.0);
    let norm = 1.0 / (8.0 * a + 1.0);
    let b = (1.0 + a) / 2.0;
    let c = (1.0 - a * a).sqrt() / 2.0;
    let mut m = ComplexMatrix::zeros(9, 9);
    let re = |v: f64| Complex64::new(v, 0.0);
    // basis order |00>,|01>,|02>,|10>,|11>,|12>,|20>,|21>,|22>
    for (i, j, v) in [
        (0, 0, a),
        (0, 4, a),
        (0, 8, a),
        (1, 1, a),
        (2, 2, a),
        (3, 3, a),
        (4, 0, a),
        (4, 4, a),
        (4, 8, a),
        (5, 5, a),
        (6, 6, b),
        (6, 8, c),
        (7, 7, a),
        (8, 0, a),
        (8, 4, a),
        (8, 6, c),
        (8, 8, b),
    ] {
        m.set(i, j, re(v * norm));
    }
    QuantumState::new(vec![3, 3], m).unwrap()
}

/// Partial transpose on the second party of a bipartite matrix.
pub fn partial_transpose_second(m: &ComplexMatrix, dims: (usize, usize)) -> ComplexMatrix {
    let (da, db) = dims;
    assert_eq!(m.rows(), da * db);
    ComplexMatrix::from_fn(da * db, da * db, |r, c| {
        let (i, j) = (r / db, r % db);
        let (k, l) = (c / db, c % db);
        m.get(i * db + l, k * db + j)
    })
}

/// A projector onto the +1 eigenspace of n̂·σ with the complement, i.e. the
/// binary POVM of measuring spin along the Bloch vector (sin t, 0, cos t).
pub fn bloch_povm(theta: f64) -> BinaryPovm {
    let obs = pauli_z().scale_re(theta.cos()).add(&pauli_x().scale_re(theta.sin()));
    BinaryPovm::from_observable(&obs).unwrap()
}

#[allow(unused)]
fn one() -> Complex64 {
    C_ONE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singlet_is_pure_and_valid() {
        let s = singlet();
        assert!((s.purity() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ppt_fixture_is_ppt_and_normalized() {
        let s = ppt_entangled_3x3(0.5);
        assert!((s.rho().trace().re - 1.0).abs() < 1e-14);
        let pt = partial_transpose_second(s.rho(), (3, 3));
        let min = crate::qcore::eig::min_eigenvalue(&pt, 1e-9).unwrap();
        assert!(min >= -1e-12, "partial transpose not PSD: {min}");
    }
}
