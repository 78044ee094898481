//! States, binary measurements, and stochastic local maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::eig::min_eigenvalue;
use crate::qcore::matrix::{kron_all, ComplexMatrix};

/// Numerical tolerance for algebraic validation. Default 1e-9.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub tau: f64,
}

impl Tolerance {
    pub fn new(tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::InvalidTolerance(tau));
        }
        Ok(Self { tau })
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { tau: 1e-9 }
    }
}

/// Default cap on the total Hilbert-space dimension produced by
/// `tensor_power`. Overridable per call (CLI: BELLKIT_DIM_CAP).
pub const DEFAULT_DIM_CAP: usize = 4096;

/// N-partite density matrix with per-party local dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    dims: Vec<usize>,
    rho: ComplexMatrix,
}

impl QuantumState {
    pub fn new(dims: Vec<usize>, rho: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(dims, rho, Tolerance::default())
    }

    pub fn with_tolerance(dims: Vec<usize>, rho: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidArgument("local dimensions must be positive".into()));
        }
        let total: usize = dims.iter().product();
        if !rho.is_square() || rho.rows() != total {
            return Err(Error::DimensionMismatch { expected: total, got: rho.rows() });
        }
        let tau = tol.tau;
        let defect = rho.hermitian_defect();
        if defect > tau {
            return Err(Error::NotHermitian { defect, tol: tau });
        }
        let trace = rho.trace().re;
        if (trace - 1.0).abs() > tau {
            return Err(Error::TraceNotOne { trace });
        }
        let min_eig = min_eigenvalue(&rho, tau)?;
        if min_eig < -tau {
            return Err(Error::NotPsd { min_eig });
        }
        Ok(Self { dims, rho })
    }

    /// Skips the PSD/trace validation; for outputs that are valid by
    /// construction on hot paths. Debug builds still assert.
    pub(crate) fn new_unchecked(dims: Vec<usize>, rho: ComplexMatrix) -> Self {
        debug_assert!(rho.is_square());
        debug_assert_eq!(rho.rows(), dims.iter().product::<usize>());
        Self { dims, rho }
    }

    pub fn pure(dims: Vec<usize>, ket: &ComplexMatrix) -> Result<Self> {
        let rho = crate::qcore::matrix::outer(ket);
        Self::new(dims, rho)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let total: usize = dims.iter().product();
        let rho = ComplexMatrix::identity(total).scale_re(1.0 / total as f64);
        Self { dims, rho }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.rho.rows()
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn purity(&self) -> f64 {
        self.rho.trace_product(&self.rho).re
    }
}

/// Binary POVM {A(1|x), A(2|x)} for one party and one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryPovm {
    pub effect_1: ComplexMatrix,
    pub effect_2: ComplexMatrix,
}

impl BinaryPovm {
    pub fn new(effect_1: ComplexMatrix, effect_2: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(effect_1, effect_2, Tolerance::default())
    }

    pub fn with_tolerance(
        effect_1: ComplexMatrix,
        effect_2: ComplexMatrix,
        tol: Tolerance,
    ) -> Result<Self> {
        let tau = tol.tau;
        if !effect_1.is_square() || effect_1.rows() != effect_2.rows() || !effect_2.is_square() {
            return Err(Error::ShapeMismatch("effects must be square and equal-sized".into()));
        }
        for effect in [&effect_1, &effect_2] {
            let defect = effect.hermitian_defect();
            if defect > tau {
                return Err(Error::NotHermitian { defect, tol: tau });
            }
            let min_eig = min_eigenvalue(effect, tau)?;
            if min_eig < -tau {
                return Err(Error::NotPsd { min_eig });
            }
        }
        let sum = effect_1.add(&effect_2);
        let defect = sum.max_abs_diff(&ComplexMatrix::identity(effect_1.rows()));
        if defect > tau {
            return Err(Error::NotComplete { defect });
        }
        Ok(Self { effect_1, effect_2 })
    }

    /// Builds {(I−O)/2, (I+O)/2} from a ±1 observable, so outcome 1 carries
    /// sign −1 and outcome 2 carries sign +1.
    pub fn from_observable(obs: &ComplexMatrix) -> Result<Self> {
        let id = ComplexMatrix::identity(obs.rows());
        Self::new(id.sub(obs).scale_re(0.5), id.add(obs).scale_re(0.5))
    }

    pub fn dim(&self) -> usize {
        self.effect_1.rows()
    }

    /// The ±1 observable A(2|x) − A(1|x).
    pub fn observable(&self) -> ComplexMatrix {
        self.effect_2.sub(&self.effect_1)
    }

    pub fn effect(&self, outcome: usize) -> &ComplexMatrix {
        match outcome {
            1 => &self.effect_1,
            2 => &self.effect_2,
            _ => panic!("binary outcome must be 1 or 2"),
        }
    }

    pub fn is_projective(&self, tau: f64) -> bool {
        let d1 = self.effect_1.matmul(&self.effect_1).max_abs_diff(&self.effect_1);
        let d2 = self.effect_2.matmul(&self.effect_2).max_abs_diff(&self.effect_2);
        d1 <= tau && d2 <= tau
    }
}

/// Per party, one BinaryPovm per setting x ∈ {1, 2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementAssembly {
    parties: Vec<[BinaryPovm; 2]>,
}

impl MeasurementAssembly {
    pub fn new(parties: Vec<[BinaryPovm; 2]>) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::InvalidArgument("assembly needs at least one party".into()));
        }
        for pair in &parties {
            if pair[0].dim() != pair[1].dim() {
                return Err(Error::ShapeMismatch(
                    "both settings of a party must share its local dimension".into(),
                ));
            }
        }
        Ok(Self { parties })
    }

    pub fn parties(&self) -> usize {
        self.parties.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.parties.iter().map(|p| p[0].dim()).collect()
    }

    /// POVM of party `n` (0-based) for setting x ∈ {1, 2}.
    pub fn povm(&self, n: usize, setting: usize) -> &BinaryPovm {
        &self.parties[n][setting - 1]
    }

    pub fn party_settings(&self) -> &[[BinaryPovm; 2]] {
        &self.parties
    }

    pub fn matches_state(&self, state: &QuantumState) -> bool {
        self.dims() == state.dims()
    }

    pub fn is_projective(&self, tau: f64) -> bool {
        self.parties.iter().all(|p| p[0].is_projective(tau) && p[1].is_projective(tau))
    }
}

/// Stochastic local operation: Kraus operators that factorize over the
/// parties (no communication), trace non-increasing overall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SloMap {
    /// kraus[k][n] is the factor of Kraus operator k acting on party n.
    kraus: Vec<Vec<ComplexMatrix>>,
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
}

impl SloMap {
    pub fn new(kraus: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        Self::with_tolerance(kraus, Tolerance::default())
    }

    pub fn with_tolerance(kraus: Vec<Vec<ComplexMatrix>>, tol: Tolerance) -> Result<Self> {
        if kraus.is_empty() || kraus[0].is_empty() {
            return Err(Error::InvalidArgument("map needs at least one Kraus operator".into()));
        }
        let parties = kraus[0].len();
        let input_dims: Vec<usize> = kraus[0].iter().map(|f| f.cols()).collect();
        let output_dims: Vec<usize> = kraus[0].iter().map(|f| f.rows()).collect();
        for factors in &kraus {
            if factors.len() != parties {
                return Err(Error::ShapeMismatch("inconsistent party count across Kraus".into()));
            }
            for (n, f) in factors.iter().enumerate() {
                if f.cols() != input_dims[n] || f.rows() != output_dims[n] {
                    return Err(Error::ShapeMismatch(format!(
                        "Kraus factor on party {} has inconsistent shape",
                        n + 1
                    )));
                }
            }
        }
        // sum_k K†K = sum_k ⊗_n F†F; built per party then summed.
        let total_in: usize = input_dims.iter().product();
        let mut sum = ComplexMatrix::zeros(total_in, total_in);
        for factors in &kraus {
            let per_party: Vec<ComplexMatrix> =
                factors.iter().map(|f| f.adjoint().matmul(f)).collect();
            sum = sum.add(&kron_all(&per_party));
        }
        let max_eig = crate::qcore::eig::hermitian_eig(&sum, tol.tau)?.values[0];
        if max_eig > 1.0 + tol.tau {
            return Err(Error::NotTraceNonIncreasing { max_eig });
        }
        Ok(Self { kraus, input_dims, output_dims })
    }

    pub fn identity(dims: &[usize]) -> Self {
        let factors: Vec<ComplexMatrix> = dims.iter().map(|&d| ComplexMatrix::identity(d)).collect();
        Self { kraus: vec![factors], input_dims: dims.to_vec(), output_dims: dims.to_vec() }
    }

    /// Single-Kraus product filter.
    pub fn single(factors: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(vec![factors])
    }

    pub fn kraus(&self) -> &[Vec<ComplexMatrix>] {
        &self.kraus
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }

    pub fn parties(&self) -> usize {
        self.input_dims.len()
    }

    /// Full Kraus matrices ⊗_n F_{k,n}.
    pub fn full_kraus(&self) -> Vec<ComplexMatrix> {
        self.kraus.iter().map(|factors| kron_all(factors)).collect()
    }

    /// Same map on m+1 copies: every per-party factor gains an identity on
    /// an extra local factor of dimension `extra[n]`.
    pub fn extend_with_identity(&self, extra: &[usize]) -> Result<Self> {
        if extra.len() != self.parties() {
            return Err(Error::ShapeMismatch("extend_with_identity: party count".into()));
        }
        let kraus = self
            .kraus
            .iter()
            .map(|factors| {
                factors
                    .iter()
                    .zip(extra)
                    .map(|(f, &e)| f.kron(&ComplexMatrix::identity(e)))
                    .collect()
            })
            .collect();
        let input_dims = self.input_dims.iter().zip(extra).map(|(d, e)| d * e).collect();
        let output_dims = self.output_dims.iter().zip(extra).map(|(d, e)| d * e).collect();
        Ok(Self { kraus, input_dims, output_dims })
    }
}

/// ρ^{⊗m} with each party's m copies grouped under that party: the party
/// count stays N and the local dimensions become d_n^m.
pub fn tensor_power(state: &QuantumState, m: usize) -> Result<QuantumState> {
    tensor_power_with_cap(state, m, DEFAULT_DIM_CAP)
}

pub fn tensor_power_with_cap(state: &QuantumState, m: usize, cap: usize) -> Result<QuantumState> {
    if m == 0 {
        return Err(Error::InvalidArgument("tensor_power needs m >= 1".into()));
    }
    let n = state.parties();
    let total = state
        .total_dim()
        .checked_pow(m as u32)
        .ok_or(Error::DimensionCap { dim: usize::MAX, cap })?;
    if total > cap {
        return Err(Error::DimensionCap { dim: total, cap });
    }
    if m == 1 {
        return Ok(state.clone());
    }
    let mut full = state.rho().clone();
    for _ in 1..m {
        full = full.kron(state.rho());
    }
    // Factor order is copy-major: position c*N + n holds (copy c, party n).
    // Regroup to party-major: new position n*m + c.
    let mut old_dims = Vec::with_capacity(n * m);
    for _ in 0..m {
        old_dims.extend_from_slice(state.dims());
    }
    let mut perm = Vec::with_capacity(n * m);
    for party in 0..n {
        for copy in 0..m {
            perm.push(copy * n + party);
        }
    }
    let grouped = full.permute_subsystems(&old_dims, &perm)?;
    let new_dims: Vec<usize> = state.dims().iter().map(|d| d.pow(m as u32)).collect();
    Ok(QuantumState::new_unchecked(new_dims, grouped))
}

/// Applies Ω to ρ and renormalizes: returns (Ω(ρ)/π, π) with π = tr[Ω(ρ)].
/// Errors with DegenerateProbability if π < τ.
pub fn apply_slo(map: &SloMap, state: &QuantumState) -> Result<(QuantumState, f64)> {
    apply_slo_with_tolerance(map, state, Tolerance::default())
}

pub fn apply_slo_with_tolerance(
    map: &SloMap,
    state: &QuantumState,
    tol: Tolerance,
) -> Result<(QuantumState, f64)> {
    if map.input_dims() != state.dims() {
        return Err(Error::ShapeMismatch(format!(
            "map input dims {:?} do not match state dims {:?}",
            map.input_dims(),
            state.dims()
        )));
    }
    let out_dim: usize = map.output_dims().iter().product();
    let mut omega = ComplexMatrix::zeros(out_dim, out_dim);
    for k in map.full_kraus() {
        omega = omega.add(&k.matmul(state.rho()).matmul(&k.adjoint()));
    }
    let prob = omega.trace().re;
    if prob < tol.tau {
        return Err(Error::DegenerateProbability { prob });
    }
    let normalized = omega.scale_re(1.0 / prob);
    Ok((QuantumState::new_unchecked(map.output_dims().to_vec(), normalized), prob))
}
