//! Simultaneous 1x1/2x2 block-diagonalization of two binary projective
//! measurements, plus the reductions built on it: POVM → projective mixture
//! and arbitrary local dimensions → N-qubit mixture.
//!
//! The constructive algorithm: on range(B1) the operators B1 and B1·A1·B1
//! commute, so an eigenbasis of the restriction of A1 exists there. An
//! eigenvector v with ⟨v|A1|v⟩ ∈ {0, 1} spans a joint 1x1 block; an interior
//! eigenvector spawns the 2x2 block spanned by the orthogonal pair A1·v,
//! A2·v. What remains after all of range(B1) is processed is A1-invariant,
//! lies in range(B2), and splits into 1x1 blocks of A1's eigenvectors.

use crate::correlations::{born_distribution_with_tolerance, correlators};
use crate::error::{Error, Result};
use crate::exec;
use crate::qcore::eig::hermitian_eig;
use crate::qcore::matrix::{kron_all, ComplexMatrix};
use crate::qcore::state::{BinaryPovm, MeasurementAssembly, QuantumState, Tolerance};
use crate::wwzb::WwzbInequality;

/// Interior-classification threshold θ: ⟨v|A1|v⟩ below θ/10 counts as 0,
/// above 1 − θ/10 counts as 1, between θ and 1 − θ is a genuine 2x2 block,
/// and the bands [θ/10, θ] are refused as ambiguous.
const CLASSIFY_THETA: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// Joint eigenvector with the eigenvalues of A1 and B1 on it.
    One { a_bit: u8, b_bit: u8 },
    Two,
}

impl Block {
    pub fn size(&self) -> usize {
        match self {
            Block::One { .. } => 1,
            Block::Two => 2,
        }
    }
}

/// Unitary basis change making two projectors (and their complements)
/// simultaneously block-diagonal in blocks of size at most two.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub dimension: usize,
    /// Columns are the new basis, block by block.
    pub basis: ComplexMatrix,
    pub blocks: Vec<Block>,
}

impl BlockDecomposition {
    /// Starting column of each block.
    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.blocks.len());
        let mut at = 0;
        for b in &self.blocks {
            offsets.push(at);
            at += b.size();
        }
        offsets
    }

    /// Largest magnitude of U†·M·U outside the declared blocks.
    pub fn off_block_residual(&self, m: &ComplexMatrix) -> f64 {
        let transformed = self.basis.adjoint().matmul(m).matmul(&self.basis);
        let offsets = self.offsets();
        let mut owner = vec![0usize; self.dimension];
        for (i, (&off, b)) in offsets.iter().zip(&self.blocks).enumerate() {
            for k in 0..b.size() {
                owner[off + k] = i;
            }
        }
        let mut worst = 0.0f64;
        for r in 0..self.dimension {
            for c in 0..self.dimension {
                if owner[r] != owner[c] {
                    worst = worst.max(transformed.get(r, c).norm());
                }
            }
        }
        worst
    }

    /// Basis columns of block `i` as a d×size isometry.
    pub fn block_isometry(&self, i: usize) -> ComplexMatrix {
        let off = self.offsets()[i];
        let size = self.blocks[i].size();
        ComplexMatrix::from_fn(self.dimension, size, |r, c| self.basis.get(r, off + c))
    }
}

fn ensure_projector(m: &ComplexMatrix, tau: f64) -> Result<()> {
    let defect = m.hermitian_defect();
    if defect > tau {
        return Err(Error::NotHermitian { defect, tol: tau });
    }
    let idem = m.matmul(m).max_abs_diff(m);
    if idem > tau {
        return Err(Error::NotAProjector { defect: idem });
    }
    Ok(())
}

/// Orthonormal basis of the eigenvalue-≈1 eigenspace of a projector.
fn range_basis(p: &ComplexMatrix, tau: f64) -> Result<Vec<ComplexMatrix>> {
    let eig = hermitian_eig(p, tau)?;
    let mut cols = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda > 0.5 {
            cols.push(eig.eigenvector(k));
        }
    }
    Ok(cols)
}

fn restrict(op: &ComplexMatrix, basis: &[ComplexMatrix]) -> ComplexMatrix {
    let k = basis.len();
    ComplexMatrix::from_fn(k, k, |r, c| {
        basis[r].adjoint().matmul(op).matmul(&basis[c]).get(0, 0)
    })
}

fn lift(basis: &[ComplexMatrix], coeffs: &ComplexMatrix, col: usize) -> ComplexMatrix {
    let d = basis[0].rows();
    let mut v = ComplexMatrix::zeros(d, 1);
    for (j, b) in basis.iter().enumerate() {
        let w = coeffs.get(j, col);
        for r in 0..d {
            let x = v.get(r, 0) + w * b.get(r, 0);
            v.set(r, 0, x);
        }
    }
    v
}

fn normalized(v: &ComplexMatrix) -> ComplexMatrix {
    let norm: f64 = (0..v.rows()).map(|r| v.get(r, 0).norm_sqr()).sum::<f64>().sqrt();
    v.scale_re(1.0 / norm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Class {
    Zero,
    One,
    Interior,
}

fn classify(mu: f64) -> Result<Class> {
    let theta = CLASSIFY_THETA;
    let theta_lo = theta / 10.0;
    if mu < theta_lo {
        Ok(Class::Zero)
    } else if mu <= theta {
        // first pass said "zero", refinement at θ/10 says "interior": refuse
        Err(Error::ToleranceClassification { value: mu })
    } else if mu < 1.0 - theta {
        Ok(Class::Interior)
    } else if mu <= 1.0 - theta_lo {
        Err(Error::ToleranceClassification { value: mu })
    } else {
        Ok(Class::One)
    }
}

/// Re-orthonormalize eigenvector groups whose eigenvalues cluster within
/// `gap`; inside a cluster the basis is only defined up to rotation.
fn reorthonormalize_clusters(values: &[f64], vectors: &mut [ComplexMatrix], gap: f64) {
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && (values[end - 1] - values[end]).abs() < gap {
            end += 1;
        }
        if end - start > 1 {
            for c in start..end {
                for p in start..c {
                    let mut proj = num_complex::Complex64::new(0.0, 0.0);
                    for r in 0..vectors[c].rows() {
                        proj += vectors[p].get(r, 0).conj() * vectors[c].get(r, 0);
                    }
                    let prev = vectors[p].clone();
                    for r in 0..vectors[c].rows() {
                        let x = vectors[c].get(r, 0) - proj * prev.get(r, 0);
                        vectors[c].set(r, 0, x);
                    }
                }
                vectors[c] = normalized(&vectors[c]);
            }
        }
        start = end;
    }
}

/// The block-diagonalization: `a1` and `b1` are projectors on the same
/// space (complements A2 = I − A1, B2 = I − B1 implied).
pub fn jordan_blocks(
    a1: &ComplexMatrix,
    b1: &ComplexMatrix,
    tol: Tolerance,
) -> Result<BlockDecomposition> {
    let tau = tol.tau;
    if !a1.is_square() || !b1.is_square() || a1.rows() != b1.rows() {
        return Err(Error::ShapeMismatch("projectors must be square and equal-sized".into()));
    }
    ensure_projector(a1, tau)?;
    ensure_projector(b1, tau)?;
    let d = a1.rows();
    let identity = ComplexMatrix::identity(d);
    let a2 = identity.sub(a1);

    let mut columns: Vec<ComplexMatrix> = Vec::with_capacity(d);
    let mut blocks: Vec<Block> = Vec::new();

    // Sweep 1: eigenbasis of A1 restricted to range(B1).
    let w1 = range_basis(b1, tau)?;
    if !w1.is_empty() {
        let m = restrict(a1, &w1).hermitian_part();
        let eig = hermitian_eig(&m, tau)?;
        let mut vecs: Vec<ComplexMatrix> =
            (0..w1.len()).map(|k| lift(&w1, &eig.vectors, k)).collect();
        reorthonormalize_clusters(&eig.values, &mut vecs, 1e-8);
        for (v, &mu) in vecs.iter().zip(&eig.values) {
            match classify(mu.clamp(0.0, 1.0))? {
                Class::Zero => {
                    columns.push(v.clone());
                    blocks.push(Block::One { a_bit: 0, b_bit: 1 });
                }
                Class::One => {
                    columns.push(v.clone());
                    blocks.push(Block::One { a_bit: 1, b_bit: 1 });
                }
                Class::Interior => {
                    let u1 = normalized(&a1.matmul(v));
                    let u2 = normalized(&a2.matmul(v));
                    columns.push(u1);
                    columns.push(u2);
                    blocks.push(Block::Two);
                }
            }
        }
    }

    // Sweep 2: what is left is A1-invariant and lives in range(B2).
    let found = columns.len();
    if found < d {
        let mut p_rest = identity.clone();
        for v in &columns {
            p_rest = p_rest.sub(&crate::qcore::matrix::outer(v));
        }
        let eig_rest = hermitian_eig(&p_rest.hermitian_part(), tau)?;
        let mut w2 = Vec::new();
        for (k, &lambda) in eig_rest.values.iter().enumerate() {
            if lambda > 0.5 {
                w2.push(eig_rest.eigenvector(k));
            }
        }
        if w2.len() != d - found {
            return Err(Error::Numerical(format!(
                "residual space has dimension {} instead of {}",
                w2.len(),
                d - found
            )));
        }
        let m = restrict(a1, &w2).hermitian_part();
        let eig = hermitian_eig(&m, tau)?;
        let mut vecs: Vec<ComplexMatrix> =
            (0..w2.len()).map(|k| lift(&w2, &eig.vectors, k)).collect();
        reorthonormalize_clusters(&eig.values, &mut vecs, 1e-8);
        for (v, &nu) in vecs.iter().zip(&eig.values) {
            match classify(nu.clamp(0.0, 1.0))? {
                Class::Zero => {
                    columns.push(v.clone());
                    blocks.push(Block::One { a_bit: 0, b_bit: 0 });
                }
                Class::One => {
                    columns.push(v.clone());
                    blocks.push(Block::One { a_bit: 1, b_bit: 0 });
                }
                // B1 vanishes here, so an interior A1 eigenvalue means the
                // inputs were not projectors to working precision
                Class::Interior => {
                    return Err(Error::ToleranceClassification { value: nu });
                }
            }
        }
    }

    // Final polish: two MGS passes pin U†U − I at machine precision without
    // moving any column more than the existing cross-talk.
    orthonormalize_in_place(&mut columns);
    orthonormalize_in_place(&mut columns);

    let mut basis = ComplexMatrix::zeros(d, d);
    for (c, v) in columns.iter().enumerate() {
        for r in 0..d {
            basis.set(r, c, v.get(r, 0));
        }
    }
    Ok(BlockDecomposition { dimension: d, basis, blocks })
}

fn orthonormalize_in_place(columns: &mut [ComplexMatrix]) {
    for c in 0..columns.len() {
        for p in 0..c {
            let mut proj = num_complex::Complex64::new(0.0, 0.0);
            for r in 0..columns[c].rows() {
                proj += columns[p].get(r, 0).conj() * columns[c].get(r, 0);
            }
            let prev = columns[p].clone();
            for r in 0..columns[c].rows() {
                let x = columns[c].get(r, 0) - proj * prev.get(r, 0);
                columns[c].set(r, 0, x);
            }
        }
        columns[c] = normalized(&columns[c]);
    }
}

/// A two-outcome POVM written as a convex mixture of two-outcome projective
/// measurements: components (w_k, Q_k) with Σ w_k Q_k = effect_1.
#[derive(Debug, Clone)]
pub struct ProjectiveMixture {
    pub components: Vec<(f64, ComplexMatrix)>,
}

impl ProjectiveMixture {
    pub fn reconstruct_effect(&self) -> ComplexMatrix {
        let d = self.components[0].1.rows();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (w, q) in &self.components {
            acc = acc.add(&q.scale_re(*w));
        }
        acc
    }
}

/// Threshold decomposition: eigendecompose the first effect with descending
/// eigenvalues λ_1 ≥ ... ≥ λ_d; weight λ_k − λ_{k+1} goes to the projector
/// onto the top-k eigenvectors (λ_{d+1} = 0), plus 1 − λ_1 on the zero
/// projector. Zero weights are pruned.
pub fn povm_to_projective(p: &BinaryPovm) -> Result<ProjectiveMixture> {
    povm_to_projective_with_tolerance(p, Tolerance::default())
}

pub fn povm_to_projective_with_tolerance(
    p: &BinaryPovm,
    tol: Tolerance,
) -> Result<ProjectiveMixture> {
    let tau = tol.tau;
    let d = p.dim();
    let eig = hermitian_eig(&p.effect_1, tau)?;
    for &lambda in &eig.values {
        if lambda < -tau || lambda > 1.0 + tau {
            return Err(Error::EffectOutOfRange { value: lambda });
        }
    }
    let lambdas: Vec<f64> = eig.values.iter().map(|l| l.clamp(0.0, 1.0)).collect();
    let mut components = Vec::new();
    let mut top_k = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        top_k = top_k.add(&crate::qcore::matrix::outer(&eig.eigenvector(k)));
        let next = if k + 1 < d { lambdas[k + 1] } else { 0.0 };
        let w = lambdas[k] - next;
        if w > tau {
            components.push((w, top_k.clone()));
        }
    }
    let w_zero = 1.0 - lambdas.first().copied().unwrap_or(0.0);
    if w_zero > tau {
        components.push((w_zero, ComplexMatrix::zeros(d, d)));
    }
    if components.is_empty() {
        // effect was numerically zero: all weight on the zero projector
        components.push((1.0, ComplexMatrix::zeros(d, d)));
    }
    Ok(ProjectiveMixture { components })
}

/// One term of the qubit reduction: a weight, an all-qubit state, and the
/// matching qubit projective assembly, plus which block each party landed in.
#[derive(Debug, Clone)]
pub struct QubitComponent {
    pub weight: f64,
    pub state: QuantumState,
    pub assembly: MeasurementAssembly,
    pub block_index: Vec<usize>,
}

/// Mixture of N-qubit experiments reproducing the original statistics:
/// Σ_i p_i P_i(a|x) = P(a|x).
#[derive(Debug, Clone)]
pub struct QubitReduction {
    pub components: Vec<QubitComponent>,
    /// Per party, the qubit subspaces of its local space.
    pub party_isometries: Vec<Vec<PartyBlock>>,
}

/// One qubit subspace of a party: its isometry into the original local
/// space (d×b columns, b ∈ {1, 2}) and the qubit-padded setting effects.
#[derive(Debug, Clone)]
pub struct PartyBlock {
    pub isometry: ComplexMatrix,
    /// effect_1 of each setting restricted to the subspace, padded to 2×2.
    pub effects: [ComplexMatrix; 2],
}

fn party_blocks(povms: &[BinaryPovm; 2], tol: Tolerance) -> Result<Vec<PartyBlock>> {
    let a1 = &povms[0].effect_1;
    let b1 = &povms[1].effect_1;
    let decomp = jordan_blocks(a1, b1, tol)?;
    let mut groups: Vec<PartyBlock> = Vec::new();
    let mut pending: Option<(ComplexMatrix, u8, u8)> = None; // lone 1x1 block
    let offsets = decomp.offsets();
    for (i, block) in decomp.blocks.iter().enumerate() {
        match block {
            Block::Two => {
                let w = decomp.block_isometry(i);
                let e1 = w.adjoint().matmul(a1).matmul(&w).hermitian_part();
                let e2 = w.adjoint().matmul(b1).matmul(&w).hermitian_part();
                groups.push(PartyBlock { isometry: w, effects: [e1, e2] });
            }
            Block::One { a_bit, b_bit } => {
                let off = offsets[i];
                let v =
                    ComplexMatrix::from_fn(decomp.dimension, 1, |r, _| decomp.basis.get(r, off));
                match pending.take() {
                    None => pending = Some((v, *a_bit, *b_bit)),
                    Some((v0, a0, b0)) => {
                        // pair the two joint eigenvectors into one qubit block
                        let d = decomp.dimension;
                        let mut w = ComplexMatrix::zeros(d, 2);
                        for r in 0..d {
                            w.set(r, 0, v0.get(r, 0));
                            w.set(r, 1, v.get(r, 0));
                        }
                        let e1 = ComplexMatrix::from_real_diag(&[a0 as f64, *a_bit as f64]);
                        let e2 = ComplexMatrix::from_real_diag(&[b0 as f64, *b_bit as f64]);
                        groups.push(PartyBlock { isometry: w, effects: [e1, e2] });
                    }
                }
            }
        }
    }
    if let Some((v, a0, b0)) = pending {
        // odd leftover: pad with an unused ancilla dimension carrying zero
        // state weight; the effects act deterministically on the pad
        let e1 = ComplexMatrix::from_real_diag(&[a0 as f64, a0 as f64]);
        let e2 = ComplexMatrix::from_real_diag(&[b0 as f64, b0 as f64]);
        groups.push(PartyBlock { isometry: v, effects: [e1, e2] });
    }
    Ok(groups)
}

/// The N-qubit reduction of a state with projective two-setting
/// measurements. Requires every effect to be a projector within τ (run
/// `povm_to_projective` upstream otherwise).
pub fn qubit_reduce(state: &QuantumState, assembly: &MeasurementAssembly) -> Result<QubitReduction> {
    qubit_reduce_with_tolerance(state, assembly, Tolerance::default())
}

pub fn qubit_reduce_with_tolerance(
    state: &QuantumState,
    assembly: &MeasurementAssembly,
    tol: Tolerance,
) -> Result<QubitReduction> {
    if !assembly.matches_state(state) {
        return Err(Error::ShapeMismatch(format!(
            "assembly dims {:?} do not match state dims {:?}",
            assembly.dims(),
            state.dims()
        )));
    }
    if !assembly.is_projective(tol.tau.max(1e-8)) {
        return Err(Error::NotAProjector { defect: tol.tau });
    }
    let parties = state.parties();
    let party_isometries: Vec<Vec<PartyBlock>> = assembly
        .party_settings()
        .iter()
        .map(|povms| party_blocks(povms, tol))
        .collect::<Result<_>>()?;

    let counts: Vec<usize> = party_isometries.iter().map(|g| g.len()).collect();
    let total: usize = counts.iter().product();
    let mut components = Vec::new();
    let mut kept_mass = 0.0;
    for flat in 0..total {
        let mut idx = Vec::with_capacity(parties);
        let mut rem = flat;
        for &c in counts.iter().rev() {
            idx.push(rem % c);
            rem /= c;
        }
        idx.reverse();

        let isos: Vec<ComplexMatrix> = idx
            .iter()
            .zip(&party_isometries)
            .map(|(&i, g)| g[i].isometry.clone())
            .collect();
        let w_all = kron_all(&isos);
        let sigma = w_all.adjoint().matmul(state.rho()).matmul(&w_all);
        let p = sigma.trace().re;
        if p < tol.tau {
            continue;
        }
        kept_mass += p;
        // pad 1-dim factors up to qubits
        let embeds: Vec<ComplexMatrix> = isos
            .iter()
            .map(|w| {
                if w.cols() == 2 {
                    ComplexMatrix::identity(2)
                } else {
                    ComplexMatrix::basis_ket(2, 0)
                }
            })
            .collect();
        let j_all = kron_all(&embeds);
        let rho_q = j_all.matmul(&sigma).matmul(&j_all.adjoint()).scale_re(1.0 / p);
        let qubit_state = QuantumState::new_unchecked(vec![2; parties], rho_q.hermitian_part());

        let povms: Vec<[BinaryPovm; 2]> = idx
            .iter()
            .zip(&party_isometries)
            .map(|(&i, g)| {
                let block = &g[i];
                let id2 = ComplexMatrix::identity(2);
                [
                    BinaryPovm {
                        effect_1: block.effects[0].clone(),
                        effect_2: id2.sub(&block.effects[0]),
                    },
                    BinaryPovm {
                        effect_1: block.effects[1].clone(),
                        effect_2: id2.sub(&block.effects[1]),
                    },
                ]
            })
            .collect();
        components.push(QubitComponent {
            weight: p,
            state: qubit_state,
            assembly: MeasurementAssembly::new(povms)?,
            block_index: idx,
        });
    }
    // renormalize after pruning
    if kept_mass <= 0.0 {
        return Err(Error::Numerical("every reduction component was pruned".into()));
    }
    for comp in &mut components {
        comp.weight /= kept_mass;
    }
    Ok(QubitReduction { components, party_isometries })
}

/// Picks the mixture component with the largest score for the inequality.
/// Convexity of the score guarantees it is no worse than the mixture.
pub fn best_block(r: &QubitReduction, ineq: &WwzbInequality) -> Result<(usize, f64)> {
    if r.components.is_empty() {
        return Err(Error::InvalidArgument("empty reduction".into()));
    }
    let scores: Vec<f64> = exec::map_indexed(r.components.len(), |i| {
        let comp = &r.components[i];
        let dist =
            born_distribution_with_tolerance(&comp.state, &comp.assembly, Tolerance { tau: 1e-6 });
        match dist {
            Ok(d) => ineq.score(&correlators(&d)).unwrap_or(f64::NEG_INFINITY),
            Err(_) => f64::NEG_INFINITY,
        }
    });
    let best = exec::argmax(scores.iter().copied()).expect("nonempty components");
    Ok((best, scores[best]))
}
