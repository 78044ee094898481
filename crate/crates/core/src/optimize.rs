//! Search for measurement assemblies and stochastic local filters that
//! maximize a WWZB score: alternating (seesaw) optimization over ±1
//! observables, a closed-form two-qubit CHSH oracle for validation, and the
//! multi-copy product-filter search.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlations::CorrelationTensor;
use crate::error::{Error, Result};
use crate::exec;
use crate::fixtures::{pauli_x, pauli_y, pauli_z};
use crate::jordan::{best_block, qubit_reduce_with_tolerance, QubitComponent, QubitReduction};
use crate::qcore::eig::hermitian_eig;
use crate::qcore::matrix::ComplexMatrix;
use crate::qcore::random::{gaussian_complex, random_unitary};
use crate::qcore::state::{
    apply_slo, tensor_power_with_cap, BinaryPovm, MeasurementAssembly, QuantumState, SloMap,
    Tolerance, DEFAULT_DIM_CAP,
};
use crate::wwzb::{fourier_spectrum, WwzbInequality};

/// Iteration and sampling limits. The seed is mandatory: every randomized
/// search in the toolkit is reproducible from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub seesaw_restarts: usize,
    pub seesaw_sweep_limit: usize,
    pub filter_candidates: usize,
    pub rng_seed: u64,
    pub convergence_eps: f64,
}

impl SearchBudget {
    pub fn new(rng_seed: u64) -> Self {
        Self {
            seesaw_restarts: 20,
            seesaw_sweep_limit: 500,
            filter_candidates: 200,
            rng_seed,
            convergence_eps: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seesaw_restarts == 0 || self.seesaw_sweep_limit == 0 || self.filter_candidates == 0
        {
            return Err(Error::InvalidArgument("budget counts must be >= 1".into()));
        }
        if !self.convergence_eps.is_finite() || self.convergence_eps <= 0.0 {
            return Err(Error::InvalidTolerance(self.convergence_eps));
        }
        Ok(())
    }
}

/// What the search maximizes: one fixed family member, or the whole family
/// through the Fourier-sum shortcut (the member is re-picked from the
/// achieved correlators after every sweep).
#[derive(Debug, Clone)]
pub enum Objective {
    Fixed(WwzbInequality),
    Scan,
}

/// Outcome of a search. The score trace of the winning restart is
/// non-decreasing; `best_score` is its final signed score for `inequality`
/// (nonnegative at any optimum since flipping one party negates the score).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best_score: f64,
    pub assembly: MeasurementAssembly,
    pub filter: Option<SloMap>,
    pub inequality: crate::wwzb::InequalityRecord,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

impl OptimizationReport {
    pub fn inequality_member(&self) -> Result<WwzbInequality> {
        self.inequality.to_inequality()
    }
}

fn splitmix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random ±1 observable: a Haar-like unitary conjugating a random sign
/// pattern.
fn random_observable(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    let u = random_unitary(rng, d);
    let signs: Vec<f64> =
        (0..d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    u.matmul(&ComplexMatrix::from_real_diag(&signs)).matmul(&u.adjoint()).hermitian_part()
}

/// Optimal ±1 observable for a Hermitian effective operator: projector onto
/// the nonnegative eigenspace minus its complement (zero eigenvalues break
/// toward +1).
fn sign_split(r: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(&r.hermitian_part(), 1e-6 * r.max_abs_entry().max(1.0))?;
    let plus = eig.eigenspace_projector(|l| l >= 0.0);
    Ok(plus.scale_re(2.0).sub(&ComplexMatrix::identity(r.rows())))
}

/// Flat-index → per-party multi-index lookup table for one dimension list.
struct PartyIndexer {
    parties: usize,
    table: Vec<usize>, // table[flat * parties + k]
}

impl PartyIndexer {
    fn new(dims: &[usize]) -> Self {
        let parties = dims.len();
        let total: usize = dims.iter().product();
        let mut table = vec![0usize; total * parties];
        for flat in 0..total {
            let mut rem = flat;
            for k in (0..parties).rev() {
                table[flat * parties + k] = rem % dims[k];
                rem /= dims[k];
            }
        }
        Self { parties, table }
    }

    #[inline]
    fn of(&self, flat: usize, k: usize) -> usize {
        self.table[flat * self.parties + k]
    }
}

/// tr[ρ ⊗_k O_k] by direct index contraction: Σ_{r,c} ρ[r,c] Π_k O_k[c_k, r_k].
fn trace_with_product(
    rho: &ComplexMatrix,
    idx: &PartyIndexer,
    factors: &[&ComplexMatrix],
) -> Complex64 {
    let total = rho.rows();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..total {
        for c in 0..total {
            let v = rho.get(r, c);
            if v == crate::qcore::matrix::C_ZERO {
                continue;
            }
            let mut coeff = v;
            for (k, o) in factors.iter().enumerate() {
                coeff *= o.get(idx.of(c, k), idx.of(r, k));
            }
            acc += coeff;
        }
    }
    acc
}

fn correlators_of_observables(
    rho: &ComplexMatrix,
    idx: &PartyIndexer,
    observables: &[[ComplexMatrix; 2]],
) -> CorrelationTensor {
    let parties = observables.len();
    let tuples = 1usize << parties;
    // ±1 observables keep |C| ≤ 1 up to rounding; clamp the rounding away
    let values: Vec<f64> = (0..tuples)
        .map(|x| {
            let factors: Vec<&ComplexMatrix> =
                (0..parties).map(|n| &observables[n][(x >> n) & 1]).collect();
            trace_with_product(rho, idx, &factors).re.clamp(-1.0, 1.0)
        })
        .collect();
    CorrelationTensor::with_tolerance(parties, values, Tolerance::default())
        .expect("clamped correlators are in range")
}

/// Effective operator for party n at one setting: contracting the state
/// with the other parties' observables and the inequality coefficients
/// leaves tr[O·R]; `sign_split(R)` is the exact conditional optimizer.
/// R[r_n, c_n] = 2^{−N} Σ_x g(x) Σ ρ[r,c] Π_{k≠n} O_k[c_k, r_k].
fn effective_operator(
    rho: &ComplexMatrix,
    idx: &PartyIndexer,
    dims: &[usize],
    observables: &[[ComplexMatrix; 2]],
    g: &[i64],
    n: usize,
    setting_bit: usize,
) -> ComplexMatrix {
    let parties = dims.len();
    let tuples = 1usize << parties;
    let total = rho.rows();
    let mut acc = ComplexMatrix::zeros(dims[n], dims[n]);
    for x in 0..tuples {
        if (x >> n) & 1 != setting_bit || g[x] == 0 {
            continue;
        }
        let weight = g[x] as f64;
        let others: Vec<(usize, &ComplexMatrix)> =
            (0..parties).filter(|&k| k != n).map(|k| (k, &observables[k][(x >> k) & 1])).collect();
        for r in 0..total {
            for c in 0..total {
                let v = rho.get(r, c);
                if v == crate::qcore::matrix::C_ZERO {
                    continue;
                }
                let mut coeff = v;
                for &(k, o) in &others {
                    coeff *= o.get(idx.of(c, k), idx.of(r, k));
                }
                let rn = idx.of(r, n);
                let cn = idx.of(c, n);
                let cur = acc.get(rn, cn) + coeff * weight;
                acc.set(rn, cn, cur);
            }
        }
    }
    acc.scale_re(1.0 / tuples as f64).hermitian_part()
}

struct RestartOutcome {
    score: f64,
    observables: Vec<[ComplexMatrix; 2]>,
    member: WwzbInequality,
    sweeps: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn seesaw_restart(
    state: &QuantumState,
    objective: &Objective,
    budget: &SearchBudget,
    restart: u64,
) -> Result<RestartOutcome> {
    let dims = state.dims();
    let parties = dims.len();
    let idx = PartyIndexer::new(dims);
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(budget.rng_seed, restart));
    let mut observables: Vec<[ComplexMatrix; 2]> = (0..parties)
        .map(|n| [random_observable(&mut rng, dims[n]), random_observable(&mut rng, dims[n])])
        .collect();

    let mut member = match objective {
        Objective::Fixed(ineq) => ineq.clone(),
        Objective::Scan => {
            let c = correlators_of_observables(state.rho(), &idx, &observables);
            fourier_spectrum(&c).best_member()
        }
    };
    let mut score =
        member.signed_score(&correlators_of_observables(state.rho(), &idx, &observables))?;
    let mut trace = vec![score];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < budget.seesaw_sweep_limit {
        sweeps += 1;
        for n in 0..parties {
            for setting_bit in 0..2 {
                let r = effective_operator(
                    state.rho(),
                    &idx,
                    dims,
                    &observables,
                    member.coefficients(),
                    n,
                    setting_bit,
                );
                observables[n][setting_bit] = sign_split(&r)?;
            }
        }
        if let Objective::Scan = objective {
            let c = correlators_of_observables(state.rho(), &idx, &observables);
            member = fourier_spectrum(&c).best_member();
        }
        let new_score =
            member.signed_score(&correlators_of_observables(state.rho(), &idx, &observables))?;
        debug_assert!(new_score >= score - budget.convergence_eps, "seesaw went downhill");
        trace.push(new_score);
        if new_score - score < budget.convergence_eps {
            score = new_score;
            converged = true;
            break;
        }
        score = new_score;
    }
    Ok(RestartOutcome { score, observables, member, sweeps, converged, trace })
}

fn assembly_from_observables(observables: &[[ComplexMatrix; 2]]) -> Result<MeasurementAssembly> {
    let povms: Vec<[BinaryPovm; 2]> = observables
        .iter()
        .map(|pair| {
            Ok([
                BinaryPovm::with_tolerance(
                    ComplexMatrix::identity(pair[0].rows()).sub(&pair[0]).scale_re(0.5),
                    ComplexMatrix::identity(pair[0].rows()).add(&pair[0]).scale_re(0.5),
                    Tolerance { tau: 1e-7 },
                )?,
                BinaryPovm::with_tolerance(
                    ComplexMatrix::identity(pair[1].rows()).sub(&pair[1]).scale_re(0.5),
                    ComplexMatrix::identity(pair[1].rows()).add(&pair[1]).scale_re(0.5),
                    Tolerance { tau: 1e-7 },
                )?,
            ])
        })
        .collect::<Result<_>>()?;
    MeasurementAssembly::new(povms)
}

/// Seesaw search for the assembly maximizing the signed score of one family
/// member. Restarts run independently (in parallel under the default
/// feature) and merge deterministically.
pub fn seesaw(
    state: &QuantumState,
    ineq: &WwzbInequality,
    budget: &SearchBudget,
) -> Result<OptimizationReport> {
    seesaw_objective(state, &Objective::Fixed(ineq.clone()), budget)
}

/// Seesaw over the whole family: the member is re-picked by the Fourier
/// condition after every sweep.
pub fn seesaw_scan(state: &QuantumState, budget: &SearchBudget) -> Result<OptimizationReport> {
    seesaw_objective(state, &Objective::Scan, budget)
}

pub fn seesaw_objective(
    state: &QuantumState,
    objective: &Objective,
    budget: &SearchBudget,
) -> Result<OptimizationReport> {
    budget.validate()?;
    if let Objective::Fixed(ineq) = objective {
        if ineq.parties() != state.parties() {
            return Err(Error::ScenarioMismatch(format!(
                "inequality has {} parties, state {}",
                ineq.parties(),
                state.parties()
            )));
        }
    }
    let outcomes: Vec<Result<RestartOutcome>> = exec::map_indexed(budget.seesaw_restarts, |r| {
        seesaw_restart(state, objective, budget, r as u64)
    });
    let mut results = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        results.push(o?);
    }
    let best = exec::argmax(results.iter().map(|r| r.score)).expect("restarts >= 1");
    let win = &results[best];
    Ok(OptimizationReport {
        best_score: win.score,
        assembly: assembly_from_observables(&win.observables)?,
        filter: None,
        inequality: crate::wwzb::InequalityRecord::of(&win.member),
        iterations: win.sweeps,
        converged: win.converged,
        trace: win.trace.clone(),
    })
}

/// Closed-form CHSH maximum of a two-qubit state (normalized so the LVM
/// bound is 1): √(m₁ + m₂) for the two largest eigenvalues of TᵀT, with
/// T_ij = tr[ρ σ_i ⊗ σ_j]. Independent oracle for the seesaw.
pub fn chsh_two_qubit_max(state: &QuantumState) -> Result<f64> {
    if state.dims() != [2, 2] {
        return Err(Error::ShapeMismatch(format!(
            "closed form needs a two-qubit state, got dims {:?}",
            state.dims()
        )));
    }
    let paulis = [pauli_x(), pauli_y(), pauli_z()];
    let mut t = [[0.0f64; 3]; 3];
    for (i, si) in paulis.iter().enumerate() {
        for (j, sj) in paulis.iter().enumerate() {
            t[i][j] = state.rho().trace_product(&si.kron(sj)).re;
        }
    }
    // M = TᵀT
    let mut m = ComplexMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            let acc: f64 = t.iter().map(|row| row[i] * row[j]).sum();
            m.set(i, j, Complex64::new(acc, 0.0));
        }
    }
    let eig = hermitian_eig(&m, 1e-9)?;
    Ok((eig.values[0] + eig.values[1]).max(0.0).sqrt())
}

/// Random per-party lower-triangular factor scaled to unit spectral norm.
fn random_filter_factor(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    let mut l = ComplexMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..=r {
            l.set(r, c, gaussian_complex(rng));
        }
    }
    let gram = l.adjoint().matmul(&l);
    let smax = hermitian_eig(&gram, 1e-9).expect("gram is Hermitian").values[0].sqrt();
    l.scale_re(1.0 / smax.max(f64::MIN_POSITIVE))
}

/// Projection onto span{|i>, |j>} of dimension d.
fn pair_projector(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(d, d);
    p.set(i, i, crate::qcore::matrix::C_ONE);
    p.set(j, j, crate::qcore::matrix::C_ONE);
    p
}

fn deterministic_ansatz(dims: &[usize]) -> Vec<SloMap> {
    let parties = dims.len();
    let mut out = Vec::new();
    let identity_factors: Vec<ComplexMatrix> =
        dims.iter().map(|&d| ComplexMatrix::identity(d)).collect();

    // rank-deficient projections onto qubit subspaces
    if dims.iter().any(|&d| d > 2) {
        // every oversized party at once
        let all: Vec<ComplexMatrix> = dims
            .iter()
            .map(|&d| if d > 2 { pair_projector(d, 0, 1) } else { ComplexMatrix::identity(d) })
            .collect();
        out.push(SloMap::single(all).expect("projector filter is valid"));
        // one party at a time
        for n in 0..parties {
            if dims[n] > 2 {
                let mut f = identity_factors.clone();
                f[n] = pair_projector(dims[n], 0, 1);
                out.push(SloMap::single(f).expect("projector filter is valid"));
            }
        }
        // matched index pairs across parties (natural for grouped copies)
        let d0 = dims[0];
        if dims.iter().all(|&d| d == d0) && d0 <= 4 {
            for i in 0..d0 {
                for j in (i + 1)..d0 {
                    let factors: Vec<ComplexMatrix> =
                        (0..parties).map(|_| pair_projector(d0, i, j)).collect();
                    out.push(SloMap::single(factors).expect("projector filter is valid"));
                }
            }
        }
    }

    // one-party diagonal (Procrustean) filters
    for n in 0..parties {
        let d = dims[n];
        for k in 1..=9 {
            let t = k as f64 / 10.0;
            for flip in [false, true] {
                let mut diag = vec![1.0; d];
                if flip {
                    diag[0] = t;
                } else {
                    diag[d - 1] = t;
                }
                let mut f = identity_factors.clone();
                f[n] = ComplexMatrix::from_real_diag(&diag);
                out.push(SloMap::single(f).expect("diagonal filter is valid"));
            }
        }
    }
    out
}

/// Searches product filters on ρ^{⊗m}: the identity, a deterministic ansatz
/// list, any caller-provided candidates, and `filter_candidates` seeded
/// random lower-triangular filters. Each candidate is filtered, seesawed,
/// and (for oversized local dimensions) qubit-reduced with the best block
/// re-seesawed; the overall best report wins with deterministic tie-breaks.
pub fn filter_search(
    state: &QuantumState,
    copies: usize,
    objective: &Objective,
    budget: &SearchBudget,
) -> Result<OptimizationReport> {
    filter_search_with_candidates(state, copies, objective, budget, &[], DEFAULT_DIM_CAP)
}

pub fn filter_search_with_candidates(
    state: &QuantumState,
    copies: usize,
    objective: &Objective,
    budget: &SearchBudget,
    extra: &[SloMap],
    dim_cap: usize,
) -> Result<OptimizationReport> {
    budget.validate()?;
    let rho_m = tensor_power_with_cap(state, copies, dim_cap)?;
    let dims = rho_m.dims().to_vec();

    let mut candidates: Vec<SloMap> = Vec::new();
    candidates.push(SloMap::identity(&dims));
    candidates.extend_from_slice(extra);
    candidates.extend(deterministic_ansatz(&dims));
    let random_base = candidates.len();
    for k in 0..budget.filter_candidates {
        let mut rng =
            ChaCha8Rng::seed_from_u64(splitmix(budget.rng_seed, 0xF117E4 + (random_base + k) as u64));
        let factors: Vec<ComplexMatrix> =
            dims.iter().map(|&d| random_filter_factor(&mut rng, d)).collect();
        candidates.push(SloMap::single(factors).expect("unit-norm filter is valid"));
    }

    struct CandidateOutcome {
        score: f64,
        report: Option<OptimizationReport>,
    }

    let outcomes: Vec<CandidateOutcome> = exec::map_indexed(candidates.len(), |idx| {
        let cand = &candidates[idx];
        let inner_budget = SearchBudget {
            rng_seed: splitmix(budget.rng_seed, 0xCAFE + idx as u64),
            ..*budget
        };
        let run = || -> Result<OptimizationReport> {
            let (filtered, _prob) = apply_slo(cand, &rho_m)?;
            let mut rep = seesaw_objective(&filtered, objective, &inner_budget)?;
            rep.filter = Some(cand.clone());
            if filtered.dims().iter().any(|&d| d > 2) {
                if let Ok(refined) =
                    refine_through_qubit_reduction(&filtered, cand, &rep, objective, &inner_budget)
                {
                    if refined.best_score > rep.best_score {
                        rep = refined;
                    }
                }
            }
            Ok(rep)
        };
        match run() {
            Ok(rep) => CandidateOutcome { score: rep.best_score, report: Some(rep) },
            Err(_) => CandidateOutcome { score: f64::NEG_INFINITY, report: None },
        }
    });

    let best = exec::argmax(outcomes.iter().map(|o| o.score))
        .filter(|&i| outcomes[i].report.is_some());
    match best {
        Some(i) => Ok(outcomes.into_iter().nth(i).and_then(|o| o.report).expect("checked")),
        None => {
            // every candidate failed (dead filters): an explicit non-finding
            let rep = seesaw_objective(&rho_m, objective, budget)?;
            Ok(OptimizationReport { converged: false, ..rep })
        }
    }
}

/// Runs the qubit reduction on the filtered state with the seesawed
/// projective assembly, picks the best block, re-seesaws on the qubit
/// component, and composes the block isometry into the filter so the
/// witness stays self-contained.
fn refine_through_qubit_reduction(
    filtered: &QuantumState,
    cand: &SloMap,
    rep: &OptimizationReport,
    objective: &Objective,
    budget: &SearchBudget,
) -> Result<OptimizationReport> {
    let member = rep.inequality_member()?;
    let reduction =
        qubit_reduce_with_tolerance(filtered, &rep.assembly, Tolerance { tau: 1e-7 })?;
    let (bi, _) = best_block(&reduction, &member)?;
    let comp = &reduction.components[bi];
    let mut refined = seesaw_objective(&comp.state, objective, budget)?;
    refined.filter = Some(compose_filter_with_block(cand, &reduction, comp)?);
    Ok(refined)
}

fn compose_filter_with_block(
    filter: &SloMap,
    reduction: &QubitReduction,
    comp: &QubitComponent,
) -> Result<SloMap> {
    if filter.kraus().len() != 1 {
        return Err(Error::InvalidArgument("only single-Kraus filters are composed".into()));
    }
    let factors = &filter.kraus()[0];
    let new_factors: Vec<ComplexMatrix> = factors
        .iter()
        .enumerate()
        .map(|(n, f)| {
            let block = &reduction.party_isometries[n][comp.block_index[n]];
            let w = &block.isometry; // d_out × b
            let pad = if w.cols() == 2 {
                ComplexMatrix::identity(2)
            } else {
                ComplexMatrix::basis_ket(2, 0)
            };
            pad.matmul(&w.adjoint()).matmul(f)
        })
        .collect();
    SloMap::new(vec![new_factors])
}
