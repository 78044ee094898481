//! The SLOCC→LOCC embedding construction and the end-to-end distillability
//! certification pipeline.
//!
//! The embedding: run the stochastic map; on success adjoin an ancilla
//! qubit in |0⟩ everywhere, on failure prepare a separable state realizing a
//! saturating classical point and adjoin |1⟩. Measuring with the combined
//! effects makes the signed score exactly π·s₁ + (1−π)·1, a strict
//! violation whenever the success branch violates.

use serde::{Deserialize, Serialize};

use crate::correlations::{
    born_distribution_with_tolerance, correlators, local_strategy, strategy_outcome,
    BellFunctional, JointDistribution, Scenario,
};
use crate::error::{Error, Result};
use crate::optimize::{filter_search_with_candidates, Objective, SearchBudget};
use crate::qcore::matrix::{kron_all, outer, ComplexMatrix};
use crate::qcore::state::{
    apply_slo, tensor_power_with_cap, BinaryPovm, MeasurementAssembly, QuantumState, SloMap,
    Tolerance, DEFAULT_DIM_CAP,
};
use crate::wwzb::{
    group_size_bound, strategy_signed_score, DistillabilityCertificate, WwzbInequality,
};

/// A separable quantum realization of a deterministic saturating point:
/// classical strategy registers measured by diagonal effects.
#[derive(Debug, Clone)]
pub struct SaturatingRealization {
    pub distribution: JointDistribution,
    pub state: QuantumState,
    pub observables: MeasurementAssembly,
    /// The deterministic strategy index realized.
    pub strategy: usize,
}

fn register_realization(parties: usize, lambda: usize) -> (QuantumState, MeasurementAssembly) {
    // per party: a 4-dimensional strategy register holding |s_n>
    let kets: Vec<ComplexMatrix> = (0..parties)
        .map(|n| outer(&ComplexMatrix::basis_ket(4, local_strategy(lambda, n))))
        .collect();
    let rho = kron_all(&kets);
    let state = QuantumState::new_unchecked(vec![4; parties], rho);
    let povms: Vec<[BinaryPovm; 2]> = (0..parties)
        .map(|_| {
            let mut settings = Vec::new();
            for x in 1..=2usize {
                let mut e1 = ComplexMatrix::zeros(4, 4);
                for s in 0..4 {
                    if strategy_outcome(s, x) == 1 {
                        e1.set(s, s, crate::qcore::matrix::C_ONE);
                    }
                }
                let e2 = ComplexMatrix::identity(4).sub(&e1);
                settings.push(BinaryPovm { effect_1: e1, effect_2: e2 });
            }
            [settings[0].clone(), settings[1].clone()]
        })
        .collect();
    let assembly = MeasurementAssembly::new(povms).expect("register assembly is valid");
    (state, assembly)
}

/// Picks the lexicographically first deterministic strategy whose signed
/// score equals sign·1 and realizes it on classical registers. Every family
/// member has such a strategy for both signs.
pub fn saturating_realization(ineq: &WwzbInequality, sign: i8) -> Result<SaturatingRealization> {
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument("sign must be ±1".into()));
    }
    let parties = ineq.parties();
    let target = sign as f64;
    let lambda = (0..1usize << (2 * parties))
        .find(|&l| (strategy_signed_score(ineq, l) - target).abs() < 1e-12)
        .ok_or(Error::NoSaturatingPoint)?;
    let (state, observables) = register_realization(parties, lambda);
    let distribution = JointDistribution::deterministic(Scenario { parties }, lambda);
    Ok(SaturatingRealization { distribution, state, observables, strategy: lambda })
}

/// Table-form variant: searches for a deterministic strategy with zero
/// slack; rejects functionals that have none (non-facet tables).
pub fn saturating_realization_for_functional(
    functional: &BellFunctional,
    tau: f64,
) -> Result<SaturatingRealization> {
    let parties = functional.scenario.parties;
    let lambda = (0..functional.scenario.strategy_count())
        .find(|&l| functional.value_on_strategy(l).abs() <= tau)
        .ok_or(Error::NoSaturatingPoint)?;
    let (state, observables) = register_realization(parties, lambda);
    let distribution = JointDistribution::deterministic(Scenario { parties }, lambda);
    Ok(SaturatingRealization { distribution, state, observables, strategy: lambda })
}

/// The deterministic-protocol embedding of a stochastic violation.
#[derive(Debug, Clone)]
pub struct LoccEmbedding {
    pub embedded_state: QuantumState,
    pub embedded_assembly: MeasurementAssembly,
    pub success_probability: f64,
    pub sign: i8,
    /// sign-adjusted signed score of the success branch (> 1).
    pub branch_signed_score: f64,
    /// sign-adjusted signed score of the embedded experiment, equal to
    /// π·s₁ + (1−π)·1 by linearity.
    pub embedded_signed_score: f64,
}

/// Pads a square operator from dimension d to dimension l (top-left block).
fn pad_operator(m: &ComplexMatrix, l: usize, pad_diag: f64) -> ComplexMatrix {
    let d = m.rows();
    ComplexMatrix::from_fn(l, l, |r, c| {
        if r < d && c < d {
            m.get(r, c)
        } else if r == c {
            num_complex::Complex64::new(pad_diag, 0.0)
        } else {
            num_complex::Complex64::new(0.0, 0.0)
        }
    })
}

/// Builds the deterministic-LOCC embedding of the (map, assembly) pair for
/// the given inequality and sign. Requires the success branch to violate:
/// sign · s(Ω(ρ)/π) > 1.
pub fn locc_embedding(
    state: &QuantumState,
    slo: &SloMap,
    assembly: &MeasurementAssembly,
    ineq: &WwzbInequality,
    sign: i8,
) -> Result<LoccEmbedding> {
    locc_embedding_with_tolerance(state, slo, assembly, ineq, sign, Tolerance::default())
}

pub fn locc_embedding_with_tolerance(
    state: &QuantumState,
    slo: &SloMap,
    assembly: &MeasurementAssembly,
    ineq: &WwzbInequality,
    sign: i8,
    tol: Tolerance,
) -> Result<LoccEmbedding> {
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument("sign must be ±1".into()));
    }
    let parties = state.parties();
    if ineq.parties() != parties {
        return Err(Error::ScenarioMismatch("inequality/state party mismatch".into()));
    }
    let (branch, prob) = apply_slo(slo, state)?;
    if !assembly.matches_state(&branch) {
        return Err(Error::ShapeMismatch(
            "assembly must act on the map's output dimensions".into(),
        ));
    }
    let branch_dist = born_distribution_with_tolerance(&branch, assembly, Tolerance { tau: 1e-7 })?;
    let s1 = sign as f64 * ineq.signed_score(&correlators(&branch_dist))?;
    if s1 <= 1.0 + tol.tau {
        return Err(Error::BranchNotViolating { score: s1 });
    }
    let saturating = saturating_realization(ineq, sign)?;

    // common local dimension L_n = max(branch dim, register dim 4)
    let branch_dims = branch.dims().to_vec();
    let padded_dims: Vec<usize> = branch_dims.iter().map(|&d| d.max(4)).collect();

    let pad_isometry = |d: usize, l: usize| -> ComplexMatrix {
        ComplexMatrix::from_fn(l, d, |r, c| {
            if r == c {
                crate::qcore::matrix::C_ONE
            } else {
                num_complex::Complex64::new(0.0, 0.0)
            }
        })
    };
    let pad_state = |rho: &ComplexMatrix, dims: &[usize]| -> ComplexMatrix {
        let isos: Vec<ComplexMatrix> =
            dims.iter().zip(&padded_dims).map(|(&d, &l)| pad_isometry(d, l)).collect();
        let j = kron_all(&isos);
        j.matmul(rho).matmul(&j.adjoint())
    };

    let branch_padded = pad_state(branch.rho(), &branch_dims);
    let register_padded = pad_state(saturating.state.rho(), &vec![4; parties]);

    let anc0 = outer(&ComplexMatrix::basis_ket(2, 0));
    let anc1 = outer(&ComplexMatrix::basis_ket(2, 1));
    let anc_all = |p: &ComplexMatrix| -> ComplexMatrix { kron_all(&vec![p.clone(); parties]) };

    // [sys_1..sys_N, anc_1..anc_N] → [sys_1, anc_1, ..., sys_N, anc_N]
    let mut layout_dims: Vec<usize> = padded_dims.clone();
    layout_dims.extend(std::iter::repeat_n(2, parties));
    let mut perm = Vec::with_capacity(2 * parties);
    for n in 0..parties {
        perm.push(n);
        perm.push(parties + n);
    }
    let term_success = branch_padded
        .kron(&anc_all(&anc0))
        .permute_subsystems(&layout_dims, &perm)?
        .scale_re(prob);
    let term_failure = register_padded
        .kron(&anc_all(&anc1))
        .permute_subsystems(&layout_dims, &perm)?
        .scale_re(1.0 - prob);
    let embedded_rho = term_success.add(&term_failure);
    let embedded_dims: Vec<usize> = padded_dims.iter().map(|&l| l * 2).collect();
    let embedded_state = QuantumState::new_unchecked(embedded_dims, embedded_rho);

    // effects A(a|x) ⊗ |0><0| + B(a|x) ⊗ |1><1|, padded so outcome 2
    // absorbs the unused dimensions
    let povms: Vec<[BinaryPovm; 2]> = (0..parties)
        .map(|n| {
            let l = padded_dims[n];
            let mk = |setting: usize| {
                let a = assembly.povm(n, setting);
                let b = saturating.observables.povm(n, setting);
                let e1 = pad_operator(&a.effect_1, l, 0.0)
                    .kron(&anc0)
                    .add(&pad_operator(&b.effect_1, l, 0.0).kron(&anc1));
                let e2 = pad_operator(&a.effect_2, l, 1.0)
                    .kron(&anc0)
                    .add(&pad_operator(&b.effect_2, l, 1.0).kron(&anc1));
                BinaryPovm { effect_1: e1, effect_2: e2 }
            };
            [mk(1), mk(2)]
        })
        .collect();
    let embedded_assembly = MeasurementAssembly::new(povms)?;

    let embedded_dist = born_distribution_with_tolerance(
        &embedded_state,
        &embedded_assembly,
        Tolerance { tau: 1e-7 },
    )?;
    let embedded_signed_score =
        sign as f64 * ineq.signed_score(&correlators(&embedded_dist))?;

    Ok(LoccEmbedding {
        embedded_state,
        embedded_assembly,
        success_probability: prob,
        sign,
        branch_signed_score: s1,
        embedded_signed_score,
    })
}

/// What to certify against.
#[derive(Debug, Clone)]
pub enum CertifyObjective {
    Inequality(WwzbInequality),
    /// Pick the best family member for the achieved correlators by the
    /// Fourier condition.
    Scan,
}

/// Result of a certification run: a certificate, or an explicit non-finding
/// (which is never a claim of undistillability).
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum CertifyOutcome {
    Certificate(DistillabilityCertificate),
    NoCertificate { best_score: f64 },
}

/// Runs the filter search on ρ^{⊗m} and, if the best score exceeds 1, emits
/// a certificate with the group-size bound and the full witness.
pub fn certify_distillability(
    state: &QuantumState,
    copies: usize,
    objective: &CertifyObjective,
    budget: &SearchBudget,
) -> Result<CertifyOutcome> {
    certify_distillability_with_cap(state, copies, objective, budget, DEFAULT_DIM_CAP)
}

pub fn certify_distillability_with_cap(
    state: &QuantumState,
    copies: usize,
    objective: &CertifyObjective,
    budget: &SearchBudget,
    dim_cap: usize,
) -> Result<CertifyOutcome> {
    let tau = Tolerance::default().tau;
    let inner = match objective {
        CertifyObjective::Inequality(i) => Objective::Fixed(i.clone()),
        CertifyObjective::Scan => Objective::Scan,
    };
    let rep = filter_search_with_candidates(state, copies, &inner, budget, &[], dim_cap)?;
    let score = rep.best_score.abs();
    if score <= 1.0 + tau {
        return Ok(CertifyOutcome::NoCertificate { best_score: score });
    }
    let group_size = group_size_bound(state.parties(), score)?;
    let filter = rep.filter.clone().unwrap_or_else(|| {
        let dims: Vec<usize> = state.dims().iter().map(|d| d.pow(copies as u32)).collect();
        SloMap::identity(&dims)
    });
    let cert = DistillabilityCertificate {
        parties: state.parties(),
        copies,
        score,
        group_size,
        inequality: rep.inequality.clone(),
        filter_kraus: filter,
        assembly: rep.assembly.clone(),
        toolkit_version: format!("bellkit/{}", env!("CARGO_PKG_VERSION")),
        seed: budget.rng_seed,
    };
    cert.validate_interval()?;
    Ok(CertifyOutcome::Certificate(cert))
}

/// Re-evaluation of a certificate from scratch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub stored_score: f64,
    pub recomputed_score: f64,
    pub stored_group_size: usize,
    pub recomputed_group_size: usize,
    pub pass: bool,
}

/// Replays the witness: tensor power, filter, Born statistics, correlators,
/// score, group bound. Passes when the score reproduces within 1e-9 and the
/// group size matches.
pub fn verify_certificate(
    cert: &DistillabilityCertificate,
    state: &QuantumState,
) -> Result<VerificationReport> {
    verify_certificate_with_cap(cert, state, DEFAULT_DIM_CAP)
}

pub fn verify_certificate_with_cap(
    cert: &DistillabilityCertificate,
    state: &QuantumState,
    dim_cap: usize,
) -> Result<VerificationReport> {
    if state.parties() != cert.parties {
        return Err(Error::ScenarioMismatch(format!(
            "certificate is for {} parties, state has {}",
            cert.parties,
            state.parties()
        )));
    }
    let rho_m = tensor_power_with_cap(state, cert.copies, dim_cap)?;
    let (filtered, _prob) = apply_slo(&cert.filter_kraus, &rho_m)?;
    let dist =
        born_distribution_with_tolerance(&filtered, &cert.assembly, Tolerance { tau: 1e-7 })?;
    let ineq = cert.inequality.to_inequality()?;
    let recomputed_score = ineq.score(&correlators(&dist))?;
    let recomputed_group_size = group_size_bound(cert.parties, recomputed_score)?;
    let interval_ok = cert.validate_interval().is_ok();
    let pass = (recomputed_score - cert.score).abs() <= 1e-9
        && recomputed_group_size == cert.group_size
        && interval_ok;
    Ok(VerificationReport {
        stored_score: cert.score,
        recomputed_score,
        stored_group_size: cert.group_size,
        recomputed_group_size,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{bell_value, born_distribution};
    use crate::fixtures;
    use crate::wwzb::{chsh, to_coefficient_table};
    use num_complex::Complex64;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn saturating_point_for_chsh_is_all_outcome_one() {
        let real = saturating_realization(&chsh(), 1).unwrap();
        assert_eq!(real.strategy, 0);
        // born reproduces the deterministic point exactly
        let born = born_distribution(&real.state, &real.observables).unwrap();
        for (a, b) in born.probs().iter().zip(real.distribution.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
        // saturation in the table convention
        let table = to_coefficient_table(&chsh(), 1);
        assert!(bell_value(&table, &real.distribution).unwrap().abs() < 1e-10);
        // the register state is diagonal in the product basis
        for r in 0..16 {
            for c in 0..16 {
                if r != c {
                    assert_eq!(real.state.rho().get(r, c), Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn saturating_point_exists_for_both_signs_of_every_member() {
        for ineq in crate::wwzb::enumerate_wwzb(2).unwrap() {
            for sign in [1i8, -1] {
                let real = saturating_realization(&ineq, sign).unwrap();
                let s = strategy_signed_score(&ineq, real.strategy);
                assert!((s - sign as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn table_functional_without_saturating_point_is_rejected() {
        // strictly positive on every strategy: no deterministic zero
        let scenario = Scenario { parties: 2 };
        let coeffs = vec![0.25; 16];
        let f = BellFunctional::new(scenario, coeffs).unwrap();
        assert!(matches!(
            saturating_realization_for_functional(&f, 1e-9),
            Err(Error::NoSaturatingPoint)
        ));
    }

    fn canonical_sign() -> i8 {
        // the canonical singlet assembly realizes signed score −√2
        -1
    }

    #[test]
    fn embedding_unit_probability_keeps_branch_score() {
        let state = fixtures::singlet();
        let slo = SloMap::identity(&[2, 2]);
        let emb = locc_embedding(
            &state,
            &slo,
            &fixtures::chsh_assembly(),
            &chsh(),
            canonical_sign(),
        )
        .unwrap();
        assert!((emb.success_probability - 1.0).abs() < 1e-12);
        assert!((emb.embedded_signed_score - emb.branch_signed_score).abs() < 1e-10);
    }

    #[test]
    fn embedding_half_probability_singlet() {
        let state = fixtures::singlet();
        let half = std::f64::consts::FRAC_1_SQRT_2; // √0.5 scaling gives π = 0.5
        let k = ComplexMatrix::identity(2).scale_re(half);
        let slo = SloMap::single(vec![k.clone(), ComplexMatrix::identity(2)]).unwrap();
        let emb = locc_embedding(
            &state,
            &slo,
            &fixtures::chsh_assembly(),
            &chsh(),
            canonical_sign(),
        )
        .unwrap();
        assert!((emb.success_probability - 0.5).abs() < 1e-12);
        let expect = (std::f64::consts::SQRT_2 + 1.0) / 2.0;
        assert!(
            (emb.embedded_signed_score - expect).abs() < 1e-10,
            "embedded {} vs {}",
            emb.embedded_signed_score,
            expect
        );
        assert!(emb.embedded_signed_score > 1.0);
    }

    #[test]
    fn embedding_linearity_on_random_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..20 {
            let p_target: f64 = 0.1 + 0.9 * rng.random::<f64>();
            let werner_p = 0.75 + 0.25 * rng.random::<f64>();
            let state = fixtures::werner(werner_p);
            let k = ComplexMatrix::identity(2).scale_re(p_target.sqrt());
            let slo = SloMap::single(vec![k, ComplexMatrix::identity(2)]).unwrap();
            let emb = match locc_embedding(
                &state,
                &slo,
                &fixtures::chsh_assembly(),
                &chsh(),
                canonical_sign(),
            ) {
                Ok(e) => e,
                Err(Error::BranchNotViolating { .. }) => continue,
                Err(e) => panic!("unexpected error {e}"),
            };
            let formula =
                emb.success_probability * emb.branch_signed_score + (1.0 - emb.success_probability);
            assert!(
                (emb.embedded_signed_score - formula).abs() < 1e-10,
                "embedded {} vs formula {}",
                emb.embedded_signed_score,
                formula
            );
            assert!(emb.embedded_signed_score > 1.0);
        }
    }

    #[test]
    fn embedding_rejects_non_violating_branch() {
        let state = fixtures::werner(0.5);
        let slo = SloMap::identity(&[2, 2]);
        assert!(matches!(
            locc_embedding(&state, &slo, &fixtures::chsh_assembly(), &chsh(), canonical_sign()),
            Err(Error::BranchNotViolating { .. })
        ));
    }

    fn small_budget(seed: u64) -> SearchBudget {
        SearchBudget {
            seesaw_restarts: 8,
            seesaw_sweep_limit: 200,
            filter_candidates: 24,
            rng_seed: seed,
            convergence_eps: 1e-10,
        }
    }

    #[test]
    fn certify_singlet_single_copy() {
        let outcome = certify_distillability(
            &fixtures::singlet(),
            1,
            &CertifyObjective::Inequality(chsh()),
            &small_budget(71),
        )
        .unwrap();
        match outcome {
            CertifyOutcome::Certificate(cert) => {
                assert!((cert.score - std::f64::consts::SQRT_2).abs() < 1e-6);
                assert_eq!(cert.group_size, 1);
                assert_eq!(cert.copies, 1);
                let report = verify_certificate(&cert, &fixtures::singlet()).unwrap();
                assert!(report.pass, "verification failed: {report:?}");
            }
            CertifyOutcome::NoCertificate { best_score } => {
                panic!("singlet must certify, best {best_score}")
            }
        }
    }

    #[test]
    fn certify_separable_state_yields_no_certificate() {
        let state = QuantumState::maximally_mixed(vec![2, 2]);
        let outcome = certify_distillability(
            &state,
            1,
            &CertifyObjective::Inequality(chsh()),
            &small_budget(73),
        )
        .unwrap();
        match outcome {
            CertifyOutcome::Certificate(c) => panic!("separable certified at {}", c.score),
            CertifyOutcome::NoCertificate { best_score } => {
                assert!(best_score <= 1.0 + 1e-8);
            }
        }
    }

    #[test]
    fn certify_ghz3_scan_mode() {
        // scan needs the default restart count: 8 restarts can stall on a
        // √2-scoring stationary point
        let b = SearchBudget { filter_candidates: 16, ..SearchBudget::new(79) };
        let outcome =
            certify_distillability(&fixtures::ghz(3), 1, &CertifyObjective::Scan, &b).unwrap();
        match outcome {
            CertifyOutcome::Certificate(cert) => {
                assert!((cert.score - 2.0).abs() < 1e-6, "score {}", cert.score);
                assert_eq!(cert.group_size, 1);
                let report = verify_certificate(&cert, &fixtures::ghz(3)).unwrap();
                assert!(report.pass);
            }
            CertifyOutcome::NoCertificate { best_score } => {
                panic!("GHZ3 must certify, best {best_score}")
            }
        }
    }

    #[test]
    fn certify_two_copies_verifies_through_the_reduction_path() {
        // two copies of a violating two-qubit state: local dimensions 4, so
        // the search exercises the qubit reduction and (when it wins) the
        // composed block filter; the stored witness must replay either way
        let state = fixtures::werner(0.95);
        let b = SearchBudget {
            seesaw_restarts: 6,
            filter_candidates: 12,
            ..SearchBudget::new(89)
        };
        let outcome =
            certify_distillability(&state, 2, &CertifyObjective::Inequality(chsh()), &b).unwrap();
        let CertifyOutcome::Certificate(cert) = outcome else {
            panic!("werner 0.95 must certify at two copies")
        };
        assert!(cert.score > 1.0);
        assert_eq!(cert.copies, 2);
        let report = verify_certificate(&cert, &state).unwrap();
        assert!(report.pass, "witness replay failed: {report:?}");
    }

    #[test]
    fn tampered_certificate_fails_verification() {
        let outcome = certify_distillability(
            &fixtures::singlet(),
            1,
            &CertifyObjective::Inequality(chsh()),
            &small_budget(83),
        )
        .unwrap();
        let CertifyOutcome::Certificate(mut cert) = outcome else {
            panic!("singlet must certify")
        };
        cert.score += 0.05;
        let report = verify_certificate(&cert, &fixtures::singlet()).unwrap();
        assert!(!report.pass);
    }
}
