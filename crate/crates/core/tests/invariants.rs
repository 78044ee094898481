//! Property tests for the cross-module invariants that hold for arbitrary
//! (not just seeded) inputs.

use proptest::prelude::*;

use bellkit_core::correlations::{
    bell_value, correlators, lvm_feasibility, CorrelationTensor, JointDistribution, LvmDecision,
    LvmModel, Scenario,
};
use bellkit_core::qcore::{ComplexMatrix, QuantumState, SloMap};
use bellkit_core::wwzb::{
    chsh, fourier_spectrum, group_size_bound, group_size_bound_scan, to_coefficient_table,
    WwzbInequality,
};

fn normalized_weights(raw: Vec<f64>) -> Vec<f64> {
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The Fourier transform of correlators inverts exactly, and its l1 norm
    /// bounds every member's score.
    #[test]
    fn fourier_round_trip_and_duality(values in proptest::collection::vec(-1.0f64..1.0, 8)) {
        let c = CorrelationTensor::new(3, values.clone()).unwrap();
        let spec = fourier_spectrum(&c);
        for (a, b) in spec.inverse().iter().zip(&values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let best = spec.best_member();
        prop_assert!((best.score(&c).unwrap() - spec.l1()).abs() < 1e-12);
    }

    /// Every LVM mixture scores at most 1 on every family member, satisfies
    /// the Fourier condition, and passes the LP membership test.
    #[test]
    fn lvm_mixtures_are_sound(raw in proptest::collection::vec(0.001f64..1.0, 16)) {
        let model = LvmModel::new(2, normalized_weights(raw)).unwrap();
        let dist = model.induced_distribution();
        let c = correlators(&dist);
        prop_assert!(fourier_spectrum(&c).l1() <= 1.0 + 1e-9);
        prop_assert!(chsh().score(&c).unwrap() <= 1.0 + 1e-10);
        prop_assert!(matches!(lvm_feasibility(&dist).unwrap(), LvmDecision::Model(_)));
    }

    /// The coefficient-table bridge: bell_value(table, P) = 2^N (1 − sign·s(P)).
    #[test]
    fn bridge_identity(
        mask in 0u64..16,
        sign in prop_oneof![Just(1i8), Just(-1i8)],
        raw in proptest::collection::vec(0.001f64..1.0, 16),
    ) {
        let epsilon = (0..4).map(|r| (mask >> r) & 1 == 1).collect();
        let ineq = WwzbInequality::new(2, epsilon).unwrap();
        let table = to_coefficient_table(&ineq, sign);
        let dist = LvmModel::new(2, normalized_weights(raw)).unwrap().induced_distribution();
        let s = ineq.signed_score(&correlators(&dist)).unwrap();
        let expect = 4.0 * (1.0 - sign as f64 * s);
        prop_assert!((bell_value(&table, &dist).unwrap() - expect).abs() < 1e-10);
    }

    /// bell_value is linear in the distribution.
    #[test]
    fn bell_value_linearity(
        alpha in 0.0f64..1.0,
        lambda_a in 0usize..16,
        lambda_b in 0usize..16,
    ) {
        let scenario = Scenario::new(2).unwrap();
        let table = to_coefficient_table(&chsh(), 1);
        let p = JointDistribution::deterministic(scenario, lambda_a);
        let q = JointDistribution::deterministic(scenario, lambda_b);
        let mixed = JointDistribution::mix(&[(alpha, &p), (1.0 - alpha, &q)]).unwrap();
        let lhs = bell_value(&table, &mixed).unwrap();
        let rhs = alpha * bell_value(&table, &p).unwrap()
            + (1.0 - alpha) * bell_value(&table, &q).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    /// Closed-form group bound agrees with the interval scan everywhere.
    #[test]
    fn group_bound_routes_agree(parties in 2usize..9, frac in 0.0001f64..1.0) {
        let hi = 2f64.powf((parties as f64 - 1.0) / 2.0);
        let score = 1.0 + frac * (hi - 1.0);
        prop_assume!(score > 1.0 + 1e-9);
        let closed = group_size_bound(parties, score).unwrap();
        let scanned = group_size_bound_scan(parties, score).unwrap();
        prop_assert_eq!(closed, scanned);
        // interval invariant
        let lo = 2f64.powf((parties as f64 - closed as f64 - 1.0) / 2.0);
        let hi_g = 2f64.powf((parties as f64 - closed as f64) / 2.0);
        prop_assert!(score > lo - 1e-12 && score <= hi_g * (1.0 + 1e-12));
    }

    /// Stochastic maps never produce success probabilities outside [0, 1],
    /// and their normalized outputs are valid states.
    #[test]
    fn slo_probability_is_bounded(
        t1 in 0.05f64..1.0,
        t2 in 0.05f64..1.0,
        mix in 0.0f64..1.0,
    ) {
        let f1 = ComplexMatrix::from_real_diag(&[1.0, t1]);
        let f2 = ComplexMatrix::from_real_diag(&[t2, 1.0]);
        let map = SloMap::single(vec![f1, f2]).unwrap();
        let state = {
            // interpolate between the singlet and the maximally mixed state
            let s = bellkit_core::fixtures::singlet();
            let m = QuantumState::maximally_mixed(vec![2, 2]);
            let rho = s.rho().scale_re(mix).add(&m.rho().scale_re(1.0 - mix));
            QuantumState::new(vec![2, 2], rho).unwrap()
        };
        let (out, prob) = bellkit_core::qcore::apply_slo(&map, &state).unwrap();
        prop_assert!(prob > 0.0 && prob <= 1.0 + 1e-9);
        prop_assert!((out.rho().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(out.rho().hermitian_defect() < 1e-12);
    }

    /// Tensor-permutation consistency: regrouping copies preserves trace and
    /// purity for arbitrary interpolated states.
    #[test]
    fn tensor_power_preserves_spectrum_summaries(mix in 0.0f64..1.0) {
        let s = bellkit_core::fixtures::singlet();
        let m = QuantumState::maximally_mixed(vec![2, 2]);
        let rho = s.rho().scale_re(mix).add(&m.rho().scale_re(1.0 - mix));
        let state = QuantumState::new(vec![2, 2], rho).unwrap();
        let squared = bellkit_core::qcore::tensor_power(&state, 2).unwrap();
        prop_assert!((squared.rho().trace().re - 1.0).abs() < 1e-12);
        let p = state.purity();
        prop_assert!((squared.purity() - p * p).abs() < 1e-10);
    }
}
