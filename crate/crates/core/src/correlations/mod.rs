//! Probability distributions, Born-rule evaluation, correlators,
//! coefficient-table Bell functionals, and LVM membership by linear
//! programming.
//!
//! Flat index conventions (also the wire format): a settings tuple
//! (x_1..x_N), x_n ∈ {1,2}, maps to x_idx = Σ_n (x_n − 1)·2^{n−1} (party 1
//! is the least significant bit); outcome tuples map the same way. A joint
//! distribution stores P(a|x) at `x_idx * 2^N + a_idx`. Outcome signs follow
//! the (−1)^a rule: outcome 1 ↦ −1, outcome 2 ↦ +1.

pub mod lp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::qcore::matrix::ComplexMatrix;
use crate::qcore::state::{MeasurementAssembly, QuantumState, Tolerance};

/// Separate, coarser tolerance for LP decisions.
pub const DEFAULT_LP_TOL: f64 = 1e-7;

/// Number of parties; settings and outcomes are fixed at two each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub parties: usize,
}

impl Scenario {
    pub const SETTINGS: usize = 2;
    pub const OUTCOMES: usize = 2;

    pub fn new(parties: usize) -> Result<Self> {
        if parties == 0 {
            return Err(Error::InvalidArgument("scenario needs at least one party".into()));
        }
        Ok(Self { parties })
    }

    /// 2^N: number of settings tuples (same count for outcome tuples).
    pub fn tuples(&self) -> usize {
        1usize << self.parties
    }

    /// 4^N: number of (x, a) pairs; also the number of deterministic strategies.
    pub fn table_len(&self) -> usize {
        self.tuples() * self.tuples()
    }

    pub fn strategy_count(&self) -> usize {
        self.table_len()
    }
}

/// (−1)^a with outcomes encoded 1 and 2: the product over parties for a flat
/// outcome index.
#[inline]
pub fn outcome_sign(parties: usize, a_idx: usize) -> f64 {
    // outcome bit 0 means a_n = 1 ↦ −1, bit 1 means a_n = 2 ↦ +1
    let minus_count = parties - (a_idx.count_ones() as usize);
    if minus_count.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Outcome (1 or 2) that local strategy `s` answers for setting x ∈ {1,2}.
#[inline]
pub fn strategy_outcome(s: usize, setting: usize) -> usize {
    ((s >> (setting - 1)) & 1) + 1
}

/// Local strategy index of party n inside a global strategy index.
#[inline]
pub fn local_strategy(lambda: usize, n: usize) -> usize {
    (lambda >> (2 * n)) & 3
}

/// Flat outcome index that strategy λ produces for the flat settings index.
#[inline]
pub fn strategy_outcome_index(parties: usize, lambda: usize, x_idx: usize) -> usize {
    let mut a_idx = 0usize;
    for n in 0..parties {
        let setting = ((x_idx >> n) & 1) + 1;
        let outcome = strategy_outcome(local_strategy(lambda, n), setting);
        a_idx |= (outcome - 1) << n;
    }
    a_idx
}

/// P(a_1..a_N | x_1..x_N) for all settings and outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub scenario: Scenario,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(scenario: Scenario, probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(scenario, probs, Tolerance::default())
    }

    pub fn with_tolerance(scenario: Scenario, probs: Vec<f64>, tol: Tolerance) -> Result<Self> {
        let tau = tol.tau;
        if probs.len() != scenario.table_len() {
            return Err(Error::DimensionMismatch {
                expected: scenario.table_len(),
                got: probs.len(),
            });
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < -tau {
                return Err(Error::InvalidDistribution(format!(
                    "entry {} is {:e}",
                    i, p
                )));
            }
        }
        let tuples = scenario.tuples();
        for x in 0..tuples {
            let sum: f64 = probs[x * tuples..(x + 1) * tuples].iter().sum();
            if (sum - 1.0).abs() > tau {
                return Err(Error::InvalidDistribution(format!(
                    "settings tuple {} sums to {:.12}",
                    x, sum
                )));
            }
        }
        let dist = Self { scenario, probs };
        dist.check_no_signaling(tau)?;
        Ok(dist)
    }

    /// Each party's marginal must not depend on its own setting being
    /// flipped, for every context of the other parties.
    fn check_no_signaling(&self, tau: f64) -> Result<()> {
        let n = self.scenario.parties;
        let tuples = self.scenario.tuples();
        let half = tuples >> 1;
        for party in 0..n {
            for x_rest in 0..half {
                let x0 = insert_bit(x_rest, party, 0);
                let x1 = insert_bit(x_rest, party, 1);
                for a_rest in 0..half {
                    let mut m0 = 0.0;
                    let mut m1 = 0.0;
                    for a_bit in 0..2 {
                        let a = insert_bit(a_rest, party, a_bit);
                        m0 += self.probs[x0 * tuples + a];
                        m1 += self.probs[x1 * tuples + a];
                    }
                    if (m0 - m1).abs() > tau {
                        return Err(Error::InvalidDistribution(format!(
                            "signaling on party {}: marginal gap {:.3e}",
                            party + 1,
                            (m0 - m1).abs()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, x_idx: usize, a_idx: usize) -> f64 {
        self.probs[x_idx * self.scenario.tuples() + a_idx]
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let tuples = scenario.tuples();
        let p = 1.0 / tuples as f64;
        Self { scenario, probs: vec![p; tuples * tuples] }
    }

    /// The deterministic distribution of strategy λ.
    pub fn deterministic(scenario: Scenario, lambda: usize) -> Self {
        let tuples = scenario.tuples();
        let mut probs = vec![0.0; tuples * tuples];
        for x in 0..tuples {
            let a = strategy_outcome_index(scenario.parties, lambda, x);
            probs[x * tuples + a] = 1.0;
        }
        Self { scenario, probs }
    }

    /// Convex mixture of compatible distributions.
    pub fn mix(parts: &[(f64, &JointDistribution)]) -> Result<Self> {
        let scenario =
            parts.first().ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?.1.scenario;
        let mut probs = vec![0.0; scenario.table_len()];
        for (w, d) in parts {
            if d.scenario != scenario {
                return Err(Error::ScenarioMismatch("mixing different scenarios".into()));
            }
            for (acc, p) in probs.iter_mut().zip(d.probs()) {
                *acc += w * p;
            }
        }
        Self::new(scenario, probs)
    }
}

#[inline]
fn insert_bit(rest: usize, pos: usize, bit: usize) -> usize {
    let low = rest & ((1 << pos) - 1);
    let high = rest >> pos;
    low | (bit << pos) | (high << (pos + 1))
}

/// Full-correlation functions C(x_1..x_N), one per settings tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTensor {
    pub parties: usize,
    values: Vec<f64>,
}

impl CorrelationTensor {
    pub fn new(parties: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(parties, values, Tolerance::default())
    }

    pub fn with_tolerance(parties: usize, values: Vec<f64>, tol: Tolerance) -> Result<Self> {
        if values.len() != 1 << parties {
            return Err(Error::DimensionMismatch { expected: 1 << parties, got: values.len() });
        }
        for &v in &values {
            if !v.is_finite() || v.abs() > 1.0 + tol.tau {
                return Err(Error::InvalidArgument(format!(
                    "correlator {:e} outside [-1, 1]",
                    v
                )));
            }
        }
        Ok(Self { parties, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, x_idx: usize) -> f64 {
        self.values[x_idx]
    }

    /// Product-form correlators of a deterministic strategy.
    pub fn of_strategy(parties: usize, lambda: usize) -> Self {
        let tuples = 1usize << parties;
        let mut values = vec![0.0; tuples];
        for (x, slot) in values.iter_mut().enumerate() {
            let a = strategy_outcome_index(parties, lambda, x);
            *slot = outcome_sign(parties, a);
        }
        Self { parties, values }
    }
}

/// C(x) = Σ_a (−1)^{Σ a_n} P(a|x).
pub fn correlators(dist: &JointDistribution) -> CorrelationTensor {
    let parties = dist.scenario.parties;
    let tuples = dist.scenario.tuples();
    let values: Vec<f64> = (0..tuples)
        .map(|x| (0..tuples).map(|a| outcome_sign(parties, a) * dist.prob(x, a)).sum())
        .collect();
    CorrelationTensor { parties, values }
}

/// P(a|x) = tr[ρ ⊗_n A_n(a_n|x_n)].
pub fn born_distribution(
    state: &QuantumState,
    assembly: &MeasurementAssembly,
) -> Result<JointDistribution> {
    born_distribution_with_tolerance(state, assembly, Tolerance::default())
}

pub fn born_distribution_with_tolerance(
    state: &QuantumState,
    assembly: &MeasurementAssembly,
    tol: Tolerance,
) -> Result<JointDistribution> {
    if !assembly.matches_state(state) {
        return Err(Error::ShapeMismatch(format!(
            "assembly dims {:?} do not match state dims {:?}",
            assembly.dims(),
            state.dims()
        )));
    }
    let scenario = Scenario::new(state.parties())?;
    let tuples = scenario.tuples();
    let parties = scenario.parties;
    let rows: Vec<Vec<f64>> = exec::map_indexed(tuples, |x_idx| {
        let mut row = Vec::with_capacity(tuples);
        for a_idx in 0..tuples {
            let mut op: Option<ComplexMatrix> = None;
            for n in 0..parties {
                let setting = ((x_idx >> n) & 1) + 1;
                let outcome = ((a_idx >> n) & 1) + 1;
                let effect = assembly.povm(n, setting).effect(outcome);
                op = Some(match op {
                    None => effect.clone(),
                    Some(acc) => acc.kron(effect),
                });
            }
            let e = op.expect("at least one party");
            row.push(state.rho().trace_product(&e).re);
        }
        row
    });
    let probs: Vec<f64> = rows.into_iter().flatten().collect();
    JointDistribution::with_tolerance(scenario, probs, tol)
}

/// Weights over the 4^N deterministic strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvmModel {
    pub parties: usize,
    weights: Vec<f64>,
}

impl LvmModel {
    pub fn new(parties: usize, weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(parties, weights, Tolerance::default())
    }

    pub fn with_tolerance(parties: usize, weights: Vec<f64>, tol: Tolerance) -> Result<Self> {
        let count = 1usize << (2 * parties);
        if weights.len() != count {
            return Err(Error::DimensionMismatch { expected: count, got: weights.len() });
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() || w < -tol.tau {
                return Err(Error::InvalidArgument(format!("negative weight {:e}", w)));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > tol.tau {
            return Err(Error::InvalidArgument(format!("weights sum to {:.12}", sum)));
        }
        Ok(Self { parties, weights })
    }

    pub fn uniform(parties: usize) -> Self {
        let count = 1usize << (2 * parties);
        Self { parties, weights: vec![1.0 / count as f64; count] }
    }

    pub fn point(parties: usize, lambda: usize) -> Self {
        let count = 1usize << (2 * parties);
        let mut weights = vec![0.0; count];
        weights[lambda] = 1.0;
        Self { parties, weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The mixture distribution Σ_λ p(λ) D_λ.
    pub fn induced_distribution(&self) -> JointDistribution {
        let scenario = Scenario { parties: self.parties };
        let tuples = scenario.tuples();
        let mut probs = vec![0.0; tuples * tuples];
        for (lambda, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for x in 0..tuples {
                let a = strategy_outcome_index(self.parties, lambda, x);
                probs[x * tuples + a] += w;
            }
        }
        JointDistribution { scenario, probs }
    }
}

/// Coefficient table β(a|x), LVM-nonnegative: β\[D_λ\] ≥ 0 for every
/// deterministic strategy. The slack check enumerates all 4^N strategies and
/// is run eagerly up to 6 parties; call `validate_slacks` for larger N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellFunctional {
    pub scenario: Scenario,
    coeffs: Vec<f64>,
}

impl BellFunctional {
    pub fn new(scenario: Scenario, coeffs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(scenario, coeffs, Tolerance::default())
    }

    pub fn with_tolerance(scenario: Scenario, coeffs: Vec<f64>, tol: Tolerance) -> Result<Self> {
        if coeffs.len() != scenario.table_len() {
            return Err(Error::DimensionMismatch {
                expected: scenario.table_len(),
                got: coeffs.len(),
            });
        }
        let f = Self { scenario, coeffs };
        if scenario.parties <= 6 {
            f.validate_slacks(tol.tau)?;
        }
        Ok(f)
    }

    pub(crate) fn new_unchecked(scenario: Scenario, coeffs: Vec<f64>) -> Self {
        Self { scenario, coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn validate_slacks(&self, tau: f64) -> Result<()> {
        let (slack, strategy) = self.min_deterministic_slack();
        if slack < -tau {
            return Err(Error::NegativeSlack { slack, strategy });
        }
        Ok(())
    }

    /// Value on a deterministic strategy, summing only the 2^N chosen cells.
    pub fn value_on_strategy(&self, lambda: usize) -> f64 {
        let tuples = self.scenario.tuples();
        let mut acc = 0.0;
        for x in 0..tuples {
            let a = strategy_outcome_index(self.scenario.parties, lambda, x);
            acc += self.coeffs[x * tuples + a];
        }
        acc
    }

    /// Minimum slack over all deterministic strategies and its argmin.
    pub fn min_deterministic_slack(&self) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for lambda in 0..self.scenario.strategy_count() {
            let v = self.value_on_strategy(lambda);
            if v < best {
                best = v;
                arg = lambda;
            }
        }
        (best, arg)
    }
}

/// β\[P\] = Σ β(a|x) P(a|x). Negative value signals a Bell violation.
pub fn bell_value(functional: &BellFunctional, dist: &JointDistribution) -> Result<f64> {
    if functional.scenario != dist.scenario {
        return Err(Error::ScenarioMismatch(format!(
            "functional has {} parties, distribution {}",
            functional.scenario.parties, dist.scenario.parties
        )));
    }
    Ok(functional.coeffs.iter().zip(dist.probs()).map(|(c, p)| c * p).sum())
}

/// Outcome of the LVM membership test.
#[derive(Debug, Clone)]
pub enum LvmDecision {
    /// A model whose mixture reproduces the distribution within the LP
    /// tolerance.
    Model(LvmModel),
    /// A separating functional: nonnegative on every deterministic strategy
    /// (minimum slack normalized to 0), strictly negative on the input.
    Separating(BellFunctional),
}

/// Decides membership in the LVM polytope by phase-1 LP over the 4^N
/// deterministic strategies. Guarded at N ≤ 8. Memory grows as 16^N.
pub fn lvm_feasibility(dist: &JointDistribution) -> Result<LvmDecision> {
    lvm_feasibility_with_tol(dist, DEFAULT_LP_TOL)
}

pub fn lvm_feasibility_with_tol(dist: &JointDistribution, lp_tol: f64) -> Result<LvmDecision> {
    let parties = dist.scenario.parties;
    if parties > 8 {
        return Err(Error::SizeGuard(format!(
            "LVM membership enumerates 4^N strategies; N = {} > 8",
            parties
        )));
    }
    let tuples = dist.scenario.tuples();
    let rows = dist.scenario.table_len();
    let cols = dist.scenario.strategy_count();
    let mut a = vec![0.0f64; rows * cols];
    for lambda in 0..cols {
        for x in 0..tuples {
            let out = strategy_outcome_index(parties, lambda, x);
            let row = x * tuples + out;
            a[row * cols + lambda] = 1.0;
        }
    }
    match lp::solve_equality_nonneg(&a, rows, cols, dist.probs(), lp_tol) {
        lp::PhaseOne::Feasible(raw) => {
            let mut weights: Vec<f64> = raw.iter().map(|&w| w.max(0.0)).collect();
            let sum: f64 = weights.iter().sum();
            if sum <= 0.0 {
                return Err(Error::Numerical("LP returned an empty model".into()));
            }
            for w in &mut weights {
                *w /= sum;
            }
            Ok(LvmDecision::Model(LvmModel { parties, weights }))
        }
        lp::PhaseOne::Infeasible(y) => {
            // scale for a stable magnitude, then shift every coefficient by
            // a per-(x,a) constant so the minimum deterministic slack is 0
            let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let coeffs: Vec<f64> = y.iter().map(|v| v / scale).collect();
            let raw = BellFunctional::new_unchecked(dist.scenario, coeffs);
            let (min_slack, _) = raw.min_deterministic_slack();
            let shift = min_slack / tuples as f64;
            let coeffs: Vec<f64> = raw.coeffs.iter().map(|c| c - shift).collect();
            Ok(LvmDecision::Separating(BellFunctional::new_unchecked(dist.scenario, coeffs)))
        }
    }
}
