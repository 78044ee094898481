//! The complete family of full-correlation two-setting Bell inequalities
//! (WWZB), normalized scores, the Fourier-sum condition, CHSH as the N = 2
//! member, and the group-size certificate arithmetic.
//!
//! A family member is a sign function ε: {0,1}^N → {±1}; its coefficients
//! are g(x) = Σ_r ε(r)·(−1)^{⟨r, x−1⟩} (always even integers, Parseval
//! Σ_x g(x)² = 4^N) and the normalized score of a correlation tensor is
//! 2^{−N}|Σ_x g(x) C(x)|, so every deterministic strategy scores exactly 1.

use serde::{Deserialize, Serialize};

use crate::correlations::{
    outcome_sign, strategy_outcome_index, BellFunctional, CorrelationTensor, Scenario,
};
use crate::error::{Error, Result};
use crate::qcore::state::{MeasurementAssembly, SloMap};

/// One member of the WWZB family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WwzbInequality {
    parties: usize,
    /// epsilon[r]: false ↦ ε(r) = +1, true ↦ ε(r) = −1. Index r is
    /// little-endian in party order (party 1 = least significant bit).
    epsilon: Vec<bool>,
    /// Cached coefficients g(x), indexed by the settings bits x − 1.
    g: Vec<i64>,
}

impl WwzbInequality {
    pub fn new(parties: usize, epsilon: Vec<bool>) -> Result<Self> {
        if parties == 0 {
            return Err(Error::InvalidArgument("need at least one party".into()));
        }
        let tuples = 1usize << parties;
        if epsilon.len() != tuples {
            return Err(Error::DimensionMismatch { expected: tuples, got: epsilon.len() });
        }
        let mut g = vec![0i64; tuples];
        for (x, slot) in g.iter_mut().enumerate() {
            let mut acc = 0i64;
            for (r, &bit) in epsilon.iter().enumerate() {
                let eps = if bit { -1i64 } else { 1i64 };
                let chi = if (r & x).count_ones() % 2 == 0 { 1i64 } else { -1i64 };
                acc += eps * chi;
            }
            *slot = acc;
        }
        debug_assert_eq!(
            g.iter().map(|&v| v * v).sum::<i64>(),
            (tuples * tuples) as i64,
            "Parseval for a ±1 spectrum"
        );
        Ok(Self { parties, epsilon, g })
    }

    /// Member from its epsilon bitstring ("0" = +1, "1" = −1, index r reads
    /// left to right).
    pub fn from_bitstring(parties: usize, bits: &str) -> Result<Self> {
        let epsilon: Vec<bool> = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("bad epsilon bit {:?}", other))),
            })
            .collect::<Result<_>>()?;
        Self::new(parties, epsilon)
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn epsilon(&self) -> &[bool] {
        &self.epsilon
    }

    pub fn epsilon_bitstring(&self) -> String {
        self.epsilon.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.g
    }

    /// The member with every ε sign flipped; its signed score is the
    /// negation of this one's.
    pub fn negated(&self) -> Self {
        let epsilon = self.epsilon.iter().map(|b| !b).collect();
        Self::new(self.parties, epsilon).expect("negation preserves validity")
    }

    /// s(C) = 2^{−N} Σ_x g(x) C(x), without the absolute value.
    pub fn signed_score(&self, c: &CorrelationTensor) -> Result<f64> {
        if c.parties != self.parties {
            return Err(Error::ScenarioMismatch(format!(
                "inequality has {} parties, tensor {}",
                self.parties, c.parties
            )));
        }
        let scale = 1.0 / (1usize << self.parties) as f64;
        Ok(scale * self.g.iter().zip(c.values()).map(|(&g, &v)| g as f64 * v).sum::<f64>())
    }

    /// Normalized score 2^{−N}|Σ_x g(x) C(x)|; LVM bound is 1.
    pub fn score(&self, c: &CorrelationTensor) -> Result<f64> {
        Ok(self.signed_score(c)?.abs())
    }

    /// Max |signed score| over all 4^N deterministic strategies (brute
    /// force; equals 1 for every member).
    pub fn deterministic_maximum(&self) -> f64 {
        let mut best = 0.0f64;
        for lambda in 0..(1usize << (2 * self.parties)) {
            let c = CorrelationTensor::of_strategy(self.parties, lambda);
            best = best.max(self.score(&c).expect("matching parties"));
        }
        best
    }
}

/// Spec-named free function for the normalized score.
pub fn wwzb_score(ineq: &WwzbInequality, c: &CorrelationTensor) -> Result<f64> {
    ineq.score(c)
}

/// The CHSH inequality: the N = 2 member with score
/// ½|C(1,1) + C(1,2) + C(2,1) − C(2,2)|.
pub fn chsh() -> WwzbInequality {
    // ε(r) = −1 only at r = 11, giving g = (2, 2, 2, −2)
    WwzbInequality::new(2, vec![false, false, false, true]).expect("static member")
}

/// All 2^{2^N} family members, in epsilon-mask order. Guarded at N ≤ 4.
pub fn enumerate_wwzb(parties: usize) -> Result<impl Iterator<Item = WwzbInequality>> {
    if parties == 0 || parties > 4 {
        return Err(Error::SizeGuard(format!(
            "family enumeration has 2^(2^N) members; N = {} not in 1..=4",
            parties
        )));
    }
    let tuples = 1usize << parties;
    let count: u64 = 1u64 << tuples;
    Ok((0..count).map(move |mask| {
        let epsilon: Vec<bool> = (0..tuples).map(|r| (mask >> r) & 1 == 1).collect();
        WwzbInequality::new(parties, epsilon).expect("mask enumeration is valid")
    }))
}

/// ξ(r) = 2^{−N} Σ_x (−1)^{⟨r, x−1⟩} C(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSpectrum {
    pub parties: usize,
    xi: Vec<f64>,
}

impl FourierSpectrum {
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// Σ_r |ξ(r)|: equals the maximum score over the whole family, and the
    /// LVM-realizability condition for correlators is Σ ≤ 1.
    pub fn l1(&self) -> f64 {
        self.xi.iter().map(|v| v.abs()).sum()
    }

    /// The member maximizing the signed score for these correlators:
    /// ε(r) = sign(ξ(r)), zeros toward +1.
    pub fn best_member(&self) -> WwzbInequality {
        let epsilon = self.xi.iter().map(|&v| v < 0.0).collect();
        WwzbInequality::new(self.parties, epsilon).expect("sign pattern is valid")
    }

    /// Inverse transform C(x) = Σ_r ξ(r) (−1)^{⟨r, x−1⟩}.
    pub fn inverse(&self) -> Vec<f64> {
        let tuples = 1usize << self.parties;
        (0..tuples)
            .map(|x| {
                self.xi
                    .iter()
                    .enumerate()
                    .map(|(r, &v)| if (r & x).count_ones() % 2 == 0 { v } else { -v })
                    .sum()
            })
            .collect()
    }
}

pub fn fourier_spectrum(c: &CorrelationTensor) -> FourierSpectrum {
    let parties = c.parties;
    let tuples = 1usize << parties;
    let scale = 1.0 / tuples as f64;
    let xi = (0..tuples)
        .map(|r| {
            scale
                * c.values()
                    .iter()
                    .enumerate()
                    .map(|(x, &v)| if (r & x).count_ones() % 2 == 0 { v } else { -v })
                    .sum::<f64>()
        })
        .collect();
    FourierSpectrum { parties, xi }
}

/// Soft sanity bound: the largest score any quantum state can reach is
/// 2^{(N−1)/2}. Exceeding it (beyond 1e-6) indicates an input or numerics
/// problem and is reported as a warning, never a failure.
pub fn exceeds_quantum_bound(parties: usize, score: f64) -> bool {
    score > 2f64.powf((parties as f64 - 1.0) / 2.0) + 1e-6
}

/// The unique G with 2^{(N−G−1)/2} < score ≤ 2^{(N−G)/2}, clamped to
/// [1, N−1]. Closed form G = ⌊N − 2·log₂(score)⌋ with a one-ulp-scale nudge
/// so exact boundary scores land on the closed right end of the interval.
pub fn group_size_bound(parties: usize, score: f64) -> Result<usize> {
    let tau = 1e-9;
    if parties < 2 {
        return Err(Error::InvalidArgument("group bound needs N >= 2".into()));
    }
    if score.is_nan() || score <= 1.0 + tau {
        return Err(Error::NoGroupCertificate { score });
    }
    let raw = (parties as f64 - 2.0 * score.log2() + 1e-12).floor() as i64;
    let g = raw.clamp(1, parties as i64 - 1) as usize;
    Ok(g)
}

/// Reference route for the same bound: scan G = 1..N−1 against the interval.
pub fn group_size_bound_scan(parties: usize, score: f64) -> Result<usize> {
    let tau = 1e-9;
    if parties < 2 {
        return Err(Error::InvalidArgument("group bound needs N >= 2".into()));
    }
    if score.is_nan() || score <= 1.0 + tau {
        return Err(Error::NoGroupCertificate { score });
    }
    for g in (1..parties).rev() {
        // largest G whose interval contains the score wins
        let lo = 2f64.powf((parties as f64 - g as f64 - 1.0) / 2.0);
        let hi = 2f64.powf((parties as f64 - g as f64) / 2.0);
        if score > lo && score <= hi * (1.0 + 1e-12) {
            return Ok(g);
        }
    }
    // beyond the G = 1 interval means beyond the quantum bound; strongest claim
    Ok(1)
}

/// Bridge to the coefficient-table convention: a table with
/// β\[P\] = 2^N (1 − sign·s(P)), so β ≥ 0 on LVM and β < 0 iff sign·s(P) > 1.
pub fn to_coefficient_table(ineq: &WwzbInequality, sign: i8) -> BellFunctional {
    assert!(sign == 1 || sign == -1, "sign must be ±1");
    let parties = ineq.parties;
    let tuples = 1usize << parties;
    let mut coeffs = vec![0.0; tuples * tuples];
    for x in 0..tuples {
        for a in 0..tuples {
            coeffs[x * tuples + a] =
                1.0 - (sign as f64) * (ineq.g[x] as f64) * outcome_sign(parties, a);
        }
    }
    BellFunctional::new_unchecked(Scenario { parties }, coeffs)
}

/// Witness that achieves a certified score: the filter, the measurement
/// settings, and the family member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateWitness {
    pub filter_kraus: SloMap,
    pub assembly: MeasurementAssembly,
    pub inequality: InequalityRecord,
}

/// Serialized form of a family member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRecord {
    #[serde(rename = "type")]
    pub kind: String,
    pub parties: usize,
    pub epsilon: String,
}

impl InequalityRecord {
    pub fn of(ineq: &WwzbInequality) -> Self {
        Self { kind: "wwzb".into(), parties: ineq.parties(), epsilon: ineq.epsilon_bitstring() }
    }

    pub fn to_inequality(&self) -> Result<WwzbInequality> {
        if self.kind != "wwzb" {
            return Err(Error::InvalidArgument(format!(
                "expected a wwzb inequality record, got {:?}",
                self.kind
            )));
        }
        WwzbInequality::from_bitstring(self.parties, &self.epsilon)
    }
}

/// Distillability certificate per the group-size result: holds for copies m
/// with the parties joining into groups of at most G.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillabilityCertificate {
    pub parties: usize,
    pub copies: usize,
    pub score: f64,
    pub group_size: usize,
    pub inequality: InequalityRecord,
    pub filter_kraus: SloMap,
    pub assembly: MeasurementAssembly,
    pub toolkit_version: String,
    pub seed: u64,
}

impl DistillabilityCertificate {
    /// Interval invariant: 2^{(N−G−1)/2} < score ≤ 2^{(N−G)/2}, score > 1,
    /// 1 ≤ G ≤ N−1.
    pub fn validate_interval(&self) -> Result<()> {
        let n = self.parties as f64;
        let g = self.group_size as f64;
        if self.score <= 1.0 {
            return Err(Error::NoGroupCertificate { score: self.score });
        }
        if self.group_size < 1 || self.group_size + 1 > self.parties {
            return Err(Error::InvalidArgument(format!(
                "group size {} outside [1, N-1]",
                self.group_size
            )));
        }
        let lo = 2f64.powf((n - g - 1.0) / 2.0);
        let hi = 2f64.powf((n - g) / 2.0);
        let slop = 1e-9;
        // a clamped G = 1 may sit above its interval only past the quantum bound
        let above_ok = self.group_size == 1 && self.score > hi;
        if !(self.score > lo - slop && (self.score <= hi * (1.0 + 1e-12) || above_ok)) {
            return Err(Error::InvalidArgument(format!(
                "score {} outside the interval ({}, {}] for G = {}",
                self.score, lo, hi, self.group_size
            )));
        }
        Ok(())
    }
}

/// Signed score of a deterministic strategy: always ±1 for every member.
pub fn strategy_signed_score(ineq: &WwzbInequality, lambda: usize) -> f64 {
    let parties = ineq.parties;
    let tuples = 1usize << parties;
    let mut acc = 0i64;
    for x in 0..tuples {
        let a = strategy_outcome_index(parties, lambda, x);
        let sign = if outcome_sign(parties, a) > 0.0 { 1i64 } else { -1i64 };
        acc += ineq.g[x] * sign;
    }
    acc as f64 / tuples as f64
}
