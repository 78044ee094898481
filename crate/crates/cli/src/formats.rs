//! JSON document schemas. Every bellkit-defined file carries the envelope
//! {"format": "bellkit/1", "kind": "..."}; inequality files and
//! certificates use their bare schemas.

use serde::{Deserialize, Serialize};

use bellkit_core::correlations::{
    BellFunctional, CorrelationTensor, JointDistribution, LvmModel, Scenario,
};
use bellkit_core::qcore::{
    BinaryPovm, ComplexMatrix, MeasurementAssembly, QuantumState, SloMap, Tolerance,
};
use bellkit_core::wwzb::WwzbInequality;
use bellkit_core::Error as CoreError;

pub const FORMAT_TAG: &str = "bellkit/1";

#[derive(Debug)]
pub enum LoadError {
    Invalid(String),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<CoreError> for LoadError {
    fn from(e: CoreError) -> Self {
        LoadError::Invalid(e.to_string())
    }
}

fn check_envelope(format: &str, kind: &str, expected: &str) -> Result<(), LoadError> {
    if format != FORMAT_TAG {
        return Err(LoadError::Invalid(format!(
            "unsupported format tag {format:?}, expected {FORMAT_TAG:?}"
        )));
    }
    if kind != expected {
        return Err(LoadError::Invalid(format!(
            "document kind {kind:?} does not match expected {expected:?}"
        )));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
pub struct StateDoc {
    pub format: String,
    pub kind: String,
    pub dims: Vec<usize>,
    pub rho: ComplexMatrix,
}

impl StateDoc {
    pub fn of(state: &QuantumState) -> Self {
        Self {
            format: FORMAT_TAG.into(),
            kind: "state".into(),
            dims: state.dims().to_vec(),
            rho: state.rho().clone(),
        }
    }

    pub fn into_state(self, tol: Tolerance) -> Result<QuantumState, LoadError> {
        check_envelope(&self.format, &self.kind, "state")?;
        Ok(QuantumState::with_tolerance(self.dims, self.rho, tol)?)
    }
}

#[derive(Serialize, Deserialize)]
pub struct PovmDoc {
    pub effect_1: ComplexMatrix,
    pub effect_2: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
pub struct AssemblyDoc {
    pub format: String,
    pub kind: String,
    /// parties[n].settings[x-1]
    pub parties: Vec<PartyDoc>,
}

#[derive(Serialize, Deserialize)]
pub struct PartyDoc {
    pub settings: Vec<PovmDoc>,
}

impl AssemblyDoc {
    pub fn of(assembly: &MeasurementAssembly) -> Self {
        Self {
            format: FORMAT_TAG.into(),
            kind: "assembly".into(),
            parties: assembly
                .party_settings()
                .iter()
                .map(|pair| PartyDoc {
                    settings: pair
                        .iter()
                        .map(|p| PovmDoc {
                            effect_1: p.effect_1.clone(),
                            effect_2: p.effect_2.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn into_assembly(self, tol: Tolerance) -> Result<MeasurementAssembly, LoadError> {
        check_envelope(&self.format, &self.kind, "assembly")?;
        let parties = self
            .parties
            .into_iter()
            .map(|p| {
                if p.settings.len() != 2 {
                    return Err(LoadError::Invalid("each party needs exactly 2 settings".into()));
                }
                let mut it = p.settings.into_iter();
                let s1 = it.next().expect("len checked");
                let s2 = it.next().expect("len checked");
                Ok([
                    BinaryPovm::with_tolerance(s1.effect_1, s1.effect_2, tol)?,
                    BinaryPovm::with_tolerance(s2.effect_1, s2.effect_2, tol)?,
                ])
            })
            .collect::<Result<Vec<_>, LoadError>>()?;
        Ok(MeasurementAssembly::new(parties)?)
    }
}

#[derive(Serialize, Deserialize)]
pub struct SloDoc {
    pub format: String,
    pub kind: String,
    pub kraus: Vec<KrausDoc>,
}

#[derive(Serialize, Deserialize)]
pub struct KrausDoc {
    pub factors: Vec<ComplexMatrix>,
}

impl SloDoc {
    pub fn of(map: &SloMap) -> Self {
        Self {
            format: FORMAT_TAG.into(),
            kind: "slo".into(),
            kraus: map
                .kraus()
                .iter()
                .map(|factors| KrausDoc { factors: factors.clone() })
                .collect(),
        }
    }

    pub fn into_slo(self, tol: Tolerance) -> Result<SloMap, LoadError> {
        check_envelope(&self.format, &self.kind, "slo")?;
        let kraus: Vec<Vec<ComplexMatrix>> = self.kraus.into_iter().map(|k| k.factors).collect();
        Ok(SloMap::with_tolerance(kraus, tol)?)
    }
}

#[derive(Serialize, Deserialize)]
pub struct DistributionDoc {
    pub format: String,
    pub kind: String,
    pub parties: usize,
    /// Flat index: settings tuple (little-endian, party 1 fastest) outer,
    /// outcomes tuple inner.
    pub probs: Vec<f64>,
}

impl DistributionDoc {
    pub fn of(dist: &JointDistribution) -> Self {
        Self {
            format: FORMAT_TAG.into(),
            kind: "distribution".into(),
            parties: dist.scenario.parties,
            probs: dist.probs().to_vec(),
        }
    }

    pub fn into_distribution(self, tol: Tolerance) -> Result<JointDistribution, LoadError> {
        check_envelope(&self.format, &self.kind, "distribution")?;
        let scenario = Scenario::new(self.parties)?;
        Ok(JointDistribution::with_tolerance(scenario, self.probs, tol)?)
    }
}

#[derive(Serialize, Deserialize)]
pub struct CorrelatorsDoc {
    pub format: String,
    pub kind: String,
    pub parties: usize,
    pub values: Vec<f64>,
}

impl CorrelatorsDoc {
    pub fn of(c: &CorrelationTensor) -> Self {
        Self {
            format: FORMAT_TAG.into(),
            kind: "correlators".into(),
            parties: c.parties,
            values: c.values().to_vec(),
        }
    }

    pub fn into_tensor(self, tol: Tolerance) -> Result<CorrelationTensor, LoadError> {
        check_envelope(&self.format, &self.kind, "correlators")?;
        Ok(CorrelationTensor::with_tolerance(self.parties, self.values, tol)?)
    }
}

/// Bare inequality schema: {"type":"wwzb",...} or {"type":"table",...}.
#[derive(Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum InequalityDoc {
    #[serde(rename = "wwzb")]
    Wwzb { parties: usize, epsilon: String },
    #[serde(rename = "table")]
    Table { parties: usize, coeffs: Vec<f64> },
}

pub enum LoadedInequality {
    Wwzb(WwzbInequality),
    Table(BellFunctional),
}

impl InequalityDoc {
    pub fn load(self, tol: Tolerance) -> Result<LoadedInequality, LoadError> {
        match self {
            InequalityDoc::Wwzb { parties, epsilon } => {
                Ok(LoadedInequality::Wwzb(WwzbInequality::from_bitstring(parties, &epsilon)?))
            }
            InequalityDoc::Table { parties, coeffs } => {
                let scenario = Scenario::new(parties)?;
                Ok(LoadedInequality::Table(BellFunctional::with_tolerance(
                    scenario, coeffs, tol,
                )?))
            }
        }
    }
}

#[derive(Serialize)]
pub struct LvmModelDoc<'a> {
    pub format: &'static str,
    pub kind: &'static str,
    pub outcome: &'static str,
    pub parties: usize,
    pub weights: &'a [f64],
}

impl<'a> LvmModelDoc<'a> {
    pub fn of(model: &'a LvmModel) -> Self {
        Self {
            format: FORMAT_TAG,
            kind: "lvm-check",
            outcome: "model",
            parties: model.parties,
            weights: model.weights(),
        }
    }
}

#[derive(Serialize)]
pub struct SeparatingDoc<'a> {
    pub format: &'static str,
    pub kind: &'static str,
    pub outcome: &'static str,
    pub parties: usize,
    pub coeffs: &'a [f64],
    pub value: f64,
    pub min_deterministic_slack: f64,
}
