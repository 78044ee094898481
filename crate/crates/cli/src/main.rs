//! bellkit command line: evaluate, reduce, optimize, certify, and verify
//! Bell-inequality experiments described by JSON documents.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input, 3 semantic
//! "not found" (no certificate within budget, or a distribution outside the
//! LVM polytope in `lvm-check`).

#![forbid(unsafe_code)]

mod formats;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use bellkit_core::correlations::{
    bell_value, born_distribution_with_tolerance, correlators, lvm_feasibility_with_tol,
    LvmDecision,
};
use bellkit_core::io::to_canonical_json;
use bellkit_core::optimize::{seesaw_objective, Objective, SearchBudget};
use bellkit_core::protocols::{
    certify_distillability_with_cap, locc_embedding_with_tolerance, verify_certificate_with_cap,
    CertifyObjective, CertifyOutcome,
};
use bellkit_core::qcore::Tolerance;
use bellkit_core::wwzb::{
    enumerate_wwzb, exceeds_quantum_bound, fourier_spectrum, DistillabilityCertificate,
};
use bellkit_core::Error as CoreError;

use formats::{
    AssemblyDoc, CorrelatorsDoc, DistributionDoc, InequalityDoc, LoadError, LoadedInequality,
    LvmModelDoc, SeparatingDoc, SloDoc, StateDoc, FORMAT_TAG,
};

#[derive(Parser)]
#[command(
    name = "bellkit",
    version,
    about = "Bell inequality evaluation, optimization, and distillability certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Algebraic validation tolerance
    #[arg(long, global = true, env = "BELLKIT_TOL", default_value_t = 1e-9)]
    tol: f64,

    /// Linear-programming tolerance
    #[arg(long = "lp-tol", global = true, env = "BELLKIT_LP_TOL", default_value_t = 1e-7)]
    lp_tol: f64,

    /// Cap on the total Hilbert-space dimension of tensor powers
    #[arg(long = "dim-cap", global = true, env = "BELLKIT_DIM_CAP", default_value_t = 4096)]
    dim_cap: usize,

    /// Write the JSON result here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BudgetArgs {
    /// RNG seed; required so every run is reproducible
    #[arg(long)]
    seed: u64,

    /// Seesaw restarts per search
    #[arg(long, default_value_t = 20)]
    restarts: usize,

    /// Seesaw sweep limit per restart
    #[arg(long, default_value_t = 500)]
    sweeps: usize,

    /// Random filter candidates in certify searches
    #[arg(long, default_value_t = 200)]
    filters: usize,

    /// Seesaw convergence threshold
    #[arg(long, default_value_t = 1e-10)]
    eps: f64,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget {
            seesaw_restarts: self.restarts,
            seesaw_sweep_limit: self.sweeps,
            filter_candidates: self.filters,
            rng_seed: self.seed,
            convergence_eps: self.eps,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Born statistics of a state under an assembly, with optional
    /// inequality evaluation
    Eval {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        assembly: PathBuf,
        #[arg(long)]
        inequality: Option<PathBuf>,
    },
    /// Qubit reduction of a state with projective settings
    Reduce {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        assembly: PathBuf,
    },
    /// Seesaw search for the best assembly
    Optimize {
        #[arg(long)]
        state: PathBuf,
        /// Family member to maximize (omit with --scan)
        #[arg(long, conflicts_with = "scan")]
        inequality: Option<PathBuf>,
        /// Maximize over the whole family via the Fourier condition
        #[arg(long)]
        scan: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Multi-copy filter search and distillability certificate
    Certify {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        copies: usize,
        #[arg(long, conflicts_with = "scan")]
        inequality: Option<PathBuf>,
        #[arg(long)]
        scan: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// LVM membership of a distribution: model or separating functional
    LvmCheck {
        #[arg(long)]
        distribution: PathBuf,
    },
    /// List the inequality family or check correlators against it
    Wwzb {
        #[arg(long)]
        parties: usize,
        #[arg(long, conflicts_with = "check")]
        list: bool,
        #[arg(long)]
        check: Option<PathBuf>,
    },
    /// Deterministic-protocol embedding of a stochastic violation
    Embed {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        slo: PathBuf,
        #[arg(long)]
        assembly: PathBuf,
        #[arg(long)]
        inequality: PathBuf,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        sign: i8,
    },
    /// Re-evaluate a certificate from scratch against its state
    Verify {
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long)]
        state: PathBuf,
    },
}

enum AppError {
    Invalid(String),
    Internal(String),
}

impl From<LoadError> for AppError {
    fn from(e: LoadError) -> Self {
        AppError::Invalid(e.to_string())
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Numerical(_) => AppError::Internal(e.to_string()),
            other => AppError::Invalid(other.to_string()),
        }
    }
}

enum Outcome {
    Found(String),
    NotFound(String),
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| AppError::Invalid(format!("cannot parse {}: {e}", path.display())))
}

fn emit(cli_out: &Option<PathBuf>, json: String) -> Result<(), AppError> {
    match cli_out {
        Some(path) => std::fs::write(path, json + "\n")
            .map_err(|e| AppError::Internal(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct EvalReport {
    format: &'static str,
    kind: &'static str,
    distribution: DistributionDoc,
    correlators: CorrelatorsDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    signed_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bell_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quantum_bound_warning: Option<bool>,
}

#[derive(Serialize)]
struct ReduceComponentDoc {
    weight: f64,
    block_index: Vec<usize>,
    state: StateDoc,
    assembly: AssemblyDoc,
}

#[derive(Serialize)]
struct ReduceReport {
    format: &'static str,
    kind: &'static str,
    components: Vec<ReduceComponentDoc>,
}

#[derive(Serialize)]
struct OptimizeDoc {
    format: &'static str,
    kind: &'static str,
    best_score: f64,
    inequality: bellkit_core::wwzb::InequalityRecord,
    assembly: AssemblyDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    filter_kraus: Option<SloDoc>,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
    quantum_bound_warning: bool,
}

#[derive(Serialize)]
struct NoCertificateDoc {
    format: &'static str,
    kind: &'static str,
    outcome: &'static str,
    best_score: f64,
}

#[derive(Serialize)]
struct VerifyDoc {
    format: &'static str,
    kind: &'static str,
    pass: bool,
    stored_score: f64,
    recomputed_score: f64,
    stored_group_size: usize,
    recomputed_group_size: usize,
}

#[derive(Serialize)]
struct WwzbListDoc {
    format: &'static str,
    kind: &'static str,
    parties: usize,
    count: usize,
    inequalities: Vec<InequalityDoc>,
}

#[derive(Serialize)]
struct WwzbCheckDoc {
    format: &'static str,
    kind: &'static str,
    parties: usize,
    l1: f64,
    lvm_realizable: bool,
    best: InequalityDoc,
    best_score: f64,
    quantum_bound_warning: bool,
}

#[derive(Serialize)]
struct EmbedDoc {
    format: &'static str,
    kind: &'static str,
    success_probability: f64,
    sign: i8,
    branch_signed_score: f64,
    embedded_signed_score: f64,
    embedded_state: StateDoc,
    embedded_assembly: AssemblyDoc,
}

fn run(cli: &Cli) -> Result<Outcome, AppError> {
    let tol = Tolerance::new(cli.tol).map_err(|e| AppError::Invalid(e.to_string()))?;
    match &cli.command {
        Command::Eval { state, assembly, inequality } => {
            let state = load_json::<StateDoc>(state)?.into_state(tol)?;
            let assembly = load_json::<AssemblyDoc>(assembly)?.into_assembly(tol)?;
            let dist = born_distribution_with_tolerance(&state, &assembly, tol)?;
            let c = correlators(&dist);
            let mut report = EvalReport {
                format: FORMAT_TAG,
                kind: "eval-report",
                distribution: DistributionDoc::of(&dist),
                correlators: CorrelatorsDoc::of(&c),
                score: None,
                signed_score: None,
                bell_value: None,
                quantum_bound_warning: None,
            };
            if let Some(path) = inequality {
                match load_json::<InequalityDoc>(path)?.load(tol)? {
                    LoadedInequality::Wwzb(ineq) => {
                        let signed = ineq.signed_score(&c)?;
                        report.score = Some(signed.abs());
                        report.signed_score = Some(signed);
                        report.quantum_bound_warning =
                            Some(exceeds_quantum_bound(state.parties(), signed.abs()));
                    }
                    LoadedInequality::Table(f) => {
                        report.bell_value = Some(bell_value(&f, &dist)?);
                    }
                }
            }
            Ok(Outcome::Found(to_canonical_json(&report)))
        }

        Command::Reduce { state, assembly } => {
            let state = load_json::<StateDoc>(state)?.into_state(tol)?;
            let assembly = load_json::<AssemblyDoc>(assembly)?.into_assembly(tol)?;
            let reduction =
                bellkit_core::jordan::qubit_reduce_with_tolerance(&state, &assembly, tol)?;
            let report = ReduceReport {
                format: FORMAT_TAG,
                kind: "reduction",
                components: reduction
                    .components
                    .iter()
                    .map(|c| ReduceComponentDoc {
                        weight: c.weight,
                        block_index: c.block_index.clone(),
                        state: StateDoc::of(&c.state),
                        assembly: AssemblyDoc::of(&c.assembly),
                    })
                    .collect(),
            };
            Ok(Outcome::Found(to_canonical_json(&report)))
        }

        Command::Optimize { state, inequality, scan, budget } => {
            let state = load_json::<StateDoc>(state)?.into_state(tol)?;
            let objective = objective_from(inequality.as_deref(), *scan, tol)?;
            let rep = seesaw_objective(&state, &objective, &budget.budget())?;
            let doc = OptimizeDoc {
                format: FORMAT_TAG,
                kind: "optimization-report",
                best_score: rep.best_score,
                inequality: rep.inequality.clone(),
                assembly: AssemblyDoc::of(&rep.assembly),
                filter_kraus: rep.filter.as_ref().map(SloDoc::of),
                iterations: rep.iterations,
                converged: rep.converged,
                trace: rep.trace.clone(),
                quantum_bound_warning: exceeds_quantum_bound(
                    state.parties(),
                    rep.best_score.abs(),
                ),
            };
            Ok(Outcome::Found(to_canonical_json(&doc)))
        }

        Command::Certify { state, copies, inequality, scan, budget } => {
            let state = load_json::<StateDoc>(state)?.into_state(tol)?;
            let objective = match objective_from(inequality.as_deref(), *scan, tol)? {
                Objective::Fixed(i) => CertifyObjective::Inequality(i),
                Objective::Scan => CertifyObjective::Scan,
            };
            let outcome = certify_distillability_with_cap(
                &state,
                *copies,
                &objective,
                &budget.budget(),
                cli.dim_cap,
            )?;
            match outcome {
                CertifyOutcome::Certificate(cert) => Ok(Outcome::Found(to_canonical_json(&cert))),
                CertifyOutcome::NoCertificate { best_score } => {
                    let doc = NoCertificateDoc {
                        format: FORMAT_TAG,
                        kind: "certificate",
                        outcome: "no-certificate",
                        best_score,
                    };
                    Ok(Outcome::NotFound(to_canonical_json(&doc)))
                }
            }
        }

        Command::LvmCheck { distribution } => {
            let dist = load_json::<DistributionDoc>(distribution)?.into_distribution(tol)?;
            match lvm_feasibility_with_tol(&dist, cli.lp_tol)? {
                LvmDecision::Model(model) => {
                    Ok(Outcome::Found(to_canonical_json(&LvmModelDoc::of(&model))))
                }
                LvmDecision::Separating(f) => {
                    let value = bell_value(&f, &dist)?;
                    let (min_slack, _) = f.min_deterministic_slack();
                    let doc = SeparatingDoc {
                        format: FORMAT_TAG,
                        kind: "lvm-check",
                        outcome: "separating-functional",
                        parties: f.scenario.parties,
                        coeffs: f.coeffs(),
                        value,
                        min_deterministic_slack: min_slack,
                    };
                    Ok(Outcome::NotFound(to_canonical_json(&doc)))
                }
            }
        }

        Command::Wwzb { parties, list, check } => {
            if *list {
                let inequalities: Vec<InequalityDoc> = enumerate_wwzb(*parties)?
                    .map(|i| InequalityDoc::Wwzb {
                        parties: *parties,
                        epsilon: i.epsilon_bitstring(),
                    })
                    .collect();
                let doc = WwzbListDoc {
                    format: FORMAT_TAG,
                    kind: "wwzb-list",
                    parties: *parties,
                    count: inequalities.len(),
                    inequalities,
                };
                Ok(Outcome::Found(to_canonical_json(&doc)))
            } else if let Some(path) = check {
                let c = load_json::<CorrelatorsDoc>(path)?.into_tensor(tol)?;
                if c.parties != *parties {
                    return Err(AppError::Invalid(format!(
                        "correlators are for {} parties, requested {}",
                        c.parties, parties
                    )));
                }
                let spec = fourier_spectrum(&c);
                let best = spec.best_member();
                let best_score = best.score(&c)?;
                let doc = WwzbCheckDoc {
                    format: FORMAT_TAG,
                    kind: "wwzb-check",
                    parties: *parties,
                    l1: spec.l1(),
                    lvm_realizable: spec.l1() <= 1.0 + tol.tau,
                    best: InequalityDoc::Wwzb {
                        parties: *parties,
                        epsilon: best.epsilon_bitstring(),
                    },
                    best_score,
                    quantum_bound_warning: exceeds_quantum_bound(*parties, best_score),
                };
                Ok(Outcome::Found(to_canonical_json(&doc)))
            } else {
                Err(AppError::Invalid("wwzb needs either --list or --check".into()))
            }
        }

        Command::Embed { state, slo, assembly, inequality, sign } => {
            let state = load_json::<StateDoc>(state)?.into_state(tol)?;
            let slo = load_json::<SloDoc>(slo)?.into_slo(tol)?;
            let assembly = load_json::<AssemblyDoc>(assembly)?.into_assembly(tol)?;
            let ineq = match load_json::<InequalityDoc>(inequality)?.load(tol)? {
                LoadedInequality::Wwzb(i) => i,
                LoadedInequality::Table(_) => {
                    return Err(AppError::Invalid(
                        "embed needs a wwzb-form inequality (table-form functionals may lack a \
                         saturating point)"
                            .into(),
                    ))
                }
            };
            let emb = locc_embedding_with_tolerance(&state, &slo, &assembly, &ineq, *sign, tol)?;
            let doc = EmbedDoc {
                format: FORMAT_TAG,
                kind: "embedding",
                success_probability: emb.success_probability,
                sign: emb.sign,
                branch_signed_score: emb.branch_signed_score,
                embedded_signed_score: emb.embedded_signed_score,
                embedded_state: StateDoc::of(&emb.embedded_state),
                embedded_assembly: AssemblyDoc::of(&emb.embedded_assembly),
            };
            Ok(Outcome::Found(to_canonical_json(&doc)))
        }

        Command::Verify { certificate, state } => {
            let cert: DistillabilityCertificate = load_json(certificate)?;
            let state = load_json::<StateDoc>(state)?.into_state(tol)?;
            let report = verify_certificate_with_cap(&cert, &state, cli.dim_cap)?;
            let doc = VerifyDoc {
                format: FORMAT_TAG,
                kind: "verification",
                pass: report.pass,
                stored_score: report.stored_score,
                recomputed_score: report.recomputed_score,
                stored_group_size: report.stored_group_size,
                recomputed_group_size: report.recomputed_group_size,
            };
            if report.pass {
                Ok(Outcome::Found(to_canonical_json(&doc)))
            } else {
                Err(AppError::Invalid(format!(
                    "certificate failed re-evaluation: {}",
                    to_canonical_json(&doc)
                )))
            }
        }
    }
}

fn objective_from(
    inequality: Option<&Path>,
    scan: bool,
    tol: Tolerance,
) -> Result<Objective, AppError> {
    match (inequality, scan) {
        (Some(path), false) => match load_json::<InequalityDoc>(path)?.load(tol)? {
            LoadedInequality::Wwzb(i) => Ok(Objective::Fixed(i)),
            LoadedInequality::Table(_) => Err(AppError::Invalid(
                "optimization maximizes full-correlation scores; use a wwzb-form inequality"
                    .into(),
            )),
        },
        (None, true) => Ok(Objective::Scan),
        (None, false) => {
            Err(AppError::Invalid("pass either --inequality <file> or --scan".into()))
        }
        (Some(_), true) => unreachable!("clap conflicts_with"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Found(json)) => match emit(&cli.out, json) {
            Ok(()) => ExitCode::from(0),
            Err(AppError::Internal(msg)) | Err(AppError::Invalid(msg)) => {
                eprintln!("bellkit: {msg}");
                ExitCode::from(1)
            }
        },
        Ok(Outcome::NotFound(json)) => match emit(&cli.out, json) {
            Ok(()) => ExitCode::from(3),
            Err(AppError::Internal(msg)) | Err(AppError::Invalid(msg)) => {
                eprintln!("bellkit: {msg}");
                ExitCode::from(1)
            }
        },
        Err(AppError::Invalid(msg)) => {
            eprintln!("bellkit: invalid input: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Internal(msg)) => {
            eprintln!("bellkit: internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
