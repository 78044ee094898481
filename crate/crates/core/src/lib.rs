//! bellkit: evaluation, optimization, and certification of two-setting,
//! two-outcome Bell inequality violation by N-partite quantum states.
//!
//! The crate covers the full pipeline from density matrices and binary
//! POVMs, through Born-rule statistics, the WWZB full-correlation inequality
//! family, local-variable-model membership by linear programming, the
//! simultaneous 1x1/2x2 block-diagonalization of projective settings with
//! its qubit reduction, seesaw and filter searches, up to distillability
//! certificates with group-size bounds and the SLOCC-to-LOCC embedding.
//!
//! Heavy inner loops (restarts, filter candidates, family scans) run on
//! rayon under the default `parallel` feature; disabling default features
//! gives a dependency-free sequential build with identical output.

#![forbid(unsafe_code)]

pub mod error;
pub mod exec;
pub mod fixtures;
pub mod io;
pub mod qcore;

pub mod correlations;
pub mod jordan;
pub mod optimize;
pub mod protocols;
pub mod wwzb;

pub use error::{Error, Result};
