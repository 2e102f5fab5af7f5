//! Multiple-testing procedures for directional inference: FDR and FWER
//! adjustments, strategies for splitting decisions by the sign of a
//! statistic, selective inference over families of tests, and a Monte Carlo
//! harness for estimating empirical FDR and power.
//!
//! ```
//! use fdrkit::{adjust, Method, PValueSet};
//!
//! let p = PValueSet::new(vec![0.01, 0.02, 0.6]).unwrap();
//! let out = adjust(Method::Bh, &p, 0.05).unwrap();
//! assert_eq!(out.rejection_count(), 2);
//! ```

pub mod directional;
pub mod error;
pub mod fdr;
pub mod numerics;
pub mod pvalues;
pub mod selective;
pub mod simulate;

pub use directional::{
    apply_strategy, apply_uncorrected, compute_thresholds, uncorrected_thresholds, BbSummary,
    DirectionalInput, DirectionalOutcome, Reference, StrategyKind, Thresholds,
};
pub use error::{Error, Result};
pub use fdr::{adjust, FdrOutcome, Method, PValueSet};
pub use numerics::DegreesOfFreedom;
pub use pvalues::{one_to_two_tailed, symmetric_two_tailed, TailConversionMode};
pub use selective::{bb_procedure, simes_test, BbOutcome, Partition, ProcedureScreen, Screen, Simes};
pub use simulate::{run_scenario, ScenarioReport, ScenarioSpec, View};
