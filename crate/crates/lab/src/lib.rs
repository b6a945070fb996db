//! Experiment harness for regularized residue-current pairings: JSON
//! configs, ε sweeps with CSV output, convergence-rate fits, ideal
//! membership by duality, verification suites and worked demos.

pub mod config;
pub mod demo;
pub mod error;
pub mod membership;
pub mod rate;
pub mod sweep;
pub mod verify;

pub use config::{ExperimentConfig, ExperimentKind, FormSpec};
pub use error::{LabError, LabResult};
pub use membership::{membership_test, MembershipReport};
pub use rate::{fit_rate, RateFit};
pub use sweep::{run_sweep, SweepRow, SweepTable};
pub use verify::{verify_suite, VerifyReport};
