//! Command-line front end: scenario files, experiment runs and the
//! verification suites.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod output;
pub mod run;
pub mod scenario;
pub mod suites;

pub use run::{run, Check, Fitted, RunError, RunReport};
pub use scenario::{ConfigError, ExperimentKind, Scenario};
pub use suites::{run_criterion, run_suite, CriterionOutcome, SUITES};
