//! Scenario configuration, experiments and reports for the `grflab` tool.

// Index loops follow the tensor formulas; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod presets;
pub mod random;
pub mod report;
pub mod scenario;

pub use error::{LabError, Result};
pub use experiment::run;
pub use random::generate_random_scenario;
pub use report::{Check, Outcome, Report, Verdict};
pub use scenario::{Kind, Scenario};
