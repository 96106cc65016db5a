//! Analysis tools: gradient checks, gradient-norm densities, the
//! eigen-ratio independence measure, decay simulation and cost counters.

pub mod complexity;
pub mod decay;
pub mod eigen_ratio;
pub mod gradcheck;
pub mod kde;

pub use complexity::{complexity_report, count_params, ComplexityReport, ParamCount};
pub use decay::{decay_simulation, iterations_to_reach, DecayTrajectory};
pub use eigen_ratio::eigen_ratio;
pub use gradcheck::{grad_check, run_trials, GradCheckSummary, GradOp};
pub use kde::{kde, KdeCurve};
