//! Random walks in i.i.d. random environments on the integers: simulation,
//! regime classification, and nonparametric estimation of the environment
//! density from a single trajectory.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod cli;
pub mod density;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod io;
pub mod numeric;
pub mod regime;
pub mod seed;
pub mod serde_util;
pub mod simulate;

pub use adapt::{gl_select, sup_norm_diff, CnRange, SelectionDiagnostics};
pub use density::{DensitySpec, EnvDensity};
pub use error::{Error, Result};
pub use estimate::{density_estimate, oracle_fm, PiecewiseDensity};
pub use experiment::{run_experiment, ExperimentConfig};
pub use regime::{classify, solve_kappa, RegimeClass, RegimeReport};
pub use simulate::{run_walk_to_hit, simulate_bpire, BranchSequence, SiteCounts};
