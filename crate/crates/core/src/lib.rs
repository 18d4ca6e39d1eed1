//! GP-UCB for noisy black-box maximization over box domains, with tools for
//! auditing its uniform error bound and regret behaviour.

pub mod config;
pub mod error;
pub mod exec;
pub mod grid_posterior;
pub mod kernels;
pub mod points;
pub mod posterior;
pub mod regret;
pub mod rkhs;
pub mod textfmt;
pub mod ucb;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use exec::Exec;
pub use kernels::{kernel_matrix, KernelFamily, KernelSpec};
pub use points::{BoxDomain, PointSet};
pub use posterior::{PosteriorState, Prediction};
pub use rkhs::RkhsFunction;
pub use ucb::{run_gp_ucb, run_gp_ucb_with, BetaSchedule, RegretTrace};
