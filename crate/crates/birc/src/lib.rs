//! Simulation laboratory for one-dimensional random walks among biased
//! i.i.d. heavy-tailed conductances.
//!
//! The crate is organized around six subsystems:
//! - [`env`]: two-sided heavy-tailed conductance laws and environment windows;
//! - [`network`]: exact resistor-network formulas on a window, plus a
//!   tridiagonal linear-system oracle;
//! - [`walk`]: first-passage simulation by a direct engine and an accelerated
//!   edge-crossing (branching) engine, and the trap-crossing law;
//! - [`traps`]: derived scales, block partitions, trap detection and censuses;
//! - [`limit`]: stable subordinator samplers, the limiting trap constant and
//!   the generalized arcsine aging function;
//! - [`stats`]: estimators and distributional tests shared by the experiments.
//!
//! The `birc` binary binds everything into reproducible experiments.

pub mod env;
pub mod error;
pub mod export;
pub mod limit;
pub mod network;
pub mod numeric;
pub mod stats;
pub mod traps;
pub mod walk;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
