//! Solvers for minimum-power channel allocation in OFDMA.
//!
//! Users with rate targets share a set of orthogonal channels; each channel
//! goes to at most one user, and every user spreads its rate over its own
//! channels by water-filling. The crate provides:
//!
//! - [`waterfill`]: the optimal single-user split, in expanded and grouped form;
//! - [`oracle`]: exponential exact solvers used as ground truth;
//! - [`kmpca`]: polynomial dynamic programs for channels in `K` uniform-gain groups;
//! - [`matching`]: assignment-based solvers for linear rates and equal consecutive blocks;
//! - [`recognition`]: detection of the group structure;
//! - [`reduction`]: 3-SAT gadget instances with threshold decisions and structural checks;
//! - [`generate`] and [`verify`]: seeded instance synthesis and differential suites.

pub mod error;
pub mod generate;
pub mod kmpca;
pub mod matching;
pub mod model;
pub mod oracle;
pub mod recognition;
pub mod reduction;
pub mod verify;
pub mod waterfill;

pub use error::{Error, Result};
pub use model::{
    evaluate, read_instance, write_instance, Allocation, MpcaInstance, RateModel, SolveReport,
};
