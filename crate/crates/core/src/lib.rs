//! Maximum consensus estimation.
//!
//! Given linear residuals `|a_j · θ - b_j|` grouped into data points, find
//! `θ` agreeing with as many points as possible within a threshold `ε`.
//! The main estimator, [`irlp_fit`], replaces the inlier count with a
//! smooth log-sum of per-point slacks and minimizes it by solving a
//! sequence of weighted linear programs.

pub mod baselines;
pub mod convex;
pub mod diversity;
pub mod error;
mod linalg;
pub mod model;
mod result;
pub mod reweight;
pub mod rng;

pub use error::{Error, Result};
pub use model::{
    consensus, residuals, Consensus, GroundTruth, PointMatch, ProblemInstance, ResidualSystem,
};
pub use convex::{SlackSolution, SolveStatus, SolverTolerances};
pub use result::{ConsensusResult, IterRecord, IterTrace, Termination};
pub use reweight::{irlp_fit, irqp_fit, IRConfig, InitMode};
