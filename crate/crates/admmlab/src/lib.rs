//! Compressed-sensing lab: empirical ADMM runs next to a scalar
//! state-evolution prediction of its per-iteration behavior.
//!
//! The crate has two halves that share the same priors, proximity maps and
//! error metrics:
//!
//! * [`solver`] runs ADMM on concrete random instances `y = Ax + v` and
//!   records MSE/SER/residual trajectories.
//! * [`prediction`] evolves a Monte-Carlo ensemble of the decoupled scalar
//!   process `(X, S_k, Z_k, W_k)`; each iteration solves a two-variable
//!   min-max problem by nested ternary search and the optimizer `alpha`
//!   encodes the predicted MSE as `alpha^2 - sigma_v^2`.
//!
//! [`experiment`] ties the two together: it runs many independent trials in
//! parallel, one matched prediction, and emits CSV tables so the agreement
//! between the two sides can be checked mechanically.
//!
//! See the crate examples for a tour; `examples/sparse_mse.rs` is the place
//! to start.

pub mod experiment;
pub mod model;
pub mod prediction;
pub mod regularizer;
pub mod rng;
pub mod search;
pub mod solver;

pub use model::{MatrixEnsemble, ProblemInstance, SignalPrior};
pub use prediction::{ParticleEnsemble, PredictionConfig, PredictionTrajectory, SaddlePoint};
pub use regularizer::SeparableRegularizer;
pub use solver::{AdmmConfig, AdmmState, CachedSolver, Trajectory};
