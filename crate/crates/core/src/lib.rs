//! Stochastic reset clocks and the Alternate Ticks Game.
//!
//! The crate models finite classical clocks whose clockwork is a pointer on a
//! circle of `d` positions that jumps forward by a random offset on every
//! application of the clock map, emitting a tick (and restarting at zero)
//! whenever it passes position zero. On top of that model it provides:
//!
//! * [`atgame`]: a seeded Monte Carlo engine for two clocks that must tick in
//!   strict alternation, with transcripts and halting-boundary checks;
//! * [`walk_analysis`]: exact absorption times of the relative-position walk
//!   (banded direct elimination) and the closed-form tick bounds;
//! * [`quantum_verify`]: dense Kraus, Choi and dual-certificate matrices for the
//!   clock channel, with numerical checks of their claimed properties;
//! * [`cli`]: the experiment runner behind the `resetclock` binary.
//!
//! Numerical code is generic over [`Scalar`], so the same routines run in
//! `f64`, `f32`, or exactly over [`BigRational`].

pub mod atgame;
pub mod cli;
pub mod clock_model;
mod error;
pub mod matrix;
pub mod quantum_verify;
mod scalar;
pub mod walk_analysis;

pub use error::{Error, Result};
pub use scalar::{Expectation, Real, Scalar};

pub use num_rational::BigRational;

/// Jump distribution with double precision probabilities.
pub type JumpDistribution = clock_model::JumpDistribution<f64>;
/// Clock with double precision probabilities.
pub type StochasticClock = clock_model::StochasticClock<f64>;
/// Clock with exact rational probabilities.
pub type ExactClock = clock_model::StochasticClock<BigRational>;
/// Game configuration over double precision clocks.
pub type GameConfig = atgame::GameConfig<f64>;
/// Relative-walk increment law in double precision.
pub type DeltaDistribution = walk_analysis::DeltaDistribution<f64>;
/// Relative-walk increment law with exact rational weights.
pub type ExactDeltaDistribution = walk_analysis::DeltaDistribution<BigRational>;
/// Absorption problem in double precision.
pub type AbsorptionProblem = walk_analysis::AbsorptionProblem<f64>;
/// Bound report in double precision.
pub type BoundReport = walk_analysis::BoundReport<f64>;
/// Dense real matrix in double precision.
pub type DenseMatrix = matrix::DenseMatrix<f64>;
