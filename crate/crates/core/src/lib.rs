//! Smoothed best-response dynamics and uniform-stability analysis for
//! N-player normal-form games.
//!
//! * [`game`]: payoff tensors, utilities, gradients, cross-Hessians.
//! * [`regularizer`]: entropy and the quadratic-entropy family on simplices.
//! * [`response`]: the smoothed best response, its Jacobian, smoothed equilibria.
//! * [`dynamics`]: averaging dynamics, linear stability verdicts, sweeps.
//! * [`stability`]: game Jacobians, λ-skew certificates, witnesses, oracles.

pub mod bundled;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod game;
pub mod linalg;
pub mod regularizer;
pub mod response;
pub mod stability;

pub use error::{Error, Result};
pub use game::{JointStrategy, NormalFormGame, TangentVector};
pub use regularizer::Regularizer;
pub use response::{SmoothedEquilibrium, SmoothedResponseConfig};
