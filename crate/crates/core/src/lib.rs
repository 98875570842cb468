//! Numerical laboratory for the two-party causal game with indefinite causal order.
//!
//! * [`linalg`]: dense complex matrices, Pauli strings, partial traces and a
//!   Jacobi Hermitian eigensolver.
//! * [`process`]: process matrices, Choi–Jamiołkowski operators, instruments and
//!   the bilinear probability rule.
//! * [`game`]: the causal guessing game, classical strategy enumeration, the
//!   multi-run random-access-code reformulation and Monte Carlo simulation.
//! * [`info`]: entropies, mutual information, HGR maximal correlation and the
//!   efficiency bounds built on them.
//! * [`search`]: region sweeps, witness discovery and simplex optimization of
//!   local operations.

pub mod error;
pub mod game;
pub mod info;
pub mod linalg;
pub mod process;
pub mod rng;
pub mod search;

pub use error::{Error, Result};
