//! Exact machinery for Lipschitz functions on finite product spaces under
//! weighted Hamming metrics.
//!
//! The crate computes the recursive Ψ functional, the Φ-norm (by exact
//! rational linear programming over the polytope of bounded 1-Lipschitz
//! functions), η-mixing coefficients of arbitrary measures on `S^n`, and
//! martingale differences, and checks the inequalities that tie them
//! together without any floating-point slack. Floats only appear at the
//! exponential tail bounds and the spectral norm of the mixing matrix.

pub mod error;
pub mod harness;
pub mod lp;
pub mod martingale;
pub mod mixing;
pub mod montecarlo;
pub mod psi;
pub mod rational;
pub mod word_space;

pub use error::{Error, Result};
pub use rational::Rational;
pub use word_space::{Alphabet, TableFunction, WeightVector, Word};
