//! Deterministic numeric substrate: dense row-major matrices, a seeded
//! pseudo-random generator and a Jacobi symmetric eigensolver.

mod eig;
mod matrix;
mod rng;

pub use eig::{sym_eig, SymEig};
pub use matrix::{matmul, Matrix};
pub use rng::{derive_seed, standard_normal, Rng};
