//! Optimal coherent illumination for detecting a target hidden in a
//! scattering medium.
//!
//! Given two scattering matrices `S1` (target absent) and `S2` (target
//! present), the crate builds the discrimination operator
//! `D12 = (S2 - S1)^† (S2 - S1)`, extracts its spectrum, and evaluates the
//! quantum-limited (Helstrom) and homodyne (Gaussian receiver) error
//! probabilities for any unit-norm probe state. Monte Carlo homodyne
//! experiments and a virtual transmission-matrix acquisition close the loop
//! between the closed-form predictions and simulated measurements.
//!
//! Modules, bottom up:
//!
//! - [`linalg`]: dense complex matrices, Hermitian Jacobi eigensolver,
//!   largest singular value, the CMX1 binary format.
//! - [`scatter`]: synthetic diffuser / target / diffuser systems.
//! - [`discrim`]: discrimination operator, spectra, probe states.
//! - [`bounds`]: Helstrom bound, Gaussian receiver error, binomial intervals.
//! - [`receiver`]: seeded Monte Carlo likelihood-ratio experiments.
//! - [`acquire`]: noisy column-by-column matrix acquisition and fidelity.
//! - [`cli`]: the `helion` command line front end.

pub mod acquire;
pub mod bounds;
pub mod cli;
pub mod discrim;
mod error;
pub mod linalg;
pub mod persist;
pub mod receiver;
pub mod rng;
pub mod scatter;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, C64};
