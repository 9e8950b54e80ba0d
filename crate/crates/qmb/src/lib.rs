//! Numerical toolkit for quantum Markov blankets in multipartite states and
//! channels.
//!
//! The crate finds small "blanket" regions `Q` such that, after a fixed
//! projective measurement on `Q`, the conditional mutual information between a
//! distinguished subsystem `A` and every other small region `R` is small. It
//! also builds the associated measure-and-prepare approximations of reduced
//! channels and verifies the distance bounds relating the two, entirely by
//! exact dense simulation (up to ~10 qubits).
//!
//! Module map:
//! - [`linalg`]: dense complex matrices, Hermitian eigendecomposition,
//!   matrix exponentials, trace norm.
//! - [`state`]: multipartite density matrices, regions, entropies, mutual
//!   information, conditional mutual information, relative entropy.
//! - [`channel`]: Kraus/Choi channel representations, quantum-classical and
//!   measure-and-prepare channels, one-way LOCC and diamond-norm bounds.
//! - [`optim`]: Nelder–Mead with random restarts and the `exp(iH(θ))`
//!   parameterization of projective measurement bases.
//! - [`blanket`]: the greedy blanket search, the `α_Q` diagnostic, the
//!   separable reconstruction from a measured blanket, and the channel
//!   approximation certificate.
//! - [`experiments`]: the mixed-field Ising chain channel, the blanket sweep
//!   over evolution time and blanket size, analytic channel examples, and the
//!   compatible-channel counterexample family.
//! - [`verify`]: self-contained property suites runnable from the CLI.

pub mod blanket;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
