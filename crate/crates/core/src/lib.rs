//! Monte Carlo threshold estimation for topological cluster-state error correction with
//! qubit loss.
//!
//! The pipeline for one trial:
//!
//! 1. [`noise`] samples lost face qubits and circuit faults, and reads out the faces;
//! 2. [`loss_recovery`] merges the checks around lost faces into super-checks and deforms the
//!    test surfaces away from losses (or reports that losses percolate);
//! 3. [`decoder`] matches the failed super-checks with degeneracy-aware weights and checks the
//!    homology class of error plus correction;
//! 4. [`montecarlo`] repeats this with reproducible per-trial random streams;
//! 5. [`analysis`] fits finite-size-scaling curves to the failure rates.
//!
//! [`oracles`] holds brute-force references used by tests and the `selftest` command.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod decoder;
pub mod error;
pub mod lattice;
pub mod loss_recovery;
pub mod matching;
pub mod montecarlo;
pub mod noise;
pub mod oracles;
pub mod rng;

pub use error::{Error, Result};
pub use lattice::{Axis, CellId, EdgeId, FaceId, FaceSet, Lattice};
