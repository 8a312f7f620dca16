//! Simulation and analysis of quantum proof verification with single-qubit
//! measurements: a graph-state/MBQC verifier with a stabilizer test, and a
//! local-Hamiltonian verifier that samples Pauli terms.

pub mod error;
pub mod graph;
pub mod harness;
pub mod lh;
pub mod linalg;
pub mod mbqc;
pub mod pauli;
pub mod rng;
pub mod state;

pub use error::{Error, Result};
