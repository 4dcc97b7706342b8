//! Free-fermion diagnostics for the disordered XY chain, with an exact
//! diagonalization oracle for cross-checks.

pub mod disorder;
pub mod ed_oracle;
pub mod eigencorrelator;
pub mod entanglement;
pub mod fock;
pub mod grid;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod linalg;
pub mod quasifree;
pub mod stats;
pub mod transport;

pub use error::{Result, XyError};
