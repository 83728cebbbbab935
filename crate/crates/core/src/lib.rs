//! Prepare-and-measure correlations with and without entanglement assistance.
//!
//! The crate evaluates classical, quantum and entanglement-assisted behaviors,
//! works with the classical correlation polytope through exact vertex
//! enumeration and linear programming, searches for assisted violations by
//! see-saw optimization, converts strategies between the dense-coding and
//! teleportation pictures, and tests assemblages for local hidden state models.

pub mod cli;
pub mod conversions;
pub mod error;
pub mod games;
pub mod linalg;
pub mod lp;
pub mod polytope;
pub mod random;
pub mod scenario;
pub mod seesaw;
pub mod steering;

pub use error::{Error, Result};
pub use games::LinearFunctional;
pub use linalg::{ComplexMatrix, DensityMatrix, KrausChannel, Povm, C64};
pub use scenario::{
    Behavior, ClassicalModel, DeterministicStrategy, EAClassicalStrategy, EAQuantumStrategy, QuantumStrategy,
    Scenario,
};
