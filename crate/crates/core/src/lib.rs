//! Cavity-QED photonic gate simulator core.
//!
//! A multilevel atom threads a chain of single-photon transitions through
//! several cavity modes. This crate enumerates the reachable atom/field
//! basis, builds interaction-picture Hamiltonians, reduces them to few-level
//! effective systems by adiabatic elimination, integrates closed, conditional
//! (no-jump) and Lindblad dynamics, and evaluates gate truth tables.
//!
//! Energies are in units of a reference coupling `g` and times in units of
//! `1/g`. The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod decoherence;
pub mod dynamics;
pub mod elimination;
mod error;
pub mod gates;
pub mod hamiltonian;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod state_space;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;

pub use decoherence::{CollapseOperator, DecoherenceSpec, DensityMatrix, DensityTrajectory};
pub use dynamics::{Propagator, Trajectory};
pub use elimination::{EffectiveSystem, Partition};
pub use gates::{Engine, GateResult, LogicalEncoding, TargetGate};
pub use hamiltonian::OperatorMatrix;
pub use model::{AtomLevel, Coupling, Direction, Field, LinkageModel, ResonancePattern};
pub use state_space::{BasisState, DecayChannel, StateSpace};
