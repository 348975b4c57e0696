//! Numerical laboratory for quantum time-operator algebra and temporal
//! interference.
//!
//! The crate has two halves. The first realizes a time operator and its
//! conjugate energy operator on finite periodic grids, checks the canonical
//! commutation relations on band-limited probe states, and solves the
//! constraint form of the Schrödinger equation on the doubled space
//! `H_q ⊗ H_t`. The second models a two-path interference apparatus whose
//! source emits either a coherent superposition of two emission moments, a
//! single moment, or an incoherent mixture, and accumulates single-event
//! Monte Carlo detection statistics over the resulting screen pattern.
//!
//! All states and operators are plain dense data over [`GridSpec`] grids;
//! every operation is pure and the types are immutable after construction,
//! so concurrent read-only use is safe.

pub mod config;
pub mod constraint;
pub mod detection;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod operators;
pub mod state;

pub use config::RunConfig;
pub use constraint::{EnergySupport, Hamiltonian, HamiltonianKind};
pub use detection::{DetectionHistogram, GofReport};
pub use error::{Error, Result};
pub use experiment::{EmissionModel, ExperimentConfig, IntensityPattern, PathId};
pub use grid::GridSpec;
pub use operators::LinearOperator;
pub use state::{SpaceTimeState, StateVector};

/// Reduced Planck constant in SI units, J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
