//! Simulation of domain-wall dynamics in the Rydberg-blockaded PXP chain,
//! optionally driven by a staggered time-periodic phase.

pub mod basis;
pub mod density;
pub mod exact;
pub mod mps;
pub mod observables;
pub mod runner;
pub mod operators;

pub use basis::{BasisError, ConstrainedBasis, SpinConfig, StateVector};
pub use density::DensityMatrix;
pub use exact::{ExactError, ExactPropagator, SparseHamiltonian};
pub use mps::{MpsError, MpsState, TrotterPlan, TruncationPolicy};
pub use observables::{EnvelopeTracker, InhomogeneityProfile, ObservableError, ObservableSeries, VelocityFit};
pub use operators::{DriveParams, OperatorError};

/// Complex amplitude type used throughout.
pub type C64 = num_complex::Complex64;
