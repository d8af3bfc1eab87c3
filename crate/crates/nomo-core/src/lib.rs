//! Variational and exact treatments of one-dimensional harmonic few-body
//! models in which no coordinate is singled out for elimination: the center
//! of mass is either subtracted from the Hamiltonian or left in, and simple
//! product wavefunctions are compared against the exactly solvable
//! normal-mode ground state.
//!
//! The crate is organized as a pipeline:
//! [`model`] builds validated mass/spring systems, [`transform`] splits off
//! the center of mass, [`gaussian`] handles Gaussian trial states and their
//! marginals, [`oracle`] and [`grid`] provide two independent ground truths,
//! [`variational`] minimizes the trial energies, and [`sweep`] / [`verify`]
//! drive batch runs and self-checks for the CLI.

pub mod error;
pub mod frame;
pub mod gaussian;
pub mod grid;
mod linalg;
pub mod model;
pub mod oracle;
mod optimize;
pub mod quadratic;
pub mod sweep;
pub mod transform;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};
pub use frame::{Frame, FrameMap};
pub use gaussian::{AlphaBeta, GaussianDensity, GaussianState, Polynomial};
pub use model::HarmonicModel;
pub use oracle::NormalModeSolution;
pub use quadratic::{FormKind, QuadraticForm};
pub use sweep::{SweepRow, SweepSpec};
pub use transform::CoordinateTransform;
pub use variational::{AnsatzFamily, MinimizeOptions, NomoResult, Variant};
