//! Numerical toolkit for a three-cavity Jaynes-Cummings ring with balanced
//! gain and loss and a synthetic hopping phase.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] builds the dispersive effective 3x3 matrix, the full
//!   single-excitation 6x6 Hamiltonian and checks PT/chiral symmetry.
//! * [`spectral`] holds the closed-form Cardano spectrum, an independent
//!   dense eigensolver and biorthogonal left/right eigenvectors.
//! * [`ep`] gives the critical manifolds (second-order lines, third-order
//!   surface) and a point classifier.
//! * [`perturb`] covers the perturbed characteristic cubic, Newton-Puiseux
//!   asymptotics and power-law fits of the splittings.
//! * [`dynamics`] implements associated-state fidelity, time evolution and
//!   the Loschmidt echo.

pub mod dynamics;
pub mod ep;
pub mod error;
pub mod model;
pub mod perturb;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{EffectiveMatrix, FullMatrix, ModelParams, SymmetryReport};
pub use spectral::{CardanoInputs, Spectrum};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
