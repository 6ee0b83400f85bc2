//! Single-crystal finite-strain visco-plasticity.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: FCC slip geometry, crystal orientation and cubic elasticity.
//! - [`kinematics`]: Green–Lagrange strain, the Padé-[2/2] Hencky strain and its
//!   variations, conjugate stress and the elastic/plastic split of `F`.
//! - [`constitutive`]: backward-Euler flow solve, the linear hardening solve and
//!   stress/tangent recovery at one material point.
//! - [`stagger`]: dynamic relaxation coupling of flow and hardening, and the
//!   naive two-pass split it replaces.
//! - [`fem`]: an 8-node enhanced assumed strain hexahedron and a
//!   displacement-controlled Newton driver for small meshes.
//!
//! Voigt conventions are collected in [`voigt`].

pub mod constitutive;
pub mod error;
pub mod fem;
pub mod kinematics;
pub mod lattice;
pub mod stagger;
pub mod voigt;

pub use error::{Error, Result};

/// Number of dominant FCC slip systems.
pub const NUM_SLIP: usize = 12;

/// Per-slip-system column vector.
pub type SlipVector = nalgebra::SVector<f64, NUM_SLIP>;

/// Per-slip-system square matrix.
pub type SlipMatrix = nalgebra::SMatrix<f64, NUM_SLIP, NUM_SLIP>;
