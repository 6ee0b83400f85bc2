//! Hexahedral finite elements for micro-meshes.
//!
//! [`hex8`] holds the enhanced-strain element, [`mesh`] the data model and
//! text format, [`solver`] the displacement-controlled Newton driver and
//! [`patch`] the constant-strain patch test.

pub mod hex8;
pub mod mesh;
pub mod patch;
pub mod solver;

pub use hex8::{element_force_stiffness, element_strain, EasModes, ElementResponse, Hex8EAS};
pub use mesh::{parse_mesh, write_mesh, Constraint, Mesh, MeshSpec, NodalLoad};
pub use patch::{patch_test, run_patch, PatchReport, PatchSetup};
pub use solver::{gauss_states, solve_displacement_control, solve_with_observer, SolverConfig, StepRecord};
