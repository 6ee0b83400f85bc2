//! FCC slip-system geometry, crystal orientation and cubic lattice elasticity.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::voigt::strain_from_tensor;
use crate::{Error, Result, NUM_SLIP};

/// Crystal orientation as two spherical angles (radians).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Orientation {
    pub theta: f64,
    pub phi: f64,
}

impl Orientation {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Crystal-to-sample rotation `T(θ, φ)`.
    ///
    /// Rows are `(cθcφ, cθsφ, -sθ)`, `(-sφ, cφ, 0)`, `(sθcφ, sθsφ, cθ)`.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Matrix3::new(
            ct * cp, ct * sp, -st, //
            -sp, cp, 0.0, //
            st * cp, st * sp, ct,
        )
    }

    /// Transform used for the stereographic representation (`Tᵀ`).
    pub fn pole_transform(&self) -> Matrix3<f64> {
        self.rotation_matrix().transpose()
    }
}

/// One slip system: plane normal `m`, slip direction `n`, the Schmid tensor
/// `M = sym(m ⊗ n)` stored strain-like, and the projection `P = M : C`
/// stored stress-like, so that `τ = P · (ε − ε_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlipSystem {
    pub m: Vector3<f64>,
    pub n: Vector3<f64>,
    pub schmid: Vector6<f64>,
    /// Zero until the system has been projected with an elasticity matrix.
    pub projection: Vector6<f64>,
}

impl SlipSystem {
    /// Builds a system from (possibly unnormalized) plane normal and direction.
    pub fn new(m: Vector3<f64>, n: Vector3<f64>) -> Self {
        let m = m.normalize();
        let n = n.normalize();
        Self {
            m,
            n,
            schmid: schmid_voigt(&m, &n),
            projection: Vector6::zeros(),
        }
    }

    /// `m ⊗ n` (not symmetrized), used by the plastic deformation gradient.
    pub fn dyad(&self) -> Matrix3<f64> {
        self.m * self.n.transpose()
    }

    pub fn with_projection(mut self, c: &ElasticityVoigt) -> Self {
        self.projection = c.matrix * self.schmid;
        self
    }
}

fn schmid_voigt(m: &Vector3<f64>, n: &Vector3<f64>) -> Vector6<f64> {
    let d = m * n.transpose();
    strain_from_tensor(&(0.5 * (d + d.transpose())))
}

// (plane, direction) in Miller indices, table order.
const FCC_TABLE: [([f64; 3], [f64; 3]); NUM_SLIP] = [
    ([1.0, 1.0, 1.0], [0.0, 1.0, -1.0]),
    ([1.0, 1.0, 1.0], [1.0, 0.0, -1.0]),
    ([1.0, 1.0, 1.0], [1.0, -1.0, 0.0]),
    ([1.0, 1.0, -1.0], [0.0, 1.0, 1.0]),
    ([1.0, 1.0, -1.0], [-1.0, 0.0, -1.0]),
    ([1.0, 1.0, -1.0], [-1.0, 1.0, 0.0]),
    ([1.0, -1.0, 1.0], [0.0, 1.0, 1.0]),
    ([1.0, -1.0, 1.0], [-1.0, 0.0, 1.0]),
    ([1.0, -1.0, 1.0], [-1.0, -1.0, 0.0]),
    ([-1.0, 1.0, 1.0], [0.0, 1.0, -1.0]),
    ([-1.0, 1.0, 1.0], [-1.0, 0.0, -1.0]),
    ([-1.0, 1.0, 1.0], [-1.0, -1.0, 0.0]),
];

/// The 12 dominant {111}⟨110⟩ systems in the crystal frame, normalized.
pub fn fcc_slip_systems() -> Vec<SlipSystem> {
    FCC_TABLE
        .iter()
        .map(|(m, n)| SlipSystem::new(Vector3::from(*m), Vector3::from(*n)))
        .collect()
}

/// Rotates crystal-frame systems into the sample frame and attaches `P = M : C`.
///
/// Only `m` and `n` are rotated; `C` is applied as given, the same matrix the
/// elastic law uses.
pub fn rotate_and_project(
    systems: &[SlipSystem],
    orientation: &Orientation,
    c: &ElasticityVoigt,
) -> Vec<SlipSystem> {
    let t = orientation.rotation_matrix();
    systems
        .iter()
        .map(|s| SlipSystem::new(t * s.m, t * s.n).with_projection(c))
        .collect()
}

/// Cubic lattice elasticity in Voigt form (stress-like = C · strain-like).
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticityVoigt {
    pub c11: f64,
    pub c12: f64,
    pub c44: f64,
    pub matrix: Matrix6<f64>,
}

impl ElasticityVoigt {
    /// Assembles the cubic matrix; rejects constants that are not positive definite.
    pub fn cubic(c11: f64, c12: f64, c44: f64) -> Result<Self> {
        // Eigenvalues of the cubic pattern.
        let min_eig = (c11 + 2.0 * c12).min(c11 - c12).min(c44);
        if !(min_eig > 0.0) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min_eig,
            });
        }
        let mut matrix = Matrix6::zeros();
        for i in 0..3 {
            for j in 0..3 {
                matrix[(i, j)] = if i == j { c11 } else { c12 };
            }
            matrix[(i + 3, i + 3)] = c44;
        }
        Ok(Self {
            c11,
            c12,
            c44,
            matrix,
        })
    }

    /// Pure aluminium lattice constants (Pa).
    pub fn aluminum() -> Self {
        Self::cubic(106.75e9, 60.41e9, 28.34e9).expect("tabulated constants are positive definite")
    }
}
