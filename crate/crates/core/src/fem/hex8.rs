//! Trilinear hexahedron with 12 enhanced Green–Lagrange strain modes.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3, Vector6};

use crate::constitutive::{Crystal, MaterialState};
use crate::kinematics::green_lagrange_from_gradient;
use crate::stagger::{update_point, RelaxationConfig};
use crate::voigt::{strain_from_tensor, strain_to_tensor, stress_to_tensor, VOIGT_PAIRS};
use crate::{Error, Result};

pub type Vector12 = SVector<f64, 12>;
pub type Vector24 = SVector<f64, 24>;
pub type Matrix12 = SMatrix<f64, 12, 12>;
pub type Matrix24 = SMatrix<f64, 24, 24>;
pub type Matrix6x12 = SMatrix<f64, 6, 12>;
pub type Matrix6x24 = SMatrix<f64, 6, 24>;
pub type Matrix12x24 = SMatrix<f64, 12, 24>;
/// One column per node: coordinates or displacements.
pub type NodalMatrix = SMatrix<f64, 3, 8>;

/// Parent coordinates of the nodes, bottom face first, counter-clockwise.
pub const NODE_PARENT: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

const GAUSS_COORD: f64 = 0.577_350_269_189_625_8;

/// 2×2×2 Gauss points (unit weights), in node order.
pub fn gauss_points() -> [Vector3<f64>; 8] {
    NODE_PARENT.map(|p| Vector3::from(p) * GAUSS_COORD)
}

pub fn shape_functions(xi: &Vector3<f64>) -> SVector<f64, 8> {
    SVector::from_fn(|a, _| {
        let p = NODE_PARENT[a];
        0.125 * (1.0 + p[0] * xi[0]) * (1.0 + p[1] * xi[1]) * (1.0 + p[2] * xi[2])
    })
}

/// `∂N_a/∂ξ_j` as an 8×3 matrix.
pub fn shape_derivatives(xi: &Vector3<f64>) -> SMatrix<f64, 8, 3> {
    SMatrix::from_fn(|a, j| {
        let p = NODE_PARENT[a];
        let f = |k: usize| if k == j { p[k] } else { 1.0 + p[k] * xi[k] };
        0.125 * f(0) * f(1) * f(2)
    })
}

/// Enhanced-strain interpolation in the parent domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EasModes {
    /// Normal rows `{ξ_i, ξ_j ξ_k}`, shear `γ_ij` rows `{ξ_i, ξ_j}`.
    #[default]
    Stable12,
    /// Normal rows `{ξ_j, ξ_k, ξ_j ξ_k}`, one transverse coordinate per shear
    /// row. Leaves three spurious zero-energy modes in the condensed stiffness.
    Transverse12,
}

impl EasModes {
    /// `Ẽ(ξ)`: strain-like Voigt rows, one column per enhancement parameter.
    pub fn parent_matrix(self, xi: &Vector3<f64>) -> Matrix6x12 {
        let (x, y, z) = (xi[0], xi[1], xi[2]);
        let mut g = Matrix6x12::zeros();
        let entries: [(usize, usize, f64); 12] = match self {
            EasModes::Stable12 => [
                (0, 0, x),
                (0, 1, y * z),
                (1, 2, y),
                (1, 3, x * z),
                (2, 4, z),
                (2, 5, x * y),
                (3, 6, y),
                (3, 7, z),
                (4, 8, x),
                (4, 9, z),
                (5, 10, x),
                (5, 11, y),
            ],
            EasModes::Transverse12 => [
                (0, 0, y),
                (0, 1, z),
                (0, 2, y * z),
                (1, 3, x),
                (1, 4, z),
                (1, 5, x * z),
                (2, 6, x),
                (2, 7, y),
                (2, 8, x * y),
                (3, 9, z),
                (4, 10, y),
                (5, 11, x),
            ],
        };
        for (row, col, v) in entries {
            g[(row, col)] = v;
        }
        g
    }

    pub fn name(self) -> &'static str {
        match self {
            EasModes::Stable12 => "stable12",
            EasModes::Transverse12 => "transverse12",
        }
    }
}

impl std::str::FromStr for EasModes {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stable12" => Ok(EasModes::Stable12),
            "transverse12" => Ok(EasModes::Transverse12),
            other => Err(Error::InvalidParameter(format!("unknown EAS mode set '{other}'"))),
        }
    }
}

/// Reference-configuration data at one point of the parent cube.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGeometry {
    /// `∂N_a/∂X_j`.
    pub dn_dx: SMatrix<f64, 8, 3>,
    pub det_j: f64,
    /// Maps `α` to the Cartesian enhanced strain (strain-like Voigt).
    pub enhanced: Matrix6x12,
}

fn point_geometry(
    index: usize,
    coords: &NodalMatrix,
    xi: &Vector3<f64>,
    jbar_inv: &Matrix3<f64>,
    jbar_det: f64,
    modes: EasModes,
) -> Result<PointGeometry> {
    let dn = shape_derivatives(xi);
    let j = coords * dn;
    let det_j = j.determinant();
    if !(det_j > 0.0) {
        return Err(Error::NegativeJacobian {
            element: index,
            det: det_j,
        });
    }
    let j_inv = j.try_inverse().ok_or(Error::Singular("element Jacobian"))?;
    let parent = modes.parent_matrix(xi);
    let scale = jbar_det / det_j;
    let mut enhanced = Matrix6x12::zeros();
    for c in 0..12 {
        let t = strain_to_tensor(&parent.column(c).into_owned());
        let pushed = scale * jbar_inv.transpose() * t * jbar_inv;
        enhanced.set_column(c, &strain_from_tensor(&pushed));
    }
    Ok(PointGeometry {
        dn_dx: dn * j_inv,
        det_j,
        enhanced,
    })
}

/// Element with its enhancement parameters and Gauss-point history.
#[derive(Debug, Clone, PartialEq)]
pub struct Hex8EAS {
    pub node_ids: [usize; 8],
    pub alpha: Vector12,
    pub gauss_states: Vec<MaterialState>,
    /// Last committed Green–Lagrange strain per Gauss point.
    pub green: Vec<Vector6<f64>>,
    /// Last committed second Piola–Kirchhoff stress per Gauss point.
    pub pk2: Vec<Vector6<f64>>,
    pub coords: NodalMatrix,
    /// Centroidal Jacobian `∂X/∂ξ` at `ξ = 0`.
    pub jbar: Matrix3<f64>,
    pub jbar_det: f64,
    pub modes: EasModes,
    gauss: Vec<PointGeometry>,
    centroid: PointGeometry,
}

impl Hex8EAS {
    /// `index` only labels errors.
    pub fn new(
        index: usize,
        node_ids: [usize; 8],
        coords: NodalMatrix,
        modes: EasModes,
        initial: &MaterialState,
    ) -> Result<Self> {
        let jbar = coords * shape_derivatives(&Vector3::zeros());
        let jbar_det = jbar.determinant();
        if !(jbar_det > 0.0) {
            return Err(Error::NegativeJacobian {
                element: index,
                det: jbar_det,
            });
        }
        let jbar_inv = jbar.try_inverse().ok_or(Error::Singular("centroidal Jacobian"))?;
        let gauss = gauss_points()
            .iter()
            .map(|xi| point_geometry(index, &coords, xi, &jbar_inv, jbar_det, modes))
            .collect::<Result<Vec<_>>>()?;
        let centroid = point_geometry(index, &coords, &Vector3::zeros(), &jbar_inv, jbar_det, modes)?;
        Ok(Self {
            node_ids,
            alpha: Vector12::zeros(),
            gauss_states: vec![initial.clone(); 8],
            green: vec![Vector6::zeros(); 8],
            pk2: vec![Vector6::zeros(); 8],
            coords,
            jbar,
            jbar_det,
            modes,
            gauss,
            centroid,
        })
    }

    pub fn gauss_geometry(&self) -> &[PointGeometry] {
        &self.gauss
    }

    /// Reference volume by Gauss quadrature.
    pub fn volume(&self) -> f64 {
        self.gauss.iter().map(|g| g.det_j).sum()
    }

    /// Deformation gradient at the element centroid.
    pub fn centroid_f(&self, u: &NodalMatrix) -> Matrix3<f64> {
        Matrix3::identity() + u * self.centroid.dn_dx
    }
}

/// Total Green–Lagrange strain `E_u + E_α` at a parent point.
pub fn element_strain(el: &Hex8EAS, u: &NodalMatrix, alpha: &Vector12, xi: &Vector3<f64>) -> Result<Vector6<f64>> {
    if xi.iter().any(|c| c.abs() > 1.0) {
        return Err(Error::InvalidParameter(format!("parent point {xi:?} outside the element")));
    }
    let jbar_inv = el.jbar.try_inverse().ok_or(Error::Singular("centroidal Jacobian"))?;
    let geo = point_geometry(usize::MAX, &el.coords, xi, &jbar_inv, el.jbar_det, el.modes)?;
    Ok(green_lagrange_from_gradient(&(u * geo.dn_dx)) + geo.enhanced * alpha)
}

/// `δE_u = B δu` for DOF ordering `3a + i`.
fn strain_displacement(f: &Matrix3<f64>, dn_dx: &SMatrix<f64, 8, 3>) -> Matrix6x24 {
    let mut b = Matrix6x24::zeros();
    for a in 0..8 {
        let g = dn_dx.row(a);
        for i in 0..3 {
            let col = 3 * a + i;
            for (r, &(k, l)) in VOIGT_PAIRS.iter().enumerate() {
                b[(r, col)] = if k == l {
                    f[(i, k)] * g[k]
                } else {
                    f[(i, k)] * g[l] + f[(i, l)] * g[k]
                };
            }
        }
    }
    b
}

/// Data needed to update `α` once the displacement correction is known.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRecovery {
    pub kaa_inv: Matrix12,
    pub kau: Matrix12x24,
    pub f_alpha: Vector12,
}

impl AlphaRecovery {
    /// `Δα = −K_αα⁻¹ (f_α + K_αu Δu)`.
    pub fn delta_alpha(&self, du: &Vector24) -> Vector12 {
        -(self.kaa_inv * (self.f_alpha + self.kau * du))
    }
}

/// Element response at the current iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementResponse {
    /// `∫ Bᵀ S dV`.
    pub f_int: Vector24,
    /// `∫ Gᵀ S dV`, zero at equilibrium of the enhanced modes.
    pub f_alpha: Vector12,
    /// `f_int − K_uα K_αα⁻¹ f_α`.
    pub f_condensed: Vector24,
    /// `K_uu − K_uα K_αα⁻¹ K_αu`.
    pub stiffness: Matrix24,
    pub recovery: AlphaRecovery,
    /// Trial Gauss-point states; committed by the caller on convergence.
    pub states: Vec<MaterialState>,
    pub green: Vec<Vector6<f64>>,
    pub pk2: Vec<Vector6<f64>>,
    pub max_substeps: usize,
}

/// Internal force and condensed tangent with every Gauss point integrated
/// from the element's committed states over `dt`.
pub fn element_force_stiffness(
    index: usize,
    el: &Hex8EAS,
    u: &NodalMatrix,
    alpha: &Vector12,
    crystal: &Crystal,
    dt: f64,
    cfg: &RelaxationConfig,
) -> Result<ElementResponse> {
    let f_centroid = el.centroid_f(u);
    let mut f_int = Vector24::zeros();
    let mut f_alpha = Vector12::zeros();
    let mut kuu = Matrix24::zeros();
    let mut kua = SMatrix::<f64, 24, 12>::zeros();
    let mut kau = Matrix12x24::zeros();
    let mut kaa = Matrix12::zeros();
    let mut states = Vec::with_capacity(8);
    let mut green = Vec::with_capacity(8);
    let mut pk2 = Vec::with_capacity(8);
    let mut max_substeps = 0;

    for (point, geo) in el.gauss.iter().enumerate() {
        let grad = u * geo.dn_dx;
        let f = Matrix3::identity() + grad;
        let e = green_lagrange_from_gradient(&grad) + geo.enhanced * alpha;
        let upd = update_point(&e, &f_centroid, &el.gauss_states[point], dt, crystal, cfg).map_err(|source| {
            Error::AtPoint {
                element: index,
                point,
                source: Box::new(source),
            }
        })?;
        let s = upd.response.pk2;
        let d = upd.response.tangent;
        let b = strain_displacement(&f, &geo.dn_dx);
        let w = geo.det_j;

        let db = d * b;
        let dg = d * geo.enhanced;
        f_int += w * b.transpose() * s;
        f_alpha += w * geo.enhanced.transpose() * s;
        kuu += w * b.transpose() * db;
        kua += w * b.transpose() * dg;
        // Kept apart from K_uα: the plastic tangent need not be symmetric.
        kau += w * geo.enhanced.transpose() * db;
        kaa += w * geo.enhanced.transpose() * dg;

        let st = stress_to_tensor(&s);
        let gs = geo.dn_dx * st * geo.dn_dx.transpose();
        for a in 0..8 {
            for c in 0..8 {
                let v = w * gs[(a, c)];
                for i in 0..3 {
                    kuu[(3 * a + i, 3 * c + i)] += v;
                }
            }
        }

        max_substeps = max_substeps.max(upd.trace.substeps);
        states.push(upd.state);
        green.push(e);
        pk2.push(s);
    }

    let kaa_inv = kaa.try_inverse().ok_or(Error::Singular("enhanced-strain block"))?;
    let f_condensed = f_int - kua * (kaa_inv * f_alpha);
    let stiffness = kuu - kua * kaa_inv * kau;
    Ok(ElementResponse {
        f_int,
        f_alpha,
        f_condensed,
        stiffness,
        recovery: AlphaRecovery {
            kaa_inv,
            kau,
            f_alpha,
        },
        states,
        green,
        pk2,
        max_substeps,
    })
}

/// Eigenvalues of `sym(K)` below `rel_tol · max|λ|`.
pub fn zero_energy_modes(k: &Matrix24, rel_tol: f64) -> usize {
    let sym = 0.5 * (k + k.transpose());
    let eig = sym.symmetric_eigenvalues();
    let scale = eig.amax();
    eig.iter().filter(|l| l.abs() < rel_tol * scale).count()
}
