//! Strain measures and finite-strain kinematics.
//!
//! The total strain carried by the constitutive law is the Lagrangian Hencky
//! strain `ε = ½ log(2E + I)`, approximated by the Padé-[2/2] rational form
//!
//! ```text
//! ε ≈ 3 (E·E + E) · (2 E·E + 6 E + 3 I)⁻¹
//! ```
//!
//! Its first variation is assembled column by column from the product rule on
//! `A·B⁻¹`; the second variation is only ever needed contracted with a stress
//! and is obtained by central differences of that contraction.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::lattice::SlipSystem;
use crate::voigt::{strain_basis_tensor, strain_from_tensor, strain_norm, strain_to_tensor};
use crate::{Error, Result, SlipVector};

/// Green–Lagrange strain `½(FᵀF − I)`, strain-like Voigt.
pub fn green_lagrange(f: &Matrix3<f64>) -> Vector6<f64> {
    green_lagrange_from_gradient(&(f - Matrix3::identity()))
}

/// `½(H + Hᵀ + HᵀH)` from the displacement gradient `H = F − I`; avoids the
/// cancellation in `FᵀF − I` at small strain.
pub fn green_lagrange_from_gradient(h: &Matrix3<f64>) -> Vector6<f64> {
    strain_from_tensor(&(0.5 * (h + h.transpose() + h.transpose() * h)))
}

/// Green–Lagrange strain together with its Padé Hencky strain and `dε/dE`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainState {
    pub green: Vector6<f64>,
    pub hencky: Vector6<f64>,
    /// `dε/dE`, mapping strain-like increments to strain-like increments.
    pub jacobian: Matrix6<f64>,
}

impl StrainState {
    /// The undeformed state.
    pub fn reference() -> Self {
        Self {
            green: Vector6::zeros(),
            hencky: Vector6::zeros(),
            jacobian: Matrix6::identity(),
        }
    }
}

struct PadeParts {
    e: Matrix3<f64>,
    numerator: Matrix3<f64>,
    denominator_inv: Matrix3<f64>,
}

fn pade_parts(green: &Vector6<f64>) -> Result<PadeParts> {
    let e = strain_to_tensor(green);
    let ee = e * e;
    let numerator = ee + e;
    let denominator: Matrix3<f64> = 2.0 * ee + 6.0 * e + 3.0 * Matrix3::identity();
    let scale = denominator.norm();
    if denominator.determinant().abs() <= 1e-14 * scale * scale * scale {
        return Err(Error::PadeSingular);
    }
    let denominator_inv = denominator.try_inverse().ok_or(Error::PadeSingular)?;
    Ok(PadeParts {
        e,
        numerator,
        denominator_inv,
    })
}

fn pade_value(p: &PadeParts) -> Vector6<f64> {
    let eps = 3.0 * p.numerator * p.denominator_inv;
    strain_from_tensor(&(0.5 * (eps + eps.transpose())))
}

fn pade_jacobian(p: &PadeParts) -> Matrix6<f64> {
    let ratio = p.numerator * p.denominator_inv;
    let mut jac = Matrix6::zeros();
    for j in 0..6 {
        let de = strain_basis_tensor(j);
        let de_e = de * p.e + p.e * de;
        let d_num = de_e + de;
        let d_den = 2.0 * de_e + 6.0 * de;
        let d_eps = 3.0 * (d_num * p.denominator_inv - ratio * d_den * p.denominator_inv);
        jac.set_column(j, &strain_from_tensor(&(0.5 * (d_eps + d_eps.transpose()))));
    }
    jac
}

/// Padé-[2/2] Hencky strain and its first variation.
pub fn pade_hencky(green: &Vector6<f64>) -> Result<StrainState> {
    let parts = pade_parts(green)?;
    Ok(StrainState {
        green: *green,
        hencky: pade_value(&parts),
        jacobian: pade_jacobian(&parts),
    })
}

/// Padé-[2/2] Hencky strain without the variation.
pub fn pade_hencky_strain(green: &Vector6<f64>) -> Result<Vector6<f64>> {
    pade_parts(green).map(|p| pade_value(&p))
}

/// Second Piola–Kirchhoff stress conjugate to `E`: `S = (dε/dE)ᵀ σ`.
pub fn conjugate_stress(sigma: &Vector6<f64>, state: &StrainState) -> Vector6<f64> {
    state.jacobian.transpose() * sigma
}

/// Material tangent `dS/dE` from `dσ/dε`.
///
/// `(dε/dE)ᵀ (dσ/dε) (dε/dE) + σ : d²ε/dEdE`, with the second term taken as
/// central differences of `(dε/dE)ᵀ σ` at fixed `σ`.
pub fn tangent_transform(
    dsigma_deps: &Matrix6<f64>,
    sigma: &Vector6<f64>,
    state: &StrainState,
) -> Result<Matrix6<f64>> {
    let d = &state.jacobian;
    let mut tangent = d.transpose() * dsigma_deps * d;
    if sigma.iter().any(|&s| s != 0.0) {
        let h = 1e-6 * strain_norm(&state.green).max(1.0);
        for j in 0..6 {
            let mut plus = state.green;
            let mut minus = state.green;
            plus[j] += h;
            minus[j] -= h;
            let jp = pade_jacobian(&pade_parts(&plus)?);
            let jm = pade_jacobian(&pade_parts(&minus)?);
            let column = (jp.transpose() * sigma - jm.transpose() * sigma) / (2.0 * h);
            for i in 0..6 {
                tangent[(i, j)] += column[i];
            }
        }
    }
    Ok(tangent)
}

/// Scalar Padé-[2/2] approximation of `log x` about `x = 1`.
pub fn pade_log(x: f64) -> f64 {
    3.0 * (x * x - 1.0) / (x * x + 4.0 * x + 1.0)
}

/// Error diagnostics of the Padé logarithm at strain norm `|E|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogErrorDiagnostics {
    /// Upper bound on `‖[2/2](2E+I) − log(2E+I)‖` for any `E` with this norm.
    pub upper_bound: f64,
    /// Closed-form error in `ε` for a uniaxial strain of this magnitude.
    pub err1d: f64,
}

pub fn log_error_diagnostics(norm_e: f64) -> Result<LogErrorDiagnostics> {
    if !(norm_e >= 0.0 && norm_e < 0.5) {
        return Err(Error::BoundUndefined { norm: norm_e });
    }
    // pade_log(1 + 2e) rewritten in e to avoid forming 1 ± 2e.
    let pade = |e: f64| 6.0 * e * (1.0 + e) / (3.0 + 2.0 * e * (3.0 + e));
    let upper_bound = pade(-norm_e) - (-2.0 * norm_e).ln_1p();
    let err1d = 0.5 * (pade(norm_e) - (2.0 * norm_e).ln_1p()).abs();
    Ok(LogErrorDiagnostics { upper_bound, err1d })
}

/// Padé error of an isochoric principal stretch state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncompressibleError {
    pub e3: f64,
    /// Frobenius norm of `½ log(2E+I) − ε_Padé`.
    pub absolute: f64,
    /// `absolute / ‖½ log(2E+I)‖`, zero at the identity.
    pub relative: f64,
}

/// Padé error for principal strains `E1`, `E2` with `E3` fixed by `det F = 1`.
pub fn incompressible_error(e1: f64, e2: f64) -> Result<IncompressibleError> {
    let det = 1.0 + 2.0 * e1 + 2.0 * e2 + 4.0 * e1 * e2;
    for value in [det, 1.0 + 2.0 * e1, 1.0 + 2.0 * e2] {
        if !(value > 0.0) {
            return Err(Error::DegenerateStretch { value });
        }
    }
    let e3 = 0.5 * (-1.0 + 1.0 / det);
    let exact = Vector3::new(
        0.5 * (1.0 + 2.0 * e1).ln(),
        0.5 * (1.0 + 2.0 * e2).ln(),
        -0.5 * det.ln(),
    );
    let pade = |e: f64| 3.0 * e * (1.0 + e) / (3.0 + 2.0 * e * (3.0 + e));
    let approx = Vector3::new(pade(e1), pade(e2), pade(e3));
    let absolute = (exact - approx).norm();
    let exact_norm = exact.norm();
    let relative = if exact_norm > 0.0 {
        absolute / exact_norm
    } else {
        0.0
    };
    Ok(IncompressibleError {
        e3,
        absolute,
        relative,
    })
}

/// Eigen-decomposition of a symmetric 3×3 matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues and the matrix whose columns are the eigenvectors.
pub fn symmetric_eigen_jacobi(a: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let mut a = 0.5 * (a + a.transpose());
    let mut v = Matrix3::identity();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let off = (a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2)).sqrt();
        if off <= f64::EPSILON * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = Matrix3::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            a = rot.transpose() * a * rot;
            v *= rot;
        }
    }
    (a.diagonal(), v)
}

/// Exact Hencky strain `½ log(2E + I)` through the spectral decomposition.
///
/// `E` itself is decomposed and `log(1 + 2λ)` taken with `ln_1p`, so the
/// result stays accurate relative to `‖E‖` at small strain.
pub fn exact_hencky(green: &Vector6<f64>) -> Result<Vector6<f64>> {
    let (values, vectors) = symmetric_eigen_jacobi(&strain_to_tensor(green));
    if values.iter().any(|&l| !(1.0 + 2.0 * l > 0.0)) {
        return Err(Error::InvalidParameter(
            "2E + I must be positive definite".into(),
        ));
    }
    let log = vectors * Matrix3::from_diagonal(&values.map(|l| 0.5 * (2.0 * l).ln_1p())) * vectors.transpose();
    Ok(strain_from_tensor(&log))
}

/// Result of the elastic/plastic split of the deformation gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticSplit {
    pub elastic: Matrix3<f64>,
    pub plastic: Matrix3<f64>,
    /// Plane normals pushed forward by the elastic part, `F_e · m_α`.
    pub normals: Vec<Vector3<f64>>,
}

/// `F_e = F · F_p⁻¹(prev) · (I − Σ Δγ_α m_α ⊗ n_α)` and `F_p = F_e⁻¹ · F`.
pub fn update_elastic_f(
    f: &Matrix3<f64>,
    fp_prev: &Matrix3<f64>,
    dgamma: &SlipVector,
    systems: &[SlipSystem],
) -> Result<ElasticSplit> {
    let fp_inv = fp_prev
        .try_inverse()
        .ok_or(Error::Singular("previous plastic deformation gradient"))?;
    let mut flow = Matrix3::identity();
    for (s, dg) in systems.iter().zip(dgamma.iter()) {
        flow -= *dg * s.dyad();
    }
    let elastic = f * fp_inv * flow;
    let plastic = elastic
        .try_inverse()
        .ok_or(Error::Singular("elastic deformation gradient"))?
        * f;
    let normals = systems.iter().map(|s| elastic * s.m).collect();
    Ok(ElasticSplit {
        elastic,
        plastic,
        normals,
    })
}
