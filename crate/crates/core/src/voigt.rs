//! Voigt storage conventions.
//!
//! Component order is (11, 22, 33, 23, 13, 12). Strain-like vectors carry
//! engineering shears (`2 E23` etc.), stress-like vectors carry the plain
//! tensor shears. The double contraction `A : B` of a strain-like and a
//! stress-like quantity is then an ordinary dot product.

use nalgebra::{Matrix3, Matrix6, Vector6};

/// Tensor index pair of each Voigt slot.
pub const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Symmetric tensor to strain-like Voigt (engineering shears).
///
/// Off-diagonal entries are averaged first, so slightly asymmetric input is
/// symmetrized on the way in.
pub fn strain_from_tensor(t: &Matrix3<f64>) -> Vector6<f64> {
    Vector6::new(
        t[(0, 0)],
        t[(1, 1)],
        t[(2, 2)],
        t[(1, 2)] + t[(2, 1)],
        t[(0, 2)] + t[(2, 0)],
        t[(0, 1)] + t[(1, 0)],
    )
}

pub fn strain_to_tensor(v: &Vector6<f64>) -> Matrix3<f64> {
    let (a, b, c) = (0.5 * v[3], 0.5 * v[4], 0.5 * v[5]);
    Matrix3::new(v[0], c, b, c, v[1], a, b, a, v[2])
}

pub fn stress_from_tensor(t: &Matrix3<f64>) -> Vector6<f64> {
    Vector6::new(
        t[(0, 0)],
        t[(1, 1)],
        t[(2, 2)],
        0.5 * (t[(1, 2)] + t[(2, 1)]),
        0.5 * (t[(0, 2)] + t[(2, 0)]),
        0.5 * (t[(0, 1)] + t[(1, 0)]),
    )
}

pub fn stress_to_tensor(v: &Vector6<f64>) -> Matrix3<f64> {
    Matrix3::new(v[0], v[5], v[4], v[5], v[1], v[3], v[4], v[3], v[2])
}

/// Frobenius norm of the tensor behind a strain-like vector.
pub fn strain_norm(v: &Vector6<f64>) -> f64 {
    strain_to_tensor(v).norm()
}

/// Frobenius norm of the tensor behind a stress-like vector.
pub fn stress_norm(v: &Vector6<f64>) -> f64 {
    stress_to_tensor(v).norm()
}

/// Largest absolute entry, used for relative matrix comparisons.
pub fn max_abs(m: &Matrix6<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Strain-like unit direction `j` as a symmetric tensor.
pub(crate) fn strain_basis_tensor(j: usize) -> Matrix3<f64> {
    let mut e = Vector6::zeros();
    e[j] = 1.0;
    strain_to_tensor(&e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contraction_is_dot_product() {
        let a = Matrix3::new(1.0, 0.2, -0.3, 0.2, 2.0, 0.5, -0.3, 0.5, -1.0);
        let b = Matrix3::new(0.4, -0.1, 0.7, -0.1, 0.3, 0.9, 0.7, 0.9, 1.5);
        let dense = a.component_mul(&b).sum();
        let voigt = strain_from_tensor(&a).dot(&stress_from_tensor(&b));
        assert!((dense - voigt).abs() < 1e-14);
    }

    #[test]
    fn conversions_invert() {
        let v = Vector6::new(0.1, -0.2, 0.3, 0.04, -0.05, 0.06);
        assert!((strain_from_tensor(&strain_to_tensor(&v)) - v).norm() < 1e-16);
        assert!((stress_from_tensor(&stress_to_tensor(&v)) - v).norm() < 1e-16);
    }
}
