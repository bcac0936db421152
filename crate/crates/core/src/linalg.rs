//! Small dense complex matrices used throughout the two-level model.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;
pub type Vec4 = Vector4<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity() -> Mat2 {
    Mat2::identity()
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(c(0.0), -I, I, c(0.0))
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

/// Row-major flattening `Y_nm -> v[2n + m]`.
pub fn flatten(m: &Mat2) -> Vec4 {
    Vec4::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

pub fn unflatten(v: &Vec4) -> Mat2 {
    Mat2::new(v[0], v[1], v[2], v[3])
}

/// `U† M U`.
pub fn rotate(m: &Mat2, u: &Mat2) -> Mat2 {
    u.adjoint() * m * u
}

pub fn max_abs(m: &Mat2) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Trace of the product `A·B` without forming it.
pub fn trace_product(a: &Mat2, b: &Mat2) -> C64 {
    a[(0, 0)] * b[(0, 0)] + a[(0, 1)] * b[(1, 0)] + a[(1, 0)] * b[(0, 1)] + a[(1, 1)] * b[(1, 1)]
}

pub fn is_hermitian(m: &Mat2, tol: f64) -> bool {
    (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}
