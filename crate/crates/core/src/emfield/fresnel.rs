//! Fresnel reflection coefficients of a planar half-space.

use num_complex::Complex64;

use crate::scene::Material;

/// Reflection coefficients (R_s, R_p) for incidence angle `theta_i` measured
/// from the surface normal.
///
/// R_s multiplies the field component perpendicular to the plane of
/// incidence, R_p the component in it, with basis ŝ = k̂ᵢ × n̂ and p̂ = ŝ × k̂
/// on both sides. A perfect conductor gives (−1, +1).
pub fn fresnel(material: &Material, theta_i: f64) -> (Complex64, Complex64) {
    if material.pec {
        return (Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0));
    }
    let eps = material.eps();
    let mu = material.mu();
    let (sin, cos) = theta_i.sin_cos();
    let root = (mu * eps - sin * sin).sqrt();
    let r_s = (mu * cos - root) / (mu * cos + root);
    let r_p = (eps * cos - root) / (eps * cos + root);
    (r_s, r_p)
}
