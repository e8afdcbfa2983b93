//! Integration and harmonic analysis on the unit sphere.

mod harmonics;
mod quadrature;

pub use harmonics::{
    basis_matrix, eval_all, eval_harmonic, expand, harmonic_space_dim, lb_eigenvalue, num_coeffs,
    synthesize, HarmonicCoeffs, HarmonicIndex,
};
pub use quadrature::{build_quadrature, gauss_legendre, shared_quadrature, Direction, SphereQuadrature};

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereError {
    #[error("sphere quadrature is only available for dimension 3 (got N = {0})")]
    UnsupportedDimension(usize),
    #[error("invalid quadrature request: {0}")]
    InvalidDegree(String),
    #[error("quadrature exactness {available} is below the required degree {required}")]
    InsufficientQuadrature { required: usize, available: usize },
    #[error("sample count {got} does not match the {expected} quadrature nodes")]
    SampleCount { expected: usize, got: usize },
}

/// Γ(n/2) for a positive integer n.
fn gamma_half(n: usize) -> f64 {
    assert!(n > 0);
    let (mut value, mut k) = if n % 2 == 0 { (1.0, 2) } else { (PI.sqrt(), 1) };
    // Γ(k/2 + 1) = (k/2) Γ(k/2)
    while k < n {
        value *= k as f64 / 2.0;
        k += 2;
    }
    value
}

/// Surface area σ_{N−1} = 2π^{N/2}/Γ(N/2) of the unit sphere in ℝ^N.
pub fn surface_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Volume ω_N = σ_{N−1}/N of the unit ball in ℝ^N.
pub fn unit_ball_volume(n: usize) -> f64 {
    surface_area(n) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_sphere_measures() {
        assert_relative_eq!(surface_area(3), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(surface_area(4), 2.0 * PI * PI, epsilon = 1e-13);
        assert_relative_eq!(surface_area(2), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(5), 8.0 * PI * PI / 15.0, epsilon = 1e-13);
    }
}
