use super::CapacityError;
use crate::sphere::{gauss_legendre, surface_area};

/// Cap(B_r) = (N−2) σ_{N−1} r^{N−2}.
pub fn cap_ball(radius: f64, n: usize) -> f64 {
    assert!(n >= 3, "capacity needs N ≥ 3");
    (n as f64 - 2.0) * surface_area(n) * radius.powi(n as i32 - 2)
}

/// Cap_R(B_r) = (N−2) σ_{N−1} / (r^{2−N} − R^{2−N}).
pub fn cap_ball_rel(radius: f64, outer_radius: f64, n: usize) -> Result<f64, CapacityError> {
    if n < 3 {
        return Err(CapacityError::Input(format!("capacity needs N ≥ 3, got {n}")));
    }
    if !(radius > 0.0 && radius < outer_radius) {
        return Err(CapacityError::Input(format!(
            "need 0 < r < R, got r = {radius}, R = {outer_radius}"
        )));
    }
    let k = n as i32 - 2;
    let denom = if outer_radius.is_infinite() {
        radius.powi(-k)
    } else {
        radius.powi(-k) - outer_radius.powi(-k)
    };
    Ok(k as f64 * surface_area(n) / denom)
}

/// Capacity of the solid ellipsoid with semi-axes a, b, c:
/// Cap = 8π / I, I = ∫₀^∞ ds / √((a²+s)(b²+s)(c²+s)).
///
/// With s = k(1−w²)/w², k = (abc)^{2/3}, the integral becomes
/// ∫₀¹ 2k dw / √∏(k + (a_i² − k)w²), smooth on [0, 1].
pub fn cap_ellipsoid(axes: [f64; 3]) -> Result<f64, CapacityError> {
    if axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(CapacityError::Input(format!("semi-axes must be positive: {axes:?}")));
    }
    let k = (axes[0] * axes[1] * axes[2]).powf(2.0 / 3.0);
    let (x, w) = gauss_legendre(96);
    let integral: f64 = x
        .iter()
        .zip(&w)
        .map(|(x, w)| {
            let t = 0.5 * (x + 1.0);
            let t2 = t * t;
            let p: f64 = axes.iter().map(|a| k + (a * a - k) * t2).product();
            0.5 * w * 2.0 * k / p.sqrt()
        })
        .sum();
    Ok(8.0 * std::f64::consts::PI / integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    #[test]
    fn ball_values() {
        assert_relative_eq!(cap_ball(1.0, 3), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(cap_ball(2.0, 3), 8.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(cap_ball(1.0, 4), 4.0 * PI * PI, epsilon = 1e-13);
    }

    #[test]
    fn ball_energy_integral() {
        // σ ∫_1^∞ |d/dr r^{-1}|² r² dr = 4π, by Gauss–Legendre in 1/r
        let (x, w) = gauss_legendre(20);
        let e: f64 = x
            .iter()
            .zip(&w)
            .map(|(x, w)| {
                let s = 0.5 * (x + 1.0);
                // r = 1/s: |u'|² r² dr = s⁴ · s⁻² · s⁻² ds
                let jac = 1.0 / (s * s);
                0.5 * w * s.powi(4) * jac * jac
            })
            .sum();
        assert_relative_eq!(4.0 * PI * e, cap_ball(1.0, 3), epsilon = 1e-13);
    }

    #[test]
    fn relative_ball_values() {
        assert_relative_eq!(cap_ball_rel(1.0, 2.0, 3).unwrap(), 8.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(cap_ball_rel(1.0, f64::INFINITY, 3).unwrap(), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(cap_ball_rel(1.0, 1e9, 3).unwrap(), 4.0 * PI, max_relative = 1e-8);
        assert!(cap_ball_rel(2.0, 2.0, 3).is_err());
    }

    #[test]
    fn relative_ball_monotone() {
        for n in [3, 4, 5] {
            for r in [0.3, 0.7, 1.0, 1.4] {
                let mut prev = f64::INFINITY;
                for big_r in [1.5, 2.0, 3.0, 5.0, 10.0] {
                    let c = cap_ball_rel(r, big_r, n).unwrap();
                    assert!(c < prev);
                    prev = c;
                }
            }
            let mut prev = 0.0;
            for r in [0.3, 0.7, 1.0, 1.4] {
                let c = cap_ball_rel(r, 2.0, n).unwrap();
                assert!(c > prev);
                prev = c;
            }
        }
    }

    #[test]
    fn ellipsoid_special_cases() {
        assert_relative_eq!(cap_ellipsoid([1.0; 3]).unwrap(), 4.0 * PI, epsilon = 1e-13);
        assert_relative_eq!(cap_ellipsoid([2.5; 3]).unwrap(), 10.0 * PI, epsilon = 1e-13);
        // oblate spheroid: 4π √(a²−c²) / arccos(c/a)
        for (a, c) in [(1.1f64, 1.0 / 1.21), (1.4, 1.0 / 1.96), (2.0, 0.3)] {
            let exact = 4.0 * PI * (a * a - c * c).sqrt() / (c / a).acos();
            assert_relative_eq!(cap_ellipsoid([a, a, c]).unwrap(), exact, epsilon = 1e-12);
        }
        // prolate spheroid: 4π √(c²−a²) / acosh(c/a)
        let (a, c) = (0.8f64, 1.5f64);
        let exact = 4.0 * PI * (c * c - a * a).sqrt() / (c / a).acosh();
        assert_relative_eq!(cap_ellipsoid([a, a, c]).unwrap(), exact, epsilon = 1e-12);
        // permutation invariance
        assert_abs_diff_eq!(
            cap_ellipsoid([1.0, 2.0, 0.5]).unwrap(),
            cap_ellipsoid([0.5, 1.0, 2.0]).unwrap(),
            epsilon = 1e-12
        );
    }
}
