//! Browser bindings for three isocap computations, used by `www/index.html`.
//! Everything here also builds and runs natively, which is how it is tested.

use isocap::asymmetry::fraenkel;
use isocap::capacity::{cap_ball, cap_ellipsoid};
use isocap::stability::{ball_profile as profile, default_profile_grid, QuadraticFormSpec};
use isocap::StarDomain;
use wasm_bindgen::prelude::*;

/// Ball profile g(r) = Cap_R(B_r) + f_η(|B_r|) on the default grid, as
/// interleaved pairs `[r₀, g₀, r₁, g₁, …]`.
#[wasm_bindgen]
pub fn ball_profile(outer_radius: f64, eta: f64) -> Result<Vec<f64>, String> {
    if !(outer_radius > 1.0) {
        return Err(format!("R must exceed 1, got {outer_radius}"));
    }
    let p = profile(&default_profile_grid(outer_radius), outer_radius, eta, 3).map_err(|e| e.to_string())?;
    Ok(p.radii.iter().zip(&p.values).flat_map(|(r, g)| [*r, *g]).collect())
}

/// Second-variation eigenvalues μ_l for l = 0..=lmax in ℝ³; relative to
/// B_R when `outer_radius` is finite, absolute otherwise.
#[wasm_bindgen]
pub fn spectrum(outer_radius: f64, lmax: usize) -> Result<Vec<f64>, String> {
    let spec = if outer_radius.is_finite() {
        if !(outer_radius > 1.0) {
            return Err(format!("R must exceed 1, got {outer_radius}"));
        }
        QuadraticFormSpec::relative(3, outer_radius)
    } else {
        QuadraticFormSpec::absolute(3)
    };
    Ok(isocap::stability::spectrum(&spec, lmax.min(64)).iter().map(|e| e.form).collect())
}

/// `[deficit, fraenkel, deficit / fraenkel²]` for the volume-preserving
/// ellipsoid with parameter ε.
#[wasm_bindgen]
pub fn ellipsoid_point(eps: f64) -> Result<Vec<f64>, String> {
    let domain = StarDomain::ellipsoid(eps).map_err(|e| e.to_string())?;
    let a = 1.0 + eps;
    let deficit = cap_ellipsoid([a, a, 1.0 / (a * a)]).map_err(|e| e.to_string())? - cap_ball(1.0, 3);
    let asym = fraenkel(&domain).value;
    let ratio = if asym > 0.0 { deficit / (asym * asym) } else { f64::NAN };
    Ok(vec![deficit, asym, ratio])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn profile_pairs_contain_the_unit_ball() {
        let p = ball_profile(2.0, 0.01).unwrap();
        assert_eq!(p.len(), 800);
        let g1 = p.chunks(2).find(|c| c[0] == 1.0).unwrap()[1];
        // Cap_2(B₁) = 8π, plus f_η(|B₁|) = 0
        assert!((g1 - 8.0 * PI).abs() < 1e-12);
        assert!(ball_profile(1.0, 0.01).is_err());
    }

    #[test]
    fn spectrum_modes() {
        let abs = spectrum(f64::INFINITY, 3).unwrap();
        assert_eq!(abs, vec![-2.0, 0.0, 2.0, 4.0]);
        let rel = spectrum(2.0, 1).unwrap();
        assert!((rel[1] - 24.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_point_is_positive() {
        let [d, a, q] = ellipsoid_point(0.2).unwrap()[..] else { panic!() };
        assert!(d > 0.0 && a > 0.0 && q > 1.0);
        assert!(ellipsoid_point(0.0).unwrap()[0].abs() < 1e-12);
        assert!(ellipsoid_point(0.7).is_err());
    }
}
