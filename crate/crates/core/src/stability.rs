//! Spectral side of the stability analysis around the unit ball.
//!
//! For φ = Σ a_{l,m} Y_{l,m}, the harmonic extension is H(φ) = Σ a R_l(r) Y
//! and the extension energy is diagonal, λ_l = −R_l'(1). The second
//! variation of capacity under volume-preserving perturbations and the
//! H^{1/2} norm are therefore plain weighted sums of per-degree energies.

use rayon::prelude::*;
use serde::Serialize;

use crate::asymmetry::{alpha, alpha_r};
use crate::capacity::{cap_ball_rel, capacity, deficit, CapacityError, CapacityMode, Solver};
use crate::domains::StarDomain;
use crate::sphere::{unit_ball_volume, HarmonicCoeffs};
use crate::vec3;

/// λ_l for the exterior problem, −d/dr r^{−(l+N−2)} at r = 1.
pub fn dtn_exterior(l: usize, n: usize) -> f64 {
    (l + n) as f64 - 2.0
}

/// λ_l for the shell B_R ∖ B₁: (N+l−2) + (2l+N−2)/(R^{2l+N−2} − 1).
pub fn dtn_relative(l: usize, n: usize, outer_radius: f64) -> f64 {
    let e = (2 * l + n) as f64 - 2.0;
    (l + n) as f64 - 2.0 + e / (outer_radius.powf(e) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFormSpec {
    pub dimension: usize,
    pub mode: CapacityMode,
}

impl QuadraticFormSpec {
    pub fn absolute(dimension: usize) -> Self {
        Self {
            dimension,
            mode: CapacityMode::Absolute,
        }
    }

    pub fn relative(dimension: usize, outer_radius: f64) -> Self {
        Self {
            dimension,
            mode: CapacityMode::Relative { outer_radius },
        }
    }

    pub fn eigenvalue(&self, l: usize) -> f64 {
        match self.mode {
            CapacityMode::Absolute => dtn_exterior(l, self.dimension),
            CapacityMode::Relative { outer_radius } => dtn_relative(l, self.dimension, outer_radius),
        }
    }

    /// 2|∂_ν u₀|² on ∂B₁ for the ball potential u₀: (N−2) in ℝ^N and
    /// (N−2)/(1−R^{2−N}) in B_R.
    pub fn prefactor(&self) -> f64 {
        let k = self.dimension as f64 - 2.0;
        match self.mode {
            CapacityMode::Absolute => 2.0 * k * k,
            CapacityMode::Relative { outer_radius } => {
                let g = 1.0 - outer_radius.powf(-k);
                2.0 * k * k / (g * g)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub degree: usize,
    /// λ_l.
    pub energy: f64,
    /// μ_l = prefactor · (λ_l − (N−1)).
    pub form: f64,
}

pub fn spectrum(spec: &QuadraticFormSpec, lmax: usize) -> Vec<SpectrumEntry> {
    (0..=lmax)
        .map(|l| {
            let energy = spec.eigenvalue(l);
            SpectrumEntry {
                degree: l,
                energy,
                form: spec.prefactor() * (energy - (spec.dimension as f64 - 1.0)),
            }
        })
        .collect()
}

/// ∂²Cap_*(B₁)[φ, φ] = prefactor · Σ a²_{l,m} (λ_l − (N−1)).
pub fn second_variation(phi: &HarmonicCoeffs, spec: &QuadraticFormSpec) -> f64 {
    let n1 = spec.dimension as f64 - 1.0;
    spec.prefactor()
        * phi
            .degree_energies()
            .iter()
            .enumerate()
            .map(|(l, e)| e * (spec.eigenvalue(l) - n1))
            .sum::<f64>()
}

/// ‖φ‖²_{H^{1/2}} = Σ a²_{l,m} (1 + λ_l).
pub fn h_half_norm(phi: &HarmonicCoeffs, spec: &QuadraticFormSpec) -> f64 {
    phi.degree_energies()
        .iter()
        .enumerate()
        .map(|(l, e)| e * (1.0 + spec.eigenvalue(l)))
        .sum()
}

/// Volume penalty: (ω_N − s)/η below the ball volume, −η(s − ω_N) above.
pub fn f_eta(s: f64, eta: f64, n: usize) -> f64 {
    let w = unit_ball_volume(n);
    if s <= w {
        (w - s) / eta
    } else {
        -eta * (s - w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Penalized {
    pub value: f64,
    pub error: f64,
}

/// 𝒞_η(Ω) = Cap_*(Ω) + f_η(|Ω|), no volume normalization.
pub fn penalized(domain: &StarDomain, eta: f64, mode: CapacityMode, solver: &Solver) -> Result<Penalized, CapacityError> {
    let cap = capacity(domain, mode, solver)?;
    Ok(Penalized {
        value: cap.value + f_eta(domain.volume(), eta, 3),
        error: cap.total_error(),
    })
}

/// √(ε_j² + σ²(a − ε_j)²).
pub fn asymmetry_penalty(a: f64, eps_j: f64, sigma: f64) -> f64 {
    (eps_j * eps_j + sigma * sigma * (a - eps_j).powi(2)).sqrt()
}

/// 𝒞_{η,j}(Ω) = 𝒞_η(Ω) + √(ε_j² + σ²(α_*(Ω) − ε_j)²), α_* = α (absolute) or α_R.
pub fn penalized_j(
    domain: &StarDomain,
    eta: f64,
    sigma: f64,
    eps_j: f64,
    mode: CapacityMode,
    solver: &Solver,
) -> Result<Penalized, CapacityError> {
    if !(eps_j > 0.0) || !(sigma > 0.0 && sigma < 1.0) {
        return Err(CapacityError::Input(format!("need ε_j > 0 and σ ∈ (0,1), got {eps_j}, {sigma}")));
    }
    let base = penalized(domain, eta, mode, solver)?;
    let a = match mode {
        CapacityMode::Absolute => alpha(domain),
        CapacityMode::Relative { .. } => alpha_r(domain)?,
    };
    Ok(Penalized {
        value: base.value + asymmetry_penalty(a, eps_j, sigma),
        error: base.error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub argmin: f64,
    /// min over r ≠ 1 of (g(r) − g(1))/|r − 1|; NaN when 1 is not on the grid.
    pub c_emp: f64,
}

/// 400 radii 1 + jh, j = −200..199, h = min(1, R−1)/201; contains r = 1 exactly.
pub fn default_profile_grid(outer_radius: f64) -> Vec<f64> {
    let h = (outer_radius - 1.0).min(1.0) / 201.0;
    (-200..200).map(|j| 1.0 + j as f64 * h).collect()
}

/// g(r) = Cap_R(B_r) + f_η(ω_N r^N).
pub fn ball_profile(radii: &[f64], outer_radius: f64, eta: f64, n: usize) -> Result<BallProfile, CapacityError> {
    if radii.is_empty() {
        return Err(CapacityError::Input("empty radius grid".into()));
    }
    let w = unit_ball_volume(n);
    let values = radii
        .iter()
        .map(|&r| Ok(cap_ball_rel(r, outer_radius, n)? + f_eta(w * r.powi(n as i32), eta, n)))
        .collect::<Result<Vec<f64>, CapacityError>>()?;
    let (imin, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if *v < best.1 { (i, *v) } else { best });
    let g1 = cap_ball_rel(1.0, outer_radius, n)?;
    let has_one = radii.iter().any(|r| *r == 1.0);
    let c_emp = if has_one {
        radii
            .iter()
            .zip(&values)
            .filter(|(r, _)| **r != 1.0)
            .map(|(r, g)| (g - g1) / (r - 1.0).abs())
            .fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    };
    Ok(BallProfile {
        radii: radii.to_vec(),
        values,
        argmin: radii[imin],
        c_emp,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorRow {
    pub t: f64,
    pub deficit: f64,
    pub deficit_err: f64,
    /// ½ t² ∂²Cap_*(B₁)[φ, φ].
    pub predicted: f64,
    /// (deficit − predicted)/t².
    pub e: f64,
    /// |x_Ω| of the solved domain.
    pub barycenter_norm: f64,
}

/// Second-order Taylor check along Ω_t = {(1 + tφ + c_t)x}, c_t fixing the
/// volume. In absolute mode Ω_t is translated so x_Ω = 0 (capacity is
/// unchanged; reported for the record).
pub fn taylor_check(
    phi: &HarmonicCoeffs,
    ladder: &[f64],
    spec: &QuadraticFormSpec,
    solver: &Solver,
) -> Result<Vec<TaylorRow>, CapacityError> {
    if spec.dimension != 3 {
        return Err(CapacityError::Input("shape solves are available for N = 3 only".into()));
    }
    let form = second_variation(phi, spec);
    ladder
        .par_iter()
        .map(|&t| {
            let mut domain = StarDomain::nearly_spherical_from_phi(&phi.scaled(t), true)?;
            if spec.mode == CapacityMode::Absolute {
                let b = domain.barycenter();
                domain = domain.translated(vec3::scale(b, -1.0));
            }
            let d = deficit(&domain, spec.mode, solver)?;
            let predicted = 0.5 * t * t * form;
            Ok(TaylorRow {
                t,
                deficit: d.value,
                deficit_err: d.error,
                predicted,
                e: (d.value - predicted) / (t * t),
                barycenter_norm: vec3::norm(domain.barycenter()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::SolverConfig;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn exterior_eigenvalues() {
        assert_eq!(dtn_exterior(0, 3), 1.0);
        assert_eq!(dtn_exterior(1, 3), 2.0);
        for n in 3..8 {
            assert_eq!(dtn_exterior(1, n) - (n as f64 - 1.0), 0.0);
        }
    }

    #[test]
    fn relative_eigenvalues() {
        assert_eq!(dtn_relative(1, 3, 2.0), 17.0 / 7.0);
        assert_eq!(dtn_relative(0, 3, 2.0), 2.0);
        for l in 0..=6 {
            for n in 3..6 {
                // the l = 0, N = 3 gap is exactly 1/(R − 1)
                let tol = if l == 0 && n == 3 { 1.0000011e-6 } else { 1e-10 };
                assert_abs_diff_eq!(dtn_relative(l, n, 1e6), dtn_exterior(l, n), epsilon = tol);
            }
        }
        assert_abs_diff_eq!(dtn_relative(0, 3, 1e6) - 1.0, 1.0 / (1e6 - 1.0), epsilon = 1e-15);
    }

    #[test]
    fn relative_eigenvalue_is_shell_flux() {
        // −R_l'(1) by central differences of the explicit shell mode
        for (l, big_r) in [(0usize, 2.0f64), (1, 2.0), (3, 1.5), (2, 4.0)] {
            let q = big_r.powi(2 * l as i32 + 1) - 1.0;
            let mode = |r: f64| -r.powi(l as i32) / q + (1.0 + 1.0 / q) * r.powi(-(l as i32 + 1));
            let h = 1e-5;
            let d = -(mode(1.0 + h) - mode(1.0 - h)) / (2.0 * h);
            assert_abs_diff_eq!(d, dtn_relative(l, 3, big_r), epsilon = 1e-8);
        }
    }

    #[test]
    fn spectral_monotonicity() {
        for n in 3..6 {
            for l in 0..6 {
                let mut prev = f64::INFINITY;
                for big_r in [1.2, 1.5, 2.0, 3.0, 4.0] {
                    let v = dtn_relative(l, n, big_r);
                    assert!(v > dtn_exterior(l, n));
                    assert!(v < prev);
                    prev = v;
                }
            }
            let s = spectrum(&QuadraticFormSpec::relative(n, 2.0), 8);
            assert!(s.windows(2).all(|w| w[1].energy > w[0].energy));
        }
    }

    #[test]
    fn form_examples() {
        let abs = QuadraticFormSpec::absolute(3);
        let t = 0.3;
        assert_eq!(second_variation(&HarmonicCoeffs::single(1, -1, t), &abs), 0.0);
        assert_abs_diff_eq!(second_variation(&HarmonicCoeffs::single(2, 0, t), &abs), 2.0 * t * t, epsilon = 1e-15);
        assert_abs_diff_eq!(second_variation(&HarmonicCoeffs::single(0, 0, t), &abs), -2.0 * t * t, epsilon = 1e-15);
        assert_eq!(spectrum(&abs, 3)[1].form, 0.0);
        let rel = QuadraticFormSpec::relative(3, 2.0);
        // ½·prefactor·(λ₁ − 2) = (N−2)²/(1−R^{2−N})² · N/(R^N − 1) = 12/7
        assert_abs_diff_eq!(0.5 * second_variation(&HarmonicCoeffs::single(1, 0, 1.0), &rel), 12.0 / 7.0, epsilon = 1e-13);
    }

    #[test]
    fn h_half_examples() {
        let abs = QuadraticFormSpec::absolute(3);
        assert_eq!(h_half_norm(&HarmonicCoeffs::zeros(3), &abs), 0.0);
        assert_eq!(h_half_norm(&HarmonicCoeffs::single(2, 0, 1.0), &abs), 4.0);
    }

    #[test]
    fn f_eta_branches() {
        let w = unit_ball_volume(3);
        assert_abs_diff_eq!(w, 4.0 * PI / 3.0, epsilon = 1e-14);
        assert_eq!(f_eta(w, 0.1, 3), 0.0);
        assert_abs_diff_eq!(f_eta(w - 0.2, 0.1, 3), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f_eta(w + 0.2, 0.1, 3), -0.02, epsilon = 1e-12);
    }

    #[test]
    fn penalized_examples() {
        let solver = Solver::default();
        let b = StarDomain::unit_ball();
        let p = penalized(&b, 0.01, CapacityMode::Absolute, &solver).unwrap();
        assert_abs_diff_eq!(p.value, 4.0 * PI, epsilon = 1e-12);
        let r = 1.1;
        let br = StarDomain::ball(r, [0.0; 3]).unwrap();
        let mode = CapacityMode::Relative { outer_radius: 2.0 };
        let g = ball_profile(&[r], 2.0, 0.01, 3).unwrap().values[0];
        assert_abs_diff_eq!(penalized(&br, 0.01, mode, &solver).unwrap().value, g, epsilon = 1e-10);
        let pj = penalized_j(&b, 0.01, 0.5, 0.1, CapacityMode::Absolute, &solver).unwrap();
        assert_abs_diff_eq!(pj.value, 4.0 * PI + 0.1 * (1.0f64 + 0.25).sqrt(), epsilon = 1e-9);
        assert_eq!(asymmetry_penalty(0.1, 0.1, 0.5), 0.1);
        assert!(penalized_j(&b, 0.01, 1.5, 0.1, CapacityMode::Absolute, &solver).is_err());
    }

    #[test]
    fn penalized_minimized_by_ball() {
        let solver = Solver::Harmonic(SolverConfig::default());
        let mode = CapacityMode::Relative { outer_radius: 2.0 };
        let base = penalized(&StarDomain::unit_ball(), 0.01, mode, &solver).unwrap().value;
        for eps in [0.05, 0.1, 0.2] {
            let e = StarDomain::ellipsoid(eps).unwrap();
            let p = penalized(&e, 0.01, mode, &solver).unwrap();
            assert!(p.value >= base - p.error);
        }
    }

    #[test]
    fn profile_regimes() {
        let grid = default_profile_grid(2.0);
        assert_eq!(grid.len(), 400);
        let small = ball_profile(&grid, 2.0, 0.01, 3).unwrap();
        assert_eq!(small.argmin, 1.0);
        assert!(small.c_emp > 0.0);
        let large = ball_profile(&grid, 2.0, 10.0, 3).unwrap();
        assert_ne!(large.argmin, 1.0);
    }

    #[test]
    fn taylor_translation_mode() {
        let solver = Solver::Harmonic(SolverConfig::with_lmax(12));
        let rows = taylor_check(&HarmonicCoeffs::single(1, 0, 1.0), &[0.01], &QuadraticFormSpec::absolute(3), &solver).unwrap();
        assert!(rows[0].deficit / 1e-4 < 1e-4);
        assert!(rows[0].barycenter_norm < 1e-12);
    }

    proptest! {
        #[test]
        fn f_eta_sandwich(a in 0.0f64..8.0, b in 0.0f64..8.0, eta in 0.01f64..1.0) {
            let (s, t) = if a <= b { (a, b) } else { (b, a) };
            let diff = f_eta(s, eta, 3) - f_eta(t, eta, 3);
            prop_assert!(eta * (t - s) <= diff + 1e-12);
        }

        #[test]
        fn asymmetry_penalty_is_one_lipschitz(a in 0.0f64..2.0, h in -0.1f64..0.1, eps in 0.001f64..0.5, sigma in 0.01f64..0.99) {
            let d = (asymmetry_penalty(a + h, eps, sigma) - asymmetry_penalty(a, eps, sigma)).abs();
            prop_assert!(d <= h.abs() + 1e-15);
        }

        #[test]
        fn kernel_and_positivity(vals in proptest::collection::vec(-1.0f64..1.0, 21)) {
            let abs = QuadraticFormSpec::absolute(3);
            let mut lin = HarmonicCoeffs::zeros(1);
            lin.set(1, -1, vals[0]);
            lin.set(1, 0, vals[1]);
            lin.set(1, 1, vals[2]);
            prop_assert_eq!(second_variation(&lin, &abs), 0.0);
            // degrees 2..=4 only
            let mut high = HarmonicCoeffs::zeros(4);
            for (k, v) in vals.iter().enumerate() {
                high.values_mut()[4 + k] = *v;
            }
            let norm = high.l2_norm_sq();
            if norm > 1e-12 {
                let unit = high.scaled(1.0 / norm.sqrt());
                prop_assert!(second_variation(&unit, &abs) > 0.0);
                prop_assert!(h_half_norm(&unit, &abs) >= unit.l2_norm_sq());
            }
        }
    }
}
