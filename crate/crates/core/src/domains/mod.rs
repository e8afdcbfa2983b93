//! Star-shaped bodies `{c + t ω : 0 ≤ t < ρ(ω)}` and disjoint unions of them.

mod composite;
mod family;
mod record;

pub use composite::{CompositeDomain, TruncationReport};
pub use family::{generate_family, FamilyMember, FamilySpec, FamilyVariant};
pub use record::{parse_record, to_record, RECORD_HEADER};

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::sphere::{
    shared_quadrature, synthesize, unit_ball_volume, Direction, HarmonicCoeffs, SphereError,
    SphereQuadrature,
};
use crate::vec3::{self, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("‖φ‖∞ = {sup:.6} violates the nearly spherical bound 1/2")]
    Amplitude { sup: f64 },
    #[error("invalid domain parameter: {0}")]
    Parameter(String),
    #[error("component {component} is sliced by the sphere of radius {radius}")]
    Slicing { component: usize, radius: f64 },
    #[error("no component lies inside the sphere of radius {0}")]
    NothingInside(f64),
    #[error("components {0} and {1} are not certified disjoint")]
    NotDisjoint(usize, usize),
    #[error("domain is not star-shaped about the origin")]
    OriginOutside,
    #[error("volume correction did not converge (residual {0:e})")]
    VolumeCorrection(f64),
    #[error("domain record line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Sphere(#[from] SphereError),
}

/// Generator of the radial function before the overall scale is applied.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    /// ρ ≡ 1.
    Ball,
    /// ρ(ω) = (Σ ω_i²/a_i²)^{−1/2}.
    Ellipsoid { axes: [f64; 3] },
    /// ρ = 1 + φ with φ band-limited.
    Perturbed { phi: HarmonicCoeffs },
}

impl RadialProfile {
    fn eval(&self, d: &Direction) -> f64 {
        match self {
            Self::Ball => 1.0,
            Self::Ellipsoid { axes } => {
                let w = d.coords();
                let q: f64 = (0..3).map(|i| w[i] * w[i] / (axes[i] * axes[i])).sum();
                1.0 / q.sqrt()
            }
            Self::Perturbed { phi } => 1.0 + synthesize(phi, d),
        }
    }

    /// Quadrature exactness needed for volumes and barycenters.
    fn geometry_degree(&self) -> usize {
        match self {
            Self::Ball => 32,
            Self::Ellipsoid { .. } => 128,
            Self::Perturbed { phi } => (4 * phi.lmax() + 2).max(48),
        }
    }
}

/// Star-shaped body with radial function sampled at quadrature nodes.
#[derive(Debug, Clone)]
pub struct StarDomain {
    profile: RadialProfile,
    scale: f64,
    center: Vec3,
    quad: Arc<SphereQuadrature>,
    rho: Vec<f64>,
}

impl StarDomain {
    pub fn from_profile(profile: RadialProfile, scale: f64, center: Vec3) -> Result<Self, DomainError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(DomainError::Parameter(format!("scale must be positive, got {scale}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(DomainError::Parameter("center must be finite".into()));
        }
        let quad = shared_quadrature(profile.geometry_degree());
        let domain = Self::sampled(profile, scale, center, quad);
        if domain.rho.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(DomainError::Parameter("radial function must be positive".into()));
        }
        Ok(domain)
    }

    fn sampled(profile: RadialProfile, scale: f64, center: Vec3, quad: Arc<SphereQuadrature>) -> Self {
        let rho = quad.nodes().iter().map(|d| scale * profile.eval(d)).collect();
        Self {
            profile,
            scale,
            center,
            quad,
            rho,
        }
    }

    pub fn ball(radius: f64, center: Vec3) -> Result<Self, DomainError> {
        Self::from_profile(RadialProfile::Ball, radius, center)
    }

    pub fn unit_ball() -> Self {
        Self::ball(1.0, vec3::ZERO).expect("unit ball is valid")
    }

    /// Ellipsoid with the given semi-axes, centered at the origin.
    pub fn ellipsoid_axes(axes: [f64; 3]) -> Result<Self, DomainError> {
        if axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(DomainError::Parameter(format!("semi-axes must be positive: {axes:?}")));
        }
        Self::from_profile(RadialProfile::Ellipsoid { axes }, 1.0, vec3::ZERO)
    }

    /// Volume-preserving oblate ellipsoid with semi-axes (1+ε, 1+ε, (1+ε)^{−2}).
    pub fn ellipsoid(eps: f64) -> Result<Self, DomainError> {
        if !(0.0..0.5).contains(&eps) {
            return Err(DomainError::Parameter(format!(
                "eccentricity must lie in [0, 0.5), got {eps}"
            )));
        }
        let a = 1.0 + eps;
        Self::ellipsoid_axes([a, a, 1.0 / (a * a)])
    }

    /// Nearly spherical set with boundary {(1+φ(x))x}; with `volume_correct`
    /// a constant is added to φ so that |Ω| = |B₁|.
    pub fn nearly_spherical_from_phi(phi: &HarmonicCoeffs, volume_correct: bool) -> Result<Self, DomainError> {
        if !phi.is_finite() {
            return Err(DomainError::Parameter("φ has non-finite coefficients".into()));
        }
        check_amplitude(phi)?;
        let mut phi = phi.clone();
        if volume_correct {
            let shift = volume_shift(&phi)?;
            phi.add_constant(shift);
            check_amplitude(&phi)?;
        }
        Self::from_profile(RadialProfile::Perturbed { phi }, 1.0, vec3::ZERO)
    }

    /// Volume-corrected nearly spherical set whose degree-one coefficients are
    /// adjusted until the barycenter sits at the origin (|x_Ω| < 1e−10).
    pub fn nearly_spherical_centered(phi: &HarmonicCoeffs) -> Result<Self, DomainError> {
        let mut phi = phi.resized(phi.lmax().max(1));
        // b_i ≈ a_i / √(4π/3) to first order, for the coordinate modes
        let gain = (4.0 * PI / 3.0).sqrt();
        let mut domain = Self::nearly_spherical_from_phi(&phi, true)?;
        for _ in 0..50 {
            let b = domain.barycenter();
            if vec3::norm(b) < 1e-10 {
                return Ok(domain);
            }
            for (order, coord) in [(1, 0), (-1, 1), (0, 2)] {
                let a = phi.get(1, order);
                phi.set(1, order, a - gain * b[coord]);
            }
            domain = Self::nearly_spherical_from_phi(&phi, true)?;
        }
        let b = vec3::norm(domain.barycenter());
        if b < 1e-10 {
            Ok(domain)
        } else {
            Err(DomainError::Parameter(format!("barycenter correction stalled at |x_Ω| = {b:e}")))
        }
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn dimension(&self) -> usize {
        3
    }

    pub fn quadrature(&self) -> &SphereQuadrature {
        &self.quad
    }

    /// ρ at the nodes of [`Self::quadrature`].
    pub fn rho_at_nodes(&self) -> &[f64] {
        &self.rho
    }

    /// Same body sampled on a different rule.
    pub fn resampled(&self, quad: Arc<SphereQuadrature>) -> Self {
        Self::sampled(self.profile.clone(), self.scale, self.center, quad)
    }

    /// Radial function about the star center.
    pub fn radius(&self, d: &Direction) -> f64 {
        self.scale * self.profile.eval(d)
    }

    pub fn surface_point(&self, d: &Direction) -> Vec3 {
        vec3::axpy(self.radius(d), d.coords(), self.center)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let rel = vec3::sub(p, self.center);
        match Direction::new(rel) {
            Some(d) => vec3::norm(rel) < self.radius(&d),
            None => true,
        }
    }

    pub fn rho_min(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn rho_max(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }

    /// Guaranteed upper bound on ρ over the whole sphere.
    pub fn max_radius_bound(&self) -> f64 {
        let bound = match &self.profile {
            RadialProfile::Ball => 1.0,
            RadialProfile::Ellipsoid { axes } => axes.iter().copied().fold(0.0, f64::max),
            RadialProfile::Perturbed { phi } => 1.0 + phi.sup_norm_bound(),
        };
        (self.scale * bound).max(self.rho_max())
    }

    /// Guaranteed lower bound on ρ (may be ≤ 0 for strongly perturbed
    /// profiles, in which case the sampled minimum is returned).
    pub fn min_radius_bound(&self) -> f64 {
        let bound = match &self.profile {
            RadialProfile::Ball => 1.0,
            RadialProfile::Ellipsoid { axes } => axes.iter().copied().fold(f64::INFINITY, f64::min),
            RadialProfile::Perturbed { phi } => 1.0 - phi.sup_norm_bound(),
        };
        let b = self.scale * bound;
        if b > 0.0 {
            b.min(self.rho_min())
        } else {
            self.rho_min()
        }
    }

    /// Radius of a ball about the ambient origin containing the domain.
    pub fn enclosing_radius(&self) -> f64 {
        vec3::norm(self.center) + self.max_radius_bound()
    }

    /// |Ω| = ∫ ρ³/3 dω.
    pub fn volume(&self) -> f64 {
        self.quad.integrate_samples(&self.rho.iter().map(|r| r * r * r / 3.0).collect::<Vec<_>>())
    }

    /// x_Ω = (1/|Ω|) ∫ ρ⁴/4 ω dω + c.
    pub fn barycenter(&self) -> Vec3 {
        let mut m = vec3::ZERO;
        for ((d, w), r) in self.quad.nodes().iter().zip(self.quad.weights()).zip(&self.rho) {
            m = vec3::axpy(w * r.powi(4) / 4.0, d.coords(), m);
        }
        vec3::axpy(1.0 / self.volume(), m, self.center)
    }

    /// λΩ, dilation about the ambient origin.
    pub fn dilated(&self, lambda: f64) -> Self {
        Self {
            profile: self.profile.clone(),
            scale: self.scale * lambda,
            center: vec3::scale(self.center, lambda),
            quad: self.quad.clone(),
            rho: self.rho.iter().map(|r| r * lambda).collect(),
        }
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        let mut out = self.clone();
        out.center = vec3::add(self.center, offset);
        out
    }

    pub fn with_center(&self, center: Vec3) -> Self {
        let mut out = self.clone();
        out.center = center;
        out
    }

    /// λΩ with λ = (ω₃/|Ω|)^{1/3}.
    pub fn normalize_volume(&self) -> Self {
        let lambda = (unit_ball_volume(3) / self.volume()).cbrt();
        self.dilated(lambda)
    }

    /// ρ − 1 as harmonic coefficients when the profile is band-limited.
    pub fn radial_perturbation(&self) -> Option<HarmonicCoeffs> {
        match &self.profile {
            RadialProfile::Ball => {
                let mut c = HarmonicCoeffs::zeros(0);
                c.add_constant(self.scale - 1.0);
                Some(c)
            }
            RadialProfile::Perturbed { phi } => {
                let mut c = phi.scaled(self.scale);
                c.add_constant(self.scale - 1.0);
                Some(c)
            }
            RadialProfile::Ellipsoid { .. } => None,
        }
    }

    /// Distance along the ray from the ambient origin in direction `d` to the
    /// boundary. Requires the domain to be star-shaped about the origin.
    pub fn radius_about_origin(&self, d: &Direction) -> Result<f64, DomainError> {
        if vec3::norm(self.center) == 0.0 {
            return Ok(self.radius(d));
        }
        let gap = |s: f64| -> f64 {
            let p = vec3::sub(vec3::scale(d.coords(), s), self.center);
            match Direction::new(p) {
                Some(dir) => vec3::norm(p) - self.radius(&dir),
                None => -self.scale,
            }
        };
        if gap(0.0) >= 0.0 {
            return Err(DomainError::OriginOutside);
        }
        let mut lo = 0.0;
        let mut hi = self.enclosing_radius() + 1.0;
        if gap(hi) <= 0.0 {
            return Err(DomainError::OriginOutside);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Dense sampling check of ‖φ‖∞ < 1/2.
fn check_amplitude(phi: &HarmonicCoeffs) -> Result<(), DomainError> {
    let sup = sampled_sup(phi);
    if sup >= 0.5 {
        Err(DomainError::Amplitude { sup })
    } else {
        Ok(())
    }
}

/// max |φ| over a rule of degree max(8L, 48).
pub fn sampled_sup(phi: &HarmonicCoeffs) -> f64 {
    let q = shared_quadrature((8 * phi.lmax()).max(48));
    q.nodes()
        .iter()
        .map(|d| synthesize(phi, d).abs())
        .fold(0.0, f64::max)
}

/// Constant s with ∫(1+φ+s)³/3 = ω₃, by Newton iteration.
fn volume_shift(phi: &HarmonicCoeffs) -> Result<f64, DomainError> {
    let q = shared_quadrature((4 * phi.lmax() + 2).max(48));
    let rho: Vec<f64> = q.nodes().iter().map(|d| 1.0 + synthesize(phi, d)).collect();
    let target = unit_ball_volume(3);
    let mut s = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let (mut f, mut df) = (0.0, 0.0);
        for (r, w) in rho.iter().zip(q.weights()) {
            let t = r + s;
            f += w * t * t * t / 3.0;
            df += w * t * t;
        }
        residual = f - target;
        if residual.abs() <= 1e-13 {
            return Ok(s);
        }
        s -= residual / df;
    }
    if residual.abs() <= 1e-12 {
        Ok(s)
    } else {
        Err(DomainError::VolumeCorrection(residual))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{eval_harmonic, HarmonicIndex};
    use approx::assert_abs_diff_eq;

    const OMEGA3: f64 = 4.0 * PI / 3.0;

    #[test]
    fn ball_volumes() {
        assert_abs_diff_eq!(StarDomain::unit_ball().volume(), OMEGA3, epsilon = 1e-13);
        let b2 = StarDomain::ball(2.0, vec3::ZERO).unwrap();
        assert_abs_diff_eq!(b2.volume(), 8.0 * OMEGA3, epsilon = 1e-12);
    }

    #[test]
    fn ellipsoid_family_preserves_volume() {
        for eps in [0.0, 0.1, 0.25, 0.4] {
            assert_abs_diff_eq!(StarDomain::ellipsoid(eps).unwrap().volume(), OMEGA3, epsilon = 1e-10);
        }
        let a = 1.3;
        let e = StarDomain::ellipsoid_axes([a, a, 1.0 / (a * a)]).unwrap();
        assert_abs_diff_eq!(e.volume(), OMEGA3, epsilon = 1e-10);
    }

    #[test]
    fn ellipsoid_axis_values_and_range() {
        let e = StarDomain::ellipsoid(0.1).unwrap();
        let a3 = 1.0 / (1.1f64 * 1.1);
        assert_eq!(e.radius(&Direction::north()), a3);
        assert_abs_diff_eq!(e.radius(&Direction::new([1.0, 0.0, 0.0]).unwrap()), 1.1, epsilon = 1e-15);
        assert!(StarDomain::ellipsoid(0.5).is_err());
        assert!(StarDomain::ellipsoid(-0.1).is_err());
        let unit = StarDomain::ellipsoid(0.0).unwrap();
        assert!(unit.rho_at_nodes().iter().all(|r| (r - 1.0).abs() < 1e-15));
    }

    #[test]
    fn barycenter_symmetry_and_translation() {
        assert!(vec3::norm(StarDomain::unit_ball().barycenter()) < 1e-15);
        let c = [0.3, -0.1, 0.25];
        let b = StarDomain::ball(1.0, c).unwrap().barycenter();
        for i in 0..3 {
            assert_abs_diff_eq!(b[i], c[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn barycenter_flips_with_reflected_profile() {
        let mut phi = HarmonicCoeffs::zeros(3);
        phi.set(1, 0, 0.05);
        phi.set(2, 1, 0.03);
        phi.set(3, -2, 0.02);
        // φ(−x): degree-l coefficients pick up (−1)^l
        let mut reflected = phi.clone();
        for l in 0..=3usize {
            for m in -(l as i32)..=(l as i32) {
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                reflected.set(l, m, sign * phi.get(l, m));
            }
        }
        let b1 = StarDomain::nearly_spherical_from_phi(&phi, false).unwrap().barycenter();
        let b2 = StarDomain::nearly_spherical_from_phi(&reflected, false).unwrap().barycenter();
        for i in 0..3 {
            assert_abs_diff_eq!(b1[i], -b2[i], epsilon = 1e-15);
        }
        assert!(b1[2] > 0.0);
    }

    #[test]
    fn normalize_volume_behaviour() {
        let b2 = StarDomain::ball(2.0, vec3::ZERO).unwrap().normalize_volume();
        assert!(b2.rho_at_nodes().iter().all(|r| (r - 1.0).abs() < 1e-14));
        let unit = StarDomain::unit_ball().normalize_volume();
        assert_abs_diff_eq!(unit.scale(), 1.0, epsilon = 1e-14);
        let mut phi = HarmonicCoeffs::zeros(4);
        phi.set(2, 1, 0.1);
        phi.set(3, 0, -0.07);
        phi.set(4, -3, 0.05);
        let d = StarDomain::nearly_spherical_from_phi(&phi, false).unwrap().dilated(1.7);
        let n1 = d.normalize_volume();
        assert_abs_diff_eq!(n1.volume(), OMEGA3, epsilon = 1e-12);
        let n2 = n1.normalize_volume();
        assert_abs_diff_eq!(n2.scale(), n1.scale(), epsilon = 1e-13);
    }

    #[test]
    fn volume_correction_hits_ball_volume() {
        let mut phi = HarmonicCoeffs::zeros(2);
        phi.set(2, 0, 0.2);
        phi.set(1, 1, 0.1);
        let d = StarDomain::nearly_spherical_from_phi(&phi, true).unwrap();
        assert_abs_diff_eq!(d.volume(), OMEGA3, epsilon = 1e-12);
        let zero = StarDomain::nearly_spherical_from_phi(&HarmonicCoeffs::zeros(3), true).unwrap();
        assert!(zero.rho_at_nodes().iter().all(|r| (r - 1.0).abs() < 1e-14));
    }

    #[test]
    fn amplitude_bound_is_enforced() {
        // constant 0.6 written through the (0,0) coefficient
        let phi = HarmonicCoeffs::single(0, 0, 0.6 * (4.0 * PI).sqrt());
        assert!(matches!(
            StarDomain::nearly_spherical_from_phi(&phi, false),
            Err(DomainError::Amplitude { .. })
        ));
    }

    #[test]
    fn centering_moves_barycenter_to_origin() {
        let mut phi = HarmonicCoeffs::zeros(3);
        phi.set(1, 1, 0.08);
        phi.set(2, 0, 0.1);
        phi.set(3, 1, 0.05);
        let d = StarDomain::nearly_spherical_centered(&phi).unwrap();
        assert!(vec3::norm(d.barycenter()) < 1e-10);
        assert_abs_diff_eq!(d.volume(), OMEGA3, epsilon = 1e-12);
    }

    #[test]
    fn radius_about_origin_for_shifted_ball() {
        let c = [0.3, 0.0, 0.0];
        let b = StarDomain::ball(1.0, c).unwrap();
        for d in [Direction::new([1.0, 0.0, 0.0]).unwrap(), Direction::new([-1.0, 0.0, 0.0]).unwrap(), Direction::north()] {
            let s = b.radius_about_origin(&d).unwrap();
            let exact = d.dot(c) + (1.0 - vec3::dot(c, c) + d.dot(c).powi(2)).sqrt();
            assert_abs_diff_eq!(s, exact, epsilon = 1e-13);
        }
        let far = StarDomain::ball(1.0, [3.0, 0.0, 0.0]).unwrap();
        assert_eq!(far.radius_about_origin(&Direction::north()), Err(DomainError::OriginOutside));
    }

    #[test]
    fn perturbation_recovers_phi() {
        let phi = HarmonicCoeffs::single(2, 0, 0.1);
        let d = StarDomain::nearly_spherical_from_phi(&phi, false).unwrap();
        let back = d.radial_perturbation().unwrap();
        assert_abs_diff_eq!(back.get(2, 0), 0.1, epsilon = 1e-15);
        let x = Direction::new([0.2, 0.4, 0.8]).unwrap();
        let y20 = eval_harmonic(HarmonicIndex::new(2, 0).unwrap(), &x);
        assert_abs_diff_eq!(d.radius(&x), 1.0 + 0.1 * y20, epsilon = 1e-15);
    }
}
