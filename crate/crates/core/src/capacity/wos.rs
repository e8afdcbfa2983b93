//! Walk-on-spheres estimate of absolute capacity.
//!
//! The capacitary potential u(x) is the probability that Brownian motion
//! from x hits Ω. Its spherical mean at radius ρ_far equals Cap/(4π ρ_far)
//! because only the monopole survives the average, so the hit rate of walks
//! started uniformly on that sphere gives Cap directly.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CapacityError, CapacityResult, Method};
use crate::domains::{CompositeDomain, RadialProfile, StarDomain};
use crate::vec3::{self, Vec3};

const MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct WosConfig {
    pub num_walks: u64,
    /// Radius of the launch sphere; defaults to twice the enclosing radius.
    pub start_radius: Option<f64>,
    /// Absorption thickness; defaults to 1e−4 times the enclosing radius.
    pub eps_shell: Option<f64>,
    pub seed: u64,
}

impl Default for WosConfig {
    fn default() -> Self {
        Self {
            num_walks: 100_000,
            start_radius: None,
            eps_shell: None,
            seed: 1,
        }
    }
}

/// One component with a distance lower bound.
#[derive(Debug, Clone)]
pub enum WosShape {
    Ball { center: Vec3, radius: f64 },
    Ellipsoid { center: Vec3, axes: [f64; 3] },
    /// Star body; `slope` bounds |∇ρ| on the unit sphere.
    Star { domain: StarDomain, slope: f64 },
}

impl WosShape {
    pub fn from_domain(domain: &StarDomain) -> Self {
        let s = domain.scale();
        match domain.profile() {
            RadialProfile::Ball => Self::Ball {
                center: domain.center(),
                radius: s,
            },
            RadialProfile::Ellipsoid { axes } => Self::Ellipsoid {
                center: domain.center(),
                axes: [s * axes[0], s * axes[1], s * axes[2]],
            },
            RadialProfile::Perturbed { phi } => Self::Star {
                domain: domain.clone(),
                slope: s * phi.gradient_norm_bound(),
            },
        }
    }

    fn enclosing_radius(&self) -> f64 {
        match self {
            Self::Ball { center, radius } => vec3::norm(*center) + radius,
            Self::Ellipsoid { center, axes } => vec3::norm(*center) + axes.iter().copied().fold(0.0, f64::max),
            Self::Star { domain, .. } => domain.enclosing_radius(),
        }
    }

    fn inner_radius(&self) -> f64 {
        match self {
            Self::Ball { radius, .. } => *radius,
            Self::Ellipsoid { axes, .. } => axes.iter().copied().fold(f64::INFINITY, f64::min),
            Self::Star { domain, .. } => domain.min_radius_bound(),
        }
    }

    /// (lower bound on dist(p, shape), factor such that the true distance
    /// is at most factor × bound). Non-positive inside.
    fn distance(&self, p: Vec3) -> (f64, f64) {
        match self {
            Self::Ball { center, radius } => (vec3::norm(vec3::sub(p, *center)) - radius, 1.0),
            Self::Ellipsoid { center, axes } => (ellipsoid_distance(vec3::sub(p, *center), *axes), 1.0),
            Self::Star { domain, slope } => {
                let rel = vec3::sub(p, domain.center());
                let s = vec3::norm(rel);
                let Some(d) = crate::sphere::Direction::new(rel) else {
                    return (-1.0, 1.0);
                };
                let gap = s - domain.radius(&d);
                if gap <= 0.0 {
                    return (gap, 1.0);
                }
                // |p − y| ≥ max(s sin θ, gap − slope·θ) over boundary points at angle θ
                let c = 2.0 * s / PI;
                let factor = (c + slope) / c;
                let far = s - domain.max_radius_bound();
                let lb = gap / factor;
                if far > lb {
                    (far, gap / far)
                } else {
                    (lb, factor)
                }
            }
        }
    }
}

/// Signed-outside distance from q to the ellipsoid Σ x_i²/a_i² ≤ 1; 0 inside.
fn ellipsoid_distance(q: Vec3, a: [f64; 3]) -> f64 {
    let level: f64 = (0..3).map(|i| (q[i] / a[i]).powi(2)).sum();
    if level <= 1.0 {
        return level - 1.0;
    }
    // closest point x_i = a_i² q_i/(t + a_i²), F(t) = Σ (a_i q_i/(t + a_i²))² − 1 = 0, t > 0
    let f = |t: f64| -> f64 { (0..3).map(|i| (a[i] * q[i] / (t + a[i] * a[i])).powi(2)).sum::<f64>() - 1.0 };
    let mut lo = 0.0;
    let mut hi = vec3::norm(q) * a.iter().copied().fold(0.0, f64::max);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let x = [
        a[0] * a[0] * q[0] / (t + a[0] * a[0]),
        a[1] * a[1] * q[1] / (t + a[1] * a[1]),
        a[2] * a[2] * q[2] / (t + a[2] * a[2]),
    ];
    vec3::norm(vec3::sub(q, x))
}

/// Union of disjoint shapes.
#[derive(Debug, Clone)]
pub struct WosTarget {
    shapes: Vec<WosShape>,
}

impl WosTarget {
    pub fn new(shapes: Vec<WosShape>) -> Self {
        Self { shapes }
    }

    pub fn enclosing_radius(&self) -> f64 {
        self.shapes.iter().map(WosShape::enclosing_radius).fold(0.0, f64::max)
    }

    fn distance(&self, p: Vec3) -> (f64, f64) {
        self.shapes
            .iter()
            .map(|s| s.distance(p))
            .fold((f64::INFINITY, 1.0), |best, d| if d.0 < best.0 { d } else { best })
    }

    fn inner_radius(&self) -> f64 {
        self.shapes.iter().map(WosShape::inner_radius).fold(f64::INFINITY, f64::min)
    }
}

impl From<&StarDomain> for WosTarget {
    fn from(d: &StarDomain) -> Self {
        Self::new(vec![WosShape::from_domain(d)])
    }
}

impl From<&CompositeDomain> for WosTarget {
    fn from(c: &CompositeDomain) -> Self {
        Self::new(c.components().iter().map(WosShape::from_domain).collect())
    }
}

pub fn cap_wos(target: &WosTarget, cfg: &WosConfig) -> Result<CapacityResult, CapacityError> {
    if cfg.num_walks == 0 {
        return Err(CapacityError::Input("walk count must be positive".into()));
    }
    let enclosing = target.enclosing_radius();
    let rho_far = cfg.start_radius.unwrap_or(2.0 * enclosing);
    if !(rho_far > enclosing) {
        return Err(CapacityError::Input(format!(
            "launch radius {rho_far} must exceed the enclosing radius {enclosing}"
        )));
    }
    let eps = cfg.eps_shell.unwrap_or(1e-4 * enclosing);
    if !(eps > 0.0) {
        return Err(CapacityError::Input("absorption thickness must be positive".into()));
    }

    let outcomes: Vec<(bool, f64)> = (0..cfg.num_walks)
        .into_par_iter()
        .map(|i| walk(target, rho_far, eps, cfg.seed, i))
        .collect();
    let hits = outcomes.iter().filter(|o| o.0).count() as u64;
    if hits == 0 {
        return Err(CapacityError::NoHits(cfg.num_walks));
    }
    let worst_factor = outcomes.iter().map(|o| o.1).fold(1.0, f64::max);
    let n = cfg.num_walks as f64;
    let p = hits as f64 / n;
    let scale = 4.0 * PI * rho_far;
    let value = p * scale;
    let std_error = scale * (p * (1.0 - p) / n).sqrt();
    // absorbing the eps·factor shell enlarges Ω by at most that much radially
    let bias_bound = value * eps * worst_factor / target.inner_radius();
    Ok(CapacityResult {
        value,
        method: Method::Wos,
        error_estimate: std_error,
        bias_bound,
    })
}

/// One walk: (hit, distance-bound factor at absorption).
fn walk(target: &WosTarget, rho_far: f64, eps: f64, seed: u64, index: u64) -> (bool, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut p = vec3::scale(uniform_direction(&mut rng), rho_far);
    for _ in 0..MAX_STEPS {
        let s = vec3::norm(p);
        if s > rho_far {
            // return to the launch sphere with probability ρ_far/|p|,
            // distributed by the exterior harmonic measure
            if rng.random::<f64>() >= rho_far / s {
                return (false, 1.0);
            }
            p = exterior_harmonic_point(&mut rng, p, rho_far);
        }
        let (d, factor) = target.distance(p);
        if d < eps {
            return (true, factor);
        }
        p = vec3::axpy(d, uniform_direction(&mut rng), p);
    }
    (false, 1.0)
}

fn uniform_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

/// Point on the sphere of radius ρ with density ∝ |x − y|^{−3} (conditioned
/// hitting distribution from an exterior point x).
fn exterior_harmonic_point(rng: &mut ChaCha8Rng, x: Vec3, rho: f64) -> Vec3 {
    let s = vec3::norm(x);
    let q = rho / s;
    let xi: f64 = rng.random();
    // inverse CDF of u = cos∠(x, y)
    let t = 2.0 * q * xi / (1.0 - q * q) + 1.0 / (1.0 + q);
    let u = ((1.0 + q * q - 1.0 / (t * t)) / (2.0 * q)).clamp(-1.0, 1.0);
    let axis = vec3::scale(x, 1.0 / s);
    let (e1, e2) = vec3::orthonormal_frame(axis);
    let psi: f64 = rng.random_range(0.0..2.0 * PI);
    let v = (1.0 - u * u).max(0.0).sqrt();
    let dir = vec3::add(
        vec3::scale(axis, u),
        vec3::add(vec3::scale(e1, v * psi.cos()), vec3::scale(e2, v * psi.sin())),
    );
    vec3::scale(dir, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{cap_ball, cap_ellipsoid};
    use crate::sphere::HarmonicCoeffs;

    #[test]
    fn ellipsoid_distance_matches_sphere_case() {
        let d = ellipsoid_distance([3.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
        assert!((d - 2.0).abs() < 1e-12);
        let d = ellipsoid_distance([0.0, 0.0, 2.0], [2.0, 2.0, 0.5]);
        assert!((d - 1.5).abs() < 1e-12);
        assert!(ellipsoid_distance([0.1, 0.0, 0.0], [1.0, 1.0, 0.5]) < 0.0);
    }

    #[test]
    fn star_distance_is_a_lower_bound() {
        let mut phi = HarmonicCoeffs::zeros(3);
        phi.set(2, 0, 0.2);
        phi.set(3, 1, 0.1);
        let dom = StarDomain::nearly_spherical_from_phi(&phi, false).unwrap();
        let shape = WosShape::from_domain(&dom);
        let q = crate::sphere::shared_quadrature(80);
        for p in [[1.5, 0.2, 0.1], [0.0, 0.0, 1.4], [-0.9, 0.8, 0.3]] {
            let (lb, factor) = shape.distance(p);
            let true_d = q
                .nodes()
                .iter()
                .map(|d| vec3::norm(vec3::sub(p, dom.surface_point(d))))
                .fold(f64::INFINITY, f64::min);
            assert!(lb <= true_d + 1e-12, "{lb} > {true_d}");
            // the radial gap bounds the distance from above
            let rel = vec3::sub(p, dom.center());
            let gap = vec3::norm(rel) - dom.radius(&crate::sphere::Direction::new(rel).unwrap());
            assert!(factor * lb <= gap + 1e-12 || lb < 0.0);
        }
    }

    #[test]
    fn harmonic_measure_sampler_mean() {
        // E[u] for the |x−y|^{−3} density on the unit sphere equals q
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = [0.0, 0.0, 2.0];
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| exterior_harmonic_point(&mut rng, x, 1.0)[2]).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 5e-3, "{mean}");
    }

    #[test]
    fn unit_ball_within_three_sigma() {
        let cfg = WosConfig {
            num_walks: 20_000,
            start_radius: Some(4.0),
            ..WosConfig::default()
        };
        let r = cap_wos(&WosTarget::from(&StarDomain::unit_ball()), &cfg).unwrap();
        assert!((r.value - 4.0 * PI).abs() <= 3.0 * r.error_estimate + r.bias_bound);
    }

    #[test]
    fn ellipsoid_within_three_sigma() {
        let e = StarDomain::ellipsoid(0.2).unwrap();
        let cfg = WosConfig {
            num_walks: 20_000,
            seed: 11,
            ..WosConfig::default()
        };
        let r = cap_wos(&WosTarget::from(&e), &cfg).unwrap();
        let exact = cap_ellipsoid([1.2, 1.2, 1.0 / 1.44]).unwrap();
        assert!((r.value - exact).abs() <= 3.0 * r.error_estimate + r.bias_bound);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = WosConfig {
            num_walks: 2_000,
            ..WosConfig::default()
        };
        let t = WosTarget::from(&StarDomain::unit_ball());
        assert_eq!(cap_wos(&t, &cfg).unwrap(), cap_wos(&t, &cfg).unwrap());
        let other = WosConfig { seed: 2, ..cfg.clone() };
        assert_ne!(cap_wos(&t, &cfg).unwrap().value, cap_wos(&t, &other).unwrap().value);
    }

    #[test]
    fn two_far_balls_between_one_and_sum() {
        let r = (0.5f64).cbrt();
        let c = CompositeDomain::new(vec![
            StarDomain::ball(r, [-5.0, 0.0, 0.0]).unwrap(),
            StarDomain::ball(r, [5.0, 0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let cfg = WosConfig {
            num_walks: 20_000,
            start_radius: Some(7.0),
            seed: 5,
            ..WosConfig::default()
        };
        let res = cap_wos(&WosTarget::from(&c), &cfg).unwrap();
        let one = cap_ball(r, 3);
        assert!(res.value > one && res.value <= 2.0 * one + 3.0 * res.error_estimate);
    }

    #[test]
    fn rejects_bad_launch_radius() {
        let cfg = WosConfig {
            start_radius: Some(0.5),
            ..WosConfig::default()
        };
        assert!(cap_wos(&WosTarget::from(&StarDomain::unit_ball()), &cfg).is_err());
    }
}
