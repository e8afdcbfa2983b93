//! Fraenkel asymmetry and the distance-weighted asymmetries α, α_R.
//!
//! Every symmetric difference is integrated exactly along rays from the star
//! center: the ray meets Ω in [0, ρ) and a ball in the root interval of a
//! quadratic, so each ray contributes a closed-form radial integral.

mod nelder_mead;

pub use nelder_mead::{nelder_mead, Minimum};

use serde::Serialize;

use crate::domains::{CompositeDomain, DomainError, StarDomain};
use crate::sphere::{gauss_legendre, shared_quadrature, surface_area, unit_ball_volume, Direction, SphereQuadrature};
use crate::vec3::{self, Vec3};

/// Exactness of the ray rule used for symmetric differences.
pub const ASYMMETRY_DEGREE: usize = 96;

const NM_STEP: f64 = 0.05;
const NM_TOL: f64 = 1e-10;
const NM_MAX_EVALS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymmetryResult {
    pub value: f64,
    pub minimizing_center: Vec3,
    pub evaluations: usize,
    /// False when some start exhausted its evaluation budget.
    pub converged: bool,
}

/// A star domain sampled along the rays of a quadrature rule.
struct Rays<'a> {
    quad: &'a SphereQuadrature,
    rho: Vec<f64>,
    origin: Vec3,
}

impl<'a> Rays<'a> {
    fn new(domain: &StarDomain, quad: &'a SphereQuadrature) -> Self {
        Self {
            rho: quad.nodes().iter().map(|d| domain.radius(d)).collect(),
            origin: domain.center(),
            quad,
        }
    }

    /// Σ_k w_k F(ω_k, ρ_k, ball interval along ω_k), ball given in ambient coordinates.
    fn sum<F: Fn(&Direction, f64, Option<(f64, f64)>) -> f64>(&self, c: Vec3, r: f64, f: F) -> f64 {
        let rel = vec3::sub(c, self.origin);
        let cc = vec3::dot(rel, rel) - r * r;
        self.quad
            .nodes()
            .iter()
            .zip(self.quad.weights())
            .zip(&self.rho)
            .map(|((d, w), rho)| w * f(d, *rho, ball_interval(d.dot(rel), cc)))
            .sum()
    }
}

/// {t ≥ 0 : |tω − c| < r} from b = ω·c and cc = |c|² − r².
fn ball_interval(b: f64, cc: f64) -> Option<(f64, f64)> {
    let disc = b * b - cc;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let hi = b + s;
    if hi <= 0.0 {
        return None;
    }
    // stable smaller root: t₋ = cc / t₊
    let lo = (cc / hi).max(0.0);
    Some((lo, hi))
}

/// ∫_a^b t² dt.
fn cube_measure(a: f64, b: f64) -> f64 {
    if b <= a {
        0.0
    } else {
        (b - a) * (a * a + a * b + b * b) / 3.0
    }
}

/// |[0, ρ) Δ [lo, hi)| with weight t².
fn ray_symdiff(rho: f64, ball: Option<(f64, f64)>) -> f64 {
    match ball {
        None => rho * rho * rho / 3.0,
        Some((lo, hi)) => {
            let inter = cube_measure(lo, hi.min(rho));
            rho * rho * rho / 3.0 + cube_measure(lo, hi) - 2.0 * inter
        }
    }
}

fn rule(degree: usize) -> std::sync::Arc<SphereQuadrature> {
    shared_quadrature(degree)
}

/// |Ω Δ B_r(c)|.
pub fn symdiff_volume(domain: &StarDomain, c: Vec3, r: f64) -> f64 {
    symdiff_volume_with(domain, c, r, ASYMMETRY_DEGREE)
}

pub fn symdiff_volume_with(domain: &StarDomain, c: Vec3, r: f64, degree: usize) -> f64 {
    let q = rule(degree);
    Rays::new(domain, &q).sum(c, r, |_, rho, ball| ray_symdiff(rho, ball))
}

/// |Ω ∩ B_r(c)|.
fn intersection_volume(rays: &Rays<'_>, c: Vec3, r: f64) -> f64 {
    rays.sum(c, r, |_, rho, ball| match ball {
        None => 0.0,
        Some((lo, hi)) => cube_measure(lo, hi.min(rho)),
    })
}

/// 𝒜(Ω) = inf_c |Ω Δ B_r(c)| / |B_r| with |B_r| = |Ω|.
pub fn fraenkel(domain: &StarDomain) -> AsymmetryResult {
    let q = rule(ASYMMETRY_DEGREE);
    let rays = Rays::new(domain, &q);
    let volume = domain.volume();
    let r = (volume / unit_ball_volume(3)).cbrt();
    let objective = |c: &[f64; 3]| rays.sum(*c, r, |_, rho, ball| ray_symdiff(rho, ball)) / volume;
    minimize_over_centers(objective, domain.barycenter(), domain.center())
}

/// Fraenkel asymmetry of a disjoint union, |Ω Δ B| = |Ω| + |B| − 2 Σ |C_i ∩ B|.
pub fn fraenkel_composite(domain: &CompositeDomain) -> AsymmetryResult {
    let q = rule(ASYMMETRY_DEGREE);
    let rays: Vec<Rays<'_>> = domain.components().iter().map(|c| Rays::new(c, &q)).collect();
    let volume = domain.volume();
    let r = (volume / unit_ball_volume(3)).cbrt();
    let objective = |c: &[f64; 3]| {
        let inter: f64 = rays.iter().map(|ray| intersection_volume(ray, *c, r)).sum();
        (2.0 * volume - 2.0 * inter) / volume
    };
    let largest = domain
        .components()
        .iter()
        .max_by(|a, b| a.volume().total_cmp(&b.volume()))
        .expect("composite domains are non-empty");
    minimize_over_centers(objective, domain.barycenter(), largest.barycenter())
}

/// Nelder–Mead from the barycenter, a second anchor, and three axis offsets.
fn minimize_over_centers<F: Fn(&[f64; 3]) -> f64>(objective: F, barycenter: Vec3, anchor: Vec3) -> AsymmetryResult {
    let mut starts = vec![barycenter, anchor];
    for k in 0..3 {
        let mut s = barycenter;
        s[k] += 0.1;
        starts.push(s);
    }
    let mut best = AsymmetryResult {
        value: f64::INFINITY,
        minimizing_center: barycenter,
        evaluations: 0,
        converged: true,
    };
    for s in starts {
        let m = nelder_mead(&objective, s, NM_STEP, NM_TOL, NM_MAX_EVALS);
        best.evaluations += m.evaluations;
        best.converged &= m.converged;
        if m.value < best.value {
            best.value = m.value;
            best.minimizing_center = m.x;
        }
    }
    best.value = best.value.max(0.0);
    best
}

/// α_R(Ω) = ∫_{Ω Δ B₁} |1 − |x|| dx, rays from the origin.
pub fn alpha_r(domain: &StarDomain) -> Result<f64, DomainError> {
    let q = rule(ASYMMETRY_DEGREE);
    let centered = domain.center().iter().all(|c| *c == 0.0);
    let mut total = 0.0;
    for (d, w) in q.nodes().iter().zip(q.weights()) {
        let rho = if centered {
            domain.radius(d)
        } else {
            domain.radius_about_origin(d)?
        };
        total += w * weighted_radial_gap(rho - 1.0);
    }
    Ok(total)
}

/// ∫ between 1 and 1+δ of |1−t| t² dt = δ²/2 + 2δ³/3 + δ⁴/4 (either sign of δ).
fn weighted_radial_gap(delta: f64) -> f64 {
    let d2 = delta * delta;
    d2 * (0.5 + delta * (2.0 / 3.0 + 0.25 * delta))
}

/// α(Ω) = ∫_{Ω Δ B₁(x_Ω)} |1 − |x − x_Ω|| dx.
pub fn alpha(domain: &StarDomain) -> f64 {
    alpha_about(domain, domain.barycenter())
}

/// ∫_{Ω Δ B₁(c)} |1 − |x − c|| dx; pieces split at the sphere, 16-point
/// Gauss–Legendre on each piece.
pub fn alpha_about(domain: &StarDomain, c: Vec3) -> f64 {
    let q = rule(ASYMMETRY_DEGREE);
    let rays = Rays::new(domain, &q);
    let (gx, gw) = gauss_legendre(16);
    let rel = vec3::sub(c, domain.center());
    rays.sum(c, 1.0, |d, rho, ball| {
        let piece = |a: f64, b: f64| -> f64 {
            if b <= a {
                return 0.0;
            }
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            gx.iter()
                .zip(&gw)
                .map(|(x, w)| {
                    let t = mid + half * x;
                    let dist = vec3::norm(vec3::sub(vec3::scale(d.coords(), t), rel));
                    w * half * (1.0 - dist).abs() * t * t
                })
                .sum()
        };
        match ball {
            None => piece(0.0, rho),
            Some((lo, hi)) => {
                // [0,ρ) Δ [lo,hi) = [0, min(ρ,lo)) ∪ [hi, ρ) ∪ [max(ρ,lo), hi)
                piece(0.0, rho.min(lo)) + piece(hi, rho) + piece(rho.max(lo), hi)
            }
        }
    })
}

/// min ∫_E |1 − |x|| dx over |E| = v, attained by {||x| − 1| ≤ δ(v)}.
pub fn annulus_lower_bound(v: f64, n: usize) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let sigma = surface_area(n);
    let volume = |delta: f64| sigma * annulus_moments(delta, n).0;
    let mut hi = 1.0;
    while volume(hi) < v {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if volume(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    sigma * annulus_moments(0.5 * (lo + hi), n).1
}

/// (∫ t^{N−1} dt, ∫ |1−t| t^{N−1} dt) over [max(0, 1−δ), 1+δ], expanded in
/// s = t − 1 so that small δ suffers no cancellation.
fn annulus_moments(delta: f64, n: usize) -> (f64, f64) {
    let m = n - 1;
    let binom = |k: usize| -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
    };
    let inner = delta.min(1.0);
    let (mut vol, mut weighted) = (0.0, 0.0);
    for k in 0..=m {
        let c = binom(k);
        let kf = k as f64;
        // s ∈ [0, δ]
        vol += c * delta.powi(k as i32 + 1) / (kf + 1.0);
        weighted += c * delta.powi(k as i32 + 2) / (kf + 2.0);
        // s ∈ [−inner, 0]: s^k picks up (−1)^k
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        vol += sign * c * inner.powi(k as i32 + 1) / (kf + 1.0);
        weighted += sign * c * inner.powi(k as i32 + 2) / (kf + 2.0);
    }
    (vol, weighted)
}
