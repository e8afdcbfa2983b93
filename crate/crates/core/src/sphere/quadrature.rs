use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use super::SphereError;
use crate::vec3::{self, Vec3};

/// A point on the unit sphere S².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction([f64; 3]);

impl Direction {
    /// Normalizes `v`; returns `None` for the zero vector.
    pub fn new(v: Vec3) -> Option<Self> {
        let n = vec3::norm(v);
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(Self(vec3::scale(v, 1.0 / n)))
    }

    /// Direction with polar cosine `cos_theta` and azimuth `phi`.
    pub fn from_polar(cos_theta: f64, phi: f64) -> Self {
        let c = cos_theta.clamp(-1.0, 1.0);
        let s = (1.0 - c * c).max(0.0).sqrt();
        Self([s * phi.cos(), s * phi.sin(), c])
    }

    pub fn north() -> Self {
        Self([0.0, 0.0, 1.0])
    }

    pub fn coords(&self) -> Vec3 {
        self.0
    }

    pub fn cos_theta(&self) -> f64 {
        self.0[2]
    }

    pub fn azimuth(&self) -> f64 {
        self.0[1].atan2(self.0[0])
    }

    pub fn dot(&self, v: Vec3) -> f64 {
        vec3::dot(self.0, v)
    }

    pub fn neg(&self) -> Self {
        Self(vec3::scale(self.0, -1.0))
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1], exact for polynomials of
/// degree 2n − 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule on S²: Gauss–Legendre in cos θ times the uniform trapezoid
/// rule in azimuth.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    degree: usize,
    cos_polar: Vec<f64>,
    n_azimuth: usize,
    nodes: Vec<Direction>,
    weights: Vec<f64>,
}

/// Builds a rule on S^{N−1} integrating every polynomial of total degree
/// `degree` exactly. Only N = 3 is supported.
pub fn build_quadrature(n: usize, degree: usize) -> Result<SphereQuadrature, SphereError> {
    if n != 3 {
        return Err(SphereError::UnsupportedDimension(n));
    }
    if degree < 1 {
        return Err(SphereError::InvalidDegree(
            "degree must be at least 1".into(),
        ));
    }
    let n_polar = (degree + 2) / 2;
    let n_azimuth = degree + 1;
    let (cos_polar, polar_weights) = gauss_legendre(n_polar);
    let dphi = 2.0 * PI / n_azimuth as f64;
    let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
    let mut weights = Vec::with_capacity(n_polar * n_azimuth);
    for (c, w) in cos_polar.iter().zip(&polar_weights) {
        for j in 0..n_azimuth {
            nodes.push(Direction::from_polar(*c, j as f64 * dphi));
            weights.push(w * dphi);
        }
    }
    Ok(SphereQuadrature {
        degree,
        cos_polar,
        n_azimuth,
        nodes,
        weights,
    })
}

/// Process-wide cache of N = 3 rules keyed by exactness degree.
pub fn shared_quadrature(degree: usize) -> Arc<SphereQuadrature> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SphereQuadrature>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(degree.max(1))
        .or_insert_with(|| Arc::new(build_quadrature(3, degree.max(1)).expect("N = 3 is supported")))
        .clone()
}

impl SphereQuadrature {
    pub fn dimension(&self) -> usize {
        3
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Direction] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_polar(&self) -> usize {
        self.cos_polar.len()
    }

    pub fn n_azimuth(&self) -> usize {
        self.n_azimuth
    }

    pub fn cos_polar(&self) -> &[f64] {
        &self.cos_polar
    }

    /// Σ_k w_k f(d_k).
    pub fn integrate<F: FnMut(&Direction) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| w * f(d))
            .sum()
    }

    /// Σ_k w_k v_k for samples already evaluated at the nodes.
    pub fn integrate_samples(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.len());
        samples.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}
