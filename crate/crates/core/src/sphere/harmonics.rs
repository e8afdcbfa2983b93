//! Real, L²(S²)-orthonormal spherical harmonics.
//!
//! `Y_{l,0} = P̄_l(cos θ)`, `Y_{l,m} = √2 P̄_l^m(cos θ) cos(mφ)` for m > 0 and
//! `Y_{l,−m} = √2 P̄_l^m(cos θ) sin(mφ)`, where `P̄` are the associated
//! Legendre functions normalized so that the complex harmonics are
//! orthonormal. Coefficients are stored flat at index `l² + l + m`.

use std::f64::consts::PI;

use super::{Direction, SphereError, SphereQuadrature};

/// `(l, m)` with `−l ≤ m ≤ l`; `m = 0` is the zonal harmonic, `(1, 0)` is
/// proportional to x₃, `(1, 1)` to x₁ and `(1, −1)` to x₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    degree: usize,
    order: i32,
}

impl HarmonicIndex {
    pub fn new(degree: usize, order: i32) -> Option<Self> {
        (order.unsigned_abs() as usize <= degree).then_some(Self { degree, order })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    /// Position of the order within its degree-l eigenspace, in `0..2l+1`.
    pub fn order_slot(&self) -> usize {
        (self.order + self.degree as i32) as usize
    }

    pub fn flat(&self) -> usize {
        self.degree * self.degree + self.order_slot()
    }

    pub fn from_flat(k: usize) -> Self {
        let l = (k as f64).sqrt().floor() as usize;
        let l = if (l + 1) * (l + 1) <= k { l + 1 } else { l };
        Self {
            degree: l,
            order: k as i32 - (l * l + l) as i32,
        }
    }
}

pub fn num_coeffs(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

/// Dimension of the space of degree-l spherical harmonics on S^{N−1}:
/// C(l+N−1, N−1) − C(l+N−3, N−1).
pub fn harmonic_space_dim(l: usize, n: usize) -> usize {
    fn binom(a: usize, b: usize) -> usize {
        if b > a {
            return 0;
        }
        let mut r: u128 = 1;
        for i in 0..b {
            r = r * (a - i) as u128 / (i + 1) as u128;
        }
        r as usize
    }
    let lower = if l >= 2 { binom(l + n - 3, n - 1) } else { 0 };
    binom(l + n - 1, n - 1) - lower
}

/// Eigenvalue l(l+N−2) of −Δ_{S^{N−1}} on degree-l harmonics.
pub fn lb_eigenvalue(l: usize, n: usize) -> f64 {
    (l * (l + n - 2)) as f64
}

/// Evaluates every harmonic with degree ≤ `lmax` at `d` into `out`
/// (length `(lmax+1)²`).
pub fn eval_all(lmax: usize, d: &Direction, out: &mut [f64]) {
    assert!(out.len() >= num_coeffs(lmax));
    let [x, y, _] = d.coords();
    let ct = d.cos_theta().clamp(-1.0, 1.0);
    let st = (x * x + y * y).sqrt();
    let phi = y.atan2(x);
    let sqrt2 = std::f64::consts::SQRT_2;

    let mut pmm = (0.25 / PI).sqrt();
    for m in 0..=lmax {
        let mf = m as f64;
        if m > 0 {
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * st;
        }
        let (cm, sm) = if m == 0 {
            (1.0, 0.0)
        } else {
            let (s, c) = (mf * phi).sin_cos();
            (sqrt2 * c, sqrt2 * s)
        };
        let mut store = |l: usize, p: f64| {
            let base = l * l + l;
            if m == 0 {
                out[base] = p;
            } else {
                out[base + m] = p * cm;
                out[base - m] = p * sm;
            }
        };
        store(m, pmm);
        if m == lmax {
            break;
        }
        let mut p_prev = pmm;
        let mut p = (2.0 * mf + 3.0).sqrt() * ct * pmm;
        store(m + 1, p);
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            let next = a * (ct * p - b * p_prev);
            p_prev = p;
            p = next;
            store(l, p);
        }
    }
}

pub fn eval_harmonic(idx: HarmonicIndex, d: &Direction) -> f64 {
    let mut buf = vec![0.0; num_coeffs(idx.degree())];
    eval_all(idx.degree(), d, &mut buf);
    buf[idx.flat()]
}

/// Row-major `nodes × (lmax+1)²` table of harmonic values at the nodes of `q`.
pub fn basis_matrix(lmax: usize, q: &SphereQuadrature) -> Vec<f64> {
    let nc = num_coeffs(lmax);
    let mut table = vec![0.0; q.len() * nc];
    for (row, d) in table.chunks_mut(nc).zip(q.nodes()) {
        eval_all(lmax, d, row);
    }
    table
}

/// Coefficients over the orthonormal basis with degree ≤ `lmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoeffs {
    lmax: usize,
    values: Vec<f64>,
}

impl HarmonicCoeffs {
    pub fn zeros(lmax: usize) -> Self {
        Self {
            lmax,
            values: vec![0.0; num_coeffs(lmax)],
        }
    }

    /// Unit coefficient on a single harmonic.
    pub fn single(degree: usize, order: i32, value: f64) -> Self {
        let mut c = Self::zeros(degree);
        c.set(degree, order, value);
        c
    }

    pub fn from_values(lmax: usize, values: Vec<f64>) -> Option<Self> {
        (values.len() == num_coeffs(lmax)).then_some(Self { lmax, values })
    }

    pub fn dimension(&self) -> usize {
        3
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, degree: usize, order: i32) -> f64 {
        match HarmonicIndex::new(degree, order) {
            Some(idx) if degree <= self.lmax => self.values[idx.flat()],
            _ => 0.0,
        }
    }

    /// Sets a coefficient, growing `lmax` when needed.
    pub fn set(&mut self, degree: usize, order: i32, value: f64) {
        let idx = HarmonicIndex::new(degree, order).expect("|order| <= degree");
        if degree > self.lmax {
            *self = self.resized(degree);
        }
        self.values[idx.flat()] = value;
    }

    /// Copy truncated or zero-padded to `lmax`.
    pub fn resized(&self, lmax: usize) -> Self {
        let mut values = vec![0.0; num_coeffs(lmax)];
        let n = values.len().min(self.values.len());
        values[..n].copy_from_slice(&self.values[..n]);
        Self { lmax, values }
    }

    pub fn iter(&self) -> impl Iterator<Item = (HarmonicIndex, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| (HarmonicIndex::from_flat(k), *v))
    }

    /// ‖·‖²_{L²(S²)} = Σ a².
    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Σ_m a²_{l,m} for each degree l.
    pub fn degree_energies(&self) -> Vec<f64> {
        (0..=self.lmax)
            .map(|l| self.values[l * l..(l + 1) * (l + 1)].iter().map(|v| v * v).sum())
            .collect()
    }

    /// Adds the constant function `c` (shifts the (0,0) coefficient by c√(4π)).
    pub fn add_constant(&mut self, c: f64) {
        self.values[0] += c * (4.0 * PI).sqrt();
    }

    /// Mean value over the sphere.
    pub fn mean(&self) -> f64 {
        self.values[0] / (4.0 * PI).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            lmax: self.lmax,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Upper bound on the sup norm from the addition theorem,
    /// |Σ_m a_{l,m} Y_{l,m}| ≤ ‖a_l‖ √((2l+1)/4π).
    pub fn sup_norm_bound(&self) -> f64 {
        self.degree_energies()
            .iter()
            .enumerate()
            .map(|(l, e)| e.sqrt() * ((2 * l + 1) as f64 / (4.0 * PI)).sqrt())
            .sum()
    }

    /// Upper bound on the surface gradient, Σ_m |∇Y_{l,m}|² = (2l+1)l(l+1)/4π.
    pub fn gradient_norm_bound(&self) -> f64 {
        self.degree_energies()
            .iter()
            .enumerate()
            .map(|(l, e)| {
                let l = l as f64;
                e.sqrt() * ((2.0 * l + 1.0) * l * (l + 1.0) / (4.0 * PI)).sqrt()
            })
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Analysis: a_{l,m} = Σ_k w_k f(d_k) Y_{l,m}(d_k). Requires `q.degree() ≥ 2L`.
pub fn expand(
    samples: &[f64],
    lmax: usize,
    q: &SphereQuadrature,
) -> Result<HarmonicCoeffs, SphereError> {
    if q.degree() < 2 * lmax {
        return Err(SphereError::InsufficientQuadrature {
            required: 2 * lmax,
            available: q.degree(),
        });
    }
    if samples.len() != q.len() {
        return Err(SphereError::SampleCount {
            expected: q.len(),
            got: samples.len(),
        });
    }
    let nc = num_coeffs(lmax);
    let mut coeffs = vec![0.0; nc];
    let mut buf = vec![0.0; nc];
    for ((d, w), f) in q.nodes().iter().zip(q.weights()).zip(samples) {
        eval_all(lmax, d, &mut buf);
        let wf = w * f;
        for (c, y) in coeffs.iter_mut().zip(&buf) {
            *c += wf * y;
        }
    }
    Ok(HarmonicCoeffs {
        lmax,
        values: coeffs,
    })
}

/// Synthesis: Σ a_{l,m} Y_{l,m}(d).
pub fn synthesize(coeffs: &HarmonicCoeffs, d: &Direction) -> f64 {
    let mut buf = vec![0.0; num_coeffs(coeffs.lmax)];
    eval_all(coeffs.lmax, d, &mut buf);
    buf.iter().zip(&coeffs.values).map(|(y, a)| y * a).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::build_quadrature;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_and_linear_modes() {
        let d = Direction::new([0.3, -0.2, 0.5]).unwrap();
        let y00 = eval_harmonic(HarmonicIndex::new(0, 0).unwrap(), &d);
        assert_abs_diff_eq!(y00, 1.0 / (4.0 * PI).sqrt(), epsilon = 1e-15);
        let y10 = eval_harmonic(HarmonicIndex::new(1, 0).unwrap(), &Direction::north());
        assert_abs_diff_eq!(y10, (3.0 / (4.0 * PI)).sqrt(), epsilon = 1e-15);
        // Degree one harmonics are √(3/4π) times the coordinates.
        let c = (3.0 / (4.0 * PI)).sqrt();
        let [x, y, z] = d.coords();
        assert_abs_diff_eq!(eval_harmonic(HarmonicIndex::new(1, 1).unwrap(), &d), c * x, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_harmonic(HarmonicIndex::new(1, -1).unwrap(), &d), c * y, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_harmonic(HarmonicIndex::new(1, 0).unwrap(), &d), c * z, epsilon = 1e-15);
    }

    #[test]
    fn degree_two_zonal_closed_form() {
        let d = Direction::new([0.1, 0.7, -0.4]).unwrap();
        let z = d.cos_theta();
        let expected = (5.0 / (4.0 * PI)).sqrt() * 0.5 * (3.0 * z * z - 1.0);
        assert_abs_diff_eq!(eval_harmonic(HarmonicIndex::new(2, 0).unwrap(), &d), expected, epsilon = 1e-15);
    }

    #[test]
    fn gram_matrix_is_identity() {
        let lmax = 12;
        let q = build_quadrature(3, 2 * lmax).unwrap();
        let table = basis_matrix(lmax, &q);
        let nc = num_coeffs(lmax);
        for i in 0..nc {
            for j in 0..nc {
                let g: f64 = (0..q.len())
                    .map(|k| q.weights()[k] * table[k * nc + i] * table[k * nc + j])
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-10, "G[{i},{j}] = {g}");
            }
        }
    }

    #[test]
    fn orthogonality_across_degrees() {
        let q = build_quadrature(3, 8).unwrap();
        for m in -2..=2 {
            for mp in -1..=1 {
                let ip = q.integrate(|d| {
                    eval_harmonic(HarmonicIndex::new(2, m).unwrap(), d)
                        * eval_harmonic(HarmonicIndex::new(1, mp).unwrap(), d)
                });
                assert_abs_diff_eq!(ip, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn expand_single_mode_and_constants() {
        let q = build_quadrature(3, 16).unwrap();
        let y20 = HarmonicIndex::new(2, 0).unwrap();
        let samples: Vec<f64> = q.nodes().iter().map(|d| eval_harmonic(y20, d)).collect();
        let a = expand(&samples, 6, &q).unwrap();
        for (idx, v) in a.iter() {
            if idx == y20 {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
            } else {
                assert!(v.abs() < 1e-12);
            }
        }
        let c = 0.7;
        let a = expand(&vec![c; q.len()], 6, &q).unwrap();
        assert_abs_diff_eq!(a.get(0, 0), c * (4.0 * PI).sqrt(), epsilon = 1e-12);
        assert!(a.values()[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn synthesize_constants_and_zero() {
        let d = Direction::new([1.0, 2.0, 3.0]).unwrap();
        assert_eq!(synthesize(&HarmonicCoeffs::zeros(5), &d), 0.0);
        let c = HarmonicCoeffs::single(0, 0, 2.5);
        assert_abs_diff_eq!(synthesize(&c, &d), 2.5 / (4.0 * PI).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn insufficient_quadrature_is_rejected() {
        let q = build_quadrature(3, 9).unwrap();
        let err = expand(&vec![0.0; q.len()], 5, &q).unwrap_err();
        assert!(matches!(err, SphereError::InsufficientQuadrature { .. }));
    }

    #[test]
    fn flat_index_round_trip() {
        for k in 0..400 {
            assert_eq!(HarmonicIndex::from_flat(k).flat(), k);
        }
    }

    #[test]
    fn eigenvalues_and_space_dimensions() {
        assert_eq!(lb_eigenvalue(0, 3), 0.0);
        assert_eq!(lb_eigenvalue(1, 3), 2.0);
        assert_eq!(lb_eigenvalue(2, 4), 8.0);
        for l in 0..10 {
            assert_eq!(harmonic_space_dim(l, 3), 2 * l + 1);
            assert_eq!(harmonic_space_dim(l, 4), (l + 1) * (l + 1));
        }
        assert_eq!(harmonic_space_dim(2, 5), 14);
    }

    /// Spherical Laplacian by central differences in (θ, φ).
    fn fd_laplace_beltrami(f: &dyn Fn(f64, f64) -> f64, theta: f64, phi: f64, h: f64) -> f64 {
        let ftt = (f(theta + h, phi) - 2.0 * f(theta, phi) + f(theta - h, phi)) / (h * h);
        let ft = (f(theta + h, phi) - f(theta - h, phi)) / (2.0 * h);
        let fpp = (f(theta, phi + h) - 2.0 * f(theta, phi) + f(theta, phi - h)) / (h * h);
        let s = theta.sin();
        ftt + theta.cos() / s * ft + fpp / (s * s)
    }

    #[test]
    fn finite_difference_laplacian_reproduces_eigenvalues() {
        let points = [(0.7, 0.3), (1.9, 2.2), (1.2, -1.0)];
        for (l, m) in [(1, 0), (2, 1), (3, -2), (4, 4), (5, 0)] {
            let idx = HarmonicIndex::new(l, m).unwrap();
            let f = |t: f64, p: f64| eval_harmonic(idx, &Direction::from_polar(t.cos(), p));
            let mut errs = Vec::new();
            for h in [1e-2, 5e-3] {
                let mut worst: f64 = 0.0;
                for &(t, p) in &points {
                    let lap = fd_laplace_beltrami(&f, t, p, h);
                    let exact = -lb_eigenvalue(l, 3) * f(t, p);
                    worst = worst.max((lap - exact).abs());
                }
                errs.push(worst);
            }
            assert!(errs[0] < 1e-2, "l={l}: {errs:?}");
            // second-order scheme: halving h cuts the error by ~4
            assert!(errs[1] < errs[0] * 0.4, "l={l}: {errs:?}");
        }
    }

    proptest! {
        #[test]
        fn expand_synthesize_round_trip(values in proptest::collection::vec(-1.0f64..1.0, num_coeffs(6))) {
            let lmax = 6;
            let q = build_quadrature(3, 2 * lmax).unwrap();
            let coeffs = HarmonicCoeffs::from_values(lmax, values).unwrap();
            let samples: Vec<f64> = q.nodes().iter().map(|d| synthesize(&coeffs, d)).collect();
            let back = expand(&samples, lmax, &q).unwrap();
            for (a, b) in back.values().iter().zip(coeffs.values()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            for (d, s) in q.nodes().iter().zip(&samples) {
                prop_assert!((synthesize(&back, d) - s).abs() < 1e-10);
            }
        }
    }
}
