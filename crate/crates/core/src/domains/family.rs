use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sampled_sup, DomainError, StarDomain};
use crate::sphere::HarmonicCoeffs;

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyVariant {
    /// `count` eccentricities equally spaced on [eps_min, eps_max].
    Ellipsoid { eps_min: f64, eps_max: f64 },
    /// t·Y_{l,m} for t = amplitude·2^{−k}, k = 0..count.
    HarmonicPerturbation { degree: usize, order: i32, amplitude: f64 },
    /// Random band-limited φ with ‖φ‖∞ ≤ amplitude.
    RandomStar { seed: u64, max_degree: usize, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub variant: FamilyVariant,
    pub count: usize,
    /// Volume-normalize every member (volume shift for perturbations).
    pub normalize: bool,
}

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub index: usize,
    pub id: String,
    /// ε for ellipsoids, t for harmonic perturbations, ‖φ‖∞ for random stars.
    pub parameter: f64,
    pub domain: StarDomain,
    pub phi: Option<HarmonicCoeffs>,
}

impl FamilySpec {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.count == 0 {
            return Err(DomainError::Parameter("family is empty".into()));
        }
        match self.variant {
            FamilyVariant::Ellipsoid { eps_min, eps_max } => {
                if !(0.0 <= eps_min && eps_min <= eps_max && eps_max < 0.5) {
                    return Err(DomainError::Parameter(format!(
                        "ellipsoid range [{eps_min}, {eps_max}] outside [0, 0.5)"
                    )));
                }
            }
            FamilyVariant::HarmonicPerturbation { degree, order, amplitude } => {
                if order.unsigned_abs() as usize > degree {
                    return Err(DomainError::Parameter(format!("order {order} exceeds degree {degree}")));
                }
                if !(amplitude > 0.0 && amplitude < 0.5) {
                    return Err(DomainError::Parameter(format!("amplitude {amplitude} outside (0, 0.5)")));
                }
            }
            FamilyVariant::RandomStar { max_degree, amplitude, .. } => {
                if max_degree < 1 {
                    return Err(DomainError::Parameter("random stars need max_degree ≥ 1".into()));
                }
                if !(amplitude > 0.0 && amplitude < 0.5) {
                    return Err(DomainError::Parameter(format!("amplitude {amplitude} outside (0, 0.5)")));
                }
            }
        }
        Ok(())
    }

    pub fn member(&self, index: usize) -> Result<FamilyMember, DomainError> {
        match self.variant {
            FamilyVariant::Ellipsoid { eps_min, eps_max } => {
                let eps = if self.count == 1 {
                    eps_min
                } else {
                    eps_min + (eps_max - eps_min) * index as f64 / (self.count - 1) as f64
                };
                let mut domain = StarDomain::ellipsoid(eps)?;
                if self.normalize {
                    domain = domain.normalize_volume();
                }
                Ok(FamilyMember {
                    index,
                    id: format!("ellipsoid-{index:03}"),
                    parameter: eps,
                    domain,
                    phi: None,
                })
            }
            FamilyVariant::HarmonicPerturbation { degree, order, amplitude } => {
                let t = amplitude * 0.5f64.powi(index as i32);
                let phi = HarmonicCoeffs::single(degree, order, t);
                let domain = StarDomain::nearly_spherical_from_phi(&phi, self.normalize)?;
                Ok(FamilyMember {
                    index,
                    id: format!("harmonic-{degree}-{order}-{index:03}"),
                    parameter: t,
                    phi: domain.radial_perturbation(),
                    domain,
                })
            }
            FamilyVariant::RandomStar { seed, max_degree, amplitude } => {
                let (domain, sup) = random_star(seed, index as u64, max_degree, amplitude, self.normalize)?;
                Ok(FamilyMember {
                    index,
                    id: format!("star-{index:03}"),
                    parameter: sup,
                    phi: domain.radial_perturbation(),
                    domain,
                })
            }
        }
    }
}

pub fn generate_family(spec: &FamilySpec) -> Result<Vec<FamilyMember>, DomainError> {
    spec.validate()?;
    (0..spec.count).map(|i| spec.member(i)).collect()
}

/// Coefficients U(−1,1)/l for 1 ≤ l ≤ L, rescaled to a sup norm drawn from
/// amplitude·U(0.05, 1); shrunk until the corrected φ also obeys the bound.
fn random_star(
    seed: u64,
    stream: u64,
    max_degree: usize,
    amplitude: f64,
    normalize: bool,
) -> Result<(StarDomain, f64), DomainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut phi = HarmonicCoeffs::zeros(max_degree);
    for l in 1..=max_degree {
        for m in -(l as i32)..=(l as i32) {
            phi.set(l, m, rng.random_range(-1.0..1.0) / l as f64);
        }
    }
    let target = amplitude * rng.random_range(0.05..1.0);
    let mut phi = phi.scaled(target / sampled_sup(&phi));
    for _ in 0..20 {
        let domain = StarDomain::nearly_spherical_from_phi(&phi, normalize)?;
        let sup = domain
            .radial_perturbation()
            .map(|p| sampled_sup(&p))
            .unwrap_or(0.0);
        if sup <= amplitude {
            return Ok((domain, sup));
        }
        phi = phi.scaled(0.95 * amplitude / sup);
    }
    Err(DomainError::Parameter("could not meet the random-star amplitude bound".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn ellipsoid_grid_endpoints() {
        let spec = FamilySpec {
            variant: FamilyVariant::Ellipsoid { eps_min: 0.05, eps_max: 0.4 },
            count: 8,
            normalize: true,
        };
        let f = generate_family(&spec).unwrap();
        assert_eq!(f.len(), 8);
        assert_abs_diff_eq!(f[0].parameter, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(f[7].parameter, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(f[3].parameter, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn random_stars_respect_bounds_and_are_reproducible() {
        let spec = FamilySpec {
            variant: FamilyVariant::RandomStar { seed: 7, max_degree: 4, amplitude: 0.3 },
            count: 12,
            normalize: true,
        };
        let a = generate_family(&spec).unwrap();
        let b = generate_family(&spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.domain.rho_at_nodes(), y.domain.rho_at_nodes());
            assert!(x.parameter <= 0.3);
            assert_abs_diff_eq!(x.domain.volume(), 4.0 * PI / 3.0, epsilon = 1e-12);
        }
        assert_ne!(a[0].domain.rho_at_nodes(), a[1].domain.rho_at_nodes());
    }

    #[test]
    fn empty_family_is_an_error() {
        let spec = FamilySpec {
            variant: FamilyVariant::Ellipsoid { eps_min: 0.05, eps_max: 0.4 },
            count: 0,
            normalize: true,
        };
        assert!(generate_family(&spec).is_err());
    }

    #[test]
    fn harmonic_ladder_halves() {
        let spec = FamilySpec {
            variant: FamilyVariant::HarmonicPerturbation { degree: 2, order: 0, amplitude: 0.02 },
            count: 3,
            normalize: true,
        };
        let f = generate_family(&spec).unwrap();
        let ts: Vec<f64> = f.iter().map(|m| m.parameter).collect();
        assert_eq!(ts, vec![0.02, 0.01, 0.005]);
    }
}
