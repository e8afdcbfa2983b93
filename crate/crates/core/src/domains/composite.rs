use super::{DomainError, StarDomain};
use crate::sphere::unit_ball_volume;
use crate::vec3::{self, Vec3};

/// Finite union of star domains with pairwise disjoint closures.
#[derive(Debug, Clone)]
pub struct CompositeDomain {
    components: Vec<StarDomain>,
}

/// Bookkeeping of a truncate-and-rescale step.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub radius: f64,
    /// |Ω ∖ B_S|.
    pub outside_volume: f64,
    /// |Ω ∩ B_S|.
    pub inside_volume: f64,
    pub lambda: f64,
    /// Upper bound on diam(Ω̃), exact for unions of balls.
    pub diameter: f64,
    pub kept: Vec<usize>,
}

impl CompositeDomain {
    pub fn new(components: Vec<StarDomain>) -> Result<Self, DomainError> {
        if components.is_empty() {
            return Err(DomainError::Parameter("a composite domain needs at least one component".into()));
        }
        for i in 0..components.len() {
            for j in i + 1..components.len() {
                let gap = vec3::norm(vec3::sub(components[i].center(), components[j].center()));
                if gap <= components[i].max_radius_bound() + components[j].max_radius_bound() {
                    return Err(DomainError::NotDisjoint(i, j));
                }
            }
        }
        Ok(Self { components })
    }

    pub fn single(domain: StarDomain) -> Self {
        Self {
            components: vec![domain],
        }
    }

    pub fn components(&self) -> &[StarDomain] {
        &self.components
    }

    pub fn volume(&self) -> f64 {
        self.components.iter().map(StarDomain::volume).sum()
    }

    pub fn barycenter(&self) -> Vec3 {
        let mut m = vec3::ZERO;
        for c in &self.components {
            m = vec3::axpy(c.volume(), c.barycenter(), m);
        }
        vec3::scale(m, 1.0 / self.volume())
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.components.iter().any(|c| c.contains(p))
    }

    /// Radius of a ball about the origin containing every component.
    pub fn enclosing_radius(&self) -> f64 {
        self.components
            .iter()
            .map(StarDomain::enclosing_radius)
            .fold(0.0, f64::max)
    }

    /// Diameter bound: max over pairs of |c_i − c_j| + r_i + r_j.
    pub fn diameter_bound(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.components.iter().enumerate() {
            d = d.max(2.0 * a.max_radius_bound());
            for b in &self.components[i + 1..] {
                let gap = vec3::norm(vec3::sub(a.center(), b.center()));
                d = d.max(gap + a.max_radius_bound() + b.max_radius_bound());
            }
        }
        d
    }

    pub fn dilated(&self, lambda: f64) -> Self {
        Self {
            components: self.components.iter().map(|c| c.dilated(lambda)).collect(),
        }
    }

    /// Ω̃ = (ω_N/|Ω ∩ B_S|)^{1/N} (Ω ∩ B_S); each component must lie entirely
    /// inside or entirely outside B_S.
    pub fn truncate_rescale(&self, radius: f64) -> Result<(Self, TruncationReport), DomainError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(DomainError::Parameter(format!("truncation radius must be positive, got {radius}")));
        }
        let mut kept = Vec::new();
        let mut outside_volume = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            let dist = vec3::norm(c.center());
            let r_out = c.max_radius_bound();
            if dist + r_out <= radius {
                kept.push(i);
            } else if dist - r_out >= radius {
                outside_volume += c.volume();
            } else {
                return Err(DomainError::Slicing { component: i, radius });
            }
        }
        if kept.is_empty() {
            return Err(DomainError::NothingInside(radius));
        }
        let inside: Vec<StarDomain> = kept.iter().map(|&i| self.components[i].clone()).collect();
        let inside_volume: f64 = inside.iter().map(StarDomain::volume).sum();
        let lambda = (unit_ball_volume(3) / inside_volume).cbrt();
        let out = Self {
            components: inside.iter().map(|c| c.dilated(lambda)).collect(),
        };
        let report = TruncationReport {
            radius,
            outside_volume,
            inside_volume,
            lambda,
            diameter: out.diameter_bound(),
            kept,
        };
        Ok((out, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    const OMEGA3: f64 = 4.0 * PI / 3.0;

    #[test]
    fn single_ball_is_unchanged() {
        let c = CompositeDomain::single(StarDomain::unit_ball());
        let (t, rep) = c.truncate_rescale(2.0).unwrap();
        assert_abs_diff_eq!(rep.lambda, 1.0, epsilon = 1e-14);
        assert_eq!(rep.outside_volume, 0.0);
        assert_abs_diff_eq!(t.volume(), OMEGA3, epsilon = 1e-13);
        assert_abs_diff_eq!(rep.diameter, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn far_ball_is_removed_and_rest_rescaled() {
        let v = 0.01 * OMEGA3;
        let r0 = (1.0f64 - 0.01).cbrt();
        let rf = (v / OMEGA3).cbrt();
        let c = CompositeDomain::new(vec![
            StarDomain::ball(r0, vec3::ZERO).unwrap(),
            StarDomain::ball(rf, [10.0, 0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let (t, rep) = c.truncate_rescale(2.0).unwrap();
        assert_eq!(rep.kept, vec![0]);
        assert_abs_diff_eq!(rep.outside_volume, v, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.lambda, (OMEGA3 / (OMEGA3 - v)).cbrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(rep.lambda * r0, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(t.volume(), OMEGA3, epsilon = 1e-12);
    }

    #[test]
    fn slicing_and_empty_configurations_fail() {
        let c = CompositeDomain::new(vec![
            StarDomain::unit_ball(),
            StarDomain::ball(0.2, [1.9, 0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        assert_eq!(
            c.truncate_rescale(2.0).unwrap_err(),
            DomainError::Slicing { component: 1, radius: 2.0 }
        );
        let far = CompositeDomain::single(StarDomain::ball(0.5, [5.0, 0.0, 0.0]).unwrap());
        assert_eq!(far.truncate_rescale(2.0).unwrap_err(), DomainError::NothingInside(2.0));
    }

    #[test]
    fn overlapping_components_rejected() {
        let res = CompositeDomain::new(vec![
            StarDomain::unit_ball(),
            StarDomain::ball(1.0, [1.5, 0.0, 0.0]).unwrap(),
        ]);
        assert_eq!(res.unwrap_err(), DomainError::NotDisjoint(0, 1));
    }
}
