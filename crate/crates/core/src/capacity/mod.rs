//! Newtonian capacity in ℝ³ and relative to a ball B_R.
//!
//! Normalization: Cap is the Dirichlet energy of the capacitary potential, so
//! Cap(B₁) = 4π in ℝ³ and Cap_R(B_r) = σ (N−2)/(r^{2−N} − R^{2−N}).
//!
//! Three independent solvers are provided: closed forms (balls and
//! ellipsoids), spherical-harmonic collocation, and walk-on-spheres.

mod closed_form;
mod harmonic;
mod wos;

pub use closed_form::{cap_ball, cap_ball_rel, cap_ellipsoid};
pub use harmonic::{cap_exterior_harmonic, cap_relative_harmonic, SolverConfig};
pub use wos::{cap_wos, WosConfig, WosShape, WosTarget};

use serde::Serialize;
use thiserror::Error;

use crate::domains::{DomainError, RadialProfile, StarDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Harmonic,
    Wos,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ClosedForm => "closed_form",
            Self::Harmonic => "harmonic",
            Self::Wos => "wos",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityResult {
    pub value: f64,
    pub method: Method,
    /// Refinement change (harmonic), standard error (wos), 0 (closed form).
    pub error_estimate: f64,
    /// Deterministic absorption-bias bound of walk-on-spheres, 0 otherwise.
    pub bias_bound: f64,
}

impl CapacityResult {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            method: Method::ClosedForm,
            error_estimate: 0.0,
            bias_bound: 0.0,
        }
    }

    /// Error estimate plus bias bound.
    pub fn total_error(&self) -> f64 {
        self.error_estimate + self.bias_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapacityMode {
    Absolute,
    Relative { outer_radius: f64 },
}

impl CapacityMode {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Absolute => "abs",
            Self::Relative { .. } => "rel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solver {
    /// Closed form where one exists, harmonic collocation otherwise.
    Auto(SolverConfig),
    ClosedForm,
    Harmonic(SolverConfig),
    Wos(WosConfig),
}

impl Default for Solver {
    fn default() -> Self {
        Self::Auto(SolverConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CapacityError {
    #[error("invalid solver input: {0}")]
    Input(String),
    #[error("least-squares system is ill-conditioned ({0})")]
    Conditioning(String),
    #[error("boundary residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("domain reaches within the margin of the outer sphere (ρ_max = {rho_max}, R = {outer_radius})")]
    OuterMargin { rho_max: f64, outer_radius: f64 },
    #[error("walk-on-spheres produced no hits out of {0} walks; result inconclusive")]
    NoHits(u64),
    #[error("no closed form is available for this domain and mode")]
    NoClosedForm,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Capacity of Ω in the given mode.
pub fn capacity(domain: &StarDomain, mode: CapacityMode, solver: &Solver) -> Result<CapacityResult, CapacityError> {
    match solver {
        Solver::ClosedForm => closed_form_capacity(domain, mode),
        Solver::Auto(cfg) => match closed_form_capacity(domain, mode) {
            Ok(r) => Ok(r),
            Err(CapacityError::NoClosedForm) => harmonic_capacity(domain, mode, cfg),
            Err(e) => Err(e),
        },
        Solver::Harmonic(cfg) => harmonic_capacity(domain, mode, cfg),
        Solver::Wos(cfg) => match mode {
            CapacityMode::Absolute => cap_wos(&WosTarget::from(domain), cfg),
            CapacityMode::Relative { .. } => Err(CapacityError::Input(
                "walk-on-spheres estimates absolute capacity only".into(),
            )),
        },
    }
}

fn harmonic_capacity(domain: &StarDomain, mode: CapacityMode, cfg: &SolverConfig) -> Result<CapacityResult, CapacityError> {
    match mode {
        CapacityMode::Absolute => cap_exterior_harmonic(domain, cfg),
        CapacityMode::Relative { outer_radius } => cap_relative_harmonic(domain, outer_radius, cfg),
    }
}

fn closed_form_capacity(domain: &StarDomain, mode: CapacityMode) -> Result<CapacityResult, CapacityError> {
    let centered = domain.center().iter().all(|c| *c == 0.0);
    match (domain.profile(), mode) {
        (RadialProfile::Ball, CapacityMode::Absolute) => Ok(CapacityResult::exact(cap_ball(domain.scale(), 3))),
        (RadialProfile::Ball, CapacityMode::Relative { outer_radius }) if centered => {
            Ok(CapacityResult::exact(cap_ball_rel(domain.scale(), outer_radius, 3)?))
        }
        (RadialProfile::Ellipsoid { axes }, CapacityMode::Absolute) => {
            let s = domain.scale();
            Ok(CapacityResult::exact(cap_ellipsoid([s * axes[0], s * axes[1], s * axes[2]])?))
        }
        _ => Err(CapacityError::NoClosedForm),
    }
}

/// Cap_*(B₁) for the mode.
pub fn unit_ball_capacity(mode: CapacityMode) -> Result<f64, CapacityError> {
    match mode {
        CapacityMode::Absolute => Ok(cap_ball(1.0, 3)),
        CapacityMode::Relative { outer_radius } => cap_ball_rel(1.0, outer_radius, 3),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deficit {
    pub value: f64,
    pub error: f64,
    pub capacity: CapacityResult,
}

/// Cap_*(Ω) − Cap_*(B₁) after normalizing |Ω| = |B₁|.
pub fn deficit(domain: &StarDomain, mode: CapacityMode, solver: &Solver) -> Result<Deficit, CapacityError> {
    let normalized = domain.normalize_volume();
    let cap = capacity(&normalized, mode, solver)?;
    Ok(Deficit {
        value: cap.value - unit_ball_capacity(mode)?,
        error: cap.total_error(),
        capacity: cap,
    })
}
