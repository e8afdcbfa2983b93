//! Newtonian capacity, asymmetry and isocapacitary deficits of star-shaped
//! domains in three dimensions.
//!
//! The crate is organized bottom-up:
//!
//! * [`sphere`] quadrature on the unit sphere and real spherical harmonics;
//! * [`domains`] star-shaped and composite bodies, volumes, barycenters and
//!   the domain families used by the experiments;
//! * [`capacity`] closed-form, spherical-harmonic collocation and
//!   walk-on-spheres capacity solvers plus the deficit functional;
//! * [`asymmetry`] Fraenkel asymmetry and the weighted asymmetries;
//! * [`stability`] Dirichlet-to-Neumann spectra, second-variation forms and
//!   the penalty functionals;
//! * [`harness`] experiment drivers and CSV/JSON/SVG emission behind the
//!   `isocap` command line tool.

pub mod asymmetry;
pub mod capacity;
pub mod domains;
pub mod harness;
pub mod sphere;
pub mod stability;
pub mod vec3;

pub use capacity::{CapacityMode, CapacityResult, Method};
pub use domains::{CompositeDomain, StarDomain};
pub use sphere::{Direction, HarmonicCoeffs, HarmonicIndex, SphereQuadrature};
