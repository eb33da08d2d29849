//! Curvature of Hermitian and Kähler metrics on bounded domains of ℂⁿ.
//!
//! The crate is organised bottom-up:
//!
//! - [`domain`]: bounded domains, boundary distance, deterministic sample sets;
//! - [`jet`]: metric jets `(h, ∂h, ∂̄h, ∂∂̄h)` from closed forms or finite
//!   differences of a Kähler potential;
//! - [`zoo`]: the concrete metrics (Euclidean, ball/polydisc/Reinhardt Bergman,
//!   scalings, sums, bump perturbations);
//! - [`curvature`]: curvature tensor, HSC/HBC, Ricci, sphere-bundle extrema and
//!   the Chern–Lu / Schwarz–Yau checks;
//! - [`combiner`]: spherical comparison, Wu-type bounds and the pipeline that
//!   turns a metric pinched near the boundary into one pinched everywhere.

pub mod combiner;
pub mod curvature;
pub mod domain;
pub mod error;
pub mod jet;
pub mod linalg;
pub mod optimize;
pub mod quadrature;
pub mod sampling;
pub mod zoo;

pub use nalgebra;
pub use nalgebra::{Complex, DMatrix};

/// Complex scalar used throughout.
pub type C64 = Complex<f64>;

pub use domain::{DomainSpec, Point, RegionTag, SampleSet, TangentVector};
pub use error::{PinchError, Result};
pub use jet::{MetricField, MetricJet};
