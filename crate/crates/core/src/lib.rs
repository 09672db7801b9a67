//! Numerical toolkit for the mass functional of asymptotically hyperbolic ends.
//!
//! The crate is organised bottom-up:
//!
//! * [`hyperbolic`] — the hyperboloid model, its orthonormal frame, static
//!   potentials and the Lorentzian classification of mass vectors.
//! * [`quadrature`] — Gauss–Legendre rules and product rules on spheres.
//! * [`metric_models`] — end charts (exact models, perturbations, sampled
//!   grids, boosted charts) and decay validation.
//! * [`curvature`] — scalar curvature, the L¹ density check and the pointwise
//!   hypothesis functionals.
//! * [`mass`] — the charge integrand, sphere integrals, power-law
//!   extrapolation and the classified mass vector.
//! * [`distance`] — the neck ODE, thresholds and potential profiles.
//! * [`pipeline`] — serializable run configurations and the report builders
//!   used by the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod curvature;
pub mod distance;
pub mod error;
pub mod hyperbolic;
pub mod mass;
pub mod metric_models;
pub mod pipeline;
pub mod quadrature;
mod serde_ext;

pub use error::{Error, Result};

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
