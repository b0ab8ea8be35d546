//! Numerical machinery for multi-variable reductions of the dispersionless
//! DKP hierarchy in its elliptic parametrization.
//!
//! * [`theta`]: Jacobi theta functions by truncated q-series.
//! * [`elliptic`]: `zeta_a`, `wp_a` and the `S`-function.
//! * [`identities`]: sampled residual checks of the elliptic identities.
//! * [`loewner`]: elliptic Löwner flows and the lattice integrator producing a [`loewner::HydroField`].
//! * [`metric`]: Faber speeds, Christoffel symbols and the Egorov metric.
//! * [`hodograph`]: symmetries, the hodograph solver and the dDKP checks.
//! * [`runner`]: scenario configuration and report emission.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod elliptic;
pub mod error;
pub mod goursat;
pub mod hodograph;
pub mod identities;
pub mod loewner;
pub mod metric;
pub mod report;
pub mod runner;
pub mod sampling;
pub mod series;
pub mod theta;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use report::ResidualReport;
pub use theta::{ModularParam, ThetaIndex};
