//! Quasiuniformly convex integrands in two dimensions: construction,
//! dilatation analysis, regularisation, dual gauges, a P1 Dirichlet solver and
//! numerical checks of regularity estimates for its minimisers.

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dual_geometry;
pub mod error;
pub mod estimates;
pub mod expr;
pub mod integrand;
pub mod linalg;
pub mod optim;
pub mod qc_analysis;
pub mod regularize;
pub mod solver;

pub use error::{QucError, Result};
pub use integrand::{DerivativeMode, Integrand, IntegrandSpec};
pub use linalg::{Mat2, Vec2};
pub use qc_analysis::{DilatationEstimate, EtaProfile};
