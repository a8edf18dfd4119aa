//! Distortion functions, the δ ↔ H correspondence and sampled measurements of
//! dilatation, monotonicity and quasisymmetry.

mod dilatation;
mod eta;
mod matrix;

pub use dilatation::{
    cassels_bound, cassels_oracle, delta_from_h, delta_pairs, ellipticity_ratio, estimate_h, estimate_h_at,
    h_from_delta, measure_delta_monotonicity, monotonicity_quotient, quasisymmetry_check, random_triples,
    sharp_direction, DilatationEstimate, QuasisymmetryReport, SamplingPlan,
};
pub use eta::{eta_identities_check, EtaIdentityReport, EtaProfile};
pub use matrix::{matrix_inequality_check, MatrixInequality, MATRIX_INEQUALITY_TOL};
