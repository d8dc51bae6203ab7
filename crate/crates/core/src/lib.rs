//! Finite-truncation analysis of Schauder bases and basic sequences.
//!
//! A [`BasisSystem`] is a finite independent family in `ℝ^d` under a norm
//! from [`NormSpec`]. From it the crate computes canonical projection norms,
//! basis and Grunblum constants, coefficient functionals, the η norm on
//! coefficient space and the unconditional constant; certifies small
//! perturbations; and extracts block basic subsequences by a gliding hump.
//! Exact computations are cross-checked by the estimators in [`oracle`].

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod generators;
pub mod normed;
pub mod oracle;
pub mod perturbation;
pub mod selection;

pub use basis::{
    coefficient_functionals, coefficients, eta, eta_analysis, grunblum_certificate, make_basis, projection_norm,
    unconditional_constant, BasisSystem, CoefficientFunctionals, CoefficientVector, EtaAnalysis,
    GrunblumCertificate, Method, NormValue,
};
pub use error::{BasisError, Result};
pub use normed::{dual_norm_eval, norm_eval, sphere_sample, NormSpec, SampleConfig, VectorR};
pub use oracle::{OracleConfig, OracleEstimate};
