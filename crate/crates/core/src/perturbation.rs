//! Small perturbations of a basis system.
//!
//! With `λ = Σ ‖xᵢ − yᵢ‖·‖xᵢ*‖ < 1` the perturbed vectors satisfy
//! `(1−λ)‖Σ aᵢxᵢ‖ ≤ ‖Σ aᵢyᵢ‖ ≤ (1+λ)‖Σ aᵢxᵢ‖` for every coefficient vector,
//! and their basis constant is at most `(1+λ)M/(1−λ)`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::basis::{coefficient_functionals, grunblum_certificate, make_basis, BasisSystem, GrunblumCertificate};
use crate::error::{BasisError, Result};
use crate::normed::{check_finite, sphere_sample, NormSpec, SampleConfig, VectorR};
use crate::oracle::OracleConfig;

/// Slack allowed in the sandwich inequality.
pub const SANDWICH_EPS: f64 = 1e-9;
/// Slack allowed when comparing `K_y` with its bound.
pub const BOUND_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Certified,
    Refused,
}

impl Status {
    /// Certification requires the strict inequality `λ < 1`.
    pub fn for_lambda(lambda: f64) -> Status {
        if lambda < 1.0 {
            Status::Certified
        } else {
            Status::Refused
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Certified => "certified",
            Status::Refused => "refused",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationCertificate {
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    /// `(1+λ)M/(1−λ)`; present only when certified.
    pub perturbed_bound: Option<f64>,
    pub status: Status,
    /// `(‖xᵢ − yᵢ‖, ‖xᵢ*‖)` per index.
    pub per_term: Vec<(f64, f64)>,
    /// The Grunblum constant `M` of the unperturbed system.
    pub grunblum_constant: f64,
}

fn check_shape(b: &BasisSystem, y: &[VectorR]) -> Result<()> {
    if y.len() != b.count() {
        return Err(BasisError::CountMismatch {
            expected: b.count(),
            found: y.len(),
        });
    }
    if let Some(v) = y.iter().find(|v| v.len() != b.dim()) {
        return Err(BasisError::DimensionMismatch {
            expected: b.dim(),
            found: v.len(),
        });
    }
    Ok(())
}

/// Assembles a certificate from the per-term products; `λ` is summed in index order.
pub fn certificate_from_terms(per_term: Vec<(f64, f64)>, grunblum_constant: f64) -> PerturbationCertificate {
    let lambda: f64 = per_term.iter().map(|(d, f)| d * f).sum();
    let status = Status::for_lambda(lambda);
    PerturbationCertificate {
        lambda,
        lower: 1.0 - lambda,
        upper: 1.0 + lambda,
        perturbed_bound: (status == Status::Certified).then(|| (1.0 + lambda) * grunblum_constant / (1.0 - lambda)),
        status,
        per_term,
        grunblum_constant,
    }
}

/// Computes `λ` for the perturbation `xᵢ ↦ yᵢ`. Refusal is a result, not an error.
pub fn perturbation_lambda(b: &BasisSystem, y: &[VectorR], cfg: &OracleConfig) -> Result<PerturbationCertificate> {
    check_shape(b, y)?;
    for v in y {
        check_finite(v.as_slice())?;
    }
    let funcs = coefficient_functionals(b, cfg);
    let per_term = y
        .iter()
        .enumerate()
        .map(|(i, yi)| (b.norm().eval((b.matrix().column(i) - yi).as_slice()), funcs.norms[i]))
        .collect();
    let m = grunblum_certificate(b, cfg).grunblum_constant;
    Ok(certificate_from_terms(per_term, m))
}

/// Worst-case slack of the sandwich inequality over sampled coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub samples: usize,
    /// `min (‖Σaᵢyᵢ‖ − (1−λ)‖Σaᵢxᵢ‖)`.
    pub lower_slack: f64,
    /// `min ((1+λ)‖Σaᵢxᵢ‖ − ‖Σaᵢyᵢ‖)`.
    pub upper_slack: f64,
    /// Range of `‖Σaᵢyᵢ‖ / ‖Σaᵢxᵢ‖`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub violations: Vec<VectorR>,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks both sides of the sandwich on `cfg.count` unit coefficient vectors.
pub fn sandwich_check(
    b: &BasisSystem,
    y: &[VectorR],
    cert: &PerturbationCertificate,
    cfg: SampleConfig,
) -> Result<SandwichReport> {
    check_shape(b, y)?;
    if cert.status != Status::Certified {
        return Err(BasisError::Refused { lambda: cert.lambda });
    }
    let ym = DMatrix::from_columns(y);
    let coeffs = sphere_sample(b.count(), &NormSpec::euclidean(), cfg)?;
    let mut report = SandwichReport {
        samples: coeffs.len(),
        lower_slack: f64::INFINITY,
        upper_slack: f64::INFINITY,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        violations: Vec::new(),
    };
    for a in coeffs {
        let nx = b.combination_norm(a.as_slice());
        let ny = b.norm().eval((&ym * &a).as_slice());
        let lo = ny - cert.lower * nx;
        let hi = cert.upper * nx - ny;
        report.lower_slack = report.lower_slack.min(lo);
        report.upper_slack = report.upper_slack.min(hi);
        let r = ny / nx;
        report.min_ratio = report.min_ratio.min(r);
        report.max_ratio = report.max_ratio.max(r);
        if lo < -SANDWICH_EPS || hi < -SANDWICH_EPS {
            report.violations.push(a);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedBound {
    pub bound: f64,
    pub actual: GrunblumCertificate,
    pub holds: bool,
}

/// Compares `K_y` of the perturbed system with `(1+λ)M/(1−λ)`.
pub fn perturbed_constant_bound(
    b: &BasisSystem,
    y: &[VectorR],
    cert: &PerturbationCertificate,
    cfg: &OracleConfig,
) -> Result<PerturbedBound> {
    check_shape(b, y)?;
    let bound = cert.perturbed_bound.ok_or(BasisError::Refused { lambda: cert.lambda })?;
    let ys = make_basis(y.to_vec(), b.norm().clone(), Some(b.threshold())).map_err(|e| {
        BasisError::Numerical(format!(
            "certificate with lambda = {:?} implies independence, but the perturbed system fails validation: {e}",
            cert.lambda
        ))
    })?;
    let actual = grunblum_certificate(&ys, cfg);
    Ok(PerturbedBound {
        bound,
        holds: actual.basis_constant <= bound + BOUND_EPS,
        actual,
    })
}

/// `x + t·(y − x)` termwise.
pub fn interpolate(b: &BasisSystem, y: &[VectorR], t: f64) -> Vec<VectorR> {
    y.iter()
        .enumerate()
        .map(|(i, yi)| {
            let x: DVector<f64> = b.matrix().column(i).into_owned();
            &x + (yi - &x) * t
        })
        .collect()
}
