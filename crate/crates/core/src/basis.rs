//! Finite basis systems: coefficient recovery, coefficient functionals,
//! canonical projection norms, the basis and Grunblum constants, the η
//! norm on coefficient space, and the unconditional constant.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{BasisError, Result};
use crate::normed::{check_finite, gaussian_direction, indexed_rng, NormSpec, Shape, VectorR};
use crate::oracle::{maximize_ratio, sign_pattern_enumerate, OracleConfig, OracleEstimate, PatternNorm, SignPattern};

pub const DEFAULT_INDEPENDENCE_THRESHOLD: f64 = 1e-10;
/// Relative residual allowed when solving for coefficients.
pub const SPAN_TOLERANCE: f64 = 1e-8;
/// Default largest `N` for exhaustive sign enumeration.
pub const DEFAULT_EXACT_LIMIT: usize = 16;

/// How a norm value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Largest eigenvalue of a symmetric Gram-type matrix.
    ExactSpectral,
    /// Closed-form induced ℓ1 / ℓ∞ matrix norm, or the dual norm of an exact inverse row.
    ExactMatrixNorm,
    /// Best sampled ratio after local ascent; a lower bound.
    OracleEstimate,
    /// Smallest dual norm found over all biorthogonal extensions; an upper bound.
    MinimizedExtension,
}

impl Method {
    pub fn is_exact(self) -> bool {
        matches!(self, Method::ExactSpectral | Method::ExactMatrixNorm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ExactSpectral => "exact-spectral",
            Method::ExactMatrixNorm => "exact-matrix-norm",
            Method::OracleEstimate => "oracle-estimate",
            Method::MinimizedExtension => "minimized-extension",
        })
    }
}

/// A computed norm with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub method: Method,
    pub uncertainty: f64,
    /// Coefficient vector attaining `value`, when one is known.
    pub witness: Option<VectorR>,
}

impl NormValue {
    pub fn from_oracle(est: OracleEstimate) -> Self {
        NormValue {
            value: est.value,
            method: Method::OracleEstimate,
            uncertainty: est.last_improvement,
            witness: Some(est.witness),
        }
    }
}

/// Linearly independent vectors `x₁ … x_N` in `ℝ^d` with a norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSystem {
    matrix: DMatrix<f64>,
    norm: NormSpec,
    threshold: f64,
}

/// Validates `vectors` as a basis system; `threshold` defaults to
/// [`DEFAULT_INDEPENDENCE_THRESHOLD`].
pub fn make_basis(vectors: Vec<VectorR>, norm: NormSpec, threshold: Option<f64>) -> Result<BasisSystem> {
    let threshold = threshold.unwrap_or(DEFAULT_INDEPENDENCE_THRESHOLD);
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(BasisError::InvalidParameter(format!(
            "independence threshold must be positive, got {threshold:?}"
        )));
    }
    let first = vectors.first().ok_or(BasisError::Empty("basis system needs at least one vector"))?;
    let dim = first.len();
    norm.check_dim(dim)?;
    if vectors.len() > dim {
        return Err(BasisError::InvalidParameter(format!(
            "{} vectors cannot be independent in dimension {dim}",
            vectors.len()
        )));
    }
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(BasisError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        check_finite(v.as_slice())?;
        if norm.eval(v.as_slice()) == 0.0 {
            return Err(BasisError::NullVector { index: i + 1 });
        }
    }
    let matrix = DMatrix::from_columns(&vectors);
    let sv = matrix.singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
    let ratio = lo / hi;
    if !(ratio >= threshold) {
        return Err(BasisError::Dependent { ratio, threshold });
    }
    Ok(BasisSystem { matrix, norm, threshold })
}

impl BasisSystem {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn count(&self) -> usize {
        self.matrix.ncols()
    }

    /// The `d × N` matrix whose columns are the basis vectors.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Basis vector `k`, 1-based.
    pub fn vector(&self, k: usize) -> VectorR {
        self.matrix.column(k - 1).into_owned()
    }

    pub fn vectors(&self) -> Vec<VectorR> {
        self.matrix.column_iter().map(|c| c.into_owned()).collect()
    }

    /// System built from the first `n` vectors.
    pub fn prefix(&self, n: usize) -> Result<BasisSystem> {
        if n == 0 || n > self.count() {
            return Err(BasisError::IndexOutOfRange {
                index: n,
                max: self.count(),
            });
        }
        Ok(BasisSystem {
            matrix: self.matrix.columns(0, n).into_owned(),
            norm: self.norm.clone(),
            threshold: self.threshold,
        })
    }

    /// `‖Σ aᵢxᵢ‖`.
    pub fn combination_norm(&self, a: &[f64]) -> f64 {
        self.norm.eval((&self.matrix * DVector::from_column_slice(a)).as_slice())
    }

    /// Rows scaled by the norm weights, so the norm becomes an unweighted ℓp norm.
    fn weighted(&self) -> DMatrix<f64> {
        let mut m = self.matrix.clone();
        if let Some(w) = self.norm.weights() {
            for (i, mut row) in m.row_iter_mut().enumerate() {
                row *= w[i];
            }
        }
        m
    }

    fn inverse_weights(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_fn(self.dim(), |i, _| 1.0 / self.norm.weight(i)))
    }

    fn weight_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_fn(self.dim(), |i, _| self.norm.weight(i)))
    }

    fn square_inverse(&self) -> DMatrix<f64> {
        self.matrix
            .clone()
            .try_inverse()
            .expect("validated square system is invertible")
    }

    /// Rescales a coefficient witness so that `‖Σ aᵢxᵢ‖ = 1`.
    fn normalize_witness(&self, a: VectorR) -> VectorR {
        let n = self.combination_norm(a.as_slice());
        if n > 0.0 {
            a / n
        } else {
            a
        }
    }

    /// Norm of the coefficient map `c` transported to the span:
    /// `sup_a ‖X c a‖ / ‖X a‖`.
    ///
    /// Exact for `p = 2` (spectral) and for `p ∈ {1, ∞}` when the system
    /// spans the whole space (matrix-norm formulas); sampled otherwise.
    pub fn coefficient_operator_norm(&self, c: &DMatrix<f64>, cfg: &OracleConfig) -> NormValue {
        let square = self.count() == self.dim();
        match self.norm.shape() {
            Shape::Euclidean => self.spectral_norm(c),
            Shape::One | Shape::Max if square => self.induced_matrix_norm(c),
            _ => {
                let num = &self.matrix * c;
                let mut e1 = VectorR::zeros(self.count());
                e1[0] = 1.0;
                let est = maximize_ratio(
                    self.count(),
                    |a| crate::oracle::matrix_ratio(&num, &self.matrix, &self.norm, a),
                    cfg,
                    &[e1],
                );
                NormValue::from_oracle(est)
            }
        }
    }

    fn spectral_norm(&self, c: &DMatrix<f64>) -> NormValue {
        // With WX = QR, ‖WXca‖ / ‖WXa‖ = ‖R c R⁻¹ b‖ / ‖b‖ for b = Ra.
        let r = self.weighted().qr().r();
        let r_inv = r
            .clone()
            .solve_upper_triangular(&DMatrix::identity(self.count(), self.count()))
            .expect("validated system has nonsingular triangular factor");
        let t = &r * c * &r_inv;
        let gram = t.transpose() * &t;
        let eig = gram.symmetric_eigen();
        let (idx, top) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if *v > best.1 { (i, *v) } else { best });
        let b = eig.eigenvectors.column(idx).into_owned();
        NormValue {
            value: top.max(0.0).sqrt(),
            method: Method::ExactSpectral,
            uncertainty: 0.0,
            witness: Some(self.normalize_witness(r_inv * b)),
        }
    }

    fn induced_matrix_norm(&self, c: &DMatrix<f64>) -> NormValue {
        let x_inv = self.square_inverse();
        let w_inv = self.inverse_weights();
        let a = self.weight_matrix() * &self.matrix * c * &x_inv * &w_inv;
        let d = self.dim();
        let input = if self.norm.shape() == Shape::One {
            let (j, _) = (0..d).fold((0, f64::NEG_INFINITY), |best, j| {
                let s: f64 = a.column(j).iter().map(|x| x.abs()).sum();
                if s > best.1 {
                    (j, s)
                } else {
                    best
                }
            });
            let mut e = VectorR::zeros(d);
            e[j] = 1.0;
            e
        } else {
            let (i, _) = (0..d).fold((0, f64::NEG_INFINITY), |best, i| {
                let s: f64 = a.row(i).iter().map(|x| x.abs()).sum();
                if s > best.1 {
                    (i, s)
                } else {
                    best
                }
            });
            VectorR::from_fn(d, |j, _| if a[(i, j)] < 0.0 { -1.0 } else { 1.0 })
        };
        let value = if self.norm.shape() == Shape::One {
            (0..d).map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
        } else {
            (0..d).map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
        };
        let witness = x_inv * w_inv * input;
        NormValue {
            value,
            method: Method::ExactMatrixNorm,
            uncertainty: 0.0,
            witness: Some(self.normalize_witness(witness)),
        }
    }
}

/// Expansion coefficients `a` with `Σ aᵢxᵢ = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(pub VectorR);

impl CoefficientVector {
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// Solves `Σ aᵢxᵢ = x`, rejecting `x` outside the span.
pub fn coefficients(b: &BasisSystem, x: &VectorR) -> Result<CoefficientVector> {
    if x.len() != b.dim() {
        return Err(BasisError::DimensionMismatch {
            expected: b.dim(),
            found: x.len(),
        });
    }
    check_finite(x.as_slice())?;
    let qr = b.matrix.clone().qr();
    let rhs = qr.q().transpose() * x;
    let a = qr
        .r()
        .solve_upper_triangular(&rhs)
        .expect("validated system has nonsingular triangular factor");
    let scale = b.norm.eval(x.as_slice());
    let residual = b.norm.eval((x - &b.matrix * &a).as_slice());
    if residual > SPAN_TOLERANCE * scale {
        return Err(BasisError::OutsideSpan {
            residual: residual / scale,
            tolerance: SPAN_TOLERANCE,
        });
    }
    Ok(CoefficientVector(a))
}

/// Dual vectors `f_k` with `⟨f_k, x_j⟩ = δ_kj` and their norms `‖x_k*‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFunctionals {
    pub duals: Vec<VectorR>,
    pub norms: Vec<f64>,
    pub method: Method,
    /// Per functional; for minimized extensions the gap to a sampled lower bound.
    pub uncertainties: Vec<f64>,
}

/// Biorthogonal functionals of minimal dual norm.
///
/// When the system spans the space the duals are the rows of `X⁻¹`. For
/// `p = 2` on a proper subspace the minimal extension is a pseudoinverse row.
/// Otherwise the dual norm is minimized over the affine set of extensions
/// and checked against a sampled lower bound.
pub fn coefficient_functionals(b: &BasisSystem, cfg: &OracleConfig) -> CoefficientFunctionals {
    let n = b.count();
    let (duals, method): (Vec<VectorR>, Method) = if b.norm.shape() == Shape::Euclidean {
        let qr = b.weighted().qr();
        let r_inv = qr
            .r()
            .solve_upper_triangular(&DMatrix::identity(n, n))
            .expect("validated system has nonsingular triangular factor");
        let pinv = r_inv * qr.q().transpose();
        let w = b.weight_matrix();
        let duals = (0..n).map(|k| &w * pinv.row(k).transpose()).collect();
        (duals, Method::ExactSpectral)
    } else if n == b.dim() {
        let inv = b.square_inverse();
        (
            (0..n).map(|k| inv.row(k).transpose().into_owned()).collect(),
            Method::ExactMatrixNorm,
        )
    } else {
        let extensions = (0..n)
            .into_par_iter()
            .map(|k| minimal_extension(b, k, cfg))
            .collect::<Vec<_>>();
        let mut duals = Vec::with_capacity(n);
        let mut norms = Vec::with_capacity(n);
        let mut uncertainties = Vec::with_capacity(n);
        for (f, upper, lower) in extensions {
            duals.push(f);
            norms.push(upper);
            uncertainties.push((upper - lower).max(0.0));
        }
        return CoefficientFunctionals {
            duals,
            norms,
            method: Method::MinimizedExtension,
            uncertainties,
        };
    };
    let norms = duals.iter().map(|f| b.norm.eval_dual(f.as_slice())).collect();
    CoefficientFunctionals {
        duals,
        norms,
        method,
        uncertainties: vec![0.0; n],
    }
}

/// Returns `(dual vector, its dual norm, sampled lower bound on ‖x_k*‖)`.
fn minimal_extension(b: &BasisSystem, k: usize, cfg: &OracleConfig) -> (VectorR, f64, f64) {
    let (d, n) = (b.dim(), b.count());
    let qr = b.matrix.clone().qr();
    let q = qr.q();
    let r_inv = qr
        .r()
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .expect("validated system has nonsingular triangular factor");
    let base: VectorR = (r_inv * q.transpose()).row(k).transpose().into_owned();

    // Orthonormal basis of the annihilator of the span.
    let complement = DMatrix::identity(d, d) - &q * q.transpose();
    let eig = complement.symmetric_eigen();
    let mut cols: Vec<(usize, f64)> = eig.eigenvalues.iter().copied().enumerate().filter(|(_, v)| *v > 0.5).collect();
    cols.sort_by_key(|(i, _)| *i);
    let z = DMatrix::from_columns(&cols.iter().map(|(i, _)| eig.eigenvectors.column(*i).into_owned()).collect::<Vec<_>>());

    let dual = |c: &VectorR| b.norm.eval_dual((&base + &z * c).as_slice());
    let c = minimize_convex(&dual, z.ncols(), base.norm(), cfg.sample.seed ^ k as u64);
    let f = &base + &z * &c;
    let upper = b.norm.eval_dual(f.as_slice());

    let mut ek = VectorR::zeros(n);
    ek[k] = 1.0;
    let lower = maximize_ratio(
        n,
        |a| {
            let den = b.combination_norm(a);
            (den > 0.0).then(|| a[k].abs() / den)
        },
        cfg,
        &[ek],
    );
    (f, upper, lower.value.min(upper))
}

/// Pattern search with coordinate and random directions and step halving.
fn minimize_convex<F: Fn(&VectorR) -> f64>(h: &F, dim: usize, scale: f64, seed: u64) -> VectorR {
    let mut x = VectorR::zeros(dim);
    let mut hx = h(&x);
    let mut step = scale.max(1.0);
    let stop = 1e-13 * scale.max(1.0);
    let mut sweep = 0u64;
    while step > stop && sweep < 20_000 {
        sweep += 1;
        let mut dirs: Vec<VectorR> = (0..dim)
            .map(|j| {
                let mut e = VectorR::zeros(dim);
                e[j] = 1.0;
                e
            })
            .collect();
        for r in 0..dim.min(4) as u64 {
            let mut g = gaussian_direction(dim, seed, (sweep << 3) | r);
            g /= g.norm();
            dirs.push(g);
        }
        let mut improved = false;
        for d in &dirs {
            for sign in [1.0, -1.0] {
                let y = &x + d * (sign * step);
                let hy = h(&y);
                if hy < hx {
                    x = y;
                    hx = hy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    x
}

/// `‖Pₘ‖` for the canonical projection onto the first `m` vectors, 1-based.
pub fn projection_norm(b: &BasisSystem, m: usize, cfg: &OracleConfig) -> Result<NormValue> {
    if m == 0 || m > b.count() {
        return Err(BasisError::IndexOutOfRange { index: m, max: b.count() });
    }
    Ok(b.coefficient_operator_norm(&truncation(b.count(), m), cfg))
}

/// Coefficient-space matrix of the projection `Pₘ`.
pub fn truncation(count: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(count, count, |i, j| if i == j && i < m { 1.0 } else { 0.0 })
}

/// Projection norms with the basis constant `K` and Grunblum constant `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrunblumCertificate {
    pub projections: Vec<NormValue>,
    pub basis_constant: f64,
    pub grunblum_constant: f64,
    pub method: Method,
    pub uncertainty: f64,
    /// 1-based index of the projection attaining `K`.
    pub argmax: usize,
}

impl GrunblumCertificate {
    pub fn projection_norms(&self) -> Vec<f64> {
        self.projections.iter().map(|p| p.value).collect()
    }
}

/// Computes every `‖Pₘ‖` and sets `K = M = maxₘ ‖Pₘ‖`.
///
/// A pair `m ≤ n` reduces to the single index `m` by padding coefficients
/// beyond `n` with zeros, so the Grunblum constant equals `K`.
pub fn grunblum_certificate(b: &BasisSystem, cfg: &OracleConfig) -> GrunblumCertificate {
    let projections: Vec<NormValue> = (1..=b.count())
        .into_par_iter()
        .map(|m| b.coefficient_operator_norm(&truncation(b.count(), m), cfg))
        .collect();
    let (argmax, k) = projections
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p.value > best.1 { (i, p.value) } else { best });
    let method = projections[argmax].method;
    let uncertainty = projections.iter().map(|p| p.uncertainty).fold(0.0, f64::max);
    GrunblumCertificate {
        projections,
        basis_constant: k,
        grunblum_constant: k,
        method,
        uncertainty,
        argmax: argmax + 1,
    }
}

/// Norms `‖Σ_{i≤n} aᵢxᵢ‖` for `n = 1..N`; the last entry is `‖Σ aᵢxᵢ‖`.
pub fn partial_sum_norms(b: &BasisSystem, a: &[f64]) -> Vec<f64> {
    let mut acc = VectorR::zeros(b.dim());
    (0..b.count())
        .map(|i| {
            acc.axpy(a[i], &b.matrix.column(i), 1.0);
            b.norm.eval(acc.as_slice())
        })
        .collect()
}

/// `η(a) = maxₙ ‖Σ_{i≤n} aᵢxᵢ‖`.
pub fn eta(b: &BasisSystem, a: &[f64]) -> f64 {
    partial_sum_norms(b, a).into_iter().fold(0.0, f64::max)
}

/// η of one coefficient vector, with the norms of the coefficient-to-vector
/// map `T` and its inverse on the span.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaAnalysis {
    pub eta_value: f64,
    pub partial_sums: Vec<f64>,
    /// `sup ‖Σ aᵢxᵢ‖ / η(a)`.
    pub t_norm: f64,
    /// `sup η(a) / ‖Σ aᵢxᵢ‖`, searched from the projection witnesses.
    pub t_inv_norm: f64,
    pub basis_constant: f64,
}

/// Norms of `T` and `T⁻¹` between `(coefficients, η)` and the span.
pub fn t_norms(b: &BasisSystem, cert: &GrunblumCertificate, cfg: &OracleConfig) -> (f64, f64) {
    let n = b.count();
    let units: Vec<VectorR> = (0..n)
        .map(|k| {
            let mut e = VectorR::zeros(n);
            e[k] = 1.0;
            e
        })
        .collect();
    let forward = maximize_ratio(
        n,
        |a| {
            let ps = partial_sum_norms(b, a);
            let eta = ps.iter().copied().fold(0.0, f64::max);
            (eta > 0.0).then(|| ps[n - 1] / eta)
        },
        cfg,
        &units,
    );
    let starts: Vec<VectorR> = cert.projections.iter().filter_map(|p| p.witness.clone()).collect();
    let inverse = maximize_ratio(
        n,
        |a| {
            let ps = partial_sum_norms(b, a);
            let full = ps[n - 1];
            (full > 0.0).then(|| ps.iter().copied().fold(0.0, f64::max) / full)
        },
        cfg,
        &starts,
    );
    (forward.value, inverse.value)
}

pub fn eta_analysis(b: &BasisSystem, a: &CoefficientVector, cfg: &OracleConfig) -> Result<EtaAnalysis> {
    if a.0.len() != b.count() {
        return Err(BasisError::CountMismatch {
            expected: b.count(),
            found: a.0.len(),
        });
    }
    check_finite(a.as_slice())?;
    let partial_sums = partial_sum_norms(b, a.as_slice());
    let cert = grunblum_certificate(b, cfg);
    let (t_norm, t_inv_norm) = t_norms(b, &cert, cfg);
    Ok(EtaAnalysis {
        eta_value: partial_sums.iter().copied().fold(0.0, f64::max),
        partial_sums,
        t_norm,
        t_inv_norm,
        basis_constant: cert.basis_constant,
    })
}

/// One row of the `‖x_k‖·‖x_k*‖ ≤ 2‖T⁻¹‖` check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalBound {
    pub product: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn functional_bounds(b: &BasisSystem, f: &CoefficientFunctionals, t_inv_norm: f64, tol: f64) -> Vec<FunctionalBound> {
    (0..b.count())
        .map(|k| {
            let product = b.norm.eval(b.matrix.column(k).as_slice()) * f.norms[k];
            let bound = 2.0 * t_inv_norm;
            FunctionalBound {
                product,
                bound,
                holds: product <= bound + tol,
            }
        })
        .collect()
}

/// Unconditional constant with the maximizing sign pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct UnconditionalConstant {
    pub value: NormValue,
    pub pattern: SignPattern,
    pub patterns_evaluated: usize,
    pub exhaustive: bool,
}

/// `sup_ε sup_a ‖Σ εᵢaᵢxᵢ‖ / ‖Σ aᵢxᵢ‖`.
///
/// All `2^N` patterns are enumerated when `N ≤ exact_limit`. Beyond that,
/// `cfg.sample.count` seeded patterns are drawn and the uncertainty is the
/// gap to the upper bound `Σ ‖xᵢ‖·‖xᵢ*‖`.
pub fn unconditional_constant(b: &BasisSystem, exact_limit: usize, cfg: &OracleConfig) -> Result<UnconditionalConstant> {
    let n = b.count();
    if n <= exact_limit.min(crate::oracle::ENUMERATION_LIMIT) {
        let best = sign_pattern_enumerate(b, PatternNorm::Dispatch(*cfg))?;
        return Ok(UnconditionalConstant {
            value: best.value,
            pattern: best.pattern,
            patterns_evaluated: 1 << n,
            exhaustive: true,
        });
    }
    let seed = cfg.sample.seed;
    let patterns: Vec<SignPattern> = (0..cfg.sample.count as u64)
        .map(|i| {
            if i == 0 {
                vec![1.0; n]
            } else {
                let mut rng = indexed_rng(seed ^ 0x5167_6e5f, i);
                (0..n).map(|_| if rng.random::<bool>() { -1.0 } else { 1.0 }).collect()
            }
        })
        .collect();
    let values: Vec<NormValue> = patterns
        .par_iter()
        .map(|p| crate::oracle::pattern_norm(b, p, PatternNorm::Dispatch(*cfg)))
        .collect::<Result<_>>()?;
    let (idx, best) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v.value > acc.1 { (i, v.value) } else { acc });
    let funcs = coefficient_functionals(b, cfg);
    let upper: f64 = (0..n)
        .map(|k| b.norm.eval(b.matrix.column(k).as_slice()) * funcs.norms[k])
        .sum();
    let per_pattern = values.iter().map(|v| v.uncertainty).fold(0.0, f64::max);
    let mut value = values[idx].clone();
    value.method = Method::OracleEstimate;
    value.uncertainty = (upper - best).max(per_pattern).max(0.0);
    let pattern = patterns[idx].clone();
    Ok(UnconditionalConstant {
        value,
        pattern,
        patterns_evaluated: patterns.len(),
        exhaustive: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    fn v(xs: &[f64]) -> VectorR {
        VectorR::from_column_slice(xs)
    }

    fn unit(d: usize, i: usize) -> VectorR {
        VectorR::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 })
    }

    fn canonical(d: usize, norm: NormSpec) -> BasisSystem {
        make_basis((0..d).map(|i| unit(d, i)).collect(), norm, None).unwrap()
    }

    fn skew() -> BasisSystem {
        make_basis(vec![v(&[1.0, 0.0]), v(&[1.0, 1.0])], NormSpec::euclidean(), None).unwrap()
    }

    fn summing() -> BasisSystem {
        make_basis(vec![v(&[1.0, 0.0]), v(&[1.0, 1.0])], NormSpec::Sup, None).unwrap()
    }

    fn cfg() -> OracleConfig {
        OracleConfig::default()
    }

    #[test]
    fn make_basis_examples() {
        assert_eq!(canonical(3, NormSpec::euclidean()).count(), 3);
        let dep = make_basis(vec![unit(2, 0), unit(2, 0)], NormSpec::euclidean(), None);
        assert!(matches!(dep, Err(BasisError::Dependent { .. })));
        let null = make_basis(vec![unit(2, 0), v(&[0.0, 0.0])], NormSpec::euclidean(), None);
        assert_eq!(null, Err(BasisError::NullVector { index: 2 }));
        let mixed = make_basis(vec![unit(2, 0), unit(3, 1)], NormSpec::euclidean(), None);
        assert!(matches!(mixed, Err(BasisError::DimensionMismatch { .. })));
    }

    #[test]
    fn independence_threshold_is_relative() {
        let tiny = 1e-6;
        let a = make_basis(vec![v(&[tiny, 0.0]), v(&[0.0, tiny])], NormSpec::euclidean(), None);
        assert!(a.is_ok());
        let b = make_basis(vec![v(&[1.0, 0.0]), v(&[1.0, 1e-12])], NormSpec::euclidean(), None);
        match b {
            Err(BasisError::Dependent { ratio, .. }) => assert!(ratio < 1e-10),
            other => panic!("expected dependence, got {other:?}"),
        }
    }

    #[test]
    fn coefficient_examples() {
        let b = skew();
        let a = coefficients(&b, &v(&[3.0, 2.0])).unwrap();
        assert_abs_diff_eq!(a.0[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.0[1], 2.0, epsilon = 1e-12);

        let b3 = make_basis(vec![v(&[1.0, 2.0, 0.0]), v(&[0.0, 1.0, 1.0]), v(&[1.0, 0.0, 1.0])], NormSpec::Sup, None).unwrap();
        let a = coefficients(&b3, &b3.vector(3)).unwrap();
        assert_abs_diff_eq!(a.0[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.0[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.0[2], 1.0, epsilon = 1e-12);

        let plane = make_basis(vec![unit(3, 0), unit(3, 1)], NormSpec::euclidean(), None).unwrap();
        assert!(matches!(coefficients(&plane, &unit(3, 2)), Err(BasisError::OutsideSpan { .. })));
    }

    #[test]
    fn functional_examples() {
        let f = coefficient_functionals(&canonical(4, NormSpec::euclidean()), &cfg());
        for n in &f.norms {
            assert_abs_diff_eq!(*n, 1.0, epsilon = 1e-12);
        }

        let f = coefficient_functionals(&skew(), &cfg());
        assert_abs_diff_eq!(f.duals[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.duals[0][1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.norms[0], SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(f.norms[1], 1.0, epsilon = 1e-12);

        let f = coefficient_functionals(&summing(), &cfg());
        assert_eq!(f.method, Method::ExactMatrixNorm);
        assert_eq!(f.duals[0].as_slice(), &[1.0, -1.0]);
        assert_eq!(f.duals[1].as_slice(), &[0.0, 1.0]);
        assert_eq!(f.norms, vec![2.0, 1.0]);
    }

    #[test]
    fn functionals_are_biorthogonal_on_subspaces() {
        let vs = vec![v(&[1.0, 0.5, 0.0, 0.2]), v(&[0.0, 1.0, 1.0, 0.0]), v(&[0.3, 0.0, 1.0, 1.0])];
        for norm in [NormSpec::euclidean(), NormSpec::Sup, NormSpec::lp(1.0).unwrap(), NormSpec::lp(3.0).unwrap()] {
            let b = make_basis(vs.clone(), norm.clone(), None).unwrap();
            let f = coefficient_functionals(&b, &cfg());
            for k in 0..3 {
                for j in 0..3 {
                    let ip = f.duals[k].dot(&b.vector(j + 1));
                    assert_abs_diff_eq!(ip, if j == k { 1.0 } else { 0.0 }, epsilon = 1e-9);
                }
                assert_abs_diff_eq!(f.norms[k], b.norm().eval_dual(f.duals[k].as_slice()), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn minimal_extension_beats_pseudoinverse() {
        // The span functional |a₁| / ‖(a₁, a₁ + a₂, a₂)‖_∞ has norm 1, while the
        // pseudoinverse row (2/3, 1/3, -1/3) has ℓ1 norm 4/3.
        let b = make_basis(vec![v(&[1.0, 1.0, 0.0]), v(&[0.0, 1.0, 1.0])], NormSpec::Sup, None).unwrap();
        let f = coefficient_functionals(&b, &cfg());
        assert_eq!(f.method, Method::MinimizedExtension);
        assert!(f.norms[0] <= 1.0 + 1e-9, "{}", f.norms[0]);
        assert!(f.norms[0] >= 1.0 - 1e-9);
        assert!(f.uncertainties[0] < 1e-6);
    }

    #[test]
    fn projection_examples() {
        let p = projection_norm(&canonical(4, NormSpec::euclidean()), 2, &cfg()).unwrap();
        assert_abs_diff_eq!(p.value, 1.0, epsilon = 1e-12);
        assert_eq!(p.method, Method::ExactSpectral);

        let p = projection_norm(&skew(), 1, &cfg()).unwrap();
        assert_abs_diff_eq!(p.value, SQRT_2, epsilon = 1e-12);

        let p = projection_norm(&summing(), 1, &cfg()).unwrap();
        assert_eq!(p.method, Method::ExactMatrixNorm);
        assert_eq!(p.value, 2.0);

        assert!(matches!(projection_norm(&skew(), 3, &cfg()), Err(BasisError::IndexOutOfRange { .. })));
        assert!(projection_norm(&skew(), 0, &cfg()).is_err());
    }

    #[test]
    fn exact_witnesses_attain_the_value() {
        for b in [skew(), summing()] {
            let p = projection_norm(&b, 1, &cfg()).unwrap();
            let w = p.witness.unwrap();
            let num = b.combination_norm(&[w[0], 0.0]);
            let den = b.combination_norm(w.as_slice());
            assert_abs_diff_eq!(num / den, p.value, epsilon = 1e-12);
        }
    }

    #[test]
    fn weighted_euclidean_is_spectral() {
        let norm = NormSpec::weighted(2.0, vec![1.0, 3.0]).unwrap();
        let b = make_basis(vec![v(&[1.0, 0.0]), v(&[1.0, 1.0])], norm, None).unwrap();
        let p = projection_norm(&b, 1, &cfg()).unwrap();
        assert_eq!(p.method, Method::ExactSpectral);
        // min over t of ‖(1+t, 3t)‖ is 3/√10, so ‖P₁‖ = √10/3.
        assert_abs_diff_eq!(p.value, 10f64.sqrt() / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn grunblum_examples() {
        let c = grunblum_certificate(&canonical(4, NormSpec::euclidean()), &cfg());
        assert_abs_diff_eq!(c.basis_constant, 1.0, epsilon = 1e-12);
        assert_eq!(c.basis_constant, c.grunblum_constant);

        let c = grunblum_certificate(&skew(), &cfg());
        assert_abs_diff_eq!(c.basis_constant, SQRT_2, epsilon = 1e-12);
        assert_eq!(c.argmax, 1);

        let c = grunblum_certificate(&summing(), &cfg());
        assert_eq!(c.basis_constant, 2.0);
        assert_eq!(c.grunblum_constant, 2.0);
        assert_eq!(c.uncertainty, 0.0);
    }

    #[test]
    fn oracle_path_for_subspace_sup() {
        let b = make_basis(vec![v(&[1.0, 0.0, 0.0]), v(&[1.0, 1.0, 0.0])], NormSpec::Sup, None).unwrap();
        let c = grunblum_certificate(&b, &cfg());
        assert_eq!(c.method, Method::OracleEstimate);
        // Same geometry as the summing pair: the third coordinate is idle.
        assert!((c.basis_constant - 2.0).abs() < 1e-6, "{}", c.basis_constant);
        assert!(c.basis_constant <= 2.0 + 1e-12);
    }

    #[test]
    fn eta_examples() {
        let e = eta_analysis(&canonical(2, NormSpec::euclidean()), &CoefficientVector(v(&[3.0, 4.0])), &cfg()).unwrap();
        assert_eq!(e.partial_sums, vec![3.0, 5.0]);
        assert_eq!(e.eta_value, 5.0);
        assert_eq!(e.t_norm, 1.0);
        assert_abs_diff_eq!(e.t_inv_norm, 1.0, epsilon = 1e-12);

        let l1 = canonical(2, NormSpec::lp(1.0).unwrap());
        let e = eta_analysis(&l1, &CoefficientVector(v(&[1.0, -1.0])), &cfg()).unwrap();
        assert_eq!(e.partial_sums, vec![1.0, 2.0]);
        assert_eq!(e.eta_value, 2.0);

        let e = eta_analysis(&skew(), &CoefficientVector(v(&[1.0, -1.0])), &cfg()).unwrap();
        assert_eq!(e.partial_sums, vec![1.0, 1.0]);
        assert_eq!(e.eta_value, 1.0);
        assert_abs_diff_eq!(e.t_inv_norm, SQRT_2, epsilon = 1e-9);

        let zero = eta_analysis(&skew(), &CoefficientVector(v(&[0.0, 0.0])), &cfg()).unwrap();
        assert_eq!(zero.eta_value, 0.0);
        assert!(eta_analysis(&skew(), &CoefficientVector(v(&[1.0])), &cfg()).is_err());
    }

    #[test]
    fn unconditional_examples() {
        let u = unconditional_constant(&canonical(3, NormSpec::euclidean()), DEFAULT_EXACT_LIMIT, &cfg()).unwrap();
        assert_abs_diff_eq!(u.value.value, 1.0, epsilon = 1e-12);
        let u = unconditional_constant(&canonical(3, NormSpec::lp(1.0).unwrap()), DEFAULT_EXACT_LIMIT, &cfg()).unwrap();
        assert_abs_diff_eq!(u.value.value, 1.0, epsilon = 1e-12);
        let u = unconditional_constant(&summing(), DEFAULT_EXACT_LIMIT, &cfg()).unwrap();
        assert_eq!(u.value.value, 3.0);
        assert!(u.exhaustive);
        assert_eq!(u.pattern, vec![1.0, -1.0]);
        // a = (2, −1): unflipped sum (1, −1) has sup norm 1, flipped (3, 1) has 3.
        assert_eq!(summing().combination_norm(&[2.0, -1.0]), 1.0);
        assert_eq!(summing().combination_norm(&[2.0, 1.0]), 3.0);
    }

    #[test]
    fn sampled_unconditional_reports_gap() {
        let b = make_basis(
            vec![v(&[1.0, 0.0, 0.0]), v(&[1.0, 1.0, 0.0]), v(&[1.0, 1.0, 1.0])],
            NormSpec::Sup,
            None,
        )
        .unwrap();
        let exact = unconditional_constant(&b, 16, &cfg()).unwrap();
        let sampled = unconditional_constant(&b, 2, &OracleConfig::new(1, 64, 50).unwrap()).unwrap();
        assert!(!sampled.exhaustive);
        assert_eq!(sampled.value.method, Method::OracleEstimate);
        assert!(sampled.value.value <= exact.value.value + 1e-12);
        assert!(sampled.value.value + sampled.value.uncertainty >= exact.value.value - 1e-12);
    }
}
