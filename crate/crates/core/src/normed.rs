//! Norms on real coordinate space, their duals, and deterministic sampling
//! of norm unit spheres.

use std::fmt;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{BasisError, Result};

/// Real vector of the ambient space.
pub type VectorR = DVector<f64>;

/// A norm from the supported catalogue.
///
/// The weighted family is `‖v‖ = ‖(w₁v₁, …, w_d v_d)‖_p`, so its dual is
/// `‖(f₁/w₁, …, f_d/w_d)‖_q` with `q` the conjugate exponent.
#[derive(Debug, Clone, PartialEq)]
pub enum NormSpec {
    Lp { p: f64 },
    Sup,
    WeightedLp { p: f64, weights: Vec<f64> },
}

/// Which closed-form operator-norm formula applies, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Euclidean,
    One,
    Max,
    Other,
}

impl NormSpec {
    pub fn lp(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(NormSpec::Lp { p })
    }

    pub fn euclidean() -> Self {
        NormSpec::Lp { p: 2.0 }
    }

    pub fn weighted(p: f64, weights: Vec<f64>) -> Result<Self> {
        check_exponent(p)?;
        if weights.is_empty() {
            return Err(BasisError::InvalidNorm("weighted norm needs at least one weight".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(BasisError::InvalidNorm(format!(
                "weights must be positive and finite, found {w:?}"
            )));
        }
        Ok(NormSpec::WeightedLp { p, weights })
    }

    /// Exponent of the underlying `ℓp` norm (`∞` for sup).
    pub fn exponent(&self) -> f64 {
        match self {
            NormSpec::Lp { p } | NormSpec::WeightedLp { p, .. } => *p,
            NormSpec::Sup => f64::INFINITY,
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            NormSpec::WeightedLp { weights, .. } => Some(weights),
            _ => None,
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights().map_or(1.0, |w| w[i])
    }

    pub fn shape(&self) -> Shape {
        let p = self.exponent();
        if p == 2.0 {
            Shape::Euclidean
        } else if p == 1.0 {
            Shape::One
        } else if p == f64::INFINITY {
            Shape::Max
        } else {
            Shape::Other
        }
    }

    /// Checks the norm can act on vectors of dimension `dim`.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(BasisError::Empty("dimension must be positive"));
        }
        match self.weights() {
            Some(w) if w.len() != dim => Err(BasisError::DimensionMismatch {
                expected: w.len(),
                found: dim,
            }),
            _ => Ok(()),
        }
    }

    /// Norm of a slice. Callers guarantee the dimension matches.
    pub fn eval(&self, v: &[f64]) -> f64 {
        lp_of(self.exponent(), v.iter().enumerate().map(|(i, x)| self.weight(i) * x.abs()))
    }

    /// Dual norm of a slice: `sup { ⟨f, v⟩ : ‖v‖ ≤ 1 }`.
    pub fn eval_dual(&self, f: &[f64]) -> f64 {
        let q = conjugate(self.exponent());
        lp_of(q, f.iter().enumerate().map(|(i, x)| x.abs() / self.weight(i)))
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::Lp { p } => write!(f, "lp {}", fmt_exponent(*p)),
            NormSpec::Sup => write!(f, "sup"),
            NormSpec::WeightedLp { p, weights } => {
                write!(f, "wlp {}", fmt_exponent(*p))?;
                for w in weights {
                    write!(f, " {w:?}")?;
                }
                Ok(())
            }
        }
    }
}

fn fmt_exponent(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        format!("{p:?}")
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(BasisError::InvalidNorm(format!("exponent must satisfy p >= 1, found {p:?}")));
    }
    Ok(())
}

/// Conjugate exponent `q` with `1/p + 1/q = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn lp_of(p: f64, abs: impl Iterator<Item = f64>) -> f64 {
    if p == 1.0 {
        abs.sum()
    } else if p == 2.0 {
        abs.map(|a| a * a).sum::<f64>().sqrt()
    } else if p.is_infinite() {
        abs.fold(0.0, f64::max)
    } else {
        abs.map(|a| a.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub(crate) fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(BasisError::NonFinite { index }),
        None => Ok(()),
    }
}

/// `‖v‖` under `n`, with validation.
pub fn norm_eval(v: &VectorR, n: &NormSpec) -> Result<f64> {
    n.check_dim(v.len())?;
    check_finite(v.as_slice())?;
    Ok(n.eval(v.as_slice()))
}

/// Dual norm `‖f‖_*` under `n`, with validation.
pub fn dual_norm_eval(f: &VectorR, n: &NormSpec) -> Result<f64> {
    n.check_dim(f.len())?;
    check_finite(f.as_slice())?;
    Ok(n.eval_dual(f.as_slice()))
}

/// Seed and size of a deterministic sample batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleConfig {
    pub seed: u64,
    pub count: usize,
}

impl SampleConfig {
    pub fn new(seed: u64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(BasisError::InvalidParameter("sample count must be at least 1".into()));
        }
        Ok(SampleConfig { seed, count })
    }
}

/// Generator for sample `index` of the stream identified by `seed`.
///
/// Each index gets its own ChaCha stream, so sample `i` never depends on how
/// many other samples were drawn or in which order.
pub fn indexed_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard Gaussian vector for sample `index`; never the zero vector.
pub fn gaussian_direction(dim: usize, seed: u64, index: u64) -> VectorR {
    let mut rng = indexed_rng(seed, index);
    loop {
        let v = VectorR::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

/// `cfg.count` points on the unit sphere of `n` in dimension `dim`.
///
/// Directions are rotation-invariant Gaussian draws rescaled under `n`.
pub fn sphere_sample(dim: usize, n: &NormSpec, cfg: SampleConfig) -> Result<Vec<VectorR>> {
    n.check_dim(dim)?;
    if cfg.count == 0 {
        return Err(BasisError::InvalidParameter("sample count must be at least 1".into()));
    }
    Ok((0..cfg.count as u64)
        .map(|i| {
            let v = gaussian_direction(dim, cfg.seed, i);
            let s = n.eval(v.as_slice());
            v / s
        })
        .collect())
}
