//! Deterministic families of basis systems and candidate sequences.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;

use crate::basis::{make_basis, BasisSystem};
use crate::error::{BasisError, Result};
use crate::normed::{gaussian_direction, indexed_rng, NormSpec, VectorR};
use crate::selection::CandidateSequence;

/// Re-draws allowed before a family is declared degenerate.
pub const MAX_REDRAWS: u64 = 64;
/// Smallest singular value ratio accepted for random systems.
pub const RANDOM_CONDITIONING: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Canonical,
    Summing,
    Perturbed,
    Random,
    MovingSupport,
}

impl FromStr for Family {
    type Err = BasisError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "canonical" => Family::Canonical,
            "summing" => Family::Summing,
            "perturbed" => Family::Perturbed,
            "random" => Family::Random,
            "moving-support" => Family::MovingSupport,
            other => return Err(BasisError::InvalidParameter(format!("unknown family `{other}`"))),
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Canonical => "canonical",
            Family::Summing => "summing",
            Family::Perturbed => "perturbed",
            Family::Random => "random",
            Family::MovingSupport => "moving-support",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub family: Family,
    pub dim: usize,
    pub count: usize,
    pub norm: NormSpec,
    /// Perturbation size, or the `e₁` offset of moving-support candidates.
    pub magnitude: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Basis(BasisSystem),
    Candidates(CandidateSequence),
}

impl Generated {
    pub fn vectors(&self) -> Vec<VectorR> {
        match self {
            Generated::Basis(b) => b.vectors(),
            Generated::Candidates(c) => c.vectors.clone(),
        }
    }

    pub fn into_basis(self) -> Option<BasisSystem> {
        match self {
            Generated::Basis(b) => Some(b),
            Generated::Candidates(_) => None,
        }
    }

    pub fn into_candidates(self) -> Option<CandidateSequence> {
        match self {
            Generated::Candidates(c) => Some(c),
            Generated::Basis(_) => None,
        }
    }
}

fn unit(d: usize, i: usize) -> VectorR {
    VectorR::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 })
}

pub fn canonical(dim: usize, count: usize, norm: NormSpec) -> Result<BasisSystem> {
    make_basis((0..count).map(|i| unit(dim, i)).collect(), norm, None)
}

/// `s_k = e₁ + … + e_k`.
pub fn summing(dim: usize, count: usize, norm: NormSpec) -> Result<BasisSystem> {
    make_basis(
        (1..=count).map(|k| VectorR::from_fn(dim, |r, _| if r < k { 1.0 } else { 0.0 })).collect(),
        norm,
        None,
    )
}

/// `yᵢ = xᵢ + magnitude·vᵢ` with seeded unit directions `vᵢ`, redrawn
/// until the result is independent.
pub fn perturb_system(base: &BasisSystem, magnitude: f64, seed: u64) -> Result<BasisSystem> {
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(BasisError::InvalidParameter(format!("magnitude must be nonnegative, got {magnitude:?}")));
    }
    let (d, n) = (base.dim(), base.count());
    let mut last = None;
    for attempt in 0..MAX_REDRAWS {
        let ys = (0..n)
            .map(|i| {
                let v = gaussian_direction(d, seed, (attempt << 32) | i as u64);
                let v = &v / base.norm().eval(v.as_slice());
                base.vector(i + 1) + v * magnitude
            })
            .collect();
        match make_basis(ys, base.norm().clone(), Some(base.threshold())) {
            Ok(b) => return Ok(b),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Seeded Gaussian systems with singular value ratio at least
/// [`RANDOM_CONDITIONING`].
pub fn random_system(dim: usize, count: usize, norm: NormSpec, seed: u64) -> Result<BasisSystem> {
    for attempt in 0..MAX_REDRAWS {
        let vs: Vec<VectorR> = (0..count)
            .map(|i| gaussian_direction(dim, seed, (attempt << 32) | i as u64))
            .collect();
        if let Ok(b) = make_basis(vs, norm.clone(), Some(RANDOM_CONDITIONING)) {
            return make_basis(b.vectors(), norm, None);
        }
    }
    Err(BasisError::Numerical(format!(
        "no {count}-vector system in dimension {dim} met the conditioning threshold after {MAX_REDRAWS} draws"
    )))
}

/// `yₙ = e_{σ(n)} + offset·e₁` with a seeded strictly increasing `σ ≥ 2`.
pub fn moving_support(dim: usize, count: usize, norm: &NormSpec, offset: f64, seed: u64) -> Result<CandidateSequence> {
    if count + 1 > dim {
        return Err(BasisError::InvalidParameter(format!(
            "moving support needs count < dim, got count {count} and dim {dim}"
        )));
    }
    let mut rng = indexed_rng(seed, 0);
    let mut sigma: Vec<usize> = sample(&mut rng, dim - 1, count).into_iter().map(|i| i + 1).collect();
    sigma.sort_unstable();
    let ys: Vec<VectorR> = sigma.iter().map(|&s| unit(dim, s) + unit(dim, 0) * offset).collect();
    let delta = ys.iter().map(|y| norm.eval(y.as_slice())).fold(f64::INFINITY, f64::min);
    CandidateSequence::new(ys, delta)
}

pub fn generate(spec: &FamilySpec) -> Result<Generated> {
    if spec.count == 0 {
        return Err(BasisError::InvalidParameter("count must be positive".into()));
    }
    if spec.count > spec.dim {
        return Err(BasisError::InvalidParameter(format!(
            "count {} exceeds dim {}",
            spec.count, spec.dim
        )));
    }
    if !(spec.magnitude >= 0.0 && spec.magnitude.is_finite()) {
        return Err(BasisError::InvalidParameter(format!(
            "magnitude must be nonnegative, got {:?}",
            spec.magnitude
        )));
    }
    spec.norm.check_dim(spec.dim)?;
    let norm = spec.norm.clone();
    Ok(match spec.family {
        Family::Canonical => Generated::Basis(canonical(spec.dim, spec.count, norm)?),
        Family::Summing => Generated::Basis(summing(spec.dim, spec.count, norm)?),
        Family::Perturbed => {
            let base = canonical(spec.dim, spec.count, norm)?;
            Generated::Basis(perturb_system(&base, spec.magnitude, spec.seed)?)
        }
        Family::Random => Generated::Basis(random_system(spec.dim, spec.count, norm, spec.seed)?),
        Family::MovingSupport => Generated::Candidates(moving_support(
            spec.dim,
            spec.count,
            &norm,
            spec.magnitude,
            spec.seed,
        )?),
    })
}
