//! Brute-force estimators: sampled ratio maximization with derivative-free
//! local ascent, exhaustive angular grids in low dimension, and sign-pattern
//! enumeration.
//!
//! Every estimate is a lower bound backed by a concrete witness.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::{BasisSystem, NormValue};
use crate::error::{BasisError, Result};
use crate::normed::{gaussian_direction, NormSpec, SampleConfig, VectorR};

/// Largest `N` accepted by [`sign_pattern_enumerate`].
pub const ENUMERATION_LIMIT: usize = 20;

const ASCENT_STOP: f64 = 1e-10;
// Offset separating the ascent's random directions from the sample stream.
const ASCENT_STREAM: u64 = 1 << 40;

/// Best ratio found by an oracle, with the witness achieving it.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    pub is_lower_bound: bool,
    pub samples_used: usize,
    pub ascent_steps: usize,
    pub last_improvement: f64,
    /// Domain coordinates of the maximizer, unit Euclidean length.
    pub witness: VectorR,
}

/// Sampling budget for the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub sample: SampleConfig,
    pub ascent_steps: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            sample: SampleConfig { seed: 0, count: 2048 },
            ascent_steps: 400,
        }
    }
}

impl OracleConfig {
    pub fn new(seed: u64, count: usize, ascent_steps: usize) -> Result<Self> {
        Ok(OracleConfig {
            sample: SampleConfig::new(seed, count)?,
            ascent_steps,
        })
    }
}

/// Maximizes a homogeneous ratio `f` over nonzero vectors of `R^dim`.
///
/// `f` returns `None` where the ratio is undefined (zero denominator). The
/// extra `starts` are ascended alongside the record-setting samples.
pub fn maximize_ratio<F>(dim: usize, f: F, cfg: &OracleConfig, starts: &[VectorR]) -> OracleEstimate
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let seed = cfg.sample.seed;
    let sampled: Vec<(VectorR, f64)> = (0..cfg.sample.count as u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut v = gaussian_direction(dim, seed, i);
            v /= v.norm();
            f(v.as_slice()).map(|r| (v, r))
        })
        .collect();

    // Ascend from every prefix record. A larger sample only appends records,
    // so the estimate is monotone in the sample count.
    let mut candidates: Vec<VectorR> = Vec::with_capacity(starts.len() + 16);
    let mut record = f64::NEG_INFINITY;
    for (v, r) in &sampled {
        if *r > record {
            record = *r;
            candidates.push(v.clone());
        }
    }
    for s in starts {
        let n = s.norm();
        if n > 0.0 {
            candidates.push(s / n);
        }
    }

    let mut best: Option<OracleEstimate> = None;
    for start in candidates {
        let est = ascend(&f, start, cfg.ascent_steps, seed);
        let Some(est) = est else { continue };
        best = match best {
            Some(b) if b.value >= est.value => Some(b),
            _ => Some(est),
        };
    }
    let mut out = best.unwrap_or_else(|| OracleEstimate {
        value: 0.0,
        is_lower_bound: true,
        samples_used: 0,
        ascent_steps: 0,
        last_improvement: 0.0,
        witness: VectorR::zeros(dim),
    });
    out.samples_used = sampled.len();
    out
}

/// Coordinate and random-direction pattern search with step halving.
fn ascend<F>(f: &F, start: VectorR, max_steps: usize, seed: u64) -> Option<OracleEstimate>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let dim = start.len();
    let mut x = start;
    let mut fx = f(x.as_slice())?;
    let mut step = 0.5;
    let mut last_improvement = 0.0;
    let mut steps = 0;
    while steps < max_steps && step > ASCENT_STOP {
        steps += 1;
        let mut improved = false;
        let mut dirs: Vec<VectorR> = (0..dim)
            .map(|j| {
                let mut e = VectorR::zeros(dim);
                e[j] = 1.0;
                e
            })
            .collect();
        let mut r = gaussian_direction(dim, seed, ASCENT_STREAM + steps as u64);
        r /= r.norm();
        dirs.push(r);
        for d in &dirs {
            for sign in [1.0, -1.0] {
                let y = &x + d * (sign * step);
                if let Some(fy) = f(y.as_slice()) {
                    if fy > fx {
                        last_improvement = fy - fx;
                        x = y;
                        fx = fy;
                        improved = true;
                        break;
                    }
                }
            }
        }
        let n = x.norm();
        x /= n;
        fx = f(x.as_slice())?;
        if !improved {
            step *= 0.5;
        }
    }
    Some(OracleEstimate {
        value: fx,
        is_lower_bound: true,
        samples_used: 0,
        ascent_steps: steps,
        last_improvement,
        witness: x,
    })
}

/// Lower bound on the norm of `apply` restricted to the span of
/// `domain_basis` (the whole space when `None`), under `n` on both sides.
pub fn brute_force_operator_norm(
    apply: &DMatrix<f64>,
    domain_basis: Option<&DMatrix<f64>>,
    n: &NormSpec,
    cfg: SampleConfig,
    ascent_steps: usize,
) -> Result<OracleEstimate> {
    if apply.nrows() != apply.ncols() {
        return Err(BasisError::DimensionMismatch {
            expected: apply.nrows(),
            found: apply.ncols(),
        });
    }
    n.check_dim(apply.nrows())?;
    let identity;
    let basis = match domain_basis {
        Some(b) => b,
        None => {
            identity = DMatrix::identity(apply.nrows(), apply.nrows());
            &identity
        }
    };
    if basis.nrows() != apply.ncols() {
        return Err(BasisError::DimensionMismatch {
            expected: apply.ncols(),
            found: basis.nrows(),
        });
    }
    let image = apply * basis;
    let cfg = OracleConfig { sample: cfg, ascent_steps };
    Ok(maximize_ratio(basis.ncols(), |c| matrix_ratio(&image, basis, n, c), &cfg, &[]))
}

/// `‖num·c‖ / ‖den·c‖`, undefined when the denominator vanishes.
pub(crate) fn matrix_ratio(num: &DMatrix<f64>, den: &DMatrix<f64>, n: &NormSpec, c: &[f64]) -> Option<f64> {
    let c = DVector::from_column_slice(c);
    let d = n.eval((den * &c).as_slice());
    if d > 0.0 && d.is_finite() {
        Some(n.eval((num * &c).as_slice()) / d)
    } else {
        None
    }
}

/// Exhaustive angular grid search of `num(c)/den(c)` over directions in
/// `R^dim`, `dim ≤ 3`, followed by nested zoomed grids around the best cell.
///
/// Both functions must be even and positively homogeneous of the same degree,
/// so a half-sphere of directions suffices.
pub fn grid_ratio_max<N, D>(num: N, den: D, dim: usize, resolution: usize) -> Result<OracleEstimate>
where
    N: Fn(&[f64]) -> f64,
    D: Fn(&[f64]) -> f64,
{
    if dim == 0 || dim > 3 {
        return Err(BasisError::InvalidParameter(format!(
            "grid search supports dimensions 1..=3, got {dim}"
        )));
    }
    if resolution < 2 {
        return Err(BasisError::InvalidParameter("grid resolution must be at least 2".into()));
    }
    let ratio = |c: &[f64]| {
        let d = den(c);
        if d > 0.0 {
            Some(num(c) / d)
        } else {
            None
        }
    };
    let mut evaluated = 0usize;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut consider = |c: Vec<f64>, best: &mut Option<(Vec<f64>, f64)>| {
        evaluated += 1;
        if let Some(r) = ratio(&c) {
            if best.as_ref().is_none_or(|b| r > b.1) {
                *best = Some((c, r));
            }
        }
    };
    const LEVELS: usize = 4;
    match dim {
        1 => consider(vec![1.0], &mut best),
        2 => {
            let (mut lo, mut hi) = (0.0, PI);
            let mut centre = 0.0;
            for _ in 0..LEVELS {
                let h = (hi - lo) / resolution as f64;
                let mut level_best: Option<(Vec<f64>, f64)> = None;
                for j in 0..=resolution {
                    let t = lo + h * j as f64;
                    consider(vec![t.cos(), t.sin()], &mut level_best);
                }
                if let Some((c, r)) = level_best {
                    centre = c[1].atan2(c[0]);
                    if best.as_ref().is_none_or(|b| r > b.1) {
                        best = Some((c, r));
                    }
                }
                lo = centre - h;
                hi = centre + h;
            }
        }
        _ => {
            let sphere = |t: f64, p: f64| vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
            let (mut t_lo, mut t_hi, mut p_lo, mut p_hi) = (0.0, PI, 0.0, PI);
            for _ in 0..LEVELS {
                let ht = (t_hi - t_lo) / resolution as f64;
                let hp = (p_hi - p_lo) / resolution as f64;
                let mut level_best: Option<((f64, f64), f64)> = None;
                for i in 0..=resolution {
                    for j in 0..=resolution {
                        let (t, p) = (t_lo + ht * i as f64, p_lo + hp * j as f64);
                        evaluated += 1;
                        if let Some(r) = ratio(&sphere(t, p)) {
                            if level_best.is_none_or(|b| r > b.1) {
                                level_best = Some(((t, p), r));
                            }
                        }
                    }
                }
                if let Some(((t, p), r)) = level_best {
                    if best.as_ref().is_none_or(|b| r > b.1) {
                        best = Some((sphere(t, p), r));
                    }
                    t_lo = t - ht;
                    t_hi = t + ht;
                    p_lo = p - hp;
                    p_hi = p + hp;
                }
            }
        }
    }
    let (c, value) = best.ok_or_else(|| BasisError::Numerical("grid found no admissible direction".into()))?;
    Ok(OracleEstimate {
        value,
        is_lower_bound: true,
        samples_used: evaluated,
        ascent_steps: 0,
        last_improvement: 0.0,
        witness: VectorR::from_vec(c),
    })
}

/// How each sign pattern's operator norm is evaluated during enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatternNorm {
    /// The basis-core dispatch (exact where a closed form exists).
    Dispatch(OracleConfig),
    /// Sampling and ascent only.
    Sampled(OracleConfig),
    /// Angular grid; requires `N ≤ 3`.
    Grid(usize),
}

/// Sign pattern as `±1` entries.
pub type SignPattern = Vec<f64>;

/// Pattern number `index` in lexicographic order with `+` before `-`.
pub fn sign_pattern(count: usize, index: u64) -> SignPattern {
    (0..count)
        .map(|i| if (index >> (count - 1 - i)) & 1 == 1 { -1.0 } else { 1.0 })
        .collect()
}

/// Norm of `a ↦ Σ εᵢaᵢxᵢ` on the span, measured against `Σ aᵢxᵢ`.
pub fn pattern_norm(b: &BasisSystem, signs: &[f64], how: PatternNorm) -> Result<NormValue> {
    let c = DMatrix::from_diagonal(&DVector::from_column_slice(signs));
    match how {
        PatternNorm::Dispatch(cfg) => Ok(b.coefficient_operator_norm(&c, &cfg)),
        PatternNorm::Sampled(cfg) => {
            let num = b.matrix() * &c;
            let est = maximize_ratio(b.count(), |a| matrix_ratio(&num, b.matrix(), b.norm(), a), &cfg, &[]);
            Ok(NormValue::from_oracle(est))
        }
        PatternNorm::Grid(resolution) => {
            let num = b.matrix() * &c;
            let n = b.norm();
            let est = grid_ratio_max(
                |a| n.eval((&num * DVector::from_column_slice(a)).as_slice()),
                |a| n.eval((b.matrix() * DVector::from_column_slice(a)).as_slice()),
                b.count(),
                resolution,
            )?;
            Ok(NormValue::from_oracle(est))
        }
    }
}

/// Result of exhaustive sign-pattern enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMax {
    pub value: NormValue,
    pub pattern: SignPattern,
}

/// Maximum over all `2^N` sign patterns; ties go to the lexicographically
/// smallest pattern.
pub fn sign_pattern_enumerate(b: &BasisSystem, how: PatternNorm) -> Result<PatternMax> {
    let n = b.count();
    if n > ENUMERATION_LIMIT {
        return Err(BasisError::EnumerationLimit {
            count: n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let values: Vec<Result<NormValue>> = (0..1u64 << n)
        .into_par_iter()
        .map(|k| pattern_norm(b, &sign_pattern(n, k), how))
        .collect();
    let mut best: Option<(u64, NormValue)> = None;
    let mut uncertainty: f64 = 0.0;
    for (k, v) in values.into_iter().enumerate() {
        let v = v?;
        uncertainty = uncertainty.max(v.uncertainty);
        let better = match &best {
            None => true,
            Some((_, b)) => v.value > b.value + 1e-12 * b.value.max(1.0),
        };
        if better {
            best = Some((k as u64, v));
        }
    }
    let (k, mut value) = best.expect("at least one pattern");
    value.uncertainty = uncertainty;
    Ok(PatternMax {
        value,
        pattern: sign_pattern(n, k),
    })
}
