//! Gliding-hump selection of a block basic subsequence.
//!
//! Given a basis system `(xᵢ)` and candidates `(yₙ)` bounded away from zero
//! whose coordinates `xᵢ*(yₙ)` die out, the selector picks `n₁ < n₂ < …` and
//! successive coordinate windows so that each `y_{n_k}` is close to its
//! window truncation `u_k`. The blocks `(u_k)` form a basic sequence and the
//! selected candidates are certified equivalent to them through the
//! perturbation bound.

use crate::basis::{coefficient_functionals, coefficients, grunblum_certificate, make_basis, BasisSystem, GrunblumCertificate};
use crate::error::{BasisError, Result};
use crate::normed::VectorR;
use crate::oracle::OracleConfig;
use crate::perturbation::{perturbation_lambda, PerturbationCertificate, Status};

/// Candidate vectors `yₙ` with a claimed lower bound on their norms.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSequence {
    pub vectors: Vec<VectorR>,
    pub delta: f64,
}

impl CandidateSequence {
    pub fn new(vectors: Vec<VectorR>, delta: f64) -> Result<Self> {
        if vectors.is_empty() {
            return Err(BasisError::Empty("candidate sequence is empty"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(BasisError::InvalidParameter(format!("delta must be positive, got {delta:?}")));
        }
        Ok(CandidateSequence { vectors, delta })
    }

    /// Uses the smallest candidate norm as `delta`.
    pub fn with_min_norm(vectors: Vec<VectorR>, b: &BasisSystem) -> Result<Self> {
        let delta = vectors
            .iter()
            .map(|v| b.norm().eval(v.as_slice()))
            .fold(f64::INFINITY, f64::min);
        Self::new(vectors, delta)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Tail statistics for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateTail {
    pub coordinate: usize,
    pub tail_start: usize,
    pub tail_len: usize,
    pub tail_max: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullCheckReport {
    pub tol: f64,
    pub coordinates: Vec<CoordinateTail>,
    pub min_norm: f64,
    pub delta: f64,
    pub norms_ok: bool,
}

impl NullCheckReport {
    pub fn passes(&self) -> bool {
        self.norms_ok && self.coordinates.iter().all(|c| c.passes)
    }

    /// First coordinate whose tail exceeds the tolerance.
    pub fn witness(&self) -> Option<&CoordinateTail> {
        self.coordinates.iter().find(|c| !c.passes)
    }
}

fn candidate_coefficients(b: &BasisSystem, c: &CandidateSequence) -> Result<Vec<VectorR>> {
    if c.is_empty() {
        return Err(BasisError::Empty("candidate sequence is empty"));
    }
    c.vectors
        .iter()
        .map(|y| {
            if y.len() != b.dim() {
                return Err(BasisError::DimensionMismatch {
                    expected: b.dim(),
                    found: y.len(),
                });
            }
            coefficients(b, y).map(|a| a.0)
        })
        .collect()
}

/// Finite evidence that `xᵢ*(yₙ) → 0` for each coordinate `i ≤ horizon`.
///
/// Candidates are numbered from 1. Coordinate `i` is inspected on the tail
/// `n ≥ tail_start + i − 1`, a staircase that lets later coordinates be hit
/// later, and passes when `max |xᵢ*(yₙ)| ≤ tol` there (an empty tail passes).
pub fn coordinate_null_check(
    b: &BasisSystem,
    c: &CandidateSequence,
    tol: f64,
    horizon: usize,
    tail_start: usize,
) -> Result<NullCheckReport> {
    if !(tol > 0.0) {
        return Err(BasisError::InvalidParameter(format!("tolerance must be positive, got {tol:?}")));
    }
    if tail_start == 0 {
        return Err(BasisError::InvalidParameter("tail start is 1-based".into()));
    }
    let coeffs = candidate_coefficients(b, c)?;
    let coordinates = (1..=horizon.min(b.count()))
        .map(|i| {
            let start = tail_start + i - 1;
            let tail: Vec<f64> = coeffs.iter().skip(start - 1).map(|a| a[i - 1].abs()).collect();
            let tail_max = tail.iter().copied().fold(0.0, f64::max);
            CoordinateTail {
                coordinate: i,
                tail_start: start,
                tail_len: tail.len(),
                tail_max,
                passes: tail_max <= tol,
            }
        })
        .collect();
    let min_norm = c
        .vectors
        .iter()
        .map(|y| b.norm().eval(y.as_slice()))
        .fold(f64::INFINITY, f64::min);
    Ok(NullCheckReport {
        tol,
        coordinates,
        min_norm,
        delta: c.delta,
        norms_ok: min_norm >= c.delta,
    })
}

/// Blocks `u_k = Σ_{p_{k−1} < i ≤ p_k} bᵢxᵢ` over successive windows.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSequence {
    /// `0 = p₀ < p₁ < … < p_K ≤ N`.
    pub breakpoints: Vec<usize>,
    pub coefficients: Vec<Vec<f64>>,
    pub blocks: Vec<VectorR>,
}

impl BlockSequence {
    pub fn new(b: &BasisSystem, breakpoints: Vec<usize>, coefficients: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.first() != Some(&0) || breakpoints.len() < 2 {
            return Err(BasisError::InvalidParameter("breakpoints must start at 0 and define a block".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BasisError::InvalidParameter("breakpoints must be strictly increasing".into()));
        }
        let last = *breakpoints.last().expect("nonempty");
        if last > b.count() {
            return Err(BasisError::IndexOutOfRange { index: last, max: b.count() });
        }
        if coefficients.len() != breakpoints.len() - 1 {
            return Err(BasisError::CountMismatch {
                expected: breakpoints.len() - 1,
                found: coefficients.len(),
            });
        }
        let mut blocks = Vec::with_capacity(coefficients.len());
        for (k, (w, seg)) in breakpoints.windows(2).zip(&coefficients).enumerate() {
            if seg.len() != w[1] - w[0] {
                return Err(BasisError::CountMismatch {
                    expected: w[1] - w[0],
                    found: seg.len(),
                });
            }
            let u = b.matrix().columns(w[0], seg.len()) * VectorR::from_column_slice(seg);
            if b.norm().eval(u.as_slice()) == 0.0 {
                return Err(BasisError::NullVector { index: k + 1 });
            }
            blocks.push(u);
        }
        Ok(BlockSequence {
            breakpoints,
            coefficients,
            blocks,
        })
    }

    /// `p_{k−1} < p_k` for every block.
    pub fn is_successive(&self) -> bool {
        self.breakpoints.windows(2).all(|w| w[0] < w[1])
    }

    pub fn system(&self, b: &BasisSystem) -> Result<BasisSystem> {
        make_basis(self.blocks.clone(), b.norm().clone(), Some(b.threshold()))
    }
}

/// Treats the blocks as a basis system and certifies them.
///
/// Fails when the block constant exceeds the parent constant (beyond
/// `1e−6` plus the parent's reported uncertainty), which successive blocks
/// rule out.
pub fn block_certify(b: &BasisSystem, blocks: &BlockSequence, cfg: &OracleConfig) -> Result<GrunblumCertificate> {
    let sys = blocks.system(b).map_err(|e| BasisError::Numerical(format!("block system fails validation: {e}")))?;
    let cert = grunblum_certificate(&sys, cfg);
    let parent = grunblum_certificate(b, cfg);
    if cert.basis_constant > parent.basis_constant + 1e-6 + parent.uncertainty {
        return Err(BasisError::Numerical(format!(
            "block constant {:?} exceeds parent constant {:?}",
            cert.basis_constant, parent.basis_constant
        )));
    }
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    pub delta: f64,
    pub eps0: f64,
    pub shrink: f64,
    pub max_retries: usize,
    pub min_blocks: usize,
    /// Tolerance and window of the hypothesis check.
    pub null_tol: f64,
    pub horizon: usize,
    pub tail_start: usize,
}

impl SelectionParams {
    /// `eps0 = delta/4`, `shrink = 1/2`, 8 retries, 3 blocks; the hypothesis
    /// check uses `tol = eps0` over every coordinate from the first candidate.
    pub fn with_delta(delta: f64) -> Self {
        SelectionParams {
            delta,
            eps0: delta / 4.0,
            shrink: 0.5,
            max_retries: 8,
            min_blocks: 3,
            null_tol: delta / 4.0,
            horizon: usize::MAX,
            tail_start: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(BasisError::InvalidParameter(what.to_string()));
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if !(self.eps0 > 0.0) {
            return bad("eps0 must be positive");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if self.min_blocks == 0 {
            return bad("min_blocks must be at least 1");
        }
        Ok(())
    }
}

/// Per-block record of the construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockStep {
    pub candidate: usize,
    pub epsilon: f64,
    pub head: f64,
    pub tail: f64,
    /// `‖y_{n_k} − u_k‖`.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// 1-based candidate indices `n₁ < n₂ < …`.
    pub selected_indices: Vec<usize>,
    pub blocks: BlockSequence,
    pub lambda_sel: f64,
    pub certificate: PerturbationCertificate,
    pub retries_used: usize,
    pub eps0_used: f64,
    pub steps: Vec<BlockStep>,
}

impl SelectionResult {
    pub fn selected_vectors(&self, c: &CandidateSequence) -> Vec<VectorR> {
        self.selected_indices.iter().map(|n| c.vectors[n - 1].clone()).collect()
    }
}

fn window_norm(b: &BasisSystem, a: &VectorR, from: usize, to: usize) -> f64 {
    if from >= to {
        return 0.0;
    }
    let seg = a.rows(from, to - from);
    b.norm().eval((b.matrix().columns(from, to - from) * seg).as_slice())
}

/// One pass of the construction with a fixed `eps0`.
fn build_blocks(
    b: &BasisSystem,
    coeffs: &[VectorR],
    c: &CandidateSequence,
    eps0: f64,
    params: &SelectionParams,
) -> Result<(Vec<usize>, BlockSequence, Vec<BlockStep>)> {
    let n = b.count();
    let mut frontier = 0;
    let mut next_candidate = 0;
    let mut breakpoints = vec![0];
    let mut segments = Vec::new();
    let mut selected = Vec::new();
    let mut steps = Vec::new();
    for k in 1..=params.min_blocks {
        let eps = eps0 * params.shrink.powi(k as i32);
        let mut found = None;
        if frontier < n {
            for (idx, a) in coeffs.iter().enumerate().skip(next_candidate) {
                let head = window_norm(b, a, 0, frontier);
                if head > eps / 2.0 {
                    continue;
                }
                let (q, tail) = (frontier + 1..=n)
                    .map(|q| (q, window_norm(b, a, q, n)))
                    .find(|(_, t)| *t <= eps / 2.0)
                    .expect("the empty tail at q = N has zero mass");
                let seg: Vec<f64> = a.rows(frontier, q - frontier).iter().copied().collect();
                let u = b.matrix().columns(frontier, q - frontier) * VectorR::from_column_slice(&seg);
                if b.norm().eval(u.as_slice()) == 0.0 {
                    continue;
                }
                let distance = b.norm().eval((&c.vectors[idx] - &u).as_slice());
                found = Some((idx, q, seg, head, tail, distance));
                break;
            }
        }
        let Some((idx, q, seg, head, tail, distance)) = found else {
            return Err(BasisError::InsufficientCandidates {
                built: k - 1,
                required: params.min_blocks,
                available: c.len(),
            });
        };
        selected.push(idx + 1);
        breakpoints.push(q);
        segments.push(seg);
        steps.push(BlockStep {
            candidate: idx + 1,
            epsilon: eps,
            head,
            tail,
            distance,
        });
        frontier = q;
        next_candidate = idx + 1;
    }
    let blocks = BlockSequence::new(b, breakpoints, segments)?;
    Ok((selected, blocks, steps))
}

/// Gliding-hump selection with geometric `ε_k = eps0·shrink^k` and
/// smallest-index tie-breaking; `eps0` shrinks on each retry until the block
/// perturbation certifies.
pub fn gliding_hump_select(
    b: &BasisSystem,
    c: &CandidateSequence,
    params: &SelectionParams,
    cfg: &OracleConfig,
) -> Result<SelectionResult> {
    params.validate()?;
    let check = coordinate_null_check(b, c, params.null_tol, params.horizon, params.tail_start)?;
    if let Some(w) = check.witness() {
        return Err(BasisError::HypothesesFailed {
            coordinate: w.coordinate,
            value: w.tail_max,
            tol: check.tol,
        });
    }
    if let Some((i, norm)) = c
        .vectors
        .iter()
        .map(|y| b.norm().eval(y.as_slice()))
        .enumerate()
        .find(|(_, nv)| *nv < params.delta)
    {
        return Err(BasisError::BelowDelta {
            index: i + 1,
            norm,
            delta: params.delta,
        });
    }
    let coeffs = candidate_coefficients(b, c)?;
    let mut eps0 = params.eps0;
    let mut last_lambda = f64::INFINITY;
    for retry in 0..=params.max_retries {
        let (selected, blocks, steps) = build_blocks(b, &coeffs, c, eps0, params)?;
        let sys = blocks
            .system(b)
            .map_err(|e| BasisError::Numerical(format!("block system fails validation: {e}")))?;
        let ys: Vec<VectorR> = selected.iter().map(|n| c.vectors[n - 1].clone()).collect();
        let certificate = perturbation_lambda(&sys, &ys, cfg)?;
        last_lambda = certificate.lambda;
        if certificate.status == Status::Certified {
            return Ok(SelectionResult {
                selected_indices: selected,
                blocks,
                lambda_sel: certificate.lambda,
                certificate,
                retries_used: retry,
                eps0_used: eps0,
                steps,
            });
        }
        eps0 *= params.shrink;
    }
    Err(BasisError::RetriesExceeded {
        retries: params.max_retries,
        lambda: last_lambda,
    })
}

/// `Σ_k ‖y_{n_k} − u_k‖·‖u_k*‖` recomputed from scratch.
pub fn selection_lambda(b: &BasisSystem, c: &CandidateSequence, r: &SelectionResult, cfg: &OracleConfig) -> Result<f64> {
    let sys = r.blocks.system(b)?;
    let funcs = coefficient_functionals(&sys, cfg);
    Ok(r
        .selected_indices
        .iter()
        .zip(&r.blocks.blocks)
        .zip(&funcs.norms)
        .map(|((n, u), f)| b.norm().eval((&c.vectors[n - 1] - u).as_slice()) * f)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normed::NormSpec;
    use approx::assert_abs_diff_eq;

    fn unit(d: usize, i: usize) -> VectorR {
        VectorR::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 })
    }

    fn canonical(d: usize) -> BasisSystem {
        make_basis((0..d).map(|i| unit(d, i)).collect(), NormSpec::euclidean(), None).unwrap()
    }

    fn cfg() -> OracleConfig {
        OracleConfig::default()
    }

    #[test]
    fn disjoint_supports_pass() {
        let b = canonical(8);
        let c = CandidateSequence::new((1..=4).map(|n| unit(8, 2 * n - 1)).collect(), 1.0).unwrap();
        let r = coordinate_null_check(&b, &c, 1e-12, 8, 1).unwrap();
        assert!(r.passes(), "{r:?}");
        assert!(r.norms_ok);
    }

    #[test]
    fn constant_sequence_fails_at_first_coordinate() {
        let b = canonical(8);
        let c = CandidateSequence::new(vec![unit(8, 0); 5], 1.0).unwrap();
        let r = coordinate_null_check(&b, &c, 1e-12, 8, 1).unwrap();
        assert!(!r.passes());
        let w = r.witness().unwrap();
        assert_eq!(w.coordinate, 1);
        assert_eq!(w.tail_max, 1.0);
    }

    #[test]
    fn decaying_first_coordinate_boundary_pass() {
        // yₙ = eₙ + (1/n)e₁ for n = 2..8 sit at positions 1..7, so the tail
        // n ≥ 5 starts at position 4.
        let b = canonical(8);
        let ys = (2..=8).map(|n| unit(8, n - 1) + unit(8, 0) / n as f64).collect();
        let c = CandidateSequence::new(ys, 1.0).unwrap();
        let r = coordinate_null_check(&b, &c, 0.2, 8, 4).unwrap();
        assert_eq!(r.coordinates[0].tail_max, 0.2);
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn null_check_errors() {
        let b = canonical(3);
        assert!(matches!(
            CandidateSequence::new(vec![], 1.0),
            Err(BasisError::Empty(_))
        ));
        let c = CandidateSequence::new(vec![unit(4, 0)], 1.0).unwrap();
        assert!(matches!(
            coordinate_null_check(&b, &c, 0.1, 3, 1),
            Err(BasisError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn already_blocked_candidates() {
        let b = canonical(8);
        let c = CandidateSequence::new((1..=4).map(|n| unit(8, 2 * n - 1)).collect(), 1.0).unwrap();
        let mut p = SelectionParams::with_delta(1.0);
        p.null_tol = 1e-12;
        let r = gliding_hump_select(&b, &c, &p, &cfg()).unwrap();
        assert_eq!(r.selected_indices, vec![1, 2, 3]);
        for (k, u) in r.blocks.blocks.iter().enumerate() {
            assert_eq!(u, &unit(8, 2 * k + 1));
        }
        assert_eq!(r.lambda_sel, 0.0);
        assert_eq!(r.certificate.status, Status::Certified);
    }

    #[test]
    fn small_shared_mass_is_absorbed() {
        let b = canonical(8);
        let ys: Vec<VectorR> = (2..=8).map(|n| unit(8, n - 1) + unit(8, 0) * 0.01).collect();
        let c = CandidateSequence::new(ys, 1.0).unwrap();
        let mut p = SelectionParams::with_delta(1.0);
        p.eps0 = 0.5;
        p.null_tol = 0.5;
        let r = gliding_hump_select(&b, &c, &p, &cfg()).unwrap();
        assert!(r.lambda_sel > 0.0 && r.lambda_sel < 1.0, "{}", r.lambda_sel);
        assert!(r.blocks.is_successive());
        // Blocks after the first are the eₙ truncations.
        assert_eq!(r.blocks.blocks[1], unit(8, r.selected_indices[1]));
        for s in &r.steps {
            assert!(s.distance <= s.epsilon + 1e-12);
        }
        let recomputed = selection_lambda(&b, &c, &r, &cfg()).unwrap();
        assert_abs_diff_eq!(recomputed, r.lambda_sel, epsilon = 1e-12);
    }

    #[test]
    fn constant_candidates_fail_hypotheses() {
        let b = canonical(8);
        let c = CandidateSequence::new(vec![unit(8, 0); 6], 1.0).unwrap();
        let err = gliding_hump_select(&b, &c, &SelectionParams::with_delta(1.0), &cfg()).unwrap_err();
        assert!(matches!(err, BasisError::HypothesesFailed { coordinate: 1, .. }));
    }

    #[test]
    fn exhaustion_reports_progress() {
        let b = canonical(8);
        let c = CandidateSequence::new(vec![unit(8, 1), unit(8, 3)], 1.0).unwrap();
        let err = gliding_hump_select(&b, &c, &SelectionParams::with_delta(1.0), &cfg()).unwrap_err();
        assert_eq!(
            err,
            BasisError::InsufficientCandidates {
                built: 2,
                required: 3,
                available: 2
            }
        );
    }

    #[test]
    fn selection_is_deterministic() {
        let b = canonical(10);
        let ys: Vec<VectorR> = (1..=8).map(|n| unit(10, n + 1) + unit(10, 0) * 0.005).collect();
        let c = CandidateSequence::new(ys, 1.0).unwrap();
        let p = SelectionParams::with_delta(1.0);
        let a = gliding_hump_select(&b, &c, &p, &cfg()).unwrap();
        let again = gliding_hump_select(&b, &c, &p, &cfg()).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn block_certify_examples() {
        let b = canonical(4);
        let singles = BlockSequence::new(&b, vec![0, 1, 2], vec![vec![1.0], vec![1.0]]).unwrap();
        assert_abs_diff_eq!(block_certify(&b, &singles, &cfg()).unwrap().basis_constant, 1.0, epsilon = 1e-12);
        let pairs = BlockSequence::new(&b, vec![0, 2, 4], vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(block_certify(&b, &pairs, &cfg()).unwrap().basis_constant, 1.0, epsilon = 1e-12);

        let summing = make_basis(
            (1..=3).map(|k| VectorR::from_fn(3, |r, _| if r < k { 1.0 } else { 0.0 })).collect(),
            NormSpec::Sup,
            None,
        )
        .unwrap();
        let blocks = BlockSequence::new(&summing, vec![0, 1, 3], vec![vec![1.0], vec![1.0, -1.0]]).unwrap();
        let cert = block_certify(&summing, &blocks, &cfg()).unwrap();
        assert!(cert.basis_constant <= 2.0 + 1e-6);
    }

    #[test]
    fn block_sequence_validation() {
        let b = canonical(4);
        assert!(BlockSequence::new(&b, vec![0, 2, 2], vec![vec![1.0, 1.0], vec![]]).is_err());
        assert!(BlockSequence::new(&b, vec![1, 2], vec![vec![1.0]]).is_err());
        assert!(BlockSequence::new(&b, vec![0, 5], vec![vec![1.0; 5]]).is_err());
        assert!(matches!(
            BlockSequence::new(&b, vec![0, 2], vec![vec![0.0, 0.0]]),
            Err(BasisError::NullVector { index: 1 })
        ));
    }
}
