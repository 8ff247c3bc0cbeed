//! Classical and quantum Johnson-Lindenstrauss transforms.
//!
//! The quantum transform applies a unitary, measures which block of `d2`
//! coordinates the state lands in, and keeps the renormalized block.

use serde::Serialize;

use crate::error::{QjlError, Result};
use crate::linalg::{
    block_norms_sqr, check_dims, inner_product, l2_norm, BlockStructure, StateVector,
    UnitaryAction, C64, I,
};
use crate::sampling::RngStream;

/// Complex inner product `⟨u|w⟩` rebuilt from norms of differences:
///
/// `Re⟨u|w⟩ = (‖u‖² + ‖w‖² − ‖u − w‖²)/2` and
/// `Im⟨u|w⟩ = (‖u − i·w‖² − ‖u‖² − ‖w‖²)/2`.
///
/// For unit vectors this is `(1 − ½‖u − w‖²) + i(½‖u − i·w‖² − 1)`.
pub fn polarization_inner_product(u: &StateVector, w: &StateVector) -> Result<C64> {
    check_dims(u.dim(), w.dim())?;
    let nu = u.norm_sqr();
    let nw = w.norm_sqr();
    let diff = u.sub(w)?.norm_sqr();
    let diff_i = u.sub(&w.scaled(I))?.norm_sqr();
    Ok(C64::new((nu + nw - diff) / 2.0, (diff_i - nu - nw) / 2.0))
}

/// `√(d1/d2) · Π₁ U v`.
pub fn classical_jl<U: UnitaryAction + ?Sized>(
    v: &StateVector,
    u: &U,
    bs: &BlockStructure,
) -> Result<Vec<C64>> {
    check_dims(bs.d1(), v.dim())?;
    check_dims(bs.d1(), u.dim())?;
    let image = u.apply(v)?;
    let scale = (bs.d1() as f64 / bs.d2() as f64).sqrt();
    Ok(image.amplitudes()[..bs.d2()].iter().map(|z| z * scale).collect())
}

/// Result of measuring the block name of `U·v`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JLOutcome {
    /// 1-based block index.
    pub block_index: usize,
    pub block_probability: f64,
    pub collapsed_state: StateVector,
}

fn check_state(v: &StateVector) -> Result<()> {
    if !v.is_normalized() {
        return Err(QjlError::InvalidParameter(format!("state has norm {}", v.norm())));
    }
    Ok(())
}

/// Born probabilities `(‖Π_j U v‖²)_j`.
pub fn block_probability_vector<U: UnitaryAction + ?Sized>(
    v: &StateVector,
    u: &U,
    bs: &BlockStructure,
) -> Result<Vec<f64>> {
    check_dims(bs.d1(), v.dim())?;
    check_dims(bs.d1(), u.dim())?;
    block_norms_sqr(&u.apply(v)?, bs)
}

/// Draws a 1-based block index with probability proportional to `probs`.
pub fn sample_block(probs: &[f64], rng: &mut RngStream) -> usize {
    let total: f64 = probs.iter().sum();
    let r = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_positive = 1;
    for (j, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last_positive = j + 1;
            acc += p;
            if r < acc {
                return j + 1;
            }
        }
    }
    // r landed past the rounded total; fall back to the last reachable block
    last_positive
}

/// Measures the block name of an already transformed state `image = U·v`.
pub fn measure_image(image: &StateVector, bs: &BlockStructure, rng: &mut RngStream) -> Result<JLOutcome> {
    let probs = block_norms_sqr(image, bs)?;
    let j = sample_block(&probs, rng);
    let block = image.amplitudes()[bs.range(j)?].to_vec();
    let total: f64 = probs.iter().sum();
    Ok(JLOutcome {
        block_index: j,
        block_probability: probs[j - 1] / total,
        collapsed_state: StateVector::normalized(block)?,
    })
}

/// Applies `U`, samples a block name by the Born rule and collapses.
pub fn quantum_jl_measure<U: UnitaryAction + ?Sized>(
    v: &StateVector,
    u: &U,
    bs: &BlockStructure,
    rng: &mut RngStream,
) -> Result<JLOutcome> {
    check_state(v)?;
    check_dims(bs.d1(), v.dim())?;
    check_dims(bs.d1(), u.dim())?;
    measure_image(&u.apply(v)?, bs, rng)
}

/// Normalized block `j` of `image`, or `None` when that block is empty.
pub fn collapse(image: &StateVector, j: usize, bs: &BlockStructure) -> Result<Option<StateVector>> {
    let block = image.amplitudes()[bs.range(j)?].to_vec();
    if l2_norm(&block) == 0.0 {
        return Ok(None);
    }
    StateVector::normalized(block).map(Some)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairDeviation {
    /// 1-based state indices, `i ≤ i2`.
    pub i: usize,
    pub i2: usize,
    /// `|⟨v_i(j)|v_i2(j)⟩ − ⟨v_i|v_i2⟩|`; `None` when either collapse is unreachable.
    pub deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockReport {
    pub block: usize,
    /// `|‖Π_j U v_i‖ / √(d2/d1) − 1|` per state.
    pub norm_deviations: Vec<f64>,
    pub pairs: Vec<PairDeviation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreservationReport {
    pub d1: usize,
    pub d2: usize,
    pub n_states: usize,
    pub eps: f64,
    pub inner_band: f64,
    pub max_norm_deviation: f64,
    pub max_inner_deviation: f64,
    /// `(block, state)` cells outside the multiplicative `(1 ± ε)` band.
    pub norm_violations: Vec<(usize, usize)>,
    /// `(block, i, i2)` cells outside the additive `±8ε` band.
    pub inner_violations: Vec<(usize, usize, usize)>,
    /// `(block, state)` cells with zero projection, excluded from pair checks.
    pub unreachable: Vec<(usize, usize)>,
    pub blocks: Vec<BlockReport>,
}

impl PreservationReport {
    pub fn inner_band_holds(&self) -> bool {
        self.inner_violations.is_empty()
    }

    pub fn norm_band_holds(&self) -> bool {
        self.norm_violations.is_empty()
    }
}

/// Checks norm and inner-product preservation for every block and every pair.
pub fn pairwise_preservation_report<U: UnitaryAction + ?Sized>(
    states: &[StateVector],
    u: &U,
    bs: &BlockStructure,
    eps: f64,
) -> Result<PreservationReport> {
    if !(eps > 0.0) {
        return Err(QjlError::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    for s in states {
        check_dims(bs.d1(), s.dim())?;
        check_state(s)?;
    }
    check_dims(bs.d1(), u.dim())?;
    let n = states.len();
    let images = states.iter().map(|s| u.apply(s)).collect::<Result<Vec<_>>>()?;
    let mut original = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in i..n {
            original[i][k] = inner_product(&states[i], &states[k])?;
        }
    }
    let target = (bs.d2() as f64 / bs.d1() as f64).sqrt();
    let inner_band = 8.0 * eps;
    let mut report = PreservationReport {
        d1: bs.d1(),
        d2: bs.d2(),
        n_states: n,
        eps,
        inner_band,
        max_norm_deviation: 0.0,
        max_inner_deviation: 0.0,
        norm_violations: Vec::new(),
        inner_violations: Vec::new(),
        unreachable: Vec::new(),
        blocks: Vec::with_capacity(bs.num_blocks()),
    };
    for j in 1..=bs.num_blocks() {
        let range = bs.range(j)?;
        let mut collapsed = Vec::with_capacity(n);
        let mut norm_deviations = Vec::with_capacity(n);
        for (i, img) in images.iter().enumerate() {
            let block = &img.amplitudes()[range.clone()];
            let norm = l2_norm(block);
            let dev = (norm / target - 1.0).abs();
            norm_deviations.push(dev);
            report.max_norm_deviation = report.max_norm_deviation.max(dev);
            if dev > eps {
                report.norm_violations.push((j, i + 1));
            }
            if norm == 0.0 {
                report.unreachable.push((j, i + 1));
                collapsed.push(None);
            } else {
                collapsed.push(Some(StateVector::normalized(block.to_vec())?));
            }
        }
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for k in i..n {
                let deviation = match (&collapsed[i], &collapsed[k]) {
                    (Some(a), Some(b)) => {
                        let after = polarization_inner_product(a, b)?;
                        Some((after - original[i][k]).norm())
                    }
                    _ => None,
                };
                if let Some(dev) = deviation {
                    report.max_inner_deviation = report.max_inner_deviation.max(dev);
                    if dev > inner_band {
                        report.inner_violations.push((j, i + 1, k + 1));
                    }
                }
                pairs.push(PairDeviation { i: i + 1, i2: k + 1, deviation });
            }
        }
        report.blocks.push(BlockReport { block: j, norm_deviations, pairs });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{UnitaryMatrix, ONE, ZERO};
    use crate::sampling::{sample_haar_unit_vector, sample_haar_unitary, HaarOnSpan};

    #[test]
    fn polarization_matches_inner_product() {
        let mut rng = RngStream::new(1, 0);
        for d in [1, 2, 3, 8, 64] {
            for _ in 0..200 {
                let u = sample_haar_unit_vector(d, &mut rng).unwrap();
                let w = sample_haar_unit_vector(d, &mut rng).unwrap();
                let p = polarization_inner_product(&u, &w).unwrap();
                let q = inner_product(&u, &w).unwrap();
                assert!((p - q).norm() < 1e-12);
            }
        }
        // equal states give +1, not −1
        let u = sample_haar_unit_vector(4, &mut rng).unwrap();
        assert!((polarization_inner_product(&u, &u).unwrap() - ONE).norm() < 1e-14);
    }

    #[test]
    fn classical_jl_identity() {
        let bs = BlockStructure::new(4, 2).unwrap();
        let e1 = StateVector::basis(4, 1).unwrap();
        let out = classical_jl(&e1, &UnitaryMatrix::identity(4), &bs).unwrap();
        assert!((out[0].re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(out[1], ZERO);
        assert!(classical_jl(&StateVector::basis(8, 1).unwrap(), &UnitaryMatrix::identity(4), &bs).is_err());
    }

    #[test]
    fn classical_jl_scaling_consistency() {
        let bs = BlockStructure::new(16, 4).unwrap();
        let mut rng = RngStream::new(2, 0);
        let u = sample_haar_unitary(16, &mut rng).unwrap();
        let v = sample_haar_unit_vector(16, &mut rng).unwrap();
        let t = classical_jl(&v, &u, &bs).unwrap();
        let p1 = block_probability_vector(&v, &u, &bs).unwrap()[0];
        assert!((l2_norm(&t) - (16.0f64 / 4.0).sqrt() * p1.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn measure_identity_basis_state() {
        let bs = BlockStructure::new(4, 2).unwrap();
        let e1 = StateVector::basis(4, 1).unwrap();
        let out = quantum_jl_measure(&e1, &UnitaryMatrix::identity(4), &bs, &mut RngStream::new(3, 0)).unwrap();
        assert_eq!(out.block_index, 1);
        assert_eq!(out.block_probability, 1.0);
        assert_eq!(out.collapsed_state.amplitudes(), &[ONE, ZERO]);
    }

    #[test]
    fn measure_rejects_unnormalized() {
        let bs = BlockStructure::new(4, 2).unwrap();
        let v = StateVector::new(vec![ONE, ONE, ZERO, ZERO]);
        assert!(quantum_jl_measure(&v, &UnitaryMatrix::identity(4), &bs, &mut RngStream::new(3, 0)).is_err());
    }

    #[test]
    fn probability_vectors() {
        let bs = BlockStructure::new(8, 2).unwrap();
        let id = UnitaryMatrix::identity(8);
        let e1 = StateVector::basis(8, 1).unwrap();
        assert_eq!(block_probability_vector(&e1, &id, &bs).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let unif = StateVector::normalized(vec![ONE; 8]).unwrap();
        for p in block_probability_vector(&unif, &id, &bs).unwrap() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        let mut rng = RngStream::new(4, 0);
        for _ in 0..20 {
            let u = sample_haar_unitary(8, &mut rng).unwrap();
            let v = sample_haar_unit_vector(8, &mut rng).unwrap();
            let s: f64 = block_probability_vector(&v, &u, &bs).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sample_block_follows_probabilities() {
        let mut rng = RngStream::new(5, 0);
        let probs = [0.0, 0.25, 0.0, 0.75];
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            counts[sample_block(&probs, &mut rng) - 1] += 1;
        }
        assert_eq!(counts[0], 0);
        assert_eq!(counts[2], 0);
        let f = counts[1] as f64 / 40_000.0;
        assert!((f - 0.25).abs() < 0.01, "{f}");
    }

    #[test]
    fn collapsed_states_are_unit() {
        let bs = BlockStructure::new(64, 8).unwrap();
        let mut rng = RngStream::new(6, 0);
        for _ in 0..50 {
            let v = sample_haar_unit_vector(64, &mut rng).unwrap();
            let h = HaarOnSpan::sample(std::slice::from_ref(&v), &mut rng).unwrap();
            let o = quantum_jl_measure(&v, &h, &bs, &mut rng).unwrap();
            assert!((o.collapsed_state.norm() - 1.0).abs() < 1e-10);
            assert_eq!(o.collapsed_state.dim(), 8);
        }
    }

    #[test]
    fn report_single_state_is_exact() {
        let bs = BlockStructure::new(16, 4).unwrap();
        let mut rng = RngStream::new(7, 0);
        let v = sample_haar_unit_vector(16, &mut rng).unwrap();
        let u = sample_haar_unitary(16, &mut rng).unwrap();
        let r = pairwise_preservation_report(&[v], &u, &bs, 0.25).unwrap();
        assert!(r.max_inner_deviation < 1e-12);
        assert!(r.inner_band_holds());
    }

    #[test]
    fn report_identity_orthogonal_basis_states() {
        let bs = BlockStructure::new(8, 2).unwrap();
        let states = [StateVector::basis(8, 1).unwrap(), StateVector::basis(8, 2).unwrap()];
        let r = pairwise_preservation_report(&states, &UnitaryMatrix::identity(8), &bs, 0.25).unwrap();
        let b1 = &r.blocks[0];
        let cross = b1.pairs.iter().find(|p| p.i == 1 && p.i2 == 2).unwrap();
        assert_eq!(cross.deviation, Some(0.0));
        // blocks 2..4 are empty for both states
        assert_eq!(r.unreachable.len(), 6);
        assert!(r.blocks[1].pairs.iter().all(|p| p.deviation.is_none()));
        assert!(r.inner_band_holds());
        // the empty blocks sit far outside the norm band
        assert!(!r.norm_band_holds());
    }
}
