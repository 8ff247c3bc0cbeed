//! Seeded random sources.
//!
//! Every sampler draws from an [`RngStream`], a ChaCha8 generator keyed by a
//! master seed and selected by a 64-bit stream id. Trial `i` of an experiment
//! uses stream id `i`, so results do not depend on how trials are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{QjlError, Result};
use crate::linalg::{
    householder_qr_thin, l2_norm, CMatrix, StateVector, UnitaryAction, UnitaryMatrix, C64, ZERO,
};

#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self { master_seed, stream_id, rng }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// An independent stream derived from this one's seed and a label.
    ///
    /// Used where one trial needs several logically separate sources
    /// (for example the unitary and the measurement outcomes of one run).
    pub fn substream(&self, label: u64) -> Self {
        Self::new(derive_seed(self.master_seed, label), self.stream_id)
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard complex Gaussian `(G1 + iG2)/√2`.
    pub fn complex_gaussian(&mut self) -> C64 {
        let re = self.gaussian();
        let im = self.gaussian();
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Master seed for a logically separate component of an experiment.
pub fn derive_seed(master_seed: u64, label: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(label.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `n` iid standard normal reals.
pub fn sample_gaussians(n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(QjlError::InvalidParameter("sample count must be at least 1".into()));
    }
    Ok((0..n).map(|_| rng.gaussian()).collect())
}

/// `Σ G_i²` over `n` fresh standard normals.
pub fn sample_chi_square_sum(n: usize, rng: &mut RngStream) -> Result<f64> {
    if n == 0 {
        return Err(QjlError::InvalidParameter("degrees of freedom must be at least 1".into()));
    }
    Ok((0..n).map(|_| rng.gaussian().powi(2)).sum())
}

/// Haar-random unit vector in `C^d`: `2d` real Gaussians paired into a complex
/// tuple, divided by its norm.
pub fn sample_haar_unit_vector(d: usize, rng: &mut RngStream) -> Result<StateVector> {
    if d == 0 {
        return Err(QjlError::InvalidParameter("dimension must be at least 1".into()));
    }
    loop {
        let amps: Vec<C64> = (0..d)
            .map(|_| {
                let re = rng.gaussian();
                let im = rng.gaussian();
                C64::new(re, im)
            })
            .collect();
        // the all-zero draw has probability zero; redraw rather than divide by it
        if l2_norm(&amps) > 0.0 {
            return StateVector::normalized(amps);
        }
    }
}

/// Complex Ginibre matrix, entries drawn column by column.
pub fn sample_ginibre(rows: usize, cols: usize, rng: &mut RngStream) -> CMatrix {
    let data: Vec<C64> = (0..rows * cols).map(|_| rng.complex_gaussian()).collect();
    CMatrix::from_col_major(rows, cols, data).expect("sized")
}

/// First `k` columns of a Haar unitary on `C^d`.
///
/// Ginibre `d × k`, Householder QR, then each column of `Q` multiplied by the
/// phase of the matching diagonal entry of `R`. Without the phase step the
/// result is not Haar distributed. With `k = d` this is exactly
/// [`sample_haar_unitary`] on the same stream.
pub fn sample_haar_isometry(d: usize, k: usize, rng: &mut RngStream) -> Result<CMatrix> {
    if d == 0 || k == 0 || k > d {
        return Err(QjlError::InvalidParameter(format!("isometry shape {d}x{k}")));
    }
    let g = sample_ginibre(d, k, rng);
    let (mut q, diag) = householder_qr_thin(&g);
    for (j, r) in diag.iter().enumerate() {
        let n = r.norm();
        let phase = if n == 0.0 { C64::new(1.0, 0.0) } else { r / n };
        for z in q.col_mut(j) {
            *z *= phase;
        }
    }
    Ok(q)
}

pub fn sample_haar_unitary(d: usize, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    let q = sample_haar_isometry(d, d, rng)?;
    Ok(UnitaryMatrix::new_unchecked(q))
}

/// A Haar-random unitary realized only on the span of a fixed set of vectors.
///
/// For an orthonormal basis `B` of the span, `U·B` has the law of the first
/// `r` columns of a Haar unitary, so `U·v = (U·B)(B†v)` has exactly the Haar
/// joint distribution for every `v` in the span. Costs `O(d·r²)` instead of
/// the `O(d³)` of a full draw.
#[derive(Clone, Debug)]
pub struct HaarOnSpan {
    basis: CMatrix,
    image: CMatrix,
}

const SPAN_TOL: f64 = 1e-9;

impl HaarOnSpan {
    pub fn sample(states: &[StateVector], rng: &mut RngStream) -> Result<Self> {
        let d = states.first().map(|s| s.dim()).ok_or_else(|| {
            QjlError::InvalidParameter("need at least one vector to span".into())
        })?;
        // Gram-Schmidt, twice per vector, dropping dependent ones
        let mut cols: Vec<Vec<C64>> = Vec::new();
        for s in states {
            crate::linalg::check_dims(d, s.dim())?;
            let mut w = s.amplitudes().to_vec();
            let scale = l2_norm(&w);
            for _ in 0..2 {
                for b in &cols {
                    let c = crate::linalg::dot_conj(b, &w);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= bi * c;
                    }
                }
            }
            let n = l2_norm(&w);
            if n > 1e-12 * scale.max(1.0) {
                w.iter_mut().for_each(|z| *z /= n);
                cols.push(w);
            }
        }
        let r = cols.len().max(1);
        let data: Vec<C64> = if cols.is_empty() {
            vec![ZERO; d]
        } else {
            cols.into_iter().flatten().collect()
        };
        let basis = CMatrix::from_col_major(d, r, data)?;
        let image = sample_haar_isometry(d, r, rng)?;
        Ok(Self { basis, image })
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    /// `U·v`; fails if `v` is not in the sampled span.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        crate::linalg::check_dims(self.dim(), v.dim())?;
        let coeffs: Vec<C64> = (0..self.rank())
            .map(|j| crate::linalg::dot_conj(self.basis.col(j), v.amplitudes()))
            .collect();
        let back = self.basis.matvec(&coeffs)?;
        let residual = l2_norm(
            &v.amplitudes().iter().zip(&back).map(|(a, b)| a - b).collect::<Vec<_>>(),
        );
        if residual > SPAN_TOL * v.norm().max(1.0) {
            return Err(QjlError::OutsideSpan { residual });
        }
        Ok(StateVector::new(self.image.matvec(&coeffs)?))
    }
}

impl UnitaryAction for HaarOnSpan {
    fn dim(&self) -> usize {
        HaarOnSpan::dim(self)
    }

    fn apply(&self, v: &StateVector) -> Result<StateVector> {
        HaarOnSpan::apply(self, v)
    }
}
