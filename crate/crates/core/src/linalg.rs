//! Dense complex vectors and matrices, norms, block projectors and
//! distribution distances.
//!
//! Matrices are stored column-major. Inner products are conjugate-linear in
//! the first argument (`⟨u|w⟩ = Σ conj(u_i)·w_i`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QjlError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance on the norm of a vector flagged as a pure state.
pub const NORM_TOL: f64 = 1e-10;

/// Per-dimension tolerance of the unitarity check `‖UU† − I‖_F ≤ tol·d`.
pub const UNITARY_TOL: f64 = 1e-9;

/// Complex amplitude vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { amps: vec![ZERO; dim] }
    }

    /// Computational basis vector `e_k`, 1-based.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k == 0 || k > dim {
            return Err(QjlError::InvalidParameter(format!(
                "basis index {k} outside 1..={dim}"
            )));
        }
        let mut v = Self::zeros(dim);
        v.amps[k - 1] = ONE;
        Ok(v)
    }

    /// Builds a vector and rescales it to unit norm. Fails on the zero vector.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let mut v = Self { amps };
        let n = v.norm();
        if n == 0.0 {
            return Err(QjlError::InvalidParameter("cannot normalize the zero vector".into()));
        }
        v.scale(1.0 / n);
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amps)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { amps: self.amps.iter().map(|a| a * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self {
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self {
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect(),
        })
    }
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(QjlError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Euclidean norm `√(Σ|v_i|²)`; zero for an empty slice.
pub fn l2_norm(v: &[C64]) -> f64 {
    // scaled accumulation keeps tiny/huge entries from under/overflowing
    let scale = v.iter().map(|a| a.re.abs().max(a.im.abs())).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = v.iter().map(|a| (a / scale).norm_sqr()).sum();
    scale * s.sqrt()
}

/// `⟨u|w⟩`, conjugate-linear in `u`.
pub fn inner_product(u: &StateVector, w: &StateVector) -> Result<C64> {
    check_dims(u.dim(), w.dim())?;
    Ok(dot_conj(u.amplitudes(), w.amplitudes()))
}

#[inline]
pub(crate) fn dot_conj(u: &[C64], w: &[C64]) -> C64 {
    u.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

/// Partition of `C^{d1}` into `d1/d2` contiguous blocks of `d2` coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStructure {
    d1: usize,
    d2: usize,
}

impl BlockStructure {
    pub fn new(d1: usize, d2: usize) -> Result<Self> {
        if d2 == 0 || d2 >= d1 || !d1.is_multiple_of(d2) {
            return Err(QjlError::InvalidBlockStructure { d1, d2 });
        }
        Ok(Self { d1, d2 })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn num_blocks(&self) -> usize {
        self.d1 / self.d2
    }

    /// Coordinate range of 1-based block `j`, as 0-based offsets.
    pub fn range(&self, j: usize) -> Result<std::ops::Range<usize>> {
        if j == 0 || j > self.num_blocks() {
            return Err(QjlError::BlockIndexOutOfRange { index: j, num_blocks: self.num_blocks() });
        }
        Ok((j - 1) * self.d2..j * self.d2)
    }

    /// 1-based block containing the 0-based coordinate `k`.
    pub fn block_of(&self, k: usize) -> usize {
        k / self.d2 + 1
    }
}

/// Coordinates of block `j` (1-based) of `v`.
pub fn block_project(v: &StateVector, j: usize, bs: &BlockStructure) -> Result<Vec<C64>> {
    check_dims(bs.d1(), v.dim())?;
    let r = bs.range(j)?;
    Ok(v.amplitudes()[r].to_vec())
}

/// Squared norms `‖Π_j v‖²` of every block.
pub fn block_norms_sqr(v: &StateVector, bs: &BlockStructure) -> Result<Vec<f64>> {
    check_dims(bs.d1(), v.dim())?;
    Ok(v.amplitudes()
        .chunks(bs.d2())
        .map(|c| c.iter().map(|a| a.norm_sqr()).sum())
        .collect())
}

const DIST_TOL: f64 = 1e-9;

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(QjlError::NotADistribution(format!("{name} has entry {x}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DIST_TOL {
        return Err(QjlError::NotADistribution(format!("{name} sums to {s}")));
    }
    Ok(())
}

/// `Σ|p_i − q_i|` between two probability vectors.
pub fn l1_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_dims(p.len(), q.len())?;
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

pub fn uniform_distribution(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Dense complex matrix, column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        check_dims(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[C64]) -> Result<Self> {
        check_dims(rows * cols, data.len())?;
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = data[i * cols + j];
            }
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[j * rows + i] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col_major(&self) -> &[C64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&mut self, s: C64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.rows, other.rows)?;
        check_dims(self.cols, other.cols)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        check_dims(self.rows, other.rows)?;
        check_dims(self.cols, other.cols)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dims(self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let oc = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = other[(k, j)];
                if b == ZERO {
                    continue;
                }
                for (o, a) in oc.iter_mut().zip(self.col(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_dims(self.cols, v.len())?;
        let mut out = vec![ZERO; self.rows];
        for (k, b) in v.iter().enumerate() {
            if *b == ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.col(k)) {
                *o += a * b;
            }
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let m = nalgebra::DMatrix::from_column_slice(self.rows, self.cols, &self.data);
        m.singular_values().iter().cloned().fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[j * self.rows + i]
    }
}

/// `‖M‖_F`, the ℓ2 norm of the entries.
pub fn frobenius_norm(m: &CMatrix) -> f64 {
    l2_norm(m.col_major())
}

/// `‖UU† − I‖_F`.
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let prod = m.matmul(&m.adjoint()).expect("square");
    let d = m.rows();
    let mut s = 0.0;
    for j in 0..d {
        for i in 0..d {
            let target = if i == j { ONE } else { ZERO };
            s += (prod[(i, j)] - target).norm_sqr();
        }
    }
    s.sqrt()
}

/// A square matrix that passed the unitarity check.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_dims(m.rows(), m.cols())?;
        let deviation = unitarity_deviation(&m);
        if !(deviation <= UNITARY_TOL * m.rows() as f64) {
            return Err(QjlError::NotUnitary { deviation });
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn identity(d: usize) -> Self {
        Self(CMatrix::identity(d))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.matmul(&other.0)?))
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        Ok(StateVector::new(self.0.matvec(v.amplitudes())?))
    }

    pub fn deviation(&self) -> f64 {
        unitarity_deviation(&self.0)
    }
}

/// Anything that acts as a unitary on state vectors.
pub trait UnitaryAction {
    fn dim(&self) -> usize;
    fn apply(&self, v: &StateVector) -> Result<StateVector>;
}

impl UnitaryAction for UnitaryMatrix {
    fn dim(&self) -> usize {
        UnitaryMatrix::dim(self)
    }

    fn apply(&self, v: &StateVector) -> Result<StateVector> {
        UnitaryMatrix::apply(self, v)
    }
}

/// Householder QR of a tall matrix `a` (rows ≥ cols).
///
/// Returns the thin factor `Q` (rows × cols, orthonormal columns) and the
/// diagonal of `R`. Column `j` of `Q` depends only on columns `0..=j` of `a`.
pub fn householder_qr_thin(a: &CMatrix) -> (CMatrix, Vec<C64>) {
    let (m, n) = (a.rows(), a.cols());
    assert!(m >= n, "householder_qr_thin needs rows >= cols");
    let mut r = a.clone();
    // reflectors stored as (v, tau) with v[k] = 1 implicit at position k
    let mut vs: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut taus = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    for k in 0..n {
        let x = &r.col(k)[k..];
        let alpha = x[0];
        let xnorm = l2_norm(x);
        let (v, tau, beta) = if xnorm == 0.0 {
            (vec![ZERO; m - k], ZERO, ZERO)
        } else {
            // beta = -e^{i arg(alpha)} ‖x‖ avoids cancellation
            let phase = if alpha.norm() == 0.0 { ONE } else { alpha / alpha.norm() };
            let beta = -phase * xnorm;
            let mut v: Vec<C64> = x.to_vec();
            v[0] = alpha - beta;
            let v0 = v[0];
            for z in &mut v {
                *z /= v0;
            }
            // H = I − tau v v†, with H x = beta e1
            let tau = (beta - alpha) / beta;
            (v, tau, beta)
        };
        diag.push(beta);
        // apply H† = I − conj(tau) v v† to trailing columns
        for j in k + 1..n {
            let col = &mut r.col_mut(j)[k..];
            let w = dot_conj(&v, col) * tau.conj();
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= vi * w;
            }
        }
        vs.push(v);
        taus.push(tau);
    }
    // Q = H_0 H_1 ... H_{n-1} applied to the first n unit vectors
    let mut q = CMatrix::zeros(m, n);
    for j in 0..n {
        q[(j, j)] = ONE;
    }
    for k in (0..n).rev() {
        let (v, tau) = (&vs[k], taus[k]);
        if tau == ZERO {
            continue;
        }
        for j in k..n {
            let col = &mut q.col_mut(j)[k..];
            let w = dot_conj(v, col) * tau;
            for (c, vi) in col.iter_mut().zip(v) {
                *c -= vi * w;
            }
        }
    }
    (q, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::*;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol
        }
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn l2_norm_examples() {
        assert!(close(l2_norm(&[c(3.0, 0.0), c(4.0, 0.0)]), 5.0, 1e-15));
        assert_eq!(l2_norm(&[ZERO; 7]), 0.0);
        assert_eq!(l2_norm(&[]), 0.0);
        assert!(close(l2_norm(&[ONE, I]), 2f64.sqrt(), 1e-15));
    }

    #[test]
    fn l2_norm_extreme_magnitudes() {
        assert!(close(l2_norm(&[c(1e-200, 0.0), c(1e-200, 0.0)]) / 1e-200, 2f64.sqrt(), 1e-12));
        assert!(close(l2_norm(&[c(1e200, 0.0), c(0.0, 1e200)]) / 1e200, 2f64.sqrt(), 1e-12));
    }

    #[test]
    fn frobenius_examples() {
        for d in [1, 2, 5, 16] {
            assert!(close(frobenius_norm(&CMatrix::identity(d)), (d as f64).sqrt(), 1e-14));
        }
        assert_eq!(frobenius_norm(&CMatrix::zeros(3, 4)), 0.0);
        let m = CMatrix::from_fn(4, 4, |i, j| c(i as f64 - 1.5 * j as f64, (i * j) as f64 * 0.3));
        let direct: f64 = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|ij| m[ij].norm_sqr()).sum();
        assert!(close(frobenius_norm(&m).powi(2), direct, 1e-12));
    }

    #[test]
    fn inner_product_examples() {
        let e1 = StateVector::basis(3, 1).unwrap();
        let e2 = StateVector::basis(3, 2).unwrap();
        assert_eq!(inner_product(&e1, &e2).unwrap(), ZERO);
        assert_eq!(inner_product(&e1, &e1).unwrap(), ONE);
        // conjugate-linear in the first slot
        let u = StateVector::new(vec![I, ZERO]);
        let w = StateVector::new(vec![ONE, ZERO]);
        assert_eq!(inner_product(&u, &w).unwrap(), -I);
        assert!(matches!(
            inner_product(&e1, &StateVector::zeros(2)),
            Err(QjlError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn block_project_examples() {
        let v = StateVector::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let bs = BlockStructure::new(4, 2).unwrap();
        assert_eq!(block_project(&v, 1, &bs).unwrap(), vec![c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(block_project(&v, 2, &bs).unwrap(), vec![c(3.0, 0.0), c(4.0, 0.0)]);
        assert!(matches!(block_project(&v, 0, &bs), Err(QjlError::BlockIndexOutOfRange { .. })));
        assert!(matches!(block_project(&v, 3, &bs), Err(QjlError::BlockIndexOutOfRange { .. })));
        let total: f64 = block_norms_sqr(&v, &bs).unwrap().iter().sum();
        assert!(close(total, v.norm_sqr(), 1e-12));
    }

    #[test]
    fn block_structure_validation() {
        assert!(BlockStructure::new(8, 3).is_err());
        assert!(BlockStructure::new(8, 8).is_err());
        assert!(BlockStructure::new(8, 0).is_err());
        let bs = BlockStructure::new(1024, 64).unwrap();
        assert_eq!(bs.num_blocks(), 16);
        assert_eq!(bs.block_of(0), 1);
        assert_eq!(bs.block_of(64), 2);
    }

    #[test]
    fn l1_distance_examples() {
        assert_eq!(l1_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(l1_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!(close(l1_distance(&[0.75, 0.25], &[0.5, 0.5]).unwrap(), 0.5, 1e-15));
        assert!(matches!(l1_distance(&[1.0], &[0.5, 0.5]), Err(QjlError::DimensionMismatch { .. })));
        assert!(matches!(l1_distance(&[0.6, 0.6], &[0.5, 0.5]), Err(QjlError::NotADistribution(_))));
        assert!(matches!(l1_distance(&[1.5, -0.5], &[0.5, 0.5]), Err(QjlError::NotADistribution(_))));
    }

    #[test]
    fn matmul_kron_and_adjoint() {
        let a = CMatrix::from_row_major(2, 2, &[ONE, I, ZERO, c(2.0, 0.0)]).unwrap();
        let b = CMatrix::from_row_major(2, 2, &[ZERO, ONE, ONE, ZERO]).unwrap();
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab.row_major(), vec![I, ONE, c(2.0, 0.0), ZERO]);
        let k = a.kron(&b);
        assert_eq!(k.rows(), 4);
        assert_eq!(k[(0, 1)], ONE);
        assert_eq!(k[(1, 2)], I);
        assert_eq!(a.adjoint()[(1, 0)], -I);
    }

    #[test]
    fn householder_reproduces_input() {
        let a = CMatrix::from_fn(6, 4, |i, j| c((i * 7 + j * 3) as f64 % 5.0 - 2.0, (i + 2 * j) as f64 * 0.1 - 0.3));
        let (q, diag) = householder_qr_thin(&a);
        let qhq = q.adjoint().matmul(&q).unwrap();
        assert!(qhq.sub(&CMatrix::identity(4)).unwrap().frobenius_norm() < 1e-12);
        // R = Q† A is upper triangular with the returned diagonal
        let r = q.adjoint().matmul(&a).unwrap();
        for j in 0..4 {
            assert!((r[(j, j)] - diag[j]).norm() < 1e-10);
            for i in j + 1..4 {
                assert!(r[(i, j)].norm() < 1e-10);
            }
        }
    }

    #[test]
    fn unitary_matrix_rejects_non_unitary() {
        let m = CMatrix::from_row_major(2, 2, &[ONE, ONE, ZERO, ONE]).unwrap();
        assert!(matches!(UnitaryMatrix::new(m), Err(QjlError::NotUnitary { .. })));
        assert!(UnitaryMatrix::new(CMatrix::identity(3)).is_ok());
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = CMatrix::from_row_major(2, 2, &[c(3.0, 0.0), ZERO, ZERO, c(0.0, -5.0)]).unwrap();
        assert!(close(m.spectral_norm(), 5.0, 1e-12));
    }
}
