//! Finite unitary designs and tensor-product-expander quality.
//!
//! Superoperators act on column-stacked operators: `vec(M)` lists the columns
//! of `M` one after another, so `vec(A M B) = (Bᵀ ⊗ A) vec(M)`. The t-fold
//! conjugation `M ↦ W M W†` with `W = V^{⊗t}` is therefore `conj(W) ⊗ W`.

use crate::circuits::{generate_local_random_circuit, GateCircuit};
use crate::error::{QjlError, Result};
use crate::linalg::{CMatrix, UnitaryMatrix, C64, I, ONE, ZERO};
use crate::sampling::{sample_haar_unitary, RngStream};

/// Largest number of superoperator entries (`d^{4t}`) that will be built.
pub const MAX_SUPEROP_ENTRIES: usize = 1 << 16;

/// Largest explicit design produced by [`iterate_design`].
pub const MAX_ITERATED_SIZE: usize = 1 << 14;

/// Lazily sampled design: member `i` is the concatenation of `iterations`
/// independent local random circuits of `size` gates, drawn from stream `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitDesign {
    pub num_qubits: usize,
    pub size: usize,
    pub seed: u64,
    pub iterations: usize,
}

impl CircuitDesign {
    pub fn member(&self, index: u64) -> Result<GateCircuit> {
        let base = RngStream::new(self.seed, index);
        let mut c = GateCircuit::empty(self.num_qubits)?;
        for k in 0..self.iterations {
            let mut rng = base.substream(k as u64);
            c = c.concat(&generate_local_random_circuit(self.num_qubits, self.size, &mut rng)?)?;
        }
        Ok(c)
    }
}

#[derive(Clone, Debug)]
pub enum FiniteDesign {
    Explicit { dim: usize, unitaries: Vec<UnitaryMatrix> },
    Circuits(CircuitDesign),
}

impl FiniteDesign {
    pub fn explicit(unitaries: Vec<UnitaryMatrix>) -> Result<Self> {
        let dim = unitaries
            .first()
            .map(|u| u.dim())
            .ok_or_else(|| QjlError::InvalidParameter("design needs at least one unitary".into()))?;
        for u in &unitaries {
            crate::linalg::check_dims(dim, u.dim())?;
        }
        Ok(Self::Explicit { dim, unitaries })
    }

    pub fn circuits(num_qubits: usize, size: usize, seed: u64) -> Result<Self> {
        if num_qubits < 2 {
            return Err(QjlError::InvalidParameter("circuit designs need at least 2 qubits".into()));
        }
        Ok(Self::Circuits(CircuitDesign { num_qubits, size, seed, iterations: 1 }))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Explicit { dim, .. } => *dim,
            Self::Circuits(c) => 1 << c.num_qubits,
        }
    }

    /// Number of members, when the design is explicit.
    pub fn cardinality(&self) -> Option<usize> {
        match self {
            Self::Explicit { unitaries, .. } => Some(unitaries.len()),
            Self::Circuits(_) => None,
        }
    }

    fn members(&self) -> Result<&[UnitaryMatrix]> {
        match self {
            Self::Explicit { unitaries, .. } => Ok(unitaries),
            Self::Circuits(_) => Err(QjlError::InvalidParameter(
                "operation needs an explicit design".into(),
            )),
        }
    }
}

/// Matrix of `M ↦ E[V^{⊗t} M (V†)^{⊗t}]` on column-stacked `d^t × d^t` operators.
#[derive(Clone, Debug)]
pub struct MomentSuperoperator {
    pub matrix: CMatrix,
    pub dim: usize,
    pub order: usize,
}

impl MomentSuperoperator {
    pub fn operator_dim(&self) -> usize {
        self.dim.pow(self.order as u32)
    }

    pub fn apply(&self, m: &CMatrix) -> Result<CMatrix> {
        let n = self.operator_dim();
        crate::linalg::check_dims(n, m.rows())?;
        crate::linalg::check_dims(n, m.cols())?;
        let out = self.matrix.matvec(m.col_major())?;
        CMatrix::from_col_major(n, n, out)
    }

    /// `|Tr Φ(I) − d^t|`.
    pub fn trace_defect(&self) -> f64 {
        let n = self.operator_dim();
        let img = self.apply(&CMatrix::identity(n)).expect("square");
        (img.trace() - C64::new(n as f64, 0.0)).norm()
    }
}

fn check_superop_size(d: usize, t: usize) -> Result<usize> {
    let n = (d as u128).checked_pow(t as u32).unwrap_or(u128::MAX);
    let entries = n.saturating_mul(n).saturating_mul(n).saturating_mul(n);
    if t == 0 || entries > MAX_SUPEROP_ENTRIES as u128 {
        return Err(QjlError::SizeGuard(format!(
            "superoperator for d={d}, t={t} exceeds {MAX_SUPEROP_ENTRIES} entries"
        )));
    }
    Ok(n as usize)
}

fn tensor_power(u: &CMatrix, t: usize) -> CMatrix {
    let mut w = u.clone();
    for _ in 1..t {
        w = w.kron(u);
    }
    w
}

/// `conj(V^{⊗t}) ⊗ V^{⊗t}`.
pub fn conjugation_superoperator(v: &UnitaryMatrix, t: usize) -> CMatrix {
    let w = tensor_power(v.matrix(), t);
    w.conj().kron(&w)
}

/// Average t-fold conjugation over the members of an explicit design.
pub fn design_moment_superoperator(design: &FiniteDesign, t: usize) -> Result<MomentSuperoperator> {
    let d = design.dim();
    let n = check_superop_size(d, t)?;
    let members = design.members()?;
    let mut acc = CMatrix::zeros(n * n, n * n);
    for v in members {
        acc.add_assign(&conjugation_superoperator(v, t))?;
    }
    acc.scale(C64::new(1.0 / members.len() as f64, 0.0));
    Ok(MomentSuperoperator { matrix: acc, dim: d, order: t })
}

/// Exact Haar twirl for `t ∈ {1, 2}`.
///
/// `t = 1`: `M ↦ Tr(M)·I/d`. `t = 2`: projection onto span{I, F} (F the swap
/// of the two tensor factors), `M ↦ a·I + b·F` with
/// `a = (Tr M − Tr(FM)/d)/(d²−1)` and `b = (Tr(FM) − Tr M/d)/(d²−1)`.
pub fn haar_moment_superoperator(d: usize, t: usize) -> Result<MomentSuperoperator> {
    if !(t == 1 || t == 2) {
        return Err(QjlError::InvalidParameter(format!("exact Haar twirl supports t in {{1, 2}}, got {t}")));
    }
    if d == 0 {
        return Err(QjlError::InvalidParameter("dimension must be at least 1".into()));
    }
    let n = check_superop_size(d, t)?;
    let mut s = CMatrix::zeros(n * n, n * n);
    for col in 0..n {
        for row in 0..n {
            let mut e = CMatrix::zeros(n, n);
            e[(row, col)] = ONE;
            let img = haar_twirl(&e, d, t);
            s.col_mut(col * n + row).copy_from_slice(img.col_major());
        }
    }
    Ok(MomentSuperoperator { matrix: s, dim: d, order: t })
}

fn swap_operator(d: usize) -> CMatrix {
    let mut f = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            f[(j * d + i, i * d + j)] = ONE;
        }
    }
    f
}

fn haar_twirl(m: &CMatrix, d: usize, t: usize) -> CMatrix {
    match t {
        1 => {
            let mut out = CMatrix::identity(d);
            out.scale(m.trace() / d as f64);
            out
        }
        _ => {
            if d == 1 {
                return m.clone();
            }
            let f = swap_operator(d);
            let tr = m.trace();
            let trf = f.matmul(m).expect("square").trace();
            let df = d as f64;
            let a = (tr - trf / df) / (df * df - 1.0);
            let b = (trf - tr / df) / (df * df - 1.0);
            let mut out = CMatrix::identity(d * d);
            out.scale(a);
            let mut fb = f;
            fb.scale(b);
            out.add_assign(&fb).expect("same shape");
            out
        }
    }
}

/// Monte-Carlo estimate of the Haar t-fold twirl from `samples` Haar draws.
///
/// Each entry carries statistical error of order `samples^{-1/2}`.
pub fn haar_moment_superoperator_monte_carlo(
    d: usize,
    t: usize,
    samples: usize,
    rng: &mut RngStream,
) -> Result<MomentSuperoperator> {
    let n = check_superop_size(d, t)?;
    if samples == 0 {
        return Err(QjlError::InvalidParameter("need at least one sample".into()));
    }
    let mut acc = CMatrix::zeros(n * n, n * n);
    for _ in 0..samples {
        let u = sample_haar_unitary(d, rng)?;
        acc.add_assign(&conjugation_superoperator(&u, t))?;
    }
    acc.scale(C64::new(1.0 / samples as f64, 0.0));
    Ok(MomentSuperoperator { matrix: acc, dim: d, order: t })
}

/// Smallest λ with `‖Φ_design(M) − Φ_Haar(M)‖_F ≤ λ‖M‖_F` for all `M`: the
/// largest singular value of the difference of the two superoperators.
pub fn estimate_tpe_lambda(design: &FiniteDesign, t: usize) -> Result<f64> {
    let ds = design_moment_superoperator(design, t)?;
    let hs = haar_moment_superoperator(design.dim(), t)?;
    Ok(ds.matrix.sub(&hs.matrix)?.spectral_norm())
}

/// The `k`-fold product design `{V_{i1} V_{i2} ⋯ V_{ik}}`.
///
/// Explicit designs are materialized (guarded by [`MAX_ITERATED_SIZE`]);
/// circuit designs concatenate `k` independently sampled circuits per member.
pub fn iterate_design(design: &FiniteDesign, k: usize) -> Result<FiniteDesign> {
    if k == 0 {
        return Err(QjlError::InvalidParameter("iteration count must be at least 1".into()));
    }
    match design {
        FiniteDesign::Circuits(c) => Ok(FiniteDesign::Circuits(CircuitDesign {
            iterations: c.iterations * k,
            ..c.clone()
        })),
        FiniteDesign::Explicit { unitaries, .. } => {
            let s = unitaries.len();
            let total = (s as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
            if total > MAX_ITERATED_SIZE as u128 {
                return Err(QjlError::SizeGuard(format!(
                    "{s}^{k} members exceeds {MAX_ITERATED_SIZE}"
                )));
            }
            let mut current = unitaries.clone();
            for _ in 1..k {
                let mut next = Vec::with_capacity(current.len() * s);
                for a in &current {
                    for b in unitaries {
                        next.push(UnitaryMatrix::new_unchecked(a.matrix().matmul(b.matrix())?));
                    }
                }
                current = next;
            }
            FiniteDesign::explicit(current)
        }
    }
}

/// A balanced monomial `Π u_{a_r} · Π conj(u_{b_r})` with 1-based `(row, col)`
/// index pairs; `t` plain and `t` conjugated factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub plain: Vec<(usize, usize)>,
    pub conjugated: Vec<(usize, usize)>,
}

impl Monomial {
    pub fn new(plain: Vec<(usize, usize)>, conjugated: Vec<(usize, usize)>) -> Self {
        Self { plain, conjugated }
    }

    pub fn degree(&self) -> usize {
        self.plain.len()
    }

    fn validate(&self, d: usize, t: usize) -> Result<()> {
        if self.plain.len() != self.conjugated.len() {
            return Err(QjlError::MalformedMonomial(format!(
                "{} plain vs {} conjugated factors",
                self.plain.len(),
                self.conjugated.len()
            )));
        }
        if self.plain.len() != t {
            return Err(QjlError::MalformedMonomial(format!(
                "degree {} does not match t={t}",
                self.plain.len()
            )));
        }
        if let Some(&(i, j)) = self
            .plain
            .iter()
            .chain(&self.conjugated)
            .find(|(i, j)| *i == 0 || *j == 0 || *i > d || *j > d)
        {
            return Err(QjlError::MalformedMonomial(format!("index ({i}, {j}) outside 1..={d}")));
        }
        Ok(())
    }

    pub fn evaluate(&self, v: &UnitaryMatrix) -> C64 {
        let m = v.matrix();
        let p: C64 = self.plain.iter().map(|&(i, j)| m[(i - 1, j - 1)]).product();
        let c: C64 = self.conjugated.iter().map(|&(i, j)| m[(i - 1, j - 1)].conj()).product();
        p * c
    }

    /// Every balanced degree-1 monomial on `d × d` matrices (`d⁴` of them).
    pub fn all_degree_one(d: usize) -> Vec<Self> {
        let mut out = Vec::with_capacity(d.pow(4));
        for i in 1..=d {
            for j in 1..=d {
                for k in 1..=d {
                    for l in 1..=d {
                        out.push(Self::new(vec![(i, j)], vec![(k, l)]));
                    }
                }
            }
        }
        out
    }
}

/// Haar expectation of a balanced monomial of degree 1 or 2 by Weingarten
/// calculus: `Σ_{σ,τ} Π_r δ(i_r, i'_{σ(r)}) δ(j_r, j'_{τ(r)}) Wg(στ⁻¹, d)`.
pub fn haar_monomial_expectation(mono: &Monomial, d: usize) -> Result<C64> {
    let t = mono.degree();
    if !(t == 1 || t == 2) {
        return Err(QjlError::MalformedMonomial(format!("Haar value supported for t in {{1, 2}}, got {t}")));
    }
    mono.validate(d, t)?;
    let df = d as f64;
    if t == 1 {
        let (i, j) = mono.plain[0];
        let (k, l) = mono.conjugated[0];
        return Ok(if i == k && j == l { C64::new(1.0 / df, 0.0) } else { ZERO });
    }
    if d == 1 {
        return Ok(ONE);
    }
    let perms: [[usize; 2]; 2] = [[0, 1], [1, 0]];
    let wg_id = 1.0 / (df * df - 1.0);
    let wg_swap = -1.0 / (df * (df * df - 1.0));
    let mut total = 0.0;
    for sigma in &perms {
        let rows_match = (0..2).all(|r| mono.plain[r].0 == mono.conjugated[sigma[r]].0);
        if !rows_match {
            continue;
        }
        for tau in &perms {
            let cols_match = (0..2).all(|r| mono.plain[r].1 == mono.conjugated[tau[r]].1);
            if cols_match {
                total += if sigma == tau { wg_id } else { wg_swap };
            }
        }
    }
    Ok(C64::new(total, 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonomialError {
    /// `|E_design[M] − E_Haar[M]|`.
    pub gap: f64,
    /// `gap · d^t`, the design parameter this monomial certifies.
    pub alpha: f64,
}

pub fn monomial_design_error(design: &FiniteDesign, mono: &Monomial, t: usize) -> Result<MonomialError> {
    let d = design.dim();
    mono.validate(d, t)?;
    let members = design.members()?;
    let avg: C64 = members.iter().map(|v| mono.evaluate(v)).sum::<C64>() / members.len() as f64;
    let haar = haar_monomial_expectation(mono, d)?;
    let gap = (avg - haar).norm();
    Ok(MonomialError { gap, alpha: gap * (d as f64).powi(t as i32) })
}

/// `{I, X, Y, Z}`.
pub fn pauli_group() -> Vec<UnitaryMatrix> {
    let mk = |e: [C64; 4]| UnitaryMatrix::new_unchecked(CMatrix::from_row_major(2, 2, &e).expect("2x2"));
    vec![
        mk([ONE, ZERO, ZERO, ONE]),
        mk([ZERO, ONE, ONE, ZERO]),
        mk([ZERO, -I, I, ZERO]),
        mk([ONE, ZERO, ZERO, -ONE]),
    ]
}

/// The 24 single-qubit Clifford unitaries, one representative per global phase.
pub fn single_qubit_clifford_group() -> Vec<UnitaryMatrix> {
    let h = {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = C64::new(s, 0.0);
        CMatrix::from_row_major(2, 2, &[a, a, a, -a]).expect("2x2")
    };
    let s = CMatrix::from_row_major(2, 2, &[ONE, ZERO, ZERO, I]).expect("2x2");
    let mut found: Vec<CMatrix> = vec![CMatrix::identity(2)];
    let mut frontier = found.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for g in &frontier {
            for gen in [&h, &s] {
                let cand = canonical_phase(gen.matmul(g).expect("2x2"));
                if !found.iter().any(|f| f.sub(&cand).expect("2x2").frobenius_norm() < 1e-9) {
                    found.push(cand.clone());
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }
    found.into_iter().map(UnitaryMatrix::new_unchecked).collect()
}

/// Rescales so the first entry of largest modulus is real and positive.
fn canonical_phase(mut m: CMatrix) -> CMatrix {
    let pivot = m
        .col_major()
        .iter()
        .copied()
        .fold(ZERO, |best, z| if z.norm() > best.norm() + 1e-9 { z } else { best });
    let phase = pivot.conj() / pivot.norm();
    m.scale(phase);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_design(d: usize) -> FiniteDesign {
        FiniteDesign::explicit(vec![UnitaryMatrix::identity(d)]).unwrap()
    }

    fn max_entry_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        a.sub(b).unwrap().col_major().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_design_superop_is_identity() {
        for t in [1, 2] {
            let s = design_moment_superoperator(&identity_design(2), t).unwrap();
            assert_eq!(s.matrix, CMatrix::identity(s.matrix.rows()));
        }
    }

    #[test]
    fn pauli_average_is_exact_one_design() {
        // enumerate the 4 Paulis by hand: M ↦ Tr(M) I/2
        let design = FiniteDesign::explicit(pauli_group()).unwrap();
        let s = design_moment_superoperator(&design, 1).unwrap();
        let m = CMatrix::from_row_major(2, 2, &[C64::new(0.3, 0.1), C64::new(2.0, -1.0), I, C64::new(-0.7, 0.0)]).unwrap();
        let out = s.apply(&m).unwrap();
        let mut expected = CMatrix::identity(2);
        expected.scale(m.trace() / 2.0);
        assert!(max_entry_diff(&out, &expected) < 1e-12);
        assert!(estimate_tpe_lambda(&design, 1).unwrap() < 1e-10);
    }

    #[test]
    fn superops_are_trace_preserving() {
        let mut rng = RngStream::new(1, 0);
        let us: Vec<_> = (0..5).map(|_| sample_haar_unitary(3, &mut rng).unwrap()).collect();
        let design = FiniteDesign::explicit(us).unwrap();
        for t in [1, 2] {
            assert!(design_moment_superoperator(&design, t).unwrap().trace_defect() < 1e-8);
            assert!(haar_moment_superoperator(3, t).unwrap().trace_defect() < 1e-8);
        }
    }

    #[test]
    fn haar_t1_on_projector() {
        let h = haar_moment_superoperator(2, 1).unwrap();
        let m = CMatrix::from_row_major(2, 2, &[ONE, ZERO, ZERO, ZERO]).unwrap();
        let out = h.apply(&m).unwrap();
        let mut half = CMatrix::identity(2);
        half.scale(C64::new(0.5, 0.0));
        assert!(max_entry_diff(&out, &half) < 1e-15);
        // Monte-Carlo oracle
        let mc = haar_moment_superoperator_monte_carlo(2, 1, 20_000, &mut RngStream::new(2, 0)).unwrap();
        assert!(max_entry_diff(&mc.apply(&m).unwrap(), &half) < 0.02);
    }

    #[test]
    fn haar_t2_fixes_identity_and_swap() {
        for d in [2, 3, 4] {
            let h = haar_moment_superoperator(d, 2).unwrap();
            let id = CMatrix::identity(d * d);
            assert!(max_entry_diff(&h.apply(&id).unwrap(), &id) < 1e-12);
            let f = swap_operator(d);
            assert!(max_entry_diff(&h.apply(&f).unwrap(), &f) < 1e-12);
            // a projector: Φ² = Φ
            let sq = h.matrix.matmul(&h.matrix).unwrap();
            assert!(max_entry_diff(&sq, &h.matrix) < 1e-12);
        }
    }

    #[test]
    fn haar_t2_formula_matches_monte_carlo_at_d2() {
        let exact = haar_moment_superoperator(2, 2).unwrap();
        let mc = haar_moment_superoperator_monte_carlo(2, 2, 1_000_000, &mut RngStream::new(3, 0)).unwrap();
        let diff = max_entry_diff(&exact.matrix, &mc.matrix);
        // entries are bounded by 1, so the per-entry standard error is ≤ 1e-3
        assert!(diff < 5e-3, "max entry gap {diff}");
    }

    #[test]
    fn unsupported_order_and_size_guard() {
        assert!(matches!(haar_moment_superoperator(2, 3), Err(QjlError::InvalidParameter(_))));
        assert!(matches!(haar_moment_superoperator(8, 2), Err(QjlError::SizeGuard(_))));
        let big = identity_design(32);
        assert!(matches!(design_moment_superoperator(&big, 2), Err(QjlError::SizeGuard(_))));
    }

    #[test]
    fn identity_design_lambda_is_one() {
        let l = estimate_tpe_lambda(&identity_design(2), 1).unwrap();
        assert!((l - 1.0).abs() < 1e-10, "lambda {l}");
    }

    #[test]
    fn clifford_group_is_exact_two_design() {
        let cl = single_qubit_clifford_group();
        assert_eq!(cl.len(), 24);
        let design = FiniteDesign::explicit(cl).unwrap();
        assert!(estimate_tpe_lambda(&design, 2).unwrap() < 1e-9);
        // Paulis are not a 2-design
        let pauli = FiniteDesign::explicit(pauli_group()).unwrap();
        assert!(estimate_tpe_lambda(&pauli, 2).unwrap() > 0.1);
    }

    #[test]
    fn iteration_squares_lambda() {
        let mut rng = RngStream::new(4, 0);
        let us: Vec<_> = (0..4).map(|_| sample_haar_unitary(2, &mut rng).unwrap()).collect();
        let d = FiniteDesign::explicit(us).unwrap();
        let d2 = iterate_design(&d, 2).unwrap();
        assert_eq!(d2.cardinality(), Some(16));
        let l1 = estimate_tpe_lambda(&d, 1).unwrap();
        let l2 = estimate_tpe_lambda(&d2, 1).unwrap();
        assert!(l2 <= l1 * l1 + 1e-8, "{l2} > {l1}^2");
        assert!(l1 <= 2.0);
    }

    #[test]
    fn iterating_identity_and_guards() {
        let d = iterate_design(&identity_design(2), 5).unwrap();
        let FiniteDesign::Explicit { unitaries, .. } = &d else { panic!() };
        assert!(unitaries.iter().all(|u| u.matrix() == &CMatrix::identity(2)));
        let four = FiniteDesign::explicit(pauli_group()).unwrap();
        assert!(matches!(iterate_design(&four, 8), Err(QjlError::SizeGuard(_))));
        assert!(iterate_design(&four, 0).is_err());
    }

    #[test]
    fn circuit_design_iteration_concatenates() {
        let d = FiniteDesign::circuits(3, 4, 9).unwrap();
        let d3 = iterate_design(&d, 3).unwrap();
        let FiniteDesign::Circuits(c) = &d3 else { panic!() };
        assert_eq!(c.member(0).unwrap().size(), 12);
        assert_eq!(c.member(5).unwrap(), c.member(5).unwrap());
        assert_ne!(c.member(5).unwrap(), c.member(6).unwrap());
        assert!(design_moment_superoperator(&d, 1).is_err());
    }

    #[test]
    fn monomial_errors() {
        let pauli = FiniteDesign::explicit(pauli_group()).unwrap();
        for mono in Monomial::all_degree_one(2) {
            assert!(monomial_design_error(&pauli, &mono, 1).unwrap().gap < 1e-10);
        }
        let id = identity_design(2);
        let e = monomial_design_error(&id, &Monomial::new(vec![(1, 1)], vec![(1, 1)]), 1).unwrap();
        assert!((e.gap - 0.5).abs() < 1e-15);
        assert!((e.alpha - 1.0).abs() < 1e-15);
        // Haar value of u11·conj(u22) is zero, so the gap is the design average
        let off = Monomial::new(vec![(1, 1)], vec![(2, 2)]);
        assert_eq!(haar_monomial_expectation(&off, 2).unwrap(), ZERO);
        assert!((monomial_design_error(&id, &off, 1).unwrap().gap - 1.0).abs() < 1e-15);
    }

    #[test]
    fn malformed_monomials() {
        let id = identity_design(2);
        let bad_len = Monomial::new(vec![(1, 1)], vec![]);
        assert!(matches!(monomial_design_error(&id, &bad_len, 1), Err(QjlError::MalformedMonomial(_))));
        let out_of_range = Monomial::new(vec![(3, 1)], vec![(1, 1)]);
        assert!(matches!(monomial_design_error(&id, &out_of_range, 1), Err(QjlError::MalformedMonomial(_))));
        let wrong_t = Monomial::new(vec![(1, 1)], vec![(1, 1)]);
        assert!(matches!(monomial_design_error(&id, &wrong_t, 2), Err(QjlError::MalformedMonomial(_))));
    }

    #[test]
    fn weingarten_degree_two_matches_monte_carlo() {
        let monos = [
            Monomial::new(vec![(1, 1), (1, 1)], vec![(1, 1), (1, 1)]),
            Monomial::new(vec![(1, 1), (2, 2)], vec![(1, 1), (2, 2)]),
            Monomial::new(vec![(1, 1), (2, 2)], vec![(1, 2), (2, 1)]),
            Monomial::new(vec![(1, 2), (2, 1)], vec![(1, 2), (2, 1)]),
        ];
        let mut rng = RngStream::new(5, 0);
        let n = 200_000;
        let mut sums = [ZERO; 4];
        for _ in 0..n {
            let u = sample_haar_unitary(3, &mut rng).unwrap();
            for (s, m) in sums.iter_mut().zip(&monos) {
                *s += m.evaluate(&u);
            }
        }
        for (s, m) in sums.iter().zip(&monos) {
            let mc = s / n as f64;
            let exact = haar_monomial_expectation(m, 3).unwrap();
            assert!((mc - exact).norm() < 4e-3, "{m:?}: mc {mc} exact {exact}");
        }
        // E|u11|⁴ = 2/(d(d+1))
        let e = haar_monomial_expectation(&monos[0], 3).unwrap();
        assert!((e.re - 2.0 / 12.0).abs() < 1e-15);
    }
}
