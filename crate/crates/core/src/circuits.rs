//! Local random quantum circuits on a line of qubits.
//!
//! Qubit 1 is the most significant bit of a basis index. A gate on pair `p`
//! acts on qubits `(p, p+1)`; its 4×4 matrix is written in the basis
//! `|q_p q_{p+1}⟩` with `q_p` the high bit.

use serde::{Deserialize, Serialize};

use crate::error::{QjlError, Result};
use crate::linalg::{check_dims, CMatrix, StateVector, UnitaryAction, UnitaryMatrix, C64};
use crate::sampling::{sample_haar_unitary, RngStream};

/// Largest qubit count for which [`circuit_to_unitary`] materializes a matrix.
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    /// 1-based index of the left qubit of the adjacent pair.
    pub pair: usize,
    /// Row-major 4×4 unitary.
    pub matrix: [C64; 16],
}

impl Gate {
    pub fn new(pair: usize, u: &UnitaryMatrix) -> Result<Self> {
        check_dims(4, u.dim())?;
        let rm = u.matrix().row_major();
        let mut matrix = [C64::new(0.0, 0.0); 16];
        matrix.copy_from_slice(&rm);
        Ok(Self { pair, matrix })
    }

    pub fn unitary(&self) -> UnitaryMatrix {
        UnitaryMatrix::new_unchecked(CMatrix::from_row_major(4, 4, &self.matrix).expect("4x4"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateCircuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl GateCircuit {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if num_qubits < 2 {
            return Err(QjlError::InvalidParameter(format!(
                "circuit needs at least 2 qubits, got {num_qubits}"
            )));
        }
        if num_qubits >= usize::BITS as usize {
            return Err(QjlError::InvalidParameter(format!("{num_qubits} qubits")));
        }
        for g in &gates {
            if g.pair == 0 || g.pair >= num_qubits {
                return Err(QjlError::InvalidParameter(format!(
                    "gate pair {} outside 1..{num_qubits}",
                    g.pair
                )));
            }
            let dev = g.unitary().deviation();
            if !(dev <= crate::linalg::UNITARY_TOL * 4.0) {
                return Err(QjlError::NotUnitary { deviation: dev });
            }
        }
        Ok(Self { num_qubits, gates })
    }

    pub fn empty(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits, Vec::new())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        check_dims(self.num_qubits, other.num_qubits)?;
        let mut gates = self.gates.clone();
        gates.extend_from_slice(&other.gates);
        Ok(Self { num_qubits: self.num_qubits, gates })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(CircuitRecord::from(self)).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let rec: CircuitRecord = serde_json::from_value(v.clone())
            .map_err(|e| QjlError::InvalidParameter(format!("circuit json: {e}")))?;
        rec.try_into()
    }
}

/// Serialized form: `{num_qubits, gates: [{pair, matrix: [[re, im] × 16]}]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitRecord {
    num_qubits: usize,
    gates: Vec<GateRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateRecord {
    pair: usize,
    matrix: Vec<[f64; 2]>,
}

impl From<&GateCircuit> for CircuitRecord {
    fn from(c: &GateCircuit) -> Self {
        Self {
            num_qubits: c.num_qubits,
            gates: c
                .gates
                .iter()
                .map(|g| GateRecord { pair: g.pair, matrix: g.matrix.iter().map(|z| [z.re, z.im]).collect() })
                .collect(),
        }
    }
}

impl TryFrom<CircuitRecord> for GateCircuit {
    type Error = QjlError;

    fn try_from(rec: CircuitRecord) -> Result<Self> {
        let mut gates = Vec::with_capacity(rec.gates.len());
        for g in rec.gates {
            if g.matrix.len() != 16 {
                return Err(QjlError::DimensionMismatch { expected: 16, got: g.matrix.len() });
            }
            let mut matrix = [C64::new(0.0, 0.0); 16];
            for (m, [re, im]) in matrix.iter_mut().zip(g.matrix) {
                *m = C64::new(re, im);
            }
            gates.push(Gate { pair: g.pair, matrix });
        }
        GateCircuit::new(rec.num_qubits, gates)
    }
}

/// `s` gates, each on a uniformly random adjacent pair with a Haar-random
/// two-qubit unitary.
pub fn generate_local_random_circuit(q: usize, s: usize, rng: &mut RngStream) -> Result<GateCircuit> {
    if q < 2 {
        return Err(QjlError::InvalidParameter(format!("circuit needs at least 2 qubits, got {q}")));
    }
    let mut gates = Vec::with_capacity(s);
    for _ in 0..s {
        let pair = rng.index(q - 1) + 1;
        let u = sample_haar_unitary(4, rng)?;
        gates.push(Gate::new(pair, &u)?);
    }
    Ok(GateCircuit { num_qubits: q, gates })
}

/// Applies the gates in order without forming the `2^q`-dimensional matrix.
pub fn apply_circuit(c: &GateCircuit, v: &StateVector) -> Result<StateVector> {
    check_dims(c.dim(), v.dim())?;
    let mut out = v.clone();
    apply_circuit_in_place(c, out.amplitudes_mut());
    Ok(out)
}

pub(crate) fn apply_circuit_in_place(c: &GateCircuit, amps: &mut [C64]) {
    apply_gates_in_place(c.num_qubits, &c.gates, amps);
}

/// Applies a run of gates of a `q`-qubit circuit to raw amplitudes.
pub(crate) fn apply_gates_in_place(q: usize, gates: &[Gate], amps: &mut [C64]) {
    for g in gates {
        let hi = 1usize << (q - g.pair);
        let lo = hi >> 1;
        apply_two_qubit(&g.matrix, hi, lo, amps);
    }
}

#[inline]
fn apply_two_qubit(m: &[C64; 16], hi: usize, lo: usize, amps: &mut [C64]) {
    let n = amps.len();
    // hi = 2·lo, so indices with both bits clear come in runs of length lo
    let block = hi << 1;
    let mut base = 0;
    while base < n {
        for i00 in base..base + lo {
            let (i01, i10, i11) = (i00 + lo, i00 + hi, i00 + hi + lo);
            let a = [amps[i00], amps[i01], amps[i10], amps[i11]];
            for (r, idx) in [i00, i01, i10, i11].into_iter().enumerate() {
                let row = &m[4 * r..4 * r + 4];
                amps[idx] = row[0] * a[0] + row[1] * a[1] + row[2] * a[2] + row[3] * a[3];
            }
        }
        base += block;
    }
}

/// Dense `2^q × 2^q` matrix of the circuit.
pub fn circuit_to_unitary(c: &GateCircuit) -> Result<UnitaryMatrix> {
    if c.num_qubits > MAX_DENSE_QUBITS {
        return Err(QjlError::SizeGuard(format!(
            "{} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}",
            c.num_qubits
        )));
    }
    let d = c.dim();
    let mut m = CMatrix::identity(d);
    for j in 0..d {
        apply_circuit_in_place(c, m.col_mut(j));
    }
    Ok(UnitaryMatrix::new_unchecked(m))
}

impl UnitaryAction for GateCircuit {
    fn dim(&self) -> usize {
        GateCircuit::dim(self)
    }

    fn apply(&self, v: &StateVector) -> Result<StateVector> {
        apply_circuit(self, v)
    }
}
