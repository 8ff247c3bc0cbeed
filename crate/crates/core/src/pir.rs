//! Two-message quantum private information retrieval built on the quantum
//! JL transform.
//!
//! Bob holds `x ∈ [m]`, Alice holds `S ⊆ [m]` with `|S| ≤ n`. Bob applies a
//! public unitary `U` to `|x⟩`, measures a block name `reps` times and sends
//! the names. Alice returns the normalized blocks of `U|S⟩` for those names.
//! Bob SWAP-tests each pair and declares `x ∈ S` when the success fraction
//! exceeds `1/2 + 0.2/n`. Elements of `[m]` and block names are 1-based.

use serde::{Deserialize, Serialize};

use crate::circuits::{generate_local_random_circuit, GateCircuit};
use crate::error::{QjlError, Result};
use crate::jl::{collapse, measure_image};
use crate::linalg::{
    check_dims, inner_product, l1_distance, uniform_distribution, BlockStructure, StateVector,
    UnitaryAction, UnitaryMatrix, C64,
};
use crate::sampling::{sample_haar_unitary, RngStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PirParams {
    /// Universe size, a power of two.
    pub m: usize,
    /// Largest allowed `|S|`.
    pub n: usize,
    pub d2: usize,
    /// JL accuracy used for the overlap-guarantee check.
    pub eps: f64,
    /// Repetitions per `n²`.
    pub c_rep: usize,
}

impl PirParams {
    pub fn new(m: usize, n: usize, d2: usize, eps: f64, c_rep: usize) -> Result<Self> {
        let p = Self { m, n, d2, eps, c_rep };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.m.is_power_of_two() || self.m < 4 {
            return Err(QjlError::InvalidParameter(format!("universe size {} must be a power of two >= 4", self.m)));
        }
        BlockStructure::new(self.m, self.d2)?;
        if self.n == 0 || self.c_rep == 0 {
            return Err(QjlError::InvalidParameter("n and c_rep must be at least 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(QjlError::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }

    pub fn reps(&self) -> usize {
        self.c_rep * self.n * self.n
    }

    pub fn threshold(&self) -> f64 {
        0.5 + 0.2 / self.n as f64
    }

    pub fn blocks(&self) -> BlockStructure {
        BlockStructure::new(self.m, self.d2).expect("validated")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitaryKind {
    Identity,
    Haar,
    Circuit,
}

/// The public coin: enough to rebuild `U` on both sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitaryDescriptor {
    pub kind: UnitaryKind,
    pub seed: u64,
    /// Gate count, for circuit unitaries.
    pub circuit_size: usize,
}

impl UnitaryDescriptor {
    pub fn identity() -> Self {
        Self { kind: UnitaryKind::Identity, seed: 0, circuit_size: 0 }
    }

    pub fn haar(seed: u64) -> Self {
        Self { kind: UnitaryKind::Haar, seed, circuit_size: 0 }
    }

    pub fn circuit(seed: u64, size: usize) -> Self {
        Self { kind: UnitaryKind::Circuit, seed, circuit_size: size }
    }

    /// Bits needed to send the descriptor: a 64-bit seed, plus a 64-bit
    /// length for circuits.
    pub fn bits(&self) -> u64 {
        match self.kind {
            UnitaryKind::Identity => 0,
            UnitaryKind::Haar => 64,
            UnitaryKind::Circuit => 128,
        }
    }

    pub fn realize(&self, m: usize) -> Result<PublicUnitary> {
        match self.kind {
            UnitaryKind::Identity => Ok(PublicUnitary::Identity(m)),
            UnitaryKind::Haar => Ok(PublicUnitary::Dense(sample_haar_unitary(m, &mut RngStream::new(self.seed, 0))?)),
            UnitaryKind::Circuit => {
                let q = m.trailing_zeros() as usize;
                let c = generate_local_random_circuit(q, self.circuit_size, &mut RngStream::new(self.seed, 0))?;
                Ok(PublicUnitary::Circuit(c))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum PublicUnitary {
    Identity(usize),
    Dense(UnitaryMatrix),
    Circuit(GateCircuit),
}

impl UnitaryAction for PublicUnitary {
    fn dim(&self) -> usize {
        match self {
            Self::Identity(d) => *d,
            Self::Dense(u) => u.dim(),
            Self::Circuit(c) => c.dim(),
        }
    }

    fn apply(&self, v: &StateVector) -> Result<StateVector> {
        match self {
            Self::Identity(d) => {
                check_dims(*d, v.dim())?;
                Ok(v.clone())
            }
            Self::Dense(u) => u.apply(v),
            Self::Circuit(c) => c.apply(v),
        }
    }
}

/// `|S⟩ = |S|^{-1/2} Σ_{y∈S} |y⟩`.
pub fn membership_state(set: &[usize], m: usize) -> Result<StateVector> {
    if set.is_empty() {
        return Err(QjlError::InvalidParameter("membership set must be nonempty".into()));
    }
    let mut v = StateVector::zeros(m);
    for &y in set {
        if y == 0 || y > m {
            return Err(QjlError::InvalidParameter(format!("element {y} outside 1..={m}")));
        }
        v.amplitudes_mut()[y - 1] = C64::new(1.0, 0.0);
    }
    let count = v.amplitudes().iter().filter(|z| z.re != 0.0).count();
    v.scale(1.0 / (count as f64).sqrt());
    Ok(v)
}

fn check_element(x: usize, params: &PirParams) -> Result<()> {
    if x == 0 || x > params.m {
        return Err(QjlError::InvalidParameter(format!("element {x} outside 1..={}", params.m)));
    }
    Ok(())
}

fn check_set(set: &[usize], params: &PirParams) -> Result<()> {
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() > params.n {
        return Err(QjlError::InvalidParameter(format!("|S| = {} exceeds n = {}", sorted.len(), params.n)));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BobMeasurements {
    pub block_names: Vec<usize>,
    pub collapsed_states: Vec<StateVector>,
}

/// Bob's first step: `reps` independent block measurements of `U|x⟩`.
pub fn bob_phase1<U: UnitaryAction + ?Sized>(
    x: usize,
    u: &U,
    params: &PirParams,
    rng: &mut RngStream,
) -> Result<BobMeasurements> {
    params.validate()?;
    check_element(x, params)?;
    check_dims(params.m, u.dim())?;
    let bs = params.blocks();
    let image = u.apply(&StateVector::basis(params.m, x)?)?;
    let reps = params.reps();
    let mut block_names = Vec::with_capacity(reps);
    let mut collapsed_states = Vec::with_capacity(reps);
    for _ in 0..reps {
        let o = measure_image(&image, &bs, rng)?;
        block_names.push(o.block_index);
        collapsed_states.push(o.collapsed_state);
    }
    Ok(BobMeasurements { block_names, collapsed_states })
}

/// Alice's reply: the normalized block of `U|S⟩` for each received name, or
/// `None` (a flagged null state) where that block of `U|S⟩` is empty.
pub fn alice_respond<U: UnitaryAction + ?Sized>(
    set: &[usize],
    u: &U,
    block_names: &[usize],
    params: &PirParams,
) -> Result<Vec<Option<StateVector>>> {
    params.validate()?;
    check_set(set, params)?;
    check_dims(params.m, u.dim())?;
    let bs = params.blocks();
    let image = u.apply(&membership_state(set, params.m)?)?;
    block_names.iter().map(|&j| collapse(&image, j, &bs)).collect()
}

/// Probability that a SWAP test on `a`, `b` reports success: `½ + |⟨a|b⟩|²/2`.
pub fn swap_success_probability(a: &StateVector, b: &StateVector) -> Result<f64> {
    for s in [a, b] {
        if !s.is_normalized() {
            return Err(QjlError::InvalidParameter(format!("SWAP test input has norm {}", s.norm())));
        }
    }
    let ov = inner_product(a, b)?;
    Ok(0.5 + ov.norm_sqr() / 2.0)
}

/// One SWAP test, sampled from the exact success probability. A null input
/// has zero overlap with everything.
pub fn swap_test(a: Option<&StateVector>, b: &StateVector, rng: &mut RngStream) -> Result<bool> {
    let p = match a {
        Some(a) => swap_success_probability(a, b)?,
        None => 0.5,
    };
    Ok(rng.bernoulli(p))
}

/// `true` iff the success fraction is strictly above `1/2 + 0.2/n`.
pub fn bob_decide(outcomes: &[bool], n: usize) -> Result<bool> {
    if outcomes.is_empty() {
        return Err(QjlError::InvalidParameter("no SWAP outcomes to decide on".into()));
    }
    if n == 0 {
        return Err(QjlError::InvalidParameter("n must be at least 1".into()));
    }
    let frac = outcomes.iter().filter(|b| **b).count() as f64 / outcomes.len() as f64;
    Ok(frac > 0.5 + 0.2 / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MessageAccounting {
    /// Descriptor bits plus `reps · log2(m/d2)` bits of block names.
    pub bob_bits: u64,
    /// `reps · log2(d2)` qubits.
    pub alice_qubits: u64,
}

pub fn message_accounting(params: &PirParams, descriptor: &UnitaryDescriptor) -> MessageAccounting {
    let reps = params.reps() as u64;
    let name_bits = (params.m / params.d2).trailing_zeros() as u64;
    let block_qubits = params.d2.next_power_of_two().trailing_zeros() as u64;
    MessageAccounting {
        bob_bits: descriptor.bits() + reps * name_bits,
        alice_qubits: reps * block_qubits,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolTranscript {
    pub unitary_descriptor: UnitaryDescriptor,
    pub block_names: Vec<usize>,
    pub alice_states: Vec<Option<StateVector>>,
    pub swap_outcomes: Vec<bool>,
    /// `⟨x'|S'⟩` per repetition; zero where Alice's state is null.
    pub overlaps: Vec<C64>,
    pub success_fraction: f64,
    pub decision: bool,
    pub accounting: MessageAccounting,
}

/// Executes the three protocol steps. Deterministic in `master_seed`: the
/// measurement and SWAP randomness come from separate substreams.
pub fn run_protocol(
    set: &[usize],
    x: usize,
    params: &PirParams,
    descriptor: UnitaryDescriptor,
    master_seed: u64,
) -> Result<ProtocolTranscript> {
    let u = descriptor.realize(params.m)?;
    run_protocol_with(set, x, params, descriptor, &u, master_seed)
}

/// [`run_protocol`] with an already realized unitary.
pub fn run_protocol_with(
    set: &[usize],
    x: usize,
    params: &PirParams,
    descriptor: UnitaryDescriptor,
    u: &PublicUnitary,
    master_seed: u64,
) -> Result<ProtocolTranscript> {
    params.validate()?;
    check_set(set, params)?;
    let base = RngStream::new(master_seed, 0);
    let mut bob_rng = base.substream(1);
    let mut swap_rng = base.substream(2);
    let bob = bob_phase1(x, u, params, &mut bob_rng)?;
    let alice_states = alice_respond(set, u, &bob.block_names, params)?;
    let mut swap_outcomes = Vec::with_capacity(alice_states.len());
    let mut overlaps = Vec::with_capacity(alice_states.len());
    for (a, b) in alice_states.iter().zip(&bob.collapsed_states) {
        overlaps.push(match a {
            Some(a) => inner_product(b, a)?,
            None => C64::new(0.0, 0.0),
        });
        swap_outcomes.push(swap_test(a.as_ref(), b, &mut swap_rng)?);
    }
    let success_fraction = swap_outcomes.iter().filter(|b| **b).count() as f64 / swap_outcomes.len() as f64;
    let decision = bob_decide(&swap_outcomes, params.n)?;
    Ok(ProtocolTranscript {
        unitary_descriptor: descriptor,
        block_names: bob.block_names,
        alice_states,
        swap_outcomes,
        overlaps,
        success_fraction,
        decision,
        accounting: message_accounting(params, &descriptor),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapGuarantee {
    /// Repetitions where `|⟨x'|S'⟩ − ⟨x|S⟩| ≤ 8ε`.
    pub preserved_reps: usize,
    /// Of those, how many meet `≥ 0.9 n^{-1/2}` (x ∈ S) or `≤ 0.1 n^{-1/2}` (x ∉ S).
    pub satisfied: usize,
}

/// Checks the overlap thresholds on the repetitions where the JL layer
/// preserved the inner product to within `8ε`.
pub fn overlap_guarantee(t: &ProtocolTranscript, set: &[usize], x: usize, params: &PirParams) -> Result<OverlapGuarantee> {
    let reference = inner_product(&StateVector::basis(params.m, x)?, &membership_state(set, params.m)?)?;
    let member = reference.norm() > 0.0;
    let scale = 1.0 / (params.n as f64).sqrt();
    let mut out = OverlapGuarantee { preserved_reps: 0, satisfied: 0 };
    for (ov, alice) in t.overlaps.iter().zip(&t.alice_states) {
        if alice.is_none() || (ov - reference).norm() > 8.0 * params.eps {
            continue;
        }
        out.preserved_reps += 1;
        let ok = if member { ov.norm() >= 0.9 * scale } else { ov.norm() <= 0.1 * scale };
        out.satisfied += ok as usize;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrivacyProbe {
    pub x: usize,
    /// ℓ1 distance of the empirical block-name distribution from uniform.
    pub empirical_l1: f64,
    /// ℓ1 distance of the exact Born distribution from uniform.
    pub exact_l1: f64,
    /// Expected ℓ1 error of the empirical distribution from sampling alone.
    pub sampling_noise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrivacyReport {
    /// Max over probes of the empirical ℓ1 distance.
    pub metric: f64,
    pub runs_per_probe: usize,
    pub probes: Vec<PrivacyProbe>,
}

/// How far Bob's block names stray from uniform, for each probe element,
/// estimated from `runs` block measurements of `U|x⟩`.
pub fn privacy_metric(
    params: &PirParams,
    descriptor: UnitaryDescriptor,
    probes: &[usize],
    runs: usize,
    master_seed: u64,
) -> Result<PrivacyReport> {
    let u = descriptor.realize(params.m)?;
    privacy_metric_with(params, &u, probes, runs, master_seed)
}

pub fn privacy_metric_with(
    params: &PirParams,
    u: &PublicUnitary,
    probes: &[usize],
    runs: usize,
    master_seed: u64,
) -> Result<PrivacyReport> {
    params.validate()?;
    if probes.is_empty() || runs == 0 {
        return Err(QjlError::InvalidParameter("privacy metric needs probes and runs".into()));
    }
    let bs = params.blocks();
    let uniform = uniform_distribution(bs.num_blocks());
    let mut out = Vec::with_capacity(probes.len());
    for (k, &x) in probes.iter().enumerate() {
        check_element(x, params)?;
        let image = u.apply(&StateVector::basis(params.m, x)?)?;
        let exact = crate::linalg::block_norms_sqr(&image, &bs)?;
        let total: f64 = exact.iter().sum();
        let exact: Vec<f64> = exact.iter().map(|p| p / total).collect();
        let mut rng = RngStream::new(master_seed, k as u64);
        let mut counts = vec![0usize; bs.num_blocks()];
        for _ in 0..runs {
            counts[crate::jl::sample_block(&exact, &mut rng) - 1] += 1;
        }
        let empirical: Vec<f64> = counts.iter().map(|c| *c as f64 / runs as f64).collect();
        let sampling_noise = exact
            .iter()
            .map(|p| (2.0 * p * (1.0 - p) / (std::f64::consts::PI * runs as f64)).sqrt())
            .sum();
        out.push(PrivacyProbe {
            x,
            empirical_l1: l1_distance(&empirical, &uniform)?,
            exact_l1: l1_distance(&exact, &uniform)?,
            sampling_noise,
        });
    }
    let metric = out.iter().map(|p| p.empirical_l1).fold(0.0, f64::max);
    Ok(PrivacyReport { metric, runs_per_probe: runs, probes: out })
}
