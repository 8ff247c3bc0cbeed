//! Experiment configuration: a strict JSON schema plus command-line overrides.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{QjlError, Result};
use crate::linalg::BlockStructure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ChiTails,
    HaarTails,
    DesignTails,
    Moments,
    DesignQuality,
    Params,
    JlDemo,
    BlockDist,
    Pir,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Self::ChiTails,
        Self::HaarTails,
        Self::DesignTails,
        Self::Moments,
        Self::DesignQuality,
        Self::Params,
        Self::JlDemo,
        Self::BlockDist,
        Self::Pir,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ChiTails => "chi-tails",
            Self::HaarTails => "haar-tails",
            Self::DesignTails => "design-tails",
            Self::Moments => "moments",
            Self::DesignQuality => "design-quality",
            Self::Params => "params",
            Self::JlDemo => "jl-demo",
            Self::BlockDist => "block-dist",
            Self::Pir => "pir",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for result files; falls back to `QJL_OUT_DIR`, then `.`.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// `json` writes the JSON record only; `csv` writes the CSV summary too.
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub output: OutputSpec,
    /// Worker threads; `None` uses the rayon default.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

/// Command-line values that replace config fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| QjlError::InvalidParameter(format!("config: {e}")))
    }

    pub fn apply_overrides(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        if let Some(out) = &o.out {
            self.output.dir = Some(out.clone());
        }
        if let Some(trials) = o.trials {
            let key = trials_key(self.experiment).ok_or_else(|| {
                QjlError::InvalidParameter(format!("{} has no trials parameter", self.experiment.name()))
            })?;
            let obj = self
                .params
                .as_object_mut()
                .ok_or_else(|| QjlError::InvalidParameter("params must be an object".into()))?;
            obj.insert(key.to_string(), trials.into());
        }
        Ok(())
    }

    /// Parses and checks `params`, returning them with defaults filled in.
    pub fn resolved_params(&self) -> Result<ExperimentParams> {
        if self.workers == Some(0) {
            return Err(QjlError::InvalidParameter("workers must be at least 1".into()));
        }
        let p = match self.experiment {
            Experiment::ChiTails => ExperimentParams::ChiTails(parse(&self.params)?),
            Experiment::HaarTails => ExperimentParams::HaarTails(parse(&self.params)?),
            Experiment::DesignTails => ExperimentParams::DesignTails(parse(&self.params)?),
            Experiment::Moments => ExperimentParams::Moments(parse(&self.params)?),
            Experiment::DesignQuality => ExperimentParams::DesignQuality(parse(&self.params)?),
            Experiment::Params => ExperimentParams::Params(parse(&self.params)?),
            Experiment::JlDemo => ExperimentParams::JlDemo(parse(&self.params)?),
            Experiment::BlockDist => ExperimentParams::BlockDist(parse(&self.params)?),
            Experiment::Pir => ExperimentParams::Pir(parse(&self.params)?),
        };
        p.validate()?;
        Ok(p)
    }
}

/// The params key that `--trials` replaces.
pub fn trials_key(e: Experiment) -> Option<&'static str> {
    match e {
        Experiment::ChiTails | Experiment::HaarTails | Experiment::DesignTails | Experiment::Moments => Some("trials"),
        Experiment::JlDemo => Some("unitaries"),
        Experiment::BlockDist => Some("samples"),
        Experiment::Pir => Some("runs"),
        Experiment::DesignQuality | Experiment::Params => None,
    }
}

fn parse<T: DeserializeOwned>(v: &serde_json::Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| QjlError::InvalidParameter(format!("params: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentParams {
    ChiTails(ChiTailsParams),
    HaarTails(HaarTailsParams),
    DesignTails(DesignTailsParams),
    Moments(MomentsParams),
    DesignQuality(DesignQualityParams),
    Params(ParamsTable),
    JlDemo(JlDemoParams),
    BlockDist(BlockDistParams),
    Pir(PirExperimentParams),
}

impl ExperimentParams {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ChiTails(p) => {
                nonempty("cases", p.cases.len())?;
                for c in &p.cases {
                    at_least("n", c.n, 1)?;
                    positive("eps", c.eps)?;
                }
                at_least("trials", p.trials, crate::concentration::MIN_TAIL_TRIALS)
            }
            Self::HaarTails(p) => {
                blocks(p.d1, p.d2)?;
                block_index(p.block, p.d1 / p.d2)?;
                positive("eps", p.eps)?;
                at_least("trials", p.trials, crate::concentration::MIN_TAIL_TRIALS)?;
                at_least("moment_trials", p.moment_trials, crate::concentration::MIN_MOMENT_TRIALS)
            }
            Self::DesignTails(p) => {
                at_least("num_qubits", p.num_qubits as u64, 2)?;
                if p.num_qubits > 30 {
                    return Err(QjlError::InvalidParameter("num_qubits must be at most 30".into()));
                }
                power_of_two("d2", p.d2)?;
                blocks(1 << p.num_qubits, p.d2)?;
                positive("eps", p.eps)?;
                nonempty("sizes", p.sizes.len())?;
                at_least("trials", p.trials, crate::concentration::MIN_TAIL_TRIALS)
            }
            Self::Moments(p) => {
                blocks(p.d1, p.d2)?;
                nonempty("m_values", p.m_values.len())?;
                for &m in &p.m_values {
                    if m == 0 || m > crate::concentration::MAX_EMPIRICAL_M {
                        return Err(QjlError::InvalidParameter(format!(
                            "m must lie in 1..={}, got {m}",
                            crate::concentration::MAX_EMPIRICAL_M
                        )));
                    }
                }
                at_least("trials", p.trials, crate::concentration::MIN_MOMENT_TRIALS)?;
                for g in &p.markov_grid {
                    blocks_f(g.d1, g.d2)?;
                    positive("eps", g.eps)?;
                    at_least("m", g.m as u64, 1)?;
                }
                Ok(())
            }
            Self::DesignQuality(p) => {
                at_least("random_design_size", p.random_design_size as u64, 1)?;
                at_least("monte_carlo_samples", p.monte_carlo_samples as u64, 1)
            }
            Self::Params(p) => {
                nonempty("cases", p.cases.len())?;
                for c in &p.cases {
                    blocks_f(c.d1, c.d2)?;
                    if !(c.eps > 0.0 && c.eps < 1.0) || !(c.lambda0 > 0.0 && c.lambda0 < 1.0) {
                        return Err(QjlError::InvalidParameter("eps and lambda0 must lie in (0, 1)".into()));
                    }
                    at_least("base_size", c.base_size, 1)?;
                }
                Ok(())
            }
            Self::JlDemo(p) => {
                blocks(p.d1, p.d2)?;
                if p.unitary == UnitaryChoice::Circuit {
                    power_of_two("d1", p.d1)?;
                    power_of_two("d2", p.d2)?;
                }
                at_least("n_states", p.n_states as u64, 1)?;
                positive("eps", p.eps)?;
                at_least("unitaries", p.unitaries, 1)?;
                Ok(())
            }
            Self::BlockDist(p) => {
                blocks(p.d1, p.d2)?;
                if p.unitary == UnitaryChoice::Circuit {
                    power_of_two("d1", p.d1)?;
                    power_of_two("d2", p.d2)?;
                }
                if p.basis_state == 0 || p.basis_state > p.d1 {
                    return Err(QjlError::InvalidParameter(format!("basis_state must lie in 1..={}", p.d1)));
                }
                at_least("samples", p.samples, 1)
            }
            Self::Pir(p) => {
                power_of_two("m", p.m)?;
                power_of_two("d2", p.d2)?;
                crate::pir::PirParams::new(p.m, p.n, p.d2, p.eps, p.c_rep)?;
                if let Some(set) = &p.set {
                    nonempty("set", set.len())?;
                    if set.len() > p.n || set.iter().any(|&y| y == 0 || y > p.m) {
                        return Err(QjlError::InvalidParameter("set must have at most n elements in 1..=m".into()));
                    }
                }
                at_least("runs", p.runs, 1)?;
                at_least("privacy_unitaries", p.privacy_unitaries, 2)?;
                at_least("privacy_probes", p.privacy_probes as u64, 1)?;
                at_least("privacy_runs", p.privacy_runs as u64, 1)
            }
        }
    }
}

fn nonempty(name: &str, len: usize) -> Result<()> {
    if len == 0 {
        return Err(QjlError::InvalidParameter(format!("{name} must be nonempty")));
    }
    Ok(())
}

fn at_least(name: &str, x: u64, min: u64) -> Result<()> {
    if x < min {
        return Err(QjlError::InvalidParameter(format!("{name} must be at least {min}, got {x}")));
    }
    Ok(())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(QjlError::InvalidParameter(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

fn power_of_two(name: &str, x: usize) -> Result<()> {
    if !x.is_power_of_two() {
        return Err(QjlError::InvalidParameter(format!("{name} must be a power of two, got {x}")));
    }
    Ok(())
}

fn blocks(d1: usize, d2: usize) -> Result<()> {
    BlockStructure::new(d1, d2).map(|_| ())
}

fn blocks_f(d1: f64, d2: f64) -> Result<()> {
    if !(d2 >= 1.0 && d2 < d1 && d1.is_finite()) {
        return Err(QjlError::InvalidBlockStructure { d1: d1 as usize, d2: d2 as usize });
    }
    Ok(())
}

fn block_index(j: usize, num_blocks: usize) -> Result<()> {
    if j == 0 || j > num_blocks {
        return Err(QjlError::BlockIndexOutOfRange { index: j, num_blocks });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitaryChoice {
    #[default]
    Haar,
    Circuit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiCase {
    pub n: u64,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChiTailsParams {
    pub cases: Vec<ChiCase>,
    pub trials: u64,
}

impl Default for ChiTailsParams {
    fn default() -> Self {
        Self { cases: vec![ChiCase { n: 16, eps: 1.0 }, ChiCase { n: 64, eps: 0.5 }], trials: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HaarTailsParams {
    pub d1: usize,
    pub d2: usize,
    pub eps: f64,
    /// 1-based block whose projection is tested.
    pub block: usize,
    pub trials: u64,
    pub moment_trials: u64,
}

impl Default for HaarTailsParams {
    fn default() -> Self {
        Self { d1: 1024, d2: 64, eps: 1.0, block: 1, trials: 2000, moment_trials: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignTailsParams {
    pub num_qubits: usize,
    pub d2: usize,
    pub eps: f64,
    /// Circuit sizes to compare against Haar.
    pub sizes: Vec<usize>,
    pub trials: u64,
}

impl Default for DesignTailsParams {
    fn default() -> Self {
        Self { num_qubits: 10, d2: 64, eps: 1.0, sizes: vec![250, 1000, 4000], trials: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovPoint {
    pub d1: f64,
    pub d2: f64,
    pub eps: f64,
    pub m: u32,
    pub lambda_log: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentsParams {
    pub d1: usize,
    pub d2: usize,
    pub m_values: Vec<u32>,
    pub trials: u64,
    pub markov_grid: Vec<MarkovPoint>,
}

impl Default for MomentsParams {
    fn default() -> Self {
        let mut markov_grid = Vec::new();
        for (d1, d2) in [(1024.0, 64.0), (2f64.powi(20), 2f64.powi(12)), (2f64.powi(40), 2f64.powi(20))] {
            for eps in [0.1, 0.5] {
                for m in [1, 4, 16] {
                    for lambda_log in [-50.0, -500.0] {
                        markov_grid.push(MarkovPoint { d1, d2, eps, m, lambda_log });
                    }
                }
            }
        }
        Self { d1: 1024, d2: 64, m_values: vec![1, 2], trials: 10_000, markov_grid }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignQualityParams {
    /// Members of the random single-qubit design used for the squaring check.
    pub random_design_size: usize,
    /// Haar draws for the Monte-Carlo cross-check of the exact twirl.
    pub monte_carlo_samples: usize,
}

impl Default for DesignQualityParams {
    fn default() -> Self {
        Self { random_design_size: 4, monte_carlo_samples: 20_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsCase {
    pub d1: f64,
    pub d2: f64,
    pub eps: f64,
    pub lambda0: f64,
    pub base_size: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsTable {
    pub cases: Vec<ParamsCase>,
}

impl Default for ParamsTable {
    fn default() -> Self {
        let mut cases = vec![ParamsCase { d1: 2f64.powi(40), d2: 2f64.powi(20), eps: 0.5, lambda0: 0.5, base_size: 24 }];
        for log_d1 in [32, 48, 64] {
            for log_d2 in [16, 22, 30] {
                for eps in [0.25, 0.5] {
                    for lambda0 in [0.1, 0.5, 0.9] {
                        cases.push(ParamsCase {
                            d1: 2f64.powi(log_d1),
                            d2: 2f64.powi(log_d2),
                            eps,
                            lambda0,
                            base_size: 24,
                        });
                    }
                }
            }
        }
        Self { cases }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JlDemoParams {
    pub d1: usize,
    pub d2: usize,
    pub n_states: usize,
    pub eps: f64,
    pub unitaries: u64,
    pub unitary: UnitaryChoice,
    pub circuit_size: usize,
    /// Random pairs for the polarization-identity check.
    pub polarization_pairs: u64,
    /// Largest acceptable fraction of unitaries with an inner-product violation.
    pub max_violation_fraction: f64,
}

impl Default for JlDemoParams {
    fn default() -> Self {
        Self {
            d1: 1024,
            d2: 256,
            n_states: 8,
            eps: 0.25,
            unitaries: 100,
            unitary: UnitaryChoice::Haar,
            circuit_size: 2000,
            polarization_pairs: 10_000,
            max_violation_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlockDistParams {
    pub d1: usize,
    pub d2: usize,
    pub samples: u64,
    pub basis_state: usize,
    pub unitary: UnitaryChoice,
    pub circuit_size: usize,
    pub max_l1: f64,
}

impl Default for BlockDistParams {
    fn default() -> Self {
        Self {
            d1: 1024,
            d2: 64,
            samples: 10_000,
            basis_state: 1,
            unitary: UnitaryChoice::Haar,
            circuit_size: 2000,
            max_l1: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PirExperimentParams {
    pub m: usize,
    pub n: usize,
    pub d2: usize,
    pub eps: f64,
    pub c_rep: usize,
    /// Alice's set; defaults to `n` evenly spaced elements.
    pub set: Option<Vec<usize>>,
    /// Protocol runs per arm (`x ∈ S` and `x ∉ S`).
    pub runs: u64,
    pub unitary: UnitaryChoice,
    pub circuit_size: usize,
    pub min_success: f64,
    /// Independent unitaries for each privacy estimate.
    pub privacy_unitaries: u64,
    pub privacy_probes: usize,
    pub privacy_runs: usize,
}

impl Default for PirExperimentParams {
    fn default() -> Self {
        Self {
            m: 256,
            n: 4,
            d2: 64,
            eps: 0.00625,
            c_rep: 16,
            set: None,
            runs: 200,
            unitary: UnitaryChoice::Circuit,
            circuit_size: 1000,
            min_success: 0.75,
            privacy_unitaries: 20,
            privacy_probes: 8,
            privacy_runs: 10_000,
        }
    }
}
