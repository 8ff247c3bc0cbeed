//! One runnable experiment per claim, each returning a self-describing record.
//!
//! Every record embeds its resolved inputs, a content hash of those inputs and
//! the analytic bound values it was checked against. Randomness is keyed by
//! `(seed, component, trial)`, so the record does not depend on worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bounds::{
    chi_square_tail_bound, compute_design_params, design_projection_tail_bound, haar_projection_tail_bound,
    haar_projection_upper_tail_bound, markov_tail_chain, moment_bound_f, moment_bound_g,
};
use crate::circuits::{apply_gates_in_place, generate_local_random_circuit};
use crate::concentration::{
    binomial_se, empirical_tail, jackknife_mean, ks_two_sample, run_trials, wilson_interval, TailReport, Z_99,
};
use crate::config::{
    BlockDistParams, ChiTailsParams, DesignQualityParams, DesignTailsParams, ExperimentConfig, ExperimentParams,
    HaarTailsParams, JlDemoParams, MomentsParams, ParamsTable, PirExperimentParams, UnitaryChoice,
};
use crate::designs::{
    estimate_tpe_lambda, haar_moment_superoperator, haar_moment_superoperator_monte_carlo, iterate_design,
    monomial_design_error, pauli_group, single_qubit_clifford_group, FiniteDesign, Monomial,
};
use crate::error::{QjlError, Result};
use crate::jl::{block_probability_vector, pairwise_preservation_report, polarization_inner_product, sample_block};
use crate::linalg::{
    inner_product, l1_distance, l2_norm, uniform_distribution, BlockStructure, StateVector, UnitaryAction,
};
use crate::pir::{privacy_metric, run_protocol, overlap_guarantee, PirParams, UnitaryDescriptor};
use crate::sampling::{
    derive_seed, sample_chi_square_sum, sample_haar_unit_vector, sample_haar_unitary, HaarOnSpan, RngStream,
};

/// A fixed-column table written as the CSV summary.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub seed: u64,
    /// Experiment name, seed and fully resolved params.
    pub inputs: Value,
    /// SHA-256 of `blob <len>\0<inputs JSON>`, hex encoded.
    pub input_hash: String,
    pub analytic_bounds: BTreeMap<String, Value>,
    pub results: Value,
    pub passed: bool,
    /// One line per failed check.
    pub failures: Vec<String>,
    #[serde(skip)]
    pub table: Table,
}

impl ExperimentRecord {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }
}

/// Git-style blob hash of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

struct Outcome {
    bounds: BTreeMap<String, Value>,
    results: Value,
    failures: Vec<String>,
    table: Table,
}

impl Outcome {
    fn new(table: Table) -> Self {
        Self { bounds: BTreeMap::new(), results: Value::Null, failures: Vec::new(), table }
    }

    fn bound(&mut self, key: impl Into<String>, v: impl Serialize) {
        self.bounds.insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }
}

/// Runs the configured experiment on a pool of `workers` threads.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    let params = config.resolved_params()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| QjlError::InvalidParameter(format!("worker pool: {e}")))?;
    pool.install(|| execute_params(config.experiment.name(), config.seed, &params))
}

fn execute_params(name: &str, seed: u64, params: &ExperimentParams) -> Result<ExperimentRecord> {
    let inputs = json!({ "experiment": name, "seed": seed, "params": params });
    let input_hash = content_hash(serde_json::to_string(&inputs).expect("serializable").as_bytes());
    let out = match params {
        ExperimentParams::ChiTails(p) => chi_tails(p, seed)?,
        ExperimentParams::HaarTails(p) => haar_tails(p, seed)?,
        ExperimentParams::DesignTails(p) => design_tails(p, seed)?,
        ExperimentParams::Moments(p) => moments(p, seed)?,
        ExperimentParams::DesignQuality(p) => design_quality(p, seed)?,
        ExperimentParams::Params(p) => params_table(p)?,
        ExperimentParams::JlDemo(p) => jl_demo(p, seed)?,
        ExperimentParams::BlockDist(p) => block_dist(p, seed)?,
        ExperimentParams::Pir(p) => pir(p, seed)?,
    };
    Ok(ExperimentRecord {
        experiment: name.to_string(),
        seed,
        inputs,
        input_hash,
        analytic_bounds: out.bounds,
        results: out.results,
        passed: out.failures.is_empty(),
        failures: out.failures,
        table: out.table,
    })
}

fn chi_tails(p: &ChiTailsParams, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::new(Table::new(&[
        "n", "eps", "trials", "failures", "empirical_rate", "wilson_lower", "wilson_upper", "analytic_bound", "vacuous",
        "passed",
    ]));
    let mut reports = Vec::new();
    for (k, c) in p.cases.iter().enumerate() {
        let bound = chi_square_tail_bound(c.n, c.eps)?;
        let key = format!("chi_square.n{}.eps{}", c.n, c.eps);
        out.bound(format!("{key}.sharp"), bound.sharp);
        out.bound(format!("{key}.simplified"), bound.simplified);
        let nf = c.n as f64;
        let n = c.n as usize;
        let r = empirical_tail(
            |rng| sample_chi_square_sum(n, rng),
            ((1.0 - c.eps) * nf, (1.0 + c.eps) * nf),
            p.trials,
            derive_seed(seed, k as u64),
            bound.sharp,
        )?;
        out.check(r.passed, || format!("chi-square tail n={} eps={}: {r:?}", c.n, c.eps));
        out.table.push(row![
            c.n, c.eps, r.trials, r.failures, r.empirical_rate, r.wilson_ci_lower, r.wilson_ci_upper,
            r.analytic_bound, r.vacuous, r.passed
        ]);
        reports.push(json!({ "n": c.n, "eps": c.eps, "report": r }));
    }
    out.results = json!({ "cases": reports });
    Ok(out)
}

/// `‖Π_block U e_1‖` for `trials` Haar unitaries; trial `i` uses stream `i`.
pub fn haar_projection_samples(d1: usize, d2: usize, block: usize, trials: u64, seed: u64) -> Result<Vec<f64>> {
    let bs = BlockStructure::new(d1, d2)?;
    let range = bs.range(block)?;
    let v = StateVector::basis(d1, 1)?;
    run_trials(
        &|rng: &mut RngStream| {
            let u = HaarOnSpan::sample(std::slice::from_ref(&v), rng)?;
            Ok(l2_norm(&u.apply(&v)?.amplitudes()[range.clone()]))
        },
        trials,
        seed,
    )
}

/// `‖Π₁ C e_1‖` after each of the given prefix sizes of one local random
/// circuit per trial. Sizes must be increasing; row `i` holds trial `i`.
pub fn circuit_projection_samples(
    num_qubits: usize,
    d2: usize,
    sizes: &[usize],
    trials: u64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let d1 = 1usize << num_qubits;
    BlockStructure::new(d1, d2)?;
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QjlError::InvalidParameter("circuit sizes must be strictly increasing".into()));
    }
    let max = *sizes.last().ok_or_else(|| QjlError::InvalidParameter("no circuit sizes".into()))?;
    run_trials(
        &|rng: &mut RngStream| {
            let c = generate_local_random_circuit(num_qubits, max, rng)?;
            let mut amps = StateVector::basis(d1, 1)?.into_amplitudes();
            let mut done = 0;
            let mut row = Vec::with_capacity(sizes.len());
            for &s in sizes {
                apply_gates_in_place(num_qubits, &c.gates()[done..s], &mut amps);
                done = s;
                row.push(l2_norm(&amps[..d2]));
            }
            Ok(row)
        },
        trials,
        seed,
    )
}

fn band_failures(xs: &[f64], lo: f64, hi: f64) -> u64 {
    xs.iter().filter(|x| !(lo <= **x && **x <= hi)).count() as u64
}

fn haar_tails(p: &HaarTailsParams, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::new(Table::new(&[
        "quantity", "trials", "value", "std_error", "wilson_lower", "wilson_upper", "analytic", "passed",
    ]));
    let (d1, d2) = (p.d1 as f64, p.d2 as f64);
    let target = (d2 / d1).sqrt();
    let bound = haar_projection_tail_bound(d2, p.eps)?;
    out.bound("haar_projection.tail", bound);
    if p.eps > 1.0 {
        out.bound("haar_projection.upper_tail", haar_projection_upper_tail_bound(d2, p.eps)?);
    }
    out.bound("second_moment", d2 / d1);

    let xs = haar_projection_samples(p.d1, p.d2, p.block, p.trials, derive_seed(seed, 0))?;
    let failures = band_failures(&xs, (1.0 - p.eps) * target, (1.0 + p.eps) * target);
    let tail = TailReport::from_counts(failures, p.trials, bound);
    out.check(tail.passed, || format!("Haar projection tail: {tail:?}"));
    out.table.push(row![
        "tail_rate", tail.trials, tail.empirical_rate, tail.standard_error(), tail.wilson_ci_lower,
        tail.wilson_ci_upper, bound, tail.passed
    ]);

    let sq: Vec<f64> = haar_projection_samples(p.d1, p.d2, p.block, p.moment_trials, derive_seed(seed, 1))?
        .into_iter()
        .map(|x| x * x)
        .collect();
    let (mean, se) = jackknife_mean(&sq);
    let moment_ok = (mean - d2 / d1).abs() <= 3.0 * se;
    out.check(moment_ok, || format!("E‖Π U v‖² = {mean} ± {se}, expected {}", d2 / d1));
    out.table.push(row!["second_moment", p.moment_trials, mean, se, "", "", d2 / d1, moment_ok]);

    out.results = json!({
        "tail": tail,
        "second_moment": { "trials": p.moment_trials, "mean": mean, "std_error": se, "within_3se": moment_ok },
    });
    Ok(out)
}

fn design_tails(p: &DesignTailsParams, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::new(Table::new(&[
        "source", "size", "trials", "failures", "empirical_rate", "std_error", "ks_statistic", "ks_p_value",
        "within_2se_of_haar",
    ]));
    let d1 = 1usize << p.num_qubits;
    let target = (p.d2 as f64 / d1 as f64).sqrt();
    let (lo, hi) = ((1.0 - p.eps) * target, (1.0 + p.eps) * target);
    let haar_bound = haar_projection_tail_bound(p.d2 as f64, p.eps)?;
    out.bound("haar_projection.tail", haar_bound);
    let design_bound = (p.eps < 1.0).then(|| design_projection_tail_bound(p.d2 as f64, p.eps)).transpose()?;
    out.bound("design_projection.tail", design_bound);

    let mut sizes = p.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();

    let haar = haar_projection_samples(d1, p.d2, 1, p.trials, derive_seed(seed, 0))?;
    let haar_fail = band_failures(&haar, lo, hi);
    let haar_rate = haar_fail as f64 / p.trials as f64;
    let haar_se = binomial_se(haar_rate, p.trials);
    out.table.push(row!["haar", "", p.trials, haar_fail, haar_rate, haar_se, "", "", ""]);

    let rows = circuit_projection_samples(p.num_qubits, p.d2, &sizes, p.trials, derive_seed(seed, 1))?;
    let mut per_size = Vec::new();
    let mut ks_stats = Vec::new();
    let mut last_within = false;
    for (k, &s) in sizes.iter().enumerate() {
        let xs: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        let fail = band_failures(&xs, lo, hi);
        let rate = fail as f64 / p.trials as f64;
        let se = binomial_se(rate, p.trials);
        let within = (rate - haar_rate).abs() <= 2.0 * (se * se + haar_se * haar_se).sqrt();
        let ks = ks_two_sample(&xs, &haar)?;
        let (wl, wu) = wilson_interval(fail, p.trials, Z_99);
        ks_stats.push(ks.statistic);
        last_within = within;
        out.table.push(row!["circuit", s, p.trials, fail, rate, se, ks.statistic, ks.p_value, within]);
        per_size.push(json!({
            "size": s, "failures": fail, "empirical_rate": rate, "std_error": se,
            "wilson_ci_lower": wl, "wilson_ci_upper": wu, "within_2se_of_haar": within, "ks": ks,
        }));
    }
    let monotone = ks_stats.windows(2).all(|w| w[1] < w[0]);
    out.check(last_within, || {
        format!("largest circuit tail rate is not within 2 SE of the Haar rate {haar_rate}")
    });
    out.check(monotone, || format!("KS distance to Haar is not decreasing in size: {ks_stats:?}"));
    out.results = json!({
        "haar": { "trials": p.trials, "failures": haar_fail, "empirical_rate": haar_rate, "std_error": haar_se },
        "circuits": per_size,
        "ks_monotone_decreasing": monotone,
    });
    Ok(out)
}

fn moments(p: &MomentsParams, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::new(Table::new(&["quantity", "m", "trials", "mean", "std_error", "analytic_bound", "passed"]));
    let (d1, d2) = (p.d1 as f64, p.d2 as f64);
    let xs = haar_projection_samples(p.d1, p.d2, 1, p.trials, derive_seed(seed, 0))?;
    let mut estimates = Vec::new();
    for &m in &p.m_values {
        let bf = moment_bound_f(d1, m)?;
        let bg = moment_bound_g(d1, d2, m)?;
        out.bound(format!("moment_f.m{m}"), bf);
        out.bound(format!("moment_g.m{m}"), bg);
        for (name, bound, f) in [
            ("f", bf, Box::new(|x: f64| x - (d2 / d1).sqrt()) as Box<dyn Fn(f64) -> f64>),
            ("g", bg, Box::new(|x: f64| x * x - d2 / d1)),
        ] {
            let vals: Vec<f64> = xs.iter().map(|&x| f(x).powi(2 * m as i32)).collect();
            let (mean, se) = jackknife_mean(&vals);
            let ok = mean - Z_99 * se <= bound;
            out.check(ok, || format!("E[{name}^{}] = {mean} ± {se} exceeds {bound}", 2 * m));
            out.table.push(row![name, m, p.trials, mean, se, bound, ok]);
            estimates.push(json!({ "quantity": name, "m": m, "mean": mean, "std_error": se, "bound": bound, "passed": ok }));
        }
    }
    let mut chain = Vec::new();
    let mut worst = 0.0f64;
    for g in &p.markov_grid {
        let c = markov_tail_chain(g.d1, g.d2, g.eps, g.m, g.lambda_log)?;
        let rel = (c.via_moments_log - c.displayed_log).exp_m1().abs();
        worst = worst.max(rel);
        chain.push(json!({ "point": g, "chain": c, "relative_error": rel }));
    }
    out.check(worst <= 1e-12, || format!("Markov chain forms disagree, relative error {worst}"));
    out.table.push(row!["markov_relative_error", "", p.markov_grid.len(), worst, "", 1e-12, worst <= 1e-12]);
    out.results = json!({ "moments": estimates, "markov": chain, "markov_worst_relative_error": worst });
    Ok(out)
}

fn design_quality(p: &DesignQualityParams, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::new(Table::new(&["check", "value", "tolerance", "passed"]));
    let record = |out: &mut Outcome, name: &str, value: f64, tol: f64, ok: bool| {
        out.check(ok, || format!("{name} = {value}, tolerance {tol}"));
        out.table.push(row![name, value, tol, ok]);
        (name.to_string(), json!({ "value": value, "tolerance": tol, "passed": ok }))
    };
    let mut results = serde_json::Map::new();

    let pauli = FiniteDesign::explicit(pauli_group())?;
    let l = estimate_tpe_lambda(&pauli, 1)?;
    let (k, v) = record(&mut out, "pauli_lambda_t1", l, 1e-9, l <= 1e-9);
    results.insert(k, v);

    let clifford = FiniteDesign::explicit(single_qubit_clifford_group())?;
    let l = estimate_tpe_lambda(&clifford, 2)?;
    let (k, v) = record(&mut out, "clifford_lambda_t2", l, 1e-9, l <= 1e-9);
    results.insert(k, v);

    let mut rng = RngStream::new(derive_seed(seed, 0), 0);
    let members = (0..p.random_design_size).map(|_| sample_haar_unitary(2, &mut rng)).collect::<Result<Vec<_>>>()?;
    let random = FiniteDesign::explicit(members)?;
    let squared = iterate_design(&random, 2)?;
    for t in [1, 2] {
        let l1 = estimate_tpe_lambda(&random, t)?;
        let l2 = estimate_tpe_lambda(&squared, t)?;
        let (k, v) = record(&mut out, &format!("squaring_gap_t{t}"), l2 - l1 * l1, 1e-8, l2 <= l1 * l1 + 1e-8);
        results.insert(k, json!({ "lambda": l1, "lambda_squared_design": l2, "check": v }));
    }

    let worst = Monomial::all_degree_one(2)
        .iter()
        .map(|m| monomial_design_error(&pauli, m, 1).map(|e| e.gap))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let (k, v) = record(&mut out, "pauli_monomial_max_gap", worst, 1e-10, worst <= 1e-10);
    results.insert(k, v);

    let identity = FiniteDesign::explicit(vec![crate::linalg::UnitaryMatrix::identity(2)])?;
    let gap = monomial_design_error(&identity, &Monomial::new(vec![(1, 1)], vec![(1, 1)]), 1)?.gap;
    out.bound("identity_monomial_gap", 0.5);
    let (k, v) = record(&mut out, "identity_monomial_gap", gap, 1e-12, (gap - 0.5).abs() <= 1e-12);
    results.insert(k, v);

    let exact = haar_moment_superoperator(2, 2)?;
    let mc = haar_moment_superoperator_monte_carlo(2, 2, p.monte_carlo_samples, &mut RngStream::new(derive_seed(seed, 1), 0))?;
    let diff = mc.matrix.sub(&exact.matrix)?.spectral_norm();
    let tol = 10.0 / (p.monte_carlo_samples as f64).sqrt();
    let (k, v) = record(&mut out, "haar_twirl_monte_carlo_gap", diff, tol, diff <= tol);
    results.insert(k, v);

    out.results = Value::Object(results);
    Ok(out)
}

fn params_table(p: &ParamsTable) -> Result<Outcome> {
    let mut out = Outcome::new(Table::new(&[
        "d1", "d2", "eps", "lambda0", "t", "m", "lambda_target_log", "lambda_required_log", "iterations_exact",
        "iterations_k", "iterations_upper", "iterations_bound_holds", "log_s_bound",
    ]));
    let mut rows = Vec::new();
    for c in &p.cases {
        let d = compute_design_params(c.d1, c.d2, c.eps, c.lambda0, c.base_size)?;
        let finite = d.lambda_target_log.is_finite() && d.lambda_required_log.is_finite() && d.iterations_exact.is_finite();
        out.check(d.iterations_bound_holds && finite, || format!("iteration bound fails at {c:?}: {d:?}"));
        out.table.push(row![
            d.d1, d.d2, d.eps, d.lambda0, d.t, d.m, d.lambda_target_log, d.lambda_required_log, d.iterations_exact,
            d.iterations_k, d.iterations_upper, d.iterations_bound_holds, d.log_s_bound
        ]);
        rows.push(d);
    }
    out.results = json!({ "cases": rows });
    Ok(out)
}

enum Realized {
    Span(HaarOnSpan),
    Circuit(crate::circuits::GateCircuit),
}

impl Realized {
    fn sample(choice: UnitaryChoice, span: &[StateVector], d1: usize, size: usize, rng: &mut RngStream) -> Result<Self> {
        match choice {
            UnitaryChoice::Haar => Ok(Self::Span(HaarOnSpan::sample(span, rng)?)),
            UnitaryChoice::Circuit => {
                Ok(Self::Circuit(generate_local_random_circuit(d1.trailing_zeros() as usize, size, rng)?))
            }
        }
    }
}

impl UnitaryAction for Realized {
    fn dim(&self) -> usize {
        match self {
            Self::Span(u) => u.dim(),
            Self::Circuit(c) => c.dim(),
        }
    }

    fn apply(&self, v: &StateVector) -> Result<StateVector> {
        match self {
            Self::Span(u) => u.apply(v),
            Self::Circuit(c) => c.apply(v),
        }
    }
}

fn jl_demo(p: &JlDemoParams, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::new(Table::new(&[
        "unitary", "inner_violations", "norm_violations", "max_inner_deviation", "max_norm_deviation", "unreachable",
    ]));
    out.bound("inner_band", 8.0 * p.eps);
    out.bound("norm_band", p.eps);
    out.bound("max_violation_fraction", p.max_violation_fraction);
    let bs = BlockStructure::new(p.d1, p.d2)?;
    let mut rng = RngStream::new(derive_seed(seed, 0), 0);
    let states = (0..p.n_states).map(|_| sample_haar_unit_vector(p.d1, &mut rng)).collect::<Result<Vec<_>>>()?;
    let reports = run_trials(
        &|rng: &mut RngStream| {
            let u = Realized::sample(p.unitary, &states, p.d1, p.circuit_size, rng)?;
            pairwise_preservation_report(&states, &u, &bs, p.eps)
        },
        p.unitaries,
        derive_seed(seed, 1),
    )?;
    let mut with_violation = 0u64;
    let mut per_unitary = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        with_violation += !r.inner_band_holds() as u64;
        out.table.push(row![
            i, r.inner_violations.len(), r.norm_violations.len(), r.max_inner_deviation, r.max_norm_deviation,
            r.unreachable.len()
        ]);
        per_unitary.push(json!({
            "inner_violations": r.inner_violations, "norm_violations": r.norm_violations.len(),
            "max_inner_deviation": r.max_inner_deviation, "max_norm_deviation": r.max_norm_deviation,
        }));
    }
    let fraction = with_violation as f64 / p.unitaries as f64;
    out.check(fraction <= p.max_violation_fraction, || {
        format!("{fraction} of unitaries violate the inner-product band")
    });

    let d = p.d2;
    let errs = run_trials(
        &|rng: &mut RngStream| {
            let a = sample_haar_unit_vector(d, rng)?;
            let b = sample_haar_unit_vector(d, rng)?;
            Ok((polarization_inner_product(&a, &b)? - inner_product(&a, &b)?).norm())
        },
        p.polarization_pairs,
        derive_seed(seed, 2),
    )?;
    let pol = errs.into_iter().fold(0.0, f64::max);
    out.check(pol <= 1e-9, || format!("polarization identity off by {pol}"));
    out.results = json!({
        "unitaries_with_inner_violation": with_violation,
        "violation_fraction": fraction,
        "polarization_pairs": p.polarization_pairs,
        "polarization_max_error": pol,
        "per_unitary": per_unitary,
    });
    Ok(out)
}

fn empirical_distribution(probs: &[f64], samples: u64, rng: &mut RngStream) -> Vec<f64> {
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..samples {
        counts[sample_block(probs, rng) - 1] += 1;
    }
    counts.into_iter().map(|c| c as f64 / samples as f64).collect()
}

fn block_dist(p: &BlockDistParams, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::new(Table::new(&["source", "samples", "l1_from_uniform", "threshold", "passed"]));
    let bs = BlockStructure::new(p.d1, p.d2)?;
    let v = StateVector::basis(p.d1, p.basis_state)?;
    let u = Realized::sample(
        p.unitary,
        std::slice::from_ref(&v),
        p.d1,
        p.circuit_size,
        &mut RngStream::new(derive_seed(seed, 0), 0),
    )?;
    let probs = block_probability_vector(&v, &u, &bs)?;
    let uniform = uniform_distribution(bs.num_blocks());
    let exact_l1 = l1_distance(&probs, &uniform)?;
    let empirical = empirical_distribution(&probs, p.samples, &mut RngStream::new(derive_seed(seed, 1), 0));
    let empirical_l1 = l1_distance(&empirical, &uniform)?;
    let floor_dist = empirical_distribution(&uniform, p.samples, &mut RngStream::new(derive_seed(seed, 2), 0));
    let noise_floor = l1_distance(&floor_dist, &uniform)?;
    let ok = empirical_l1 <= p.max_l1;
    out.bound("max_l1", p.max_l1);
    out.check(ok, || format!("block-name distribution is {empirical_l1} from uniform"));
    out.table.push(row!["measured", p.samples, empirical_l1, p.max_l1, ok]);
    out.table.push(row!["born_exact", "", exact_l1, "", ""]);
    out.table.push(row!["uniform_source", p.samples, noise_floor, "", ""]);
    out.results = json!({
        "block_probabilities": probs,
        "empirical_distribution": empirical,
        "empirical_l1": empirical_l1,
        "exact_l1": exact_l1,
        "noise_floor_l1": noise_floor,
    });
    Ok(out)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn pir(p: &PirExperimentParams, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::new(Table::new(&["quantity", "value", "std_error", "threshold", "passed"]));
    let params = PirParams::new(p.m, p.n, p.d2, p.eps, p.c_rep)?;
    let set: Vec<usize> = p.set.clone().unwrap_or_else(|| (0..p.n).map(|k| 1 + k * (p.m / p.n)).collect());
    let outside: Vec<usize> = (1..=p.m).filter(|y| !set.contains(y)).collect();
    if outside.is_empty() {
        return Err(QjlError::InvalidParameter("set covers the whole universe".into()));
    }
    let descriptor = |s: u64| match p.unitary {
        UnitaryChoice::Haar => UnitaryDescriptor::haar(s),
        UnitaryChoice::Circuit => UnitaryDescriptor::circuit(s, p.circuit_size),
    };

    let run_arm = |arm: u64, member: bool| -> Result<Vec<(bool, f64, usize, usize)>> {
        (0..p.runs)
            .into_par_iter()
            .map(|r| {
                let x = if member { set[r as usize % set.len()] } else { outside[(r as usize * 7919) % outside.len()] };
                let d = descriptor(derive_seed(derive_seed(seed, 10 + arm), r));
                let t = run_protocol(&set, x, &params, d, derive_seed(derive_seed(seed, 20 + arm), r))?;
                let g = overlap_guarantee(&t, &set, x, &params)?;
                Ok((t.decision == member, t.success_fraction, g.preserved_reps, g.satisfied))
            })
            .collect()
    };

    let mut arms = serde_json::Map::new();
    for (arm, member, name) in [(0u64, true, "member"), (1, false, "non_member")] {
        let runs = run_arm(arm, member)?;
        let correct = runs.iter().filter(|r| r.0).count() as f64 / runs.len() as f64;
        let se = binomial_se(correct, p.runs);
        let mean_fraction = runs.iter().map(|r| r.1).sum::<f64>() / runs.len() as f64;
        let preserved: usize = runs.iter().map(|r| r.2).sum();
        let satisfied: usize = runs.iter().map(|r| r.3).sum();
        let ok = correct >= p.min_success;
        out.check(ok, || format!("{name} arm correct rate {correct} below {}", p.min_success));
        out.check(preserved == satisfied, || {
            format!("{name} arm: overlap threshold missed on {} preserved repetitions", preserved - satisfied)
        });
        out.table.push(row![format!("{name}_correct_rate"), correct, se, p.min_success, ok]);
        arms.insert(
            name.into(),
            json!({
                "runs": p.runs, "correct_rate": correct, "std_error": se, "mean_success_fraction": mean_fraction,
                "overlap_preserved_reps": preserved, "overlap_threshold_met": satisfied,
            }),
        );
    }

    let probes: Vec<usize> = (0..p.privacy_probes).map(|k| 1 + k * p.m / p.privacy_probes).collect();
    let privacy = |label: u64, make: &(dyn Fn(u64) -> UnitaryDescriptor + Sync)| -> Result<Vec<f64>> {
        (0..p.privacy_unitaries)
            .into_par_iter()
            .map(|i| {
                let d = make(derive_seed(derive_seed(seed, label), i));
                let r = privacy_metric(&params, d, &probes, p.privacy_runs, derive_seed(derive_seed(seed, label + 1), i))?;
                Ok(r.metric)
            })
            .collect()
    };
    let circuit = privacy(30, &|s| UnitaryDescriptor::circuit(s, p.circuit_size))?;
    let haar = privacy(40, &|s| UnitaryDescriptor::haar(s))?;
    let (mc, sc) = mean_and_se(&circuit);
    let (mh, sh) = mean_and_se(&haar);
    let identity = 2.0 * (1.0 - p.d2 as f64 / p.m as f64);
    let tol = 2.0 * (sc * sc + sh * sh).sqrt();
    let within = (mc - mh).abs() <= tol;
    out.check(within, || format!("circuit privacy {mc} ± {sc} differs from Haar {mh} ± {sh}"));
    out.table.push(row!["privacy_circuit", mc, sc, "", ""]);
    out.table.push(row!["privacy_haar", mh, sh, "", ""]);
    out.table.push(row!["privacy_gap", (mc - mh).abs(), "", tol, within]);
    out.table.push(row!["privacy_identity", identity, "", "", ""]);

    let accounting = crate::pir::message_accounting(&params, &descriptor(0));
    out.bound("decision_threshold", params.threshold());
    out.bound("min_success", p.min_success);
    out.bound("privacy_identity", identity);
    out.results = json!({
        "set": set,
        "reps": params.reps(),
        "accounting": accounting,
        "arms": arms,
        "privacy": {
            "probes": probes, "runs_per_probe": p.privacy_runs,
            "circuit": { "mean": mc, "std_error": sc, "per_unitary": circuit },
            "haar": { "mean": mh, "std_error": sh, "per_unitary": haar },
            "identity": identity, "within_2se": within,
        },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(s: &str) -> ExperimentConfig {
        ExperimentConfig::from_json_str(s).unwrap()
    }

    #[test]
    fn content_hash_matches_git_blob_sha256() {
        // hashlib.sha256(b"blob 6\0hello\n")
        assert_eq!(
            content_hash(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }

    #[test]
    fn record_is_self_describing() {
        let r = execute(&config(r#"{"experiment": "chi-tails", "seed": 3, "params": {"trials": 2000}}"#)).unwrap();
        assert_eq!(r.inputs["params"]["trials"], 2000);
        assert_eq!(r.inputs["params"]["cases"][0]["n"], 16);
        assert!(r.analytic_bounds.contains_key("chi_square.n16.eps1.sharp"));
        assert_eq!(r.input_hash.len(), 64);
        assert_eq!(r.table.rows.len(), 2);
        assert!(r.passed, "{:?}", r.failures);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let base = r#"{"experiment": "jl-demo", "seed": 5,
            "params": {"d1": 64, "d2": 16, "n_states": 3, "unitaries": 20, "polarization_pairs": 100}"#;
        let a = execute(&config(&format!("{base}, \"workers\": 1}}"))).unwrap();
        let b = execute(&config(&format!("{base}, \"workers\": 3}}"))).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn circuit_prefix_samples_match_full_circuits() {
        let rows = circuit_projection_samples(4, 4, &[3, 10], 5, 8).unwrap();
        for (i, row) in rows.iter().enumerate() {
            let c = generate_local_random_circuit(4, 10, &mut RngStream::new(8, i as u64)).unwrap();
            let prefix = crate::circuits::GateCircuit::new(4, c.gates()[..3].to_vec()).unwrap();
            let e1 = StateVector::basis(16, 1).unwrap();
            let full = l2_norm(&c.apply(&e1).unwrap().amplitudes()[..4]);
            let part = l2_norm(&prefix.apply(&e1).unwrap().amplitudes()[..4]);
            assert!((row[0] - part).abs() < 1e-12 && (row[1] - full).abs() < 1e-12);
        }
        assert!(circuit_projection_samples(4, 4, &[10, 3], 5, 8).is_err());
    }

    #[test]
    fn params_table_default_grid_holds() {
        let r = execute(&config(r#"{"experiment": "params", "seed": 0}"#)).unwrap();
        assert!(r.passed, "{:?}", r.failures);
        assert_eq!(r.results["cases"][0]["t"], 512);
        assert_eq!(r.results["cases"][0]["m"], 256);
    }

    #[test]
    fn csv_has_fixed_header() {
        let r = execute(&config(r#"{"experiment": "design-quality", "seed": 1}"#)).unwrap();
        let csv = r.table.to_csv();
        assert!(csv.starts_with("check,value,tolerance,passed\n"));
        assert!(r.passed, "{:?}", r.failures);
    }
}
