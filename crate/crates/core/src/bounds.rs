//! Closed-form tail bounds, moment bounds and design-parameter formulas.
//!
//! Dimensions are taken as `f64` so that `d1` up to `2^64` is representable
//! exactly for powers of two. Quantities that underflow at realistic sizes
//! (λ and friends) are carried as natural logarithms. All logarithms are
//! natural.

use serde::Serialize;

use crate::error::{QjlError, Result};

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(QjlError::InvalidParameter(format!("{name} must be positive and finite, got {x}")));
    }
    Ok(())
}

fn at_least_one(name: &str, x: f64) -> Result<()> {
    if !(x >= 1.0 && x.is_finite()) {
        return Err(QjlError::InvalidParameter(format!("{name} must be at least 1, got {x}")));
    }
    Ok(())
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareBound {
    /// `2 (e^{−ε/2} √(1+ε))^n`.
    pub sharp: f64,
    /// `2 e^{−ε²n/8}`, stated for `ε ≤ 1` only.
    pub simplified: Option<f64>,
}

/// Bound on `Pr[Σ_{i≤n} G_i² ∉ (1 ± ε) n]`.
pub fn chi_square_tail_bound(n: u64, eps: f64) -> Result<ChiSquareBound> {
    positive("eps", eps)?;
    at_least_one("n", n as f64)?;
    let nf = n as f64;
    let sharp = (2f64.ln() + nf * (-eps / 2.0 + 0.5 * eps.ln_1p())).exp();
    let simplified = (eps <= 1.0).then(|| 2.0 * (-eps * eps * nf / 8.0).exp());
    Ok(ChiSquareBound { sharp, simplified })
}

/// `4 exp(−ε² d2 / 16)`: Haar projection deviation bound for any `ε > 0`.
pub fn haar_projection_tail_bound(d2: f64, eps: f64) -> Result<f64> {
    positive("eps", eps)?;
    at_least_one("d2", d2)?;
    Ok(4.0 * (-eps * eps * d2 / 16.0).exp())
}

/// `2 exp(−ε² d2 / 4)`: the sharper upper-tail bound available when `ε > 1`.
pub fn haar_projection_upper_tail_bound(d2: f64, eps: f64) -> Result<f64> {
    if !(eps > 1.0) {
        return Err(QjlError::InvalidParameter(format!("upper-tail branch needs eps > 1, got {eps}")));
    }
    at_least_one("d2", d2)?;
    Ok(2.0 * (-eps * eps * d2 / 4.0).exp())
}

/// `ln(64 exp(−2^{-10} ε² d2))`.
pub fn design_projection_tail_bound_log(d2: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(QjlError::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    at_least_one("d2", d2)?;
    Ok(64f64.ln() - eps * eps * d2 / 1024.0)
}

/// `64 exp(−2^{-10} ε² d2)`: deviation bound when `U` comes from a design.
pub fn design_projection_tail_bound(d2: f64, eps: f64) -> Result<f64> {
    Ok(design_projection_tail_bound_log(d2, eps)?.exp())
}

/// `4 (16 m / d1)^m`, bound on `E[f(U)^{2m}]` with `f(U) = ‖Π U v‖ − √(d2/d1)`.
pub fn moment_bound_f(d1: f64, m: u32) -> Result<f64> {
    Ok(moment_bound_f_log(d1, m)?.exp())
}

pub fn moment_bound_f_log(d1: f64, m: u32) -> Result<f64> {
    at_least_one("d1", d1)?;
    at_least_one("m", m as f64)?;
    let mf = m as f64;
    Ok(4f64.ln() + mf * (16.0 * mf / d1).ln())
}

/// `16 (64 m d2 / d1²)^m + 16 (64 d2² / d1²)^m e^{−d2/4}`, bound on
/// `E[g(U)^{2m}]` with `g(U) = ‖Π U v‖² − d2/d1`.
pub fn moment_bound_g(d1: f64, d2: f64, m: u32) -> Result<f64> {
    Ok(moment_bound_g_log(d1, d2, m)?.exp())
}

pub fn moment_bound_g_log(d1: f64, d2: f64, m: u32) -> Result<f64> {
    let (first, second) = moment_bound_g_terms_log(d1, d2, m)?;
    Ok(log_add_exp(first, second))
}

/// Logs of the two terms of [`moment_bound_g`].
pub fn moment_bound_g_terms_log(d1: f64, d2: f64, m: u32) -> Result<(f64, f64)> {
    at_least_one("d2", d2)?;
    if !(d2 < d1) {
        return Err(QjlError::InvalidParameter(format!("need d2 < d1, got d2={d2}, d1={d1}")));
    }
    at_least_one("m", m as f64)?;
    let mf = m as f64;
    let ln16 = 16f64.ln();
    let first = ln16 + mf * (64f64.ln() + mf.ln() + d2.ln() - 2.0 * d1.ln());
    let second = ln16 + mf * (64f64.ln() + 2.0 * d2.ln() - 2.0 * d1.ln()) - d2 / 4.0;
    Ok((first, second))
}

/// `ln((d2)^m λ)`: gap between design and Haar values of `E[g(U)^{2m}]`.
pub fn tpe_moment_gap_bound(d2: f64, m: u32, lambda_log: f64) -> Result<f64> {
    at_least_one("d2", d2)?;
    at_least_one("m", m as f64)?;
    Ok(m as f64 * d2.ln() + lambda_log)
}

/// The Markov-inequality tail bound for a design, in two algebraically equal
/// forms (both as logs of a three-term sum).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarkovChain {
    /// `ln[(d1/(2ε d2))^{2m} · (moment_bound_g + d2^m λ)]`.
    pub via_moments_log: f64,
    /// `ln[16 (16m/(ε²d2))^m + 16 (16/ε²)^m e^{−d2/4} + (d1²/(4ε²d2))^m λ]`.
    pub displayed_log: f64,
}

pub fn markov_tail_chain(d1: f64, d2: f64, eps: f64, m: u32, lambda_log: f64) -> Result<MarkovChain> {
    positive("eps", eps)?;
    let mf = m as f64;
    let (g1, g2) = moment_bound_g_terms_log(d1, d2, m)?;
    let gap = tpe_moment_gap_bound(d2, m, lambda_log)?;
    let prefactor = 2.0 * mf * (d1.ln() - (2.0 * eps * d2).ln());
    let via_moments_log = prefactor + log_add_exp(log_add_exp(g1, g2), gap);

    let ln16 = 16f64.ln();
    let t1 = ln16 + mf * (ln16 + mf.ln() - 2.0 * eps.ln() - d2.ln());
    let t2 = ln16 + mf * (ln16 - 2.0 * eps.ln()) - d2 / 4.0;
    let t3 = mf * (2.0 * d1.ln() - (4.0 * eps * eps * d2).ln()) + lambda_log;
    let displayed_log = log_add_exp(log_add_exp(t1, t2), t3);
    Ok(MarkovChain { via_moments_log, displayed_log })
}

/// Iteration count `⌈(t ln d + ln(1/α)) / ln(1/λ0)⌉` taking a
/// `λ0`-TPE to an α-approximate t-design (constant factor taken as 1).
pub fn design_iteration_count(t: u64, d: f64, alpha: f64, lambda0: f64) -> Result<u64> {
    at_least_one("d", d)?;
    if !(alpha > 0.0 && alpha < 1.0) || !(lambda0 > 0.0 && lambda0 < 1.0) {
        return Err(QjlError::InvalidParameter("alpha and lambda0 must lie in (0, 1)".into()));
    }
    Ok(((t as f64 * d.ln() + (1.0 / alpha).ln()) / (1.0 / lambda0).ln()).ceil() as u64)
}

/// Parameters needed for a design-based transform to match the Haar bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignParams {
    pub d1: f64,
    pub d2: f64,
    pub eps: f64,
    pub lambda0: f64,
    /// Design order `max(2, ⌈2^{-9} ε² d2⌉)`.
    pub t: u64,
    /// Moment index `max(1, ⌈2^{-10} ε² d2⌉)`.
    pub m: u64,
    /// `ln λ` with `λ = (4ε²d2/d1²)^{t/2} e^{−t/2}`.
    pub lambda_target_log: f64,
    /// `ln` of the largest λ for which the Markov chain closes:
    /// `(d1²/(4ε²d2))^{−m} e^{−2^{-10} ε² d2}`.
    pub lambda_required_log: f64,
    /// `(2m ln d1 + 2m ln(1/ε) + 2^{-10}ε²d2) / ln(1/λ0)` before rounding.
    pub iterations_exact: f64,
    pub iterations_k: u64,
    /// `2^{-8} d2 ln d1 / ln(1/λ0)`.
    pub iterations_upper: f64,
    pub iterations_bound_holds: bool,
    /// Size of the base design the iteration starts from.
    pub base_size: u64,
    /// `k · ln(base_size)`: concrete stand-in for `log s = O(d2 log d1)`.
    pub log_s_bound: f64,
}

pub fn compute_design_params(d1: f64, d2: f64, eps: f64, lambda0: f64, base_size: u64) -> Result<DesignParams> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(QjlError::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    at_least_one("d2", d2)?;
    if !(d2 < d1) || !d1.is_finite() {
        return Err(QjlError::InvalidParameter(format!("need d2 < d1, got d2={d2}, d1={d1}")));
    }
    if !(lambda0 > 0.0 && lambda0 < 1.0) {
        return Err(QjlError::InvalidParameter(format!("lambda0 must lie in (0, 1), got {lambda0}")));
    }
    if base_size < 1 {
        return Err(QjlError::InvalidParameter("base design needs at least one member".into()));
    }
    let e2d2 = eps * eps * d2;
    let t = ((e2d2 / 512.0).ceil() as u64).max(2);
    let m = ((e2d2 / 1024.0).ceil() as u64).max(1);
    let (tf, mf) = (t as f64, m as f64);
    let lambda_target_log = tf / 2.0 * (4.0 * e2d2).ln() - tf * d1.ln() - tf / 2.0;
    let lambda_required_log = -mf * (2.0 * d1.ln() - (4.0 * e2d2).ln()) - e2d2 / 1024.0;
    let ln_inv_l0 = (1.0 / lambda0).ln();
    let iterations_exact = (2.0 * mf * d1.ln() + 2.0 * mf * (1.0 / eps).ln() + e2d2 / 1024.0) / ln_inv_l0;
    let iterations_upper = d2 * d1.ln() / 256.0 / ln_inv_l0;
    let iterations_k = iterations_exact.ceil() as u64;
    Ok(DesignParams {
        d1,
        d2,
        eps,
        lambda0,
        t,
        m,
        lambda_target_log,
        lambda_required_log,
        iterations_exact,
        iterations_k,
        iterations_upper,
        iterations_bound_holds: iterations_exact <= iterations_upper,
        base_size,
        log_s_bound: iterations_k as f64 * (base_size as f64).ln(),
    })
}
