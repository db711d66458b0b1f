//! Closed-form concentration bounds and the verdict comparator.
//!
//! Exponents are formed first and exponentiated last. Evaluation
//! outside a bound's validity window returns the value with `in_window = false`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::infotools::McEstimate;
use crate::numerics::{find_root_increasing, trigamma};
use crate::{Error, Result};

/// Exponent constant `c` of the tail theorems.
pub const TAIL_RATE: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub in_window: bool,
}

impl BoundValue {
    fn new(prefactor: f64, exponent: f64, in_window: bool) -> Self {
        Self { value: prefactor * exponent.exp(), in_window }
    }
}

/// `2 e^{-t/16}`, valid for `t >= 0`.
pub fn thm_exp_tail(t: f64) -> BoundValue {
    BoundValue::new(2.0, -t * TAIL_RATE, t >= 0.0)
}

/// `3 e^{-t^2/16}`, valid for `0 <= t <= 2 sqrt(n)`.
pub fn thm_gaus_tail(t: f64, n: usize) -> BoundValue {
    BoundValue::new(3.0, -t * t * TAIL_RATE, t >= 0.0 && t <= 2.0 * (n as f64).sqrt())
}

/// Per-coordinate form `3 e^{-s^2 n/16}` for `P{|dev|/n >= s}`, valid for `0 <= s <= 2`.
pub fn per_coordinate_tail(s: f64, n: usize) -> BoundValue {
    BoundValue::new(3.0, -s * s * n as f64 * TAIL_RATE, (0.0..=2.0).contains(&s))
}

/// Lower bound `1 - 3 e^{-s^2 n/16}` on the entropy-power band and typical-set
/// probabilities, valid for `0 <= s <= 2`.
pub fn typical_set_bound(s: f64, n: usize) -> BoundValue {
    let tail = per_coordinate_tail(s, n);
    BoundValue { value: 1.0 - tail.value, in_window: tail.in_window && s > 0.0 }
}

/// One-dimensional MGF bound `2^{1+a} / ((1-a)(2-a))` for `E e^{a|dev|}`, `0 <= a < 1`.
pub fn prop1d_mgf_bound(alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!("one-dimensional MGF bound needs 0 <= alpha < 1, got {alpha}")));
    }
    Ok(2.0 * (alpha * std::f64::consts::LN_2 - (1.0 - alpha).ln() - (2.0 - alpha).ln()).exp())
}

/// One-dimensional tail `4 e^{-t/2}`.
pub fn cheb_1d_tail(t: f64) -> f64 {
    (4f64.ln() - 0.5 * t).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    TwoSided,
    OneSided,
}

impl FromStr for Sidedness {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_sided" | "two_sided_abs" => Ok(Self::TwoSided),
            "one_sided" => Ok(Self::OneSided),
            _ => Err(Error::Config(format!("unknown form '{s}' (two_sided, one_sided)"))),
        }
    }
}

/// Order-`p` MGF bounds for `log xi`: `2 e^{2a^2/(p-1)}` (two-sided, `0 <= a <= p-1`)
/// and `e^{2a^2/(p-1)}` (one-sided, `|a| <= p-1`).
pub fn lemma5_mgf(alpha: f64, p: f64, form: Sidedness) -> Result<BoundValue> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("order-p MGF bound needs p > 1, got {p}")));
    }
    let exponent = 2.0 * alpha * alpha / (p - 1.0);
    Ok(match form {
        Sidedness::TwoSided => BoundValue::new(2.0, exponent, alpha >= 0.0 && alpha <= p - 1.0),
        Sidedness::OneSided => BoundValue::new(1.0, exponent, alpha.abs() <= p - 1.0),
    })
}

/// Uniform bound 3 for `E e^{(sqrt(p)/6)|log xi - E log xi|}` at any order `p >= 1`.
pub const ORDER_P_UNIFORM_MGF: f64 = 3.0;

/// `2 e^{4c^2}` at `c = 1/6`, the value behind [`ORDER_P_UNIFORM_MGF`] for `p >= 2`.
pub fn order_p_uniform_chain() -> f64 {
    2.0 * (1.0f64 / 9.0).exp()
}

/// `C_p = (p+1)^{p+1} (p-1)^{p-1} p^{-2p}` for `p > 1`.
pub fn c_p(p: f64) -> Result<f64> {
    Ok(log_c_p(p)?.exp())
}

/// `log C_p`, a second difference of `x log x` at `p`.
pub fn log_c_p(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("C_p needs p > 1, got {p}")));
    }
    let q = 1.0 / p;
    // p [(1+q) log(1+q) + (1-q) log(1-q)] avoids cancellation for large p
    Ok(p * ((1.0 + q) * q.ln_1p() + (1.0 - q) * (-q).ln_1p()))
}

/// Variance caps for a positive random variable of order `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceCaps {
    pub p: f64,
    /// `Var(log xi) <= trigamma(p)`
    pub trigamma: f64,
    /// `Var(xi) / (E xi)^2 <= 1/p`
    pub ratio_cap: f64,
    /// `Var(xi) / (E xi)^2 <= C_p - 1`, for `p > 1`
    pub cp_cap: Option<f64>,
    /// `Var(log xi) <= 1/(p-1)`, for `p > 1`
    pub log_cap: Option<f64>,
}

pub fn order_p_variance_caps(p: f64) -> Result<VarianceCaps> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("order p must be >= 1, got {p}")));
    }
    let above_one = p > 1.0;
    Ok(VarianceCaps {
        p,
        trigamma: trigamma(p)?,
        ratio_cap: 1.0 / p,
        cp_cap: if above_one { Some(c_p(p)? - 1.0) } else { None },
        log_cap: if above_one { Some(1.0 / (p - 1.0)) } else { None },
    })
}

/// `3 e^{4a^2}` for `E exp{(a/sqrt n)|dev|}`, valid for `0 <= a <= sqrt(n)/4`.
pub fn thm_mgf_bound(alpha: f64, n: usize) -> BoundValue {
    BoundValue::new(3.0, 4.0 * alpha * alpha, alpha >= 0.0 && alpha <= 0.25 * (n as f64).sqrt())
}

/// Tail from the MGF bound via Chebyshev: `3 e^{4a^2 - a t}`.
pub fn mgf_chebyshev_tail(t: f64, alpha: f64, n: usize) -> BoundValue {
    let m = thm_mgf_bound(alpha, n);
    BoundValue::new(3.0, 4.0 * alpha * alpha - alpha * t, m.in_window && t > 0.0)
}

/// Cap on `Var(h~)/n` implied by the MGF theorem through `e^x >= x^2/2`:
/// `Var(h~)/n <= 6 e^{4a^2} / a^2`, minimized over the window `0 < a <= sqrt(n)/4`.
pub fn variance_cap_from_mgf(n: usize) -> f64 {
    let a = (0.25 * (n as f64).sqrt()).min(0.5);
    6.0 * (4.0 * a * a).exp() / (a * a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorMgf {
    /// Multiplier of `|dev|/sqrt(n)` in the exponent.
    pub scale: f64,
    pub bound: f64,
    /// `3^{1/4} e^{1/16}`, which must stay below `bound`.
    pub chain_value: f64,
}

pub fn cor_mgf_bound() -> CorMgf {
    CorMgf { scale: 1.0 / 16.0, bound: 2.0, chain_value: (0.25 * 3f64.ln() + 1.0 / 16.0).exp() }
}

/// The `t` where the exponential and Gaussian tail bounds cross
/// (`2 e^{-t/16} = 3 e^{-t^2/16}`); beyond it the Gaussian form is smaller.
pub fn tail_crossover() -> Result<f64> {
    // log ratio of Gaussian to exponential bound, increasing for t > 1/2
    let g = |t: f64| (2.0f64 / 3.0).ln() + (t * t - t) * TAIL_RATE;
    find_root_increasing(g, 0.0, 0.5, 100.0, 1e-14)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "HOLDS",
            Verdict::Violated => "VIOLATED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Whether the theory claims an upper or a lower bound on the quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub verdict: Verdict,
    pub side: BoundSide,
    pub bound: f64,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Distance from the relevant confidence limit to the bound; positive when the claim holds.
    pub margin: f64,
    /// The bound carries no information (e.g. a probability bound above 1).
    pub vacuous: bool,
}

fn verdict_upper(est: &McEstimate, bound: f64, vacuous: bool) -> BoundVerdict {
    let verdict = if est.ci_high <= bound {
        Verdict::Holds
    } else if est.ci_low > bound {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    BoundVerdict {
        verdict,
        side: BoundSide::Upper,
        bound,
        value: est.value,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
        margin: bound - est.ci_high,
        vacuous,
    }
}

/// Upper-bound check: HOLDS if `ci_high <= bound`, VIOLATED if `ci_low > bound`.
pub fn compare(est: &McEstimate, bound: f64) -> BoundVerdict {
    verdict_upper(est, bound, false)
}

/// [`compare`] for probabilities; bounds of at least 1 are tagged vacuous.
pub fn compare_probability(est: &McEstimate, bound: f64) -> BoundVerdict {
    verdict_upper(est, bound, bound >= 1.0)
}

/// Lower-bound check on a probability: HOLDS if `ci_low >= bound`,
/// VIOLATED if `ci_high < bound`. Bounds of at most 0 are vacuous.
pub fn compare_lower_probability(est: &McEstimate, bound: f64) -> BoundVerdict {
    let verdict = if est.ci_low >= bound {
        Verdict::Holds
    } else if est.ci_high < bound {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    BoundVerdict {
        verdict,
        side: BoundSide::Lower,
        bound,
        value: est.value,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
        margin: est.ci_low - bound,
        vacuous: bound <= 0.0,
    }
}

/// One entry of the bound catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub formula_text: String,
    pub validity: String,
    pub paper_anchor: String,
}

pub fn catalog() -> Vec<CatalogEntry> {
    let e = |name: &str, formula: &str, validity: &str, anchor: &str| CatalogEntry {
        name: name.into(),
        formula_text: formula.into(),
        validity: validity.into(),
        paper_anchor: anchor.into(),
    };
    vec![
        e("thm_exp_tail", "P{|h~ - h| >= t sqrt(n)} <= 2 exp(-t/16)", "t >= 0, c = 1/16", "exponential tail theorem, one may take c=1/16"),
        e("thm_gaus_tail", "P{|h~ - h| >= t sqrt(n)} <= 3 exp(-t^2/16)", "0 <= t <= 2 sqrt(n), c = 1/16", "Gaussian tail theorem"),
        e("per_coordinate_tail", "P{|h~/n - h/n| >= s} <= 3 exp(-s^2 n/16)", "0 <= s <= 2", "per-coordinate deviation form"),
        e("entropy_power_band", "P{N e^{-2s} < f(X)^{-2/n} < N e^{2s}} >= 1 - 3 exp(-s^2 n/16)", "0 < s <= 2; s = 1 by default", "entropy power consequence"),
        e("typical_set", "P{e^{-h-n eps} <= f(X) <= e^{-h+n eps}} >= 1 - 3 exp(-eps^2 n/16)", "0 < eps <= 2", "typical set"),
        e("prop1d_mgf", "E exp(|h~ - h|/2) < 4", "n = 1", "one-dimensional MGF bound, (8/3) sqrt 2 < 4"),
        e("prop1d_mgf_alpha", "E exp(a |h~ - h|) <= 2^{1+a} / ((1-a)(2-a))", "n = 1, 0 <= a < 1", "one-dimensional MGF bound, general alpha"),
        e("cheb_1d_tail", "P{|h~ - h| >= t} <= 4 exp(-t/2)", "n = 1, t > 0", "one-dimensional Chebyshev tail"),
        e("lemma5_two_sided", "E exp(a |log xi - E log xi|) <= 2 exp(2a^2/(p-1))", "order p > 1, 0 <= a <= p-1", "order-p MGF bound, two-sided"),
        e("lemma5_one_sided", "E exp(a (log xi - E log xi)) <= exp(2a^2/(p-1))", "order p > 1, |a| <= p-1", "order-p MGF bound, one-sided"),
        e("order_p_uniform_mgf", "E exp((sqrt(p)/6) |log xi - E log xi|) < 3", "order p >= 1", "order-p uniform MGF bound, 2 e^{1/9} < 3"),
        e("trigamma_var_log", "Var(log xi) <= trigamma(p)", "order p >= 1; equality for Gamma(p)", "equality is attained at the Gamma distribution"),
        e("log_var_cap", "Var(log xi) <= 1/(p-1)", "order p > 1", "alternative log-variance bound, holds for any p>1"),
        e("var_ratio_cap", "Var(xi) <= (E xi)^2 / p", "order p >= 1; equality for Gamma(p)", "strengthened concentration of order p"),
        e("cp_var_cap", "Var(xi) <= (C_p - 1)(E xi)^2, C_p = (p+1)^{p+1}(p-1)^{p-1}p^{-2p}", "order p > 1", "C_p bound, C_p = 1 + 1/p + O(1/p^3)"),
        e("reverse_lyapunov", "p -> log(E eta^p / Gamma(p+1)) is concave", "eta > 0 log-concave, p > 0", "reverse Lyapunov inequality"),
        e("hat_moment_concavity", "p -> log E (eta/p)^p is concave", "eta > 0 log-concave, p > 0", "log-concavity of the hat moment function"),
        e("lyapunov", "p -> log E eta^p is convex", "eta > 0, p > 0", "Lyapunov inequality"),
        e("khinchine", "E xi^p <= Gamma(p+1) (E xi)^p", "xi > 0 log-concave, p >= 1", "Khinchine-type inequality"),
        e("thm_mgf", "E exp((a/sqrt n) |h~ - h|) <= 3 exp(4 a^2)", "0 <= a <= sqrt(n)/4", "dimension-n MGF theorem"),
        e("cor_mgf", "E exp(|h~ - h| / (16 sqrt n)) <= 2", "all n; 3^{1/4} e^{1/16} < 2", "MGF corollary at scale 1/16"),
        e("variance_cap", "Var(h~) <= 24 e n (n >= 4), from the MGF theorem and e^x >= x^2/2", "all n; 6 e^{n/4} 16/n for n < 4", "variance bounded by Cn"),
        e("mgf_chebyshev_tail", "P{|h~ - h| >= t sqrt(n)} <= 3 exp(4a^2 - a t)", "t > 0, 0 <= a <= sqrt(n)/4", "Chebyshev step from the MGF theorem"),
    ]
}
