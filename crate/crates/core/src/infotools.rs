//! Monte Carlo over the information content `-log f(X)`: deviation samples,
//! tails, moment generating functions, entropy-power and typical-set
//! frequencies.
//!
//! Sampling is split into fixed blocks of [`BLOCK_SIZE`] draws. Block `b` uses
//! substream `b` of the caller's stream, so a batch does not depend on how
//! many workers produced it.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{ModelND, RngStream};
use crate::numerics::{find_root_increasing, log_sum_exp, normal_quantile, regularized_gamma_p};
use crate::{Error, Result};

pub const BLOCK_SIZE: usize = 8192;
pub const DEFAULT_CONFIDENCE: f64 = 0.999;

/// Run `f(0..count)` on `workers` threads and return results in index order.
pub fn parallel_map<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if workers <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} worker threads: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

/// Monte Carlo estimate with a two-sided interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub m: usize,
    pub confidence_level: f64,
}

fn z_value(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence level must be in (0, 1), got {confidence}")));
    }
    normal_quantile(0.5 + 0.5 * confidence)
}

/// Counts at or below this use the Poisson limit on the near side of the Wilson interval.
const POISSON_EDGE: usize = 3;

/// Lower limit `q/m` with `P{Gamma(x, 1) <= q} = (1 - confidence)/2`.
fn poisson_lower(x: usize, m: usize, confidence: f64) -> Result<f64> {
    let tail = 0.5 * (1.0 - confidence);
    let a = x as f64;
    let cdf = |q: f64| regularized_gamma_p(a, q).unwrap_or(f64::NAN);
    let q = find_root_increasing(cdf, tail, 0.0, a + 100.0, 1e-12 * tail)?;
    Ok(q / m as f64)
}

impl McEstimate {
    /// Wilson score interval for `successes` out of `m`, with the Poisson
    /// limit replacing the lower (upper) end when at most three successes
    /// (failures) are observed.
    pub fn wilson(successes: usize, m: usize, confidence: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyBatch);
        }
        let z = z_value(confidence)?;
        let mf = m as f64;
        let p = successes as f64 / mf;
        let z2 = z * z;
        let denom = 1.0 + z2 / mf;
        let center = (p + z2 / (2.0 * mf)) / denom;
        let half = z / denom * (p * (1.0 - p) / mf + z2 / (4.0 * mf * mf)).sqrt();
        Ok(Self {
            value: p,
            std_error: (p * (1.0 - p) / mf).sqrt(),
            ci_low: match successes {
                1..=POISSON_EDGE => poisson_lower(successes, m, confidence)?,
                _ => (center - half).clamp(0.0, 1.0).min(p),
            },
            ci_high: match m - successes {
                1..=POISSON_EDGE => 1.0 - poisson_lower(m - successes, m, confidence)?,
                _ => (center + half).clamp(0.0, 1.0).max(p),
            },
            m,
            confidence_level: confidence,
        })
    }

    /// Normal-approximation interval around a sample mean.
    pub fn normal(value: f64, std_error: f64, m: usize, confidence: f64) -> Result<Self> {
        let z = z_value(confidence)?;
        Ok(Self { value, std_error, ci_low: value - z * std_error, ci_high: value + z * std_error, m, confidence_level: confidence })
    }

    pub fn exact(value: f64, m: usize, confidence: f64) -> Self {
        Self { value, std_error: 0.0, ci_low: value, ci_high: value, m, confidence_level: confidence }
    }
}

/// Deviations `-log f(X_k) - h(X)` for i.i.d. draws `X_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoSampleBatch {
    pub model: String,
    pub dim: usize,
    pub entropy: f64,
    pub seed: u64,
    pub stream_id: u64,
    pub block_size: usize,
    pub deviations: Vec<f64>,
}

impl InfoSampleBatch {
    pub fn m(&self) -> usize {
        self.deviations.len()
    }

    /// Split into two halves (first and second) as separate batches.
    pub fn halves(&self) -> (InfoSampleBatch, InfoSampleBatch) {
        let mid = self.m() / 2;
        let mut a = self.clone();
        let mut b = self.clone();
        a.deviations.truncate(mid);
        b.deviations.drain(..mid);
        (a, b)
    }
}

/// Draw `m` samples and return their deviations together with the sample points
/// (flattened, `dim` values per sample) when `keep_points` is set.
fn draw(model: &ModelND, m: usize, rng: &RngStream, workers: usize, keep_points: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::EmptyBatch);
    }
    let n = model.dim();
    let h = model.entropy();
    let blocks = m.div_ceil(BLOCK_SIZE);
    let parts = parallel_map(workers, blocks, |b| {
        let len = BLOCK_SIZE.min(m - b * BLOCK_SIZE);
        let mut r = rng.substream(b as u64).rng();
        let mut devs = Vec::with_capacity(len);
        let mut pts = Vec::with_capacity(if keep_points { len * n } else { 0 });
        let mut x = vec![0.0; n];
        for _ in 0..len {
            model.sample_into(&mut r, &mut x)?;
            let lf = model.log_density(&x)?;
            if !lf.is_finite() {
                return Err(Error::Domain(format!("sample outside the support of {}", model.label())));
            }
            devs.push(-lf - h);
            if keep_points {
                pts.extend_from_slice(&x);
            }
        }
        Ok((devs, pts))
    })?;
    let mut devs = Vec::with_capacity(m);
    let mut pts = Vec::new();
    for (d, p) in parts {
        devs.extend(d);
        pts.extend(p);
    }
    Ok((devs, pts))
}

fn batch_from(model: &ModelND, rng: &RngStream, deviations: Vec<f64>) -> InfoSampleBatch {
    InfoSampleBatch {
        model: model.label().to_string(),
        dim: model.dim(),
        entropy: model.entropy(),
        seed: rng.seed,
        stream_id: rng.stream_id,
        block_size: BLOCK_SIZE,
        deviations,
    }
}

pub fn sample_information(model: &ModelND, m: usize, rng: &RngStream, workers: usize) -> Result<InfoSampleBatch> {
    let (devs, _) = draw(model, m, rng, workers, false)?;
    Ok(batch_from(model, rng, devs))
}

/// Like [`sample_information`] but also returns the sample points, `dim` per row.
pub fn sample_information_with_points(
    model: &ModelND,
    m: usize,
    rng: &RngStream,
    workers: usize,
) -> Result<(InfoSampleBatch, Vec<Vec<f64>>)> {
    let (devs, flat) = draw(model, m, rng, workers, true)?;
    let points = flat.chunks(model.dim()).map(<[f64]>::to_vec).collect();
    Ok((batch_from(model, rng, devs), points))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailScaling {
    /// `P{|dev| >= t sqrt(n)}`
    SqrtN,
    /// `P{|dev| / n >= s}`
    PerCoordinate,
}

impl FromStr for TailScaling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt_n" => Ok(Self::SqrtN),
            "per_coordinate" => Ok(Self::PerCoordinate),
            _ => Err(Error::Config(format!("unknown tail scaling '{s}' (sqrt_n, per_coordinate)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    /// Threshold on `|dev|` in nats.
    pub threshold: f64,
    pub estimate: McEstimate,
}

pub fn empirical_tail(batch: &InfoSampleBatch, thresholds: &[f64], scaling: TailScaling, confidence: f64) -> Result<Vec<TailPoint>> {
    if batch.deviations.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if thresholds.windows(2).any(|w| !(w[0] <= w[1])) || thresholds.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidParameter("thresholds must be non-negative and sorted".into()));
    }
    let mut abs: Vec<f64> = batch.deviations.iter().map(|d| d.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = batch.dim as f64;
    let m = abs.len();
    thresholds
        .iter()
        .map(|&t| {
            let threshold = match scaling {
                TailScaling::SqrtN => t * n.sqrt(),
                TailScaling::PerCoordinate => t * n,
            };
            let below = abs.partition_point(|a| *a < threshold);
            Ok(TailPoint { t, threshold, estimate: McEstimate::wilson(m - below, m, confidence)? })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MgfForm {
    /// `E exp{(alpha / sqrt n) |dev|}`
    TwoSidedAbs,
    /// `E exp{(alpha / sqrt n) dev}`
    OneSided,
}

impl FromStr for MgfForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_sided_abs" | "two_sided" => Ok(Self::TwoSidedAbs),
            "one_sided" => Ok(Self::OneSided),
            _ => Err(Error::Config(format!("unknown mgf form '{s}' (two_sided_abs, one_sided)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfPoint {
    pub alpha: f64,
    /// `log` of the point estimate; finite even when `estimate.value` overflows.
    pub log_value: f64,
    pub estimate: McEstimate,
}

/// Empirical moment generating function of the deviations, accumulated in log domain.
pub fn empirical_mgf(batch: &InfoSampleBatch, alphas: &[f64], form: MgfForm, confidence: f64) -> Result<Vec<MgfPoint>> {
    if batch.deviations.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if form == MgfForm::TwoSidedAbs && alphas.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::InvalidParameter("two-sided MGF needs alpha >= 0".into()));
    }
    let m = batch.m();
    let mf = m as f64;
    let root_n = (batch.dim as f64).sqrt();
    let values: Vec<f64> = match form {
        MgfForm::TwoSidedAbs => batch.deviations.iter().map(|d| d.abs()).collect(),
        MgfForm::OneSided => batch.deviations.clone(),
    };
    alphas
        .iter()
        .map(|&alpha| {
            let a = alpha / root_n;
            if a == 0.0 {
                return Ok(MgfPoint { alpha, log_value: 0.0, estimate: McEstimate::exact(1.0, m, confidence) });
            }
            let log_mean = log_sum_exp(values.iter().map(|v| a * v)) - mf.ln();
            // relative second moment: mean of (e^{a v} / mean)^2
            let log_second = log_sum_exp(values.iter().map(|v| 2.0 * (a * v - log_mean))) - mf.ln();
            let rel_var = (log_second.exp() - 1.0).max(0.0) * mf / (mf - 1.0).max(1.0);
            let value = log_mean.exp();
            let se = value * (rel_var / mf).sqrt();
            Ok(MgfPoint { alpha, log_value: log_mean, estimate: McEstimate::normal(value, se, m, confidence)? })
        })
        .collect()
}

/// Sample mean of the deviations.
pub fn deviation_mean(batch: &InfoSampleBatch, confidence: f64) -> Result<McEstimate> {
    let m = batch.m();
    if m < 2 {
        return Err(Error::EmptyBatch);
    }
    let mf = m as f64;
    let mean = batch.deviations.iter().sum::<f64>() / mf;
    let var = batch.deviations.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (mf - 1.0);
    McEstimate::normal(mean, (var / mf).sqrt(), m, confidence)
}

/// Sample variance of the deviations with a fourth-moment standard error.
pub fn deviation_variance(batch: &InfoSampleBatch, confidence: f64) -> Result<McEstimate> {
    let m = batch.m();
    if m < 2 {
        return Err(Error::EmptyBatch);
    }
    let mf = m as f64;
    let mean = batch.deviations.iter().sum::<f64>() / mf;
    let sq: Vec<f64> = batch.deviations.iter().map(|d| (d - mean).powi(2)).collect();
    let var = sq.iter().sum::<f64>() / (mf - 1.0);
    let m4 = sq.iter().map(|s| s * s).sum::<f64>() / mf;
    let se = ((m4 - var * var).max(0.0) / mf).sqrt();
    McEstimate::normal(var, se, m, confidence)
}

/// Frequency of `N e^{-2s} < f(X)^{-2/n} < N e^{2s}`, i.e. `|dev| < s n`.
///
/// `N = exp(2h/n)` is the entropy power; `s = 1` is the usual choice.
pub fn entropy_power_band(batch: &InfoSampleBatch, s: f64, confidence: f64) -> Result<McEstimate> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("band half-width s must be positive, got {s}")));
    }
    let n = batch.dim as f64;
    let log_n_power = 2.0 * batch.entropy / n;
    let hits = batch
        .deviations
        .iter()
        .filter(|d| {
            // log f(X)^{-2/n} = 2 (h + dev) / n
            let log_f_pow = 2.0 * (batch.entropy + **d) / n;
            (log_f_pow - log_n_power).abs() < 2.0 * s
        })
        .count();
    McEstimate::wilson(hits, batch.m(), confidence)
}

/// Frequency of the band `N e^{-2/n} < f(X)^{2/n} < N e^{2/n}` read literally.
pub fn entropy_power_band_literal(batch: &InfoSampleBatch, confidence: f64) -> Result<McEstimate> {
    let n = batch.dim as f64;
    let log_n_power = 2.0 * batch.entropy / n;
    let hits = batch
        .deviations
        .iter()
        .filter(|d| {
            let log_f_pow = -2.0 * (batch.entropy + **d) / n;
            (log_f_pow - log_n_power).abs() < 2.0 / n
        })
        .count();
    McEstimate::wilson(hits, batch.m(), confidence)
}

/// Frequency of `e^{-h - n eps} <= f(X) <= e^{-h + n eps}`, i.e. `|dev| <= n eps`.
pub fn typical_set_fraction(batch: &InfoSampleBatch, epsilon: f64, confidence: f64) -> Result<McEstimate> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let width = batch.dim as f64 * epsilon;
    let hits = batch.deviations.iter().filter(|d| d.abs() <= width).count();
    McEstimate::wilson(hits, batch.m(), confidence)
}

/// Write `index,deviation_nats` rows.
pub fn write_batch_csv<W: Write>(batch: &InfoSampleBatch, mut out: W) -> Result<()> {
    writeln!(out, "index,deviation_nats")?;
    for (i, d) in batch.deviations.iter().enumerate() {
        writeln!(out, "{i},{d:.16e}")?;
    }
    Ok(())
}

/// One exported estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub quantity: String,
    pub value: f64,
    pub se: f64,
    pub ci: [f64; 2],
    pub m: usize,
    pub seed: u64,
}

impl EstimateRecord {
    pub fn new(quantity: impl Into<String>, est: &McEstimate, seed: u64) -> Self {
        Self { quantity: quantity.into(), value: est.value, se: est.std_error, ci: [est.ci_low, est.ci_high], m: est.m, seed }
    }
}
