//! Exact rejection sampling for log-concave densities on an interval.
//!
//! The envelope is anchored at the mode `m`: it is flat at the peak between
//! the two points `l < m < r` where `log f` has dropped by one, and decays
//! exponentially beyond them along the chords through `(m, log f(m))`. By
//! concavity each chord dominates `log f` outside its segment, so the envelope
//! is valid for every log-concave input.

use rand::distributions::Open01;
use rand::Rng;

use crate::numerics::concave_profile;
use crate::{Error, Result};

const PEAK_SLACK: f64 = 1e-9;
const MAX_TRIES: usize = 10_000;

/// Rejection envelope for one log-concave density (possibly unnormalized).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSampler {
    lo: f64,
    hi: f64,
    mode: f64,
    peak: f64,
    flat_lo: f64,
    flat_hi: f64,
    /// Decay rate of the left tail, if the density drops by one before `lo`.
    left_rate: Option<f64>,
    right_rate: Option<f64>,
    /// Piece masses relative to `exp(peak)`: flat, left tail, right tail.
    weights: [f64; 3],
}

impl EnvelopeSampler {
    /// Build the envelope. `start` is any interior point, `scale` a rough width.
    ///
    /// Fails when the density is visibly not log-concave on a probe grid.
    pub fn new<F: Fn(f64) -> f64>(log_f: &F, lo: f64, hi: f64, start: f64, scale: f64) -> Result<Self> {
        let profile = concave_profile(log_f, lo, hi, start, scale)
            .map_err(|e| Error::Envelope(format!("mode search failed: {e}")))?;
        let mode = profile.mode;
        let peak = profile.peak + PEAK_SLACK * profile.peak.abs().max(1.0);
        let (flat_lo, flat_hi) = (profile.left, profile.right);

        let left_rate = (flat_lo > lo).then(|| 1.0 / (mode - flat_lo));
        let right_rate = (flat_hi < hi).then(|| 1.0 / (flat_hi - mode));
        let tail_mass = |rate: Option<f64>, span: f64| match rate {
            Some(r) => (-1.0f64).exp() / r * -(-r * span).exp_m1(),
            None => 0.0,
        };
        let weights = [
            flat_hi - flat_lo,
            tail_mass(left_rate, flat_lo - lo),
            tail_mass(right_rate, hi - flat_hi),
        ];
        if !weights.iter().all(|w| w.is_finite() && *w >= 0.0) || weights[0] <= 0.0 {
            return Err(Error::Envelope(format!("degenerate envelope weights {weights:?}")));
        }
        let sampler = Self { lo, hi, mode, peak, flat_lo, flat_hi, left_rate, right_rate, weights };
        sampler.validate(log_f)?;
        Ok(sampler)
    }

    pub fn mode(&self) -> f64 {
        self.mode
    }

    /// Log of the envelope at `x`.
    pub fn log_envelope(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return f64::NEG_INFINITY;
        }
        if x < self.flat_lo {
            let r = self.left_rate.unwrap_or(0.0);
            self.peak - 1.0 - (self.flat_lo - x) * r
        } else if x > self.flat_hi {
            let r = self.right_rate.unwrap_or(0.0);
            self.peak - 1.0 - (x - self.flat_hi) * r
        } else {
            self.peak
        }
    }

    /// Expected number of proposals per accepted draw, given the log normalizer of `f`.
    pub fn expected_trials(&self, log_normalizer: f64) -> f64 {
        self.weights.iter().sum::<f64>() * (self.peak - log_normalizer).exp()
    }

    fn validate<F: Fn(f64) -> f64>(&self, log_f: &F) -> Result<()> {
        let mut grid = Vec::with_capacity(96);
        let inner = |a: f64, b: f64, k: usize, out: &mut Vec<f64>| {
            for i in 1..k {
                out.push(a + (b - a) * i as f64 / k as f64);
            }
        };
        if let Some(r) = self.left_rate {
            let far = (self.flat_lo - 24.0 / r).max(self.lo);
            inner(far, self.flat_lo, 32, &mut grid);
        }
        inner(self.flat_lo, self.flat_hi, 32, &mut grid);
        if let Some(r) = self.right_rate {
            let far = (self.flat_hi + 24.0 / r).min(self.hi);
            inner(self.flat_hi, far, 32, &mut grid);
        }
        grid.retain(|x| *x > self.lo && *x < self.hi);
        for &x in &grid {
            let lf = log_f(x);
            if lf > self.log_envelope(x) + PEAK_SLACK {
                return Err(Error::Envelope(format!(
                    "log density {lf} exceeds envelope {} at {x}; input is not log-concave",
                    self.log_envelope(x)
                )));
            }
        }
        // midpoint concavity on equally spaced sub-grids
        let h = (self.flat_hi - self.flat_lo) / 64.0;
        if h > 0.0 {
            for i in 1..64 {
                let x = self.flat_lo + h * i as f64;
                let (a, b, c) = (log_f(x - h * 0.5), log_f(x), log_f(x + h * 0.5));
                if a.is_finite() && c.is_finite() && b < 0.5 * (a + c) - 1e-9 * b.abs().max(1.0) {
                    return Err(Error::Envelope(format!("log density is not concave near {x}")));
                }
            }
        }
        Ok(())
    }

    /// Draw one exact sample from the density `exp(log_f)`.
    pub fn sample<F: Fn(f64) -> f64, R: Rng + ?Sized>(&self, log_f: &F, rng: &mut R) -> Result<f64> {
        let total: f64 = self.weights.iter().sum();
        for _ in 0..MAX_TRIES {
            let pick = rng.gen::<f64>() * total;
            let u: f64 = rng.sample(Open01);
            let x = if pick < self.weights[0] {
                self.flat_lo + u * (self.flat_hi - self.flat_lo)
            } else if pick < self.weights[0] + self.weights[1] {
                let r = self.left_rate.expect("left weight implies left tail");
                self.flat_lo - truncated_exp(u, r, self.flat_lo - self.lo)
            } else {
                let r = self.right_rate.expect("right weight implies right tail");
                self.flat_hi + truncated_exp(u, r, self.hi - self.flat_hi)
            };
            if !(x > self.lo && x < self.hi) {
                continue;
            }
            let lf = log_f(x);
            let le = self.log_envelope(x);
            if lf > le + PEAK_SLACK {
                return Err(Error::Envelope(format!("envelope violated at {x}: {lf} > {le}")));
            }
            let v: f64 = rng.sample(Open01);
            if v.ln() <= lf - le {
                return Ok(x);
            }
        }
        Err(Error::Envelope(format!("no acceptance after {MAX_TRIES} proposals")))
    }
}

/// Inverse CDF of an exponential with rate `r` truncated to `[0, span)`.
fn truncated_exp(u: f64, r: f64, span: f64) -> f64 {
    let mass = -(-r * span).exp_m1();
    -(-u * mass).ln_1p() / r
}
