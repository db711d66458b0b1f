//! One-dimensional log-concave densities.

use std::f64::consts::{E, PI};

use rand::distributions::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::sampler::EnvelopeSampler;
use crate::numerics::{
    find_root_increasing, integrate_with, ln_gamma_positive, normal_cdf, normal_quantile, normal_sf,
    regularized_beta, regularized_gamma_p, Interval, QuadOptions,
};
use crate::{Error, Result};

/// Absolute tolerance for entropy and CDF quadratures.
const QUAD_TOL: f64 = 1e-12;

/// Parametric families in the zoo. Every member is log-concave on its support
/// for the parameter ranges accepted by [`make_standard`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family1D {
    Exponential { rate: f64 },
    /// Unit-scale Gamma with shape `p >= 1`; log-concave of order `p`.
    Gamma { shape: f64 },
    #[serde(rename = "gaussian1d")]
    Gaussian1D { mean: f64, sd: f64 },
    Laplace { loc: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    HalfNormal { sd: f64 },
    /// Chi distribution, density proportional to `x^(dof-1) exp(-x^2/2)`; order `dof`.
    Chi { dof: f64 },
    Beta { a: f64, b: f64 },
    /// Unit-scale Weibull, density `k x^(k-1) exp(-x^k)`; order `k`.
    Weibull { shape: f64 },
}

impl Family1D {
    pub fn name(&self) -> String {
        match *self {
            Family1D::Exponential { rate } if rate == 1.0 => "exponential".into(),
            Family1D::Exponential { rate } => format!("exponential(rate={rate})"),
            Family1D::Gamma { shape } => format!("gamma({shape})"),
            Family1D::Gaussian1D { mean, sd } => format!("gaussian1d({mean},{sd})"),
            Family1D::Laplace { loc, scale } => format!("laplace({loc},{scale})"),
            Family1D::Uniform { lo, hi } => format!("uniform({lo},{hi})"),
            Family1D::HalfNormal { sd } => format!("half_normal({sd})"),
            Family1D::Chi { dof } => format!("chi({dof})"),
            Family1D::Beta { a, b } => format!("beta({a},{b})"),
            Family1D::Weibull { shape } => format!("weibull({shape})"),
        }
    }
}

/// How draws are produced.
#[derive(Debug, Clone, PartialEq)]
enum Draw {
    InverseCdf,
    Normal,
    AbsNormal,
    Envelope(EnvelopeSampler),
}

/// A normalized one-dimensional log-concave density.
#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    family: Family1D,
    lo: f64,
    hi: f64,
    /// Additive constant of the log-density.
    log_norm: f64,
    entropy: f64,
    mode: f64,
    scale: f64,
    order_p: Option<f64>,
    draw: Draw,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma_positive(a) + ln_gamma_positive(b) - ln_gamma_positive(a + b)
}

/// Build a zoo member, validating its parameters.
pub fn make_standard(family: Family1D) -> Result<Density1D> {
    let finite = |v: f64| v.is_finite();
    let inf = f64::INFINITY;
    // (lo, hi, log_norm, mode, scale, order, closed-form entropy, draw)
    let (lo, hi, log_norm, mode, scale, order_p, closed_entropy, draw) = match family {
        Family1D::Exponential { rate } => {
            check(rate > 0.0 && finite(rate), || format!("exponential rate must be > 0, got {rate}"))?;
            (0.0, inf, rate.ln(), 0.0, 1.0 / rate, Some(1.0), Some(1.0 - rate.ln()), Draw::InverseCdf)
        }
        Family1D::Gamma { shape } => {
            check(shape >= 1.0 && finite(shape), || format!("gamma shape must be >= 1 for log-concavity, got {shape}"))?;
            (0.0, inf, -ln_gamma_positive(shape), shape - 1.0, shape.sqrt(), Some(shape), None, Draw::InverseCdf)
        }
        Family1D::Gaussian1D { mean, sd } => {
            check(sd > 0.0 && finite(sd) && finite(mean), || format!("gaussian needs finite mean and sd > 0, got ({mean}, {sd})"))?;
            let ln_norm = -sd.ln() - 0.5 * (2.0 * PI).ln();
            let h = 0.5 * (2.0 * PI * E * sd * sd).ln();
            (-inf, inf, ln_norm, mean, sd, None, Some(h), Draw::Normal)
        }
        Family1D::Laplace { loc, scale } => {
            check(scale > 0.0 && finite(scale) && finite(loc), || format!("laplace needs scale > 0, got {scale}"))?;
            (-inf, inf, -(2.0 * scale).ln(), loc, scale, None, Some(1.0 + (2.0 * scale).ln()), Draw::InverseCdf)
        }
        Family1D::Uniform { lo, hi } => {
            check(lo < hi && finite(lo) && finite(hi), || format!("uniform needs lo < hi, got ({lo}, {hi})"))?;
            let w = hi - lo;
            let order = (lo >= 0.0).then_some(1.0);
            (lo, hi, -w.ln(), 0.5 * (lo + hi), w, order, Some(w.ln()), Draw::InverseCdf)
        }
        Family1D::HalfNormal { sd } => {
            check(sd > 0.0 && finite(sd), || format!("half-normal sd must be > 0, got {sd}"))?;
            let ln_norm = 2f64.ln() - sd.ln() - 0.5 * (2.0 * PI).ln();
            (0.0, inf, ln_norm, 0.0, sd, Some(1.0), Some(0.5 * (0.5 * PI * E * sd * sd).ln()), Draw::AbsNormal)
        }
        Family1D::Chi { dof } => {
            check(dof >= 1.0 && finite(dof), || format!("chi dof must be >= 1, got {dof}"))?;
            let ln_norm = -(0.5 * dof - 1.0) * 2f64.ln() - ln_gamma_positive(0.5 * dof);
            (0.0, inf, ln_norm, (dof - 1.0).sqrt(), 1.0, Some(dof), None, Draw::InverseCdf)
        }
        Family1D::Beta { a, b } => {
            check(a >= 1.0 && b >= 1.0 && finite(a) && finite(b), || format!("beta needs a, b >= 1, got ({a}, {b})"))?;
            let mode = if a + b > 2.0 { (a - 1.0) / (a + b - 2.0) } else { 0.5 };
            let sd = (a * b / ((a + b) * (a + b) * (a + b + 1.0))).sqrt();
            (0.0, 1.0, -ln_beta(a, b), mode, sd, Some(a), None, Draw::InverseCdf)
        }
        Family1D::Weibull { shape } => {
            check(shape >= 1.0 && finite(shape), || format!("weibull shape must be >= 1, got {shape}"))?;
            let mode = ((shape - 1.0) / shape).powf(1.0 / shape);
            (0.0, inf, shape.ln(), mode, 1.0 / shape, Some(shape), None, Draw::InverseCdf)
        }
    };

    let mut d = Density1D { family, lo, hi, log_norm, entropy: f64::NAN, mode, scale, order_p, draw };

    // Families without a closed-form quantile are sampled by rejection.
    if matches!(family, Family1D::Gamma { .. } | Family1D::Chi { .. } | Family1D::Beta { .. }) {
        let start = d.interior_point();
        let lf = |x: f64| d.log_density(x);
        d.draw = Draw::Envelope(EnvelopeSampler::new(&lf, lo, hi, start, scale)?);
    }

    d.entropy = match closed_entropy {
        Some(h) => h,
        None => d.entropy_by_quadrature()?,
    };
    Ok(d)
}

impl Density1D {
    pub fn family(&self) -> Family1D {
        self.family
    }

    pub fn name(&self) -> String {
        self.family.name()
    }

    /// Open support `(lo, hi)`.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn has_positive_support(&self) -> bool {
        self.lo >= 0.0
    }

    /// Mode of the density (may sit on the support boundary).
    pub fn mode(&self) -> f64 {
        self.mode
    }

    /// Rough width, used to scale quadrature maps and brackets.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Declared order `p` of the factorization `f(x) = x^(p-1) g(x)` on `(0, inf)`.
    pub fn order_p(&self) -> Option<f64> {
        self.order_p
    }

    /// Entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    fn interior_point(&self) -> f64 {
        let m = self.mode;
        if m > self.lo && m < self.hi {
            return m;
        }
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + self.scale,
            (false, true) => self.hi - self.scale,
            (false, false) => 0.0,
        }
    }

    /// `log f(x)`, `-inf` outside the open support.
    pub fn log_density(&self, x: f64) -> f64 {
        if !(x > self.lo && x < self.hi) {
            return f64::NEG_INFINITY;
        }
        let c = self.log_norm;
        match self.family {
            Family1D::Exponential { rate } => c - rate * x,
            Family1D::Gamma { shape } => c + (shape - 1.0) * x.ln() - x,
            Family1D::Gaussian1D { mean, sd } => {
                let z = (x - mean) / sd;
                c - 0.5 * z * z
            }
            Family1D::Laplace { loc, scale } => c - (x - loc).abs() / scale,
            Family1D::Uniform { .. } => c,
            Family1D::HalfNormal { sd } => {
                let z = x / sd;
                c - 0.5 * z * z
            }
            Family1D::Chi { dof } => c + (dof - 1.0) * x.ln() - 0.5 * x * x,
            Family1D::Beta { a, b } => c + (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p(),
            Family1D::Weibull { shape } => c + (shape - 1.0) * x.ln() - x.powf(shape),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// `log g(x) = log f(x) - (p - 1) log x` for the declared order `p`.
    pub fn log_order_factor(&self, x: f64) -> Option<f64> {
        let p = self.order_p?;
        let lf = self.log_density(x);
        Some(if lf == f64::NEG_INFINITY { lf } else { lf - (p - 1.0) * x.ln() })
    }

    fn quad_options(&self, abs_tol: f64) -> QuadOptions {
        QuadOptions::with_tol(abs_tol).pivot(self.interior_point()).scale(self.scale)
    }

    /// `E phi(X)` by adaptive quadrature against the density.
    pub fn expect<F: Fn(f64) -> f64>(&self, phi: F, abs_tol: f64) -> Result<f64> {
        let integrand = |x: f64| {
            let f = self.density(x);
            if f == 0.0 {
                0.0
            } else {
                f * phi(x)
            }
        };
        let r = integrate_with(integrand, Interval::new(self.lo, self.hi), &self.quad_options(abs_tol))?;
        Ok(r.require_converged()?.value)
    }

    fn entropy_by_quadrature(&self) -> Result<f64> {
        self.expect(|x| -self.log_density(x), QUAD_TOL)
    }

    /// Distribution function.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain("cdf at NaN".into()));
        }
        if x <= self.lo {
            return Ok(0.0);
        }
        if x >= self.hi {
            return Ok(1.0);
        }
        Ok(match self.family {
            Family1D::Exponential { rate } => -(-rate * x).exp_m1(),
            Family1D::Gamma { shape } => regularized_gamma_p(shape, x)?,
            Family1D::Gaussian1D { mean, sd } => normal_cdf((x - mean) / sd),
            Family1D::Laplace { loc, scale } => {
                let z = (x - loc) / scale;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Family1D::Uniform { lo, hi } => (x - lo) / (hi - lo),
            Family1D::HalfNormal { sd } => 1.0 - 2.0 * normal_sf(x / sd),
            Family1D::Chi { dof } => regularized_gamma_p(0.5 * dof, 0.5 * x * x)?,
            Family1D::Beta { a, b } => regularized_beta(a, b, x)?,
            Family1D::Weibull { shape } => -(-x.powf(shape)).exp_m1(),
        })
    }

    /// Quantile function `F^-1(t)` for `0 < t < 1`.
    pub fn quantile(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("quantile requires 0 < t < 1, got {t}")));
        }
        Ok(match self.family {
            Family1D::Exponential { rate } => -(-t).ln_1p() / rate,
            Family1D::Gaussian1D { mean, sd } => mean + sd * normal_quantile(t)?,
            Family1D::Laplace { loc, scale } => {
                if t < 0.5 {
                    loc + scale * (2.0 * t).ln()
                } else {
                    loc - scale * (2.0 * (1.0 - t)).ln()
                }
            }
            Family1D::Uniform { lo, hi } => lo + t * (hi - lo),
            Family1D::HalfNormal { sd } => sd * normal_quantile(0.5 * (1.0 + t))?,
            Family1D::Weibull { shape } => (-(-t).ln_1p()).powf(1.0 / shape),
            Family1D::Gamma { .. } | Family1D::Chi { .. } | Family1D::Beta { .. } => self.quantile_by_root(t)?,
        })
    }

    fn quantile_by_root(&self, t: f64) -> Result<f64> {
        let lo = self.lo;
        let mut hi = if self.hi.is_finite() { self.hi } else { self.interior_point() + self.scale };
        while self.cdf(hi)? < t {
            hi += 2.0 * (hi - lo).max(self.scale);
        }
        find_root_increasing(|x| self.cdf(x).unwrap_or(f64::NAN), t, lo, hi, 1e-15)
    }

    /// Quantile density `I(t) = f(F^-1(t))`.
    pub fn quantile_density(&self, t: f64) -> Result<f64> {
        let x = self.quantile(t)?;
        Ok(self.density(x))
    }

    /// One exact draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.draw {
            Draw::InverseCdf => {
                let u: f64 = rng.sample(Open01);
                self.quantile(u)
            }
            Draw::Normal => {
                let Family1D::Gaussian1D { mean, sd } = self.family else { unreachable!() };
                let z: f64 = rng.sample(StandardNormal);
                Ok(mean + sd * z)
            }
            Draw::AbsNormal => {
                let Family1D::HalfNormal { sd } = self.family else { unreachable!() };
                let z: f64 = rng.sample(StandardNormal);
                Ok(sd * z.abs())
            }
            Draw::Envelope(env) => env.sample(&|x| self.log_density(x), rng),
        }
    }
}
