//! Moment functions of positive log-concave variables: forward convexity,
//! reverse (normalized) concavity, grid triples and order-`p` variance checks.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{order_p_variance_caps, Verdict};
use crate::distributions::Density1D;
use crate::infotools::parallel_map;
use crate::numerics::{concave_profile, integrate_with, log_gamma, Interval, QuadOptions};
use crate::{Error, Result};

/// Largest moment order accepted by [`moment_curve`].
pub const P_MAX: f64 = 40.0;
/// Relative quadrature tolerance for moment integrals.
pub const MOMENT_REL_TOL: f64 = 1e-12;
/// Midpoint-defect tolerance for convexity and concavity checks.
pub const DEFECT_TOL: f64 = 1e-7;

const GRID_MATCH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentKind {
    /// `E eta^p`
    Raw,
    /// `E eta^p / Gamma(p+1)`
    Normalized,
    /// `E (eta/p)^p`
    Hat,
}

impl FromStr for MomentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "normalized" => Ok(Self::Normalized),
            "hat" => Ok(Self::Hat),
            _ => Err(Error::Config(format!("unknown moment kind '{s}' (raw, normalized, hat)"))),
        }
    }
}

impl MomentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MomentKind::Raw => "raw",
            MomentKind::Normalized => "normalized",
            MomentKind::Hat => "hat",
        }
    }

    /// Curvature that the theory predicts for `p -> log value`.
    pub fn expected_direction(&self) -> Direction {
        match self {
            MomentKind::Raw => Direction::Convex,
            MomentKind::Normalized | MomentKind::Hat => Direction::Concave,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCurve {
    pub density: String,
    pub kind: MomentKind,
    pub grid: Vec<f64>,
    pub log_values: Vec<f64>,
    /// Relative quadrature error of each moment, i.e. an absolute error in log units.
    pub quad_errors: Vec<f64>,
}

/// `log E eta^p` and its relative error, computed around the peak of `p log x + log f(x)`.
pub fn log_raw_moment(d: &Density1D, p: f64) -> Result<(f64, f64)> {
    if !d.has_positive_support() {
        return Err(Error::Domain(format!("moments need support in (0, inf), {} has {:?}", d.name(), d.support())));
    }
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!("moment order must be >= 0, got {p}")));
    }
    if p == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (lo, hi) = d.support();
    let phi = |x: f64| if x > lo && x < hi { p * x.ln() + d.log_density(x) } else { f64::NEG_INFINITY };
    let start = {
        let m = d.mode();
        if m > lo && m < hi {
            m
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            lo + d.scale()
        }
    };
    let profile = concave_profile(phi, lo, hi, start, d.scale())?;
    let width = (profile.right - profile.mode).max(profile.mode - profile.left).max(1e-300);
    let opts = QuadOptions::relative(MOMENT_REL_TOL).pivot(profile.mode).scale(width);
    let peak = profile.peak;
    let r = integrate_with(
        |x| {
            let v = phi(x);
            if v == f64::NEG_INFINITY {
                0.0
            } else {
                (v - peak).exp()
            }
        },
        Interval::new(lo, hi),
        &opts,
    )?
    .require_converged()?;
    Ok((peak + r.value.ln(), r.abs_error_estimate / r.value))
}

fn kind_offset(kind: MomentKind, p: f64) -> Result<f64> {
    Ok(match kind {
        MomentKind::Raw => 0.0,
        MomentKind::Normalized => log_gamma(p + 1.0)?,
        MomentKind::Hat if p == 0.0 => 0.0,
        MomentKind::Hat => p * p.ln(),
    })
}

/// Build a moment curve on `grid`, which must be sorted and lie in `(0, P_MAX]`.
pub fn moment_curve(d: &Density1D, kind: MomentKind, grid: &[f64], workers: usize) -> Result<MomentCurve> {
    if grid.iter().any(|p| !(*p > 0.0 && *p <= P_MAX + GRID_MATCH)) {
        return Err(Error::InvalidParameter(format!("moment grid must lie in (0, {P_MAX}]")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("moment grid must be strictly increasing".into()));
    }
    let points = parallel_map(workers, grid.len(), |i| {
        let p = grid[i];
        let (log_raw, err) = log_raw_moment(d, p)?;
        Ok((log_raw - kind_offset(kind, p)?, err))
    })?;
    let (log_values, quad_errors) = points.into_iter().unzip();
    Ok(MomentCurve { density: d.name(), kind, grid: grid.to_vec(), log_values, quad_errors })
}

impl MomentCurve {
    fn index_of(&self, p: f64) -> Option<usize> {
        let i = self.grid.partition_point(|g| *g < p - GRID_MATCH);
        (i < self.grid.len() && (self.grid[i] - p).abs() <= GRID_MATCH).then_some(i)
    }

    /// Log value at a grid point; `p = 0` is always available (value 0).
    pub fn log_value_at(&self, p: f64) -> Option<f64> {
        if p.abs() <= GRID_MATCH {
            return Some(0.0);
        }
        self.index_of(p).map(|i| self.log_values[i])
    }

    /// Write `p,log_value,quad_error` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "p,log_value,quad_error")?;
        for ((p, v), e) in self.grid.iter().zip(&self.log_values).zip(&self.quad_errors) {
            writeln!(out, "{p:.16e},{v:.16e},{e:.16e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Convex,
    Concave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub density: String,
    pub kind: MomentKind,
    pub direction: Direction,
    /// Smallest signed midpoint defect; negative values go against `direction`.
    pub worst_defect: f64,
    /// Midpoint `p` where the worst defect occurs.
    pub location: f64,
    pub triples_checked: usize,
    pub verdict: Verdict,
}

/// Midpoint test over consecutive grid triples `(a, b, c)` with `b = (a + c)/2`.
pub fn check_convexity_direction(curve: &MomentCurve, direction: Direction) -> Result<ConvexityReport> {
    if curve.grid.len() < 3 {
        return Err(Error::InvalidParameter("convexity check needs at least 3 grid points".into()));
    }
    let mut worst = f64::INFINITY;
    let mut location = f64::NAN;
    let mut checked = 0;
    for i in 1..curve.grid.len() - 1 {
        let (a, b, c) = (curve.grid[i - 1], curve.grid[i], curve.grid[i + 1]);
        if ((a + c) * 0.5 - b).abs() > GRID_MATCH * b.max(1.0) {
            continue;
        }
        let (la, lb, lc) = (curve.log_values[i - 1], curve.log_values[i], curve.log_values[i + 1]);
        let convex_defect = 0.5 * (la + lc) - lb;
        let defect = match direction {
            Direction::Convex => convex_defect,
            Direction::Concave => -convex_defect,
        };
        checked += 1;
        if defect < worst {
            worst = defect;
            location = b;
        }
    }
    if checked == 0 {
        return Err(Error::InvalidParameter("grid has no equally spaced consecutive triples".into()));
    }
    Ok(ConvexityReport {
        density: curve.density.clone(),
        kind: curve.kind,
        direction,
        worst_defect: worst,
        location,
        triples_checked: checked,
        verdict: if worst >= -DEFECT_TOL { Verdict::Holds } else { Verdict::Violated },
    })
}

/// `(a-c) L(b) - (b-c) L(a) - (a-b) L(c)` for `a >= b >= c >= 0` on the grid.
///
/// Non-negative exactly when `L` is concave along the triple.
pub fn check_triple(curve: &MomentCurve, a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a >= b && b >= c && c >= 0.0) {
        return Err(Error::InvalidParameter(format!("triple must satisfy a >= b >= c >= 0, got ({a}, {b}, {c})")));
    }
    let off = || Error::OffGrid { a, b, c };
    let la = curve.log_value_at(a).ok_or_else(off)?;
    let lb = curve.log_value_at(b).ok_or_else(off)?;
    let lc = curve.log_value_at(c).ok_or_else(off)?;
    Ok((a - c) * lb - (b - c) * la - (a - b) * lc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleReport {
    pub spacing: f64,
    pub worst_margin: f64,
    /// Middle point of the worst triple.
    pub at: f64,
    pub triples_checked: usize,
}

/// Run [`check_triple`] on every `(b + s, b, b - s)` with all three points on the grid.
pub fn check_spaced_triples(curve: &MomentCurve, spacing: f64) -> Result<TripleReport> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidParameter(format!("spacing must be positive, got {spacing}")));
    }
    let mut worst = f64::INFINITY;
    let mut at = f64::NAN;
    let mut n = 0;
    for &b in &curve.grid {
        let (a, c) = (b + spacing, b - spacing);
        if c < curve.grid[0] - GRID_MATCH || curve.index_of(a).is_none() || curve.index_of(c).is_none() {
            continue;
        }
        let m = check_triple(curve, a, b, c)?;
        n += 1;
        if m < worst {
            worst = m;
            at = b;
        }
    }
    Ok(TripleReport { spacing, worst_margin: worst, at, triples_checked: n })
}

/// `log(Gamma(p+1) lambda_1^p) - log lambda_p` on the grid of a raw curve;
/// non-negative values confirm `E eta^p <= Gamma(p+1) (E eta)^p`.
pub fn khinchine_margins(d: &Density1D, raw: &MomentCurve) -> Result<Vec<(f64, f64)>> {
    if raw.kind != MomentKind::Raw {
        return Err(Error::InvalidParameter("Khinchine check needs a raw moment curve".into()));
    }
    let (log_mean, _) = log_raw_moment(d, 1.0)?;
    raw.grid
        .iter()
        .zip(&raw.log_values)
        .filter(|(p, _)| **p >= 1.0)
        .map(|(&p, &l)| Ok((p, log_gamma(p + 1.0)? + p * log_mean - l)))
        .collect()
}

/// Variance summaries of an order-`p` variable against the theoretical caps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderPVarianceReport {
    pub density: String,
    pub p: f64,
    pub var_log: f64,
    pub var_ratio: f64,
    pub trigamma: f64,
    pub ratio_cap: f64,
    pub cp_cap: Option<f64>,
    pub log_cap: Option<f64>,
    /// `trigamma - var_log`
    pub trigamma_margin: f64,
    /// `1/p - var_ratio`
    pub ratio_margin: f64,
    pub cp_margin: Option<f64>,
    pub log_cap_margin: Option<f64>,
}

const VAR_TOL: f64 = 1e-12;

pub fn order_p_variance_check(xi: &Density1D) -> Result<OrderPVarianceReport> {
    let p = xi
        .order_p()
        .ok_or_else(|| Error::InvalidParameter(format!("{} has no declared order p", xi.name())))?;
    let caps = order_p_variance_caps(p)?;
    let mean_log = xi.expect(|x| x.ln(), VAR_TOL)?;
    let var_log = xi.expect(|x| (x.ln() - mean_log).powi(2), VAR_TOL)?;
    let mean = xi.expect(|x| x, VAR_TOL)?;
    let var = xi.expect(|x| (x - mean).powi(2), VAR_TOL)?;
    let var_ratio = var / (mean * mean);
    Ok(OrderPVarianceReport {
        density: xi.name(),
        p,
        var_log,
        var_ratio,
        trigamma: caps.trigamma,
        ratio_cap: caps.ratio_cap,
        cp_cap: caps.cp_cap,
        log_cap: caps.log_cap,
        trigamma_margin: caps.trigamma - var_log,
        ratio_margin: caps.ratio_cap - var_ratio,
        cp_margin: caps.cp_cap.map(|c| c - var_ratio),
        log_cap_margin: caps.log_cap.map(|c| c - var_log),
    })
}

/// `E exp{alpha |log xi - E log xi|}` (two-sided) or `E exp{alpha (log xi - E log xi)}`
/// by quadrature, split at the kink.
pub fn order_p_mgf(xi: &Density1D, alpha: f64, two_sided: bool) -> Result<f64> {
    if !xi.has_positive_support() {
        return Err(Error::Domain(format!("{} is not supported on (0, inf)", xi.name())));
    }
    let mu = xi.expect(|x| x.ln(), VAR_TOL)?;
    let kink = mu.exp();
    let (lo, hi) = xi.support();
    let g = |x: f64| {
        let f = xi.density(x);
        if f == 0.0 {
            return 0.0;
        }
        let u = x.ln() - mu;
        f * (alpha * if two_sided { u.abs() } else { u }).exp()
    };
    let opts = QuadOptions::with_tol(1e-12).pivot(kink).scale(xi.scale());
    let left = integrate_with(g, Interval::new(lo, kink), &opts)?.require_converged()?.value;
    let right = integrate_with(g, Interval::new(kink, hi), &opts)?.require_converged()?.value;
    Ok(left + right)
}
