//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Infinite ranges are split at a pivot and each half-line is mapped onto
//! `[0, 1)` with `x = pivot + scale * t / (1 - t)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

/// Default absolute tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    /// `false` when the subdivision budget ran out before the tolerance was met.
    pub converged: bool,
}

impl QuadratureResult {
    /// Turn a non-converged result into [`Error::NoConvergence`].
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence { error: self.abs_error_estimate, evaluations: self.evaluations })
        }
    }
}

/// Integration range; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn half_line(lo: f64) -> Self {
        Self { lo, hi: f64::INFINITY }
    }

    pub fn real_line() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Split point for infinite ranges; defaults to 0 clamped into the range.
    pub pivot: Option<f64>,
    /// Length scale of the half-line map.
    pub scale: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: DEFAULT_TOL, rel_tol: 0.0, max_subdivisions: 2000, pivot: None, scale: 1.0 }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self { abs_tol, ..Self::default() }
    }

    pub fn relative(rel_tol: f64) -> Self {
        Self { abs_tol: 0.0, rel_tol, ..Self::default() }
    }

    pub fn pivot(mut self, pivot: f64) -> Self {
        self.pivot = Some(pivot);
        self
    }

    pub fn scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }
}

/// Integrate `f` over `support` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, support: Interval, tol: f64) -> Result<QuadratureResult> {
    integrate_with(f, support, &QuadOptions::with_tol(tol))
}

/// Integrate with explicit options.
pub fn integrate_with<F: Fn(f64) -> f64>(f: F, support: Interval, opts: &QuadOptions) -> Result<QuadratureResult> {
    let Interval { lo, hi } = support;
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::Domain("NaN integration bound".into()));
    }
    if !(opts.abs_tol >= 0.0 && opts.rel_tol >= 0.0) || (opts.abs_tol == 0.0 && opts.rel_tol == 0.0) {
        return Err(Error::Domain("quadrature tolerance must be positive".into()));
    }
    if !(opts.scale > 0.0) {
        return Err(Error::Domain("quadrature scale must be positive".into()));
    }
    if lo == hi {
        return Ok(QuadratureResult { value: 0.0, abs_error_estimate: 0.0, evaluations: 1, converged: true });
    }
    if lo > hi {
        let r = integrate_with(f, Interval::new(hi, lo), opts)?;
        return Ok(QuadratureResult { value: -r.value, ..r });
    }

    let s = opts.scale;
    let pivot = opts.pivot.unwrap_or(0.0).clamp(
        if lo.is_finite() { lo } else { f64::MIN },
        if hi.is_finite() { hi } else { f64::MAX },
    );

    // Build the list of finite pieces, each with its own integrand.
    let mut pieces: Vec<(Box<dyn Fn(f64) -> f64 + '_>, f64, f64)> = Vec::new();
    let f = &f;
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => pieces.push((Box::new(move |x| f(x)), lo, hi)),
        (true, false) => {
            if pivot > lo {
                pieces.push((Box::new(move |x| f(x)), lo, pivot));
            }
            pieces.push((Box::new(move |t| upper_map(f, pivot, s, t)), 0.0, 1.0));
        }
        (false, true) => {
            if pivot < hi {
                pieces.push((Box::new(move |x| f(x)), pivot, hi));
            }
            pieces.push((Box::new(move |t| lower_map(f, pivot, s, t)), 0.0, 1.0));
        }
        (false, false) => {
            pieces.push((Box::new(move |t| lower_map(f, pivot, s, t)), 0.0, 1.0));
            pieces.push((Box::new(move |t| upper_map(f, pivot, s, t)), 0.0, 1.0));
        }
    }
    adaptive(&pieces, opts)
}

fn upper_map<F: Fn(f64) -> f64>(f: &F, c: f64, s: f64, t: f64) -> f64 {
    let one_minus = 1.0 - t;
    let x = c + s * t / one_minus;
    if x.is_infinite() {
        return 0.0;
    }
    let y = f(x);
    if y == 0.0 {
        0.0
    } else {
        y * s / (one_minus * one_minus)
    }
}

fn lower_map<F: Fn(f64) -> f64>(f: &F, c: f64, s: f64, t: f64) -> f64 {
    let one_minus = 1.0 - t;
    let x = c - s * t / one_minus;
    if x.is_infinite() {
        return 0.0;
    }
    let y = f(x);
    if y == 0.0 {
        0.0
    } else {
        y * s / (one_minus * one_minus)
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    piece: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

type Piece<'a> = (Box<dyn Fn(f64) -> f64 + 'a>, f64, f64);

fn adaptive(pieces: &[Piece<'_>], opts: &QuadOptions) -> Result<QuadratureResult> {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    let mut total = 0.0;
    let mut total_err = 0.0;
    for (i, (g, a, b)) in pieces.iter().enumerate() {
        let (value, error) = gauss_kronrod(g, *a, *b)?;
        evaluations += 15;
        total += value;
        total_err += error;
        heap.push(Segment { piece: i, a: *a, b: *b, value, error });
    }

    let mut subdivisions = pieces.len();
    let mut converged = false;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target {
            converged = true;
            break;
        }
        if subdivisions >= opts.max_subdivisions {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval exhausted at double precision
            heap.push(worst);
            break;
        }
        let g = &pieces[worst.piece].0;
        let (v1, e1) = gauss_kronrod(g, worst.a, mid)?;
        let (v2, e2) = gauss_kronrod(g, mid, worst.b)?;
        evaluations += 30;
        subdivisions += 1;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { piece: worst.piece, a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { piece: worst.piece, a: mid, b: worst.b, value: v2, error: e2 });
    }

    // Re-sum to shed the drift of the running totals.
    let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    let target = opts.abs_tol.max(opts.rel_tol * value.abs());
    Ok(QuadratureResult {
        value,
        abs_error_estimate: error,
        evaluations,
        converged: converged || error <= target,
    })
}

/// One 15-point Kronrod rule with the QUADPACK error heuristic.
fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteIntegrand { at: x, value: y })
        }
    };

    let fc = eval(center)?;
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    let value = res_k * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}
