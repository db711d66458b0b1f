//! Bracketed root finding and unimodal maximization.

use crate::{Error, Result};

const MAX_ITER: usize = 500;

/// Solve `g(x) = target` for increasing `g` on `[lo, hi]` (Brent's method).
///
/// Stops when `|g(x) - target| <= tol` or the bracket has collapsed to a few ulps.
pub fn find_root_increasing<G: Fn(f64) -> f64>(g: G, target: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo <= hi) || !(tol > 0.0) {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let h = |x: f64| g(x) - target;
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (h(a), h(b));
    if fa.is_nan() || fb.is_nan() || fa > 0.0 || fb < 0.0 {
        return Err(Error::InvalidBracket { lo, hi });
    }
    if fa.abs() <= tol {
        return Ok(a);
    }
    if fb.abs() <= tol {
        return Ok(b);
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let x_tol = 2.0 * f64::EPSILON * b.abs() + f64::MIN_POSITIVE;
        let m = 0.5 * (c - b);
        if fb.abs() <= tol || m.abs() <= x_tol {
            return Ok(b);
        }
        if e.abs() >= x_tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (x_tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > x_tol { d } else { x_tol.copysign(m) };
        fb = h(b);
        if fb.is_nan() {
            return Err(Error::Domain(format!("root finding hit NaN at {b}")));
        }
    }
    Ok(b)
}

/// Golden-section search for the maximizer of a unimodal function on `[lo, hi]`.
pub fn maximize_unimodal<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, x_tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..MAX_ITER {
        if (b - a).abs() <= x_tol {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}

/// Shape summary of a concave function `phi` on an open interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcaveProfile {
    pub mode: f64,
    pub peak: f64,
    /// Point left of the mode where `phi` has dropped by one, or the support end.
    pub left: f64,
    /// Point right of the mode where `phi` has dropped by one, or the support end.
    pub right: f64,
}

/// Locate the maximum of a concave `phi` on `(lo, hi)` and the points where it
/// has fallen by one unit. `start` must lie inside the support and `scale` is a
/// rough width used to bracket on infinite sides.
pub fn concave_profile<F: Fn(f64) -> f64>(phi: F, lo: f64, hi: f64, start: f64, scale: f64) -> Result<ConcaveProfile> {
    if !(lo < hi) || !(start > lo && start < hi) || !(scale > 0.0) {
        return Err(Error::Domain(format!("bad profile setup: ({lo}, {hi}), start {start}, scale {scale}")));
    }
    let val = |x: f64| {
        let v = phi(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    // Bracket the maximizer by stepping outward until phi falls below phi(start).
    let f0 = val(start);
    let b = bracket_side(&val, start, hi, scale, f0, 1.0)?;
    let a = bracket_side(&val, start, lo, scale, f0, -1.0)?;
    let width = b - a;
    let mode = maximize_unimodal(val, a, b, 1e-10 * width.max(scale).max(1e-300));
    let mode = mode.clamp(a, b);
    let mode = if mode <= lo || mode >= hi { 0.5 * (a + b) } else { mode };
    let peak = val(mode);
    if !peak.is_finite() {
        return Err(Error::Domain(format!("non-finite peak {peak} at {mode}")));
    }
    let level = peak - 1.0;

    let right = match drop_point(&val, mode, hi, scale, level, 1.0)? {
        Some(x) => x,
        None => hi,
    };
    let left = match drop_point(&val, mode, lo, scale, level, -1.0)? {
        Some(x) => x,
        None => lo,
    };
    Ok(ConcaveProfile { mode, peak, left, right })
}

fn bracket_side<F: Fn(f64) -> f64>(val: &F, start: f64, end: f64, scale: f64, f0: f64, dir: f64) -> Result<f64> {
    let mut probe = start;
    let mut step = scale;
    loop {
        let mut x = probe + dir * step;
        if end.is_finite() && (x - end) * dir >= 0.0 {
            if (end - probe).abs() <= 1e-13 * scale {
                return Ok(end);
            }
            x = probe + 0.5 * (end - probe);
        }
        if val(x) < f0 {
            return Ok(x);
        }
        probe = x;
        step *= 2.0;
        if step > 1e300 {
            return Err(Error::Domain("unbounded increase while bracketing the mode".into()));
        }
    }
}

/// Find where `val` crosses `level` moving from `from` toward `end` in `dir`.
fn drop_point<F: Fn(f64) -> f64>(val: &F, from: f64, end: f64, scale: f64, level: f64, dir: f64) -> Result<Option<f64>> {
    let mut inner = from;
    let mut step = scale;
    let outer = loop {
        let mut x = inner + dir * step;
        if end.is_finite() && (x - end) * dir >= 0.0 {
            // probe the support end itself (from inside)
            let near_end = end - dir * (end - inner).abs() * 1e-12;
            if val(near_end) >= level || near_end == inner {
                return Ok(None);
            }
            x = near_end;
            break x;
        }
        if val(x) < level {
            break x;
        }
        inner = x;
        step *= 2.0;
        if step > 1e300 {
            return Err(Error::Domain("density does not decay".into()));
        }
    };
    // Pull `outer` in until it is finite so Brent never sees infinities.
    let (mut inner, mut outer) = (inner, outer);
    for _ in 0..200 {
        if val(outer).is_finite() {
            break;
        }
        let mid = 0.5 * (inner + outer);
        if val(mid) < level {
            outer = mid;
        } else {
            inner = mid;
        }
    }
    // val is decreasing from `inner` to `outer` on this side; solve val = level.
    let g = |t: f64| -val(inner + dir * t);
    let span = (outer - inner).abs();
    let t = find_root_increasing(g, -level, 0.0, span, 1e-12)?;
    Ok(Some(inner + dir * t))
}
