//! Special functions, adaptive quadrature and root finding.

mod quadrature;
mod roots;
mod special;

pub use quadrature::{integrate, integrate_with, Interval, QuadOptions, QuadratureResult, DEFAULT_TOL};
pub use roots::{concave_profile, find_root_increasing, maximize_unimodal, ConcaveProfile};
pub use special::{log_gamma, normal_cdf, normal_quantile, normal_sf, regularized_beta, regularized_gamma_p, trigamma};
pub(crate) use special::ln_gamma_positive;

/// Stable `log(sum(exp(values)))`.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
