//! Per-coordinate information `-(1/n) log f(X^(n))` along simulated
//! trajectories of i.i.d. and Gaussian AR(1) processes.

use std::f64::consts::{E, PI};
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bounds::{compare_probability, per_coordinate_tail, BoundVerdict};
use crate::distributions::{Density1D, ModelSpec, RngStream};
use crate::infotools::{parallel_map, McEstimate};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessModel {
    Iid(Density1D),
    /// `X_1 ~ N(0, sd^2/(1-rho^2))`, `X_k = rho X_{k-1} + sd Z_k`.
    GaussAr1 { rho: f64, sd: f64 },
}

impl ProcessModel {
    pub fn gauss_ar1(rho: f64, sd: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) || !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::InvalidParameter(format!("AR(1) needs |rho| < 1 and sd > 0, got ({rho}, {sd})")));
        }
        Ok(ProcessModel::GaussAr1 { rho, sd })
    }

    /// `gauss_ar1` specs become AR(1); one-dimensional families become i.i.d. processes.
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        if spec.is_process() {
            let (rho, sd) = spec.ar1_params()?;
            ProcessModel::gauss_ar1(rho, sd)
        } else {
            Ok(ProcessModel::Iid(spec.build_1d()?))
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProcessModel::Iid(d) => format!("iid({})", d.name()),
            ProcessModel::GaussAr1 { rho, sd } => format!("gauss_ar1(rho={rho},sd={sd})"),
        }
    }

    fn stationary_var(rho: f64, sd: f64) -> f64 {
        sd * sd / (1.0 - rho * rho)
    }

    /// Entropy rate `lim h(X^(n))/n`.
    pub fn entropy_rate(&self) -> f64 {
        match self {
            ProcessModel::Iid(d) => d.entropy(),
            ProcessModel::GaussAr1 { sd, .. } => 0.5 * (2.0 * PI * E * sd * sd).ln(),
        }
    }

    /// Joint entropy `h(X^(n))` by the chain rule.
    pub fn block_entropy(&self, n: usize) -> f64 {
        match self {
            ProcessModel::Iid(d) => n as f64 * d.entropy(),
            ProcessModel::GaussAr1 { rho, sd } => {
                if n == 0 {
                    return 0.0;
                }
                let first = 0.5 * (2.0 * PI * E * Self::stationary_var(*rho, *sd)).ln();
                first + (n - 1) as f64 * self.entropy_rate()
            }
        }
    }

    /// `log f(x_1, ..., x_n)` via the conditional factorization.
    pub fn joint_log_density(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..x.len() {
            acc += self.conditional_log_density(x, k);
        }
        acc
    }

    /// `log f(x_k | x_1..x_{k-1})`.
    fn conditional_log_density(&self, x: &[f64], k: usize) -> f64 {
        match self {
            ProcessModel::Iid(d) => d.log_density(x[k]),
            ProcessModel::GaussAr1 { rho, sd } => {
                let (mean, var) = if k == 0 { (0.0, Self::stationary_var(*rho, *sd)) } else { (rho * x[k - 1], sd * sd) };
                -0.5 * (2.0 * PI * var).ln() - 0.5 * (x[k] - mean).powi(2) / var
            }
        }
    }

    pub fn sample_path<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        let mut x = Vec::with_capacity(n);
        match self {
            ProcessModel::Iid(d) => {
                for _ in 0..n {
                    x.push(d.sample(rng)?);
                }
            }
            ProcessModel::GaussAr1 { rho, sd } => {
                let mut prev = 0.0;
                for k in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    let v = if k == 0 { Self::stationary_var(*rho, *sd).sqrt() * z } else { rho * prev + sd * z };
                    x.push(v);
                    prev = v;
                }
            }
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceRow {
    pub n: usize,
    pub s: f64,
    pub count: usize,
    pub estimate: McEstimate,
    /// `3 e^{-s^2 n/16}`
    pub bound: f64,
    pub in_window: bool,
    pub verdict: BoundVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub process: String,
    pub n_grid: Vec<usize>,
    pub entropy_rate: f64,
    /// `h(X^(n))/n` at each grid point.
    pub block_rates: Vec<f64>,
    /// `info[trial][j] = -(1/n_j) log f(X^(n_j))` along one trajectory.
    pub info: Vec<Vec<f64>>,
    pub exceedance: Vec<ExceedanceRow>,
    pub seed: u64,
    pub stream_id: u64,
}

/// Simulate `trials` trajectories of length `max(n_grid)`; trial `k` uses substream `k`.
pub fn run_trajectories(
    process: &ProcessModel,
    n_grid: &[usize],
    trials: usize,
    s_values: &[f64],
    rng: &RngStream,
    workers: usize,
    confidence: f64,
) -> Result<TrajectoryReport> {
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n grid must be non-empty, positive and strictly increasing".into()));
    }
    if trials == 0 {
        return Err(Error::EmptyBatch);
    }
    let n_max = *n_grid.last().expect("non-empty grid");
    let info = parallel_map(workers, trials, |trial| {
        let mut r = rng.substream(trial as u64).rng();
        let path = process.sample_path(n_max, &mut r)?;
        let mut out = Vec::with_capacity(n_grid.len());
        let mut acc = 0.0;
        let mut j = 0;
        for k in 0..path.len() {
            acc += process.conditional_log_density(&path, k);
            if k + 1 == n_grid[j] {
                if !acc.is_finite() {
                    return Err(Error::Domain(format!("non-finite log density along trajectory {trial}")));
                }
                out.push(-acc / (k + 1) as f64);
                j += 1;
                if j == n_grid.len() {
                    break;
                }
            }
        }
        Ok(out)
    })?;
    let block_rates: Vec<f64> = n_grid.iter().map(|&n| process.block_entropy(n) / n as f64).collect();
    let mut exceedance = Vec::new();
    for (j, &n) in n_grid.iter().enumerate() {
        for &s in s_values {
            let count = info.iter().filter(|row| (row[j] - block_rates[j]).abs() >= s).count();
            let estimate = McEstimate::wilson(count, trials, confidence)?;
            let b = per_coordinate_tail(s, n);
            exceedance.push(ExceedanceRow {
                n,
                s,
                count,
                estimate,
                bound: b.value,
                in_window: b.in_window,
                verdict: compare_probability(&estimate, b.value),
            });
        }
    }
    Ok(TrajectoryReport {
        process: process.label(),
        n_grid: n_grid.to_vec(),
        entropy_rate: process.entropy_rate(),
        block_rates,
        info,
        exceedance,
        seed: rng.seed,
        stream_id: rng.stream_id,
    })
}

impl TrajectoryReport {
    /// Rows `trial,n,per_coord_info,deviation,centered_deviation`, where `deviation`
    /// is measured from the entropy rate and `centered_deviation` from `h(X^(n))/n`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "trial,n,per_coord_info,deviation,centered_deviation")?;
        for (t, row) in self.info.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                writeln!(
                    out,
                    "{t},{},{v:.16e},{:.16e},{:.16e}",
                    self.n_grid[j],
                    v - self.entropy_rate,
                    v - self.block_rates[j]
                )?;
            }
        }
        Ok(())
    }
}

/// `sup[trial][j] = max_{k >= j} |info[trial][k] - h|`, non-increasing in `j`.
pub fn convergence_diagnostic(report: &TrajectoryReport) -> Vec<Vec<f64>> {
    report
        .info
        .iter()
        .map(|row| {
            let mut out = vec![0.0; row.len()];
            let mut running = 0.0f64;
            for j in (0..row.len()).rev() {
                running = running.max((row[j] - report.entropy_rate).abs());
                out[j] = running;
            }
            out
        })
        .collect()
}

/// Median over trials of the sup-deviation at each grid point.
pub fn median_sup_deviation(sup: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = sup.first() else { return Vec::new() };
    (0..first.len())
        .map(|j| {
            let mut col: Vec<f64> = sup.iter().map(|r| r[j]).collect();
            col.sort_by(f64::total_cmp);
            let m = col.len();
            if m % 2 == 1 {
                col[m / 2]
            } else {
                0.5 * (col[m / 2 - 1] + col[m / 2])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Verdict;
    use crate::distributions::{make_standard, Family1D, Matrix, ModelND};

    #[test]
    fn entropy_rates() {
        let e = ProcessModel::Iid(make_standard(Family1D::Exponential { rate: 1.0 }).unwrap());
        assert!((e.entropy_rate() - 1.0).abs() < 1e-12);
        let a0 = ProcessModel::gauss_ar1(0.0, 1.0).unwrap();
        assert!((a0.entropy_rate() - 0.5 * (2.0 * PI * E).ln()).abs() < 1e-15);
        let a = ProcessModel::gauss_ar1(0.5, 1.0).unwrap();
        for n in [1usize, 4, 100] {
            let want = (0.5 * (2.0 * PI * E / 0.75).ln() + (n - 1) as f64 * 0.5 * (2.0 * PI * E).ln()) / n as f64;
            assert!((a.block_entropy(n) / n as f64 - want).abs() < 1e-14);
        }
        assert!((a.block_entropy(100_000) / 1e5 - a.entropy_rate()).abs() < 1e-5);
        assert!(ProcessModel::gauss_ar1(1.0, 1.0).is_err());
    }

    #[test]
    fn ar1_factorization_matches_quadratic_form() {
        let (rho, sd) = (0.5, 1.3);
        let p = ProcessModel::gauss_ar1(rho, sd).unwrap();
        for n in [2usize, 3] {
            let v1 = sd * sd / (1.0 - rho * rho);
            let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| v1 * rho.powi((i as i32 - j as i32).abs())).collect()).collect();
            let cov = Matrix::from_rows(&rows).unwrap();
            let g = ModelND::gaussian(vec![0.0; n], Some(cov.cholesky().unwrap())).unwrap();
            for x in [vec![0.3, -1.2, 0.7], vec![2.0, 1.5, -0.4]] {
                let x = &x[..n];
                assert!((p.joint_log_density(x) - g.log_density(x).unwrap()).abs() < 1e-9);
            }
            assert!((p.block_entropy(n) - g.entropy()).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_iid_is_exactly_zero() {
        let p = ProcessModel::Iid(make_standard(Family1D::Uniform { lo: 0.0, hi: 1.0 }).unwrap());
        let r = run_trajectories(&p, &[1, 5, 20], 50, &[0.5], &RngStream::new(1, 0), 1, 0.999).unwrap();
        assert!(r.info.iter().flatten().all(|v| *v == 0.0));
        let sup = convergence_diagnostic(&r);
        assert!(sup.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn iid_info_is_average_of_coordinates() {
        let d = make_standard(Family1D::Laplace { loc: 0.0, scale: 1.0 }).unwrap();
        let p = ProcessModel::Iid(d.clone());
        let rng = RngStream::new(4, 0);
        let r = run_trajectories(&p, &[3, 10], 5, &[], &rng, 1, 0.999).unwrap();
        for t in 0..5 {
            let path = p.sample_path(10, &mut rng.substream(t as u64).rng()).unwrap();
            let avg = -path.iter().map(|x| d.log_density(*x)).sum::<f64>() / 10.0;
            assert!((r.info[t][1] - avg).abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_spread_shrinks_like_inverse_root_n() {
        let p = ProcessModel::Iid(make_standard(Family1D::Gaussian1D { mean: 0.0, sd: 1.0 }).unwrap());
        let grid = [16usize, 64, 256, 1024];
        let r = run_trajectories(&p, &grid, 4000, &[], &RngStream::new(8, 0), 4, 0.999).unwrap();
        for (j, &n) in grid.iter().enumerate() {
            let col: Vec<f64> = r.info.iter().map(|row| row[j]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64).sqrt();
            let want = (2.0 * n as f64).powf(-0.5);
            assert!((sd / want - 1.0).abs() < 0.2, "n={n}: {sd} vs {want}");
        }
    }

    #[test]
    fn ar1_exceedance_and_sup_deviation() {
        let p = ProcessModel::gauss_ar1(0.5, 1.0).unwrap();
        let grid = [16usize, 64, 256];
        let r = run_trajectories(&p, &grid, 2000, &[0.5], &RngStream::new(2, 0), 2, 0.999).unwrap();
        assert!(r.exceedance.iter().all(|row| row.verdict.verdict == Verdict::Holds));
        let med = median_sup_deviation(&convergence_diagnostic(&r));
        assert!(med.windows(2).all(|w| w[1] < w[0]), "{med:?}");
    }

    #[test]
    fn gamma_exceedances_are_summable() {
        let p = ProcessModel::Iid(make_standard(Family1D::Gamma { shape: 2.0 }).unwrap());
        let grid = [8usize, 16, 32, 64, 128];
        let s = 1.0;
        let trials = 2000;
        let r = run_trajectories(&p, &grid, trials, &[s], &RngStream::new(3, 0), 2, 0.999).unwrap();
        let total: usize = r.exceedance.iter().map(|row| row.count).sum();
        let bound_sum: f64 = grid.iter().map(|&n| per_coordinate_tail(s, n).value).sum();
        assert!((total as f64 / trials as f64) <= bound_sum);
    }

    #[test]
    fn csv_shape() {
        let p = ProcessModel::gauss_ar1(0.5, 1.0).unwrap();
        let r = run_trajectories(&p, &[2, 4], 3, &[0.5], &RngStream::new(1, 0), 1, 0.999).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 7);
    }
}
