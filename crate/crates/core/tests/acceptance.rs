//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use infoconc::bounds::{compare_lower_probability, typical_set_bound, Verdict};
use infoconc::cli::{run, Experiment, ExperimentConfig, Outcome};
use infoconc::distributions::{make_standard, Density1D, Family1D, Matrix, ModelND, ModelSpec, RngStream};
use infoconc::infotools::{
    empirical_mgf, entropy_power_band, entropy_power_band_literal, sample_information, sample_information_with_points,
    MgfForm, DEFAULT_CONFIDENCE,
};
use infoconc::lyapunov::{check_convexity_direction, check_spaced_triples, moment_curve, order_p_variance_check, MomentKind};
use infoconc::numerics::trigamma;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).max(2)
}

fn zoo() -> Vec<Density1D> {
    [
        Family1D::Exponential { rate: 1.0 },
        Family1D::Gamma { shape: 2.0 },
        Family1D::Gamma { shape: 5.0 },
        Family1D::Gaussian1D { mean: 0.0, sd: 1.0 },
        Family1D::Laplace { loc: 0.0, scale: 1.0 },
        Family1D::Uniform { lo: 0.0, hi: 1.0 },
        Family1D::HalfNormal { sd: 1.0 },
        Family1D::Chi { dof: 3.0 },
        Family1D::Beta { a: 2.0, b: 3.0 },
        Family1D::Weibull { shape: 2.0 },
    ]
    .into_iter()
    .map(|f| make_standard(f).unwrap())
    .collect()
}

fn gamma(p: f64) -> Density1D {
    make_standard(Family1D::Gamma { shape: p }).unwrap()
}

/// Parsed CSV: header index plus string cells.
struct Csv {
    cols: HashMap<String, usize>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Csv {
        let mut lines = text.lines();
        let cols = lines.next().unwrap().split(',').enumerate().map(|(i, c)| (c.to_string(), i)).collect();
        let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        Csv { cols, rows }
    }

    fn get<'a>(&self, row: &'a [String], col: &str) -> &'a str {
        &row[self.cols[col]]
    }

    fn num(&self, row: &[String], col: &str) -> f64 {
        self.get(row, col).parse().unwrap()
    }
}

fn config(experiment: Experiment, model: &str, workers: usize) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        model: Some(ModelSpec::parse(model).unwrap()),
        seed: 42,
        workers,
        ..ExperimentConfig::default()
    }
}

fn tail_models() -> Vec<(String, usize)> {
    let mut v = Vec::new();
    for n in [4, 16, 64] {
        v.push((format!(r#"{{"family":"gaussian","params":{{"dim":{n}}}}}"#), n));
        v.push((format!(r#"{{"family":"iid","params":{{"component":{{"family":"exponential"}},"dim":{n}}}}}"#), n));
    }
    v
}

fn tail_config(model: &str, workers: usize) -> ExperimentConfig {
    ExperimentConfig { t_grid: Some((0..=16).map(|i| 0.5 * i as f64).collect()), ..config(Experiment::Tail, model, workers) }
}

fn aep_config(workers: usize) -> ExperimentConfig {
    ExperimentConfig {
        n_grid: Some(vec![16, 64, 256, 1024]),
        s_grid: Some(vec![0.5]),
        trials: 10_000,
        ..config(Experiment::Aep, r#"{"family":"gauss_ar1","params":{"rho":0.5}}"#, workers)
    }
}

/// `ln P{chi^2_n >= x}` for even `n`, by the Poisson sum.
fn chi2_sf_even(n: usize, x: f64) -> f64 {
    assert!(n % 2 == 0);
    if x <= 0.0 {
        return 1.0;
    }
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..n / 2 {
        term *= half / k as f64;
        sum += term;
    }
    (-half + sum.ln()).exp()
}

/// `P{|chi^2_n - n| / 2 >= t sqrt(n)}`.
fn gaussian_tail_oracle(n: usize, t: f64) -> f64 {
    let nf = n as f64;
    let d = 2.0 * t * nf.sqrt();
    let upper = chi2_sf_even(n, nf + d);
    let lower = if nf - d > 0.0 { 1.0 - chi2_sf_even(n, nf - d) } else { 0.0 };
    (upper + lower).min(1.0)
}

// ---------------------------------------------------------------- criteria

const GAMMA_P: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];

fn c1_gamma_trigamma() -> Check {
    let mut worst = 0.0f64;
    for p in GAMMA_P {
        let r = order_p_variance_check(&gamma(p)).map_err(|e| e.to_string())?;
        let err = (r.var_log - trigamma(p).unwrap()).abs();
        worst = worst.max(err);
    }
    if worst <= 1e-7 {
        Ok(format!("max |Var(log xi) - trigamma(p)| = {worst:.2e}"))
    } else {
        Err(format!("max |Var(log xi) - trigamma(p)| = {worst:.2e} > 1e-7"))
    }
}

fn c2_gamma_ratio() -> Check {
    let mut worst = 0.0f64;
    for p in GAMMA_P {
        let r = order_p_variance_check(&gamma(p)).map_err(|e| e.to_string())?;
        worst = worst.max((r.var_ratio - 1.0 / p).abs());
    }
    if worst <= 1e-8 {
        Ok(format!("max |Var/mean^2 - 1/p| = {worst:.2e}"))
    } else {
        Err(format!("max |Var/mean^2 - 1/p| = {worst:.2e} > 1e-8"))
    }
}

fn p_grid() -> Vec<f64> {
    (1..=80).map(|i| 0.5 * i as f64).collect()
}

fn c3_exponential_flat() -> Check {
    let d = make_standard(Family1D::Exponential { rate: 1.0 }).unwrap();
    let c = moment_curve(&d, MomentKind::Normalized, &p_grid(), workers()).map_err(|e| e.to_string())?;
    let worst = c.log_values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if worst <= 1e-7 {
        Ok(format!("max |log normalized moment| = {worst:.2e} over {} points", c.grid.len()))
    } else {
        Err(format!("max |log normalized moment| = {worst:.2e} > 1e-7"))
    }
}

fn c4_reverse_lyapunov() -> Check {
    let positive: Vec<Density1D> = zoo().into_iter().filter(|d| d.has_positive_support()).collect();
    if positive.len() < 6 {
        return Err(format!("only {} positive-support densities", positive.len()));
    }
    let grid = p_grid();
    let mut worst_mid = f64::INFINITY;
    let mut worst_triple = f64::INFINITY;
    let mut worst_raw = f64::INFINITY;
    for d in &positive {
        let norm = moment_curve(d, MomentKind::Normalized, &grid, workers()).map_err(|e| e.to_string())?;
        let r = check_convexity_direction(&norm, MomentKind::Normalized.expected_direction()).map_err(|e| e.to_string())?;
        worst_mid = worst_mid.min(r.worst_defect);
        for s in [0.25, 0.5, 1.0, 2.0] {
            let t = check_spaced_triples(&norm, s).map_err(|e| e.to_string())?;
            if t.triples_checked > 0 {
                worst_triple = worst_triple.min(t.worst_margin);
            }
        }
        let raw = moment_curve(d, MomentKind::Raw, &grid, workers()).map_err(|e| e.to_string())?;
        let r = check_convexity_direction(&raw, MomentKind::Raw.expected_direction()).map_err(|e| e.to_string())?;
        worst_raw = worst_raw.min(r.worst_defect);
    }
    let msg = format!(
        "{} densities; worst concavity defect {worst_mid:.2e}, worst triple margin {worst_triple:.2e}, worst raw convexity defect {worst_raw:.2e}",
        positive.len()
    );
    if worst_mid >= -1e-7 && worst_triple >= -1e-7 && worst_raw >= -1e-7 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c5_one_dim_mgf() -> Check {
    let cap = 8.0 / 3.0 * 2f64.sqrt();
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, d) in zoo().into_iter().enumerate() {
        let started = Instant::now();
        let name = d.name();
        let model = ModelND::product(vec![d]).map_err(|e| e.to_string())?;
        let batch = sample_information(&model, 1_000_000, &RngStream::new(500 + i as u64, 0), workers()).map_err(|e| e.to_string())?;
        let pt = &empirical_mgf(&batch, &[0.5], MgfForm::TwoSidedAbs, DEFAULT_CONFIDENCE).map_err(|e| e.to_string())?[0];
        let e = &pt.estimate;
        let pass = e.ci_high < 4.0 && e.ci_low <= cap + 3.0 * e.std_error && started.elapsed() < Duration::from_secs(30);
        ok &= pass;
        lines.push(format!("{name}: {:.4} [{:.4}, {:.4}]", e.value, e.ci_low, e.ci_high));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_ok(c: &ExperimentConfig) -> Result<Outcome, String> {
    run(c).map_err(|e| e.to_string())
}

fn c6_tails(csvs: &mut Vec<String>) -> Check {
    let mut rows = 0;
    let mut worst_oracle_miss = 0usize;
    let mut failures = Vec::new();
    for (model, n) in tail_models() {
        let out = run_ok(&tail_config(&model, workers()))?;
        let csv = Csv::parse(&out.csv);
        let gaussian = model.contains(r#""gaussian""#);
        for row in &csv.rows {
            rows += 1;
            let t = csv.num(row, "t");
            if csv.get(row, "verdict_exp") != "HOLDS" {
                failures.push(format!("n={n} t={t} exp tail {}", csv.get(row, "verdict_exp")));
            }
            if t <= 2.0 * (n as f64).sqrt() + 1e-12 && csv.get(row, "verdict_gaus") != "HOLDS" {
                failures.push(format!("n={n} t={t} gaussian tail {}", csv.get(row, "verdict_gaus")));
            }
            if gaussian {
                let exact = gaussian_tail_oracle(n, t);
                if exact < csv.num(row, "ci_low") || exact > csv.num(row, "ci_high") {
                    worst_oracle_miss += 1;
                    failures.push(format!("n={n} t={t} oracle {exact:.3e} outside CI"));
                }
            }
        }
        csvs.push(out.csv);
    }
    if failures.is_empty() {
        Ok(format!("{rows} grid points HOLDS; chi-square oracle inside every Gaussian CI"))
    } else {
        Err(format!("{} problems ({worst_oracle_miss} oracle misses): {}", failures.len(), failures.join("; ")))
    }
}

fn c7_mgf() -> Check {
    let mut rows = 0;
    let mut failures = Vec::new();
    for (model, n) in tail_models() {
        let out = run_ok(&config(Experiment::Mgf, &model, workers()))?;
        let csv = Csv::parse(&out.csv);
        let top = csv.num(csv.rows.last().unwrap(), "alpha");
        if (top - (n as f64).sqrt() / 4.0).abs() > 1e-12 {
            failures.push(format!("n={n}: grid ends at {top}"));
        }
        for row in &csv.rows {
            rows += 1;
            if csv.get(row, "verdict") != "HOLDS" {
                failures.push(format!("n={n} alpha={} {}", csv.get(row, "alpha"), csv.get(row, "verdict")));
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("{rows} (model, alpha) points HOLDS against 3 exp(4 alpha^2)"))
    } else {
        Err(failures.join("; "))
    }
}

fn c8_entropy_power() -> Check {
    let n = 64;
    let bound = typical_set_bound(1.0, n).value;
    let models = [
        ModelND::standard_gaussian(n).unwrap(),
        ModelND::iid(make_standard(Family1D::Exponential { rate: 1.0 }).unwrap(), n).unwrap(),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, model) in models.iter().enumerate() {
        let batch = sample_information(model, 1_000_000, &RngStream::new(800 + i as u64, 0), workers()).map_err(|e| e.to_string())?;
        let band = entropy_power_band(&batch, 1.0, DEFAULT_CONFIDENCE).map_err(|e| e.to_string())?;
        let v = compare_lower_probability(&band, bound);
        let literal = entropy_power_band_literal(&batch, DEFAULT_CONFIDENCE).map_err(|e| e.to_string())?;
        ok &= v.verdict == Verdict::Holds;
        lines.push(format!(
            "{}: band {:.6} (ci_low {:.6}) vs {bound:.6} {}; 2/n-exponent band {:.2e}",
            model.label(),
            band.value,
            band.ci_low,
            v.verdict,
            literal.value
        ));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c9_affine() -> Check {
    let n = 8;
    let base = ModelND::product(vec![
        make_standard(Family1D::Exponential { rate: 1.0 }).unwrap(),
        make_standard(Family1D::Gaussian1D { mean: 0.0, sd: 1.0 }).unwrap(),
        make_standard(Family1D::Laplace { loc: 0.0, scale: 1.0 }).unwrap(),
        make_standard(Family1D::Uniform { lo: 0.0, hi: 1.0 }).unwrap(),
        make_standard(Family1D::Gamma { shape: 2.0 }).unwrap(),
        make_standard(Family1D::HalfNormal { sd: 1.0 }).unwrap(),
        make_standard(Family1D::Beta { a: 2.0, b: 3.0 }).unwrap(),
        make_standard(Family1D::Weibull { shape: 2.0 }).unwrap(),
    ])
    .unwrap();
    let rng = RngStream::new(9, 0);
    let plain = sample_information(&base, 10_000, &rng, workers()).map_err(|e| e.to_string())?;
    let mut gen = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| gen.gen_range(-1.0..1.0)).collect()).collect();
        let t = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let shift: Vec<f64> = (0..n).map(|_| gen.gen_range(-5.0..5.0)).collect();
        let model = ModelND::affine(base.clone(), t, shift).map_err(|e| e.to_string())?;
        let moved = sample_information(&model, 10_000, &rng, workers()).map_err(|e| e.to_string())?;
        for (a, b) in plain.deviations.iter().zip(&moved.deviations) {
            worst = worst.max((a - b).abs());
        }
    }
    if worst <= 1e-10 {
        Ok(format!("max pointwise |dev(X) - dev(TX)| = {worst:.2e} over 3 maps"))
    } else {
        Err(format!("max pointwise |dev(X) - dev(TX)| = {worst:.2e} > 1e-10"))
    }
}

fn c10_gaussian_decomposition() -> Check {
    let model = ModelND::standard_gaussian(32).unwrap();
    let (batch, points) =
        sample_information_with_points(&model, 10_000, &RngStream::new(10, 0), workers()).map_err(|e| e.to_string())?;
    let worst = batch
        .deviations
        .iter()
        .zip(&points)
        .map(|(d, x)| (d - x.iter().map(|v| (v * v - 1.0) / 2.0).sum::<f64>()).abs())
        .fold(0.0f64, f64::max);
    if worst <= 1e-10 {
        Ok(format!("max |dev - sum (x_i^2 - 1)/2| = {worst:.2e}"))
    } else {
        Err(format!("max |dev - sum (x_i^2 - 1)/2| = {worst:.2e} > 1e-10"))
    }
}

fn c11_aep(csvs: &mut Vec<String>) -> Check {
    let out = run_ok(&aep_config(workers()))?;
    let csv = Csv::parse(&out.csv);
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for row in &csv.rows {
        let n = csv.num(row, "n");
        let value = csv.num(row, "value");
        let margin = csv.num(row, "ci_high") - value;
        let bound = 3.0 * (-n / 64.0).exp();
        if value > bound + margin {
            failures.push(format!("n={n}: {value:.4} > {bound:.4} + {margin:.4}"));
        }
        lines.push(format!("n={n} freq {value:.4} bound {bound:.4}"));
    }
    let medians: Vec<f64> = serde_json::from_value(out.summary["results"]["median_sup_deviation"].clone()).unwrap();
    if medians.windows(2).any(|w| w[1] >= w[0]) {
        failures.push(format!("median sup-deviation not decreasing: {medians:?}"));
    }
    lines.push(format!("median sup-deviation {medians:.4?}"));
    csvs.push(out.csv);
    if failures.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

fn c12_quantile_density() -> Check {
    let grid: Vec<f64> = (1..=19).map(|i| 0.05 * i as f64).collect();
    let mut worst = f64::INFINITY;
    for d in zoo() {
        let v: Vec<f64> = grid.iter().map(|t| d.quantile_density(*t)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        if v.iter().any(|x| !(*x > 0.0)) {
            return Err(format!("{}: non-positive quantile density", d.name()));
        }
        for w in v.windows(3) {
            worst = worst.min(w[1] - 0.5 * (w[0] + w[2]));
        }
    }
    if worst >= -1e-9 {
        Ok(format!("worst midpoint defect {worst:.2e} across the zoo"))
    } else {
        Err(format!("worst midpoint defect {worst:.2e} < -1e-9"))
    }
}

fn c13_determinism(tail_csvs: &[String], aep_csvs: &[String]) -> Check {
    let mut mismatches = Vec::new();
    for ((model, n), expected) in tail_models().iter().zip(tail_csvs) {
        let again = run_ok(&tail_config(model, 1))?;
        if &again.csv != expected {
            mismatches.push(format!("tail n={n}"));
        }
    }
    let again = run_ok(&aep_config(1))?;
    if aep_csvs.first() != Some(&again.csv) {
        mismatches.push("aep".into());
    }
    if mismatches.is_empty() {
        Ok(format!("{} CSVs byte-identical with 1 vs {} workers", tail_csvs.len() + aep_csvs.len(), workers()))
    } else {
        Err(format!("CSV differs for {}", mismatches.join(", ")))
    }
}

fn main() {
    let mut tail_csvs = Vec::new();
    let mut aep_csvs = Vec::new();
    let mut failed = 0;
    let mut report = |id: u32, title: &str, limit: Option<u64>, f: &mut dyn FnMut() -> Check| {
        let started = Instant::now();
        let result = f();
        let secs = started.elapsed().as_secs_f64();
        let over = limit.is_some_and(|l| secs >= l as f64);
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; runtime {secs:.1}s over {}s", limit.unwrap())),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} [{id:2}] {title} ({secs:.1}s): {detail}");
    };
    report(1, "gamma variance of log equals trigamma", Some(5), &mut c1_gamma_trigamma);
    report(2, "gamma variance ratio equals 1/p", Some(2), &mut c2_gamma_ratio);
    report(3, "exponential normalized moments are flat", Some(5), &mut c3_exponential_flat);
    report(4, "reverse Lyapunov suite", Some(60), &mut c4_reverse_lyapunov);
    report(5, "one-dimensional MGF at alpha 1/2", None, &mut c5_one_dim_mgf);
    report(6, "tail bounds and chi-square oracle", Some(120), &mut || c6_tails(&mut tail_csvs));
    report(7, "MGF bound 3 exp(4 alpha^2)", Some(120), &mut c7_mgf);
    report(8, "entropy-power band at n = 64", Some(60), &mut c8_entropy_power);
    report(9, "affine invariance, coupled samples", Some(5), &mut c9_affine);
    report(10, "standard normal decomposition", Some(5), &mut c10_gaussian_decomposition);
    report(11, "AEP convergence for Gaussian AR(1)", Some(180), &mut || c11_aep(&mut aep_csvs));
    report(12, "quantile density concavity", Some(5), &mut c12_quantile_density);
    report(13, "determinism across worker counts", None, &mut || c13_determinism(&tail_csvs, &aep_csvs));
    println!("acceptance: {} of 13 criteria passed", 13 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
