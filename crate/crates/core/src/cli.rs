//! Command-line experiment runner.
//!
//! Each experiment produces a CSV table (one row per grid point, numbers with
//! 17 significant digits) and a JSON summary. Exit status is 0 when no in-window
//! bound is VIOLATED, 2 otherwise, and 1 on errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::aep::{convergence_diagnostic, median_sup_deviation, run_trajectories, ProcessModel};
use crate::bounds::{
    self, compare, compare_lower_probability, compare_probability, lemma5_mgf, prop1d_mgf_bound, thm_exp_tail,
    thm_gaus_tail, thm_mgf_bound, typical_set_bound, variance_cap_from_mgf, Sidedness, Verdict,
};
use crate::distributions::{ModelSpec, RngStream};
use crate::infotools::{
    deviation_variance, empirical_mgf, empirical_tail, entropy_power_band, entropy_power_band_literal,
    sample_information, typical_set_fraction, McEstimate, MgfForm, TailScaling, DEFAULT_CONFIDENCE,
};
use crate::lyapunov::{
    check_convexity_direction, check_spaced_triples, moment_curve, order_p_mgf, order_p_variance_check, MomentKind,
    DEFECT_TOL,
};
use crate::{Error, Result};

/// Tolerance for deterministic (quadrature) comparisons in `order_p`.
const QUADRATURE_CHECK_TOL: f64 = 1e-7;
/// Midpoint tolerance for the quantile-density concavity test.
const QUANTILE_CONCAVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    Tail,
    Mgf,
    Variance,
    Lyapunov,
    OrderP,
    Aep,
    QuantileDensity,
    EntropyPower,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Tail => "tail",
            Experiment::Mgf => "mgf",
            Experiment::Variance => "variance",
            Experiment::Lyapunov => "lyapunov",
            Experiment::OrderP => "order_p",
            Experiment::Aep => "aep",
            Experiment::QuantileDensity => "quantile_density",
            Experiment::EntropyPower => "entropy_power",
        }
    }
}

/// Everything that determines an experiment's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: Option<ModelSpec>,
    pub samples: usize,
    pub seed: u64,
    pub confidence: f64,
    pub t_grid: Option<Vec<f64>>,
    pub alpha_grid: Option<Vec<f64>>,
    pub p_grid: Option<Vec<f64>>,
    pub n_grid: Option<Vec<usize>>,
    pub s_grid: Option<Vec<f64>>,
    pub epsilon: Option<Vec<f64>>,
    pub kind: Option<MomentKind>,
    pub form: Option<MgfForm>,
    pub scaling: Option<TailScaling>,
    pub trials: usize,
    pub literal_band: bool,
    /// Execution only; never affects outputs.
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out_csv: Option<PathBuf>,
    #[serde(skip)]
    pub out_json: Option<PathBuf>,
    #[serde(skip)]
    pub out_trajectories: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Tail,
            model: None,
            samples: 1_000_000,
            seed: 0,
            confidence: DEFAULT_CONFIDENCE,
            t_grid: None,
            alpha_grid: None,
            p_grid: None,
            n_grid: None,
            s_grid: None,
            epsilon: None,
            kind: None,
            form: None,
            scaling: None,
            trials: 10_000,
            literal_band: false,
            workers: default_workers(),
            out_csv: None,
            out_json: None,
            out_trajectories: None,
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Parse `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad grid '{text}': expected start:stop:step or a comma list"));
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<f64> = text.split(':').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(bad());
        }
        let span = (stop - start) / step;
        let count = (span + 1e-9).floor() as usize;
        let mut grid: Vec<f64> = (0..=count).map(|i| start + step * i as f64).collect();
        if let Some(last) = grid.last_mut() {
            if (*last - stop).abs() <= 1e-9 * step {
                *last = stop;
            }
        }
        Ok(grid)
    } else {
        let grid: Vec<f64> = text.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
        if grid.is_empty() {
            return Err(bad());
        }
        Ok(grid)
    }
}

fn parse_count_grid(text: &str) -> Result<Vec<usize>> {
    parse_grid(text)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("grid '{text}' must contain positive integers")))
            }
        })
        .collect()
}

// ---------------------------------------------------------------- clap layer

#[derive(Debug, Parser)]
#[command(name = "infoconc", version, about = "Concentration checks for the information content of log-concave models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tail probabilities of |h~ - h| against the exponential and Gaussian tail bounds.
    Tail(RunArgs),
    /// Empirical MGF of the deviation against 3 e^{4 a^2}.
    Mgf(RunArgs),
    /// Variance of the information content per coordinate.
    Variance(RunArgs),
    /// Moment curves of a positive 1-D density and their convexity.
    Lyapunov(RunArgs),
    /// Variance and MGF checks for a density of order p.
    #[command(name = "order_p")]
    OrderP(RunArgs),
    /// Per-coordinate information along simulated process trajectories.
    Aep(RunArgs),
    /// Concavity of the quantile density I(t) = f(F^-1(t)).
    #[command(name = "quantile_density")]
    QuantileDensity(RunArgs),
    /// Entropy-power band and typical-set frequencies.
    #[command(name = "entropy_power")]
    EntropyPower(RunArgs),
    /// Run an experiment described by a JSON config file.
    Run(ConfigArgs),
    /// Print the bound catalog.
    #[command(name = "list_bounds")]
    ListBounds(ListArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Model family name, or an inline JSON model spec.
    #[arg(long)]
    pub model: Option<String>,
    /// JSON model spec file.
    #[arg(long, conflicts_with = "model")]
    pub model_file: Option<PathBuf>,
    /// Dimension for shorthand model names.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Extra `key=value` model parameter for shorthand names (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Order p: shape of gamma/weibull, dof of chi.
    #[arg(long)]
    pub p: Option<f64>,
    /// AR(1) coefficient for `--model gauss_ar1`.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, env = "INFOCONC_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub t_grid: Option<String>,
    #[arg(long)]
    pub alpha_grid: Option<String>,
    #[arg(long)]
    pub p_grid: Option<String>,
    #[arg(long)]
    pub n_grid: Option<String>,
    #[arg(long)]
    pub s_grid: Option<String>,
    /// Typical-set widths for `entropy_power`.
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Moment kind for `lyapunov`: raw, normalized or hat.
    #[arg(long)]
    pub kind: Option<String>,
    /// MGF form: two_sided_abs or one_sided.
    #[arg(long)]
    pub form: Option<String>,
    /// Tail scaling: sqrt_n or per_coordinate.
    #[arg(long)]
    pub scaling: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Also report the entropy-power band with exponents 2/n.
    #[arg(long)]
    pub literal_band: bool,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    /// Per-trajectory CSV for `aep`.
    #[arg(long)]
    pub out_trajectories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    #[arg(long)]
    pub out_trajectories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

fn order_key(family: &str) -> Result<&'static str> {
    match family {
        "gamma" | "weibull" => Ok("shape"),
        "chi" => Ok("dof"),
        _ => Err(Error::Config(format!("--p does not apply to model '{family}'"))),
    }
}

fn resolve_model(args: &RunArgs) -> Result<Option<ModelSpec>> {
    if let Some(path) = &args.model_file {
        let text = std::fs::read_to_string(path)?;
        return ModelSpec::parse(&text).map(Some);
    }
    let Some(name) = &args.model else { return Ok(None) };
    if name.trim_start().starts_with('{') {
        return ModelSpec::parse(name).map(Some);
    }
    let mut spec = ModelSpec::from_name(name, args.dim);
    let params = spec.params.as_object_mut().expect("shorthand params are an object");
    if let Some(p) = args.p {
        params.insert(order_key(name)?.into(), json!(p));
    }
    if let Some(rho) = args.rho {
        params.insert("rho".into(), json!(rho));
    }
    for kv in &args.params {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--param expects KEY=VALUE, got '{kv}'")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        params.insert(k.to_string(), value);
    }
    Ok(Some(spec))
}

fn config_from_args(experiment: Experiment, args: RunArgs) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig { experiment, model: resolve_model(&args)?, ..ExperimentConfig::default() };
    if let Some(v) = args.samples {
        c.samples = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = args.workers {
        c.workers = v;
    }
    if let Some(v) = args.confidence {
        c.confidence = v;
    }
    if let Some(v) = args.trials {
        c.trials = v;
    }
    c.t_grid = args.t_grid.as_deref().map(parse_grid).transpose()?;
    c.alpha_grid = args.alpha_grid.as_deref().map(parse_grid).transpose()?;
    c.p_grid = args.p_grid.as_deref().map(parse_grid).transpose()?;
    c.n_grid = args.n_grid.as_deref().map(parse_count_grid).transpose()?;
    c.s_grid = args.s_grid.as_deref().map(parse_grid).transpose()?;
    c.epsilon = args.epsilon.as_deref().map(parse_grid).transpose()?;
    c.kind = args.kind.as_deref().map(str::parse).transpose()?;
    c.form = args.form.as_deref().map(str::parse).transpose()?;
    c.scaling = args.scaling.as_deref().map(str::parse).transpose()?;
    c.literal_band = args.literal_band;
    c.out_csv = args.out_csv;
    c.out_json = args.out_json;
    c.out_trajectories = args.out_trajectories;
    Ok(c)
}

// ---------------------------------------------------------------- tables

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Flag(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl From<Verdict> for Cell {
    fn from(v: Verdict) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Text(String::new()), Cell::Num)
    }
}

fn format_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format_num(*v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(t) => t.clone(),
                    Cell::Flag(b) => b.to_string(),
                })
                .collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// Verdict bookkeeping for one experiment.
#[derive(Default)]
struct Tally {
    counts: BTreeMap<&'static str, usize>,
    bounds: Vec<&'static str>,
}

impl Tally {
    fn record(&mut self, bound: &'static str, verdict: Verdict, counted: bool) {
        if !self.bounds.contains(&bound) {
            self.bounds.push(bound);
        }
        if counted {
            let key = match verdict {
                Verdict::Holds => "HOLDS",
                Verdict::Violated => "VIOLATED",
                Verdict::Inconclusive => "INCONCLUSIVE",
            };
            *self.counts.entry(key).or_insert(0) += 1;
        }
    }

    fn violated(&self) -> bool {
        self.counts.get("VIOLATED").copied().unwrap_or(0) > 0
    }

    fn counts_json(&self) -> Value {
        json!({
            "HOLDS": self.counts.get("HOLDS").copied().unwrap_or(0),
            "VIOLATED": self.counts.get("VIOLATED").copied().unwrap_or(0),
            "INCONCLUSIVE": self.counts.get("INCONCLUSIVE").copied().unwrap_or(0),
        })
    }

    fn bounds_json(&self) -> Value {
        let catalog = bounds::catalog();
        Value::Array(
            self.bounds
                .iter()
                .map(|name| {
                    let anchor = catalog.iter().find(|e| e.name == *name).map(|e| e.paper_anchor.clone()).unwrap_or_default();
                    json!({ "name": name, "paper_anchor": anchor })
                })
                .collect(),
        )
    }
}

fn deterministic_verdict(value: f64, bound: f64, tol: f64) -> Verdict {
    if value <= bound + tol {
        Verdict::Holds
    } else {
        Verdict::Violated
    }
}

// ---------------------------------------------------------------- experiments

/// Outputs of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub csv: String,
    /// Summary without the `metadata` field.
    pub summary: Value,
    pub trajectories_csv: Option<String>,
    pub exit_code: i32,
}

struct Parts {
    table: Table,
    results: Value,
    tally: Tally,
    trajectories: Option<String>,
}

fn require_model(c: &ExperimentConfig) -> Result<&ModelSpec> {
    c.model.as_ref().ok_or_else(|| Error::Config(format!("{} needs --model or --model-file", c.experiment.as_str())))
}

fn rng_of(c: &ExperimentConfig) -> RngStream {
    RngStream::new(c.seed, 0)
}

fn run_tail(c: &ExperimentConfig) -> Result<Parts> {
    let model = require_model(c)?.build()?;
    let n = model.dim();
    let scaling = c.scaling.unwrap_or(TailScaling::SqrtN);
    let grid = c.t_grid.clone().unwrap_or(parse_grid("0:8:0.5")?);
    let batch = sample_information(&model, c.samples, &rng_of(c), c.workers)?;
    let tail = empirical_tail(&batch, &grid, scaling, c.confidence)?;
    let mut table = Table::new(vec![
        "t", "threshold_nats", "value", "se", "ci_low", "ci_high", "bound_exp", "verdict_exp", "bound_gaus", "gaus_in_window",
        "verdict_gaus",
    ]);
    let mut tally = Tally::default();
    for pt in &tail {
        // equivalent t on the sqrt(n) scale
        let t = pt.threshold / (n as f64).sqrt();
        let be = thm_exp_tail(t);
        let bg = thm_gaus_tail(t, n);
        let ve = compare_probability(&pt.estimate, be.value);
        let vg = compare_probability(&pt.estimate, bg.value);
        tally.record("thm_exp_tail", ve.verdict, true);
        tally.record(if scaling == TailScaling::SqrtN { "thm_gaus_tail" } else { "per_coordinate_tail" }, vg.verdict, bg.in_window);
        let e = &pt.estimate;
        table.push(vec![
            pt.t.into(),
            pt.threshold.into(),
            e.value.into(),
            e.std_error.into(),
            e.ci_low.into(),
            e.ci_high.into(),
            be.value.into(),
            ve.verdict.into(),
            bg.value.into(),
            bg.in_window.into(),
            vg.verdict.into(),
        ]);
    }
    let results = json!({ "model": model.label(), "dim": n, "entropy": model.entropy(), "samples": c.samples,
        "scaling": scaling, "grid_points": tail.len() });
    Ok(Parts { table, results, tally, trajectories: None })
}

fn default_alpha_grid(n: usize) -> Vec<f64> {
    let top = 0.25 * (n as f64).sqrt();
    let mut g: Vec<f64> = (0..).map(|i| 0.25 * i as f64).take_while(|a| *a <= top + 1e-12).collect();
    if g.last().is_some_and(|a| (a - top).abs() > 1e-12) {
        g.push(top);
    }
    g
}

fn run_mgf(c: &ExperimentConfig) -> Result<Parts> {
    let model = require_model(c)?.build()?;
    let n = model.dim();
    let form = c.form.unwrap_or(MgfForm::TwoSidedAbs);
    let grid = c.alpha_grid.clone().unwrap_or_else(|| default_alpha_grid(n));
    let batch = sample_information(&model, c.samples, &rng_of(c), c.workers)?;
    let points = empirical_mgf(&batch, &grid, form, c.confidence)?;
    let mut table = Table::new(vec![
        "alpha", "value", "log_value", "se", "ci_low", "ci_high", "bound", "in_window", "verdict", "bound_1d", "verdict_1d",
    ]);
    let mut tally = Tally::default();
    for pt in &points {
        let b = thm_mgf_bound(pt.alpha, n);
        let v = compare(&pt.estimate, b.value);
        tally.record("thm_mgf", v.verdict, b.in_window);
        // the one-dimensional bound applies to the two-sided form at n = 1
        let (b1, v1) = if n == 1 && form == MgfForm::TwoSidedAbs && pt.alpha < 1.0 {
            let b1 = prop1d_mgf_bound(pt.alpha)?;
            let v1 = compare(&pt.estimate, b1);
            tally.record("prop1d_mgf_alpha", v1.verdict, true);
            (Some(b1), v1.verdict.to_string())
        } else {
            (None, String::new())
        };
        let e = &pt.estimate;
        table.push(vec![
            pt.alpha.into(),
            e.value.into(),
            pt.log_value.into(),
            e.std_error.into(),
            e.ci_low.into(),
            e.ci_high.into(),
            b.value.into(),
            b.in_window.into(),
            v.verdict.into(),
            b1.into(),
            v1.into(),
        ]);
    }
    let results = json!({ "model": model.label(), "dim": n, "entropy": model.entropy(), "samples": c.samples, "form": form });
    Ok(Parts { table, results, tally, trajectories: None })
}

fn run_variance(c: &ExperimentConfig) -> Result<Parts> {
    let model = require_model(c)?.build()?;
    let n = model.dim();
    let batch = sample_information(&model, c.samples, &rng_of(c), c.workers)?;
    let v = deviation_variance(&batch, c.confidence)?;
    let nf = n as f64;
    let per = McEstimate { value: v.value / nf, std_error: v.std_error / nf, ci_low: v.ci_low / nf, ci_high: v.ci_high / nf, ..v };
    let cap = variance_cap_from_mgf(n);
    let verdict = compare(&per, cap);
    let mut tally = Tally::default();
    tally.record("variance_cap", verdict.verdict, true);
    let mut table = Table::new(vec!["n", "m", "variance", "se", "ci_low", "ci_high", "variance_per_coord", "cap_per_coord", "verdict"]);
    table.push(vec![
        n.into(),
        c.samples.into(),
        v.value.into(),
        v.std_error.into(),
        v.ci_low.into(),
        v.ci_high.into(),
        per.value.into(),
        cap.into(),
        verdict.verdict.into(),
    ]);
    let results = json!({ "model": model.label(), "dim": n, "entropy": model.entropy(), "samples": c.samples,
        "empirical_constant": per.value, "empirical_constant_ci_high": per.ci_high });
    Ok(Parts { table, results, tally, trajectories: None })
}

fn run_lyapunov(c: &ExperimentConfig) -> Result<Parts> {
    let d = require_model(c)?.build_1d()?;
    let kind = c.kind.unwrap_or(MomentKind::Normalized);
    let grid = c.p_grid.clone().unwrap_or(parse_grid("0.5:40:0.5")?);
    let curve = moment_curve(&d, kind, &grid, c.workers)?;
    let direction = kind.expected_direction();
    let report = check_convexity_direction(&curve, direction)?;
    let mut tally = Tally::default();
    let bound_name = match kind {
        MomentKind::Raw => "lyapunov",
        MomentKind::Normalized => "reverse_lyapunov",
        MomentKind::Hat => "hat_moment_concavity",
    };
    tally.record(bound_name, report.verdict, true);
    let mut triples = Vec::new();
    if kind != MomentKind::Raw {
        for s in [0.25, 0.5, 1.0, 2.0] {
            let t = check_spaced_triples(&curve, s)?;
            if t.triples_checked > 0 {
                tally.record(bound_name, deterministic_verdict(-t.worst_margin, 0.0, DEFECT_TOL), true);
                triples.push(t);
            }
        }
    }
    let mut table = Table::new(vec!["p", "log_value", "quad_error", "midpoint_defect"]);
    for (i, p) in curve.grid.iter().enumerate() {
        let defect = if i > 0 && i + 1 < curve.grid.len() {
            let lv = &curve.log_values;
            let convex = 0.5 * (lv[i - 1] + lv[i + 1]) - lv[i];
            Some(if kind == MomentKind::Raw { convex } else { -convex })
        } else {
            None
        };
        table.push(vec![(*p).into(), curve.log_values[i].into(), curve.quad_errors[i].into(), defect.into()]);
    }
    let results = json!({ "density": report.density, "kind": kind, "direction": direction, "worst_defect": report.worst_defect,
        "location": report.location, "verdict": report.verdict, "triples": triples,
        "max_abs_log_value": curve.log_values.iter().fold(0.0f64, |m, v| m.max(v.abs())) });
    Ok(Parts { table, results, tally, trajectories: None })
}

fn run_order_p(c: &ExperimentConfig) -> Result<Parts> {
    let d = require_model(c)?.build_1d()?;
    let r = order_p_variance_check(&d)?;
    let p = r.p;
    let mut tally = Tally::default();
    let mut table = Table::new(vec!["quantity", "bound_name", "parameter", "value", "bound", "margin", "in_window", "verdict"]);
    let mut row = |table: &mut Table, name: &'static str, q: &str, param: Option<f64>, value: f64, bound: f64, in_window: bool| {
        let v = deterministic_verdict(value, bound, QUADRATURE_CHECK_TOL);
        tally.record(name, v, in_window);
        table.push(vec![q.into(), name.into(), param.into(), value.into(), bound.into(), (bound - value).into(), in_window.into(), v.into()]);
    };
    row(&mut table, "trigamma_var_log", "var_log", None, r.var_log, r.trigamma, true);
    if let Some(cap) = r.log_cap {
        row(&mut table, "log_var_cap", "var_log", None, r.var_log, cap, true);
    }
    row(&mut table, "var_ratio_cap", "var_ratio", None, r.var_ratio, r.ratio_cap, true);
    if let Some(cap) = r.cp_cap {
        row(&mut table, "cp_var_cap", "var_ratio", None, r.var_ratio, cap - 0.0, true);
    }
    let uniform_alpha = p.sqrt() / 6.0;
    let mgf = order_p_mgf(&d, uniform_alpha, true)?;
    row(&mut table, "order_p_uniform_mgf", "mgf_two_sided", Some(uniform_alpha), mgf, bounds::ORDER_P_UNIFORM_MGF, true);
    if p > 1.0 {
        let grid = c.alpha_grid.clone().unwrap_or_else(|| (0..=4).map(|i| 0.25 * i as f64 * (p - 1.0)).collect());
        for a in grid {
            let two = lemma5_mgf(a, p, Sidedness::TwoSided)?;
            let v = order_p_mgf(&d, a, true)?;
            row(&mut table, "lemma5_two_sided", "mgf_two_sided", Some(a), v, two.value, two.in_window);
            let one = lemma5_mgf(a, p, Sidedness::OneSided)?;
            let v = order_p_mgf(&d, a, false)?;
            row(&mut table, "lemma5_one_sided", "mgf_one_sided", Some(a), v, one.value, one.in_window);
        }
    }
    let results = serde_json::to_value(&r)?;
    Ok(Parts { table, results, tally, trajectories: None })
}

fn run_aep(c: &ExperimentConfig) -> Result<Parts> {
    let process = ProcessModel::from_spec(require_model(c)?)?;
    let n_grid = c.n_grid.clone().unwrap_or(vec![16, 64, 256, 1024]);
    let s_grid = c.s_grid.clone().unwrap_or(vec![0.5]);
    let report = run_trajectories(&process, &n_grid, c.trials, &s_grid, &rng_of(c), c.workers, c.confidence)?;
    let sup = convergence_diagnostic(&report);
    let medians = median_sup_deviation(&sup);
    let mut tally = Tally::default();
    let mut table = Table::new(vec![
        "n", "s", "count", "value", "se", "ci_low", "ci_high", "bound", "in_window", "verdict", "block_rate", "median_sup_deviation",
    ]);
    for row in &report.exceedance {
        tally.record("per_coordinate_tail", row.verdict.verdict, row.in_window);
        let j = n_grid.iter().position(|n| *n == row.n).expect("row n is on the grid");
        let e = &row.estimate;
        table.push(vec![
            row.n.into(),
            row.s.into(),
            row.count.into(),
            e.value.into(),
            e.std_error.into(),
            e.ci_low.into(),
            e.ci_high.into(),
            row.bound.into(),
            row.in_window.into(),
            row.verdict.verdict.into(),
            report.block_rates[j].into(),
            medians[j].into(),
        ]);
    }
    let trajectories = if c.out_trajectories.is_some() {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        Some(String::from_utf8(buf).expect("CSV is UTF-8"))
    } else {
        None
    };
    let results = json!({ "process": report.process, "entropy_rate": report.entropy_rate, "n_grid": n_grid,
        "block_rates": report.block_rates, "trials": c.trials, "median_sup_deviation": medians,
        "exceedance": report.exceedance });
    Ok(Parts { table, results, tally, trajectories })
}

fn run_quantile_density(c: &ExperimentConfig) -> Result<Parts> {
    let d = require_model(c)?.build_1d()?;
    let grid = c.t_grid.clone().unwrap_or(parse_grid("0.05:0.95:0.05")?);
    if grid.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::Config("quantile_density grid must lie in (0, 1)".into()));
    }
    let values: Vec<f64> = grid.iter().map(|t| d.quantile_density(*t)).collect::<Result<_>>()?;
    let mut tally = Tally::default();
    let mut table = Table::new(vec!["t", "quantile", "quantile_density", "midpoint_defect", "verdict"]);
    let mut worst = f64::INFINITY;
    for (i, t) in grid.iter().enumerate() {
        let (defect, verdict) = if i > 0 && i + 1 < grid.len() && ((grid[i - 1] + grid[i + 1]) * 0.5 - t).abs() < 1e-12 {
            let defect = values[i] - 0.5 * (values[i - 1] + values[i + 1]);
            worst = worst.min(defect);
            let v = deterministic_verdict(-defect, 0.0, QUANTILE_CONCAVITY_TOL);
            tally.record("quantile_density_concavity", v, true);
            (Some(defect), v.to_string())
        } else {
            (None, String::new())
        };
        table.push(vec![(*t).into(), d.quantile(*t)?.into(), values[i].into(), defect.into(), verdict.into()]);
    }
    let results = json!({ "density": d.name(), "worst_defect": worst, "positive": values.iter().all(|v| *v > 0.0) });
    Ok(Parts { table, results, tally, trajectories: None })
}

fn run_entropy_power(c: &ExperimentConfig) -> Result<Parts> {
    let model = require_model(c)?.build()?;
    let n = model.dim();
    let batch = sample_information(&model, c.samples, &rng_of(c), c.workers)?;
    let mut tally = Tally::default();
    let mut table = Table::new(vec!["quantity", "parameter", "value", "se", "ci_low", "ci_high", "bound", "in_window", "vacuous", "verdict"]);
    let push = |table: &mut Table, tally: &mut Tally, name: &'static str, q: &str, param: f64, est: McEstimate, bound: f64, in_window: bool| {
        let v = compare_lower_probability(&est, bound);
        tally.record(name, v.verdict, in_window);
        table.push(vec![
            q.into(),
            param.into(),
            est.value.into(),
            est.std_error.into(),
            est.ci_low.into(),
            est.ci_high.into(),
            bound.into(),
            in_window.into(),
            v.vacuous.into(),
            v.verdict.into(),
        ]);
    };
    for s in c.s_grid.clone().unwrap_or(vec![1.0]) {
        let est = entropy_power_band(&batch, s, c.confidence)?;
        let b = typical_set_bound(s, n);
        push(&mut table, &mut tally, "entropy_power_band", "band", s, est, b.value, b.in_window);
    }
    if c.literal_band {
        let est = entropy_power_band_literal(&batch, c.confidence)?;
        let b = typical_set_bound(1.0, n);
        push(&mut table, &mut tally, "entropy_power_band", "band_literal", 1.0, est, b.value, b.in_window);
    }
    for eps in c.epsilon.clone().unwrap_or_default() {
        let est = typical_set_fraction(&batch, eps, c.confidence)?;
        let b = typical_set_bound(eps, n);
        push(&mut table, &mut tally, "typical_set", "typical_set", eps, est, b.value, b.in_window);
    }
    let results = json!({ "model": model.label(), "dim": n, "entropy": model.entropy(),
        "entropy_power": (2.0 * model.entropy() / n as f64).exp(), "samples": c.samples });
    Ok(Parts { table, results, tally, trajectories: None })
}

/// Run an experiment and return its outputs without touching the filesystem.
pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    if config.workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let parts = match config.experiment {
        Experiment::Tail => run_tail(config)?,
        Experiment::Mgf => run_mgf(config)?,
        Experiment::Variance => run_variance(config)?,
        Experiment::Lyapunov => run_lyapunov(config)?,
        Experiment::OrderP => run_order_p(config)?,
        Experiment::Aep => run_aep(config)?,
        Experiment::QuantileDensity => run_quantile_density(config)?,
        Experiment::EntropyPower => run_entropy_power(config)?,
    };
    let exit_code = if parts.tally.violated() { 2 } else { 0 };
    let summary = json!({
        "experiment": config.experiment.as_str(),
        "config": config,
        "seed": config.seed,
        "verdict_counts": parts.tally.counts_json(),
        "bounds_tested": parts.tally.bounds_json(),
        "rows": parts.table.rows.len(),
        "results": parts.results,
    });
    Ok(Outcome { csv: parts.table.to_csv(), summary, trajectories_csv: parts.trajectories, exit_code })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// Run and write outputs; returns the exit code.
pub fn execute(config: &ExperimentConfig) -> Result<i32> {
    let started = Instant::now();
    let outcome = run(config)?;
    match &config.out_csv {
        Some(path) => write_file(path, &outcome.csv)?,
        None => print!("{}", outcome.csv),
    }
    if let (Some(path), Some(csv)) = (&config.out_trajectories, &outcome.trajectories_csv) {
        write_file(path, csv)?;
    }
    let mut summary = outcome.summary.clone();
    summary["metadata"] = json!({
        "runtime_seconds": started.elapsed().as_secs_f64(),
        "workers": config.workers,
        "version": env!("CARGO_PKG_VERSION"),
    });
    if let Some(path) = &config.out_json {
        write_file(path, &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    }
    eprintln!(
        "{}: {} rows, verdicts {}",
        config.experiment.as_str(),
        outcome.summary["rows"],
        outcome.summary["verdict_counts"]
    );
    Ok(outcome.exit_code)
}

fn list_bounds(args: &ListArgs) -> Result<()> {
    let catalog = bounds::catalog();
    if args.json {
        println!("{}", serde_json::to_string_pretty(&catalog)?);
        return Ok(());
    }
    let w = catalog.iter().map(|e| e.name.len()).max().unwrap_or(4);
    println!("{:<w$}  formula  [validity]  (anchor)", "name");
    for e in &catalog {
        println!("{:<w$}  {}  [{}]  ({})", e.name, e.formula_text, e.validity, e.paper_anchor);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32> {
    let (experiment, args) = match cli.command {
        Command::Tail(a) => (Experiment::Tail, a),
        Command::Mgf(a) => (Experiment::Mgf, a),
        Command::Variance(a) => (Experiment::Variance, a),
        Command::Lyapunov(a) => (Experiment::Lyapunov, a),
        Command::OrderP(a) => (Experiment::OrderP, a),
        Command::Aep(a) => (Experiment::Aep, a),
        Command::QuantileDensity(a) => (Experiment::QuantileDensity, a),
        Command::EntropyPower(a) => (Experiment::EntropyPower, a),
        Command::Run(a) => {
            let text = std::fs::read_to_string(&a.config)?;
            let mut config: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid config {}: {e}", a.config.display())))?;
            config.workers = a.workers.unwrap_or_else(default_workers);
            config.out_csv = a.out_csv;
            config.out_json = a.out_json;
            config.out_trajectories = a.out_trajectories;
            return execute(&config);
        }
        Command::ListBounds(a) => {
            list_bounds(&a)?;
            return Ok(0);
        }
    };
    execute(&config_from_args(experiment, args)?)
}

/// Entry point used by the binary: parse `args`, run, and map errors to exit code 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("0:8:0.5").unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!((g[0], g[16]), (0.0, 8.0));
        let g = parse_grid("0.05:0.95:0.05").unwrap();
        assert_eq!(g.len(), 19);
        assert_eq!(*g.last().unwrap(), 0.95);
        assert_eq!(parse_grid("16, 64,256").unwrap(), vec![16.0, 64.0, 256.0]);
        assert_eq!(parse_count_grid("16,64").unwrap(), vec![16, 64]);
        assert!(parse_count_grid("1.5").is_err());
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn default_alpha_grid_ends_at_window() {
        assert_eq!(default_alpha_grid(16), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(default_alpha_grid(1), vec![0.0, 0.25]);
        assert_eq!(default_alpha_grid(2), vec![0.0, 0.25, 0.25 * 2f64.sqrt()]);
    }

    #[test]
    fn config_round_trip() {
        let c = ExperimentConfig {
            experiment: Experiment::Aep,
            model: Some(ModelSpec::parse(r#"{"family":"gauss_ar1","params":{"rho":0.5}}"#).unwrap()),
            n_grid: Some(vec![16, 64]),
            ..ExperimentConfig::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.model, c.model);
        assert_eq!(back.n_grid, c.n_grid);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"experiment":"tail","bogus":1}"#).is_err());
    }

    #[test]
    fn order_p_shorthand() {
        let args = Cli::try_parse_from(["infoconc", "order_p", "--model", "gamma", "--p", "5"]).unwrap();
        let Command::OrderP(a) = args.command else { panic!() };
        let spec = resolve_model(&a).unwrap().unwrap();
        assert_eq!(spec.build_1d().unwrap().order_p(), Some(5.0));
    }

    #[test]
    fn csv_formatting() {
        let mut t = Table::new(vec!["a", "b", "c"]);
        t.push(vec![0.1.into(), Verdict::Holds.into(), Option::<f64>::None.into()]);
        assert_eq!(t.to_csv(), "a,b,c\n1.0000000000000001e-1,HOLDS,\n");
    }
}
