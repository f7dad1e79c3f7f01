//! Benchmark objectives, experiment orchestration, and CSV output.

use rayon::prelude::*;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::baselines::{genetic_minimize, random_multistart, GaOptions};
use crate::bo::{run_bo, BOConfig, BOTrace, BlackBox, InnerOptimizer, Method};
use crate::boxmin;
use crate::critical::select_minima;
use crate::error::{Error, Result};
use crate::gp::{fit_hyperparameters, fit_posterior, Dataset};
use crate::inner::{distance_to_truth, optimize_ts, StartSet};
use crate::rng::{stream, StreamRole};
use crate::sampling::{condition_with_noise_variance, PriorSample};
use crate::spectral::build_basis_uniform;

/// Benchmark test functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFunction {
    Schwefel,
    Levy,
}

impl TestFunction {
    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Schwefel => "schwefel",
            TestFunction::Levy => "levy",
        }
    }

    pub fn default_dim(&self) -> usize {
        match self {
            TestFunction::Schwefel => 2,
            TestFunction::Levy => 10,
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<TestFunction> {
        match s {
            "schwefel" => Ok(TestFunction::Schwefel),
            "levy" => Ok(TestFunction::Levy),
            other => Err(Error::InvalidConfig(format!(
                "unknown objective '{other}'; valid objectives: schwefel, levy"
            ))),
        }
    }
}

/// `418.9829 d - sum_i x_i sin(sqrt(|x_i|))` on `[-500, 500]^d`.
/// Minimum 0 (to literature rounding) at `x_i = 420.9687`.
pub fn schwefel(x: &[f64]) -> Result<f64> {
    check_bounds(x, -500.0, 500.0)?;
    let d = x.len() as f64;
    Ok(418.9829 * d - x.iter().map(|&v| v * v.abs().sqrt().sin()).sum::<f64>())
}

/// The Levy function on `[-10, 10]^d` with `w_i = 1 + (x_i - 1)/4`.
/// Minimum 0 at `x = 1`.
pub fn levy(x: &[f64]) -> Result<f64> {
    check_bounds(x, -10.0, 10.0)?;
    let d = x.len();
    let w = |i: usize| 1.0 + (x[i] - 1.0) / 4.0;
    let pi = std::f64::consts::PI;
    let mut acc = (pi * w(0)).sin().powi(2);
    for i in 0..d - 1 {
        let wi = w(i);
        acc += (wi - 1.0).powi(2) * (1.0 + 10.0 * (pi * wi + 1.0).sin().powi(2));
    }
    let wd = w(d - 1);
    acc += (wd - 1.0).powi(2) * (1.0 + (2.0 * pi * wd).sin().powi(2));
    Ok(acc)
}

fn check_bounds(x: &[f64], lo: f64, hi: f64) -> Result<()> {
    for (i, &v) in x.iter().enumerate() {
        if !(lo..=hi).contains(&v) {
            return Err(Error::OutOfBounds {
                dim: i,
                value: v,
                lo,
                hi,
            });
        }
    }
    Ok(())
}

/// A benchmark objective with its known optimum.
#[derive(Clone, Debug)]
pub struct BenchObjective {
    pub func: TestFunction,
    pub dim: usize,
}

impl BenchObjective {
    pub fn new(func: TestFunction, dim: usize) -> Result<BenchObjective> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        Ok(BenchObjective { func, dim })
    }

    pub fn known_minimizer(&self) -> Vec<f64> {
        match self.func {
            TestFunction::Schwefel => vec![420.9687; self.dim],
            TestFunction::Levy => vec![1.0; self.dim],
        }
    }
}

impl BlackBox for BenchObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        match self.func {
            TestFunction::Schwefel => vec![(-500.0, 500.0); self.dim],
            TestFunction::Levy => vec![(-10.0, 10.0); self.dim],
        }
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        match self.func {
            TestFunction::Schwefel => schwefel(x),
            TestFunction::Levy => levy(x),
        }
    }

    fn known_minimum(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Settings of one benchmark invocation (one method, several seeds).
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub func: TestFunction,
    pub dim: usize,
    pub method: Method,
    pub inner: InnerOptimizer,
    pub runs: usize,
    pub iterations: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub eta: f64,
    pub m_max: usize,
    pub lcb_beta: f64,
    pub rff_features: usize,
    pub freeze_hypers: bool,
}

/// Paths written by [`run_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub trace_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
}

/// Runs `runs` independent BO runs (seeds `seed, seed+1, ...`), writing
/// one trace CSV per run plus a per-iteration regret summary CSV.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if cfg.runs == 0 {
        return Err(Error::InvalidConfig("need at least one run".into()));
    }
    let objective = BenchObjective::new(cfg.func, cfg.dim)?;
    std::fs::create_dir_all(&cfg.out_dir)?;

    let traces: Vec<Result<BOTrace>> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| {
            let mut bo = BOConfig::new(
                cfg.dim,
                cfg.method,
                cfg.inner,
                cfg.iterations,
                cfg.seed + r as u64,
            );
            bo.eta = cfg.eta;
            bo.m_max = cfg.m_max;
            bo.lcb_beta = cfg.lcb_beta;
            bo.rff_features = cfg.rff_features;
            bo.freeze_hypers = cfg.freeze_hypers;
            run_bo(&objective, &bo)
        })
        .collect();

    let mut trace_paths = Vec::with_capacity(cfg.runs);
    let mut all = Vec::with_capacity(cfg.runs);
    for (r, trace) in traces.into_iter().enumerate() {
        let trace = trace?;
        let run_seed = cfg.seed + r as u64;
        let path = cfg.out_dir.join(format!(
            "trace_{}{}d_{}_seed{}.csv",
            cfg.func.name(),
            cfg.dim,
            cfg.method.name(),
            run_seed
        ));
        write_trace_csv(&path, &trace, run_seed, cfg.method)?;
        trace_paths.push(path);
        all.push(trace);
    }

    let summary_path = cfg.out_dir.join(format!(
        "summary_{}{}d_{}.csv",
        cfg.func.name(),
        cfg.dim,
        cfg.method.name()
    ));
    write_summary_csv(&summary_path, &all)?;
    Ok(ExperimentOutput {
        trace_paths,
        summary_path,
    })
}

pub const TRACE_HEADER: &str =
    "run_id,method,iter,x_star,y,y_min,inner_value,inner_time_s,cum_time_s,log10_regret";

/// Formats a float with 17 significant digits so parsing round-trips
/// exactly; infinities and NaN use the literals `inf`/`-inf`/`nan`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse_float(s: &str) -> Result<f64> {
    match s {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse::<f64>()
            .map_err(|e| Error::InvalidConfig(format!("bad float '{s}': {e}"))),
    }
}

pub fn write_trace_csv(path: &Path, trace: &BOTrace, run_id: u64, method: Method) -> Result<()> {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in &trace.rows {
        let xs: Vec<String> = row.x.iter().map(|&v| format_float(v)).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            run_id,
            method.name(),
            row.iter,
            xs.join(";"),
            format_float(row.y),
            format_float(row.y_min),
            format_float(row.inner_value),
            format_float(row.inner_time_s),
            format_float(row.cum_time_s),
            format_float(row.log10_regret),
        ));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// A parsed trace row (fields mirror the CSV schema).
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub run_id: u64,
    pub method: String,
    pub iter: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub y_min: f64,
    pub inner_value: f64,
    pub inner_time_s: f64,
    pub cum_time_s: f64,
    pub log10_regret: f64,
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        other => {
            return Err(Error::InvalidConfig(format!(
                "unexpected trace header {other:?} in {}",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::InvalidConfig(format!("bad trace row '{line}'")));
        }
        rows.push(TraceRecord {
            run_id: fields[0]
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("bad run id: {e}")))?,
            method: fields[1].to_string(),
            iter: fields[2]
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("bad iter: {e}")))?,
            x: fields[3]
                .split(';')
                .map(parse_float)
                .collect::<Result<Vec<f64>>>()?,
            y: parse_float(fields[4])?,
            y_min: parse_float(fields[5])?,
            inner_value: parse_float(fields[6])?,
            inner_time_s: parse_float(fields[7])?,
            cum_time_s: parse_float(fields[8])?,
            log10_regret: parse_float(fields[9])?,
        });
    }
    Ok(rows)
}

pub const SUMMARY_HEADER: &str = "iter,log10_regret_q25,log10_regret_median,log10_regret_q75";

fn write_summary_csv(path: &Path, traces: &[BOTrace]) -> Result<()> {
    let iters = traces.iter().map(|t| t.rows.len()).min().unwrap_or(0);
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for k in 0..iters {
        let mut values: Vec<f64> = traces.iter().map(|t| t.rows[k].log10_regret).collect();
        values.sort_by(f64::total_cmp);
        out.push_str(&format!(
            "{},{},{},{}\n",
            k,
            format_float(quantile(&values, 0.25)),
            format_float(quantile(&values, 0.5)),
            format_float(quantile(&values, 0.75)),
        ));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SummaryRecord {
    pub iter: usize,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SUMMARY_HEADER => {}
        other => {
            return Err(Error::InvalidConfig(format!(
                "unexpected summary header {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::InvalidConfig(format!("bad summary row '{line}'")));
        }
        rows.push(SummaryRecord {
            iter: fields[0]
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("bad iter: {e}")))?,
            q25: parse_float(fields[1])?,
            median: parse_float(fields[2])?,
            q75: parse_float(fields[3])?,
        });
    }
    Ok(rows)
}

/// Linear-interpolation quantile of pre-sorted values; an infinite lower
/// bracket propagates (the convention the summary CSV pins down).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        return sorted[lo];
    }
    let (a, b) = (sorted[lo], sorted[lo + 1]);
    if a == b || !a.is_finite() {
        a
    } else if !b.is_finite() {
        b
    } else {
        a + frac * (b - a)
    }
}

/// Per-iteration head-to-head of inner optimizers on the same GP-TS
/// acquisition sample.
#[derive(Clone, Debug)]
pub struct InnerComparisonRow {
    pub iter: usize,
    pub n_starts: usize,
    pub ours_value: f64,
    pub random_value: f64,
    pub ga_value: f64,
    /// Best value of the oversized random-multistart oracle (NaN if off).
    pub oracle_value: f64,
    /// Normalized-coordinate distances to the oracle argmin (NaN if off).
    pub ours_dist: f64,
    pub random_dist: f64,
    pub ga_dist: f64,
    pub ours_time: f64,
    pub random_time: f64,
    pub ga_time: f64,
}

#[derive(Clone, Debug)]
pub struct InnerComparisonConfig {
    pub func: TestFunction,
    pub dim: usize,
    pub iterations: usize,
    pub seed: u64,
    pub eta: f64,
    pub m_max: usize,
    /// Oracle start multiplier (0 disables the oracle and distances).
    pub oracle_multiplier: usize,
}

/// Drives a GP-TS trajectory with the curated start set and, at every
/// iteration, optimizes the *same* posterior sample with random
/// multi-start and a GA using equal start counts and stopping criteria.
/// The trajectory advances with the curated method's candidate.
pub fn inner_comparison(cfg: &InnerComparisonConfig) -> Result<Vec<InnerComparisonRow>> {
    let objective = BenchObjective::new(cfg.func, cfg.dim)?;
    let bounds = objective.bounds();
    let opts = boxmin::Options::default();

    let mut raw_x = crate::bo::initial_design(&bounds, 10 * cfg.dim, cfg.seed);
    let mut raw_y: Vec<f64> = raw_x
        .iter()
        .map(|p| objective.eval(p))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cfg.iterations);
    for k in 1..=cfg.iterations {
        let ki = k as u64;
        let dataset = Dataset::from_raw(&raw_x, &raw_y, &bounds)?;
        let params = fit_hyperparameters(
            &dataset,
            1e-6,
            &mut stream(cfg.seed, ki, StreamRole::HyperStarts),
        )?;
        let basis = Arc::new(build_basis_uniform(&params, 1.0, cfg.eta)?);
        let prior = PriorSample::draw(basis, &mut stream(cfg.seed, ki, StreamRole::PriorWeights));
        let exploration = select_minima(&prior, cfg.m_max)?.points();
        let gp = Arc::new(fit_posterior(dataset.clone(), params)?);
        let ps = condition_with_noise_variance(
            prior,
            gp,
            1e-12,
            &mut stream(cfg.seed, ki, StreamRole::ConditionNoise),
        )?;

        let starts = StartSet {
            exploration,
            exploitation: dataset.x().to_vec(),
        };
        let n_starts = starts.len().max(1);

        let ours = optimize_ts(&ps, &starts, &opts)?;
        let random = random_multistart(
            &ps,
            n_starts,
            &opts,
            &mut stream(cfg.seed, ki, StreamRole::RandomStarts),
        )?;
        let ga = genetic_minimize(
            &ps,
            &GaOptions::with_pop_size(n_starts.max(4)),
            &mut stream(cfg.seed, ki, StreamRole::Genetic),
        )?;

        let (oracle_value, x_true) = if cfg.oracle_multiplier > 0 {
            let oracle = random_multistart(
                &ps,
                cfg.oracle_multiplier * n_starts,
                &opts,
                &mut stream(cfg.seed, ki, StreamRole::OracleStarts),
            )?;
            (oracle.value, Some(oracle.x))
        } else {
            (f64::NAN, None)
        };
        let dist = |x: &[f64]| match &x_true {
            Some(t) => distance_to_truth(x, t),
            None => f64::NAN,
        };

        rows.push(InnerComparisonRow {
            iter: k,
            n_starts,
            ours_value: ours.value,
            random_value: random.value,
            ga_value: ga.value,
            oracle_value,
            ours_dist: dist(&ours.x),
            random_dist: dist(&random.x),
            ga_dist: dist(&ga.x),
            ours_time: ours.wall_time,
            random_time: random.wall_time,
            ga_time: ga.wall_time,
        });

        // Advance the trajectory with the curated method's candidate.
        let x_raw = dataset.unnormalize(&ours.x);
        let y = objective.eval(&x_raw)?;
        raw_x.push(x_raw);
        raw_y.push(y);
    }
    Ok(rows)
}
