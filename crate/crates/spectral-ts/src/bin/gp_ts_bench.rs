//! Benchmark harness CLI.
//!
//! Runs a batch of BO runs for one method on one test function, writing
//! per-run trace CSVs plus a regret summary. Flags override values from
//! an optional `key = value` config file.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::Parser;

use spectral_ts::bench::{run_experiment, ExperimentConfig, TestFunction};
use spectral_ts::bo::{InnerOptimizer, Method};
use spectral_ts::error::Error;

#[derive(Parser, Debug)]
#[command(
    name = "gp-ts-bench",
    about = "Bayesian-optimization benchmark over GP Thompson-sampling acquisitions"
)]
struct Cli {
    /// Objective: schwefel | levy
    #[arg(long)]
    func: Option<String>,
    /// Problem dimension (defaults to 2 for schwefel, 10 for levy)
    #[arg(long)]
    dim: Option<usize>,
    /// Acquisition: spectral-ts | ts-rf | ei | lcb
    #[arg(long)]
    method: Option<String>,
    /// Inner optimizer: ours | random | ga
    #[arg(long)]
    inner: Option<String>,
    /// Number of independent runs (seeds seed, seed+1, ...)
    #[arg(long)]
    runs: Option<usize>,
    /// BO iterations per run (defaults to 120 for d <= 3, 200 otherwise)
    #[arg(long)]
    iters: Option<usize>,
    /// Base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV files
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truncation tolerance of the spectral basis
    #[arg(long)]
    eta: Option<f64>,
    /// Cap on the exploration start set
    #[arg(long)]
    mmax: Option<usize>,
    /// LCB exploration weight
    #[arg(long)]
    beta: Option<f64>,
    /// Number of random Fourier features for ts-rf
    #[arg(long = "rff-m")]
    rff_m: Option<usize>,
    /// Fit hyperparameters once and reuse them
    #[arg(long = "freeze-hypers", default_value_t = false)]
    freeze_hypers: bool,
    /// Optional key = value config file (flags take precedence)
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Values accumulated from the config file, before flag overrides.
#[derive(Default)]
struct FileConfig {
    func: Option<String>,
    dim: Option<usize>,
    method: Option<String>,
    inner: Option<String>,
    runs: Option<usize>,
    iters: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    eta: Option<f64>,
    mmax: Option<usize>,
    beta: Option<f64>,
    rff_m: Option<usize>,
    freeze_hypers: Option<bool>,
}

fn parse_config_file(path: &PathBuf) -> Result<FileConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut out = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidConfig(format!(
                "{}:{}: expected 'key = value', got '{raw}'",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |e: String| Error::InvalidConfig(format!("{}:{}: {e}", path.display(), lineno + 1));
        match key {
            "func" => out.func = Some(value.to_string()),
            "dim" => out.dim = Some(value.parse().map_err(|e| bad(format!("dim: {e}")))?),
            "method" => out.method = Some(value.to_string()),
            "inner" => out.inner = Some(value.to_string()),
            "runs" => out.runs = Some(value.parse().map_err(|e| bad(format!("runs: {e}")))?),
            "iters" => out.iters = Some(value.parse().map_err(|e| bad(format!("iters: {e}")))?),
            "seed" => out.seed = Some(value.parse().map_err(|e| bad(format!("seed: {e}")))?),
            "out" => out.out = Some(PathBuf::from(value)),
            "eta" => out.eta = Some(value.parse().map_err(|e| bad(format!("eta: {e}")))?),
            "mmax" => out.mmax = Some(value.parse().map_err(|e| bad(format!("mmax: {e}")))?),
            "beta" => out.beta = Some(value.parse().map_err(|e| bad(format!("beta: {e}")))?),
            "rff-m" => out.rff_m = Some(value.parse().map_err(|e| bad(format!("rff-m: {e}")))?),
            "freeze-hypers" => {
                out.freeze_hypers =
                    Some(value.parse().map_err(|e| bad(format!("freeze-hypers: {e}")))?)
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "{}:{}: unknown key '{other}'",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(out)
}

fn build_config(cli: Cli) -> Result<ExperimentConfig, Error> {
    let file = match &cli.config {
        Some(path) => parse_config_file(path)?,
        None => FileConfig::default(),
    };
    let func_name = cli
        .func
        .or(file.func)
        .ok_or_else(|| Error::InvalidConfig("missing --func (schwefel | levy)".into()))?;
    let func = TestFunction::from_str(&func_name)?;
    let method = match cli.method.or(file.method) {
        Some(m) => Method::from_str(&m)?,
        None => Method::SpectralTs,
    };
    let inner = match cli.inner.or(file.inner) {
        Some(i) => InnerOptimizer::from_str(&i)?,
        None => {
            if method == Method::SpectralTs {
                InnerOptimizer::Ours
            } else {
                InnerOptimizer::Random
            }
        }
    };
    if inner == InnerOptimizer::Ours && method != Method::SpectralTs {
        return Err(Error::InvalidConfig(
            "--inner ours requires --method spectral-ts".into(),
        ));
    }
    let dim = cli.dim.or(file.dim).unwrap_or_else(|| func.default_dim());
    if dim == 0 {
        return Err(Error::InvalidConfig("--dim must be positive".into()));
    }
    let iters = cli
        .iters
        .or(file.iters)
        .unwrap_or(if dim <= 3 { 120 } else { 200 });
    Ok(ExperimentConfig {
        func,
        dim,
        method,
        inner,
        runs: cli.runs.or(file.runs).unwrap_or(20),
        iterations: iters,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        out_dir: cli.out.or(file.out).unwrap_or_else(|| PathBuf::from("bench-out")),
        eta: cli.eta.or(file.eta).unwrap_or(1e-16),
        m_max: cli.mmax.or(file.mmax).unwrap_or(1000),
        lcb_beta: cli.beta.or(file.beta).unwrap_or(4.0),
        rff_features: cli.rff_m.or(file.rff_m).unwrap_or(1000),
        freeze_hypers: cli.freeze_hypers || file.freeze_hypers.unwrap_or(false),
    })
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let cfg = match build_config(cli) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&cfg) {
        Ok(output) => {
            println!(
                "wrote {} trace file(s) and {}",
                output.trace_paths.len(),
                output.summary_path.display()
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
