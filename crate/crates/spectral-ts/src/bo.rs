//! Outer-loop Bayesian optimization.
//!
//! Per iteration: rebuild the normalized/standardized dataset, refit
//! hyperparameters (unless frozen), build the configured acquisition,
//! optimize it with the configured inner optimizer, evaluate the
//! objective at the chosen candidate, and log one trace row. All
//! randomness flows through counter-based streams keyed by
//! `(seed, iteration, role)`, so a run is reproducible bit for bit.

use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::baselines::{genetic_minimize, random_multistart, GaOptions, LcbObjective, NegEi, RffSample};
use crate::boxmin::{self, Objective};
use crate::critical::select_minima;
use crate::error::{Error, Result};
use crate::gp::{fit_hyperparameters, fit_posterior, Dataset};
use crate::inner::{optimize_ts, InnerResult, StartSet};
use crate::kernel::SEKernelParams;
use crate::lowdisc::ScrambledHalton;
use crate::rng::{stream, StreamRole};
use crate::sampling::{condition_with_noise_variance, PriorSample};
use crate::spectral::build_basis_uniform;

/// Acquisition-function families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    SpectralTs,
    TsRf,
    Ei,
    Lcb,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::SpectralTs, Method::TsRf, Method::Ei, Method::Lcb];

    pub fn name(&self) -> &'static str {
        match self {
            Method::SpectralTs => "spectral-ts",
            Method::TsRf => "ts-rf",
            Method::Ei => "ei",
            Method::Lcb => "lcb",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "spectral-ts" => Ok(Method::SpectralTs),
            "ts-rf" => Ok(Method::TsRf),
            "ei" => Ok(Method::Ei),
            "lcb" => Ok(Method::Lcb),
            other => Err(Error::InvalidConfig(format!(
                "unknown method '{other}'; valid methods: spectral-ts, ts-rf, ei, lcb"
            ))),
        }
    }
}

/// Inner-loop optimizers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerOptimizer {
    /// Curated start set: prior-sample minima plus data points.
    Ours,
    /// Random multi-start with an equal number of starts.
    Random,
    /// Genetic algorithm with an equal population size.
    Ga,
}

impl InnerOptimizer {
    pub fn name(&self) -> &'static str {
        match self {
            InnerOptimizer::Ours => "ours",
            InnerOptimizer::Random => "random",
            InnerOptimizer::Ga => "ga",
        }
    }
}

impl FromStr for InnerOptimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<InnerOptimizer> {
        match s {
            "ours" => Ok(InnerOptimizer::Ours),
            "random" => Ok(InnerOptimizer::Random),
            "ga" => Ok(InnerOptimizer::Ga),
            other => Err(Error::InvalidConfig(format!(
                "unknown inner optimizer '{other}'; valid: ours, random, ga"
            ))),
        }
    }
}

/// A black-box objective with known bounds in original units.
pub trait BlackBox: Sync {
    fn dim(&self) -> usize;
    fn bounds(&self) -> Vec<(f64, f64)>;
    fn eval(&self, x: &[f64]) -> Result<f64>;
    /// True minimum value, when known (used for regret).
    fn known_minimum(&self) -> Option<f64> {
        None
    }
}

/// Configuration of a single BO run.
#[derive(Clone, Debug)]
pub struct BOConfig {
    pub dim: usize,
    /// Initial design size; `None` means `10 d`.
    pub init_points: Option<usize>,
    /// Number of BO iterations after the initial design.
    pub iterations: usize,
    pub method: Method,
    pub inner: InnerOptimizer,
    pub seed: u64,
    /// Model observation-noise variance.
    pub model_noise: f64,
    /// Simulator observation-noise variance added to objective values.
    pub observation_noise: f64,
    pub m_max: usize,
    pub eta: f64,
    pub lcb_beta: f64,
    pub rff_features: usize,
    pub freeze_hypers: bool,
    pub inner_opts: boxmin::Options,
}

impl BOConfig {
    pub fn new(dim: usize, method: Method, inner: InnerOptimizer, iterations: usize, seed: u64) -> BOConfig {
        BOConfig {
            dim,
            init_points: None,
            iterations,
            method,
            inner,
            seed,
            model_noise: 1e-6,
            observation_noise: 1e-12,
            m_max: 1000,
            eta: 1e-16,
            lcb_beta: 4.0,
            rff_features: 1000,
            freeze_hypers: false,
            inner_opts: boxmin::Options::default(),
        }
    }

    fn validate(&self, objective: &dyn BlackBox) -> Result<()> {
        if self.dim != objective.dim() {
            return Err(Error::DimensionMismatch {
                expected: objective.dim(),
                got: self.dim,
            });
        }
        let n0 = self.init_points.unwrap_or(10 * self.dim);
        if n0 < self.dim + 1 {
            return Err(Error::InvalidConfig(format!(
                "initial design size {n0} below dim + 1"
            )));
        }
        if self.inner == InnerOptimizer::Ours && self.method != Method::SpectralTs {
            return Err(Error::InvalidConfig(
                "the curated start-set inner optimizer requires method spectral-ts".into(),
            ));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidConfig(format!("eta {} outside (0, 1)", self.eta)));
        }
        if self.rff_features == 0 {
            return Err(Error::InvalidConfig("rff features must be positive".into()));
        }
        Ok(())
    }
}

/// One trace row per iteration (row 0 summarizes the initial design).
#[derive(Clone, Debug)]
pub struct BORow {
    pub iter: usize,
    /// Candidate in original units.
    pub x: Vec<f64>,
    pub y: f64,
    pub y_min: f64,
    /// Acquisition value at the candidate (NaN for row 0 and fallback rows).
    pub inner_value: f64,
    pub inner_time_s: f64,
    pub cum_time_s: f64,
    /// `log10(y_min - f_star)`; `-inf` once within 1e-12 of the optimum;
    /// NaN when the optimum is unknown.
    pub log10_regret: f64,
}

#[derive(Clone, Debug, Default)]
pub struct BOTrace {
    pub rows: Vec<BORow>,
}

/// `log10(y_min - f_star)` with an exact-hit sentinel of `-inf`.
pub fn simple_regret_log10(y_min: f64, f_star: f64) -> f64 {
    let gap = y_min - f_star;
    if gap <= 1e-12 {
        f64::NEG_INFINITY
    } else {
        gap.log10()
    }
}

/// Scrambled low-discrepancy initial design mapped into `bounds`.
pub fn initial_design(bounds: &[(f64, f64)], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut halton = ScrambledHalton::new(bounds.len(), &mut stream(seed, 0, StreamRole::InitialDesign));
    (0..n).map(|_| halton.next_in(bounds)).collect()
}

/// Runs the BO loop and returns the per-iteration trace.
pub fn run_bo(objective: &dyn BlackBox, config: &BOConfig) -> Result<BOTrace> {
    config.validate(objective)?;
    let bounds = objective.bounds();
    let d = config.dim;
    let f_star = objective.known_minimum();
    let n0 = config.init_points.unwrap_or(10 * d);

    let mut raw_x = initial_design(&bounds, n0, config.seed);
    let mut raw_y = Vec::with_capacity(n0);
    {
        let mut noise_rng = stream(config.seed, 0, StreamRole::ObservationNoise);
        for point in &raw_x {
            raw_y.push(observe(objective, point, config, &mut noise_rng)?);
        }
    }

    let (best_idx, mut y_min) = argmin(&raw_y);
    let mut trace = BOTrace::default();
    trace.rows.push(BORow {
        iter: 0,
        x: raw_x[best_idx].clone(),
        y: raw_y[best_idx],
        y_min,
        inner_value: f64::NAN,
        inner_time_s: 0.0,
        cum_time_s: 0.0,
        log10_regret: regret_or_nan(y_min, f_star),
    });

    let mut cum_time = 0.0;
    let mut frozen_params: Option<SEKernelParams> = None;

    for k in 1..=config.iterations {
        let dataset = Dataset::from_raw(&raw_x, &raw_y, &bounds)?;
        let params = match (&frozen_params, config.freeze_hypers) {
            (Some(p), true) => p.clone(),
            _ => {
                let p = fit_hyperparameters(
                    &dataset,
                    config.model_noise,
                    &mut stream(config.seed, k as u64, StreamRole::HyperStarts),
                )?;
                if config.freeze_hypers {
                    frozen_params = Some(p.clone());
                }
                p
            }
        };

        let (candidate_norm, inner_value, inner_time) = iterate(config, &dataset, &params, k)?;
        let x_raw = dataset.unnormalize(&candidate_norm);
        let y = observe(
            objective,
            &x_raw,
            config,
            &mut stream(config.seed, k as u64, StreamRole::ObservationNoise),
        )?;
        raw_x.push(x_raw.clone());
        raw_y.push(y);
        y_min = y_min.min(y);
        cum_time += inner_time;
        trace.rows.push(BORow {
            iter: k,
            x: x_raw,
            y,
            y_min,
            inner_value,
            inner_time_s: inner_time,
            cum_time_s: cum_time,
            log10_regret: regret_or_nan(y_min, f_star),
        });
    }
    Ok(trace)
}

/// One inner-loop pass: build the acquisition, optimize it, and return
/// `(normalized candidate, acquisition value, wall seconds)`.
fn iterate(
    config: &BOConfig,
    dataset: &Dataset,
    params: &SEKernelParams,
    k: usize,
) -> Result<(Vec<f64>, f64, f64)> {
    let seed = config.seed;
    let ki = k as u64;

    // The exploration set of the spectral prior drawn for this iteration.
    // Every method consumes the same stream, so baseline methods receive
    // the same start-count budget the curated method would use on this
    // data state.
    let basis = Arc::new(build_basis_uniform(params, 1.0, config.eta)?);
    let prior = PriorSample::draw(basis, &mut stream(seed, ki, StreamRole::PriorWeights));
    let exploration = select_minima(&prior, config.m_max)?.points();
    let n_starts = (dataset.n() + exploration.len()).max(1);

    let gp = Arc::new(fit_posterior(dataset.clone(), params.clone())?);
    match config.method {
        Method::SpectralTs => {
            let ps = condition_with_noise_variance(
                prior,
                gp,
                config.observation_noise,
                &mut stream(seed, ki, StreamRole::ConditionNoise),
            )?;
            optimize_acquisition(&ps, config, dataset, &exploration, n_starts, k)
        }
        Method::TsRf => {
            let sample = RffSample::draw_posterior(
                &gp,
                config.rff_features,
                config.observation_noise,
                &mut stream(seed, ki, StreamRole::RffSample),
            )?;
            optimize_acquisition(&sample, config, dataset, &exploration, n_starts, k)
        }
        Method::Ei => {
            let acq = NegEi {
                gp: &gp,
                y_min: dataset.y().min(),
            };
            optimize_acquisition(&acq, config, dataset, &exploration, n_starts, k)
        }
        Method::Lcb => {
            let acq = LcbObjective {
                gp: &gp,
                beta: config.lcb_beta,
            };
            optimize_acquisition(&acq, config, dataset, &exploration, n_starts, k)
        }
    }
}

fn optimize_acquisition(
    acq: &dyn Objective,
    config: &BOConfig,
    dataset: &Dataset,
    exploration: &[Vec<f64>],
    n_starts: usize,
    k: usize,
) -> Result<(Vec<f64>, f64, f64)> {
    let seed = config.seed;
    let ki = k as u64;
    let attempt = match config.inner {
        InnerOptimizer::Ours => {
            let starts = StartSet {
                exploration: exploration.to_vec(),
                exploitation: dataset.x().to_vec(),
            };
            optimize_ts(acq, &starts, &config.inner_opts)
        }
        InnerOptimizer::Random => random_multistart(
            acq,
            n_starts,
            &config.inner_opts,
            &mut stream(seed, ki, StreamRole::RandomStarts),
        ),
        InnerOptimizer::Ga => genetic_minimize(
            acq,
            &GaOptions::with_pop_size(n_starts.max(4)),
            &mut stream(seed, ki, StreamRole::Genetic),
        ),
    };
    let result: Option<InnerResult> = match attempt {
        Ok(r) => Some(r),
        Err(err) => {
            log::warn!("iteration {k}: inner optimization failed ({err}); retrying with doubled random starts");
            random_multistart(
                acq,
                2 * n_starts.max(1),
                &config.inner_opts,
                &mut stream(seed, ki, StreamRole::RandomStarts),
            )
            .ok()
        }
    };
    match result {
        Some(r) => Ok((r.x, r.value, r.wall_time)),
        None => {
            log::warn!("iteration {k}: all inner-loop attempts failed; evaluating a uniform-random candidate");
            let mut rng = stream(seed, ki, StreamRole::FallbackCandidate);
            let candidate: Vec<f64> = (0..config.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Ok((candidate, f64::NAN, 0.0))
        }
    }
}

fn observe(
    objective: &dyn BlackBox,
    x: &[f64],
    config: &BOConfig,
    rng: &mut impl Rng,
) -> Result<f64> {
    let clean = objective.eval(x)?;
    if config.observation_noise > 0.0 {
        Ok(clean + config.observation_noise.sqrt() * rng.sample::<f64, _>(StandardNormal))
    } else {
        Ok(clean)
    }
}

fn argmin(values: &[f64]) -> (usize, f64) {
    let mut idx = 0;
    for i in 1..values.len() {
        if values[i] < values[idx] {
            idx = i;
        }
    }
    (idx, values[idx])
}

fn regret_or_nan(y_min: f64, f_star: Option<f64>) -> f64 {
    match f_star {
        Some(fs) => simple_regret_log10(y_min, fs),
        None => f64::NAN,
    }
}
