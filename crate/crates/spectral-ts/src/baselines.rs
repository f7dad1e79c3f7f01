//! Baseline inner-loop optimizers and acquisition functions: random
//! multi-start, a real-coded genetic algorithm, expected improvement,
//! lower confidence bound, and Thompson sampling with random Fourier
//! features (TS-RF).

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};
use std::time::Instant;

use crate::boxmin::{self, Objective};
use crate::error::{Error, Result};
use crate::gp::GPPosterior;
use crate::inner::{optimize_multistart, InnerResult, StartTrace};
use crate::kernel::SEKernelParams;

const INV_SQRT_2PI: f64 = 0.3989422804014327;

/// Gradient-based multi-start from uniform-random points in `[-1, 1]^d`,
/// with the same local optimizer and stopping criteria as the curated
/// start-set method.
pub fn random_multistart(
    obj: &dyn Objective,
    n_starts: usize,
    opts: &boxmin::Options,
    rng: &mut impl Rng,
) -> Result<InnerResult> {
    if n_starts == 0 {
        return Err(Error::InvalidParam("n_starts must be at least 1".into()));
    }
    let d = obj.dim();
    let starts: Vec<Vec<f64>> = (0..n_starts)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    optimize_multistart(obj, &starts, opts)
}

/// Operator settings for the real-coded generational GA.
#[derive(Clone, Debug)]
pub struct GaOptions {
    pub pop_size: usize,
    pub max_generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub blend_alpha: f64,
    /// Mutation standard deviation as a fraction of the box width.
    pub mutation_sigma: f64,
    /// Per-coordinate mutation probability; `None` means `1/d`.
    pub mutation_rate: Option<f64>,
    pub elitism: usize,
    /// Stop after this many generations without improvement beyond
    /// `stall_tol`.
    pub stall_generations: usize,
    pub stall_tol: f64,
}

impl GaOptions {
    pub fn with_pop_size(pop_size: usize) -> GaOptions {
        GaOptions {
            pop_size,
            max_generations: 200,
            tournament_size: 3,
            crossover_rate: 0.9,
            blend_alpha: 0.5,
            mutation_sigma: 0.1,
            mutation_rate: None,
            elitism: 1,
            stall_generations: 20,
            stall_tol: 1e-8,
        }
    }
}

/// Real-coded generational GA on `[-1, 1]^d`: tournament selection,
/// blend crossover, Gaussian mutation, elitism.
pub fn genetic_minimize(
    obj: &dyn Objective,
    opts: &GaOptions,
    rng: &mut impl Rng,
) -> Result<InnerResult> {
    let d = obj.dim();
    let init: Vec<Vec<f64>> = (0..opts.pop_size.max(4))
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    genetic_minimize_from(obj, opts, init, rng)
}

/// [`genetic_minimize`] with an explicit initial population (test hook).
pub fn genetic_minimize_from(
    obj: &dyn Objective,
    opts: &GaOptions,
    mut pop: Vec<Vec<f64>>,
    rng: &mut impl Rng,
) -> Result<InnerResult> {
    if opts.pop_size < 4 {
        return Err(Error::InvalidParam("population size must be at least 4".into()));
    }
    let d = obj.dim();
    let width = 2.0;
    let mutation_rate = opts.mutation_rate.unwrap_or(1.0 / d as f64);
    let sigma = opts.mutation_sigma * width;
    let t0 = Instant::now();

    let eval = |x: &Vec<f64>| -> f64 {
        let v = obj.value(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut fitness: Vec<f64> = pop.iter().map(eval).collect();
    let initial_best = best_of(&pop, &fitness);
    let mut best = initial_best.clone();
    let mut stall = 0usize;
    let mut generations = 0usize;
    let mut converged = false;

    for _ in 0..opts.max_generations {
        generations += 1;
        let mut next = Vec::with_capacity(pop.len());
        // Elitism keeps the current best individuals unchanged.
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
        for &i in order.iter().take(opts.elitism.min(pop.len())) {
            next.push(pop[i].clone());
        }
        while next.len() < pop.len() {
            let p1 = tournament(&fitness, opts.tournament_size, rng);
            let p2 = tournament(&fitness, opts.tournament_size, rng);
            let mut child = if rng.gen::<f64>() < opts.crossover_rate {
                blend_crossover(&pop[p1], &pop[p2], opts.blend_alpha, rng)
            } else {
                pop[p1].clone()
            };
            for c in child.iter_mut() {
                if rng.gen::<f64>() < mutation_rate {
                    *c += sigma * rng.sample::<f64, _>(StandardNormal);
                }
                *c = c.clamp(-1.0, 1.0);
            }
            next.push(child);
        }
        pop = next;
        fitness = pop.iter().map(eval).collect();
        let gen_best = best_of(&pop, &fitness);
        if gen_best.1 < best.1 - opts.stall_tol {
            best = gen_best;
            stall = 0;
        } else {
            if gen_best.1 < best.1 {
                best = gen_best;
            }
            stall += 1;
            if stall >= opts.stall_generations {
                converged = true;
                break;
            }
        }
    }

    let wall_time = t0.elapsed().as_secs_f64();
    if !best.1.is_finite() {
        return Err(Error::AllStartsFailed("GA never saw a finite value".into()));
    }
    Ok(InnerResult {
        x: best.0.clone(),
        value: best.1,
        starts_used: pop.len(),
        traces: vec![StartTrace {
            start: initial_best.0,
            end: best.0,
            value: best.1,
            iterations: generations,
            converged,
            failed: false,
        }],
        wall_time,
    })
}

fn best_of(pop: &[Vec<f64>], fitness: &[f64]) -> (Vec<f64>, f64) {
    let mut idx = 0;
    for i in 1..fitness.len() {
        if fitness[i] < fitness[idx] {
            idx = i;
        }
    }
    (pop[idx].clone(), fitness[idx])
}

fn tournament(fitness: &[f64], size: usize, rng: &mut impl Rng) -> usize {
    let mut winner = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] < fitness[winner] {
            winner = c;
        }
    }
    winner
}

fn blend_crossover(a: &[f64], b: &[f64], alpha: f64, rng: &mut impl Rng) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let lo = x.min(y);
            let hi = x.max(y);
            let delta = hi - lo;
            rng.gen_range((lo - alpha * delta)..=(hi + alpha * delta))
        })
        .collect()
}

/// Expected improvement below `y_min` (standardized units):
/// `EI = (y_min - mu) Phi(z) + s phi(z)` with `z = (y_min - mu)/s`, and
/// `max(0, y_min - mu)` in the zero-variance limit.
pub fn ei(gp: &GPPosterior, x: &[f64], y_min: f64) -> f64 {
    let (mean, var) = gp.posterior_mean_var(x);
    ei_from_moments(mean, var, y_min)
}

fn ei_from_moments(mean: f64, var: f64, y_min: f64) -> f64 {
    let s = var.max(0.0).sqrt();
    let improve = y_min - mean;
    if s <= 1e-12 {
        return improve.max(0.0);
    }
    let z = improve / s;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let phi = INV_SQRT_2PI * (-0.5 * z * z).exp();
    (improve * normal.cdf(z) + s * phi).max(0.0)
}

/// Lower confidence bound `mu - sqrt(beta) s`, minimized over `x`.
pub fn lcb(gp: &GPPosterior, x: &[f64], beta: f64) -> f64 {
    let (mean, var) = gp.posterior_mean_var(x);
    mean - beta.sqrt() * var.max(0.0).sqrt()
}

/// Negated EI as a minimization objective with analytic gradient:
/// `dEI/dx = -Phi(z) dmu/dx + phi(z) ds/dx`.
pub struct NegEi<'a> {
    pub gp: &'a GPPosterior,
    pub y_min: f64,
}

impl Objective for NegEi<'_> {
    fn dim(&self) -> usize {
        self.gp.params().dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        -ei(self.gp, x, self.y_min)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (mean, var, dmean, dvar) = self.gp.posterior_mean_var_grads(x);
        let s = var.max(0.0).sqrt();
        let improve = self.y_min - mean;
        if s <= 1e-12 {
            // Kink of the zero-variance limit: EI = max(0, y_min - mu).
            if improve > 0.0 {
                for (g, dm) in grad.iter_mut().zip(&dmean) {
                    *g = *dm;
                }
                return -improve;
            }
            grad.fill(0.0);
            return 0.0;
        }
        let z = improve / s;
        let normal = Normal::new(0.0, 1.0).unwrap();
        let cdf = normal.cdf(z);
        let pdf = INV_SQRT_2PI * (-0.5 * z * z).exp();
        let value = improve * cdf + s * pdf;
        for i in 0..grad.len() {
            let ds = dvar[i] / (2.0 * s);
            grad[i] = -(-cdf * dmean[i] + pdf * ds);
        }
        -value
    }
}

/// LCB as a minimization objective with analytic gradient.
pub struct LcbObjective<'a> {
    pub gp: &'a GPPosterior,
    pub beta: f64,
}

impl Objective for LcbObjective<'_> {
    fn dim(&self) -> usize {
        self.gp.params().dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        lcb(self.gp, x, self.beta)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (mean, var, dmean, dvar) = self.gp.posterior_mean_var_grads(x);
        let s = var.max(0.0).sqrt();
        let sb = self.beta.sqrt();
        if s <= 1e-12 {
            grad.copy_from_slice(&dmean);
            return mean;
        }
        for i in 0..grad.len() {
            grad[i] = dmean[i] - sb * dvar[i] / (2.0 * s);
        }
        mean - sb * s
    }
}

/// A posterior sample in the random-Fourier-feature basis:
/// `f(x) = sqrt(2 sigma_f^2 / M) sum_m beta_m cos(omega_m . x + b_m)`.
#[derive(Clone, Debug)]
pub struct RffSample {
    /// `M x d` frequencies, row-major.
    omegas: Vec<Vec<f64>>,
    phases: Vec<f64>,
    beta: DVector<f64>,
    feature_scale: f64,
    dim: usize,
}

impl RffSample {
    /// Prior draw: `beta ~ N(0, I)`.
    pub fn draw_prior(params: &SEKernelParams, m: usize, rng: &mut impl Rng) -> Result<RffSample> {
        if m == 0 {
            return Err(Error::InvalidParam("need at least one feature".into()));
        }
        let d = params.dim();
        let omegas: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                params
                    .lengthscales
                    .iter()
                    .map(|&l| rng.sample::<f64, _>(StandardNormal) / l)
                    .collect()
            })
            .collect();
        let phases: Vec<f64> = (0..m)
            .map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI))
            .collect();
        let beta = DVector::from_iterator(m, (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
        Ok(RffSample {
            omegas,
            phases,
            beta,
            feature_scale: (2.0 * params.amplitude / m as f64).sqrt(),
            dim: d,
        })
    }

    /// Posterior draw via the pathwise update of the feature weights:
    /// `beta = beta_0 + Phi^T (Phi Phi^T + sigma_n^2 I)^{-1} (y - Phi beta_0 - eps)`,
    /// with `eps` drawn at `eps_variance` (the observation noise; the
    /// model's `sigma_n^2` stays in the regularizer).
    pub fn draw_posterior(
        gp: &GPPosterior,
        m: usize,
        eps_variance: f64,
        rng: &mut impl Rng,
    ) -> Result<RffSample> {
        let mut sample = Self::draw_prior(gp.params(), m, rng)?;
        let n = gp.dataset().n();
        let sigma_n2 = gp.params().noise_variance;
        let eps_sigma = eps_variance.max(0.0).sqrt();
        let eps = DVector::from_iterator(
            n,
            (0..n).map(|_| eps_sigma * rng.sample::<f64, _>(StandardNormal)),
        );
        // Feature matrix at the data points.
        let mut phi = DMatrix::zeros(n, m);
        for (i, row) in gp.dataset().x().iter().enumerate() {
            let feats = sample.feature_map(row);
            for (j, v) in feats.into_iter().enumerate() {
                phi[(i, j)] = v;
            }
        }
        let mut a = &phi * phi.transpose();
        for i in 0..n {
            a[(i, i)] += sigma_n2;
        }
        let chol = jittered_cholesky(a, n)?;
        let residual = gp.dataset().y() - &phi * &sample.beta - eps;
        let u = chol.solve(&residual);
        sample.beta += phi.transpose() * u;
        Ok(sample)
    }

    pub fn num_features(&self) -> usize {
        self.phases.len()
    }

    /// The feature vector `phi(x)`; `<phi(x), phi(x')>` approximates the
    /// kernel.
    pub fn feature_map(&self, x: &[f64]) -> Vec<f64> {
        self.omegas
            .iter()
            .zip(&self.phases)
            .map(|(omega, &b)| {
                let arg: f64 = omega.iter().zip(x).map(|(&w, &xi)| w * xi).sum::<f64>() + b;
                self.feature_scale * arg.cos()
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((omega, &b), beta) in self.omegas.iter().zip(&self.phases).zip(self.beta.iter()) {
            let arg: f64 = omega.iter().zip(x).map(|(&w, &xi)| w * xi).sum::<f64>() + b;
            acc += beta * arg.cos();
        }
        self.feature_scale * acc
    }

    pub fn eval_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        let mut acc = 0.0;
        for ((omega, &b), beta) in self.omegas.iter().zip(&self.phases).zip(self.beta.iter()) {
            let arg: f64 = omega.iter().zip(x).map(|(&w, &xi)| w * xi).sum::<f64>() + b;
            acc += beta * arg.cos();
            let slope = -beta * arg.sin();
            for (g, &w) in grad.iter_mut().zip(omega) {
                *g += slope * w;
            }
        }
        for g in grad.iter_mut() {
            *g *= self.feature_scale;
        }
        self.feature_scale * acc
    }
}

impl Objective for RffSample {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval_grad(x, grad)
    }
}

/// Draws the TS-RF acquisition for the current posterior, with `eps`
/// drawn at the model's noise variance.
pub fn ts_rf_draw(gp: &GPPosterior, m: usize, rng: &mut impl Rng) -> Result<RffSample> {
    let var = gp.params().noise_variance;
    RffSample::draw_posterior(gp, m, var, rng)
}

fn jittered_cholesky(mut a: DMatrix<f64>, n: usize) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    const LADDER: [f64; 7] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-4];
    for (idx, &jitter) in LADDER.iter().enumerate() {
        if jitter > 0.0 {
            for i in 0..n {
                a[(i, i)] += jitter - LADDER[idx - 1];
            }
        }
        if let Some(chol) = Cholesky::new(a.clone()) {
            return Ok(chol);
        }
    }
    Err(Error::CholeskyFailed {
        n,
        max_jitter: *LADDER.last().unwrap(),
    })
}
