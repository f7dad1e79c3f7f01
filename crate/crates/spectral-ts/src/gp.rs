//! Exact GP regression: dataset normalization, Cholesky factorization of
//! `C = K + sigma_n^2 I`, closed-form posterior mean/covariance, and
//! marginal-likelihood hyperparameter fitting.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::boxmin::{self, GradFn};
use crate::error::{Error, Result};
use crate::kernel::{se_value, SEKernelParams};
use crate::lowdisc::ScrambledHalton;

const COORD_SLACK: f64 = 1e-12;

/// Inputs normalized to `[-1, 1]^d` with standardized observations.
#[derive(Clone, Debug)]
pub struct Dataset {
    x: Vec<Vec<f64>>,
    y: DVector<f64>,
    raw_bounds: Vec<(f64, f64)>,
    y_mean: f64,
    y_std: f64,
}

impl Dataset {
    /// Builds a dataset from raw observations, normalizing each input
    /// coordinate to `[-1, 1]` using `bounds` and standardizing `y` to
    /// zero mean, unit standard deviation.
    pub fn from_raw(raw_x: &[Vec<f64>], raw_y: &[f64], bounds: &[(f64, f64)]) -> Result<Dataset> {
        if raw_x.is_empty() {
            return Err(Error::InvalidParam("dataset must contain at least one point".into()));
        }
        if raw_x.len() != raw_y.len() {
            return Err(Error::DimensionMismatch {
                expected: raw_x.len(),
                got: raw_y.len(),
            });
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if lo >= hi || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParam(format!("bounds for dimension {i}: [{lo}, {hi}]")));
            }
        }
        let d = bounds.len();
        let mut x = Vec::with_capacity(raw_x.len());
        for point in raw_x {
            if point.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: point.len(),
                });
            }
            let mut row = Vec::with_capacity(d);
            for (i, (&v, &(lo, hi))) in point.iter().zip(bounds).enumerate() {
                let z = 2.0 * (v - lo) / (hi - lo) - 1.0;
                if !(-1.0 - COORD_SLACK..=1.0 + COORD_SLACK).contains(&z) {
                    return Err(Error::OutOfBounds {
                        dim: i,
                        value: v,
                        lo,
                        hi,
                    });
                }
                row.push(z.clamp(-1.0, 1.0));
            }
            x.push(row);
        }
        if raw_y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam("observations must be finite".into()));
        }
        let n = raw_y.len() as f64;
        let y_mean = raw_y.iter().sum::<f64>() / n;
        let var = raw_y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n;
        let y_std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        let y = DVector::from_iterator(raw_y.len(), raw_y.iter().map(|v| (v - y_mean) / y_std));
        Ok(Dataset {
            x,
            y,
            raw_bounds: bounds.to_vec(),
            y_mean,
            y_std,
        })
    }

    /// Dataset already on the normalized scale: unit bounds, `y` used as is.
    pub fn from_normalized(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Dataset> {
        if x.is_empty() {
            return Err(Error::InvalidParam("dataset must contain at least one point".into()));
        }
        let d = x[0].len();
        for row in &x {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            for (i, &v) in row.iter().enumerate() {
                if !(-1.0 - COORD_SLACK..=1.0 + COORD_SLACK).contains(&v) {
                    return Err(Error::OutOfBounds {
                        dim: i,
                        value: v,
                        lo: -1.0,
                        hi: 1.0,
                    });
                }
            }
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(Dataset {
            x,
            y: DVector::from_vec(y),
            raw_bounds: vec![(-1.0, 1.0); d],
            y_mean: 0.0,
            y_std: 1.0,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn dim(&self) -> usize {
        self.raw_bounds.len()
    }

    /// Normalized input rows.
    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    /// Standardized observations.
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn y_std(&self) -> f64 {
        self.y_std
    }

    pub fn raw_bounds(&self) -> &[(f64, f64)] {
        &self.raw_bounds
    }

    pub fn normalize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(&self.raw_bounds)
            .map(|(&v, &(lo, hi))| 2.0 * (v - lo) / (hi - lo) - 1.0)
            .collect()
    }

    pub fn unnormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.raw_bounds)
            .map(|(&v, &(lo, hi))| lo + 0.5 * (v + 1.0) * (hi - lo))
            .collect()
    }

    pub fn standardize_value(&self, y: f64) -> f64 {
        (y - self.y_mean) / self.y_std
    }

    pub fn unstandardize_value(&self, z: f64) -> f64 {
        self.y_mean + z * self.y_std
    }
}

/// Fitted GP posterior: kernel parameters, dataset, and the Cholesky
/// factor of `C = K + sigma_n^2 I`. Immutable after construction.
#[derive(Clone, Debug)]
pub struct GPPosterior {
    params: SEKernelParams,
    dataset: Dataset,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

const JITTER_LADDER: [f64; 8] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// Factorizes `C = K + sigma_n^2 I` and precomputes `alpha = C^{-1} y`.
///
/// A failed factorization escalates a diagonal jitter tenfold up to 1e-4
/// before giving up.
pub fn fit_posterior(dataset: Dataset, params: SEKernelParams) -> Result<GPPosterior> {
    if params.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: params.dim(),
        });
    }
    let n = dataset.n();
    let k = kernel_matrix(&params, dataset.x());
    for &jitter in &JITTER_LADDER {
        let mut c = k.clone();
        for i in 0..n {
            c[(i, i)] += params.noise_variance + jitter;
        }
        if let Some(chol) = Cholesky::new(c) {
            let alpha = chol.solve(dataset.y());
            return Ok(GPPosterior {
                params,
                dataset,
                chol,
                alpha,
                jitter,
            });
        }
    }
    Err(Error::CholeskyFailed {
        n,
        max_jitter: *JITTER_LADDER.last().unwrap(),
    })
}

impl GPPosterior {
    pub fn params(&self) -> &SEKernelParams {
        &self.params
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// `C^{-1} rhs` via two triangular solves.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    fn k_star(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.dataset.n(),
            self.dataset.x().iter().map(|row| se_value(&self.params, x, row)),
        )
    }

    /// Posterior mean at a normalized point.
    pub fn posterior_mean(&self, x: &[f64]) -> f64 {
        self.k_star(x).dot(&self.alpha)
    }

    /// Posterior variance at a normalized point, clamped at zero.
    pub fn posterior_var(&self, x: &[f64]) -> f64 {
        self.posterior_mean_var(x).1
    }

    pub fn posterior_mean_var(&self, x: &[f64]) -> (f64, f64) {
        let ks = self.k_star(x);
        let mean = ks.dot(&self.alpha);
        let u = self.chol.solve(&ks);
        let var = self.params.amplitude - ks.dot(&u);
        (mean, var.max(0.0))
    }

    /// Mean, variance and their gradients with respect to `x`.
    pub fn posterior_mean_var_grads(&self, x: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let d = self.params.dim();
        let ks = self.k_star(x);
        let mean = ks.dot(&self.alpha);
        let u = self.chol.solve(&ks);
        let var = (self.params.amplitude - ks.dot(&u)).max(0.0);
        let mut dmean = vec![0.0; d];
        let mut dvar = vec![0.0; d];
        for (j, row) in self.dataset.x().iter().enumerate() {
            let kj = ks[j];
            for i in 0..d {
                let l = self.params.lengthscales[i];
                let dk = -(x[i] - row[i]) / (l * l) * kj;
                dmean[i] += self.alpha[j] * dk;
                dvar[i] += -2.0 * u[j] * dk;
            }
        }
        (mean, var, dmean, dvar)
    }

    /// Log marginal likelihood of the fitted model.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.dataset.n() as f64;
        let log_det: f64 = (0..self.dataset.n())
            .map(|i| self.chol.l_dirty()[(i, i)].ln())
            .sum();
        -0.5 * self.dataset.y().dot(&self.alpha)
            - log_det
            - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

pub(crate) fn kernel_matrix(params: &SEKernelParams, x: &[Vec<f64>]) -> DMatrix<f64> {
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = params.amplitude;
        for j in 0..i {
            let v = se_value(params, &x[i], &x[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Search box for hyperparameter fitting, in natural log space:
/// lengthscales in [0.05, 5], amplitude in [0.1, 10].
const LOG_L_BOUNDS: (f64, f64) = (-2.995732273553991, 1.6094379124341003);
const LOG_AMP_BOUNDS: (f64, f64) = (-std::f64::consts::LN_10, std::f64::consts::LN_10);
const HYPER_STARTS: usize = 8;

/// Negative log marginal likelihood and its gradient in
/// `theta = [ln l_1, ..., ln l_d, ln amplitude]`, with the noise held
/// fixed. Distances are cached per dimension across evaluations.
struct MllProblem<'a> {
    dataset: &'a Dataset,
    /// Per-dimension squared-distance matrices.
    dist2: Vec<DMatrix<f64>>,
    noise: f64,
}

impl<'a> MllProblem<'a> {
    fn new(dataset: &'a Dataset, noise: f64) -> Self {
        let n = dataset.n();
        let d = dataset.dim();
        let mut dist2 = Vec::with_capacity(d);
        for dim in 0..d {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..i {
                    let diff = dataset.x()[i][dim] - dataset.x()[j][dim];
                    m[(i, j)] = diff * diff;
                    m[(j, i)] = m[(i, j)];
                }
            }
            dist2.push(m);
        }
        MllProblem {
            dataset,
            dist2,
            noise,
        }
    }

    /// Returns the negative MLL; fills `grad` when factorization succeeds.
    /// An indefinite `C` yields a large finite value with zero gradient so
    /// the line search backs away.
    fn neg_mll(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.dist2.len();
        let n = self.dataset.n();
        let amp = theta[d].exp();
        let inv_2l2: Vec<f64> = theta[..d].iter().map(|t| 0.5 * (-2.0 * t).exp()).collect();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = amp;
            for j in 0..i {
                let mut s = 0.0;
                for (dim, inv) in inv_2l2.iter().enumerate() {
                    s += self.dist2[dim][(i, j)] * inv;
                }
                let v = amp * (-s).exp();
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        let mut c = k.clone();
        for i in 0..n {
            c[(i, i)] += self.noise;
        }
        let Some(chol) = Cholesky::new(c) else {
            grad.fill(0.0);
            return 1e15;
        };
        let y = self.dataset.y();
        let alpha = chol.solve(y);
        let log_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum();
        let neg = 0.5 * y.dot(&alpha) + log_det + 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

        // grad_m(-MLL) = -1/2 tr((alpha alpha^T - C^{-1}) dC/dtheta_m)
        let cinv = chol.inverse();
        for dim in 0..d {
            let mut acc = 0.0;
            let inv_l2 = (-2.0 * theta[dim]).exp();
            for i in 0..n {
                for j in 0..n {
                    let g = alpha[i] * alpha[j] - cinv[(i, j)];
                    acc += g * k[(i, j)] * self.dist2[dim][(i, j)] * inv_l2;
                }
            }
            grad[dim] = -0.5 * acc;
        }
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let g = alpha[i] * alpha[j] - cinv[(i, j)];
                acc += g * k[(i, j)];
            }
        }
        grad[d] = -0.5 * acc;
        neg
    }
}

/// Maximizes the log marginal likelihood over ARD lengthscales and
/// amplitude with the noise variance held fixed, via 8 multi-starts on a
/// scrambled low-discrepancy grid in log-parameter space. Falls back to
/// `l_i = 0.5, amplitude = 1` if every start fails.
pub fn fit_hyperparameters(
    dataset: &Dataset,
    fixed_noise: f64,
    rng: &mut impl rand::Rng,
) -> Result<SEKernelParams> {
    if dataset.n() < 2 {
        return Err(Error::InvalidParam(
            "hyperparameter fitting needs at least two observations".into(),
        ));
    }
    let d = dataset.dim();
    let problem = MllProblem::new(dataset, fixed_noise);
    let obj = GradFn {
        dim: d + 1,
        func: |theta: &[f64], grad: &mut [f64]| problem.neg_mll(theta, grad),
    };
    let mut lo = vec![LOG_L_BOUNDS.0; d + 1];
    let mut hi = vec![LOG_L_BOUNDS.1; d + 1];
    lo[d] = LOG_AMP_BOUNDS.0;
    hi[d] = LOG_AMP_BOUNDS.1;
    let bounds: Vec<(f64, f64)> = lo.iter().zip(&hi).map(|(&l, &h)| (l, h)).collect();
    let mut halton = ScrambledHalton::new(d + 1, rng);
    let opts = boxmin::Options {
        max_iters: 60,
        pg_tol: 1e-6,
        ..boxmin::Options::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..HYPER_STARTS {
        let start = halton.next_in(&bounds);
        if let Ok(out) = boxmin::local_minimize(&obj, &start, &lo, &hi, &opts) {
            if out.value.is_finite() && best.as_ref().is_none_or(|(v, _)| out.value < *v) {
                best = Some((out.value, out.x));
            }
        }
    }
    match best {
        Some((_, theta)) => SEKernelParams::new(
            theta[..d].iter().map(|t| t.exp()).collect(),
            theta[d].exp(),
            fixed_noise,
        ),
        None => {
            log::warn!("all hyperparameter starts failed; falling back to l = 0.5, amplitude = 1");
            SEKernelParams::new(vec![0.5; d], 1.0, fixed_noise)
        }
    }
}
