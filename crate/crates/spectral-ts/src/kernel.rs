//! Separable squared-exponential (SE) covariance function with ARD
//! lengthscales.

use crate::error::{Error, Result};

/// Hyperparameters of the SE kernel
/// `k(x, x') = amplitude * prod_i exp(-(x_i - x'_i)^2 / (2 l_i^2))`
/// plus the observation-noise variance of the GP model.
#[derive(Clone, Debug, PartialEq)]
pub struct SEKernelParams {
    /// Per-dimension lengthscales `l_i`, in input units.
    pub lengthscales: Vec<f64>,
    /// Output variance `sigma_f^2`.
    pub amplitude: f64,
    /// Observation-noise variance `sigma_n^2`.
    pub noise_variance: f64,
}

impl SEKernelParams {
    pub fn new(lengthscales: Vec<f64>, amplitude: f64, noise_variance: f64) -> Result<Self> {
        if lengthscales.is_empty() {
            return Err(Error::InvalidParam("empty lengthscale vector".into()));
        }
        for &l in &lengthscales {
            if l <= 0.0 || !l.is_finite() {
                return Err(Error::InvalidParam(format!("lengthscale {l} must be positive")));
            }
        }
        if amplitude <= 0.0 || !amplitude.is_finite() {
            return Err(Error::InvalidParam(format!("amplitude {amplitude} must be positive")));
        }
        if noise_variance <= 0.0 || !noise_variance.is_finite() {
            return Err(Error::InvalidParam(format!(
                "noise variance {noise_variance} must be positive"
            )));
        }
        Ok(SEKernelParams {
            lengthscales,
            amplitude,
            noise_variance,
        })
    }

    /// Same lengthscale `l` in every dimension.
    pub fn isotropic(dim: usize, l: f64, amplitude: f64, noise_variance: f64) -> Result<Self> {
        Self::new(vec![l; dim], amplitude, noise_variance)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// `sigma_f`, the amplitude on the sample-path scale.
    pub fn sigma_f(&self) -> f64 {
        self.amplitude.sqrt()
    }
}

/// `k(x, x')`. Errors on dimension mismatch with the params.
pub fn kernel_value(params: &SEKernelParams, x: &[f64], x2: &[f64]) -> Result<f64> {
    check_dims(params, x, x2)?;
    Ok(se_value(params, x, x2))
}

/// Gradient of `k(x, x')` with respect to `x`:
/// component `i` is `-(x_i - x'_i)/l_i^2 * k(x, x')`.
pub fn kernel_grad_x(params: &SEKernelParams, x: &[f64], x2: &[f64]) -> Result<Vec<f64>> {
    check_dims(params, x, x2)?;
    let k = se_value(params, x, x2);
    Ok(x.iter()
        .zip(x2)
        .zip(&params.lengthscales)
        .map(|((&a, &b), &l)| -(a - b) / (l * l) * k)
        .collect())
}

fn check_dims(params: &SEKernelParams, x: &[f64], x2: &[f64]) -> Result<()> {
    if x.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: x.len(),
        });
    }
    if x2.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: x2.len(),
        });
    }
    Ok(())
}

/// Unchecked kernel evaluation; callers validated dimensions up front.
#[inline]
pub(crate) fn se_value(params: &SEKernelParams, x: &[f64], x2: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        let d = (x[i] - x2[i]) / params.lengthscales[i];
        s += d * d;
    }
    params.amplitude * (-0.5 * s).exp()
}

/// Accumulates `coeff * grad_x k(x, x2)` into `out` and returns `k(x, x2)`.
#[inline]
pub(crate) fn se_value_grad_acc(
    params: &SEKernelParams,
    x: &[f64],
    x2: &[f64],
    coeff: f64,
    out: &mut [f64],
) -> f64 {
    let k = se_value(params, x, x2);
    for i in 0..x.len() {
        let l = params.lengthscales[i];
        out[i] += coeff * (-(x[i] - x2[i]) / (l * l) * k);
    }
    k
}
