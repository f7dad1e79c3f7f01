//! Differentiable prior and posterior sample paths.
//!
//! A prior sample is a separable product of univariate eigenfunction
//! expansions, `f(x) = sigma_f * prod_i f_i(x_i)` with
//! `f_i(x_i) = sum_k w_{i,k} sqrt(lambda_{i,k}) phi_{i,k}(x_i)` and
//! i.i.d. standard-normal weights. Conditioning on data applies the
//! pathwise update
//!
//! ```text
//! f~(x) = f(x) + sum_j v_j k(x, x^j),   C v = y - f(X) - eps,
//! ```
//!
//! which leaves the fast-varying separable part untouched and adds a
//! smoother correction with limited effect away from the data.

use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::boxmin::Objective;
use crate::error::{Error, Result};
use crate::gp::GPPosterior;
use crate::kernel::{se_value, se_value_grad_acc};
use crate::spectral::SpectralBasis;

/// A separable, differentiable prior sample path. Immutable; evaluation
/// is pure and safe to call concurrently.
#[derive(Clone, Debug)]
pub struct PriorSample {
    basis: Arc<SpectralBasis>,
    /// Raw standard-normal weights per dimension.
    weights: Vec<Vec<f64>>,
    /// `w_{i,k} sqrt(lambda_{i,k})`, the coefficients actually summed.
    coeffs: Vec<Vec<f64>>,
    sigma_f: f64,
}

impl PriorSample {
    /// Draws i.i.d. standard-normal weights for every basis term.
    pub fn draw(basis: Arc<SpectralBasis>, rng: &mut impl Rng) -> PriorSample {
        let weights: Vec<Vec<f64>> = basis
            .dims
            .iter()
            .map(|d| (0..d.len()).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        Self::from_weights(basis, weights).expect("weights sized from the basis")
    }

    /// Builds a sample from explicit weights (test hook).
    pub fn from_weights(basis: Arc<SpectralBasis>, weights: Vec<Vec<f64>>) -> Result<PriorSample> {
        if weights.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: weights.len(),
            });
        }
        for (d, w) in basis.dims.iter().zip(&weights) {
            if w.len() != d.len() {
                return Err(Error::DimensionMismatch {
                    expected: d.len(),
                    got: w.len(),
                });
            }
        }
        let coeffs = basis
            .dims
            .iter()
            .zip(&weights)
            .map(|(d, w)| {
                w.iter()
                    .zip(&d.sqrt_eigenvalues)
                    .map(|(&wk, &sl)| wk * sl)
                    .collect()
            })
            .collect();
        let sigma_f = basis.params.sigma_f();
        Ok(PriorSample {
            basis,
            weights,
            coeffs,
            sigma_f,
        })
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn sigma_f(&self) -> f64 {
        self.sigma_f
    }

    /// Unit-amplitude univariate factor `f_i(x)`.
    pub fn univariate_eval(&self, dim: usize, x: f64) -> f64 {
        let db = &self.basis.dims[dim];
        let (s0, _, _) = db.weighted_chi_sums(x, &self.coeffs[dim]);
        db.assemble_derivs(x, (s0, 0.0, 0.0)).0
    }

    /// `f_i'(x)`.
    pub fn univariate_deriv(&self, dim: usize, x: f64) -> f64 {
        self.univariate_all(dim, x).1
    }

    /// `f_i''(x)`.
    pub fn univariate_second_deriv(&self, dim: usize, x: f64) -> f64 {
        self.univariate_all(dim, x).2
    }

    /// `(f_i, f_i', f_i'')` in one recurrence pass.
    pub fn univariate_all(&self, dim: usize, x: f64) -> (f64, f64, f64) {
        let db = &self.basis.dims[dim];
        let sums = db.weighted_chi_sums(x, &self.coeffs[dim]);
        db.assemble_derivs(x, sums)
    }

    /// `f(x) = sigma_f * prod_i f_i(x_i)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let mut prod = self.sigma_f;
        for (i, &xi) in x.iter().enumerate() {
            prod *= self.univariate_eval(i, xi);
        }
        prod
    }

    /// Value and gradient via the product rule:
    /// `df/dx_i = sigma_f * f_i'(x_i) * prod_{j != i} f_j(x_j)`.
    pub fn eval_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        debug_assert_eq!(grad.len(), d);
        let mut vals = Vec::with_capacity(d);
        let mut ders = Vec::with_capacity(d);
        for (i, &xi) in x.iter().enumerate() {
            let (f, df, _) = self.univariate_all(i, xi);
            vals.push(f);
            ders.push(df);
        }
        // prefix[i] = prod_{j < i} f_j, suffix[i] = prod_{j > i} f_j
        let mut prefix = 1.0;
        let mut suffix = vec![1.0; d];
        for i in (0..d.saturating_sub(1)).rev() {
            suffix[i] = suffix[i + 1] * vals[i + 1];
        }
        let mut value = self.sigma_f;
        for i in 0..d {
            grad[i] = self.sigma_f * prefix * ders[i] * suffix[i];
            value *= vals[i];
            prefix *= vals[i];
        }
        value
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.eval_grad(x, &mut g);
        g
    }
}

impl Objective for PriorSample {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval_grad(x, grad)
    }
}

/// A posterior sample path: prior sample plus a weighted sum of kernel
/// slices centered at the data points.
#[derive(Clone, Debug)]
pub struct PosteriorSample {
    prior: PriorSample,
    gp: Arc<GPPosterior>,
    /// `v = C^{-1}(y - f(X) - eps)`.
    canonical_weights: DVector<f64>,
    noise_draw: DVector<f64>,
}

/// Applies the pathwise update to `prior` given the fitted `gp`.
///
/// The observation-noise vector `eps` is drawn once here, not per
/// evaluation, so the sample path is a fixed function. Errors if the
/// prior and GP disagree on kernel parameters.
pub fn condition(
    prior: PriorSample,
    gp: Arc<GPPosterior>,
    rng: &mut impl Rng,
) -> Result<PosteriorSample> {
    let var = gp.params().noise_variance;
    condition_with_noise_variance(prior, gp, var, rng)
}

/// [`condition`] with the noise vector drawn at an explicit variance.
///
/// The BO loop passes the simulator's observation-noise variance here
/// (effectively zero for noiseless benchmarks) while the model's
/// `noise_variance` keeps acting as jitter in `C`; posterior samples then
/// interpolate noiseless observations tightly.
pub fn condition_with_noise_variance(
    prior: PriorSample,
    gp: Arc<GPPosterior>,
    noise_variance: f64,
    rng: &mut impl Rng,
) -> Result<PosteriorSample> {
    let n = gp.dataset().n();
    let sigma = noise_variance.max(0.0).sqrt();
    let noise_draw = DVector::from_iterator(
        n,
        (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)),
    );
    condition_with_noise(prior, gp, noise_draw)
}

/// [`condition`] with an explicit noise vector (test hook).
pub fn condition_with_noise(
    prior: PriorSample,
    gp: Arc<GPPosterior>,
    noise_draw: DVector<f64>,
) -> Result<PosteriorSample> {
    if prior.basis.params != *gp.params() {
        return Err(Error::InvalidParam(
            "prior sample and GP posterior use different kernel parameters".into(),
        ));
    }
    if noise_draw.len() != gp.dataset().n() {
        return Err(Error::DimensionMismatch {
            expected: gp.dataset().n(),
            got: noise_draw.len(),
        });
    }
    let residual = DVector::from_iterator(
        gp.dataset().n(),
        gp.dataset()
            .x()
            .iter()
            .enumerate()
            .map(|(j, row)| gp.dataset().y()[j] - prior.eval(row) - noise_draw[j]),
    );
    let canonical_weights = gp.solve(&residual);
    Ok(PosteriorSample {
        prior,
        gp,
        canonical_weights,
        noise_draw,
    })
}

impl PosteriorSample {
    pub fn prior(&self) -> &PriorSample {
        &self.prior
    }

    pub fn gp(&self) -> &Arc<GPPosterior> {
        &self.gp
    }

    pub fn canonical_weights(&self) -> &DVector<f64> {
        &self.canonical_weights
    }

    pub fn noise_draw(&self) -> &DVector<f64> {
        &self.noise_draw
    }

    /// Test hook: forces the data adjustment to zero.
    pub fn zero_adjustment(prior: PriorSample, gp: Arc<GPPosterior>) -> PosteriorSample {
        let n = gp.dataset().n();
        PosteriorSample {
            prior,
            gp,
            canonical_weights: DVector::zeros(n),
            noise_draw: DVector::zeros(n),
        }
    }

    /// `f~(x) = f(x) + sum_j v_j k(x, x^j)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let params = self.gp.params();
        let mut out = self.prior.eval(x);
        for (j, row) in self.gp.dataset().x().iter().enumerate() {
            out += self.canonical_weights[j] * se_value(params, x, row);
        }
        out
    }

    pub fn eval_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let params = self.gp.params();
        let mut out = self.prior.eval_grad(x, grad);
        for (j, row) in self.gp.dataset().x().iter().enumerate() {
            out += self.canonical_weights[j]
                * se_value_grad_acc(params, x, row, self.canonical_weights[j], grad);
        }
        out
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.prior.dim()];
        self.eval_grad(x, &mut g);
        g
    }
}

impl Objective for PosteriorSample {
    fn dim(&self) -> usize {
        self.prior.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval_grad(x, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{fit_posterior, Dataset};
    use crate::kernel::SEKernelParams;
    use crate::rng::{stream, StreamRole};
    use crate::spectral::build_basis_uniform;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn basis_1d(l: f64, amplitude: f64) -> Arc<SpectralBasis> {
        let params = SEKernelParams::isotropic(1, l, amplitude, 1e-6).unwrap();
        Arc::new(build_basis_uniform(&params, 1.0, 1e-16).unwrap())
    }

    fn basis_2d(l: f64) -> Arc<SpectralBasis> {
        let params = SEKernelParams::isotropic(2, l, 1.0, 1e-6).unwrap();
        Arc::new(build_basis_uniform(&params, 1.0, 1e-16).unwrap())
    }

    #[test]
    fn zero_weights_give_zero_function() {
        let basis = basis_2d(0.5);
        let weights = vec![vec![0.0; basis.dims[0].len()], vec![0.0; basis.dims[1].len()]];
        let sample = PriorSample::from_weights(basis, weights).unwrap();
        assert_eq!(sample.eval(&[0.3, -0.7]), 0.0);
        assert_eq!(sample.grad(&[0.3, -0.7]), vec![0.0, 0.0]);
    }

    #[test]
    fn single_term_sample_is_scaled_eigenfunction() {
        let basis = basis_1d(1.0, 4.0); // sigma_f = 2
        let n = basis.dims[0].len();
        let mut weights = vec![vec![0.0; n]];
        weights[0][0] = 1.0;
        let sample = PriorSample::from_weights(basis.clone(), weights).unwrap();
        for &x in &[-0.8, 0.0, 0.5] {
            let expect = 2.0
                * basis.dims[0].sqrt_eigenvalues[0]
                * crate::spectral::eigenfunction(&basis, 0, 0, x).unwrap();
            assert_relative_eq!(sample.eval(&[x]), expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn same_seed_reproduces_bit_for_bit() {
        let basis = basis_2d(0.4);
        let a = PriorSample::draw(basis.clone(), &mut stream(9, 2, StreamRole::PriorWeights));
        let b = PriorSample::draw(basis, &mut stream(9, 2, StreamRole::PriorWeights));
        assert_eq!(a.weights(), b.weights());
        let x = [0.123, -0.456];
        assert_eq!(a.eval(&x).to_bits(), b.eval(&x).to_bits());
    }

    #[test]
    fn prior_variance_matches_kernel_diagonal() {
        let basis = basis_2d(0.5);
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        let draws = 4000;
        for i in 0..draws {
            let s = PriorSample::draw(basis.clone(), &mut stream(101, i, StreamRole::PriorWeights));
            let v = s.eval(&[0.0, 0.0]);
            acc += v;
            acc2 += v * v;
        }
        let mean = acc / draws as f64;
        let var = acc2 / draws as f64 - mean * mean;
        assert!(
            (0.9..=1.1).contains(&var),
            "empirical variance {var} outside kernel diagonal band"
        );
    }

    #[test]
    fn separability_product_identity() {
        let basis = basis_2d(0.3);
        let sample = PriorSample::draw(basis, &mut stream(5, 0, StreamRole::PriorWeights));
        for &x in &[[-0.9, 0.2], [0.0, 0.0], [0.7, -0.6]] {
            let product = sample.sigma_f()
                * sample.univariate_eval(0, x[0])
                * sample.univariate_eval(1, x[1]);
            assert_relative_eq!(sample.eval(&x), product, max_relative = 1e-12);
        }
    }

    #[test]
    fn constructed_product_value() {
        // Two single-term factors with chosen weights: f = sigma_f * f1 * f2.
        let basis = basis_2d(0.5);
        let n0 = basis.dims[0].len();
        let n1 = basis.dims[1].len();
        let mut weights = vec![vec![0.0; n0], vec![0.0; n1]];
        weights[0][0] = 2.0;
        weights[1][1] = -0.5;
        let sample = PriorSample::from_weights(basis, weights).unwrap();
        let x = [0.3, -0.4];
        let f1 = sample.univariate_eval(0, x[0]);
        let f2 = sample.univariate_eval(1, x[1]);
        assert_relative_eq!(sample.eval(&x), f1 * f2, max_relative = 1e-13);
    }

    #[test]
    fn prior_gradient_matches_finite_differences() {
        let basis = basis_2d(0.4);
        let sample = PriorSample::draw(basis, &mut stream(7, 1, StreamRole::PriorWeights));
        let mut rng = stream(7, 2, StreamRole::RandomStarts);
        let h = 1e-6;
        for _ in 0..20 {
            let x = [rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)];
            let g = sample.grad(&x);
            for i in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fd = (sample.eval(&xp) - sample.eval(&xm)) / (2.0 * h);
                assert!(
                    (g[i] - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                    "grad[{i}] {} vs fd {fd}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn zero_factor_annihilates_other_partials() {
        let basis = basis_2d(0.5);
        let n0 = basis.dims[0].len();
        let n1 = basis.dims[1].len();
        let mut weights = vec![vec![0.0; n0], vec![0.0; n1]];
        // f_1 has only the odd phi_1 term, so f_1(0) = 0.
        weights[0][1] = 1.3;
        weights[1][0] = 0.8;
        let sample = PriorSample::from_weights(basis, weights).unwrap();
        let g = sample.grad(&[0.0, 0.2]);
        assert_eq!(g[1], 0.0, "df/dx_2 must vanish where f_1 = 0");
        assert!(g[0] != 0.0);
    }

    fn small_gp(seed: u64, n: usize) -> (Arc<GPPosterior>, Arc<SpectralBasis>) {
        let mut rng = stream(seed, 0, StreamRole::RandomStarts);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| (3.0 * r[0]).sin() * (2.0 * r[1]).cos()).collect();
        let params = SEKernelParams::isotropic(2, 0.5, 1.0, 1e-6).unwrap();
        let gp = Arc::new(fit_posterior(Dataset::from_normalized(x, y).unwrap(), params.clone()).unwrap());
        let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).unwrap());
        (gp, basis)
    }

    #[test]
    fn zero_prior_zero_noise_reduces_to_posterior_mean() {
        let (gp, basis) = small_gp(13, 10);
        let zero = PriorSample::from_weights(
            basis.clone(),
            vec![vec![0.0; basis.dims[0].len()], vec![0.0; basis.dims[1].len()]],
        )
        .unwrap();
        let ps = condition_with_noise(zero, gp.clone(), DVector::zeros(10)).unwrap();
        let mut rng = stream(13, 2, StreamRole::RandomStarts);
        for _ in 0..10 {
            let q = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            assert_relative_eq!(ps.eval(&q), gp.posterior_mean(&q), epsilon = 1e-10);
        }
    }

    #[test]
    fn posterior_interpolates_data() {
        // Noiseless observations: eps drawn at the simulator's 1e-12
        // variance, model noise 1e-6 acting as jitter.
        let (gp, basis) = small_gp(17, 12);
        for i in 0..50 {
            let prior = PriorSample::draw(basis.clone(), &mut stream(17, 10 + i, StreamRole::PriorWeights));
            let ps = condition_with_noise_variance(
                prior,
                gp.clone(),
                1e-12,
                &mut stream(17, 10 + i, StreamRole::ConditionNoise),
            )
            .unwrap();
            for (j, row) in gp.dataset().x().iter().enumerate() {
                let err = (ps.eval(row) - gp.dataset().y()[j]).abs();
                assert!(err <= 1e-3, "draw {i}: interpolation error {err}");
            }
        }
    }

    #[test]
    fn zero_adjustment_equals_prior() {
        let (gp, basis) = small_gp(19, 8);
        let prior = PriorSample::draw(basis, &mut stream(19, 1, StreamRole::PriorWeights));
        let ps = PosteriorSample::zero_adjustment(prior.clone(), gp);
        let mut rng = stream(19, 2, StreamRole::RandomStarts);
        for _ in 0..10 {
            let q = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            assert_eq!(ps.eval(&q), prior.eval(&q));
        }
    }

    #[test]
    fn posterior_gradient_matches_finite_differences() {
        let (gp, basis) = small_gp(23, 9);
        let prior = PriorSample::draw(basis, &mut stream(23, 1, StreamRole::PriorWeights));
        let ps = condition(prior, gp, &mut stream(23, 1, StreamRole::ConditionNoise)).unwrap();
        let mut rng = stream(23, 2, StreamRole::RandomStarts);
        let h = 1e-6;
        for _ in 0..20 {
            let x = [rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)];
            let g = ps.grad(&x);
            for i in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fd = (ps.eval(&xp) - ps.eval(&xm)) / (2.0 * h);
                assert!(
                    (g[i] - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                    "grad[{i}] {} vs fd {fd}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn far_from_data_adjustment_vanishes() {
        // Data crowded near the lower corner; query at the opposite corner
        // with a short lengthscale so every kernel slice is negligible.
        let params = SEKernelParams::isotropic(2, 0.05, 1.0, 1e-6).unwrap();
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![-1.0 + 0.01 * i as f64, -1.0]).collect();
        let y = vec![0.3; 5];
        let gp = Arc::new(fit_posterior(Dataset::from_normalized(x, y).unwrap(), params.clone()).unwrap());
        let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).unwrap());
        let prior = PriorSample::draw(basis, &mut stream(29, 1, StreamRole::PriorWeights));
        let ps = condition(prior.clone(), gp, &mut stream(29, 1, StreamRole::ConditionNoise)).unwrap();
        let q = [1.0, 1.0];
        let v1: f64 = ps.canonical_weights().iter().map(|v| v.abs()).sum();
        assert!((ps.eval(&q) - prior.eval(&q)).abs() <= 1e-10 * v1);
    }

    #[test]
    fn conditioning_rejects_mismatched_params() {
        let (gp, _) = small_gp(31, 6);
        let other = SEKernelParams::isotropic(2, 0.9, 1.0, 1e-6).unwrap();
        let basis = Arc::new(build_basis_uniform(&other, 1.0, 1e-16).unwrap());
        let prior = PriorSample::draw(basis, &mut stream(31, 1, StreamRole::PriorWeights));
        assert!(condition(prior, gp, &mut stream(31, 1, StreamRole::ConditionNoise)).is_err());
    }
}
