//! Conditions prior samples on data with the pathwise update and checks
//! interpolation plus agreement with the closed-form posterior mean.
//!
//! Run with: `cargo run --release --example posterior_sampling`

use std::sync::Arc;

use spectral_ts::gp::{fit_posterior, Dataset};
use spectral_ts::kernel::SEKernelParams;
use spectral_ts::rng::{stream, StreamRole};
use spectral_ts::sampling::{condition_with_noise_variance, PriorSample};
use spectral_ts::spectral::build_basis_uniform;

fn main() {
    // A small 1d dataset from a wavy function.
    let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![-0.9 + 0.25 * i as f64]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x[0]).sin()).collect();
    let dataset = Dataset::from_normalized(xs, ys).expect("dataset");

    let params = SEKernelParams::isotropic(1, 0.4, 1.0, 1e-6).expect("valid params");
    let gp = Arc::new(fit_posterior(dataset, params.clone()).expect("posterior"));
    let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).expect("basis"));

    let prior = PriorSample::draw(basis, &mut stream(0, 0, StreamRole::PriorWeights));
    let ps = condition_with_noise_variance(
        prior,
        gp.clone(),
        1e-12,
        &mut stream(0, 0, StreamRole::ConditionNoise),
    )
    .expect("conditioning");

    println!("interpolation at the data points:");
    for (j, row) in gp.dataset().x().iter().enumerate() {
        println!(
            "  x = {:+.3}   y = {:+.5}   sample = {:+.5}",
            row[0],
            gp.dataset().y()[j],
            ps.eval(row)
        );
    }

    println!("\nsample vs closed-form posterior mean between data points:");
    for i in 0..=8 {
        let x = [-1.0 + 0.25 * i as f64];
        println!(
            "  x = {:+.3}   mean = {:+.5}   sample = {:+.5}   sd = {:.5}",
            x[0],
            gp.posterior_mean(&x),
            ps.eval(&x),
            gp.posterior_var(&x).sqrt()
        );
    }

    // Analytic gradient against a central difference.
    let x = [0.37];
    let g = ps.grad(&x);
    let h = 1e-6;
    let fd = (ps.eval(&[x[0] + h]) - ps.eval(&[x[0] - h])) / (2.0 * h);
    println!("\ngradient at x = {:.2}: analytic {:+.6}, finite difference {fd:+.6}", x[0], g[0]);
}
