//! Draws separable prior sample paths and checks their empirical second
//! moment against the kernel diagonal.
//!
//! Run with: `cargo run --release --example prior_sampling`

use std::sync::Arc;

use spectral_ts::kernel::SEKernelParams;
use spectral_ts::rng::{stream, StreamRole};
use spectral_ts::sampling::PriorSample;
use spectral_ts::spectral::build_basis_uniform;

fn main() {
    let params = SEKernelParams::isotropic(2, 0.4, 1.0, 1e-6).expect("valid params");
    let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).expect("basis"));
    println!("truncation sizes: {:?}", basis.truncation_sizes());

    // One sample along a diagonal line through the domain.
    let sample = PriorSample::draw(basis.clone(), &mut stream(0, 0, StreamRole::PriorWeights));
    println!("\n f(t, t) along the diagonal:");
    for i in 0..=10 {
        let t = -1.0 + 0.2 * i as f64;
        println!("  t = {t:+.1}   f = {:+.4}", sample.eval(&[t, t]));
    }

    // Monte-Carlo second moment at the origin vs k(0, 0) = 1.
    let draws = 4000;
    let mut acc = 0.0;
    let mut acc2 = 0.0;
    for i in 0..draws {
        let s = PriorSample::draw(basis.clone(), &mut stream(1, i, StreamRole::PriorWeights));
        let v = s.eval(&[0.0, 0.0]);
        acc += v;
        acc2 += v * v;
    }
    let mean = acc / draws as f64;
    let var = acc2 / draws as f64 - mean * mean;
    println!("\nover {draws} draws at the origin: mean = {mean:+.4}, variance = {var:.4} (kernel diagonal 1.0)");
}
