//! Finds all roots of smooth functions on an interval with the
//! Chebyshev-proxy rootfinder, then all critical points of a prior-sample
//! factor.
//!
//! Run with: `cargo run --release --example global_rootfinding`

use std::sync::Arc;

use spectral_ts::kernel::SEKernelParams;
use spectral_ts::rng::{stream, StreamRole};
use spectral_ts::rootfind::{all_roots_of, critical_points_1d, ChebProxy};
use spectral_ts::sampling::PriorSample;
use spectral_ts::spectral::build_basis_uniform;

fn main() {
    // cos(5x) on [0, pi]: five roots at odd multiples of pi/10.
    let proxy = ChebProxy::build(&|x| (5.0 * x).cos(), 0.0, std::f64::consts::PI).expect("proxy");
    println!(
        "cos(5x) proxy: degree {}, tail bound {:.2e}",
        proxy.degree(),
        proxy.tail_bound()
    );
    println!("roots: {:?}", proxy.all_roots());

    // A fast oscillation.
    let roots = all_roots_of(&|x: f64| (40.0 * x).sin(), -1.0, 1.0).expect("roots");
    println!("\nsin(40x) on [-1, 1]: found {} roots", roots.len());

    // Critical points of one univariate factor of a GP prior sample.
    let params = SEKernelParams::isotropic(1, 0.25, 1.0, 1e-6).expect("valid params");
    let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).expect("basis"));
    let sample = PriorSample::draw(basis, &mut stream(2, 0, StreamRole::PriorWeights));
    let pts = critical_points_1d(&sample, 0).expect("critical points");
    println!("\ncritical points of a prior-sample factor (l = 0.25):");
    for p in &pts {
        println!(
            "  x = {:+.6}   f = {:+.4}   f' = {:+.1e}   f'' = {:+.4}   {:?}",
            p.x, p.f, p.df, p.d2f, p.kind
        );
    }
}
