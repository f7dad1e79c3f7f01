//! Enumerates the best local minima of a separable sample without
//! enumerating the full combination lattice.
//!
//! Run with: `cargo run --release --example critical_points`

use std::sync::Arc;

use spectral_ts::critical::{classify_combination, select_minima, Classification};
use spectral_ts::kernel::SEKernelParams;
use spectral_ts::rng::{stream, StreamRole};
use spectral_ts::rootfind::{CoordKind, CriticalPoint1d};
use spectral_ts::sampling::PriorSample;
use spectral_ts::spectral::build_basis_uniform;

fn main() {
    // Analytic warm-up: f(x, y) = (x^2 - 1)(y^2 - 1) on [-2, 2]^2.
    // Critical points of each factor: x = 0 plus the interval endpoints.
    let factor = vec![
        CriticalPoint1d { x: -2.0, f: 3.0, df: -4.0, d2f: 2.0, kind: CoordKind::LowerBound },
        CriticalPoint1d { x: 0.0, f: -1.0, df: 0.0, d2f: 2.0, kind: CoordKind::Interior },
        CriticalPoint1d { x: 2.0, f: 3.0, df: 4.0, d2f: 2.0, kind: CoordKind::UpperBound },
    ];
    let center = classify_combination(&[&factor[1], &factor[1]], 1.0);
    println!("(0, 0): {center:?} (f = 1)");
    assert_eq!(center, Classification::Maximum);
    let set = spectral_ts::critical::select_minima_from(vec![factor.clone(), factor], 1.0, 1000);
    println!("minima of (x^2-1)(y^2-1) on [-2, 2]^2:");
    for (p, f) in &set.minima {
        println!("  {p:?}  f = {f}");
    }

    // A seeded 2d prior sample.
    let params = SEKernelParams::isotropic(2, 0.3, 1.0, 1e-6).expect("valid params");
    let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).expect("basis"));
    let sample = PriorSample::draw(basis, &mut stream(7, 0, StreamRole::PriorWeights));
    let set = select_minima(&sample, 1000).expect("selection");
    let counts: Vec<usize> = set.per_dim.iter().map(|c| c.len()).collect();
    println!("\n2d prior sample (l = 0.3): univariate critical points per dim = {counts:?}");
    println!("selected {} local minima; the five deepest:", set.minima.len());
    for (p, f) in set.minima.iter().take(5) {
        println!("  x = ({:+.4}, {:+.4})   f = {:+.5}", p[0], p[1], f);
    }
}
