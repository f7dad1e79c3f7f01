//! A short Bayesian-optimization run on the 2d Schwefel function with
//! the spectral Thompson-sampling acquisition.
//!
//! Run with: `cargo run --release --example bo_loop`

use spectral_ts::bench::{BenchObjective, TestFunction};
use spectral_ts::bo::{run_bo, BOConfig, InnerOptimizer, Method};

fn main() {
    let objective = BenchObjective::new(TestFunction::Schwefel, 2).expect("objective");
    let config = BOConfig::new(2, Method::SpectralTs, InnerOptimizer::Ours, 30, 0);
    let trace = run_bo(&objective, &config).expect("run");

    println!("iter  candidate                     y            y_min        log10 regret");
    for row in &trace.rows {
        println!(
            "{:>4}  ({:>+9.3}, {:>+9.3})       {:>10.4}   {:>10.4}   {:+.3}",
            row.iter, row.x[0], row.x[1], row.y, row.y_min, row.log10_regret
        );
    }
    let last = trace.rows.last().unwrap();
    println!(
        "\nbest value {:.6} after {} iterations ({:.2} s of inner-loop time)",
        last.y_min,
        last.iter,
        last.cum_time_s
    );
}
