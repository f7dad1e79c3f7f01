//! Builds the truncated eigenbasis of the SE kernel and shows how well
//! the truncation reproduces the kernel.
//!
//! Run with: `cargo run --release --example spectral_basis`

use spectral_ts::kernel::SEKernelParams;
use spectral_ts::spectral::{build_basis_uniform, mercer_reconstruction_error};

fn main() {
    for l in [0.2, 0.5, 1.0] {
        let params = SEKernelParams::isotropic(1, l, 1.0, 1e-6).expect("valid params");
        let basis = build_basis_uniform(&params, 1.0, 1e-16).expect("basis");
        let dim = &basis.dims[0];
        println!(
            "l = {l}: a = {:.4}, b = {:.4}, c = {:.4}, A = {:.4}",
            dim.a, dim.b, dim.c, dim.big_a
        );
        println!(
            "  truncation N = {} (eigenvalue ratio b/A = {:.6})",
            dim.len(),
            dim.b / dim.big_a
        );
        println!(
            "  lambda_0 = {:.6e}, lambda_{} = {:.6e}",
            dim.eigenvalues[0],
            dim.len() - 1,
            dim.eigenvalues[dim.len() - 1]
        );
        let grid: Vec<Vec<f64>> = (0..21).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
        let err = mercer_reconstruction_error(&basis, &grid).expect("grid in domain");
        println!("  max |truncated Mercer - SE kernel| on 21-point grid = {err:.3e}");
    }
}
