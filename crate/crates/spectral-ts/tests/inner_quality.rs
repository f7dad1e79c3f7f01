//! Start-set quality against oversized random-multistart oracles on
//! seed-fixed posterior samples.

use std::sync::Arc;

use rand::Rng;
use spectral_ts::baselines::random_multistart;
use spectral_ts::boxmin;
use spectral_ts::critical::select_minima;
use spectral_ts::gp::{fit_posterior, Dataset};
use spectral_ts::inner::{optimize_ts, StartSet};
use spectral_ts::kernel::SEKernelParams;
use spectral_ts::rng::{stream, StreamRole};
use spectral_ts::sampling::{condition_with_noise_variance, PriorSample};
use spectral_ts::spectral::build_basis_uniform;

/// Over 20 seed-fixed 2d posterior samples, the curated start set must
/// reach the 100x random-multistart oracle's value in at least 19 cases,
/// and beat an equal-size random start set in at least 16.
#[test]
fn curated_starts_match_heavy_oracle() {
    let mut data_rng = stream(555, 0, StreamRole::RandomStarts);
    let x: Vec<Vec<f64>> = (0..15)
        .map(|_| vec![data_rng.gen_range(-1.0..1.0), data_rng.gen_range(-1.0..1.0)])
        .collect();
    let y: Vec<f64> = x.iter().map(|r| (4.0 * r[0]).sin() + (3.0 * r[1]).cos()).collect();
    let params = SEKernelParams::isotropic(2, 0.3, 1.0, 1e-6).unwrap();
    let gp = Arc::new(fit_posterior(Dataset::from_normalized(x, y).unwrap(), params.clone()).unwrap());
    let basis = Arc::new(build_basis_uniform(&params, 1.0, 1e-16).unwrap());
    let opts = boxmin::Options::default();

    let mut oracle_hits = 0;
    let mut beats_random = 0;
    for seed in 0..20u64 {
        let prior = PriorSample::draw(basis.clone(), &mut stream(seed, 1, StreamRole::PriorWeights));
        let set = select_minima(&prior, 1000).unwrap();
        let ps = condition_with_noise_variance(
            prior,
            gp.clone(),
            1e-12,
            &mut stream(seed, 1, StreamRole::ConditionNoise),
        )
        .unwrap();
        let starts = StartSet {
            exploration: set.points(),
            exploitation: gp.dataset().x().to_vec(),
        };
        let n = starts.len();
        let ours = optimize_ts(&ps, &starts, &opts).unwrap();
        let equal = random_multistart(&ps, n, &opts, &mut stream(seed, 1, StreamRole::RandomStarts)).unwrap();
        let oracle =
            random_multistart(&ps, 100 * n, &opts, &mut stream(seed, 1, StreamRole::OracleStarts))
                .unwrap();
        if ours.value <= oracle.value + 1e-6 * (1.0 + oracle.value.abs()) {
            oracle_hits += 1;
        }
        if ours.value <= equal.value + 1e-9 {
            beats_random += 1;
        }
    }
    assert!(
        oracle_hits >= 19,
        "curated starts matched the 100x oracle in only {oracle_hits}/20 seeds"
    );
    assert!(
        beats_random >= 16,
        "curated starts matched an equal random set in only {beats_random}/20 seeds"
    );
    println!(
        "start-set quality: oracle matched {oracle_hits}/20, equal-size random matched-or-beaten {beats_random}/20"
    );
}
