//! Seeded random universes for tests and demos.
//!
//! Correlations come from a two-factor model plus idiosyncratic noise,
//! normalized to a unit diagonal, so every matrix is positive definite.
//! Means and standard deviations fall in ranges typical of weekly equity
//! returns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::AssetUniverse;

const FACTORS: usize = 2;

pub fn random_universe(n: usize, seed: u64) -> AssetUniverse {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stddev: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.08)).collect();
    // riskier assets tend to pay more, with noise
    let mu: Vec<f64> = stddev.iter().map(|s| 0.1 * s + rng.random_range(-0.002..0.004)).collect();
    let loadings: Vec<f64> = (0..n * FACTORS)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            0.5 * z
        })
        .collect();
    let idio: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s: f64 = (0..FACTORS).map(|f| loadings[i * FACTORS + f] * loadings[j * FACTORS + f]).sum();
            if i == j {
                s += idio[i];
            }
            cov[i * n + j] = s;
        }
    }
    let mut corr = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            corr[i * n + j] = if i == j { 1.0 } else { cov[i * n + j] / (cov[i * n + i] * cov[j * n + j]).sqrt() };
        }
    }
    AssetUniverse::new(mu, stddev, corr).expect("factor-model correlations are valid")
}
