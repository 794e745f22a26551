//! Shared synthetic-data helpers for the integration tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tplan_analyzer::{mu_ev, Dataset, PourbaixParams};

/// Standard normal draw via Box–Muller; two uniforms per variate keeps the
/// stream layout independent of rejection behavior.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// The generator used across the recovery tests.
pub fn theta_star() -> PourbaixParams<f64> {
    PourbaixParams::new(7.68, 10.92, -30.7, -450.0, 3.0)
}

/// `n` pH points evenly spaced over [lo, hi], potentials drawn from the
/// model with Gaussian noise of the generator's sigma.
pub fn synthetic(
    theta: &PourbaixParams<f64>,
    n: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..n)
        .map(|i| {
            let ph = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let ev = mu_ev(theta, ph) + theta.sigma_ev * gaussian(&mut rng);
            (ph, ev)
        })
        .collect();
    Dataset::new(pts).expect("synthetic data is finite")
}
