#![allow(dead_code)]

use learned_harmonic::experiment::fit_flow;
use learned_harmonic::{Chains, FlowPreset, RealNvpFlow, TrainingConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Exact draws from `x0 ~ N(1, 1/2)`, `x1 | x0 ~ N(x0², 1/200)`, which is the
/// Rosenbrock posterior up to the (negligible) prior box truncation.
pub fn banana_chains(n_chains: usize, per_chain: usize, seed: u64) -> Chains {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Normal::new(1.0, 0.5f64.sqrt()).unwrap();
    let e = Normal::new(0.0, (1.0f64 / 200.0).sqrt()).unwrap();
    let chains = (0..n_chains)
        .map(|_| {
            let mut s = Vec::with_capacity(2 * per_chain);
            let mut lp = Vec::with_capacity(per_chain);
            for _ in 0..per_chain {
                let x0: f64 = a.sample(&mut rng);
                let x1 = x0 * x0 + e.sample(&mut rng);
                s.extend([x0, x1]);
                lp.push(-(1.0 - x0).powi(2) - 100.0 * (x1 - x0 * x0).powi(2));
            }
            (s, lp)
        })
        .collect();
    Chains::from_flat(2, chains).unwrap()
}

/// Gaussian draws with the given per-coordinate standard deviations.
pub fn gaussian_chains(sd: &[f64], n_chains: usize, per_chain: usize, seed: u64) -> Chains {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chains = (0..n_chains)
        .map(|_| {
            let mut s = Vec::new();
            let mut lp = Vec::new();
            for _ in 0..per_chain {
                let mut q = 0.0;
                for &sd in sd {
                    let v = sd * Normal::new(0.0, 1.0).unwrap().sample(&mut rng);
                    q += (v / sd).powi(2);
                    s.push(v);
                }
                lp.push(-0.5 * q);
            }
            (s, lp)
        })
        .collect();
    Chains::from_flat(sd.len(), chains).unwrap()
}

/// A flow fitted to a small banana sample set.
pub fn trained_banana_flow(seed: u64) -> RealNvpFlow {
    let chains = banana_chains(10, 400, seed);
    let cfg = TrainingConfig { epochs: 40, seed, ..TrainingConfig::default() };
    fit_flow(&chains, &FlowPreset::default(), &cfg, seed).unwrap().0
}

/// A flow with every layer scaled and random output layers, so all
/// parameter paths are exercised.
pub fn random_flow(dim: usize, n_layers: usize, seed: u64) -> RealNvpFlow {
    let preset = FlowPreset {
        n_layers,
        n_scaled: n_layers,
        identity_init: false,
        standardize: false,
        ..FlowPreset::default()
    };
    RealNvpFlow::new(dim, &preset, seed).unwrap()
}

pub fn mean_var(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    learned_harmonic::stats::mean_var(&v)
}

/// `ln ∫∫ exp(f)` over `[x0, x1] × [y0, y1]` by composite Simpson with `n`
/// (even) intervals per axis. Independent of the library's quadrature.
pub fn simpson_log_2d(f: impl Fn(f64, f64) -> f64, x: (f64, f64), y: (f64, f64), n: usize) -> f64 {
    assert!(n % 2 == 0);
    let (hx, hy) = ((x.1 - x.0) / n as f64, (y.1 - y.0) / n as f64);
    let w = |i: usize| if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
    let mut values = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            values.push((w(i) * w(j), f(x.0 + i as f64 * hx, y.0 + j as f64 * hy)));
        }
    }
    let max = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|(w, v)| w * (v - max).exp()).sum();
    max + (sum * hx * hy / 9.0).ln()
}
