//! Affine-invariant ensemble sampling of a correlated Gaussian.

use learned_harmonic::{run_sampler, SamplerConfig};

fn main() -> learned_harmonic::Result<()> {
    let rho: f64 = 0.8;
    let log_density = |x: &[f64]| -0.5 * (x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]) / (1.0 - rho * rho);
    let cfg = SamplerConfig {
        n_walkers: 32,
        n_steps: 2000,
        burn_in: 500,
        init_center: vec![0.0, 0.0],
        init_radius: 0.5,
        seed: 7,
        ..SamplerConfig::default()
    };
    let out = run_sampler(log_density, &cfg)?;
    let rows = out.chains.to_rows();
    let n = rows.len() as f64;
    let mean = |k: usize| rows.iter().map(|r| r[k]).sum::<f64>() / n;
    let (m0, m1) = (mean(0), mean(1));
    let cov = rows.iter().map(|r| (r[0] - m0) * (r[1] - m1)).sum::<f64>() / n;
    println!("{} chains, {} samples, acceptance {:.3}", out.chains.n_chains(), rows.len(), out.acceptance_rate);
    println!("mean ({m0:.3}, {m1:.3}), covariance {cov:.3} (exact {rho})");
    Ok(())
}
